#include "mvgcca/config_json.hpp"
#include "mvgcca/csv.hpp"
#include "mvgcca/experiment.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

using namespace mvgcca;

namespace {

void add_synth_options(CLI::App* app, SynthConfig& c) {
  app->add_option("--class-probabilities", c.class_probabilities)->delimiter(',');
  app->add_option("--views", c.views);
  app->add_option("--private-dims", c.private_dims)->delimiter(',');
  app->add_option("--view-dims", c.view_dims)->delimiter(',');
  app->add_option("--generator-hidden-width", c.generator_hidden_width);
  app->add_option("--generator-hidden-layers", c.generator_hidden_layers);
  app->add_option("--generator-activate-last-hidden", c.generator_activate_last_hidden);
  app->add_option("--power-ratio-db", c.power_ratio_db, "common/private power ratio; inf disables private factors");
  app->add_option("--centered-common-power", c.centered_common_power);
  app->add_option("--private-mean-scale", c.private_mean_scale);
  app->add_option("--covariance-jitter", c.covariance_jitter);
  app->add_option("--standardize", c.standardize);
  app->add_option("--train-size", c.train_size);
  app->add_option("--validation-size", c.validation_size);
  app->add_option("--test-size", c.test_size);
}

void add_train_options(CLI::App* app, TrainConfig& c, std::string& validation_target,
                       std::string& init_scheme) {
  app->add_option("--outer-iterations", c.outer_iterations);
  app->add_option("--learning-rate", c.learning_rate);
  app->add_option("--weight-decay", c.weight_decay);
  app->add_option("--batch-size", c.batch_size);
  app->add_option("--latent-dim", c.latent_dim);
  app->add_option("--hidden-width", c.hidden_width);
  app->add_option("--hidden-layers", c.hidden_layers);
  app->add_option("--activate-last-hidden", c.activate_last_hidden);
  app->add_option("--normalize-r", c.normalize_r);
  app->add_option("--init", init_scheme)
      ->check(CLI::IsMember({"fan-in-uniform", "he-uniform", "standard-normal"}));
  app->add_option("--validation-target", validation_target)
      ->check(CLI::IsMember({"split-local", "shared"}));
}

void add_eval_options(CLI::App* app, EvalOptions& e) {
  app->add_option("--kmeans-restarts", e.kmeans_restarts);
  app->add_option("--eval-seed", e.eval_seed);
  app->add_option("--svm-c", e.svm_c);
  app->add_option("--svm-epochs", e.svm_epochs);
}

std::string default_target_name() { return to_string(TrainConfig{}.validation_target); }

int run_generate(SynthConfig config, const std::string& output_dir) {
  const SyntheticSplits splits = generate(config);
  write_dataset(splits, config, output_dir);
  std::cout << "wrote dataset to " << output_dir << '\n';
  return 0;
}

int run_train(const std::string& data_dir, TrainConfig config, const std::string& output_dir) {
  const SyntheticSplits data = read_dataset(data_dir);
  std::filesystem::create_directories(output_dir);
  std::ofstream log(output_dir + "/run_log.csv");
  if (!log) throw std::runtime_error("cannot write " + output_dir + "/run_log.csv");
  write_run_log_header(log);
  const TrainedModel model =
      train(data.train.views, data.validation.views, config,
            [&](const IterationRecord& r) { write_run_log_row(log, r); });
  if (model.history.size() == 1 && !is_deep(model.method)) write_run_log_row(log, model.history[0]);
  save_model(model, output_dir);
  nlohmann::json j = config;
  std::ofstream(output_dir + "/train_config.json") << j.dump(2) << '\n';
  std::cout << "best validation objective " << format_fixed(model.best_validation_objective)
            << " at iteration " << model.best_iteration << '\n';
  return 0;
}

int run_evaluate(const std::string& model_dir, const std::string& data_dir, std::uint64_t seed,
                 const EvalOptions& eval, const std::string& output_dir) {
  SynthConfig synth;
  const SyntheticSplits data = read_dataset(data_dir, &synth);
  const TrainedModel model = load_model(model_dir);
  MetricsRecord record = evaluate_model(model, data, synth.classes(), eval);
  record.seed = seed;
  std::filesystem::create_directories(output_dir);
  {
    std::ofstream out(output_dir + "/metrics.csv");
    write_records_csv(out, {record});
  }
  export_embeddings(model, data.train, output_dir + "/embeddings_train.csv");
  export_embeddings(model, data.test, output_dir + "/embeddings_test.csv");
  write_records_csv(std::cout, {record});
  if (record.ari_floored) std::cerr << "note: raw ARI was negative and is reported as 0\n";
  if (record.nmi_degenerate) std::cerr << "note: test labels are degenerate; NMI set to 0\n";
  return 0;
}

int run_sweep(ExperimentConfig config, const std::string& output_dir) {
  const ExperimentResult result =
      run_experiment(config, output_dir, [](const Cell& cell, const std::string& status) {
        std::cerr << to_string(cell.method) << " lambda="
                  << (cell.lambda ? format_fixed(*cell.lambda, 2) : std::string("-"))
                  << " seed=" << cell.seed << ": " << status << '\n';
      });
  std::cout << result.records.size() << " cells succeeded, " << result.failures.size()
            << " failed; results in " << output_dir << '\n';
  return result.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiview GCCA experiments on synthetic data"};
  app.require_subcommand(1);

  SynthConfig synth;
  TrainConfig train_config;
  EvalOptions eval;
  std::string output_dir, data_dir, model_dir, manifest, target_name = default_target_name();
  std::string method_name, init_name = to_string(TrainConfig{}.init);
  std::uint64_t seed = 0;
  std::vector<std::string> method_names;

  auto* gen = app.add_subcommand("generate", "generate a synthetic multiview dataset");
  add_synth_options(gen, synth);
  gen->add_option("--seed", synth.seed)->required();
  gen->add_option("--output-dir", output_dir)->required();

  auto* tr = app.add_subcommand("train", "train one model on a generated dataset");
  tr->add_option("--data-dir", data_dir)->required();
  tr->add_option("--method", method_name)
      ->required()
      ->check(CLI::IsMember({"linear-cca", "maxvar", "dgcca", "dccae", "proposed"}));
  tr->add_option("--lambda", train_config.lambda, "trade-off weight for dccae and proposed");
  tr->add_option("--seed", train_config.seed)->required();
  tr->add_option("--output-dir", output_dir)->required();
  add_train_options(tr, train_config, target_name, init_name);

  auto* ev = app.add_subcommand("evaluate", "score a trained model and export embeddings");
  ev->add_option("--model-dir", model_dir)->required();
  ev->add_option("--data-dir", data_dir)->required();
  ev->add_option("--seed", seed, "training seed recorded in the metrics row")->required();
  ev->add_option("--output-dir", output_dir)->required();
  add_eval_options(ev, eval);

  ExperimentConfig sweep_config;
  auto* sw = app.add_subcommand("sweep", "run methods x lambdas x seeds and aggregate");
  sw->add_option("--manifest", manifest, "rerun a previous sweep from its manifest.json");
  sw->add_option("--output-dir", output_dir)->required();
  sw->add_option("--jobs", sweep_config.jobs)->check(CLI::PositiveNumber);
  auto* methods_opt = sw->add_option("--methods", method_names)->delimiter(',');
  auto* lambdas_opt = sw->add_option("--lambdas", sweep_config.lambdas)->delimiter(',');
  auto* seeds_opt = sw->add_option("--seeds-per-cell", sweep_config.seeds_per_cell);
  auto* base_opt = sw->add_option("--base-seed", sweep_config.base_seed);
  auto* data_seed_opt = sw->add_option("--data-seed", synth.seed);
  for (auto* opt : {methods_opt, lambdas_opt, seeds_opt, base_opt, data_seed_opt})
    opt->excludes(sw->get_option("--manifest"));
  add_synth_options(sw, synth);
  add_train_options(sw, train_config, target_name, init_name);
  add_eval_options(sw, eval);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    train_config.validation_target = parse_validation_target(target_name);
    train_config.init = parse_init_scheme(init_name);
    if (*gen) return run_generate(synth, output_dir);
    if (*tr) {
      train_config.method = parse_method(method_name);
      return run_train(data_dir, train_config, output_dir);
    }
    if (*ev) return run_evaluate(model_dir, data_dir, seed, eval, output_dir);
    if (*sw) {
      const int jobs = sweep_config.jobs;
      if (!manifest.empty()) {
        sweep_config = read_manifest(manifest);
      } else {
        sweep_config.synth = synth;
        sweep_config.train = train_config;
        sweep_config.eval = eval;
        if (!method_names.empty()) {
          sweep_config.methods.clear();
          for (const auto& name : method_names) sweep_config.methods.push_back(parse_method(name));
        }
      }
      sweep_config.jobs = jobs;
      return run_sweep(sweep_config, output_dir);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
