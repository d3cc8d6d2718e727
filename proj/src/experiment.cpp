#include "mvgcca/experiment.hpp"

#include "mvgcca/config_json.hpp"
#include "mvgcca/csv.hpp"
#include "mvgcca/linear_cca.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace mvgcca {
namespace {

double round6(double v) { return std::stod(format_fixed(v, 6)); }

std::string lambda_field(const std::optional<double>& lambda) {
  return lambda ? format_fixed(*lambda, 6) : "-";
}

auto record_key(const MetricsRecord& r) {
  return std::make_tuple(static_cast<int>(r.method), r.lambda ? *r.lambda : -1.0, r.seed);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

double metric_value(const MetricsRecord& r, int metric) {
  switch (metric) {
    case 0: return r.acc;
    case 1: return r.nmi;
    case 2: return r.ari;
    case 3: return r.cla_acc;
    default: return r.corr_coef;
  }
}

nlohmann::json eval_to_json(const EvalOptions& e) {
  return {{"kmeans_restarts", e.kmeans_restarts},
          {"eval_seed", e.eval_seed},
          {"svm_c", e.svm_c},
          {"svm_epochs", e.svm_epochs}};
}

EvalOptions eval_from_json(const nlohmann::json& j) {
  EvalOptions e;
  j.at("kmeans_restarts").get_to(e.kmeans_restarts);
  j.at("eval_seed").get_to(e.eval_seed);
  j.at("svm_c").get_to(e.svm_c);
  j.at("svm_epochs").get_to(e.svm_epochs);
  return e;
}

}  // namespace

MetricsRecord evaluate_model(const TrainedModel& model, const SyntheticSplits& data, int classes,
                             const EvalOptions& options) {
  MetricsRecord record;
  record.method = model.method;
  if (uses_lambda(model.method)) record.lambda = model.lambda;

  const std::vector<Matrix> test_enc = encode_views(model.encoders, data.test.views);
  const Matrix test_embedding = average_embeddings(test_enc);
  const Matrix train_embedding = embed(model.encoders, data.train.views);

  std::mt19937_64 rng(options.eval_seed);
  const KMeansResult clusters = kmeans(test_embedding, classes, options.kmeans_restarts, rng);
  record.acc = clustering_accuracy(clusters.labels, data.test.labels, classes);
  const PartitionScore n = nmi(clusters.labels, data.test.labels);
  record.nmi = n.value;
  record.nmi_degenerate = n.flagged;
  const PartitionScore a = ari(clusters.labels, data.test.labels);
  record.ari = std::max(0.0, a.value);
  record.ari_floored = a.value < 0.0;

  SvmOptions svm{options.svm_c, options.svm_epochs, options.eval_seed};
  record.cla_acc =
      linear_svm(train_embedding, data.train.labels, test_embedding, data.test.labels, svm);
  record.corr_coef = test_enc.size() >= 2 ? total_corr_coef(test_enc) : 1.0;
  return record;
}

std::vector<std::uint64_t> ExperimentConfig::seeds() const {
  std::vector<std::uint64_t> out;
  for (int i = 0; i < seeds_per_cell; ++i) out.push_back(base_seed + static_cast<std::uint64_t>(i));
  return out;
}

void ExperimentConfig::validate() const {
  require(!methods.empty(), "experiment: no methods");
  require(!lambdas.empty(), "experiment: no lambdas");
  require(seeds_per_cell >= 1, "experiment: need at least one seed per cell");
  for (double l : lambdas) require(l >= 0.0 && l <= 1.0, "experiment: lambda outside [0, 1]");
  synth.validate();
  if (std::find(methods.begin(), methods.end(), Method::linear_cca) != methods.end())
    require(synth.views == 2, "experiment: linear-cca needs exactly two views");
}

std::vector<Cell> enumerate_cells(const ExperimentConfig& config) {
  std::vector<Cell> cells;
  for (Method m : config.methods) {
    for (std::uint64_t seed : config.seeds()) {
      if (uses_lambda(m)) {
        for (double l : config.lambdas) cells.push_back({m, l, seed});
      } else {
        cells.push_back({m, std::nullopt, seed});
      }
    }
  }
  return cells;
}

MetricsRecord run_cell(const ExperimentConfig& config, const SyntheticSplits& data,
                       const Cell& cell) {
  TrainConfig train_config = config.train;
  train_config.method = cell.method;
  train_config.lambda = cell.lambda.value_or(0.0);
  train_config.seed = cell.seed;
  const TrainedModel model = train(data.train.views, data.validation.views, train_config);
  MetricsRecord record = evaluate_model(model, data, config.synth.classes(), config.eval);
  record.seed = cell.seed;
  return record;
}

std::vector<AggregateRow> aggregate(const std::vector<MetricsRecord>& records) {
  std::map<std::tuple<int, double>, std::vector<const MetricsRecord*>> groups;
  for (const auto& r : records)
    groups[{static_cast<int>(r.method), r.lambda ? *r.lambda : -1.0}].push_back(&r);
  std::vector<AggregateRow> rows;
  for (const auto& [key, members] : groups) {
    AggregateRow row;
    row.method = members.front()->method;
    row.lambda = members.front()->lambda;
    row.count = static_cast<int>(members.size());
    for (int metric = 0; metric < 5; ++metric) {
      double sum = 0.0;
      for (const auto* r : members) sum += metric_value(*r, metric);
      const double mean = sum / row.count;
      double ss = 0.0;
      for (const auto* r : members) ss += std::pow(metric_value(*r, metric) - mean, 2);
      row.mean[metric] = mean;
      row.stddev[metric] = row.count > 1 ? std::sqrt(ss / (row.count - 1)) : 0.0;
    }
    rows.push_back(row);
  }
  return rows;
}

void write_records_csv(std::ostream& out, const std::vector<MetricsRecord>& records) {
  out << "method,lambda,seed,acc,nmi,ari,cla_acc,corr_coef,ari_floored,nmi_degenerate\n";
  for (const auto& r : records) {
    out << to_string(r.method) << ',' << lambda_field(r.lambda) << ',' << r.seed;
    for (int metric = 0; metric < 5; ++metric) out << ',' << format_fixed(metric_value(r, metric));
    out << ',' << int{r.ari_floored} << ',' << int{r.nmi_degenerate} << '\n';
  }
}

std::vector<MetricsRecord> read_records_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::string line;
  std::getline(in, line);
  std::vector<MetricsRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 10) throw InvalidInput(path + ": expected 10 fields");
    MetricsRecord r;
    r.method = parse_method(f[0]);
    if (f[1] != "-") r.lambda = std::stod(f[1]);
    r.seed = std::stoull(f[2]);
    r.acc = std::stod(f[3]);
    r.nmi = std::stod(f[4]);
    r.ari = std::stod(f[5]);
    r.cla_acc = std::stod(f[6]);
    r.corr_coef = std::stod(f[7]);
    r.ari_floored = f[8] == "1";
    r.nmi_degenerate = f[9] == "1";
    out.push_back(r);
  }
  return out;
}

void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows) {
  out << "method,lambda,n";
  for (const char* name : kMetricNames) out << ',' << name << "_mean," << name << "_std";
  out << '\n';
  for (const auto& row : rows) {
    out << to_string(row.method) << ',' << lambda_field(row.lambda) << ',' << row.count;
    for (int metric = 0; metric < 5; ++metric)
      out << ',' << format_fixed(row.mean[metric]) << ',' << format_fixed(row.stddev[metric]);
    out << '\n';
  }
}

void write_metric_table(std::ostream& out, const std::vector<AggregateRow>& rows,
                        const ExperimentConfig& config, int metric) {
  out << "method";
  for (double l : config.lambdas) out << ",lambda=" << format_fixed(l, 1);
  out << '\n';
  const size_t middle = config.lambdas.size() / 2;
  for (Method m : config.methods) {
    out << to_string(m);
    for (size_t i = 0; i < config.lambdas.size(); ++i) {
      std::string cell = "-";
      for (const auto& row : rows) {
        if (row.method != m) continue;
        const bool hit = row.lambda ? std::abs(*row.lambda - config.lambdas[i]) < 1e-12 : i == middle;
        if (hit) cell = format_fixed(row.mean[metric]) + "+-" + format_fixed(row.stddev[metric]);
      }
      out << ',' << cell;
    }
    out << '\n';
  }
}

void write_manifest(const ExperimentConfig& config, const std::string& path) {
  nlohmann::json j;
  j["kind"] = "mvgcca-sweep";
  j["synth"] = config.synth;
  j["train"] = config.train;
  std::vector<std::string> methods;
  for (Method m : config.methods) methods.push_back(to_string(m));
  j["methods"] = methods;
  j["lambdas"] = config.lambdas;
  j["seeds_per_cell"] = config.seeds_per_cell;
  j["base_seed"] = config.base_seed;
  j["resolved_seeds"] = config.seeds();
  j["eval"] = eval_to_json(config.eval);
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

ExperimentConfig read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  const nlohmann::json j = nlohmann::json::parse(in);
  if (j.value("kind", "") != "mvgcca-sweep") throw InvalidInput(path + ": not a sweep manifest");
  ExperimentConfig config;
  config.synth = j.at("synth").get<SynthConfig>();
  config.train = j.at("train").get<TrainConfig>();
  config.methods.clear();
  for (const auto& name : j.at("methods")) config.methods.push_back(parse_method(name.get<std::string>()));
  j.at("lambdas").get_to(config.lambdas);
  j.at("seeds_per_cell").get_to(config.seeds_per_cell);
  j.at("base_seed").get_to(config.base_seed);
  config.eval = eval_from_json(j.at("eval"));
  if (j.contains("resolved_seeds") &&
      j.at("resolved_seeds").get<std::vector<std::uint64_t>>() != config.seeds()) {
    throw InvalidInput(path + ": resolved seeds do not match base_seed/seeds_per_cell");
  }
  return config;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const std::string& output_dir,
                                const ProgressCallback& progress) {
  config.validate();
  std::filesystem::create_directories(output_dir);
  write_manifest(config, output_dir + "/manifest.json");

  const SyntheticSplits data = generate(config.synth);
  const std::vector<Cell> cells = enumerate_cells(config);

  std::vector<std::optional<MetricsRecord>> results(cells.size());
  std::vector<std::string> errors(cells.size());
  std::vector<double> seconds(cells.size(), 0.0);
  std::atomic<size_t> next{0};
  std::mutex progress_mutex;

  auto worker = [&] {
    for (size_t i = next++; i < cells.size(); i = next++) {
      const auto start = std::chrono::steady_clock::now();
      try {
        results[i] = run_cell(config, data, cells[i]);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
      seconds[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      if (progress) {
        std::lock_guard lock(progress_mutex);
        progress(cells[i], results[i] ? "ok" : "failed: " + errors[i]);
      }
    }
  };
  const int jobs = std::max(1, config.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  ExperimentResult result;
  for (size_t i = 0; i < cells.size(); ++i) {
    if (results[i]) {
      MetricsRecord r = *results[i];
      // Records are stored at the printed precision so that aggregates can be
      // recomputed exactly from records.csv.
      r.acc = round6(r.acc);
      r.nmi = round6(r.nmi);
      r.ari = round6(r.ari);
      r.cla_acc = round6(r.cla_acc);
      r.corr_coef = round6(r.corr_coef);
      result.records.push_back(r);
    } else {
      result.failures.push_back({cells[i], errors[i]});
    }
  }
  std::sort(result.records.begin(), result.records.end(),
            [](const auto& a, const auto& b) { return record_key(a) < record_key(b); });
  result.exit_code = result.failures.empty() ? 0 : 2;

  const auto rows = aggregate(result.records);
  {
    auto out = open_out(output_dir + "/records.csv");
    write_records_csv(out, result.records);
  }
  {
    auto out = open_out(output_dir + "/aggregate.csv");
    write_aggregate_csv(out, rows);
  }
  {
    auto out = open_out(output_dir + "/correlation.csv");
    out << "method,lambda,corr_coef_mean,corr_coef_std\n";
    for (const auto& row : rows)
      out << to_string(row.method) << ',' << lambda_field(row.lambda) << ','
          << format_fixed(row.mean[4]) << ',' << format_fixed(row.stddev[4]) << '\n';
  }
  for (int metric = 0; metric < 4; ++metric) {
    auto out = open_out(output_dir + "/table_" + kMetricNames[metric] + ".csv");
    write_metric_table(out, rows, config, metric);
  }
  {
    auto out = open_out(output_dir + "/timing.csv");
    out << "method,lambda,seed,seconds\n";
    for (size_t i = 0; i < cells.size(); ++i)
      out << to_string(cells[i].method) << ',' << lambda_field(cells[i].lambda) << ','
          << cells[i].seed << ',' << format_fixed(seconds[i], 3) << '\n';
  }
  const std::string failures_path = output_dir + "/failures.csv";
  if (!result.failures.empty()) {
    auto out = open_out(failures_path);
    out << "method,lambda,seed,error\n";
    for (const auto& f : result.failures) {
      std::string msg = f.error;
      std::replace(msg.begin(), msg.end(), ',', ';');
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      out << to_string(f.cell.method) << ',' << lambda_field(f.cell.lambda) << ',' << f.cell.seed
          << ',' << msg << '\n';
    }
  } else {
    std::filesystem::remove(failures_path);
  }
  return result;
}

void export_embeddings(const Matrix& embeddings, const Labels& labels, const std::string& path) {
  require(embeddings.rows() == static_cast<Eigen::Index>(labels.size()),
          "export_embeddings: embeddings and labels differ in length");
  auto out = open_out(path);
  for (Eigen::Index j = 0; j < embeddings.cols(); ++j) out << "dim_" << j << ',';
  out << "label\n";
  for (Eigen::Index i = 0; i < embeddings.rows(); ++i) {
    for (Eigen::Index j = 0; j < embeddings.cols(); ++j) out << format_exact(embeddings(i, j)) << ',';
    out << labels[static_cast<size_t>(i)] << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path);
}

void export_embeddings(const TrainedModel& model, const LabeledMultiviewDataset& data,
                       const std::string& path) {
  export_embeddings(embed(model.encoders, data.views), data.labels, path);
}

std::pair<Matrix, Labels> read_embeddings(const std::string& path) {
  const Matrix all = read_matrix_csv(path);
  require(all.cols() >= 1, "read_embeddings: missing label column");
  Labels labels(static_cast<size_t>(all.rows()));
  for (Eigen::Index i = 0; i < all.rows(); ++i)
    labels[static_cast<size_t>(i)] = static_cast<int>(all(i, all.cols() - 1));
  return {all.leftCols(all.cols() - 1), labels};
}

void save_model(const TrainedModel& model, const std::string& directory) {
  std::filesystem::create_directories(directory);
  nlohmann::json j;
  j["kind"] = "mvgcca-model";
  j["method"] = to_string(model.method);
  j["lambda"] = model.lambda;
  j["views"] = model.encoders.size();
  j["has_decoders"] = !model.decoders.empty();
  j["normalizers"] = model.normalizers;
  j["best_validation_objective"] = model.best_validation_objective;
  j["best_iteration"] = model.best_iteration;
  {
    auto out = open_out(directory + "/model.json");
    out << j.dump(2) << '\n';
  }
  for (size_t k = 0; k < model.encoders.size(); ++k)
    save_mlp(model.encoders[k], directory + "/encoder" + std::to_string(k) + ".mlp");
  for (size_t k = 0; k < model.decoders.size(); ++k)
    save_mlp(model.decoders[k], directory + "/decoder" + std::to_string(k) + ".mlp");
}

TrainedModel load_model(const std::string& directory) {
  std::ifstream in(directory + "/model.json");
  if (!in) throw std::runtime_error("cannot read " + directory + "/model.json");
  const nlohmann::json j = nlohmann::json::parse(in);
  TrainedModel model;
  model.method = parse_method(j.at("method").get<std::string>());
  model.lambda = j.at("lambda").get<double>();
  model.normalizers = j.at("normalizers").get<std::vector<double>>();
  model.best_validation_objective = j.at("best_validation_objective").get<double>();
  model.best_iteration = j.at("best_iteration").get<int>();
  const auto views = j.at("views").get<size_t>();
  for (size_t k = 0; k < views; ++k)
    model.encoders.push_back(load_mlp(directory + "/encoder" + std::to_string(k) + ".mlp"));
  if (j.at("has_decoders").get<bool>()) {
    for (size_t k = 0; k < views; ++k)
      model.decoders.push_back(load_mlp(directory + "/decoder" + std::to_string(k) + ".mlp"));
  }
  return model;
}

void write_run_log_header(std::ostream& out) {
  out << "iteration,split,objective,r,l_or_q,seconds\n";
}

void write_run_log_row(std::ostream& out, const IterationRecord& record) {
  out << record.iteration << ",train," << format_exact(record.train_objective) << ','
      << format_exact(record.train_r) << ',' << format_exact(record.train_reconstruction) << ','
      << format_fixed(record.seconds, 3) << '\n';
  out << record.iteration << ",validation," << format_exact(record.validation_objective) << ','
      << format_exact(record.validation_r) << ','
      << format_exact(record.validation_reconstruction) << ',' << format_fixed(record.seconds, 3)
      << '\n';
}

}  // namespace mvgcca
