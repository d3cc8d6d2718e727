#include "experiment_fixture.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace mvgcca;
using namespace testing_support;

TEST_CASE("cells enumerate methods, lambdas and seeds") {
  ExperimentConfig c = tiny_experiment();
  const std::vector<Cell> cells = enumerate_cells(c);
  CHECK(cells.size() == 2 + 3 * 2);
  CHECK(!cells[0].lambda);
  CHECK(cells[0].seed == 1);
  CHECK(cells[1].seed == 2);
  c.seeds_per_cell = 0;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
}

TEST_CASE("aggregation") {
  std::vector<MetricsRecord> records;
  for (int s = 0; s < 3; ++s) {
    MetricsRecord r;
    r.method = Method::proposed;
    r.lambda = 0.1;
    r.seed = static_cast<std::uint64_t>(s);
    r.acc = 0.5 + 0.1 * s;
    records.push_back(r);
  }
  MetricsRecord single;
  single.method = Method::maxvar;
  single.acc = 0.7;
  records.push_back(single);
  const std::vector<AggregateRow> rows = aggregate(records);
  REQUIRE(rows.size() == 2);
  const auto& prop = rows[0].method == Method::proposed ? rows[0] : rows[1];
  const auto& mv = rows[0].method == Method::maxvar ? rows[0] : rows[1];
  CHECK(prop.count == 3);
  CHECK(prop.mean[0] == doctest::Approx(0.6));
  CHECK(prop.stddev[0] == doctest::Approx(0.1));
  CHECK(mv.count == 1);
  CHECK(mv.stddev[0] == 0.0);
}

TEST_CASE("records csv round trip") {
  MetricsRecord a;
  a.method = Method::dccae;
  a.lambda = 0.3;
  a.seed = 7;
  a.acc = 0.25;
  a.nmi = 0.125;
  a.ari = 0.0;
  a.ari_floored = true;
  MetricsRecord b;
  b.method = Method::linear_cca;
  b.seed = 8;
  b.cla_acc = 0.5;
  const auto dir = scratch_dir("records");
  {
    std::ofstream out(dir / "records.csv");
    write_records_csv(out, {a, b});
  }
  const std::vector<MetricsRecord> back = read_records_csv((dir / "records.csv").string());
  REQUIRE(back.size() == 2);
  CHECK(back[0].method == Method::dccae);
  CHECK(*back[0].lambda == 0.3);
  CHECK(back[0].seed == 7);
  CHECK(back[0].nmi == 0.125);
  CHECK(back[0].ari_floored);
  CHECK(!back[1].lambda);
  CHECK(back[1].cla_acc == 0.5);
}

TEST_CASE("sweep outputs, tables and manifest rerun") {
  const ExperimentConfig config = tiny_experiment();
  const auto first = scratch_dir("sweep_a");
  const ExperimentResult result = run_experiment(config, first.string());
  CHECK(result.exit_code == 0);
  CHECK(result.failures.empty());
  CHECK(result.records.size() == 8);
  CHECK(!std::filesystem::exists(first / "failures.csv"));
  for (const char* name : kDeterministicOutputs) CHECK(std::filesystem::exists(first / name));
  CHECK(std::filesystem::exists(first / "timing.csv"));

  SUBCASE("records are bounded") {
    for (const MetricsRecord& r : result.records) {
      for (double v : {r.acc, r.nmi, r.ari, r.cla_acc, r.corr_coef}) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
    }
  }

  SUBCASE("aggregates recompute from records") {
    const std::vector<MetricsRecord> records = read_records_csv((first / "records.csv").string());
    std::ostringstream again;
    write_aggregate_csv(again, aggregate(records));
    CHECK(again.str() == read_file(first / "aggregate.csv"));
  }

  SUBCASE("table layout") {
    std::istringstream table(read_file(first / "table_acc.csv"));
    std::string header, row_maxvar, row_proposed, extra;
    std::getline(table, header);
    std::getline(table, row_maxvar);
    std::getline(table, row_proposed);
    CHECK(header == "method,lambda=0.1,lambda=0.5,lambda=0.9");
    CHECK(row_maxvar.rfind("maxvar,-,", 0) == 0);
    CHECK(std::count(row_maxvar.begin(), row_maxvar.end(), ',') == 3);
    CHECK(row_maxvar.substr(row_maxvar.size() - 2) == ",-");
    CHECK(row_proposed.rfind("proposed,", 0) == 0);
    CHECK(std::count(row_proposed.begin(), row_proposed.end(), '+') == 3);
    CHECK(!std::getline(table, extra));
  }

  SUBCASE("rerun from manifest is byte-identical") {
    const ExperimentConfig loaded = read_manifest((first / "manifest.json").string());
    const auto second = scratch_dir("sweep_b");
    ExperimentConfig parallel = loaded;
    parallel.jobs = 2;
    run_experiment(parallel, second.string());
    for (const char* name : kDeterministicOutputs)
      CHECK_MESSAGE(read_file(first / name) == read_file(second / name), name);
  }
}

TEST_CASE("manifest rejects inconsistent seeds") {
  const auto dir = scratch_dir("manifest");
  const auto path = (dir / "manifest.json").string();
  write_manifest(tiny_experiment(), path);
  const ExperimentConfig back = read_manifest(path);
  CHECK(back.seeds() == tiny_experiment().seeds());
  std::string text = read_file(path);
  const auto pos = text.find("\"base_seed\": 1");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 14, "\"base_seed\": 5");
  std::ofstream(path) << text;
  CHECK_THROWS(read_manifest(path));
}

TEST_CASE("model and embedding files round trip") {
  SynthConfig synth = tiny_synth();
  const SyntheticSplits data = generate(synth);
  TrainConfig tc;
  tc.method = Method::proposed;
  tc.lambda = 0.5;
  tc.outer_iterations = 2;
  tc.hidden_width = 8;
  const TrainedModel model = train(data.train.views, data.validation.views, tc);
  const auto dir = scratch_dir("model");
  save_model(model, (dir / "model").string());
  const TrainedModel back = load_model((dir / "model").string());
  CHECK(back.method == model.method);
  CHECK(back.lambda == model.lambda);
  CHECK(back.best_iteration == model.best_iteration);
  CHECK(back.best_validation_objective == model.best_validation_objective);
  REQUIRE(back.encoders.size() == 2);
  REQUIRE(back.decoders.size() == 2);
  for (size_t k = 0; k < 2; ++k) {
    CHECK(predict(back.encoders[k], data.test.views[k]) ==
          predict(model.encoders[k], data.test.views[k]));
  }

  const auto emb_path = (dir / "emb.csv").string();
  export_embeddings(model, data.test, emb_path);
  std::istringstream lines(read_file(emb_path));
  std::string header;
  std::getline(lines, header);
  CHECK(header == "dim_0,dim_1,dim_2,dim_3,label");
  const auto [emb, labels] = read_embeddings(emb_path);
  CHECK(labels == data.test.labels);
  CHECK(emb == embed(model.encoders, data.test.views));

  const MetricsRecord a = evaluate_model(model, data, synth.classes(), EvalOptions{});
  const MetricsRecord b = evaluate_model(back, data, synth.classes(), EvalOptions{});
  CHECK(a.acc == b.acc);
  CHECK(a.cla_acc == b.cla_acc);
}
