#pragma once

#include "mvgcca/eval.hpp"
#include "mvgcca/synthgen.hpp"
#include "mvgcca/trainer.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace mvgcca {

struct EvalOptions {
  int kmeans_restarts = 10;
  std::uint64_t eval_seed = 2024;
  double svm_c = 1.0;
  int svm_epochs = 30;
};

/// Downstream scores of one trained model; all values in [0, 1].
struct MetricsRecord {
  Method method = Method::proposed;
  std::optional<double> lambda;  // empty for methods without a trade-off
  std::uint64_t seed = 0;
  double acc = 0.0;
  double nmi = 0.0;
  double ari = 0.0;
  double cla_acc = 0.0;
  double corr_coef = 0.0;
  bool ari_floored = false;
  bool nmi_degenerate = false;
};

/// K-means (k = number of classes) on averaged test embeddings scored by
/// ACC/NMI/ARI, a linear SVM trained on averaged training embeddings and
/// scored on test, and the total correlation coefficient of the per-view test
/// encodings.
MetricsRecord evaluate_model(const TrainedModel& model, const SyntheticSplits& data, int classes,
                             const EvalOptions& options);

struct ExperimentConfig {
  SynthConfig synth;
  TrainConfig train;
  std::vector<Method> methods{Method::linear_cca, Method::maxvar, Method::dgcca, Method::dccae,
                              Method::proposed};
  std::vector<double> lambdas{0.1, 0.3, 0.5, 0.7, 0.9};
  int seeds_per_cell = 10;
  std::uint64_t base_seed = 1;
  EvalOptions eval;
  int jobs = 1;

  std::vector<std::uint64_t> seeds() const;
  void validate() const;
};

struct Cell {
  Method method = Method::proposed;
  std::optional<double> lambda;
  std::uint64_t seed = 0;
};

/// Methods without a lambda contribute one cell per seed.
std::vector<Cell> enumerate_cells(const ExperimentConfig& config);

struct CellFailure {
  Cell cell;
  std::string error;
};

struct ExperimentResult {
  std::vector<MetricsRecord> records;  // sorted by (method, lambda, seed)
  std::vector<CellFailure> failures;
  int exit_code = 0;                   // 0 success, 2 when any cell failed
};

using ProgressCallback = std::function<void(const Cell&, const std::string& status)>;

/// Runs every cell and writes manifest.json, records.csv, aggregate.csv,
/// correlation.csv, table_<metric>.csv and timing.csv into output_dir.
/// Failed cells are listed in failures.csv and skipped.
ExperimentResult run_experiment(const ExperimentConfig& config, const std::string& output_dir,
                                const ProgressCallback& progress = {});

/// Trains and evaluates a single cell on an already generated dataset.
MetricsRecord run_cell(const ExperimentConfig& config, const SyntheticSplits& data,
                       const Cell& cell);

struct AggregateRow {
  Method method = Method::proposed;
  std::optional<double> lambda;
  int count = 0;
  double mean[5] = {};
  double stddev[5] = {};  // sample standard deviation, 0 for a single record
};

inline constexpr const char* kMetricNames[5] = {"acc", "nmi", "ari", "cla_acc", "corr_coef"};

std::vector<AggregateRow> aggregate(const std::vector<MetricsRecord>& records);

void write_records_csv(std::ostream& out, const std::vector<MetricsRecord>& records);
std::vector<MetricsRecord> read_records_csv(const std::string& path);
void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows);
/// One row per method, one column per lambda; lambda-free
/// methods fill only the middle column.
void write_metric_table(std::ostream& out, const std::vector<AggregateRow>& rows,
                        const ExperimentConfig& config, int metric);

void write_manifest(const ExperimentConfig& config, const std::string& path);
ExperimentConfig read_manifest(const std::string& path);

/// M x F embeddings plus a label column; header dim_0,...,dim_{F-1},label.
void export_embeddings(const Matrix& embeddings, const Labels& labels, const std::string& path);
void export_embeddings(const TrainedModel& model, const LabeledMultiviewDataset& data,
                       const std::string& path);
std::pair<Matrix, Labels> read_embeddings(const std::string& path);

/// Model directory: model.json, encoder<k>.mlp and decoder<k>.mlp.
void save_model(const TrainedModel& model, const std::string& directory);
TrainedModel load_model(const std::string& directory);

/// Run-log rows "iteration,split,objective,r,l_or_q,seconds".
void write_run_log_header(std::ostream& out);
void write_run_log_row(std::ostream& out, const IterationRecord& record);

}  // namespace mvgcca
