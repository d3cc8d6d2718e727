#pragma once

#include "mvgcca/matrix.hpp"
#include "mvgcca/nn.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace mvgcca {

/// Mean of the per-view encodings, or a single view's encoding when
/// `single_view` is set.
Matrix embed(std::span<const Mlp> encoders, std::span<const Matrix> views,
             std::optional<std::size_t> single_view = std::nullopt);
Matrix average_embeddings(std::span<const Matrix> encodings);

struct KMeansResult {
  Labels labels;
  Matrix centroids;
  double objective = 0.0;  // within-cluster sum of squares
  int iterations = 0;
};

/// Lloyd's algorithm with k-means++ seeding, best of `restarts` runs.
KMeansResult kmeans(const Matrix& x, int k, int restarts, std::mt19937_64& rng,
                    int max_iterations = 300);

/// Minimum-cost perfect assignment on a square cost matrix (Hungarian
/// algorithm). Returns the column assigned to each row.
std::vector<int> hungarian(const Matrix& cost);

/// Fraction of samples correct under the best one-to-one relabeling of pred.
double clustering_accuracy(const Labels& pred, const Labels& truth, int k);

struct PartitionScore {
  double value = 0.0;
  bool flagged = false;  // degenerate truth (NMI) or negative raw value (ARI)
};

/// Mutual information normalized by the arithmetic mean of the entropies.
PartitionScore nmi(const Labels& pred, const Labels& truth);
/// Adjusted Rand index (raw value, may be negative; flagged when it is).
PartitionScore ari(const Labels& pred, const Labels& truth);

struct SvmOptions {
  double c = 1.0;
  int epochs = 30;
  std::uint64_t seed = 0;
};

/// One-vs-rest linear SVM trained by Pegasos-style subgradient descent on
/// hinge + L2 (regularization 1 / (c n)); the bias is an extra constant feature.
class LinearSvm {
 public:
  void fit(const Matrix& x, const Labels& y, const SvmOptions& options = {});
  Labels predict(const Matrix& x) const;

 private:
  Matrix weights_;  // classes x (features + 1)
};

/// Trains on (train_x, train_y) and returns accuracy on the test split.
double linear_svm(const Matrix& train_x, const Labels& train_y, const Matrix& test_x,
                  const Labels& test_y, const SvmOptions& options = {});

/// Euclidean k-nearest-neighbour vote; ties go to the tied class whose member
/// is nearest.
Labels knn_predict(const Matrix& train_x, const Labels& train_y, const Matrix& test_x, int k = 5);
double knn(const Matrix& train_x, const Labels& train_y, const Matrix& test_x,
           const Labels& test_y, int k = 5);

double accuracy(const Labels& pred, const Labels& truth);

}  // namespace mvgcca
