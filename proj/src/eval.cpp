#include "mvgcca/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace mvgcca {
namespace {

int label_count(const Labels& labels) {
  int n = 0;
  for (int l : labels) {
    require(l >= 0, "labels must be non-negative");
    n = std::max(n, l + 1);
  }
  return n;
}

Matrix contingency(const Labels& pred, const Labels& truth) {
  require(pred.size() == truth.size(), "partition sizes differ");
  Matrix table = Matrix::Zero(label_count(pred), label_count(truth));
  for (size_t i = 0; i < pred.size(); ++i) table(pred[i], truth[i]) += 1.0;
  return table;
}

double entropy(const Vector& counts, double n) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < counts.size(); ++i)
    if (counts(i) > 0) h -= counts(i) / n * std::log(counts(i) / n);
  return h;
}

double comb2(double n) { return n * (n - 1.0) / 2.0; }

struct Lloyd {
  Labels labels;
  Matrix centroids;
  double objective;
  int iterations;
};

Matrix squared_distances(const Matrix& x, const Matrix& centroids) {
  Matrix d = (-2.0 * x) * centroids.transpose();
  d.colwise() += x.rowwise().squaredNorm();
  d.rowwise() += centroids.rowwise().squaredNorm().transpose();
  return d.cwiseMax(0.0);
}

Matrix kmeanspp_seed(const Matrix& x, int k, std::mt19937_64& rng) {
  const Eigen::Index n = x.rows();
  Matrix centroids(k, x.cols());
  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  centroids.row(0) = x.row(first(rng));
  Vector closest = (x.rowwise() - centroids.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = closest.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double r = u(rng);
      for (pick = 0; pick < n - 1; ++pick) {
        r -= closest(pick);
        if (r <= 0.0) break;
      }
    } else {
      pick = first(rng);
    }
    centroids.row(c) = x.row(pick);
    closest = closest.cwiseMin((x.rowwise() - centroids.row(c)).rowwise().squaredNorm());
  }
  return centroids;
}

Lloyd run_lloyd(const Matrix& x, Matrix centroids, int max_iterations) {
  const Eigen::Index n = x.rows();
  const int k = static_cast<int>(centroids.rows());
  Lloyd state{Labels(static_cast<size_t>(n), -1), std::move(centroids),
              std::numeric_limits<double>::infinity(), 0};
  for (int it = 0; it < max_iterations; ++it) {
    const Matrix d = squared_distances(x, state.centroids);
    bool changed = false;
    double objective = 0.0;
    Vector assigned(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index best = 0;
      assigned(i) = d.row(i).minCoeff(&best);
      objective += assigned(i);
      if (state.labels[static_cast<size_t>(i)] != static_cast<int>(best)) {
        state.labels[static_cast<size_t>(i)] = static_cast<int>(best);
        changed = true;
      }
    }
    if (objective > state.objective * (1.0 + 1e-12) + 1e-12) {
      throw ContractViolation("kmeans: objective increased during Lloyd iterations");
    }
    state.objective = objective;
    state.iterations = it + 1;
    if (!changed && it > 0) break;

    // Recompute centroids; an empty cluster takes the point farthest from its centroid.
    Matrix sums = Matrix::Zero(k, x.cols());
    std::vector<int> counts(static_cast<size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(state.labels[static_cast<size_t>(i)]) += x.row(i);
      ++counts[static_cast<size_t>(state.labels[static_cast<size_t>(i)])];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<size_t>(c)] > 0) {
        state.centroids.row(c) = sums.row(c) / counts[static_cast<size_t>(c)];
      } else {
        Eigen::Index far = 0;
        assigned.maxCoeff(&far);
        state.centroids.row(c) = x.row(far);
        assigned(far) = 0.0;
      }
    }
  }
  // Objective for the final centroids.
  const Matrix d = squared_distances(x, state.centroids);
  double objective = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index best = 0;
    objective += d.row(i).minCoeff(&best);
    state.labels[static_cast<size_t>(i)] = static_cast<int>(best);
  }
  state.objective = std::min(state.objective, objective);
  return state;
}

// Single-point transfers (Hartigan) from a Lloyd fixpoint; each accepted move
// strictly lowers the within-cluster sum of squares.
void refine_by_transfers(const Matrix& x, Lloyd& state) {
  const Eigen::Index n = x.rows();
  const int k = static_cast<int>(state.centroids.rows());
  std::vector<double> counts(static_cast<size_t>(k), 0.0);
  Matrix sums = Matrix::Zero(k, x.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const int c = state.labels[static_cast<size_t>(i)];
    sums.row(c) += x.row(i);
    counts[static_cast<size_t>(c)] += 1.0;
  }
  for (int c = 0; c < k; ++c)
    if (counts[static_cast<size_t>(c)] > 0.0) state.centroids.row(c) = sums.row(c) / counts[static_cast<size_t>(c)];

  for (bool moved = true; moved;) {
    moved = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      const int a = state.labels[static_cast<size_t>(i)];
      const double na = counts[static_cast<size_t>(a)];
      if (na <= 1.0) continue;
      const double leave = na / (na - 1.0) * (x.row(i) - state.centroids.row(a)).squaredNorm();
      int target = a;
      double best_gain = 1e-12 * std::max(1.0, leave);
      for (int b = 0; b < k; ++b) {
        if (b == a) continue;
        const double nb = counts[static_cast<size_t>(b)];
        const double join = nb / (nb + 1.0) * (x.row(i) - state.centroids.row(b)).squaredNorm();
        if (leave - join > best_gain) {
          best_gain = leave - join;
          target = b;
        }
      }
      if (target == a) continue;
      const double nb = counts[static_cast<size_t>(target)];
      state.centroids.row(a) = (state.centroids.row(a) * na - x.row(i)) / (na - 1.0);
      state.centroids.row(target) = (state.centroids.row(target) * nb + x.row(i)) / (nb + 1.0);
      counts[static_cast<size_t>(a)] -= 1.0;
      counts[static_cast<size_t>(target)] += 1.0;
      state.labels[static_cast<size_t>(i)] = target;
      moved = true;
    }
  }
  double objective = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    objective += (x.row(i) - state.centroids.row(state.labels[static_cast<size_t>(i)])).squaredNorm();
  state.objective = objective;
}

}  // namespace

Matrix average_embeddings(std::span<const Matrix> encodings) {
  require(!encodings.empty(), "average_embeddings: no encodings");
  Matrix sum = encodings.front();
  for (size_t k = 1; k < encodings.size(); ++k) {
    require(encodings[k].rows() == sum.rows() && encodings[k].cols() == sum.cols(),
            "average_embeddings: shape mismatch");
    sum += encodings[k];
  }
  return sum / static_cast<double>(encodings.size());
}

Matrix embed(std::span<const Mlp> encoders, std::span<const Matrix> views,
             std::optional<std::size_t> single_view) {
  require(encoders.size() == views.size(), "embed: one encoder per view required");
  if (single_view) {
    require(*single_view < views.size(), "embed: view index out of range");
    return predict(encoders[*single_view], views[*single_view]);
  }
  std::vector<Matrix> encodings;
  for (size_t k = 0; k < views.size(); ++k) encodings.push_back(predict(encoders[k], views[k]));
  return average_embeddings(encodings);
}

KMeansResult kmeans(const Matrix& x, int k, int restarts, std::mt19937_64& rng,
                    int max_iterations) {
  require(k >= 1 && k <= x.rows(), "kmeans: k must be in [1, rows]");
  require(restarts >= 1, "kmeans: need at least one restart");
  require(all_finite(x), "kmeans: non-finite input");
  KMeansResult best;
  best.objective = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    Lloyd run = run_lloyd(x, kmeanspp_seed(x, k, rng), max_iterations);
    refine_by_transfers(x, run);
    if (run.objective < best.objective) {
      best.labels = std::move(run.labels);
      best.centroids = std::move(run.centroids);
      best.objective = run.objective;
      best.iterations = run.iterations;
    }
  }
  return best;
}

std::vector<int> hungarian(const Matrix& cost) {
  require(cost.rows() == cost.cols(), "hungarian: cost matrix must be square");
  const int n = static_cast<int>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();
  // Potentials u (rows), v (columns); p[j] = row matched to column j (1-based).
  std::vector<double> u(static_cast<size_t>(n + 1), 0.0), v(static_cast<size_t>(n + 1), 0.0);
  std::vector<int> p(static_cast<size_t>(n + 1), 0), way(static_cast<size_t>(n + 1), 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<size_t>(n + 1), inf);
    std::vector<char> used(static_cast<size_t>(n + 1), 0);
    do {
      used[static_cast<size_t>(j0)] = 1;
      const int i0 = p[static_cast<size_t>(j0)];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<size_t>(i0)] - v[static_cast<size_t>(j)];
        if (cur < minv[static_cast<size_t>(j)]) {
          minv[static_cast<size_t>(j)] = cur;
          way[static_cast<size_t>(j)] = j0;
        }
        if (minv[static_cast<size_t>(j)] < delta) {
          delta = minv[static_cast<size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<size_t>(j)]) {
          u[static_cast<size_t>(p[static_cast<size_t>(j)])] += delta;
          v[static_cast<size_t>(j)] -= delta;
        } else {
          minv[static_cast<size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<size_t>(j0)];
      p[static_cast<size_t>(j0)] = p[static_cast<size_t>(j1)];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> assignment(static_cast<size_t>(n), -1);
  for (int j = 1; j <= n; ++j)
    if (p[static_cast<size_t>(j)] > 0) assignment[static_cast<size_t>(p[static_cast<size_t>(j)] - 1)] = j - 1;
  return assignment;
}

double clustering_accuracy(const Labels& pred, const Labels& truth, int k) {
  require(pred.size() == truth.size(), "clustering_accuracy: length mismatch");
  require(!pred.empty(), "clustering_accuracy: empty input");
  for (size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] < 0 || pred[i] >= k || truth[i] < 0 || truth[i] >= k)
      throw InvalidInput("clustering_accuracy: label out of range [0, k)");
  }
  Matrix confusion = Matrix::Zero(k, k);
  for (size_t i = 0; i < pred.size(); ++i) confusion(pred[i], truth[i]) += 1.0;
  const std::vector<int> match = hungarian(-confusion);
  double correct = 0.0;
  for (int r = 0; r < k; ++r) correct += confusion(r, match[static_cast<size_t>(r)]);
  return correct / static_cast<double>(pred.size());
}

PartitionScore nmi(const Labels& pred, const Labels& truth) {
  const Matrix table = contingency(pred, truth);
  const double n = static_cast<double>(pred.size());
  require(n > 0, "nmi: empty input");
  const Vector rows = table.rowwise().sum();
  const Vector cols = table.colwise().sum().transpose();
  const double h_pred = entropy(rows, n);
  const double h_truth = entropy(cols, n);
  if (h_truth == 0.0) return {0.0, true};
  double mi = 0.0;
  for (Eigen::Index i = 0; i < table.rows(); ++i)
    for (Eigen::Index j = 0; j < table.cols(); ++j)
      if (table(i, j) > 0)
        mi += table(i, j) / n * std::log(n * table(i, j) / (rows(i) * cols(j)));
  const double denom = 0.5 * (h_pred + h_truth);
  return {std::clamp(mi / denom, 0.0, 1.0), false};
}

PartitionScore ari(const Labels& pred, const Labels& truth) {
  const Matrix table = contingency(pred, truth);
  const double n = static_cast<double>(pred.size());
  require(n > 1, "ari: need at least two samples");
  double index = 0.0, sum_rows = 0.0, sum_cols = 0.0;
  for (Eigen::Index i = 0; i < table.size(); ++i) index += comb2(table.data()[i]);
  const Vector rows = table.rowwise().sum();
  const Vector cols = table.colwise().sum().transpose();
  for (Eigen::Index i = 0; i < rows.size(); ++i) sum_rows += comb2(rows(i));
  for (Eigen::Index j = 0; j < cols.size(); ++j) sum_cols += comb2(cols(j));
  const double expected = sum_rows * sum_cols / comb2(n);
  const double max_index = 0.5 * (sum_rows + sum_cols);
  if (max_index == expected) return {1.0, false};  // both partitions trivial and equal
  const double value = (index - expected) / (max_index - expected);
  return {value, value < 0.0};
}

void LinearSvm::fit(const Matrix& x, const Labels& y, const SvmOptions& options) {
  require(x.rows() == static_cast<Eigen::Index>(y.size()), "linear_svm: length mismatch");
  require(options.c > 0.0 && options.epochs > 0, "linear_svm: invalid options");
  const int classes = label_count(y);
  std::vector<int> present(static_cast<size_t>(classes), 0);
  for (int l : y) present[static_cast<size_t>(l)] = 1;
  int distinct = 0;
  for (int p : present) distinct += p;
  require(distinct >= 2, "linear_svm: need at least two classes in train");

  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols() + 1;
  Matrix augmented(n, d);
  augmented << x, Matrix::Ones(n, 1);
  const double reg = 1.0 / (options.c * static_cast<double>(n));
  const double radius = 1.0 / std::sqrt(reg);

  weights_ = Matrix::Zero(classes, d);
  std::vector<Eigen::Index> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  for (int c = 0; c < classes; ++c) {
    std::mt19937_64 rng(options.seed * 1000003ULL + static_cast<std::uint64_t>(c));
    RowVector w = RowVector::Zero(d);
    std::int64_t t = 0;
    for (int epoch = 0; epoch < options.epochs; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng);
      for (Eigen::Index i : order) {
        ++t;
        const double eta = 1.0 / (reg * static_cast<double>(t));
        const double target = y[static_cast<size_t>(i)] == c ? 1.0 : -1.0;
        const double margin = target * w.dot(augmented.row(i));
        w *= (1.0 - eta * reg);
        if (margin < 1.0) w += (eta * target) * augmented.row(i);
        const double norm = w.norm();
        if (norm > radius) w *= radius / norm;
      }
    }
    weights_.row(c) = w;
  }
}

Labels LinearSvm::predict(const Matrix& x) const {
  require(x.cols() + 1 == weights_.cols(), "linear_svm: feature width mismatch");
  Matrix augmented(x.rows(), x.cols() + 1);
  augmented << x, Matrix::Ones(x.rows(), 1);
  const Matrix scores = augmented * weights_.transpose();
  Labels out(static_cast<size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    Eigen::Index best = 0;
    scores.row(i).maxCoeff(&best);
    out[static_cast<size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

double accuracy(const Labels& pred, const Labels& truth) {
  require(pred.size() == truth.size() && !pred.empty(), "accuracy: length mismatch");
  size_t correct = 0;
  for (size_t i = 0; i < pred.size(); ++i) correct += pred[i] == truth[i];
  return static_cast<double>(correct) / static_cast<double>(pred.size());
}

double linear_svm(const Matrix& train_x, const Labels& train_y, const Matrix& test_x,
                  const Labels& test_y, const SvmOptions& options) {
  LinearSvm svm;
  svm.fit(train_x, train_y, options);
  for (int l : test_y) {
    require(l >= 0, "linear_svm: negative test label");
    if (std::find(train_y.begin(), train_y.end(), l) == train_y.end())
      throw InvalidInput("linear_svm: class " + std::to_string(l) + " absent from train");
  }
  return accuracy(svm.predict(test_x), test_y);
}

Labels knn_predict(const Matrix& train_x, const Labels& train_y, const Matrix& test_x, int k) {
  require(train_x.rows() > 0, "knn: empty training set");
  require(train_x.rows() == static_cast<Eigen::Index>(train_y.size()), "knn: length mismatch");
  require(train_x.cols() == test_x.cols(), "knn: feature width mismatch");
  require(k >= 1, "knn: k must be positive");
  const Eigen::Index n = train_x.rows();
  const auto kk = static_cast<size_t>(std::min<Eigen::Index>(k, n));
  const Matrix d = squared_distances(test_x, train_x);
  Labels out(static_cast<size_t>(test_x.rows()));
  std::vector<Eigen::Index> idx(static_cast<size_t>(n));
  for (Eigen::Index i = 0; i < test_x.rows(); ++i) {
    std::iota(idx.begin(), idx.end(), 0);
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(kk), idx.end(),
                      [&](Eigen::Index a, Eigen::Index b) {
                        return d(i, a) < d(i, b) || (d(i, a) == d(i, b) && a < b);
                      });
    std::map<int, int> votes;
    int top = 0;
    for (size_t j = 0; j < kk; ++j) top = std::max(top, ++votes[train_y[static_cast<size_t>(idx[j])]]);
    for (size_t j = 0; j < kk; ++j) {
      const int label = train_y[static_cast<size_t>(idx[j])];
      if (votes[label] == top) {
        out[static_cast<size_t>(i)] = label;
        break;
      }
    }
  }
  return out;
}

double knn(const Matrix& train_x, const Labels& train_y, const Matrix& test_x,
           const Labels& test_y, int k) {
  return accuracy(knn_predict(train_x, train_y, test_x, k), test_y);
}

}  // namespace mvgcca
