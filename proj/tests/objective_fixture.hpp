#pragma once

#include "mvgcca/objectives.hpp"
#include "support.hpp"

#include <random>
#include <vector>

namespace testing_support {

using mvgcca::InitScheme;
using mvgcca::Mlp;
using mvgcca::MlpGrads;
using mvgcca::MlpSpec;

inline std::vector<double> flatten_grads(const MlpGrads& g) {
  std::vector<double> out;
  for (size_t l = 0; l < g.weights.size(); ++l) {
    out.insert(out.end(), g.weights[l].data(), g.weights[l].data() + g.weights[l].size());
    out.insert(out.end(), g.biases[l].data(), g.biases[l].data() + g.biases[l].size());
  }
  return out;
}

inline std::vector<double> flatten_matrix(const Matrix& m) { return {m.data(), m.data() + m.size()}; }

/// Standard-normal weights and biases; nonzero biases keep ReLU inputs off the kink.
inline Mlp random_net(const MlpSpec& spec, std::mt19937_64& rng) {
  Mlp mlp = mvgcca::init_mlp(spec, rng, InitScheme::standard_normal);
  std::normal_distribution<double> normal;
  std::vector<double> params = mlp.flatten();
  for (double& p : params) p = normal(rng);
  mlp.assign(params);
  return mlp;
}

struct Instance {
  std::vector<Matrix> views;
  std::vector<Mlp> encoders;
  std::vector<Mlp> decoders;
  Matrix g;
  std::vector<double> normalizers;
};

inline Instance random_instance(std::mt19937_64& rng, int k, int batch, int f) {
  std::uniform_int_distribution<int> width(1, 5);
  Instance in;
  for (int v = 0; v < k; ++v) {
    const int d = width(rng) + 1;
    in.views.push_back(random_matrix(rng, batch, d));
    in.encoders.push_back(random_net(MlpSpec{{d, width(rng), f}}, rng));
    in.decoders.push_back(random_net(MlpSpec{{f, width(rng), d}}, rng));
  }
  in.g = random_matrix(rng, batch, f);
  in.normalizers = mvgcca::view_normalizers(in.views);
  return in;
}

}  // namespace testing_support
