#pragma once

#include "mvgcca/matrix.hpp"

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace mvgcca {

/// Layer widths (input, hidden..., output). Hidden layers use ReLU, the
/// output layer is affine. With activate_last_hidden = false the final
/// hidden layer is affine as well, so a 3-hidden-layer net has exactly two
/// ReLUs.
struct MlpSpec {
  std::vector<int> layer_widths;
  bool activate_last_hidden = true;

  int input_width() const { return layer_widths.front(); }
  int output_width() const { return layer_widths.back(); }
  int layer_count() const { return static_cast<int>(layer_widths.size()) - 1; }
  /// Whether a ReLU follows layer `layer` (0-based).
  bool is_activated(int layer) const;
  void validate() const;

  /// Builds (input, hidden x depth, output).
  static MlpSpec uniform(int input, int hidden, int depth, int output,
                         bool activate_last_hidden = true);
};

/// fan_in_uniform draws weights and biases from U(-1/sqrt(fan_in), 1/sqrt(fan_in));
/// he_uniform draws weights from U(-sqrt(6/fan_in), sqrt(6/fan_in)) with zero
/// biases; standard_normal draws N(0, 1) weights with zero biases.
enum class InitScheme { fan_in_uniform, he_uniform, standard_normal };

std::string to_string(InitScheme scheme);
InitScheme parse_init_scheme(const std::string& name);

/// Per-layer gradients (or any parameter-shaped quantity).
struct MlpGrads {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  MlpGrads& operator+=(const MlpGrads& other);
  MlpGrads& operator*=(double factor);
  void set_zero();
  bool all_finite() const;
};

class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(MlpSpec spec);

  const MlpSpec& spec() const { return spec_; }
  std::size_t param_count() const;

  std::vector<Matrix>& weights() { return weights_; }
  const std::vector<Matrix>& weights() const { return weights_; }
  std::vector<Vector>& biases() { return biases_; }
  const std::vector<Vector>& biases() const { return biases_; }

  MlpGrads zeros_like() const;

  /// Parameters flattened as weights then bias, layer by layer.
  std::vector<double> flatten() const;
  void assign(std::span<const double> params);

  /// Incremented on every parameter mutation through the optimizer or
  /// assign(); tapes remember it to detect staleness.
  std::uint64_t version() const { return version_; }
  void touch() { ++version_; }

  friend bool operator==(const Mlp& a, const Mlp& b);

 private:
  MlpSpec spec_;
  std::vector<Matrix> weights_;  // out x in
  std::vector<Vector> biases_;
  std::uint64_t version_ = 0;
};

/// Cached activations of a forward pass.
struct Tape {
  const Mlp* source = nullptr;
  std::uint64_t version = 0;
  std::vector<Matrix> inputs;          // input to each layer
  std::vector<Matrix> pre_activations;  // affine output of each layer
};

struct ForwardResult {
  Matrix output;
  Tape tape;
};

struct BackwardResult {
  MlpGrads grads;
  Matrix grad_input;
};

Mlp init_mlp(const MlpSpec& spec, std::mt19937_64& rng, InitScheme scheme);

ForwardResult forward(const Mlp& mlp, const Matrix& x);
/// Forward without keeping a tape.
Matrix predict(const Mlp& mlp, const Matrix& x);

BackwardResult backward(const Mlp& mlp, const Tape& tape, const Matrix& grad_output);

struct AdamState {
  MlpGrads first_moment;
  MlpGrads second_moment;
  std::int64_t step_count = 0;
  double learning_rate = 1e-3;
  double weight_decay = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_mlp(const Mlp& mlp, double learning_rate, double weight_decay);
};

/// Decoupled-weight-decay Adam step; decay is not applied to biases.
/// Throws NonFiniteLoss when a gradient is not finite.
void adamw_step(Mlp& mlp, const MlpGrads& grads, AdamState& state);

/// Plain-text checkpoint: see README for the layout.
void save_mlp(const Mlp& mlp, std::ostream& out);
Mlp load_mlp(std::istream& in);
void save_mlp(const Mlp& mlp, const std::string& path);
Mlp load_mlp(const std::string& path);

}  // namespace mvgcca
