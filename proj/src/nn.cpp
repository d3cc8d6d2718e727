#include "mvgcca/nn.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace mvgcca {

bool MlpSpec::is_activated(int layer) const {
  const int last = layer_count() - 1;
  if (layer >= last) return false;
  if (layer == last - 1 && !activate_last_hidden) return false;
  return true;
}

void MlpSpec::validate() const {
  require(layer_widths.size() >= 2, "MlpSpec: needs at least two widths");
  for (int w : layer_widths) require(w > 0, "MlpSpec: widths must be positive");
}

MlpSpec MlpSpec::uniform(int input, int hidden, int depth, int output, bool activate_last_hidden) {
  MlpSpec spec;
  spec.layer_widths.push_back(input);
  for (int i = 0; i < depth; ++i) spec.layer_widths.push_back(hidden);
  spec.layer_widths.push_back(output);
  spec.activate_last_hidden = activate_last_hidden;
  return spec;
}

MlpGrads& MlpGrads::operator+=(const MlpGrads& other) {
  for (size_t l = 0; l < weights.size(); ++l) {
    weights[l] += other.weights[l];
    biases[l] += other.biases[l];
  }
  return *this;
}

MlpGrads& MlpGrads::operator*=(double factor) {
  for (size_t l = 0; l < weights.size(); ++l) {
    weights[l] *= factor;
    biases[l] *= factor;
  }
  return *this;
}

void MlpGrads::set_zero() {
  for (auto& w : weights) w.setZero();
  for (auto& b : biases) b.setZero();
}

bool MlpGrads::all_finite() const {
  for (size_t l = 0; l < weights.size(); ++l)
    if (!weights[l].allFinite() || !biases[l].allFinite()) return false;
  return true;
}

Mlp::Mlp(MlpSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  for (int l = 0; l < spec_.layer_count(); ++l) {
    weights_.push_back(Matrix::Zero(spec_.layer_widths[l + 1], spec_.layer_widths[l]));
    biases_.push_back(Vector::Zero(spec_.layer_widths[l + 1]));
  }
}

std::size_t Mlp::param_count() const {
  std::size_t n = 0;
  for (size_t l = 0; l < weights_.size(); ++l)
    n += static_cast<std::size_t>(weights_[l].size() + biases_[l].size());
  return n;
}

MlpGrads Mlp::zeros_like() const {
  MlpGrads g;
  for (size_t l = 0; l < weights_.size(); ++l) {
    g.weights.push_back(Matrix::Zero(weights_[l].rows(), weights_[l].cols()));
    g.biases.push_back(Vector::Zero(biases_[l].size()));
  }
  return g;
}

std::vector<double> Mlp::flatten() const {
  std::vector<double> out;
  out.reserve(param_count());
  for (size_t l = 0; l < weights_.size(); ++l) {
    out.insert(out.end(), weights_[l].data(), weights_[l].data() + weights_[l].size());
    out.insert(out.end(), biases_[l].data(), biases_[l].data() + biases_[l].size());
  }
  return out;
}

void Mlp::assign(std::span<const double> params) {
  require(params.size() == param_count(), "Mlp::assign: parameter count mismatch");
  size_t pos = 0;
  for (size_t l = 0; l < weights_.size(); ++l) {
    std::copy_n(params.data() + pos, weights_[l].size(), weights_[l].data());
    pos += static_cast<size_t>(weights_[l].size());
    std::copy_n(params.data() + pos, biases_[l].size(), biases_[l].data());
    pos += static_cast<size_t>(biases_[l].size());
  }
  touch();
}

bool operator==(const Mlp& a, const Mlp& b) {
  if (a.spec_.layer_widths != b.spec_.layer_widths ||
      a.spec_.activate_last_hidden != b.spec_.activate_last_hidden)
    return false;
  for (size_t l = 0; l < a.weights_.size(); ++l) {
    if (a.weights_[l] != b.weights_[l] || a.biases_[l] != b.biases_[l]) return false;
  }
  return true;
}

std::string to_string(InitScheme scheme) {
  switch (scheme) {
    case InitScheme::fan_in_uniform: return "fan-in-uniform";
    case InitScheme::he_uniform: return "he-uniform";
    case InitScheme::standard_normal: return "standard-normal";
  }
  return "unknown";
}

InitScheme parse_init_scheme(const std::string& name) {
  for (InitScheme s : {InitScheme::fan_in_uniform, InitScheme::he_uniform, InitScheme::standard_normal})
    if (to_string(s) == name) return s;
  throw InvalidInput("unknown init scheme '" + name + "'");
}

Mlp init_mlp(const MlpSpec& spec, std::mt19937_64& rng, InitScheme scheme) {
  Mlp mlp(spec);
  for (size_t l = 0; l < mlp.weights().size(); ++l) {
    Matrix& w = mlp.weights()[l];
    if (scheme == InitScheme::fan_in_uniform) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(w.cols()));
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
      Vector& b = mlp.biases()[l];
      for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = dist(rng);
    } else if (scheme == InitScheme::he_uniform) {
      const double bound = std::sqrt(6.0 / static_cast<double>(w.cols()));
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
    } else {
      std::normal_distribution<double> dist(0.0, 1.0);
      for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
    }
  }
  return mlp;
}

ForwardResult forward(const Mlp& mlp, const Matrix& x) {
  if (x.cols() != mlp.spec().input_width()) {
    throw InvalidInput("forward: input has " + std::to_string(x.cols()) + " columns, expected " +
                       std::to_string(mlp.spec().input_width()));
  }
  ForwardResult result;
  Tape& tape = result.tape;
  tape.source = &mlp;
  tape.version = mlp.version();
  const int layers = mlp.spec().layer_count();
  tape.inputs.reserve(static_cast<size_t>(layers));
  tape.pre_activations.reserve(static_cast<size_t>(layers));

  Matrix h = x;
  for (int l = 0; l < layers; ++l) {
    const auto& w = mlp.weights()[static_cast<size_t>(l)];
    const auto& b = mlp.biases()[static_cast<size_t>(l)];
    Matrix z = h * w.transpose();
    z.rowwise() += b.transpose();
    tape.inputs.push_back(std::move(h));
    h = mlp.spec().is_activated(l) ? Matrix(z.cwiseMax(0.0)) : z;
    tape.pre_activations.push_back(std::move(z));
  }
  if (!h.allFinite()) throw NonFiniteLoss("forward: non-finite activations");
  result.output = std::move(h);
  return result;
}

Matrix predict(const Mlp& mlp, const Matrix& x) {
  require(x.cols() == mlp.spec().input_width(), "predict: input width mismatch");
  Matrix h = x;
  for (int l = 0; l < mlp.spec().layer_count(); ++l) {
    Matrix z = h * mlp.weights()[static_cast<size_t>(l)].transpose();
    z.rowwise() += mlp.biases()[static_cast<size_t>(l)].transpose();
    h = mlp.spec().is_activated(l) ? Matrix(z.cwiseMax(0.0)) : std::move(z);
  }
  return h;
}

BackwardResult backward(const Mlp& mlp, const Tape& tape, const Matrix& grad_output) {
  const int layers = mlp.spec().layer_count();
  if (tape.source != &mlp || tape.version != mlp.version() ||
      static_cast<int>(tape.inputs.size()) != layers) {
    throw ContractViolation("backward: tape does not belong to this network state");
  }
  const Eigen::Index batch = tape.inputs.front().rows();
  if (grad_output.rows() != batch || grad_output.cols() != mlp.spec().output_width()) {
    throw ContractViolation("backward: gradient shape does not match the forward output");
  }

  BackwardResult result;
  result.grads = mlp.zeros_like();
  Matrix delta = grad_output;
  for (int l = layers - 1; l >= 0; --l) {
    const auto idx = static_cast<size_t>(l);
    if (mlp.spec().is_activated(l)) {
      delta = delta.cwiseProduct(
          (tape.pre_activations[idx].array() > 0.0).cast<double>().matrix());
    }
    result.grads.weights[idx].noalias() = delta.transpose() * tape.inputs[idx];
    result.grads.biases[idx] = delta.colwise().sum().transpose();
    delta = delta * mlp.weights()[idx];
  }
  if (!delta.allFinite() || !result.grads.all_finite())
    throw NonFiniteLoss("backward: non-finite gradient");
  result.grad_input = std::move(delta);
  return result;
}

AdamState AdamState::for_mlp(const Mlp& mlp, double learning_rate, double weight_decay) {
  AdamState state;
  state.first_moment = mlp.zeros_like();
  state.second_moment = mlp.zeros_like();
  state.learning_rate = learning_rate;
  state.weight_decay = weight_decay;
  return state;
}

void adamw_step(Mlp& mlp, const MlpGrads& grads, AdamState& state) {
  require(grads.weights.size() == mlp.weights().size(), "adamw_step: layer count mismatch");
  if (!grads.all_finite()) throw NonFiniteLoss("adamw_step: non-finite gradient");

  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double bias1 = 1.0 - std::pow(state.beta1, t);
  const double bias2 = 1.0 - std::pow(state.beta2, t);
  const double lr = state.learning_rate;

  auto update = [&](auto& param, const auto& grad, auto& m, auto& v, bool decay) {
    m = state.beta1 * m + (1.0 - state.beta1) * grad;
    v = state.beta2 * v + (1.0 - state.beta2) * grad.cwiseProduct(grad);
    auto step = ((m.array() / bias1) / ((v.array() / bias2).sqrt() + state.epsilon)).matrix();
    if (decay) {
      param -= lr * (step + state.weight_decay * param);
    } else {
      param -= lr * step;
    }
  };

  for (size_t l = 0; l < mlp.weights().size(); ++l) {
    require(grads.weights[l].rows() == mlp.weights()[l].rows() &&
                grads.weights[l].cols() == mlp.weights()[l].cols(),
            "adamw_step: gradient shape mismatch");
    update(mlp.weights()[l], grads.weights[l], state.first_moment.weights[l],
           state.second_moment.weights[l], true);
    update(mlp.biases()[l], grads.biases[l], state.first_moment.biases[l],
           state.second_moment.biases[l], false);
  }
  mlp.touch();
}

// Checkpoint layout (whitespace separated, one record per line):
//   mvgcca-mlp 1
//   widths <n> w_0 ... w_{n-1}
//   activate_last_hidden <0|1>
//   then per layer: "layer <l>", the weight rows (out lines of in values),
//   and one line of out bias values; values printed with 17 significant digits.
void save_mlp(const Mlp& mlp, std::ostream& out) {
  const auto& widths = mlp.spec().layer_widths;
  out << "mvgcca-mlp 1\nwidths " << widths.size();
  for (int w : widths) out << ' ' << w;
  out << "\nactivate_last_hidden " << (mlp.spec().activate_last_hidden ? 1 : 0) << '\n';
  out << std::setprecision(17);
  for (size_t l = 0; l < mlp.weights().size(); ++l) {
    out << "layer " << l << '\n';
    const Matrix& w = mlp.weights()[l];
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) out << (j ? " " : "") << w(i, j);
      out << '\n';
    }
    const Vector& b = mlp.biases()[l];
    for (Eigen::Index i = 0; i < b.size(); ++i) out << (i ? " " : "") << b(i);
    out << '\n';
  }
}

Mlp load_mlp(std::istream& in) {
  std::string tag;
  int version = 0;
  in >> tag >> version;
  if (tag != "mvgcca-mlp" || version != 1) throw InvalidInput("load_mlp: not an mlp checkpoint");
  size_t n = 0;
  in >> tag >> n;
  if (tag != "widths" || n < 2) throw InvalidInput("load_mlp: bad widths record");
  MlpSpec spec;
  spec.layer_widths.resize(n);
  for (auto& w : spec.layer_widths) in >> w;
  int activate = 1;
  in >> tag >> activate;
  if (tag != "activate_last_hidden") throw InvalidInput("load_mlp: bad activation record");
  spec.activate_last_hidden = activate != 0;
  Mlp mlp(spec);
  for (size_t l = 0; l < mlp.weights().size(); ++l) {
    size_t index = 0;
    in >> tag >> index;
    if (tag != "layer" || index != l) throw InvalidInput("load_mlp: bad layer record");
    Matrix& w = mlp.weights()[l];
    for (Eigen::Index i = 0; i < w.size(); ++i) in >> w.data()[i];
    Vector& b = mlp.biases()[l];
    for (Eigen::Index i = 0; i < b.size(); ++i) in >> b(i);
  }
  if (!in) throw InvalidInput("load_mlp: truncated checkpoint");
  return mlp;
}

void save_mlp(const Mlp& mlp, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  save_mlp(mlp, out);
  if (!out) throw std::runtime_error("failed writing " + path);
}

Mlp load_mlp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  return load_mlp(in);
}

}  // namespace mvgcca
