#include "mvgcca/synthgen.hpp"

#include "mvgcca/config_json.hpp"
#include "mvgcca/csv.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

namespace mvgcca {
namespace {

std::string view_file(const std::string& dir, const std::string& split, size_t k) {
  return dir + "/" + split + "_view" + std::to_string(k) + ".csv";
}

LabeledMultiviewDataset slice_rows(const std::vector<Matrix>& views, const Latents& latents,
                                   Eigen::Index begin, Eigen::Index count) {
  LabeledMultiviewDataset out;
  for (const Matrix& v : views) out.views.push_back(v.middleRows(begin, count));
  out.labels.assign(latents.labels.begin() + begin, latents.labels.begin() + begin + count);
  out.latent_g = latents.g.middleRows(begin, count);
  for (const Matrix& c : latents.c) out.latent_c.push_back(c.middleRows(begin, count));
  return out;
}

double common_power(const Matrix& g, bool centered_common_power) {
  return centered_common_power ? mean_squared_norm(centered(g)) : mean_squared_norm(g);
}

}  // namespace

void SynthConfig::validate() const {
  require(classes() >= 1, "SynthConfig: need at least one class");
  double total = 0.0;
  for (double p : class_probabilities) {
    require(p >= 0.0, "SynthConfig: probabilities must be non-negative");
    total += p;
  }
  require(std::abs(total - 1.0) <= 1e-12, "SynthConfig: probabilities must sum to 1");
  require(views >= 1, "SynthConfig: need at least one view");
  require(static_cast<int>(private_dims.size()) == views &&
              static_cast<int>(view_dims.size()) == views,
          "SynthConfig: one private and view dimension per view required");
  for (int d : private_dims) require(d > 0, "SynthConfig: private dims must be positive");
  for (int d : view_dims) require(d > 0, "SynthConfig: view dims must be positive");
  require(generator_hidden_width > 0 && generator_hidden_layers >= 0,
          "SynthConfig: invalid generator shape");
  require(train_size > 0 && validation_size >= 0 && test_size >= 0,
          "SynthConfig: invalid split sizes");
  require(covariance_jitter > 0.0, "SynthConfig: covariance jitter must be positive");
  require(!std::isnan(power_ratio_db), "SynthConfig: power ratio is NaN");
}

PrivateMixture draw_mixture(const SynthConfig& config, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  PrivateMixture mixture;
  for (int k = 0; k < config.views; ++k) {
    const int l = config.private_dims[static_cast<size_t>(k)];
    std::vector<PrivateMixture::Component> per_class;
    for (int z = 0; z < config.classes(); ++z) {
      Matrix a(l, l);
      for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = normal(rng);
      PrivateMixture::Component comp;
      comp.covariance = a * a.transpose();
      comp.covariance.diagonal().array() += config.covariance_jitter;
      comp.cholesky = comp.covariance.llt().matrixL();
      comp.mean = Vector::Zero(l);
      if (config.private_mean_scale != 0.0) {
        for (Eigen::Index i = 0; i < l; ++i) comp.mean(i) = config.private_mean_scale * normal(rng);
      }
      per_class.push_back(std::move(comp));
    }
    mixture.components.push_back(std::move(per_class));
  }
  return mixture;
}

Latents sample_latents(const SynthConfig& config, const PrivateMixture& mixture, int count,
                       std::mt19937_64& rng) {
  config.validate();
  std::discrete_distribution<int> categorical(config.class_probabilities.begin(),
                                              config.class_probabilities.end());
  std::normal_distribution<double> normal(0.0, 1.0);

  Latents out;
  out.labels.resize(static_cast<size_t>(count));
  out.g = Matrix::Zero(count, config.classes());
  for (int m = 0; m < count; ++m) {
    const int z = categorical(rng);
    out.labels[static_cast<size_t>(m)] = z;
    out.g(m, z) = 1.0;
  }
  for (int k = 0; k < config.views; ++k) {
    const int l = config.private_dims[static_cast<size_t>(k)];
    Matrix c(count, l);
    Vector draw(l);
    for (int m = 0; m < count; ++m) {
      const auto& comp = mixture.components[static_cast<size_t>(k)]
                                           [static_cast<size_t>(out.labels[static_cast<size_t>(m)])];
      for (int i = 0; i < l; ++i) draw(i) = normal(rng);
      c.row(m) = (comp.mean + comp.cholesky * draw).transpose();
    }
    out.c.push_back(std::move(c));
  }
  return out;
}

Latents sample_latents(const SynthConfig& config, std::mt19937_64& rng) {
  const PrivateMixture mixture = draw_mixture(config, rng);
  return sample_latents(config, mixture, config.total_size(), rng);
}

void apply_power_ratio(const Matrix& g, std::vector<Matrix>& c, double ratio_db,
                       bool centered_common_power) {
  if (std::isinf(ratio_db) && ratio_db > 0.0) {
    for (Matrix& ck : c) ck.setZero();
    return;
  }
  const double pg = common_power(g, centered_common_power);
  require(pg > 0.0, "apply_power_ratio: common factor has zero power");
  const double target = pg / std::pow(10.0, ratio_db / 10.0);
  for (Matrix& ck : c) {
    const double pc = mean_squared_norm(ck);
    require(pc > 0.0, "apply_power_ratio: private factor has zero power");
    ck *= std::sqrt(target / pc);
  }
}

double measured_power_ratio_db(const Matrix& g, const Matrix& c, bool centered_common_power) {
  return 10.0 * std::log10(common_power(g, centered_common_power) / mean_squared_norm(c));
}

SyntheticSplits generate(const SynthConfig& config) {
  config.validate();
  std::seed_seq seq{static_cast<std::uint32_t>(config.seed),
                    static_cast<std::uint32_t>(config.seed >> 32), 0x5eedu};
  std::mt19937_64 rng(seq);

  SyntheticSplits out;
  out.mixture = draw_mixture(config, rng);
  const int f = config.classes();
  for (int k = 0; k < config.views; ++k) {
    const MlpSpec spec = MlpSpec::uniform(
        f + config.private_dims[static_cast<size_t>(k)], config.generator_hidden_width,
        config.generator_hidden_layers, config.view_dims[static_cast<size_t>(k)],
        config.generator_activate_last_hidden);
    out.generators.push_back(init_mlp(spec, rng, InitScheme::standard_normal));
  }

  Latents latents = sample_latents(config, out.mixture, config.total_size(), rng);
  apply_power_ratio(latents.g, latents.c, config.power_ratio_db, config.centered_common_power);

  std::vector<Matrix> views;
  for (int k = 0; k < config.views; ++k) {
    const auto kk = static_cast<size_t>(k);
    Matrix input(latents.g.rows(), f + config.private_dims[kk]);
    input << latents.g, latents.c[kk];
    views.push_back(predict(out.generators[kk], input));
  }

  if (config.standardize) {
    for (Matrix& v : views) {
      const Matrix train_rows = v.topRows(config.train_size);
      const RowVector mean = train_rows.colwise().mean();
      RowVector scale =
          ((train_rows.rowwise() - mean).cwiseAbs2().colwise().sum() / config.train_size)
              .cwiseSqrt();
      for (Eigen::Index j = 0; j < scale.size(); ++j)
        if (!(scale(j) > 1e-12 * std::max(1.0, std::abs(mean(j))))) scale(j) = 1.0;
      v = (v.rowwise() - mean).array().rowwise() / scale.array();
    }
  }

  out.train = slice_rows(views, latents, 0, config.train_size);
  out.validation = slice_rows(views, latents, config.train_size, config.validation_size);
  out.test = slice_rows(views, latents, config.train_size + config.validation_size,
                        config.test_size);
  return out;
}

void write_dataset(const SyntheticSplits& splits, const SynthConfig& config,
                   const std::string& directory) {
  std::filesystem::create_directories(directory);
  const std::pair<const char*, const LabeledMultiviewDataset*> parts[] = {
      {"train", &splits.train}, {"validation", &splits.validation}, {"test", &splits.test}};
  for (const auto& [name, data] : parts) {
    for (size_t k = 0; k < data->views.size(); ++k)
      write_matrix_csv(view_file(directory, name, k), data->views[k], "x");
    write_labels_csv(directory + "/" + name + "_labels.csv", data->labels);
  }
  for (size_t k = 0; k < splits.generators.size(); ++k)
    save_mlp(splits.generators[k], directory + "/generator" + std::to_string(k) + ".mlp");

  nlohmann::json manifest;
  manifest["kind"] = "mvgcca-dataset";
  manifest["synth"] = config;
  std::ofstream out(directory + "/manifest.json");
  out << manifest.dump(2) << '\n';
  if (!out) throw std::runtime_error("failed writing " + directory + "/manifest.json");
}

SyntheticSplits read_dataset(const std::string& directory, SynthConfig* config) {
  std::ifstream in(directory + "/manifest.json");
  if (!in) throw std::runtime_error("cannot read " + directory + "/manifest.json");
  const nlohmann::json manifest = nlohmann::json::parse(in);
  const SynthConfig cfg = manifest.at("synth").get<SynthConfig>();
  if (config) *config = cfg;

  SyntheticSplits out;
  const std::pair<const char*, LabeledMultiviewDataset*> parts[] = {
      {"train", &out.train}, {"validation", &out.validation}, {"test", &out.test}};
  for (const auto& [name, data] : parts) {
    for (int k = 0; k < cfg.views; ++k)
      data->views.push_back(read_matrix_csv(view_file(directory, name, static_cast<size_t>(k))));
    data->labels = read_labels_csv(directory + "/" + name + "_labels.csv");
    for (const Matrix& v : data->views)
      require(v.rows() == static_cast<Eigen::Index>(data->labels.size()),
              "read_dataset: views and labels are not row-aligned in " + std::string(name));
  }
  for (int k = 0; k < cfg.views; ++k) {
    const std::string path = directory + "/generator" + std::to_string(k) + ".mlp";
    if (std::filesystem::exists(path)) out.generators.push_back(load_mlp(path));
  }
  return out;
}

}  // namespace mvgcca
