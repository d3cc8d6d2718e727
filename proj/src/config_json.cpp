#include "mvgcca/config_json.hpp"

#include <cmath>
#include <limits>

namespace mvgcca {
namespace {

// JSON has no infinities; the disabled-private sentinel is stored as a string.
nlohmann::json encode_db(double db) {
  if (std::isinf(db)) return db > 0 ? "inf" : "-inf";
  return db;
}

double decode_db(const nlohmann::json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw InvalidInput("bad power ratio '" + s + "'");
  }
  return j.get<double>();
}

}  // namespace

std::string to_string(ValidationTarget target) {
  return target == ValidationTarget::split_local ? "split-local" : "shared";
}

ValidationTarget parse_validation_target(const std::string& name) {
  if (name == "split-local") return ValidationTarget::split_local;
  if (name == "shared") return ValidationTarget::shared;
  throw InvalidInput("unknown validation target '" + name + "'");
}

void to_json(nlohmann::json& j, const SynthConfig& c) {
  j = nlohmann::json{
      {"class_probabilities", c.class_probabilities},
      {"views", c.views},
      {"private_dims", c.private_dims},
      {"view_dims", c.view_dims},
      {"generator_hidden_width", c.generator_hidden_width},
      {"generator_hidden_layers", c.generator_hidden_layers},
      {"generator_activate_last_hidden", c.generator_activate_last_hidden},
      {"power_ratio_db", encode_db(c.power_ratio_db)},
      {"centered_common_power", c.centered_common_power},
      {"private_mean_scale", c.private_mean_scale},
      {"covariance_jitter", c.covariance_jitter},
      {"standardize", c.standardize},
      {"train_size", c.train_size},
      {"validation_size", c.validation_size},
      {"test_size", c.test_size},
      {"seed", c.seed},
  };
}

void from_json(const nlohmann::json& j, SynthConfig& c) {
  j.at("class_probabilities").get_to(c.class_probabilities);
  j.at("views").get_to(c.views);
  j.at("private_dims").get_to(c.private_dims);
  j.at("view_dims").get_to(c.view_dims);
  j.at("generator_hidden_width").get_to(c.generator_hidden_width);
  j.at("generator_hidden_layers").get_to(c.generator_hidden_layers);
  j.at("generator_activate_last_hidden").get_to(c.generator_activate_last_hidden);
  c.power_ratio_db = decode_db(j.at("power_ratio_db"));
  j.at("centered_common_power").get_to(c.centered_common_power);
  j.at("private_mean_scale").get_to(c.private_mean_scale);
  j.at("covariance_jitter").get_to(c.covariance_jitter);
  j.at("standardize").get_to(c.standardize);
  j.at("train_size").get_to(c.train_size);
  j.at("validation_size").get_to(c.validation_size);
  j.at("test_size").get_to(c.test_size);
  j.at("seed").get_to(c.seed);
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{
      {"method", to_string(c.method)},
      {"lambda", c.lambda},
      {"outer_iterations", c.outer_iterations},
      {"learning_rate", c.learning_rate},
      {"weight_decay", c.weight_decay},
      {"batch_size", c.batch_size},
      {"latent_dim", c.latent_dim},
      {"hidden_width", c.hidden_width},
      {"hidden_layers", c.hidden_layers},
      {"activate_last_hidden", c.activate_last_hidden},
      {"normalize_r", c.normalize_r},
      {"init", to_string(c.init)},
      {"validation_target", to_string(c.validation_target)},
      {"seed", c.seed},
  };
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  c.method = parse_method(j.at("method").get<std::string>());
  j.at("lambda").get_to(c.lambda);
  j.at("outer_iterations").get_to(c.outer_iterations);
  j.at("learning_rate").get_to(c.learning_rate);
  j.at("weight_decay").get_to(c.weight_decay);
  j.at("batch_size").get_to(c.batch_size);
  j.at("latent_dim").get_to(c.latent_dim);
  j.at("hidden_width").get_to(c.hidden_width);
  j.at("hidden_layers").get_to(c.hidden_layers);
  j.at("activate_last_hidden").get_to(c.activate_last_hidden);
  j.at("normalize_r").get_to(c.normalize_r);
  c.init = parse_init_scheme(j.at("init").get<std::string>());
  c.validation_target = parse_validation_target(j.at("validation_target").get<std::string>());
  j.at("seed").get_to(c.seed);
}

}  // namespace mvgcca
