#include "rtc/config.hpp"

#include "rtc/errors.hpp"
#include "rtc/text_format.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <functional>
#include <sstream>

namespace rtc {
namespace {

struct Field {
  std::string section;
  std::string key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, std::string_view)> set;
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
std::string to_text(const T& v) {
  if constexpr (std::is_same_v<T, bool>) {
    return v ? "true" : "false";
  } else if constexpr (std::is_floating_point_v<T>) {
    return format_double(v);
  } else {
    return std::to_string(v);
  }
}

template <class T>
T from_text(std::string_view s) {
  if constexpr (std::is_same_v<T, bool>) {
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw UsageError("malformed boolean '" + std::string(s) + "'");
  } else if constexpr (std::is_floating_point_v<T>) {
    return parse_double(s);
  } else {
    return static_cast<T>(parse_int(s));
  }
}

template <class T, class Proj>
Field field(std::string section, std::string key, Proj proj) {
  return Field{std::move(section), std::move(key),
               [proj](const ExperimentConfig& c) { return to_text<T>(proj(const_cast<ExperimentConfig&>(c))); },
               [proj](ExperimentConfig& c, std::string_view v) { proj(c) = from_text<T>(v); }};
}

std::string latent_mode_text(nets::LatentMode m) {
  return m == nets::LatentMode::discrete ? "discrete" : "continuous";
}

nets::LatentMode parse_latent_mode(std::string_view s) {
  if (s == "continuous") return nets::LatentMode::continuous;
  if (s == "discrete") return nets::LatentMode::discrete;
  throw UsageError("unknown latent_mode '" + std::string(s) + "'");
}

nets::DiscMode parse_disc_mode(std::string_view s) {
  if (s == "trajectory") return nets::DiscMode::trajectory;
  if (s == "per_step") return nets::DiscMode::per_step;
  throw UsageError("unknown disc_mode '" + std::string(s) + "'");
}

const std::vector<Field>& fields() {
  static const std::vector<Field> all = [] {
    std::vector<Field> f;
    // [env]
    f.push_back(field<int>("env", "horizon", [](ExperimentConfig& c) -> int& { return c.env.horizon; }));
    f.push_back(field<double>("env", "goal_x_min", [](ExperimentConfig& c) -> double& { return c.env.goal_x_min; }));
    f.push_back(field<double>("env", "goal_x_max", [](ExperimentConfig& c) -> double& { return c.env.goal_x_max; }));
    f.push_back(field<double>("env", "goal_abs_y_min", [](ExperimentConfig& c) -> double& { return c.env.goal_abs_y_min; }));
    f.push_back(field<double>("env", "goal_abs_y_max", [](ExperimentConfig& c) -> double& { return c.env.goal_abs_y_max; }));
    f.push_back(field<double>("env", "goal_displacement", [](ExperimentConfig& c) -> double& { return c.env.goal_displacement; }));
    f.push_back(field<double>("env", "goal_threshold", [](ExperimentConfig& c) -> double& { return c.env.goal_threshold; }));
    f.push_back(field<double>("env", "p_lower", [](ExperimentConfig& c) -> double& { return c.env.p_lower; }));
    f.push_back(field<int>("env", "resample_steps", [](ExperimentConfig& c) -> int& { return c.env.resample_steps; }));
    f.push_back(field<double>("env", "resample_prob", [](ExperimentConfig& c) -> double& { return c.env.resample_prob; }));
    // [model]
    f.push_back(field<int>("model", "hidden", [](ExperimentConfig& c) -> int& { return c.model.hidden; }));
    f.push_back(field<int>("model", "disc_embed", [](ExperimentConfig& c) -> int& { return c.model.disc_embed; }));
    f.push_back(field<int>("model", "encoder_embed", [](ExperimentConfig& c) -> int& { return c.model.encoder_embed; }));
    f.push_back(field<int>("model", "pos_embed_dim", [](ExperimentConfig& c) -> int& { return c.model.pos_embed_dim; }));
    f.push_back(Field{"model", "latent_mode",
                      [](const ExperimentConfig& c) { return latent_mode_text(c.model.latent_mode); },
                      [](ExperimentConfig& c, std::string_view v) { c.model.latent_mode = parse_latent_mode(v); }});
    f.push_back(field<int>("model", "latent_dim", [](ExperimentConfig& c) -> int& { return c.model.latent_dim; }));
    f.push_back(field<int>("model", "discrete_blocks", [](ExperimentConfig& c) -> int& { return c.model.discrete_blocks; }));
    f.push_back(field<int>("model", "discrete_block_size", [](ExperimentConfig& c) -> int& { return c.model.discrete_block_size; }));
    f.push_back(field<double>("model", "log_std_min", [](ExperimentConfig& c) -> double& { return c.model.log_std_min; }));
    f.push_back(field<double>("model", "log_std_max", [](ExperimentConfig& c) -> double& { return c.model.log_std_max; }));
    f.push_back(field<double>("model", "logit_clamp", [](ExperimentConfig& c) -> double& { return c.model.logit_clamp; }));
    f.push_back(field<double>("model", "init_log_std", [](ExperimentConfig& c) -> double& { return c.model.init_log_std; }));
    f.push_back(Field{"model", "disc_mode",
                      [](const ExperimentConfig& c) {
                        return std::string(c.model.disc_mode == nets::DiscMode::trajectory ? "trajectory" : "per_step");
                      },
                      [](ExperimentConfig& c, std::string_view v) { c.model.disc_mode = parse_disc_mode(v); }});
    // [train]
    f.push_back(field<long>("train", "steps", [](ExperimentConfig& c) -> long& { return c.train.steps; }));
    f.push_back(field<int>("train", "batch_size", [](ExperimentConfig& c) -> int& { return c.train.batch_size; }));
    f.push_back(field<int>("train", "dataset_size", [](ExperimentConfig& c) -> int& { return c.train.dataset_size; }));
    f.push_back(field<double>("train", "encoder_fraction", [](ExperimentConfig& c) -> double& { return c.train.encoder_fraction; }));
    f.push_back(field<double>("train", "encoder_fraction_end", [](ExperimentConfig& c) -> double& { return c.train.encoder_fraction_end; }));
    f.push_back(field<long>("train", "fraction_anneal_steps", [](ExperimentConfig& c) -> long& { return c.train.fraction_anneal_steps; }));
    f.push_back(field<double>("train", "lambda_adv", [](ExperimentConfig& c) -> double& { return c.train.lambda_adv; }));
    f.push_back(field<double>("train", "beta", [](ExperimentConfig& c) -> double& { return c.train.beta; }));
    f.push_back(field<double>("train", "lr_bc", [](ExperimentConfig& c) -> double& { return c.train.lr_bc; }));
    f.push_back(field<double>("train", "lr_adversarial", [](ExperimentConfig& c) -> double& { return c.train.lr_adversarial; }));
    f.push_back(field<double>("train", "lr_disc", [](ExperimentConfig& c) -> double& { return c.train.lr_disc; }));
    f.push_back(field<int>("train", "disc_updates", [](ExperimentConfig& c) -> int& { return c.train.disc_updates; }));
    f.push_back(field<double>("train", "clip_norm", [](ExperimentConfig& c) -> double& { return c.train.clip_norm; }));
    f.push_back(field<double>("train", "bc_weight", [](ExperimentConfig& c) -> double& { return c.train.bc_weight; }));
    f.push_back(field<double>("train", "info_weight", [](ExperimentConfig& c) -> double& { return c.train.info_weight; }));
    f.push_back(Field{"train", "kl_mode",
                      [](const ExperimentConfig& c) { return train::to_string(c.train.kl_mode); },
                      [](ExperimentConfig& c, std::string_view v) { c.train.kl_mode = train::parse_kl_mode(v); }});
    f.push_back(field<bool>("train", "learned_prior", [](ExperimentConfig& c) -> bool& { return c.train.learned_prior; }));
    // [eval]
    f.push_back(field<long>("eval", "every", [](ExperimentConfig& c) -> long& { return c.eval.every; }));
    f.push_back(field<int>("eval", "episodes", [](ExperimentConfig& c) -> int& { return c.eval.episodes; }));
    f.push_back(field<int>("eval", "ade_episodes", [](ExperimentConfig& c) -> int& { return c.eval.ade_episodes; }));
    f.push_back(field<int>("eval", "ade_k", [](ExperimentConfig& c) -> int& { return c.eval.ade_k; }));
    f.push_back(field<double>("eval", "smoothing", [](ExperimentConfig& c) -> double& { return c.eval.smoothing; }));
    f.push_back(field<int>("eval", "chunk", [](ExperimentConfig& c) -> int& { return c.eval.chunk; }));
    return f;
  }();
  return all;
}

const Field& find_field(std::string_view section, std::string_view key) {
  for (const Field& f : fields()) {
    if (f.section == section && f.key == key) return f;
  }
  throw UsageError("unknown config key '" + std::string(section) + "." + std::string(key) + "'");
}

}  // namespace

void ExperimentConfig::validate() const {
  env.validate();
  train.validate();
  eval.validate();
  if (model.horizon != env.horizon) throw UsageError("model horizon must equal env.horizon");
  if (model.hidden < 1 || model.disc_embed < 1 || model.encoder_embed < 1 || model.pos_embed_dim < 0) {
    throw UsageError("model widths must be positive");
  }
  if (model.latent_dim < 1 || model.discrete_blocks < 1 || model.discrete_block_size < 2) {
    throw UsageError("model latent sizes out of range");
  }
  if (!(model.log_std_min < model.log_std_max)) throw UsageError("model.log_std_min must be < log_std_max");
  if (!(model.logit_clamp > 0.0)) throw UsageError("model.logit_clamp must be > 0");
}

void set_config_value(ExperimentConfig& cfg, std::string_view dotted_key, std::string_view value) {
  const auto dot = dotted_key.find('.');
  if (dot == std::string_view::npos) throw UsageError("config key must be section.key: '" + std::string(dotted_key) + "'");
  find_field(dotted_key.substr(0, dot), dotted_key.substr(dot + 1)).set(cfg, trim(value));
  cfg.model.horizon = cfg.env.horizon;
}

ExperimentConfig parse_config(std::string_view text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream is{std::string(text)};
  try {
    pt::ini_parser::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  ExperimentConfig cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw UsageError("config key '" + section + "' is outside a section");
    }
    for (const auto& [key, node] : body) {
      try {
        find_field(section, key).set(cfg, trim(node.data()));
      } catch (const UsageError& e) {
        throw UsageError(std::string("config: ") + e.what());
      }
    }
  }
  cfg.model.horizon = cfg.env.horizon;
  return cfg;
}

ExperimentConfig load_config(const std::string& path) { return parse_config(read_file(path)); }

std::string serialize_config(const ExperimentConfig& cfg) {
  std::string out;
  std::string section;
  for (const Field& f : fields()) {
    if (f.section != section) {
      if (!section.empty()) out += "\n";
      section = f.section;
      out += "[" + section + "]\n";
    }
    out += f.key + " = " + f.get(cfg) + "\n";
  }
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const Field& f : fields()) keys.push_back(f.section + "." + f.key);
  return keys;
}

}  // namespace rtc
