#include "rtc/checkpoint.hpp"

#include "rtc/errors.hpp"
#include "rtc/text_format.hpp"

#include <json.hpp>

#include <cmath>

namespace rtc {
namespace {

using nlohmann::json;

json array_to_json(const ad::Array& a) {
  json data = json::array();
  for (ad::Index i = 0; i < a.size(); ++i) data.push_back(a.data()[i]);
  return {{"shape", {a.rows(), a.cols()}}, {"data", std::move(data)}};
}

ad::Array array_from_json(const json& j) {
  const auto rows = j.at("shape").at(0).get<ad::Index>();
  const auto cols = j.at("shape").at(1).get<ad::Index>();
  const json& data = j.at("data");
  if (rows < 0 || cols < 0 || static_cast<ad::Index>(data.size()) != rows * cols) {
    throw IoError("checkpoint: array payload does not match its shape");
  }
  ad::Array a(rows, cols);
  for (ad::Index i = 0; i < a.size(); ++i) a.data()[i] = data[static_cast<std::size_t>(i)].get<double>();
  return a;
}

json params_to_json(const ad::ParameterSet& p) {
  json j = json::object();
  for (const auto& [name, value] : p) j[name] = array_to_json(value);
  return j;
}

ad::ParameterSet params_from_json(const json& j) {
  ad::ParameterSet p;
  for (const auto& [name, value] : j.items()) p.add(name, array_from_json(value));
  return p;
}

json adam_to_json(const ad::AdamState& s) {
  json m = json::object();
  json v = json::object();
  for (const auto& [name, value] : s.first_moment) m[name] = array_to_json(value);
  for (const auto& [name, value] : s.second_moment) v[name] = array_to_json(value);
  return {{"step", s.step}, {"first_moment", std::move(m)}, {"second_moment", std::move(v)}};
}

ad::AdamState adam_from_json(const json& j) {
  ad::AdamState s;
  s.step = j.at("step").get<long>();
  for (const auto& [name, value] : j.at("first_moment").items()) s.first_moment[name] = array_from_json(value);
  for (const auto& [name, value] : j.at("second_moment").items()) s.second_moment[name] = array_from_json(value);
  return s;
}

}  // namespace

std::string checkpoint_to_json(const Checkpoint& c) {
  const auto& st = c.state;
  json j;
  j["format"] = "rtclab-checkpoint";
  j["version"] = 1;
  j["algo"] = train::to_string(c.algo);
  j["seed"] = c.seed;
  j["step"] = st.step;
  j["rng"] = {{"seed", c.seed}, {"next_stream", "train/" + std::to_string(st.step)}};
  j["best_return"] = std::isfinite(st.best_return) ? json(st.best_return) : json(nullptr);
  j["best_step"] = st.best_step;
  j["config"] = c.config_text;
  j["gen"] = params_to_json(st.gen);
  j["disc"] = params_to_json(st.disc);
  j["gen_opt"] = adam_to_json(st.gen_opt);
  j["disc_opt"] = adam_to_json(st.disc_opt);
  return j.dump(1) + "\n";
}

Checkpoint checkpoint_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    if (j.at("format") != "rtclab-checkpoint" || j.at("version") != 1) throw IoError("checkpoint: unknown format");
    Checkpoint c;
    c.algo = train::parse_algo(j.at("algo").get<std::string>());
    c.seed = j.at("seed").get<std::uint64_t>();
    c.config_text = j.at("config").get<std::string>();
    auto& st = c.state;
    st.step = j.at("step").get<long>();
    st.best_return = j.at("best_return").is_null() ? -std::numeric_limits<double>::infinity()
                                                   : j.at("best_return").get<double>();
    st.best_step = j.at("best_step").get<long>();
    st.gen = params_from_json(j.at("gen"));
    st.disc = params_from_json(j.at("disc"));
    st.gen_opt = adam_from_json(j.at("gen_opt"));
    st.disc_opt = adam_from_json(j.at("disc_opt"));
    return c;
  } catch (const json::exception& e) {
    throw IoError(std::string("checkpoint: ") + e.what());
  } catch (const UsageError& e) {
    throw IoError(std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::string& path, const Checkpoint& c) { write_file_atomic(path, checkpoint_to_json(c)); }

Checkpoint load_checkpoint(const std::string& path) { return checkpoint_from_json(read_file(path)); }

Checkpoint make_checkpoint(const train::Trainer& trainer) {
  return {trainer.algo(), trainer.seed(), serialize_config(trainer.config()), trainer.state()};
}

void restore(train::Trainer& trainer, const Checkpoint& c) {
  if (c.algo != trainer.algo()) throw UsageError("checkpoint algorithm does not match the run");
  if (c.seed != trainer.seed()) throw UsageError("checkpoint seed does not match the run");
  ExperimentConfig saved = parse_config(c.config_text);
  saved.train.steps = trainer.config().train.steps;  // a resumed run may go further
  if (saved != trainer.config()) throw UsageError("checkpoint config does not match the run");
  if (c.state.step > trainer.config().train.steps) throw UsageError("checkpoint is past train.steps");
  const auto& cur = trainer.state();
  auto same_names = [](const ad::ParameterSet& a, const ad::ParameterSet& b) {
    if (a.size() != b.size()) return false;
    for (const auto& [name, value] : a) {
      if (!b.contains(name) || b.at(name).rows() != value.rows() || b.at(name).cols() != value.cols()) return false;
    }
    return true;
  };
  if (!same_names(cur.gen, c.state.gen) || !same_names(cur.disc, c.state.disc)) {
    throw UsageError("checkpoint parameters do not match the model");
  }
  trainer.state() = c.state;
}

}  // namespace rtc
