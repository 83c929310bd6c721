#include "rtc/env.hpp"
#include "rtc/errors.hpp"
#include "rtc/text_format.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace rtc {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw UsageError("malformed number '" + std::string(s) + "'");
  }
  return v;
}

long long parse_int(std::string_view s) {
  long long v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw UsageError("malformed integer '" + std::string(s) + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open '" + tmp + "' for writing");
    os << content;
    if (!os.flush()) throw IoError("write to '" + tmp + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename '" + tmp + "' to '" + path + "': " + ec.message());
}

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::string git_blob_hash(std::string_view content) {
  const std::string header = "blob " + std::to_string(content.size()) + std::string(1, '\0');
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr);
  EVP_DigestUpdate(ctx, header.data(), header.size());
  EVP_DigestUpdate(ctx, content.data(), content.size());
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xf]);
  }
  return out;
}

}  // namespace rtc

namespace rtc::env {
namespace {

nlohmann::json config_json(const EpisodeConfig& c) {
  return {{"horizon", c.horizon},
          {"goal_x_min", c.goal_x_min},
          {"goal_x_max", c.goal_x_max},
          {"goal_abs_y_min", c.goal_abs_y_min},
          {"goal_abs_y_max", c.goal_abs_y_max},
          {"goal_displacement", c.goal_displacement},
          {"goal_threshold", c.goal_threshold},
          {"p_lower", c.p_lower},
          {"resample_steps", c.resample_steps},
          {"resample_prob", c.resample_prob}};
}

EpisodeConfig config_from_json(const nlohmann::json& j) {
  EpisodeConfig c;
  c.horizon = j.at("horizon").get<int>();
  c.goal_x_min = j.at("goal_x_min").get<double>();
  c.goal_x_max = j.at("goal_x_max").get<double>();
  c.goal_abs_y_min = j.at("goal_abs_y_min").get<double>();
  c.goal_abs_y_max = j.at("goal_abs_y_max").get<double>();
  c.goal_displacement = j.at("goal_displacement").get<double>();
  c.goal_threshold = j.at("goal_threshold").get<double>();
  c.p_lower = j.at("p_lower").get<double>();
  c.resample_steps = j.at("resample_steps").get<int>();
  c.resample_prob = j.at("resample_prob").get<double>();
  return c;
}

}  // namespace

void write_dataset(const std::string& path, const Dataset& data) {
  const int T = data.manifest.config.horizon;
  std::string out = "T=" + std::to_string(T) + " n=" + std::to_string(data.episodes.size()) +
                    " seed=" + std::to_string(data.manifest.seed) + "\n";
  for (std::size_t e = 0; e < data.episodes.size(); ++e) {
    const Trajectory& tr = data.episodes[e];
    for (int t = 0; t <= T; ++t) {
      out += std::to_string(e);
      out += ',';
      out += std::to_string(t);
      for (int k = 0; k < kObsDim; ++k) {
        out += ',';
        out += format_double(tr.observations(t, k));
      }
      for (int k = 0; k < kActDim; ++k) {
        out += ',';
        if (t < T) out += format_double(tr.actions(t, k));
      }
      out += '\n';
    }
  }
  write_file_atomic(path, out);

  nlohmann::json manifest = {{"format", "double-goal-dataset"},
                             {"version", 1},
                             {"seed", data.manifest.seed},
                             {"n", data.manifest.n},
                             {"config", config_json(data.manifest.config)}};
  write_file_atomic(path + ".manifest.json", manifest.dump(2) + "\n");
}

Dataset read_dataset(const std::string& path) {
  const std::string text = read_file(path);
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) throw IoError("'" + path + "': empty dataset file");

  Dataset data;
  int T = -1;
  long long n = -1;
  for (std::string_view field : split(line, ' ')) {
    const auto eq = field.find('=');
    if (eq == std::string_view::npos) throw IoError("'" + path + "': malformed header");
    const auto key = field.substr(0, eq);
    const auto val = field.substr(eq + 1);
    if (key == "T") {
      T = static_cast<int>(parse_int(val));
    } else if (key == "n") {
      n = parse_int(val);
    } else if (key == "seed") {
      data.manifest.seed = std::stoull(std::string(val));
    } else {
      throw IoError("'" + path + "': unknown header key '" + std::string(key) + "'");
    }
  }
  if (T < 1 || n < 1) throw IoError("'" + path + "': header lacks T or n");

  if (std::filesystem::exists(path + ".manifest.json")) {
    const auto j = nlohmann::json::parse(read_file(path + ".manifest.json"));
    data.manifest.config = config_from_json(j.at("config"));
  }
  data.manifest.config.horizon = T;
  data.manifest.n = static_cast<int>(n);

  data.episodes.resize(static_cast<std::size_t>(n));
  for (auto& tr : data.episodes) {
    tr.observations.resize(T + 1, kObsDim);
    tr.actions.resize(T, kActDim);
  }
  long long rows = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 2 + kObsDim + kActDim) throw IoError("'" + path + "': malformed row");
    const long long e = parse_int(f[0]);
    const long long t = parse_int(f[1]);
    if (e < 0 || e >= n || t < 0 || t > T) throw IoError("'" + path + "': row index out of range");
    Trajectory& tr = data.episodes[static_cast<std::size_t>(e)];
    for (int k = 0; k < kObsDim; ++k) tr.observations(t, k) = parse_double(f[2 + k]);
    if (t < T) {
      for (int k = 0; k < kActDim; ++k) tr.actions(t, k) = parse_double(f[2 + kObsDim + k]);
    }
    ++rows;
  }
  if (rows != n * (T + 1)) throw IoError("'" + path + "': expected " + std::to_string(n * (T + 1)) + " rows");

  for (auto& tr : data.episodes) {
    tr.scenario.lower.start = tr.observations.block<1, 2>(0, 2).transpose();
    tr.scenario.upper.start = tr.observations.block<1, 2>(0, 4).transpose();
    tr.scenario.lower.velocity = tr.observations.block<1, 2>(1, 2).transpose() - tr.scenario.lower.start;
    tr.scenario.upper.velocity = tr.observations.block<1, 2>(1, 4).transpose() - tr.scenario.upper.start;
  }
  return data;
}

}  // namespace rtc::env
