#pragma once

// Scenario configuration.
//
// Files use a flat TOML subset: `[section]` headers, `key = value` lines,
// `#` comments, bare or double-quoted scalars, and `[a, b, c]` lists.
// Physical values are written in the units of their key suffix (dB, dBm, mW,
// GHz, MHz, m) and normalized to SI on load. Every key has a default; files
// and `section.key=value` overrides may only touch keys that already exist.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "uavfl/channel.hpp"
#include "uavfl/timing_energy.hpp"

namespace uavfl::config {

/// One or more validation failures, each a self-contained message.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems)
      : std::runtime_error(join(problems)), problems_(std::move(problems)) {}

  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& items) {
    std::string s;
    for (const auto& p : items) {
      if (!s.empty()) s += "\n";
      s += p;
    }
    return s;
  }
  std::vector<std::string> problems_;
};

/// Dotted key -> raw value text, ordered for stable output.
using KeyValues = std::map<std::string, std::string>;

inline const KeyValues& defaults() {
  static const KeyValues kv = {
      {"scenario.seed", "1"},
      {"scenario.num_ues", "100"},
      {"scenario.alpha", "0.1"},
      {"scenario.max_rounds", "100"},
      {"scenario.target_accuracy", "none"},
      {"link.bandwidth_mhz", "1"},
      {"link.beta0_db", "-50"},
      {"link.noise_dbm", "-110"},
      {"link.uav_height_m", "100"},
      {"link.ue_tx_power_mw", "100"},
      {"power.propulsion_w", "100"},
      {"power.uav_tx_power_mw", "10"},
      {"compute.cpu_min_ghz", "1.8"},
      {"compute.cpu_max_ghz", "2.0"},
      {"compute.cycles_per_bit", "20"},
      {"compute.bits_per_feature", "8"},
      {"geometry.r_min_m", "0"},
      {"geometry.r_max_m", "10"},
      {"training.epochs", "5"},
      {"training.batch_size", "10"},
      {"training.learning_rate", "0.05"},
      {"training.layer_dims", "784,32,10"},
      {"training.bits_per_param", "32"},
      {"training.init_scale", "0.05"},
      {"training.threads", "1"},
      {"data.source", "synthetic"},
      {"data.mnist_train_images", ""},
      {"data.mnist_train_labels", ""},
      {"data.mnist_test_images", ""},
      {"data.mnist_test_labels", ""},
      {"data.synthetic_train_samples", "2000"},
      {"data.synthetic_test_samples", "1000"},
      {"data.synthetic_classes", "10"},
      {"data.synthetic_features", "784"},
      {"data.partition", "iid"},
      {"data.shards_per_client", "2"},
  };
  return kv;
}

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

/// "x" -> x ; [a, b] -> a,b ; bare -> bare.
inline std::optional<std::string> normalize_value(const std::string& raw) {
  if (raw.size() >= 2 && raw.front() == '"') {
    if (raw.back() != '"') return std::nullopt;
    return raw.substr(1, raw.size() - 2);
  }
  if (!raw.empty() && raw.front() == '[') {
    if (raw.back() != ']') return std::nullopt;
    std::string out;
    std::stringstream ss(raw.substr(1, raw.size() - 2));
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!out.empty()) out += ",";
      out += trim(item);
    }
    return out;
  }
  return raw;
}

}  // namespace detail

/// Parses text into overrides on top of `defaults()`. Collects every problem
/// (syntax, unknown key, duplicate key) before throwing.
inline KeyValues parse_text(std::string_view text, const std::string& origin) {
  KeyValues kv = defaults();
  std::vector<std::string> problems;
  std::map<std::string, int> seen;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = origin + ":" + std::to_string(lineno);
    const std::string s = detail::trim(detail::strip_comment(line));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') {
        problems.push_back(where + ": malformed section header");
        continue;
      }
      section = detail::trim(std::string_view(s).substr(1, s.size() - 2));
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      problems.push_back(where + ": expected key = value");
      continue;
    }
    const std::string key = detail::trim(std::string_view(s).substr(0, eq));
    const std::string full = section.empty() ? key : section + "." + key;
    const auto value = detail::normalize_value(detail::trim(std::string_view(s).substr(eq + 1)));
    if (!value) {
      problems.push_back(where + ": unterminated value for " + full);
      continue;
    }
    if (!kv.contains(full)) {
      problems.push_back(where + ": unknown key " + full);
      continue;
    }
    if (seen[full]++ > 0) {
      problems.push_back(where + ": duplicate key " + full);
      continue;
    }
    kv[full] = *value;
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
  return kv;
}

/// A missing or unreadable file is a ConfigError naming the path.
inline KeyValues load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot read config file " + path});
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_text(ss.str(), path);
}

/// Applies `section.key=value` overrides; unknown keys are errors.
inline void apply_overrides(KeyValues& kv, const std::vector<std::string>& overrides) {
  std::vector<std::string> problems;
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) {
      problems.push_back("override '" + o + "' is not of the form key=value");
      continue;
    }
    const std::string key = detail::trim(std::string_view(o).substr(0, eq));
    if (!kv.contains(key)) {
      problems.push_back("override references unknown key " + key);
      continue;
    }
    kv[key] = detail::trim(std::string_view(o).substr(eq + 1));
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
}

// ---------------------------------------------------------------------------
// Typed view

enum class DataSource { synthetic, mnist };
enum class Partition { iid, shards };

struct ScenarioConfig {
  std::uint64_t seed = 1;
  std::size_t num_ues = 100;
  double alpha = 0.1;
  std::size_t max_rounds = 100;
  std::optional<double> target_accuracy;

  channel::LinkParams link;
  energy::PowerModel power;

  double cpu_min_hz = 1.8e9;
  double cpu_max_hz = 2.0e9;
  double cycles_per_bit = 20.0;
  double bits_per_feature = 8.0;

  double r_min_m = 0.0;
  double r_max_m = 10.0;

  std::size_t epochs = 5;
  std::size_t batch_size = 10;
  double learning_rate = 0.05;
  std::vector<std::size_t> layer_dims{784, 32, 10};
  std::uint64_t bits_per_param = 32;
  double init_scale = 0.05;
  std::size_t threads = 1;

  DataSource source = DataSource::synthetic;
  std::string mnist_train_images;
  std::string mnist_train_labels;
  std::string mnist_test_images;
  std::string mnist_test_labels;
  std::size_t synthetic_train_samples = 2000;
  std::size_t synthetic_test_samples = 1000;
  std::size_t synthetic_classes = 10;
  std::size_t synthetic_features = 784;
  Partition partition = Partition::iid;
  std::size_t shards_per_client = 2;

  /// Canonical key/value echo of everything above.
  KeyValues echo;
};

namespace detail {

class Reader {
 public:
  explicit Reader(const KeyValues& kv) : kv_(kv) {}

  double real(const std::string& key) {
    const std::string& v = kv_.at(key);
    double out = 0.0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size() || !std::isfinite(out)) {
      problems.push_back(key + ": '" + v + "' is not a finite number");
      return 0.0;
    }
    return out;
  }

  std::uint64_t count(const std::string& key, std::uint64_t min = 1) {
    const std::string& v = kv_.at(key);
    std::uint64_t out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size()) {
      problems.push_back(key + ": '" + v + "' is not a non-negative integer");
      return min;
    }
    if (out < min) {
      problems.push_back(key + ": must be >= " + std::to_string(min));
      return min;
    }
    return out;
  }

  std::vector<std::size_t> list(const std::string& key) {
    std::vector<std::size_t> out;
    std::stringstream ss(kv_.at(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      std::size_t v = 0;
      const auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
      if (ec != std::errc{} || p != item.data() + item.size() || v == 0) {
        problems.push_back(key + ": entry '" + item + "' is not a positive integer");
        return {};
      }
      out.push_back(v);
    }
    return out;
  }

  const std::string& text(const std::string& key) { return kv_.at(key); }

  std::vector<std::string> problems;

 private:
  const KeyValues& kv_;
};

}  // namespace detail

/// Builds the typed config, reporting every violated constraint at once.
inline ScenarioConfig from_key_values(const KeyValues& kv) {
  detail::Reader r(kv);
  auto& bad = r.problems;
  ScenarioConfig c;
  c.echo = kv;

  c.seed = r.count("scenario.seed", 0);
  c.num_ues = r.count("scenario.num_ues");
  c.alpha = r.real("scenario.alpha");
  if (!(c.alpha > 0.0 && c.alpha <= 1.0)) bad.push_back("scenario.alpha: must lie in (0, 1]");
  c.max_rounds = r.count("scenario.max_rounds", 0);
  if (const auto& t = r.text("scenario.target_accuracy"); t != "none" && !t.empty()) {
    const double v = r.real("scenario.target_accuracy");
    if (!(v > 0.0 && v <= 1.0))
      bad.push_back("scenario.target_accuracy: must lie in (0, 1] or be 'none'");
    c.target_accuracy = v;
  }

  c.link.system_bandwidth_hz = r.real("link.bandwidth_mhz") * 1e6;
  c.link.beta0_db = r.real("link.beta0_db");
  c.link.noise_dbm = r.real("link.noise_dbm");
  c.link.uav_height_m = r.real("link.uav_height_m");
  c.link.ue_tx_power_w = r.real("link.ue_tx_power_mw") * 1e-3;
  c.power.propulsion_w = r.real("power.propulsion_w");
  c.power.uav_tx_w = r.real("power.uav_tx_power_mw") * 1e-3;
  c.link.uav_tx_power_w = c.power.uav_tx_w;
  if (!(c.link.system_bandwidth_hz > 0.0)) bad.push_back("link.bandwidth_mhz: must be > 0");
  if (!(c.link.uav_height_m > 0.0)) bad.push_back("link.uav_height_m: must be > 0");
  if (!(c.link.ue_tx_power_w >= 0.0)) bad.push_back("link.ue_tx_power_mw: must be >= 0");
  if (!(c.power.propulsion_w >= 0.0)) bad.push_back("power.propulsion_w: must be >= 0");
  if (!(c.power.uav_tx_w >= 0.0)) bad.push_back("power.uav_tx_power_mw: must be >= 0");
  if (!std::isfinite(channel::db_to_linear(c.link.beta0_db)) ||
      channel::db_to_linear(c.link.beta0_db) <= 0.0)
    bad.push_back("link.beta0_db: linear gain must be positive and finite");
  if (!std::isfinite(channel::dbm_to_watts(c.link.noise_dbm)) ||
      channel::dbm_to_watts(c.link.noise_dbm) <= 0.0)
    bad.push_back("link.noise_dbm: linear power must be positive and finite");

  c.cpu_min_hz = r.real("compute.cpu_min_ghz") * 1e9;
  c.cpu_max_hz = r.real("compute.cpu_max_ghz") * 1e9;
  c.cycles_per_bit = r.real("compute.cycles_per_bit");
  c.bits_per_feature = r.real("compute.bits_per_feature");
  if (!(c.cpu_min_hz > 0.0)) bad.push_back("compute.cpu_min_ghz: must be > 0");
  if (c.cpu_min_hz > c.cpu_max_hz)
    bad.push_back("compute.cpu_min_ghz: must be <= compute.cpu_max_ghz");
  if (!(c.cycles_per_bit > 0.0)) bad.push_back("compute.cycles_per_bit: must be > 0");
  if (!(c.bits_per_feature >= 0.0)) bad.push_back("compute.bits_per_feature: must be >= 0");

  c.r_min_m = r.real("geometry.r_min_m");
  c.r_max_m = r.real("geometry.r_max_m");
  if (!(c.r_min_m >= 0.0)) bad.push_back("geometry.r_min_m: must be >= 0");
  if (c.r_min_m > c.r_max_m) bad.push_back("geometry.r_min_m: must be <= geometry.r_max_m");

  c.epochs = r.count("training.epochs");
  c.batch_size = r.count("training.batch_size");
  c.learning_rate = r.real("training.learning_rate");
  if (!(c.learning_rate >= 0.0)) bad.push_back("training.learning_rate: must be >= 0");
  c.layer_dims = r.list("training.layer_dims");
  if (c.layer_dims.size() < 2)
    bad.push_back("training.layer_dims: needs at least input and output sizes");
  c.bits_per_param = r.count("training.bits_per_param");
  c.init_scale = r.real("training.init_scale");
  if (!(c.init_scale >= 0.0)) bad.push_back("training.init_scale: must be >= 0");
  c.threads = r.count("training.threads");

  if (const auto& s = r.text("data.source"); s == "synthetic") {
    c.source = DataSource::synthetic;
  } else if (s == "mnist") {
    c.source = DataSource::mnist;
  } else {
    bad.push_back("data.source: must be 'synthetic' or 'mnist', got '" + s + "'");
  }
  c.mnist_train_images = r.text("data.mnist_train_images");
  c.mnist_train_labels = r.text("data.mnist_train_labels");
  c.mnist_test_images = r.text("data.mnist_test_images");
  c.mnist_test_labels = r.text("data.mnist_test_labels");
  if (c.source == DataSource::mnist) {
    for (const char* k : {"data.mnist_train_images", "data.mnist_train_labels",
                          "data.mnist_test_images", "data.mnist_test_labels"}) {
      if (r.text(k).empty()) bad.push_back(std::string(k) + ": required when data.source = mnist");
    }
  }
  c.synthetic_train_samples = r.count("data.synthetic_train_samples");
  c.synthetic_test_samples = r.count("data.synthetic_test_samples");
  c.synthetic_classes = r.count("data.synthetic_classes");
  c.synthetic_features = r.count("data.synthetic_features");
  if (c.synthetic_classes > 256) bad.push_back("data.synthetic_classes: must be <= 256");
  if (const auto& p = r.text("data.partition"); p == "iid") {
    c.partition = Partition::iid;
  } else if (p == "shards") {
    c.partition = Partition::shards;
  } else {
    bad.push_back("data.partition: must be 'iid' or 'shards', got '" + p + "'");
  }
  c.shards_per_client = r.count("data.shards_per_client");

  if (!bad.empty()) throw ConfigError(std::move(bad));
  return c;
}

inline ScenarioConfig default_config() { return from_key_values(defaults()); }

/// File (optional; empty path means defaults), then overrides.
inline ScenarioConfig load(const std::string& path,
                           const std::vector<std::string>& overrides = {}) {
  KeyValues kv = path.empty() ? defaults() : load_file(path);
  apply_overrides(kv, overrides);
  return from_key_values(kv);
}

}  // namespace uavfl::config
