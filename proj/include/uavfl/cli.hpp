#pragma once

// Command-line front end: run | sweep | validate | rate-table.
//
// Exit codes: 0 success, 1 validation error (bad flags, bad config, missing
// config file), 2 I/O error (unreadable data, unwritable output).

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "uavfl/channel.hpp"
#include "uavfl/config.hpp"
#include "uavfl/dataset.hpp"
#include "uavfl/fedavg.hpp"
#include "uavfl/scenario.hpp"
#include "uavfl/telemetry.hpp"

namespace uavfl::cli {

inline constexpr int kOk = 0;
inline constexpr int kValidationError = 1;
inline constexpr int kIoError = 2;

struct ConfigSource {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;

  std::vector<std::string> all_overrides() const {
    auto o = overrides;
    if (seed) o.push_back("scenario.seed=" + std::to_string(*seed));
    return o;
  }
};

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  if (s.empty()) return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(config::detail::trim(item));
  return out;
}

namespace detail {

/// Maps library exceptions onto exit codes.
template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const config::ConfigError& e) {
    for (const auto& p : e.problems()) err << "error: " << p << "\n";
    return kValidationError;
  } catch (const data::IdxParseError& e) {
    err << "error: " << e.what() << "\n";
    return kIoError;
  } catch (const telemetry::IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIoError;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kValidationError;
  }
}

}  // namespace detail

inline int cmd_validate(const ConfigSource& src, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const auto cfg = config::load(src.config_path, src.all_overrides());
    out << "ok: " << (src.config_path.empty() ? "<defaults>" : src.config_path)
        << " (" << cfg.echo.size() << " keys)\n";
    return kOk;
  });
}

/// Empty out_path writes to `out`.
inline int cmd_run(const ConfigSource& src, const std::string& out_path,
                   telemetry::Format fmt, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const auto cfg = config::load(src.config_path, src.all_overrides());
    const auto scenario = build_scenario(cfg);
    const auto result = run(scenario);
    if (out_path.empty()) {
      out << (fmt == telemetry::Format::csv ? telemetry::to_csv(result)
                                            : telemetry::to_json(result));
    } else {
      telemetry::emit(result, fmt, out_path);
    }
    return kOk;
  });
}

/// One run per value with the same seed, `<key>=<value>.csv` per run plus
/// summary.csv. All configs are validated before any run starts.
inline int cmd_sweep(const ConfigSource& src, const std::string& key,
                     const std::vector<std::string>& values, const std::string& out_dir,
                     std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&]() -> int {
    if (!config::defaults().contains(key))
      throw config::ConfigError({"sweep key " + key + " is not a config key"});
    if (values.empty()) throw config::ConfigError({"sweep needs at least one value"});
    std::set<std::string> seen;
    for (const auto& v : values) {
      if (!seen.insert(v).second)
        throw config::ConfigError({"duplicate sweep value " + v});
    }
    if (out_dir.empty()) throw config::ConfigError({"sweep needs --out <dir>"});

    std::vector<config::ScenarioConfig> configs;
    for (const auto& v : values) {
      auto o = src.all_overrides();
      o.push_back(key + "=" + v);
      configs.push_back(config::load(src.config_path, o));
    }

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw telemetry::IoError(out_dir, "cannot create directory: " + ec.message());

    std::string summary =
        "sweep_key,value,rounds,final_test_accuracy,flight_j,dissem_j,total_j\n";
    for (std::size_t i = 0; i < values.size(); ++i) {
      const auto result = run(build_scenario(configs[i]));
      const auto path =
          (std::filesystem::path(out_dir) / (key + "=" + values[i] + ".csv")).string();
      telemetry::emit(result, telemetry::Format::csv, path);
      out << "wrote " << path << "\n";

      summary += key + "," + values[i] + "," + std::to_string(result.records.size());
      if (result.records.empty()) {
        summary += ",nan,0,0,0\n";
      } else {
        const auto& last = result.records.back();
        summary += "," + telemetry::real(last.test_accuracy) + "," +
                   telemetry::real(last.cumulative_flight_j) + "," +
                   telemetry::real(last.cumulative_dissemination_j) + "," +
                   telemetry::real(last.cumulative_total_j()) + "\n";
      }
    }
    const auto summary_path = (std::filesystem::path(out_dir) / "summary.csv").string();
    telemetry::write_atomic(summary_path, summary);
    out << "wrote " << summary_path << "\n";
    return kOk;
  });
}

/// Uplink SNR/rate on the per-UE OFDMA share and downlink broadcast SNR/rate,
/// one row per horizontal distance.
inline int cmd_rate_table(const ConfigSource& src, const std::vector<std::string>& r_values,
                          std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const auto cfg = config::load(src.config_path, src.all_overrides());
    std::vector<double> radii;
    std::vector<std::string> bad;
    for (const auto& v : r_values) {
      double r = 0.0;
      const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), r);
      if (ec != std::errc{} || p != v.data() + v.size() || !std::isfinite(r)) {
        bad.push_back("r value '" + v + "' is not a number");
      } else if (r < 0.0) {
        bad.push_back("r value " + v + " is negative");
      } else {
        radii.push_back(r);
      }
    }
    if (!bad.empty()) throw config::ConfigError(std::move(bad));

    const std::size_t k = fl::num_selected(cfg.num_ues, cfg.alpha);
    out << "r_m,uplink_bandwidth_hz,uplink_snr,uplink_bps,downlink_snr,downlink_bps\n";
    for (double r : radii) {
      const double up_bw = channel::ofdma_share(cfg.link.system_bandwidth_hz, k);
      const double up_snr = channel::a2g_snr(cfg.link.ue_tx_power_w, cfg.link, r);
      const double down_snr = channel::a2g_snr(cfg.link.uav_tx_power_w, cfg.link, r);
      out << telemetry::real(r) << ',' << telemetry::real(up_bw) << ','
          << telemetry::real(up_snr) << ','
          << telemetry::real(channel::a2g_rate(up_bw, up_snr)) << ','
          << telemetry::real(down_snr) << ','
          << telemetry::real(channel::a2g_rate(cfg.link.system_bandwidth_hz, down_snr))
          << '\n';
    }
    return kOk;
  });
}

inline int main_entry(int argc, const char* const* argv, std::ostream& out,
                      std::ostream& err) {
  CLI::App app{"UAV-hosted federated learning simulator", "uavfl"};
  app.require_subcommand(1);

  ConfigSource src;
  std::string out_path;
  std::string format = "csv";
  std::string sweep_key;
  std::string sweep_values;
  std::string r_values = "0,5,10";
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", src.config_path, "Scenario config file (TOML subset)");
    sub->add_option("--set", src.overrides, "Override section.key=value (repeatable)")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    sub->add_option("--seed", seed, "Master RNG seed");
  };

  auto* run_cmd = app.add_subcommand("run", "Run one scenario and emit telemetry");
  add_common(run_cmd);
  run_cmd->add_option("--out", out_path, "Output file (stdout if omitted)");
  run_cmd->add_option("--format", format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));

  auto* sweep_cmd = app.add_subcommand("sweep", "Run one scenario per value of a key");
  add_common(sweep_cmd);
  sweep_cmd->add_option("--out", out_path, "Output directory")->required();
  sweep_cmd->add_option("--sweep-key", sweep_key, "Dotted config key")->required();
  sweep_cmd->add_option("--sweep-values", sweep_values, "Comma-separated values")
      ->required();

  auto* validate_cmd = app.add_subcommand("validate", "Check a config and overrides");
  add_common(validate_cmd);

  auto* rate_cmd = app.add_subcommand("rate-table", "Print link SNR and rates per distance");
  add_common(rate_cmd);
  rate_cmd->add_option("--r-values", r_values, "Comma-separated horizontal distances, m");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kOk;
    }
    err << "error: " << e.what() << "\n";
    return kValidationError;
  }

  for (auto* sub : {run_cmd, sweep_cmd, validate_cmd, rate_cmd}) {
    if (sub->count("--seed") > 0) src.seed = seed;
  }

  if (*run_cmd) {
    return cmd_run(src, out_path,
                   format == "json" ? telemetry::Format::json : telemetry::Format::csv,
                   out, err);
  }
  if (*sweep_cmd)
    return cmd_sweep(src, sweep_key, split_list(sweep_values), out_path, out, err);
  if (*validate_cmd) return cmd_validate(src, out, err);
  return cmd_rate_table(src, split_list(r_values), out, err);
}

}  // namespace uavfl::cli
