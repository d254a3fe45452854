#pragma once

// CSV / JSON output of a RunResult. Reals are printed with 17 significant
// digits. Files are written to a sibling temp file and renamed into place, so
// a failed write never leaves a partial output behind.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

#include "uavfl/scenario.hpp"

namespace uavfl::telemetry {

enum class Format { csv, json };

inline constexpr std::string_view kCsvHeader =
    "round,selected_ids,t_down_s,t_round_s,flight_j_cum,dissem_j_cum,"
    "total_j_cum,test_accuracy,test_loss";

class IoError : public std::runtime_error {
 public:
  IoError(std::string path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

inline std::string real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string to_csv(const RunResult& r) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& rec : r.records) {
    out += std::to_string(rec.round_index);
    out += ',';
    for (std::size_t i = 0; i < rec.selected.size(); ++i) {
      if (i) out += ';';
      out += std::to_string(rec.selected[i]);
    }
    for (double v : {rec.timing.t_down_s, rec.timing.t_round_s, rec.cumulative_flight_j,
                     rec.cumulative_dissemination_j, rec.cumulative_total_j(),
                     rec.test_accuracy, rec.test_loss}) {
      out += ',';
      out += real(v);
    }
    out += '\n';
  }
  return out;
}

namespace detail {

inline std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char ch : s) {
    switch (ch) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (static_cast<unsigned char>(ch) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", ch);
          out += buf;
        } else {
          out += ch;
        }
    }
  }
  return out + "\"";
}

}  // namespace detail

inline std::string to_json(const RunResult& r) {
  using detail::quote;
  std::ostringstream o;
  o << "{\n  \"config\": {";
  bool first = true;
  for (const auto& [k, v] : r.config_echo) {
    o << (first ? "\n    " : ",\n    ") << quote(k) << ": " << quote(v);
    first = false;
  }
  o << "\n  },\n  \"records\": [";
  for (std::size_t n = 0; n < r.records.size(); ++n) {
    const auto& rec = r.records[n];
    const auto& t = rec.timing;
    o << (n ? ",\n    {" : "\n    {");
    o << "\"round_index\": " << rec.round_index << ", \"selected\": [";
    for (std::size_t i = 0; i < rec.selected.size(); ++i)
      o << (i ? ", " : "") << rec.selected[i];
    o << "], \"timing\": {\"t_down_s\": " << real(t.t_down_s)
      << ", \"t_compute_max_s\": " << real(t.t_compute_max_s)
      << ", \"t_up_max_s\": " << real(t.t_up_max_s)
      << ", \"t_round_s\": " << real(t.t_round_s) << ", \"per_client\": [";
    for (std::size_t i = 0; i < t.per_client.size(); ++i) {
      const auto& c = t.per_client[i];
      o << (i ? ", " : "") << "{\"ue\": " << c.ue
        << ", \"t_compute_s\": " << real(c.t_compute_s)
        << ", \"t_up_s\": " << real(c.t_up_s) << "}";
    }
    o << "]}, \"cumulative_flight_j\": " << real(rec.cumulative_flight_j)
      << ", \"cumulative_dissemination_j\": " << real(rec.cumulative_dissemination_j)
      << ", \"test_accuracy\": " << real(rec.test_accuracy)
      << ", \"test_loss\": " << real(rec.test_loss) << "}";
  }
  o << (r.records.empty() ? "],\n" : "\n  ],\n");
  o << "  \"final_model_digest\": " << quote(r.final_model_digest) << ",\n";
  o << "  \"wall_seconds_host\": " << real(r.wall_seconds_host) << "\n}\n";
  return o.str();
}

/// Writes `contents` to `path` via a temp file + rename.
inline void write_atomic(const std::string& path, std::string_view contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path, "cannot open for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      out.close();
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      throw IoError(path, "write failed");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    std::filesystem::remove(tmp, ignored);
    throw IoError(path, "rename failed: " + ec.message());
  }
}

inline void emit(const RunResult& r, Format fmt, const std::string& path) {
  write_atomic(path, fmt == Format::csv ? to_csv(r) : to_json(r));
}

}  // namespace uavfl::telemetry
