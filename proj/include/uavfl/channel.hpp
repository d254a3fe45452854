#pragma once

// Air-to-ground link budget for a hovering UAV.
//
// The received SNR of a ground node at horizontal distance R from a UAV at
// height H follows a free-space-like LoS gain:
//
//     snr = beta0 * p / (sigma^2 * (H^2 + R^2))
//     rate = B * log2(1 + snr)
//
// beta0 and sigma^2 are stored in dB / dBm and linearized at the call site.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace uavfl::channel {

struct LinkParams {
  double beta0_db = -50.0;
  double noise_dbm = -110.0;
  double system_bandwidth_hz = 1.0e6;
  double uav_height_m = 100.0;
  double uav_tx_power_w = 0.01;
  double ue_tx_power_w = 0.1;
};

namespace detail {

inline void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) {
    throw std::invalid_argument(std::string(what) + " must be finite");
  }
}

}  // namespace detail

inline double db_to_linear(double x_db) {
  detail::require_finite(x_db, "dB value");
  return std::pow(10.0, x_db / 10.0);
}

inline double linear_to_db(double ratio) {
  if (!(ratio > 0.0) || !std::isfinite(ratio)) {
    throw std::invalid_argument("linear ratio must be positive and finite");
  }
  return 10.0 * std::log10(ratio);
}

inline double dbm_to_watts(double x_dbm) {
  detail::require_finite(x_dbm, "dBm value");
  return std::pow(10.0, x_dbm / 10.0) * 1.0e-3;
}

/// Throws std::invalid_argument naming the first violated field.
inline void validate(const LinkParams& p) {
  if (!(p.system_bandwidth_hz > 0.0) || !std::isfinite(p.system_bandwidth_hz))
    throw std::invalid_argument("system_bandwidth_hz must be > 0");
  if (!(p.uav_height_m > 0.0) || !std::isfinite(p.uav_height_m))
    throw std::invalid_argument("uav_height_m must be > 0");
  if (!(p.uav_tx_power_w >= 0.0) || !std::isfinite(p.uav_tx_power_w))
    throw std::invalid_argument("uav_tx_power_w must be >= 0");
  if (!(p.ue_tx_power_w >= 0.0) || !std::isfinite(p.ue_tx_power_w))
    throw std::invalid_argument("ue_tx_power_w must be >= 0");
  const double beta0 = db_to_linear(p.beta0_db);
  const double noise = dbm_to_watts(p.noise_dbm);
  if (!(beta0 > 0.0) || !std::isfinite(beta0))
    throw std::invalid_argument("beta0_db linearizes outside (0, inf)");
  if (!(noise > 0.0) || !std::isfinite(noise))
    throw std::invalid_argument("noise_dbm linearizes outside (0, inf)");
}

inline double a2g_snr(double p_tx_w, const LinkParams& params,
                      double horizontal_dist_m) {
  if (!(p_tx_w >= 0.0)) throw std::invalid_argument("p_tx must be >= 0");
  if (!(horizontal_dist_m >= 0.0))
    throw std::invalid_argument("horizontal distance must be >= 0");
  const double beta0 = db_to_linear(params.beta0_db);
  const double noise_w = dbm_to_watts(params.noise_dbm);
  const double h = params.uav_height_m;
  const double r = horizontal_dist_m;
  return beta0 * p_tx_w / (noise_w * (h * h + r * r));
}

inline double a2g_rate(double bandwidth_hz, double snr) {
  if (!(bandwidth_hz > 0.0)) throw std::invalid_argument("bandwidth must be > 0");
  if (!(snr >= 0.0)) throw std::invalid_argument("snr must be >= 0");
  return bandwidth_hz * std::log2(1.0 + snr);
}

/// Equal OFDMA split of the system band among the round's selected UEs.
inline double ofdma_share(double system_bandwidth_hz, std::size_t num_selected) {
  if (num_selected == 0)
    throw std::invalid_argument("ofdma_share needs at least one selected UE");
  return system_bandwidth_hz / static_cast<double>(num_selected);
}

inline double transmission_time(double payload_bits, double rate_bps) {
  if (!(rate_bps > 0.0)) throw std::invalid_argument("rate must be > 0");
  if (!(payload_bits >= 0.0)) throw std::invalid_argument("payload must be >= 0");
  return payload_bits / rate_bps;
}

/// UE -> UAV rate on an equal OFDMA share.
inline double uplink_rate(const LinkParams& p, std::size_t num_selected,
                          double horizontal_dist_m) {
  return a2g_rate(ofdma_share(p.system_bandwidth_hz, num_selected),
                  a2g_snr(p.ue_tx_power_w, p, horizontal_dist_m));
}

/// UAV -> UE broadcast on the full band at the UAV's transmit power.
inline double downlink_rate(const LinkParams& p, double horizontal_dist_m) {
  return a2g_rate(p.system_bandwidth_hz,
                  a2g_snr(p.uav_tx_power_w, p, horizontal_dist_m));
}

}  // namespace uavfl::channel
