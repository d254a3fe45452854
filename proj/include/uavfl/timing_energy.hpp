#pragma once

// Round latency and UAV energy.
//
// A round is: broadcast of the global model on the full band, then parallel
// local training, then parallel OFDMA uploads. It ends when the slowest
// selected UE's upload completes. The UAV hovers for the whole round, so
//
//     flight_j        = propulsion_w * sum(t_round)
//     dissemination_j = uav_tx_w     * sum(t_down)

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "uavfl/channel.hpp"
#include "uavfl/dataset.hpp"

namespace uavfl::energy {

using data::UeId;

struct PowerModel {
  double propulsion_w = 100.0;
  double uav_tx_w = 0.01;
};

struct ComputeSpec {
  double cpu_hz = 2.0e9;
  double cycles_per_bit = 20.0;
  double shard_bits = 0.0;
};

struct ClientTiming {
  UeId ue = 0;
  double t_compute_s = 0.0;
  double t_up_s = 0.0;
};

struct RoundTiming {
  double t_down_s = 0.0;
  double t_compute_max_s = 0.0;
  double t_up_max_s = 0.0;
  double t_round_s = 0.0;
  std::vector<ClientTiming> per_client;
};

struct SelectedUe {
  UeId id = 0;
  double horizontal_dist_m = 0.0;
  ComputeSpec compute;
};

struct EnergyBreakdown {
  double flight_j = 0.0;
  double dissemination_j = 0.0;
  double total_j = 0.0;
};

inline std::uint64_t model_payload_bits(std::uint64_t param_count,
                                        std::uint64_t bits_per_param) {
  if (param_count == 0 || bits_per_param == 0)
    throw std::invalid_argument("param_count and bits_per_param must be >= 1");
  return param_count * bits_per_param;
}

/// E * c * D / f.
inline double compute_time(const ComputeSpec& spec, std::size_t epochs) {
  if (epochs == 0) throw std::invalid_argument("epochs must be >= 1");
  if (!(spec.cpu_hz > 0.0)) throw std::invalid_argument("cpu_hz must be > 0");
  if (!(spec.cycles_per_bit > 0.0))
    throw std::invalid_argument("cycles_per_bit must be > 0");
  if (!(spec.shard_bits >= 0.0)) throw std::invalid_argument("shard_bits must be >= 0");
  return static_cast<double>(epochs) * spec.cycles_per_bit * spec.shard_bits /
         spec.cpu_hz;
}

/// The broadcast must reach every selected UE, so its rate is set by the
/// farthest one.
inline RoundTiming round_timing(std::span<const SelectedUe> selected,
                                const channel::LinkParams& link,
                                double payload_bits, std::size_t epochs) {
  if (selected.empty()) throw std::invalid_argument("round with no selected UEs");
  double farthest = 0.0;
  for (const auto& ue : selected) farthest = std::max(farthest, ue.horizontal_dist_m);

  RoundTiming t;
  t.t_down_s = channel::transmission_time(
      payload_bits, channel::downlink_rate(link, farthest));
  double slowest = 0.0;
  t.per_client.reserve(selected.size());
  for (const auto& ue : selected) {
    ClientTiming c;
    c.ue = ue.id;
    c.t_compute_s = compute_time(ue.compute, epochs);
    c.t_up_s = channel::transmission_time(
        payload_bits,
        channel::uplink_rate(link, selected.size(), ue.horizontal_dist_m));
    t.t_compute_max_s = std::max(t.t_compute_max_s, c.t_compute_s);
    t.t_up_max_s = std::max(t.t_up_max_s, c.t_up_s);
    slowest = std::max(slowest, c.t_compute_s + c.t_up_s);
    t.per_client.push_back(c);
  }
  t.t_round_s = t.t_down_s + slowest;
  return t;
}

inline EnergyBreakdown uav_energy(std::span<const RoundTiming> timings,
                                  const PowerModel& power) {
  double round_time = 0.0;
  double down_time = 0.0;
  for (const auto& t : timings) {
    round_time += t.t_round_s;
    down_time += t.t_down_s;
  }
  EnergyBreakdown e;
  e.flight_j = power.propulsion_w * round_time;
  e.dissemination_j = power.uav_tx_w * down_time;
  e.total_j = e.flight_j + e.dissemination_j;
  return e;
}

}  // namespace uavfl::energy
