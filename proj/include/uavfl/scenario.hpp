#pragma once

// Scenario construction and the FedAvg round loop with a UAV parameter server.
//
// Per round: select -> downlink timing -> local updates -> compute/uplink
// timing -> aggregate -> evaluate -> energy accumulation.

#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "uavfl/config.hpp"
#include "uavfl/dataset.hpp"
#include "uavfl/fedavg.hpp"
#include "uavfl/model.hpp"
#include "uavfl/rng.hpp"
#include "uavfl/timing_energy.hpp"

namespace uavfl {

using data::UeId;

struct UserEquipment {
  UeId id = 0;
  double horizontal_dist_m = 0.0;
  double cpu_hz = 0.0;
  data::Shard shard;
};

struct Scenario {
  config::ScenarioConfig config;
  data::Dataset train;
  data::Dataset test;
  std::vector<UserEquipment> ues;
  model::ModelState initial_model;
};

struct RoundRecord {
  std::size_t round_index = 0;  // 1-based
  std::vector<UeId> selected;
  energy::RoundTiming timing;
  double cumulative_flight_j = 0.0;
  double cumulative_dissemination_j = 0.0;
  double test_accuracy = 0.0;
  double test_loss = 0.0;

  double cumulative_total_j() const {
    return cumulative_flight_j + cumulative_dissemination_j;
  }
};

struct RunResult {
  config::KeyValues config_echo;
  std::vector<RoundRecord> records;
  std::string final_model_digest;
  double wall_seconds_host = 0.0;
};

inline fl::TrainingPolicy policy_from(const config::ScenarioConfig& c) {
  return {.client_fraction_alpha = c.alpha,
          .local_epochs = c.epochs,
          .batch_size = c.batch_size,
          .learning_rate = c.learning_rate,
          .max_rounds = c.max_rounds};
}

/// Loads or synthesizes data, partitions it, samples each UE's distance and
/// CPU frequency from the geometry stream, and initializes the model from the
/// init stream.
inline Scenario build_scenario(const config::ScenarioConfig& cfg) {
  Scenario s;
  s.config = cfg;

  if (cfg.source == config::DataSource::mnist) {
    s.train = data::load_mnist_idx(cfg.mnist_train_images, cfg.mnist_train_labels);
    s.test = data::load_mnist_idx(cfg.mnist_test_images, cfg.mnist_test_labels);
  } else {
    const std::size_t total = cfg.synthetic_train_samples + cfg.synthetic_test_samples;
    const auto all = data::synth_dataset(total, cfg.synthetic_classes,
                                         cfg.synthetic_features, cfg.seed);
    std::vector<std::size_t> rows(total);
    for (std::size_t i = 0; i < total; ++i) rows[i] = i;
    const std::span<const std::size_t> r(rows);
    s.train = data::subset(all, r.first(cfg.synthetic_train_samples), "synthetic-train");
    s.test = data::subset(all, r.subspan(cfg.synthetic_train_samples), "synthetic-test");
  }

  std::vector<std::string> problems;
  if (cfg.layer_dims.front() != s.train.feature_dim)
    problems.push_back("training.layer_dims: input size " +
                       std::to_string(cfg.layer_dims.front()) +
                       " does not match data feature dim " +
                       std::to_string(s.train.feature_dim));
  if (cfg.layer_dims.back() < s.train.num_classes)
    problems.push_back("training.layer_dims: output size " +
                       std::to_string(cfg.layer_dims.back()) + " is below class count " +
                       std::to_string(s.train.num_classes));
  if (s.train.size() < cfg.num_ues)
    problems.push_back("scenario.num_ues: " + std::to_string(cfg.num_ues) +
                       " UEs exceed " + std::to_string(s.train.size()) +
                       " training samples");
  if (!problems.empty()) throw config::ConfigError(std::move(problems));

  auto shards = cfg.partition == config::Partition::iid
                    ? data::partition_iid(s.train, cfg.num_ues, cfg.seed)
                    : data::partition_shards_noniid(s.train, cfg.num_ues,
                                                    cfg.shards_per_client, cfg.seed);

  rng::Stream geometry(cfg.seed, rng::StreamTag::geometry);
  s.ues.reserve(cfg.num_ues);
  for (std::size_t n = 0; n < cfg.num_ues; ++n) {
    UserEquipment ue;
    ue.id = static_cast<UeId>(n);
    ue.horizontal_dist_m = geometry.uniform(cfg.r_min_m, cfg.r_max_m);
    ue.cpu_hz = geometry.uniform(cfg.cpu_min_hz, cfg.cpu_max_hz);
    ue.shard = std::move(shards[n]);
    s.ues.push_back(std::move(ue));
  }

  rng::Stream init(cfg.seed, rng::StreamTag::init);
  s.initial_model = model::init_uniform(cfg.layer_dims, init, cfg.init_scale);
  return s;
}

namespace detail {

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Each call writes
/// only its own output slot, so the result is independent of scheduling.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
}

}  // namespace detail

inline RunResult run(const Scenario& scenario, const fl::TrainingPolicy& policy) {
  const auto start = std::chrono::steady_clock::now();
  const auto& cfg = scenario.config;

  RunResult result;
  result.config_echo = cfg.echo;
  model::ModelState global = scenario.initial_model;

  const double payload_bits = static_cast<double>(
      energy::model_payload_bits(global.param_count(), cfg.bits_per_param));
  const double bits_per_sample =
      static_cast<double>(scenario.train.feature_dim) * cfg.bits_per_feature;

  std::vector<energy::RoundTiming> timings;
  for (std::size_t round = 1; round <= policy.max_rounds; ++round) {
    RoundRecord rec;
    rec.round_index = round;

    rng::Stream selection(cfg.seed, rng::StreamTag::selection, round);
    rec.selected = fl::select_clients(scenario.ues.size(),
                                      policy.client_fraction_alpha, selection);

    std::vector<energy::SelectedUe> timing_in;
    timing_in.reserve(rec.selected.size());
    for (auto id : rec.selected) {
      const auto& ue = scenario.ues[id];
      timing_in.push_back(
          {.id = id,
           .horizontal_dist_m = ue.horizontal_dist_m,
           .compute = {.cpu_hz = ue.cpu_hz,
                       .cycles_per_bit = cfg.cycles_per_bit,
                       .shard_bits = bits_per_sample *
                                     static_cast<double>(ue.shard.indices.size())}});
    }

    std::vector<fl::ClientUpdate> updates(rec.selected.size());
    detail::parallel_for(rec.selected.size(), cfg.threads, [&](std::size_t i) {
      const auto& ue = scenario.ues[rec.selected[i]];
      rng::Stream client(cfg.seed, rng::StreamTag::client, round, ue.id);
      updates[i].ue = ue.id;
      updates[i].weight = static_cast<double>(ue.shard.indices.size());
      updates[i].model =
          fl::local_update(global, scenario.train, ue.shard.indices, policy, client);
    });

    rec.timing = energy::round_timing(timing_in, cfg.link, payload_bits, policy.local_epochs);
    global = fl::fedavg_aggregate(updates);

    const auto eval = fl::evaluate(global, scenario.test);
    rec.test_accuracy = eval.accuracy;
    rec.test_loss = eval.mean_loss;

    timings.push_back(rec.timing);
    const auto e = energy::uav_energy(timings, cfg.power);
    rec.cumulative_flight_j = e.flight_j;
    rec.cumulative_dissemination_j = e.dissemination_j;

    result.records.push_back(std::move(rec));
    if (cfg.target_accuracy && eval.accuracy >= *cfg.target_accuracy) break;
  }

  result.final_model_digest = model::digest(global);
  result.wall_seconds_host =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

inline RunResult run(const Scenario& scenario) {
  return run(scenario, policy_from(scenario.config));
}

}  // namespace uavfl
