#pragma once

// Federated averaging: client sampling, local minibatch SGD, sample-weighted
// aggregation, and held-out evaluation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "uavfl/dataset.hpp"
#include "uavfl/model.hpp"
#include "uavfl/rng.hpp"

namespace uavfl::fl {

using data::UeId;
using model::ModelState;

struct TrainingPolicy {
  double client_fraction_alpha = 0.1;
  std::size_t local_epochs = 5;
  std::size_t batch_size = 10;
  double learning_rate = 0.05;
  std::size_t max_rounds = 100;
};

/// ceil(alpha * n), with a small slack so 0.1 * 100 yields 10 and not 11.
inline std::size_t num_selected(std::size_t num_clients, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw std::invalid_argument("alpha must lie in (0, 1]");
  const double raw = alpha * static_cast<double>(num_clients);
  auto k = static_cast<std::size_t>(std::ceil(raw - 1e-9));
  return std::clamp<std::size_t>(k, std::min<std::size_t>(1, num_clients),
                                 num_clients);
}

/// Uniform subset of size ceil(alpha * N) without replacement, sorted.
inline std::vector<UeId> select_clients(std::size_t num_clients, double alpha,
                                        rng::Stream& round_rng) {
  const std::size_t k = num_selected(num_clients, alpha);
  std::vector<UeId> ids(num_clients);
  std::iota(ids.begin(), ids.end(), UeId{0});
  // Partial Fisher-Yates: the first k slots end up a uniform k-subset.
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(round_rng.below(num_clients - i));
    std::swap(ids[i], ids[j]);
  }
  ids.resize(k);
  std::sort(ids.begin(), ids.end());
  return ids;
}

/// E epochs of minibatch SGD over the shard, reshuffled each epoch from
/// client_rng. The final batch of an epoch may be short.
inline ModelState local_update(const ModelState& global, const data::Dataset& ds,
                               std::span<const std::size_t> shard,
                               const TrainingPolicy& policy,
                               rng::Stream& client_rng) {
  if (shard.empty()) throw std::invalid_argument("local_update on empty shard");
  if (policy.batch_size == 0) throw std::invalid_argument("batch_size must be >= 1");
  ModelState local = global;
  std::vector<std::size_t> order(shard.begin(), shard.end());
  for (std::size_t epoch = 0; epoch < policy.local_epochs; ++epoch) {
    client_rng.shuffle(std::span(order));
    for (std::size_t start = 0; start < order.size(); start += policy.batch_size) {
      const std::size_t len = std::min(policy.batch_size, order.size() - start);
      const auto grad = model::gradient(
          local, ds, std::span<const std::size_t>(order.data() + start, len));
      for (std::size_t k = 0; k < local.params.size(); ++k)
        local.params[k] -= policy.learning_rate * grad[k];
    }
  }
  return local;
}

/// Weighted mean of parameter vectors, accumulated as a running lerp in the
/// given order. Identical inputs give that input back exactly and each output
/// coordinate stays inside the inputs' [min, max].
inline ModelState fedavg_aggregate(std::span<const ModelState> updates,
                                   std::span<const double> weights) {
  if (updates.empty()) throw std::invalid_argument("no updates to aggregate");
  if (weights.size() != updates.size())
    throw std::invalid_argument("updates and weights differ in length");
  const std::size_t n = updates.front().param_count();
  for (const auto& u : updates) {
    if (u.param_count() != n || u.layer_dims != updates.front().layer_dims)
      throw std::invalid_argument("updates have mismatched dimensions");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w))
      throw std::invalid_argument("aggregation weights must be finite and >= 0");
    total += w;
  }
  if (!(total > 0.0)) throw std::invalid_argument("aggregation weights sum to 0");

  ModelState out = updates.front();
  double seen = 0.0;
  for (std::size_t u = 0; u < updates.size(); ++u) {
    if (weights[u] == 0.0) continue;
    seen += weights[u];
    const double t = weights[u] / seen;
    const auto& src = updates[u].params;
    for (std::size_t k = 0; k < n; ++k)
      out.params[k] = std::lerp(out.params[k], src[k], t);
  }
  return out;
}

struct ClientUpdate {
  UeId ue = 0;
  ModelState model;
  double weight = 0.0;
};

/// Sorts by UE id before accumulating, so the result does not depend on the
/// order in which clients finished.
inline ModelState fedavg_aggregate(std::span<const ClientUpdate> updates) {
  std::vector<const ClientUpdate*> sorted;
  sorted.reserve(updates.size());
  for (const auto& u : updates) sorted.push_back(&u);
  std::sort(sorted.begin(), sorted.end(),
            [](const ClientUpdate* a, const ClientUpdate* b) { return a->ue < b->ue; });
  std::vector<ModelState> models;
  std::vector<double> weights;
  models.reserve(sorted.size());
  weights.reserve(sorted.size());
  for (const auto* u : sorted) {
    models.push_back(u->model);
    weights.push_back(u->weight);
  }
  return fedavg_aggregate(models, weights);
}

struct Evaluation {
  double accuracy = 0.0;
  double mean_loss = 0.0;
};

/// Argmax ties resolve to the lowest class index.
inline Evaluation evaluate(const ModelState& m, const data::Dataset& testset) {
  if (testset.empty()) throw std::invalid_argument("evaluate on empty testset");
  if (testset.feature_dim != m.input_dim())
    throw std::invalid_argument("testset feature_dim does not match model input");
  if (testset.num_classes > m.output_dim())
    throw std::invalid_argument("testset has more classes than model outputs");
  model::detail::Workspace ws(m.layer_dims);
  std::size_t correct = 0;
  double loss_sum = 0.0;
  for (std::size_t i = 0; i < testset.size(); ++i) {
    const double lse = model::detail::forward_pass(m, testset.sample(i), ws);
    const auto& logits = ws.acts.back();
    const auto best = static_cast<std::size_t>(
        std::max_element(logits.begin(), logits.end()) - logits.begin());
    if (best == testset.label(i)) ++correct;
    loss_sum += lse - logits[testset.label(i)];
  }
  const auto n = static_cast<double>(testset.size());
  return {static_cast<double>(correct) / n, loss_sum / n};
}

}  // namespace uavfl::fl
