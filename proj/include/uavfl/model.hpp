#pragma once

// Fully-connected softmax classifier with tanh hidden layers and hand-written
// backpropagation. Parameters live in one flat vector; layer l stores its
// weight matrix (fan_out rows x fan_in cols, row-major) followed by its bias.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "uavfl/dataset.hpp"
#include "uavfl/rng.hpp"

namespace uavfl::model {

struct ModelState {
  std::vector<std::size_t> layer_dims;
  std::vector<double> params;

  std::size_t param_count() const noexcept { return params.size(); }
  std::size_t input_dim() const { return layer_dims.front(); }
  std::size_t output_dim() const { return layer_dims.back(); }
  std::size_t num_layers() const { return layer_dims.size() - 1; }

  bool operator==(const ModelState&) const = default;
};

inline std::size_t param_count_for(std::span<const std::size_t> dims) {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l)
    n += (dims[l] + 1) * dims[l + 1];
  return n;
}

inline void validate_dims(std::span<const std::size_t> dims) {
  if (dims.size() < 2)
    throw std::invalid_argument("a model needs at least input and output dims");
  for (auto d : dims)
    if (d == 0) throw std::invalid_argument("layer sizes must be >= 1");
}

/// All-zero parameters.
inline ModelState make_model(std::vector<std::size_t> dims) {
  validate_dims(dims);
  ModelState m;
  m.params.assign(param_count_for(dims), 0.0);
  m.layer_dims = std::move(dims);
  return m;
}

/// Parameters drawn uniformly from [-scale, scale].
inline ModelState init_uniform(std::vector<std::size_t> dims, rng::Stream& stream,
                               double scale = 0.05) {
  ModelState m = make_model(std::move(dims));
  for (auto& p : m.params) p = stream.uniform(-scale, scale);
  return m;
}

/// Throws if params length disagrees with the dims or holds non-finite values.
inline void validate(const ModelState& m) {
  validate_dims(m.layer_dims);
  if (m.params.size() != param_count_for(m.layer_dims))
    throw std::invalid_argument("params length does not match layer_dims");
  for (double p : m.params)
    if (!std::isfinite(p)) throw std::invalid_argument("non-finite parameter");
}

namespace detail {

/// Scratch buffers reused across samples.
struct Workspace {
  std::vector<std::vector<double>> acts;    // acts[0] = input, acts[L] = logits
  std::vector<std::vector<double>> deltas;  // per non-input layer
  std::vector<std::size_t> offset;          // start of each layer's block

  explicit Workspace(std::span<const std::size_t> dims) {
    offset.assign(dims.size(), 0);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l)
      offset[l + 1] = offset[l] + (dims[l] + 1) * dims[l + 1];
    acts.resize(dims.size());
    deltas.resize(dims.size());
    for (std::size_t l = 0; l < dims.size(); ++l) {
      acts[l].resize(dims[l]);
      deltas[l].resize(dims[l]);
    }
  }
};

template <typename T>
void check_input(const ModelState& m, std::span<const T> x) {
  if (x.size() != m.input_dim()) {
    throw std::invalid_argument("feature length " + std::to_string(x.size()) +
                                " does not match input dim " +
                                std::to_string(m.input_dim()));
  }
}

/// Fills ws.acts; returns log-sum-exp of the output logits.
template <typename T>
double forward_pass(const ModelState& m, std::span<const T> x, Workspace& ws) {
  std::copy(x.begin(), x.end(), ws.acts[0].begin());
  const double* p = m.params.data();
  const std::size_t layers = m.num_layers();
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t fan_in = m.layer_dims[l];
    const std::size_t fan_out = m.layer_dims[l + 1];
    const double* w = p;
    const double* b = p + fan_in * fan_out;
    const auto& in = ws.acts[l];
    auto& out = ws.acts[l + 1];
    for (std::size_t o = 0; o < fan_out; ++o) {
      const double* row = w + o * fan_in;
      double z = b[o];
      for (std::size_t i = 0; i < fan_in; ++i) z += row[i] * in[i];
      out[o] = (l + 1 < layers) ? std::tanh(z) : z;
    }
    p = b + fan_out;
  }
  const auto& logits = ws.acts[layers];
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - mx);
  return mx + std::log(sum);
}

/// Adds d(-log p_label)/d(params) into grad. Requires a prior forward_pass.
inline void backward_pass(const ModelState& m, std::size_t label, double lse,
                          Workspace& ws, std::span<double> grad) {
  const std::size_t layers = m.num_layers();
  {
    const auto& logits = ws.acts[layers];
    auto& d = ws.deltas[layers];
    for (std::size_t k = 0; k < logits.size(); ++k)
      d[k] = std::exp(logits[k] - lse) - (k == label ? 1.0 : 0.0);
  }
  const auto& offset = ws.offset;
  for (std::size_t l = layers; l-- > 0;) {
    const std::size_t fan_in = m.layer_dims[l];
    const std::size_t fan_out = m.layer_dims[l + 1];
    const double* w = m.params.data() + offset[l];
    double* gw = grad.data() + offset[l];
    double* gb = gw + fan_in * fan_out;
    const auto& in = ws.acts[l];
    const auto& delta = ws.deltas[l + 1];
    for (std::size_t o = 0; o < fan_out; ++o) {
      const double d = delta[o];
      double* grow = gw + o * fan_in;
      for (std::size_t i = 0; i < fan_in; ++i) grow[i] += d * in[i];
      gb[o] += d;
    }
    if (l == 0) break;
    auto& prev = ws.deltas[l];
    std::fill(prev.begin(), prev.end(), 0.0);
    for (std::size_t o = 0; o < fan_out; ++o) {
      const double d = delta[o];
      const double* row = w + o * fan_in;
      for (std::size_t i = 0; i < fan_in; ++i) prev[i] += row[i] * d;
    }
    // tanh'(z) = 1 - tanh(z)^2, and acts[l] already holds tanh(z).
    for (std::size_t i = 0; i < fan_in; ++i) prev[i] *= 1.0 - in[i] * in[i];
  }
}

}  // namespace detail

/// Softmax class probabilities for one sample.
template <typename T>
std::vector<double> forward(const ModelState& m, std::span<const T> features) {
  detail::check_input(m, features);
  detail::Workspace ws(m.layer_dims);
  const double lse = detail::forward_pass(m, features, ws);
  std::vector<double> probs(m.output_dim());
  const auto& logits = ws.acts.back();
  for (std::size_t k = 0; k < probs.size(); ++k)
    probs[k] = std::exp(logits[k] - lse);
  return probs;
}

inline std::vector<double> forward(const ModelState& m,
                                   const std::vector<double>& features) {
  return forward(m, std::span<const double>(features));
}

struct LossAndGradient {
  double mean_loss = 0.0;
  std::vector<double> gradient;
};

/// Mean cross-entropy over `rows` of `ds` and its gradient w.r.t. params.
inline LossAndGradient loss_and_gradient(const ModelState& m,
                                         const data::Dataset& ds,
                                         std::span<const std::size_t> rows) {
  if (rows.empty()) throw std::invalid_argument("gradient of an empty batch");
  if (ds.feature_dim != m.input_dim())
    throw std::invalid_argument("dataset feature_dim does not match model input");
  LossAndGradient out;
  out.gradient.assign(m.param_count(), 0.0);
  detail::Workspace ws(m.layer_dims);
  double loss_sum = 0.0;
  for (auto r : rows) {
    const std::size_t label = ds.label(r);
    if (label >= m.output_dim())
      throw std::invalid_argument("label outside model output range");
    const double lse = detail::forward_pass(m, ds.sample(r), ws);
    loss_sum += lse - ws.acts.back()[label];
    detail::backward_pass(m, label, lse, ws, out.gradient);
  }
  const double inv = 1.0 / static_cast<double>(rows.size());
  for (auto& g : out.gradient) g *= inv;
  out.mean_loss = loss_sum * inv;
  return out;
}

inline std::vector<double> gradient(const ModelState& m, const data::Dataset& ds,
                                    std::span<const std::size_t> rows) {
  return loss_and_gradient(m, ds, rows).gradient;
}

/// Mean cross-entropy without the backward pass.
inline double mean_loss(const ModelState& m, const data::Dataset& ds,
                        std::span<const std::size_t> rows) {
  if (rows.empty()) throw std::invalid_argument("loss of an empty batch");
  if (ds.feature_dim != m.input_dim())
    throw std::invalid_argument("dataset feature_dim does not match model input");
  detail::Workspace ws(m.layer_dims);
  double sum = 0.0;
  for (auto r : rows) {
    const double lse = detail::forward_pass(m, ds.sample(r), ws);
    sum += lse - ws.acts.back()[ds.label(r)];
  }
  return sum / static_cast<double>(rows.size());
}

/// FNV-1a over the raw parameter bytes, hex-encoded.
inline std::string digest(const ModelState& m) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto* bytes = reinterpret_cast<const unsigned char*>(m.params.data());
  for (std::size_t i = 0; i < m.params.size() * sizeof(double); ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) s[static_cast<std::size_t>(i)] = hex[h & 0xF];
  return s;
}

}  // namespace uavfl::model
