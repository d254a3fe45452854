#pragma once

// Labelled classification data, the MNIST IDX reader, a synthetic
// Gaussian-blob generator, and client partitioners.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "uavfl/rng.hpp"

namespace uavfl::data {

using UeId = std::uint32_t;

/// Row-major feature matrix plus labels. Features are stored in single
/// precision; all arithmetic on them is done in double.
struct Dataset {
  std::string name;
  std::size_t feature_dim = 0;
  std::size_t num_classes = 0;
  std::vector<float> features;
  std::vector<std::uint8_t> labels;

  std::size_t size() const noexcept { return labels.size(); }
  bool empty() const noexcept { return labels.empty(); }

  std::span<const float> sample(std::size_t i) const {
    return {features.data() + i * feature_dim, feature_dim};
  }
  std::size_t label(std::size_t i) const { return labels[i]; }
};

/// Copies the given rows into a new dataset.
inline Dataset subset(const Dataset& ds, std::span<const std::size_t> rows,
                      std::string name) {
  Dataset out;
  out.name = std::move(name);
  out.feature_dim = ds.feature_dim;
  out.num_classes = ds.num_classes;
  out.features.reserve(rows.size() * ds.feature_dim);
  out.labels.reserve(rows.size());
  for (auto r : rows) {
    auto s = ds.sample(r);
    out.features.insert(out.features.end(), s.begin(), s.end());
    out.labels.push_back(ds.labels[r]);
  }
  return out;
}

struct Shard {
  UeId owner_ue = 0;
  std::vector<std::size_t> indices;
};

// ---------------------------------------------------------------------------
// IDX reader

class IdxParseError : public std::runtime_error {
 public:
  IdxParseError(std::string path, std::string field, const std::string& what)
      : std::runtime_error(path + ": " + field + ": " + what),
        path_(std::move(path)),
        field_(std::move(field)) {}

  const std::string& path() const noexcept { return path_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::string path_;
  std::string field_;
};

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

namespace detail {

inline std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IdxParseError(path, "file", "cannot open");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::uint32_t read_be32(const std::vector<unsigned char>& buf,
                               std::size_t offset, const std::string& path,
                               const char* field) {
  if (buf.size() < offset + 4)
    throw IdxParseError(path, field, "truncated header");
  return (std::uint32_t{buf[offset]} << 24) |
         (std::uint32_t{buf[offset + 1]} << 16) |
         (std::uint32_t{buf[offset + 2]} << 8) | std::uint32_t{buf[offset + 3]};
}

}  // namespace detail

/// Reads an IDX image file (magic 0x803) and label file (magic 0x801).
/// Pixels are scaled to [0, 1] by dividing by 255.
inline Dataset load_mnist_idx(const std::string& images_path,
                              const std::string& labels_path) {
  const auto img = detail::read_file(images_path);
  const auto lab = detail::read_file(labels_path);

  const auto img_magic = detail::read_be32(img, 0, images_path, "magic");
  if (img_magic != kIdxImagesMagic)
    throw IdxParseError(images_path, "magic", "expected 0x00000803");
  const auto count = detail::read_be32(img, 4, images_path, "count");
  const auto rows = detail::read_be32(img, 8, images_path, "rows");
  const auto cols = detail::read_be32(img, 12, images_path, "cols");

  const auto lab_magic = detail::read_be32(lab, 0, labels_path, "magic");
  if (lab_magic != kIdxLabelsMagic)
    throw IdxParseError(labels_path, "magic", "expected 0x00000801");
  const auto label_count = detail::read_be32(lab, 4, labels_path, "count");

  if (label_count != count) {
    throw IdxParseError(labels_path, "count",
                        "label count " + std::to_string(label_count) +
                            " does not match image count " +
                            std::to_string(count));
  }

  const std::size_t dim = std::size_t{rows} * cols;
  const std::size_t need = 16 + std::size_t{count} * dim;
  if (img.size() < need) {
    throw IdxParseError(images_path, "pixels",
                        "truncated payload: expected " + std::to_string(need) +
                            " bytes, got " + std::to_string(img.size()));
  }
  if (lab.size() < 8 + std::size_t{count}) {
    throw IdxParseError(labels_path, "labels",
                        "truncated payload: expected " +
                            std::to_string(8 + std::size_t{count}) +
                            " bytes, got " + std::to_string(lab.size()));
  }

  Dataset ds;
  ds.name = images_path;
  ds.feature_dim = dim;
  ds.features.resize(std::size_t{count} * dim);
  for (std::size_t i = 0; i < ds.features.size(); ++i)
    ds.features[i] = static_cast<float>(img[16 + i] / 255.0);
  ds.labels.assign(lab.begin() + 8, lab.begin() + 8 + count);
  std::uint8_t max_label = 0;
  for (auto l : ds.labels) max_label = std::max(max_label, l);
  ds.num_classes = std::max<std::size_t>(10, std::size_t{max_label} + 1);
  return ds;
}

// ---------------------------------------------------------------------------
// Synthetic data

/// Gaussian blobs: class c is centered at a point drawn uniformly from
/// [-2, 2]^dim, samples add unit isotropic noise, and the whole matrix is
/// mapped affinely onto [0, 1] using its global min/max. Labels cycle
/// 0, 1, ..., num_classes-1 so classes are balanced.
inline Dataset synth_dataset(std::size_t num_samples, std::size_t num_classes,
                             std::size_t feature_dim, std::uint64_t seed) {
  if (num_samples == 0 || num_classes == 0 || feature_dim == 0)
    throw std::invalid_argument("synth_dataset: counts must be >= 1");
  if (num_classes > 256)
    throw std::invalid_argument("synth_dataset: at most 256 classes");

  rng::Stream centers_rng(seed, rng::StreamTag::data, 0);
  rng::Stream noise_rng(seed, rng::StreamTag::data, 1);

  std::vector<double> centers(num_classes * feature_dim);
  for (auto& c : centers) c = centers_rng.uniform(-10.0, 10.0);

  std::vector<double> raw(num_samples * feature_dim);
  Dataset ds;
  ds.name = "synthetic";
  ds.feature_dim = feature_dim;
  ds.num_classes = num_classes;
  ds.labels.resize(num_samples);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < num_samples; ++i) {
    const std::size_t c = i % num_classes;
    ds.labels[i] = static_cast<std::uint8_t>(c);
    for (std::size_t j = 0; j < feature_dim; ++j) {
      const double v = centers[c * feature_dim + j] + noise_rng.normal();
      raw[i * feature_dim + j] = v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  const double span = hi > lo ? hi - lo : 1.0;
  ds.features.resize(raw.size());
  for (std::size_t k = 0; k < raw.size(); ++k)
    ds.features[k] = static_cast<float>((raw[k] - lo) / span);
  return ds;
}

// ---------------------------------------------------------------------------
// Partitioners

/// Seeded shuffle, then contiguous slices; the first (size % clients)
/// clients receive one extra sample.
inline std::vector<Shard> partition_iid(const Dataset& ds,
                                        std::size_t num_clients,
                                        std::uint64_t seed) {
  if (num_clients == 0) throw std::invalid_argument("num_clients must be >= 1");
  if (ds.empty()) throw std::invalid_argument("cannot partition empty dataset");

  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng::Stream stream(seed, rng::StreamTag::partition, 0);
  stream.shuffle(std::span(order));

  const std::size_t base = ds.size() / num_clients;
  const std::size_t extra = ds.size() % num_clients;
  std::vector<Shard> shards(num_clients);
  std::size_t pos = 0;
  for (std::size_t c = 0; c < num_clients; ++c) {
    const std::size_t n = base + (c < extra ? 1 : 0);
    shards[c].owner_ue = static_cast<UeId>(c);
    shards[c].indices.assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                             order.begin() + static_cast<std::ptrdiff_t>(pos + n));
    pos += n;
  }
  return shards;
}

/// Pathological non-IID split: sort by label (stable), cut into
/// num_clients * shards_per_client equal slices, deal shards_per_client
/// random slices to each client.
inline std::vector<Shard> partition_shards_noniid(const Dataset& ds,
                                                  std::size_t num_clients,
                                                  std::size_t shards_per_client,
                                                  std::uint64_t seed) {
  if (num_clients == 0 || shards_per_client == 0)
    throw std::invalid_argument("num_clients and shards_per_client must be >= 1");
  const std::size_t slices = num_clients * shards_per_client;
  if (ds.empty() || ds.size() % slices != 0) {
    throw std::invalid_argument(
        "dataset size " + std::to_string(ds.size()) +
        " is not divisible into " + std::to_string(slices) + " slices");
  }

  std::vector<std::size_t> by_label(ds.size());
  std::iota(by_label.begin(), by_label.end(), std::size_t{0});
  std::stable_sort(by_label.begin(), by_label.end(),
                   [&](std::size_t a, std::size_t b) {
                     return ds.labels[a] < ds.labels[b];
                   });

  std::vector<std::size_t> slice_ids(slices);
  std::iota(slice_ids.begin(), slice_ids.end(), std::size_t{0});
  rng::Stream stream(seed, rng::StreamTag::partition, 1);
  stream.shuffle(std::span(slice_ids));

  const std::size_t slice_len = ds.size() / slices;
  std::vector<Shard> shards(num_clients);
  for (std::size_t c = 0; c < num_clients; ++c) {
    shards[c].owner_ue = static_cast<UeId>(c);
    shards[c].indices.reserve(slice_len * shards_per_client);
    for (std::size_t k = 0; k < shards_per_client; ++k) {
      const std::size_t s = slice_ids[c * shards_per_client + k];
      const auto first = by_label.begin() + static_cast<std::ptrdiff_t>(s * slice_len);
      shards[c].indices.insert(shards[c].indices.end(), first,
                               first + static_cast<std::ptrdiff_t>(slice_len));
    }
  }
  return shards;
}

}  // namespace uavfl::data
