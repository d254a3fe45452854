#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "oracles.hpp"
#include "uavfl/dataset.hpp"
#include "uavfl/model.hpp"
#include "uavfl/rng.hpp"

namespace data = uavfl::data;
namespace model = uavfl::model;
using uavfl::oracle::rel_err;

namespace {

data::Dataset random_dataset(std::size_t n, std::size_t dim, std::size_t classes,
                             std::uint64_t seed) {
  uavfl::rng::Stream s(seed);
  data::Dataset ds;
  ds.feature_dim = dim;
  ds.num_classes = classes;
  for (std::size_t i = 0; i < n * dim; ++i) ds.features.push_back(static_cast<float>(s.uniform01()));
  for (std::size_t i = 0; i < n; ++i) ds.labels.push_back(static_cast<std::uint8_t>(s.below(classes)));
  return ds;
}

std::vector<std::size_t> all_rows(const data::Dataset& ds) {
  std::vector<std::size_t> r(ds.size());
  std::iota(r.begin(), r.end(), std::size_t{0});
  return r;
}

double max_rel_error(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, rel_err(a[k], b[k], 1e-7));
  return worst;
}

}  // namespace

TEST(Model, ParamCount) {
  const std::vector<std::size_t> dims{784, 32, 10};
  EXPECT_EQ(model::param_count_for(dims), 25450u);
  EXPECT_EQ(model::make_model(dims).param_count(), 25450u);
  EXPECT_EQ(model::param_count_for(std::vector<std::size_t>{4, 2, 2}), 16u);
  EXPECT_THROW(model::make_model({5}), std::invalid_argument);
  EXPECT_THROW(model::make_model({5, 0, 2}), std::invalid_argument);
}

TEST(Model, ValidateCatchesBadState) {
  auto m = model::make_model({3, 2});
  EXPECT_NO_THROW(model::validate(m));
  m.params.push_back(0.0);
  EXPECT_THROW(model::validate(m), std::invalid_argument);
  m.params.pop_back();
  m.params[0] = std::nan("");
  EXPECT_THROW(model::validate(m), std::invalid_argument);
}

TEST(Model, ZeroWeightsGiveUniformOutput) {
  const auto m = model::make_model({5, 4, 10});
  const auto p = model::forward(m, std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.5});
  ASSERT_EQ(p.size(), 10u);
  for (double v : p) EXPECT_DOUBLE_EQ(v, 0.1);
}

TEST(Model, ProbabilitiesSumToOne) {
  uavfl::rng::Stream s(8);
  for (int t = 0; t < 50; ++t) {
    auto m = model::init_uniform({6, 5, 7}, s, 3.0);
    std::vector<double> x(6);
    for (auto& v : x) v = s.uniform(-2, 2);
    const auto p = model::forward(m, x);
    EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-9);
    for (double v : p) EXPECT_GE(v, 0.0);
  }
}

TEST(Model, LogisticRegressionHandComputed) {
  // W = [[1, 2], [3, 4]], b = [0.5, -0.5], x = [1, -1]
  // z = [-0.5, -1.5]; softmax = [1/(1+e^-1), 1/(1+e)]
  model::ModelState m = model::make_model({2, 2});
  m.params = {1, 2, 3, 4, 0.5, -0.5};
  const auto p = model::forward(m, std::vector<double>{1.0, -1.0});
  EXPECT_NEAR(p[0], 1.0 / (1.0 + std::exp(-1.0)), 1e-15);
  EXPECT_NEAR(p[1], 1.0 / (1.0 + std::exp(1.0)), 1e-15);
}

TEST(Model, DimensionMismatch) {
  const auto m = model::make_model({3, 2});
  EXPECT_THROW(model::forward(m, std::vector<double>{1.0, 2.0}), std::invalid_argument);
  const auto ds = random_dataset(4, 5, 2, 1);
  const auto rows = all_rows(ds);
  EXPECT_THROW(model::gradient(m, ds, rows), std::invalid_argument);
  EXPECT_THROW(model::gradient(m, random_dataset(4, 3, 2, 1), std::vector<std::size_t>{}),
               std::invalid_argument);
}

TEST(Model, GradientMatchesFiniteDifferences422) {
  uavfl::rng::Stream s(21);
  const auto ds = random_dataset(5, 4, 2, 99);
  const auto rows = all_rows(ds);
  for (int t = 0; t < 10; ++t) {
    const auto m = model::init_uniform({4, 2, 2}, s, 1.0);
    const auto g = model::gradient(m, ds, rows);
    const auto fd = uavfl::oracle::finite_difference_gradient(m, ds, rows);
    EXPECT_LT(max_rel_error(g, fd), 1e-4) << "trial " << t;
  }
}

TEST(Model, GradientMatchesFiniteDifferencesOtherShapes) {
  uavfl::rng::Stream s(22);
  for (const auto& dims : std::vector<std::vector<std::size_t>>{
           {2, 2}, {16, 2}, {3, 5, 4, 2}, {6, 8, 10}}) {
    const auto ds = random_dataset(7, dims.front(), dims.back(), 5);
    const auto rows = all_rows(ds);
    const auto m = model::init_uniform(dims, s, 0.8);
    const auto g = model::gradient(m, ds, rows);
    const auto fd = uavfl::oracle::finite_difference_gradient(m, ds, rows);
    EXPECT_LT(max_rel_error(g, fd), 1e-4) << "dims[0]=" << dims.front();
  }
}

TEST(Model, GradientMatchesFiniteDifferencesDefaultModelSampled) {
  uavfl::rng::Stream s(23);
  const auto ds = data::synth_dataset(6, 10, 784, 3);
  const auto rows = all_rows(ds);
  auto m = model::init_uniform({784, 32, 10}, s, 0.05);
  const auto g = model::gradient(m, ds, rows);
  double worst = 0.0;
  const double h = 1e-5;
  for (int t = 0; t < 300; ++t) {
    const auto k = static_cast<std::size_t>(s.below(m.param_count()));
    const double orig = m.params[k];
    m.params[k] = orig + h;
    const double up = model::mean_loss(m, ds, rows);
    m.params[k] = orig - h;
    const double down = model::mean_loss(m, ds, rows);
    m.params[k] = orig;
    worst = std::max(worst, rel_err(g[k], (up - down) / (2 * h), 1e-7));
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(Model, DuplicatedBatchSameGradient) {
  uavfl::rng::Stream s(31);
  const auto ds = random_dataset(6, 4, 3, 2);
  const auto m = model::init_uniform({4, 3, 3}, s, 1.0);
  const auto rows = all_rows(ds);
  std::vector<std::size_t> twice;
  for (auto r : rows) {
    twice.push_back(r);
    twice.push_back(r);
  }
  const auto g1 = model::gradient(m, ds, rows);
  const auto g2 = model::gradient(m, ds, twice);
  for (std::size_t k = 0; k < g1.size(); ++k) EXPECT_LT(rel_err(g1[k], g2[k], 1e-15), 1e-12);
}

TEST(Model, GradientVanishesAtSeparableOptimum) {
  // Two linearly separable points per class in 2-D.
  data::Dataset ds;
  ds.feature_dim = 2;
  ds.num_classes = 2;
  ds.features = {0.0f, 0.1f, 0.1f, 0.0f, 1.0f, 0.9f, 0.9f, 1.0f};
  ds.labels = {0, 0, 1, 1};
  const auto rows = all_rows(ds);
  auto m = model::make_model({2, 2});
  double norm = 1.0;
  for (int it = 0; it < 200000 && norm >= 1e-3; ++it) {
    const auto g = model::gradient(m, ds, rows);
    norm = std::sqrt(std::inner_product(g.begin(), g.end(), g.begin(), 0.0));
    for (std::size_t k = 0; k < g.size(); ++k) m.params[k] -= 2.0 * g[k];
  }
  EXPECT_LT(norm, 1e-3);
}

TEST(Model, DigestIsStableAndSensitive) {
  auto m = model::make_model({3, 2});
  const auto d0 = model::digest(m);
  EXPECT_EQ(d0.size(), 16u);
  EXPECT_EQ(d0, model::digest(m));
  m.params[3] = 1e-300;
  EXPECT_NE(d0, model::digest(m));
}
