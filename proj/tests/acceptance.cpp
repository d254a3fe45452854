// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "uavfl/channel.hpp"
#include "uavfl/config.hpp"
#include "uavfl/fedavg.hpp"
#include "uavfl/scenario.hpp"
#include "uavfl/telemetry.hpp"

namespace fs = std::filesystem;
namespace cfg = uavfl::config;
using uavfl::oracle::rel_err;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
  void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<double> accuracies(const uavfl::RunResult& r) {
  std::vector<double> a;
  for (const auto& rec : r.records) a.push_back(rec.test_accuracy);
  return a;
}

// Default-config runs shared by several criteria, keyed by local epochs.
std::map<std::size_t, uavfl::RunResult>& default_runs() {
  static std::map<std::size_t, uavfl::RunResult> runs;
  return runs;
}

const uavfl::RunResult& default_run(std::size_t epochs) {
  auto& runs = default_runs();
  auto it = runs.find(epochs);
  if (it == runs.end()) {
    const auto c = cfg::load("", {"training.epochs=" + std::to_string(epochs)});
    it = runs.emplace(epochs, uavfl::run(uavfl::build_scenario(c))).first;
  }
  return it->second;
}

// ---------------------------------------------------------------------------

Verdict link_budget() {
  Verdict v;
  const auto c = cfg::default_config();
  const std::size_t k = uavfl::fl::num_selected(c.num_ues, c.alpha);
  const double up = uavfl::channel::uplink_rate(c.link, k, 0.0);
  const double down = uavfl::channel::downlink_rate(c.link, 0.0);
  const double up_ref = uavfl::oracle::a2g_rate_mpfr(1e5, 0.1, -50, -110, 100, 0);
  const double down_ref = uavfl::oracle::a2g_rate_mpfr(1e6, 0.01, -50, -110, 100, 0);
  v.require(k == 10, "selected count " + std::to_string(k));
  v.require(rel_err(up, up_ref) < 1e-9, "uplink rel err " + fmt(rel_err(up, up_ref)));
  v.require(rel_err(down, down_ref) < 1e-9, "downlink rel err " + fmt(rel_err(down, down_ref)));
  // Independent closed forms 1e5*log2(1+1e4), 1e6*log2(1+1e3).
  v.require(rel_err(up_ref, 1e5 * std::log2(10001.0)) < 1e-12, "oracle disagrees with 1e5*log2(10001)");
  v.require(rel_err(down_ref, 1e6 * std::log2(1001.0)) < 1e-12, "oracle disagrees with 1e6*log2(1001)");
  char buf[160];
  std::snprintf(buf, sizeof buf, "uplink %.10f b/s, downlink %.10f b/s", up, down);
  v.note(buf);
  return v;
}

Verdict energy_accounting() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  const auto c = cfg::load("", {"scenario.max_rounds=10", "geometry.r_min_m=5", "geometry.r_max_m=5",
                                "compute.cpu_min_ghz=2", "compute.cpu_max_ghz=2"});
  const auto r = uavfl::run(uavfl::build_scenario(c));
  const double elapsed = seconds_since(t0);

  const double payload = 25450.0 * 32.0;
  const double shard_bits = 20.0 * 784.0 * 8.0;
  const double t_compute = 5.0 * 20.0 * shard_bits / 2e9;
  const double t_down = payload / uavfl::oracle::a2g_rate_mpfr(1e6, 0.01, -50, -110, 100, 5);
  const double t_up = payload / uavfl::oracle::a2g_rate_mpfr(1e5, 0.1, -50, -110, 100, 5);
  const double flight = 100.0 * 10.0 * (t_down + t_compute + t_up);
  const double dissem = 0.01 * 10.0 * t_down;

  v.require(r.records.size() == 10, "rounds " + std::to_string(r.records.size()));
  if (!r.records.empty()) {
    const auto& last = r.records.back();
    const double ef = rel_err(last.cumulative_flight_j, flight);
    const double ed = rel_err(last.cumulative_dissemination_j, dissem);
    v.require(ef < 1e-9, "flight rel err " + fmt(ef));
    v.require(ed < 1e-9, "dissemination rel err " + fmt(ed));
    v.note("flight " + fmt(last.cumulative_flight_j) + " J, dissemination " +
           fmt(last.cumulative_dissemination_j) + " J");
  }
  v.note("elapsed " + fmt(elapsed) + " s");
  return v;
}

Verdict negligibility() {
  Verdict v;
  for (std::size_t e : {1, 5, 20}) {
    const auto& r = default_run(e);
    if (r.records.empty()) {
      v.require(false, "E=" + std::to_string(e) + " produced no rounds");
      continue;
    }
    const auto& last = r.records.back();
    const double ratio = last.cumulative_dissemination_j / last.cumulative_flight_j;
    v.require(ratio < 1e-4, "E=" + std::to_string(e) + " ratio " + fmt(ratio));
    v.note("E=" + std::to_string(e) + ": " + fmt(last.cumulative_dissemination_j) + " J / " +
           fmt(last.cumulative_flight_j) + " J = " + fmt(ratio));
  }
  return v;
}

Verdict training_trend() {
  Verdict v;
  const char* mnist_dir = std::getenv("UAVFL_MNIST_DIR");
  std::vector<double> e1, e5;
  double target = 0.85;
  if (mnist_dir != nullptr && *mnist_dir != '\0') {
    target = 0.90;
    const fs::path d(mnist_dir);
    std::vector<std::string> o{
        "data.source=mnist",
        "data.mnist_train_images=" + (d / "train-images-idx3-ubyte").string(),
        "data.mnist_train_labels=" + (d / "train-labels-idx1-ubyte").string(),
        "data.mnist_test_images=" + (d / "t10k-images-idx3-ubyte").string(),
        "data.mnist_test_labels=" + (d / "t10k-labels-idx1-ubyte").string()};
    for (std::size_t e : {1, 5}) {
      auto oe = o;
      oe.push_back("training.epochs=" + std::to_string(e));
      const auto r = uavfl::run(uavfl::build_scenario(cfg::load("", oe)));
      (e == 1 ? e1 : e5) = accuracies(r);
    }
    v.note("MNIST from " + d.string());
  } else {
    e1 = accuracies(default_run(1));
    e5 = accuracies(default_run(5));
    v.note("synthetic data (2000 samples, 10 classes)");
  }
  const auto reached = uavfl::oracle::rounds_to_reach(e5, target);
  v.require(reached.has_value(), "E=5 never reached " + fmt(target));
  const double best = e5.empty() ? 0.0 : *std::max_element(e5.begin(), e5.end());
  v.note("E=5 reaches " + fmt(target) + " at round " +
         (reached ? std::to_string(*reached) : std::string("-")) + ", best " + fmt(best));
  const auto bad = uavfl::oracle::first_ordering_violation(e5, e1);
  v.require(!bad.has_value(), "E=1 reaches " + fmt(bad.value_or(0)) + " before E=5");
  return v;
}

Verdict oracle_equivalences() {
  Verdict v;
  using uavfl::rng::Stream;
  using uavfl::rng::StreamTag;

  // Orchestrated FedAvg with one client against a hand-written SGD loop.
  const std::vector<std::string> small{
      "scenario.num_ues=1",          "scenario.alpha=1",
      "data.synthetic_train_samples=60", "data.synthetic_test_samples=20",
      "data.synthetic_features=6",   "training.layer_dims=6,5,10",
      "training.batch_size=7",       "training.epochs=2",
      "training.learning_rate=0.3"};
  const auto sc = uavfl::build_scenario(cfg::load("", small));
  const auto policy = uavfl::policy_from(sc.config);
  auto sgd = sc.initial_model;
  bool trace_ok = true;
  for (std::size_t round = 1; round <= 8 && trace_ok; ++round) {
    Stream rng(sc.config.seed, StreamTag::client, round, 0);
    std::vector<std::size_t> order = sc.ues[0].shard.indices;
    for (std::size_t e = 0; e < policy.local_epochs; ++e) {
      rng.shuffle(std::span(order));
      for (std::size_t b = 0; b < order.size(); b += policy.batch_size) {
        const std::size_t len = std::min(policy.batch_size, order.size() - b);
        const auto g = uavfl::model::gradient(sgd, sc.train, std::span(order).subspan(b, len));
        for (std::size_t k = 0; k < g.size(); ++k) sgd.params[k] -= policy.learning_rate * g[k];
      }
    }
    auto p = policy;
    p.max_rounds = round;
    const auto r = uavfl::run(sc, p);
    trace_ok = r.final_model_digest == uavfl::model::digest(sgd);
    if (!trace_ok) v.require(false, "trace diverges at round " + std::to_string(round));
  }
  // Direct parameter comparison on one round.
  {
    Stream a(sc.config.seed, StreamTag::client, 1, 0);
    const auto rows = sc.ues[0].shard.indices;
    const std::vector<uavfl::fl::ClientUpdate> ups{
        {0, uavfl::fl::local_update(sc.initial_model, sc.train, rows, policy, a), 1.0}};
    const auto agg = uavfl::fl::fedavg_aggregate(ups);
    auto one = sc.initial_model;
    Stream b(sc.config.seed, StreamTag::client, 1, 0);
    std::vector<std::size_t> order = rows;
    for (std::size_t e = 0; e < policy.local_epochs; ++e) {
      b.shuffle(std::span(order));
      for (std::size_t s = 0; s < order.size(); s += policy.batch_size) {
        const std::size_t len = std::min(policy.batch_size, order.size() - s);
        const auto g = uavfl::model::gradient(one, sc.train, std::span(order).subspan(s, len));
        for (std::size_t k = 0; k < g.size(); ++k) one.params[k] -= policy.learning_rate * g[k];
      }
    }
    v.require(agg.params == one.params, "single-round parameters differ");
  }
  v.note("8-round single-client trace bitwise equal");

  // Aggregation against a brute-force weighted sum.
  Stream s(2024);
  double worst_agg = 0.0;
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + s.below(12);
    const std::size_t dim = 1 + s.below(40);
    std::vector<uavfl::model::ModelState> models;
    std::vector<std::vector<double>> xs;
    std::vector<double> ws;
    for (std::size_t i = 0; i < n; ++i) {
      auto m = uavfl::model::make_model({dim, 1});
      for (auto& p : m.params) p = s.uniform(-10, 10);
      xs.push_back(m.params);
      models.push_back(std::move(m));
      ws.push_back(1.0 + static_cast<double>(s.below(1000)));
    }
    const auto got = uavfl::fl::fedavg_aggregate(models, ws);
    const auto want = uavfl::oracle::weighted_mean(xs, ws);
    for (std::size_t k = 0; k < want.size(); ++k)
      worst_agg = std::max(worst_agg, std::abs(got.params[k] - want[k]) / std::max(1.0, std::abs(want[k])));
  }
  v.require(worst_agg <= 1e-12, "aggregate error " + fmt(worst_agg));
  v.note("aggregate max error " + fmt(worst_agg));

  // Backpropagation against central differences on a 4-2-2 model.
  double worst_fd = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    uavfl::data::Dataset ds;
    ds.feature_dim = 4;
    ds.num_classes = 2;
    for (int i = 0; i < 5 * 4; ++i) ds.features.push_back(static_cast<float>(s.uniform01()));
    for (int i = 0; i < 5; ++i) ds.labels.push_back(static_cast<std::uint8_t>(s.below(2)));
    std::vector<std::size_t> rows(5);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    const auto m = uavfl::model::init_uniform({4, 2, 2}, s, 1.0);
    const auto g = uavfl::model::gradient(m, ds, rows);
    const auto fd = uavfl::oracle::finite_difference_gradient(m, ds, rows, 1e-5);
    for (std::size_t k = 0; k < g.size(); ++k) worst_fd = std::max(worst_fd, rel_err(g[k], fd[k], 1e-7));
  }
  v.require(worst_fd < 1e-4, "gradient rel err " + fmt(worst_fd));
  v.note("gradient max rel err " + fmt(worst_fd));
  return v;
}

Verdict determinism() {
  Verdict v;
  const fs::path dir = fs::temp_directory_path() / "uavfl_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::vector<std::string> texts;
  const std::vector<std::string> threads{"1", "4", "4"};
  for (std::size_t i = 0; i < threads.size(); ++i) {
    const auto c = cfg::load("", {"training.threads=" + threads[i]});
    const auto r = uavfl::run(uavfl::build_scenario(c));
    const auto path = (dir / ("run" + std::to_string(i) + ".csv")).string();
    uavfl::telemetry::emit(r, uavfl::telemetry::Format::csv, path);
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    texts.push_back(ss.str());
  }
  fs::remove_all(dir);
  v.require(texts[0] == texts[1], "threads=1 and threads=4 CSVs differ");
  v.require(texts[1] == texts[2], "two threads=4 CSVs differ");
  v.require(texts[0] == uavfl::telemetry::to_csv(default_run(5)), "repeat run differs");
  v.note(std::to_string(texts[0].size()) + " bytes, 3 runs identical");
  return v;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"link-budget exactness", link_budget},
      {"energy accounting equality", energy_accounting},
      {"dissemination negligible vs flight", negligibility},
      {"training trend", training_trend},
      {"oracle equivalences", oracle_equivalences},
      {"determinism", determinism},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("exception: ") + e.what();
    }
    if (!v.pass) ++failures;
    std::printf("%s %s (%.1f s): %s\n", v.pass ? "PASS" : "FAIL", name.c_str(), seconds_since(t0),
                v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
