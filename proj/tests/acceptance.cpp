// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. --full-nn also times NN1 under the 2000-epoch preset
// (about ten times the desk run). --report-only exits nonzero only when a
// criterion could not be evaluated (it threw); FAIL lines are still printed.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "atomic_li/bench.hpp"
#include "atomic_li/dataset.hpp"
#include "atomic_li/index.hpp"
#include "atomic_li/model.hpp"
#include "atomic_li/neural.hpp"
#include "atomic_li/rng.hpp"
#include "atomic_li/search.hpp"
#include "oracles.hpp"

using namespace ali;

namespace {

using Seconds = std::chrono::duration<double>;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Runner {
  int failures = 0;
  int errors = 0;

  void run(const char* id, const char* name, double limit_s, const std::function<Outcome()>& body) {
    const auto start = Clock::now();
    Outcome outcome;
    try {
      outcome = body();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
      ++errors;
    }
    const double elapsed = Seconds(Clock::now() - start).count();
    const bool in_time = elapsed < limit_s;
    const bool pass = outcome.pass && in_time;
    if (!pass) ++failures;
    std::printf("%s %s %s: %s [%.2fs, limit %.0fs%s]\n", pass ? "PASS" : "FAIL", id, name, outcome.detail.c_str(),
                elapsed, limit_s, in_time ? "" : ", exceeded");
    std::fflush(stdout);
  }
};

std::string format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

/// Trained models and tables shared between criteria.
struct Fixtures {
  std::shared_ptr<const SortedTable> uni_large;  // n = 1.05e6
  QueryWorkload uni_large_workload;
  std::shared_ptr<const SortedTable> uni_small;  // n = 1e5
  std::shared_ptr<const SortedTable> logn_small;
  std::optional<CdfModel> nn1_desk;
  double nn1_desk_train = 0.0;
  std::map<std::pair<const SortedTable*, ModelKind>, CdfModel> trained;
};

constexpr std::size_t kLargeN = 1050000;
constexpr std::size_t kSmallN = 100000;
constexpr std::uint64_t kSeed = 42;

// Neural models other than the desk-trained NN1 only need to be valid CDF
// models for the correctness criteria; a short budget keeps NN2 affordable.
// NN2 diverges at the default learning rate, so it trains at 0.01 here.
TrainConfig short_budget(ModelKind kind) {
  TrainConfig config = TrainConfig::desk();
  config.epochs = 3;
  if (kind == ModelKind::nn2) config.learning_rate = 0.01;
  return config;
}

Outcome ten_key_epsilon() {
  const SortedTable table({47, 105, 140, 289, 316, 358, 386, 398, 819, 939});
  const auto start = Clock::now();
  const PolynomialModel model = fit_polynomial(table, 1);
  const std::size_t eps = compute_epsilon(model, table);
  const double micros = std::chrono::duration<double, std::micro>(Clock::now() - start).count();

  std::vector<double> x, y, preds;
  for (std::size_t i = 0; i < table.size(); ++i) {
    x.push_back(static_cast<double>(table[i]));
    y.push_back(static_cast<double>(i));
  }
  const oracle::Line line = oracle::simple_regression(x, y);
  for (double k : x) preds.push_back(line.slope * k + line.intercept);
  const std::size_t oracle_eps = oracle::max_rounded_error(preds);
  return {eps == oracle_eps && eps == 2 && micros < 1000.0,
          format("epsilon=%zu oracle=%zu fit+eps=%.1fus", eps,
                 oracle_eps, micros)};
}

Outcome uniform_rf(Fixtures& fx) {
  const AtomicIndex index(fx.uni_large, train_model(ModelKind::linear, *fx.uni_large), SearchKind::branch_free);
  const double rf = reduction_factor(index, fx.uni_large_workload);
  return {rf >= 99.85 && rf < 100.0, format("L rf=%.4f%% epsilon=%zu (target [99.85, 100))", rf, index.epsilon())};
}

Outcome lognormal_ordering() {
  const auto table = std::make_shared<const SortedTable>(generate_lognormal(kLargeN, kSeed));
  const QueryWorkload workload = make_workload(*table, kSeed + 1);
  double rf[3];
  std::size_t eps[3];
  const ModelKind kinds[3] = {ModelKind::linear, ModelKind::quadratic, ModelKind::cubic};
  for (int i = 0; i < 3; ++i) {
    const AtomicIndex index(table, train_model(kinds[i], *table), SearchKind::branch_free);
    rf[i] = reduction_factor(index, workload);
    eps[i] = index.epsilon();
  }
  return {rf[0] < rf[1] && rf[1] < rf[2],
          format("rf L=%.2f%% Q=%.2f%% C=%.2f%% epsilon L=%zu Q=%zu C=%zu (want L < Q < C)", rf[0], rf[1], rf[2],
                 eps[0], eps[1], eps[2])};
}

Outcome training_gap(Fixtures& fx, bool full_preset) {
  const SortedTable& table = *fx.uni_small;
  const Timing linear = time_training([](const SortedTable& t) { fit_polynomial(t, 1); }, table, 5);
  const Timing nn1 = time_training(
      [&](const SortedTable& t) { fx.nn1_desk.emplace(train_model(ModelKind::nn1, t, TrainConfig::desk())); }, table, 1);
  fx.nn1_desk_train = nn1.seconds_per_element;
  const double ratio = nn1.seconds_per_element / linear.seconds_per_element;
  std::string detail = format("L=%.3g s/elem NN1(desk)=%.3g s/elem ratio=%.3g (want >= 100)", linear.seconds_per_element,
                              nn1.seconds_per_element, ratio);
  if (full_preset) {
    const Timing full = time_training(
        [](const SortedTable& t) { train_model(ModelKind::nn1, t, TrainConfig::full()); }, table, 1);
    detail += format("; 2000-epoch ratio=%.3g", full.seconds_per_element / linear.seconds_per_element);
  } else {
    detail += "; 2000-epoch preset not run";
  }
  return {ratio >= 100.0 && !linear.unreliable, detail};
}

Outcome query_speed(Fixtures& fx) {
  const AtomicIndex index(fx.uni_large, train_model(ModelKind::linear, *fx.uni_large), SearchKind::branch_free);
  const Timing learned = time_queries(index, fx.uni_large_workload, 5);
  const Timing plain = time_plain_search(*fx.uni_large, SearchKind::branch_free, fx.uni_large_workload, 5);
  const double ratio = learned.seconds_per_element / plain.seconds_per_element;
  return {ratio <= 0.67 && learned.checksum == plain.checksum,
          format("L-BFS=%.3g s/query plain BFS=%.3g s/query ratio=%.3f (want <= 0.67)", learned.seconds_per_element,
                 plain.seconds_per_element, ratio)};
}

Outcome nn_query_penalty(Fixtures& fx) {
  const SortedTable& table = *fx.uni_small;
  const QueryWorkload workload = make_workload(table, kSeed + 1);
  const CdfModel linear = train_model(ModelKind::linear, table);
  const Timing l = time_predictions(linear, table.size(), workload, 5);
  const Timing nn = time_predictions(*fx.nn1_desk, table.size(), workload, 5);
  const double ratio = nn.seconds_per_element / l.seconds_per_element;
  return {ratio >= 5.0, format("NN1=%.3g s/prediction L=%.3g s/prediction ratio=%.3g (want >= 5)",
                               nn.seconds_per_element, l.seconds_per_element, ratio)};
}

Outcome search_equivalence() {
  std::size_t cases = 0, mismatches = 0;
  auto check = [&](std::span<const std::uint64_t> keys, std::uint64_t q, std::size_t lo, std::size_t hi) {
    const std::size_t want = oracle::predecessor_scan(keys, q, lo, hi);
    ++cases;
    if (branchy_search(keys, q, lo, hi) != want || branch_free_search(keys, q, lo, hi) != want) ++mismatches;
  };
  for (std::size_t n = 1; n <= 64; ++n) {
    std::vector<std::uint64_t> keys(n);
    for (std::size_t i = 0; i < n; ++i) keys[i] = 2 * (i + 1);
    for (std::size_t lo = 0; lo < n; ++lo)
      for (std::size_t hi = lo; hi < n; ++hi)
        for (std::uint64_t q = 1; q <= 2 * n + 1; ++q) check(keys, q, lo, hi);
  }
  const std::size_t exhaustive = cases;

  const SortedTable table = generate_uniform(1 << 20, 7);
  const auto keys = table.keys();
  Rng rng(8);
  for (int i = 0; i < 1000000; ++i) {
    // Range lengths spread over 1 .. 4096 on a log scale.
    const std::size_t length = std::size_t{1} << rng.index(13);
    const std::size_t span = std::min(keys.size(), length + rng.index(length));
    const std::size_t lo = rng.index(keys.size() - span + 1);
    const std::size_t hi = lo + span - 1;
    std::uint64_t q;
    switch (rng.index(4)) {
      case 0: q = keys[lo + rng.index(span)]; break;
      case 1: q = keys[lo + rng.index(span)] + 1; break;
      case 2: q = rng.uniform(0, kMaxKey); break;
      default: q = keys[lo] - 1; break;
    }
    check(keys, q, lo, hi);
  }
  return {mismatches == 0,
          format("%zu exhaustive + %zu random cases, %zu mismatches", exhaustive, cases - exhaustive, mismatches)};
}

CdfModel model_for(Fixtures& fx, ModelKind kind, const SortedTable& table) {
  if (kind == ModelKind::nn1 && &table == fx.uni_small.get()) return *fx.nn1_desk;
  const auto key = std::make_pair(&table, kind);
  auto it = fx.trained.find(key);
  if (it == fx.trained.end()) it = fx.trained.emplace(key, train_model(kind, table, short_budget(kind))).first;
  return it->second;
}

Outcome lookup_correctness(Fixtures& fx) {
  std::size_t checked = 0, wrong = 0;
  std::string failures;
  for (const auto& table : {fx.uni_small, fx.logn_small}) {
    QueryWorkload workload = make_workload(*table, 101);
    const QueryWorkload more = make_workload(*table, 102);
    workload.queries.insert(workload.queries.end(), more.queries.begin(), more.queries.end());
    const auto truth = oracle::predecessor_sweep(table->keys(), workload.queries);
    for (ModelKind kind : kAllModels) {
      const CdfModel model = model_for(fx, kind, *table);
      const AtomicIndex base(table, model, SearchKind::branchy);
      for (SearchKind search : {SearchKind::branchy, SearchKind::branch_free}) {
        const AtomicIndex index = base.with_search(search);
        std::size_t bad = 0;
        for (std::size_t i = 0; i < workload.queries.size(); ++i) {
          const Predecessor got = index.lookup(workload.queries[i]);
          if (got.rank != truth[i] || (got.found() && got.value != (*table)[got.rank])) ++bad;
        }
        checked += workload.queries.size();
        wrong += bad;
        if (bad) failures += format(" %s-%s:%zu", std::string(to_string(kind)).c_str(),
                                    std::string(to_string(search)).c_str(), bad);
      }
    }
  }
  return {wrong == 0, format("%zu lookups over 6 models x 2 searches x 2 tables, %zu wrong%s", checked, wrong,
                             failures.c_str())};
}

Outcome epsilon_containment(Fixtures& fx) {
  std::size_t violations = 0, models = 0;
  std::string summary;
  for (const auto& table : {fx.uni_small, fx.logn_small}) {
    for (ModelKind kind : kAllModels) {
      const CdfModel model = model_for(fx, kind, *table);
      const AtomicIndex index(table, model, SearchKind::branch_free);
      std::vector<double> preds;
      preds.reserve(table->size());
      for (std::uint64_t k : table->keys()) preds.push_back(model.predict(k));
      if (oracle::max_rounded_error(preds) != index.epsilon()) ++violations;
      const double top = static_cast<double>(table->size() - 1);
      for (std::size_t r = 0; r < table->size(); ++r) {
        const double p = std::round(std::clamp(preds[r], 0.0, top));
        const double eps = static_cast<double>(index.epsilon());
        if (static_cast<double>(r) < p - eps || static_cast<double>(r) > p + eps) ++violations;
        const Interval window = index.predict_interval((*table)[r]);
        if (r < window.lo || r > window.hi) ++violations;
      }
      ++models;
      summary += format(" %s=%zu", std::string(to_string(kind)).c_str(), index.epsilon());
    }
  }
  return {violations == 0, format("%zu models, %zu violations; epsilon uni/logn:%s", models, violations,
                                  summary.c_str())};
}

Outcome gradient_check() {
  constexpr int kCases = 100;
  constexpr int kParamsPerCase = 24;
  constexpr double kStep = 1e-6;
  Rng rng(55);
  double worst = 0.0;
  std::size_t checked = 0, kinks = 0;
  for (int h = 0; h <= 2; ++h) {
    for (int c = 0; c < kCases; ++c) {
      NeuralModel model = NeuralModel::initialized(h, 1000.0, rng.next());
      std::vector<Sample> batch(1 + rng.index(4));
      for (Sample& s : batch) {
        s.encoding = binarize(rng.uniform(0, kMaxKey));
        s.target = rng.unit();
      }
      const LayerStack grad = backward(model, batch);
      for (int p = 0; p < kParamsPerCase; ++p) {
        const std::size_t l = rng.index(model.layers().size());
        DenseLayer& layer = model.layers()[l];
        const bool bias = rng.index(8) == 0;
        const std::size_t i = bias ? rng.index(layer.bias.size()) : rng.index(layer.weights.size());
        double& param = bias ? layer.bias[i] : layer.weights[i];
        const double analytic = bias ? grad[l].bias[i] : grad[l].weights[i];
        const double saved = param;
        auto central = [&](double step) {
          param = saved + step;
          const double up = oracle::naive_loss(model, batch);
          param = saved - step;
          const double down = oracle::naive_loss(model, batch);
          param = saved;
          return (up - down) / (2 * step);
        };
        const double numeric = central(kStep);
        // A relu switching inside [-step, step] makes the loss non-smooth
        // there; two step sizes disagreeing marks such a kink.
        const double finer = central(kStep / 4);
        const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
        if (std::abs(numeric - finer) > 1e-3 * scale) {
          ++kinks;
          continue;
        }
        worst = std::max(worst, std::abs(numeric - analytic) / scale);
        ++checked;
      }
    }
  }
  return {worst < 1e-4 && kinks * 100 < checked,
          format("%zu parameters over %d cases per H in {0,1,2}, max relative error %.3g (want < 1e-4), %zu kinks "
                 "skipped",
                 checked, kCases, worst, kinks)};
}

}  // namespace

int main(int argc, char** argv) {
  bool full_preset = false;
  bool report_only = false;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--full-nn") == 0) {
      full_preset = true;
    } else if (std::strcmp(argv[i], "--report-only") == 0) {
      report_only = true;
    } else {
      std::fprintf(stderr, "usage: %s [--full-nn] [--report-only]\n", argv[0]);
      return 2;
    }
  }

  Fixtures fx;
  fx.uni_large = std::make_shared<const SortedTable>(generate_uniform(kLargeN, kSeed));
  fx.uni_large_workload = make_workload(*fx.uni_large, kSeed + 1);
  fx.uni_small = std::make_shared<const SortedTable>(generate_uniform(kSmallN, kSeed));
  fx.logn_small = std::make_shared<const SortedTable>(generate_lognormal(kSmallN, kSeed));

  Runner runner;
  runner.run("01", "ten-key epsilon", 1.0, ten_key_epsilon);
  runner.run("02", "uniform L reduction factor", 30.0, [&] { return uniform_rf(fx); });
  runner.run("03", "lognormal reduction ordering", 120.0, lognormal_ordering);
  runner.run("04", "training cost gap", full_preset ? 9000.0 : 900.0, [&] { return training_gap(fx, full_preset); });
  runner.run("05", "learned vs plain BFS", 60.0, [&] { return query_speed(fx); });
  runner.run("06", "NN prediction penalty", 300.0, [&] {
    if (!fx.nn1_desk) return Outcome{false, "NN1 model unavailable (training criterion failed)"};
    return nn_query_penalty(fx);
  });
  runner.run("07", "search equivalence", 60.0, search_equivalence);
  runner.run("08", "lookup correctness", 300.0, [&] {
    if (!fx.nn1_desk) fx.nn1_desk.emplace(train_model(ModelKind::nn1, *fx.uni_small, short_budget(ModelKind::nn1)));
    return lookup_correctness(fx);
  });
  runner.run("09", "epsilon containment", 60.0, [&] { return epsilon_containment(fx); });
  runner.run("10", "gradient check", 60.0, gradient_check);

  std::printf("%d of 10 criteria failed\n", runner.failures);
  if (report_only) return runner.errors == 0 ? 0 : 1;
  return runner.failures == 0 ? 0 : 1;
}
