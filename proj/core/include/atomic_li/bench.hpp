#pragma once

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "atomic_li/dataset.hpp"
#include "atomic_li/index.hpp"
#include "atomic_li/model.hpp"

namespace ali {

using Clock = std::chrono::steady_clock;

/// Mean over the workload of 100 * (1 - |I(q)| / n), using predict_interval
/// bounds after bracket repair. Throws InvalidArgument on an empty workload.
double reduction_factor(const AtomicIndex& index, const QueryWorkload& workload);

/// Number of workload queries whose interval needed bracket repair.
std::size_t count_repairs(const AtomicIndex& index, const QueryWorkload& workload);

/// Smallest observable steady_clock increment, in seconds (measured once).
double clock_granularity();

struct Timing {
  double seconds_per_element = 0.0;
  /// Set when the timed total was under 100x the clock granularity.
  bool unreliable = false;
  std::uint64_t checksum = 0;
};

double median(std::vector<double> values);

/// Median over `repeats` runs of (wall time of `run()` / elements).
/// `run` returns a value folded into the checksum of the last run.
/// One untimed warm-up call precedes measurement when `warmup` is set.
Timing measure_per_element(const std::function<std::uint64_t()>& run, std::size_t elements, std::size_t repeats,
                           bool warmup = true);

/// Median per-element training time of `fit(table)` over `repeats` runs.
template <typename Fitter>
Timing time_training(Fitter&& fit, const SortedTable& table, std::size_t repeats) {
  if (repeats < 1) throw InvalidArgument("repeats must be >= 1");
  return measure_per_element(
      [&]() -> std::uint64_t {
        fit(table);
        return 0;
      },
      table.size(), repeats, /*warmup=*/false);
}

/// Median per-query lookup time; the checksum sums ranks of every result.
Timing time_queries(const AtomicIndex& index, const QueryWorkload& workload, std::size_t repeats);

/// Same harness with no model: plain search over the whole table.
Timing time_plain_search(const SortedTable& table, SearchKind kind, const QueryWorkload& workload,
                         std::size_t repeats);

/// Prediction only (model evaluation + clamp/round), no interval or search.
Timing time_predictions(const CdfModel& model, std::size_t n, const QueryWorkload& workload, std::size_t repeats);

/// Timing of a loop that only folds each query into the checksum.
Timing time_noop(const QueryWorkload& workload, std::size_t repeats);

struct BenchRow {
  std::string dataset;
  std::string model;
  std::string search;
  std::size_t n = 0;
  std::optional<std::size_t> epsilon;
  std::optional<double> train_s_per_elem;
  std::optional<double> rf_percent;
  std::optional<double> query_s_per_elem;
  std::size_t repeats = 0;
  /// ';'-separated tokens, e.g. "repairs=12;query_unreliable" or "error=...".
  std::string flags;

  bool failed() const noexcept { return flags.find("error=") != std::string::npos; }
  friend bool operator==(const BenchRow&, const BenchRow&) = default;
};

struct BenchDataset {
  std::string name;
  std::shared_ptr<const SortedTable> table;
  QueryWorkload workload;
};

struct SuiteConfig {
  TrainConfig nn;
  std::size_t repeats = 5;
  /// Training repeats for neural models; each repeat is a full training run.
  std::size_t nn_train_repeats = 1;
  /// Emit a model "none" row per search kind timing a plain full-table search.
  bool include_baseline = false;
  std::function<void(const std::string&)> progress;
};

/// Cross product dataset x model x search in that order. Failures while
/// training a model become rows whose flags carry "error=<message>".
std::vector<BenchRow> run_suite(const std::vector<BenchDataset>& datasets, const std::vector<ModelKind>& models,
                                const std::vector<SearchKind>& searches, const SuiteConfig& config);

inline constexpr const char* kCsvHeader =
    "dataset,model,search,n,epsilon,train_s_per_elem,rf_percent,query_s_per_elem,repeats,flags";

void write_csv(std::ostream& out, const std::vector<BenchRow>& rows);
/// Parses CSV produced by write_csv; throws LoadError on malformed input.
std::vector<BenchRow> read_csv(std::istream& in);

/// Fixed-width table for terminals.
void print_table(std::ostream& out, const std::vector<BenchRow>& rows);

}  // namespace ali
