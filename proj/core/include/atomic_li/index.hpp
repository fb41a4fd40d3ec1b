#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>

#include "atomic_li/dataset.hpp"
#include "atomic_li/model.hpp"
#include "atomic_li/search.hpp"

namespace ali {

/// Inclusive rank range [lo, hi].
struct Interval {
  std::size_t lo = 0;
  std::size_t hi = 0;

  std::size_t length() const noexcept { return hi - lo + 1; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

struct Predecessor {
  std::size_t rank = kNoPredecessor;
  std::uint64_t value = 0;

  bool found() const noexcept { return rank != kNoPredecessor; }
  friend bool operator==(const Predecessor&, const Predecessor&) = default;
};

/// Clamps a real rank estimate to [0, n-1] and rounds half away from zero.
inline std::size_t clamp_round(double estimate, std::size_t n) noexcept {
  const double top = static_cast<double>(n - 1);
  // NaN falls through to 0.
  const double clamped = estimate > 0.0 ? std::min(estimate, top) : 0.0;
  return static_cast<std::size_t>(std::round(clamped));
}

/// max over table keys of |clamp_round(predict(key)) - rank|.
template <typename Predictor>
std::size_t compute_epsilon(const Predictor& model, const SortedTable& table) {
  const std::size_t n = table.size();
  std::size_t epsilon = 0;
  for (std::size_t rank = 0; rank < n; ++rank) {
    const std::size_t p = clamp_round(model.predict(table[rank]), n);
    epsilon = std::max(epsilon, p > rank ? p - rank : rank - p);
  }
  return epsilon;
}

/// Prediction window around `predicted`, widened until it brackets the
/// predecessor of `key`. `repaired`, when given, is set if widening happened.
inline Interval bracket(const std::uint64_t* keys, std::size_t n, std::size_t predicted, std::size_t epsilon,
                        std::uint64_t key, bool* repaired = nullptr) noexcept {
  Interval window;
  window.lo = predicted > epsilon ? predicted - epsilon : 0;
  window.hi = std::min(n - 1, predicted + std::min(epsilon, n));
  bool widened = false;
  if (key < keys[window.lo] && window.lo != 0) {
    window.lo = 0;
    widened = true;
  }
  if (window.hi < n - 1 && key >= keys[window.hi + 1]) {
    window.hi = n - 1;
    widened = true;
  }
  if (repaired) *repaired = widened;
  return window;
}

/// A table, a CDF model trained on it, the model's error bound and the
/// search routine used inside the predicted interval. Immutable.
class AtomicIndex {
 public:
  /// Computes epsilon from the model over every table key.
  AtomicIndex(std::shared_ptr<const SortedTable> table, CdfModel model, SearchKind search);
  /// Uses the supplied epsilon as is (may exceed the true error).
  AtomicIndex(std::shared_ptr<const SortedTable> table, CdfModel model, SearchKind search, std::size_t epsilon);

  const SortedTable& table() const noexcept { return *table_; }
  const std::shared_ptr<const SortedTable>& shared_table() const noexcept { return table_; }
  const CdfModel& model() const noexcept { return model_; }
  std::size_t epsilon() const noexcept { return epsilon_; }
  SearchKind search_kind() const noexcept { return search_; }

  /// Same index with a different final search routine.
  AtomicIndex with_search(SearchKind search) const { return AtomicIndex(table_, model_, search, epsilon_); }

  Interval predict_interval(std::uint64_t key, bool* repaired = nullptr) const {
    return model_.visit([&](const auto& m) { return interval_with(m, key, repaired); });
  }

  Predecessor lookup(std::uint64_t key) const {
    return model_.visit([&](const auto& m) { return lookup_with(m, key); });
  }

  /// Kernel used by lookup() once the model type is known; exposed for
  /// benchmarking loops that dispatch once per batch.
  template <typename Model>
  Interval interval_with(const Model& m, std::uint64_t key, bool* repaired = nullptr) const noexcept {
    const std::size_t n = table_->size();
    return bracket(table_->data(), n, clamp_round(m.predict(key), n), epsilon_, key, repaired);
  }

  template <typename Model>
  Predecessor lookup_with(const Model& m, std::uint64_t key) const noexcept {
    const Interval window = interval_with(m, key);
    const std::uint64_t* keys = table_->data();
    const std::size_t rank = search_ == SearchKind::branchy
                                 ? detail::branchy<false>(keys, key, window.lo, window.hi, nullptr)
                                 : detail::branch_free<false>(keys, key, window.lo, window.hi, nullptr);
    if (rank == kNoPredecessor) return {};
    return {rank, keys[rank]};
  }

 private:
  std::shared_ptr<const SortedTable> table_;
  CdfModel model_;
  SearchKind search_;
  std::size_t epsilon_;
};

}  // namespace ali
