#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>

#include "atomic_li/errors.hpp"

namespace ali {

/// Result rank when every key in the searched range exceeds the query.
inline constexpr std::size_t kNoPredecessor = std::numeric_limits<std::size_t>::max();

enum class SearchKind { branchy, branch_free };

inline std::string_view to_string(SearchKind kind) { return kind == SearchKind::branchy ? "bbs" : "bfs"; }

inline SearchKind parse_search_kind(std::string_view name) {
  if (name == "bbs" || name == "branchy") return SearchKind::branchy;
  if (name == "bfs" || name == "branch-free" || name == "branch_free") return SearchKind::branch_free;
  throw InvalidArgument("unknown search kind '" + std::string(name) + "' (expected bbs or bfs)");
}

struct SearchStats {
  std::size_t comparisons = 0;
  std::size_t result_rank = kNoPredecessor;
};

namespace detail {

// Unchecked kernels: callers guarantee lo <= hi < keys.size().

/// Classic binary search for the last key <= `key` with an equality exit.
template <bool kCount>
inline std::size_t branchy(const std::uint64_t* keys, std::uint64_t key, std::size_t lo, std::size_t hi,
                           std::size_t* comparisons) noexcept {
  if constexpr (kCount) ++*comparisons;
  if (keys[lo] > key) return kNoPredecessor;
  // Invariant: keys[lo] <= key, answer in [lo, hi].
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo + 1) / 2;
    if constexpr (kCount) ++*comparisons;
    const std::uint64_t probe = keys[mid];
    if (probe == key) return mid;
    if (probe < key)
      lo = mid;
    else
      hi = mid - 1;
  }
  return lo;
}

/// Uniform binary search: the remaining length halves every step and the
/// base advances by a mask-selected amount, so the loop has no
/// data-dependent branch and runs ceil(log2(hi - lo + 1)) times.
template <bool kCount>
inline std::size_t branch_free(const std::uint64_t* keys, std::uint64_t key, std::size_t lo, std::size_t hi,
                               std::size_t* iterations) noexcept {
  const std::uint64_t* base = keys + lo;
  std::size_t length = hi - lo + 1;
  while (length > 1) {
    const std::size_t half = length / 2;
    const std::size_t take = std::size_t{0} - static_cast<std::size_t>(base[half] <= key);
    base += half & take;
    length -= half;
    if constexpr (kCount) ++*iterations;
  }
  const std::size_t rank = static_cast<std::size_t>(base - keys);
  return *base <= key ? rank : kNoPredecessor;
}

inline void check_bounds(std::span<const std::uint64_t> keys, std::size_t lo, std::size_t hi) {
  if (lo > hi || hi >= keys.size())
    throw InvalidArgument("search bounds [" + std::to_string(lo) + ", " + std::to_string(hi) +
                          "] invalid for table of " + std::to_string(keys.size()) + " keys");
}

}  // namespace detail

/// Largest rank r in [lo, hi] with keys[r] <= key, or kNoPredecessor.
inline std::size_t branchy_search(std::span<const std::uint64_t> keys, std::uint64_t key, std::size_t lo,
                                  std::size_t hi) {
  detail::check_bounds(keys, lo, hi);
  return detail::branchy<false>(keys.data(), key, lo, hi, nullptr);
}

/// Same contract as branchy_search, branch-free loop.
inline std::size_t branch_free_search(std::span<const std::uint64_t> keys, std::uint64_t key, std::size_t lo,
                                      std::size_t hi) {
  detail::check_bounds(keys, lo, hi);
  return detail::branch_free<false>(keys.data(), key, lo, hi, nullptr);
}

inline std::size_t search(SearchKind kind, std::span<const std::uint64_t> keys, std::uint64_t key, std::size_t lo,
                          std::size_t hi) {
  return kind == SearchKind::branchy ? branchy_search(keys, key, lo, hi) : branch_free_search(keys, key, lo, hi);
}

/// Instrumented branchy_search; counts key probes.
inline SearchStats branchy_search_counted(std::span<const std::uint64_t> keys, std::uint64_t key, std::size_t lo,
                                          std::size_t hi) {
  detail::check_bounds(keys, lo, hi);
  SearchStats stats;
  stats.result_rank = detail::branchy<true>(keys.data(), key, lo, hi, &stats.comparisons);
  return stats;
}

/// Instrumented branch_free_search; `comparisons` counts main-loop
/// iterations (the final membership test is not included).
inline SearchStats branch_free_search_counted(std::span<const std::uint64_t> keys, std::uint64_t key,
                                              std::size_t lo, std::size_t hi) {
  detail::check_bounds(keys, lo, hi);
  SearchStats stats;
  stats.result_rank = detail::branch_free<true>(keys.data(), key, lo, hi, &stats.comparisons);
  return stats;
}

}  // namespace ali
