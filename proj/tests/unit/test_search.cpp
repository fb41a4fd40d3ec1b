#include <doctest.h>

#include <bit>
#include <cmath>

#include "atomic_li/dataset.hpp"
#include "atomic_li/rng.hpp"
#include "atomic_li/search.hpp"
#include "oracles.hpp"

using namespace ali;

namespace {

std::size_t ceil_log2(std::size_t x) { return x <= 1 ? 0 : static_cast<std::size_t>(std::bit_width(x - 1)); }

}  // namespace

TEST_SUITE("search") {
  TEST_CASE("small fixed cases") {
    const std::vector<std::uint64_t> keys = {1, 3, 5};
    CHECK(branchy_search(keys, 4, 0, 2) == 1);
    CHECK(branch_free_search(keys, 4, 0, 2) == 1);
    CHECK(branchy_search(keys, 0, 0, 2) == kNoPredecessor);
    CHECK(branch_free_search(keys, 0, 0, 2) == kNoPredecessor);
    CHECK(branchy_search(keys, 5, 0, 2) == 2);
    CHECK(branch_free_search(keys, 99, 0, 2) == 2);
  }

  TEST_CASE("singleton range") {
    const std::vector<std::uint64_t> keys = {10, 20, 30};
    for (std::size_t r = 0; r < 3; ++r) {
      CHECK(branch_free_search(keys, keys[r], r, r) == r);
      CHECK(branch_free_search(keys, keys[r] - 1, r, r) == kNoPredecessor);
      CHECK(branchy_search(keys, keys[r] + 1, r, r) == r);
    }
  }

  TEST_CASE("invalid bounds are rejected") {
    const std::vector<std::uint64_t> keys = {1, 3, 5};
    CHECK_THROWS_AS(branchy_search(keys, 2, 2, 1), InvalidArgument);
    CHECK_THROWS_AS(branch_free_search(keys, 2, 0, 3), InvalidArgument);
    CHECK_THROWS_AS(branchy_search(std::span<const std::uint64_t>{}, 2, 0, 0), InvalidArgument);
    CHECK_THROWS_AS(parse_search_kind("linear"), InvalidArgument);
  }

  TEST_CASE("exhaustive equivalence on all tables up to 64 keys") {
    // Keys 2, 4, ..., 2n; queries 1..2n+1 hit every gap and every key.
    for (std::size_t n = 1; n <= 64; ++n) {
      std::vector<std::uint64_t> keys(n);
      for (std::size_t i = 0; i < n; ++i) keys[i] = 2 * (i + 1);
      for (std::size_t lo = 0; lo < n; ++lo)
        for (std::size_t hi = lo; hi < n; ++hi)
          for (std::uint64_t q = 1; q <= 2 * n + 1; ++q) {
            const std::size_t want = oracle::predecessor_scan(keys, q, lo, hi);
            REQUIRE(branchy_search(keys, q, lo, hi) == want);
            REQUIRE(branch_free_search(keys, q, lo, hi) == want);
          }
    }
  }

  TEST_CASE("randomized equivalence on large tables") {
    Rng rng(7);
    const SortedTable table = generate_uniform(1 << 16, 3);
    const auto keys = table.keys();
    for (int i = 0; i < 20000; ++i) {
      std::size_t lo = rng.index(keys.size());
      std::size_t hi = rng.index(keys.size());
      if (lo > hi) std::swap(lo, hi);
      if (hi - lo > 3000) hi = lo + rng.index(3000);
      const std::uint64_t q = rng.unit() < 0.5 ? keys[rng.index(keys.size())] : rng.uniform(0, kMaxKey);
      const std::size_t want = oracle::predecessor_scan(keys, q, lo, hi);
      REQUIRE(branchy_search(keys, q, lo, hi) == want);
      REQUIRE(branch_free_search(keys, q, lo, hi) == want);
    }
  }

  TEST_CASE("branch-free iteration count is ceil(log2(range)) for every key") {
    const SortedTable table = generate_uniform(5000, 5);
    const auto keys = table.keys();
    Rng rng(9);
    for (std::size_t length : {1u, 2u, 3u, 7u, 8u, 9u, 100u, 1000u, 4096u, 5000u}) {
      const std::size_t lo = rng.index(keys.size() - length + 1);
      const std::size_t hi = lo + length - 1;
      for (int i = 0; i < 200; ++i) {
        const std::uint64_t q = i % 3 == 0 ? 0 : (i % 3 == 1 ? kMaxKey : keys[lo + rng.index(length)]);
        const SearchStats stats = branch_free_search_counted(keys, q, lo, hi);
        CHECK(stats.comparisons == ceil_log2(length));
        CHECK(stats.result_rank == branch_free_search(keys, q, lo, hi));
      }
    }
  }

  TEST_CASE("branchy comparisons stay within ceil(log2(range)) + 1") {
    const SortedTable table = generate_uniform(5000, 6);
    const auto keys = table.keys();
    Rng rng(10);
    for (int i = 0; i < 5000; ++i) {
      std::size_t lo = rng.index(keys.size());
      std::size_t hi = rng.index(keys.size());
      if (lo > hi) std::swap(lo, hi);
      const std::uint64_t q = rng.uniform(0, kMaxKey);
      const SearchStats stats = branchy_search_counted(keys, q, lo, hi);
      CHECK(stats.comparisons <= ceil_log2(hi - lo + 1) + 1);
      CHECK(stats.result_rank == oracle::predecessor_scan(keys, q, lo, hi));
    }
  }
}
