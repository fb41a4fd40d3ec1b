#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace ali {

class Rng;

inline constexpr std::uint64_t kMinKey = 1;
inline constexpr std::uint64_t kMaxKey = (std::uint64_t{1} << 63) - 1;

/// Scale applied to Lognormal(0, 1) samples before rounding to integer keys.
inline constexpr double kLognormalScale = 1e9;

enum class TableDefect { none, too_small, unsorted, duplicate_key, out_of_universe };

/// First structural problem in `keys`, or TableDefect::none.
TableDefect find_defect(std::span<const std::uint64_t> keys);

/// Immutable, strictly increasing array of n >= 2 keys in [kMinKey, kMaxKey].
class SortedTable {
 public:
  /// Throws InvalidArgument if `keys` violates any table invariant.
  explicit SortedTable(std::vector<std::uint64_t> keys);

  std::size_t size() const noexcept { return keys_.size(); }
  std::span<const std::uint64_t> keys() const noexcept { return keys_; }
  const std::uint64_t* data() const noexcept { return keys_.data(); }
  std::uint64_t operator[](std::size_t rank) const noexcept { return keys_[rank]; }
  std::uint64_t min_key() const noexcept { return keys_.front(); }
  std::uint64_t max_key() const noexcept { return keys_.back(); }

  bool contains(std::uint64_t key) const noexcept;

  friend bool operator==(const SortedTable&, const SortedTable&) = default;

 private:
  std::vector<std::uint64_t> keys_;
};

/// Unsorted query keys; the first `member_count` drawn were table members
/// before shuffling, the rest are absent from the table.
struct QueryWorkload {
  std::vector<std::uint64_t> queries;
  std::size_t member_count = 0;

  std::size_t size() const noexcept { return queries.size(); }
  bool empty() const noexcept { return queries.empty(); }

  friend bool operator==(const QueryWorkload&, const QueryWorkload&) = default;
};

enum class KeyDistribution { uniform, lognormal, empirical };

KeyDistribution parse_distribution(std::string_view name);
std::string_view to_string(KeyDistribution dist);

SortedTable generate_uniform(std::size_t n, std::uint64_t seed);
SortedTable generate_lognormal(std::size_t n, std::uint64_t seed);

/// Dispatches to the generator for `dist`; `empirical` is rejected.
SortedTable generate(KeyDistribution dist, std::size_t n, std::uint64_t seed);

/// One key drawn the way generate_lognormal draws it.
std::uint64_t draw_lognormal_key(Rng& rng);

/// round(n / 2), rounding halves up.
constexpr std::size_t workload_size(std::size_t n) { return (n + 1) / 2; }
/// ceil(q / 2).
constexpr std::size_t workload_members(std::size_t q) { return (q + 1) / 2; }

/// Builds a half-member, half-non-member query set of workload_size(n) keys.
///
/// Members are sampled uniformly (with replacement) from the table.
/// Non-members are drawn from `nonmember_dist` and rejected while present.
/// `empirical` draws inside a randomly chosen gap between adjacent table
/// keys, which follows the table's own density and works for loaded tables.
QueryWorkload make_workload(const SortedTable& table, std::uint64_t seed,
                            KeyDistribution nonmember_dist = KeyDistribution::empirical);

// Binary formats (little-endian u64 words):
//   table:    n, key[0..n)              ascending
//   workload: n, member_count, key[0..n) unsorted
void save_table(const SortedTable& table, const std::filesystem::path& path);
SortedTable load_table(const std::filesystem::path& path);
void save_workload(const QueryWorkload& workload, const std::filesystem::path& path);
QueryWorkload load_workload(const std::filesystem::path& path);

}  // namespace ali
