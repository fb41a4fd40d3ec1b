#include "atomic_li/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "atomic_li/errors.hpp"
#include "atomic_li/rng.hpp"

namespace ali {

const char* to_string(LoadErrorKind kind) {
  switch (kind) {
    case LoadErrorKind::io: return "io error";
    case LoadErrorKind::malformed_header: return "malformed header";
    case LoadErrorKind::truncated: return "truncated file";
    case LoadErrorKind::trailing_bytes: return "trailing bytes";
    case LoadErrorKind::unsorted: return "unsorted keys";
    case LoadErrorKind::duplicate_key: return "duplicate key";
    case LoadErrorKind::out_of_universe: return "key outside [1, 2^63-1]";
  }
  return "unknown";
}

TableDefect find_defect(std::span<const std::uint64_t> keys) {
  if (keys.size() < 2) return TableDefect::too_small;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (keys[i] < kMinKey || keys[i] > kMaxKey) return TableDefect::out_of_universe;
    if (i > 0) {
      if (keys[i] == keys[i - 1]) return TableDefect::duplicate_key;
      if (keys[i] < keys[i - 1]) return TableDefect::unsorted;
    }
  }
  return TableDefect::none;
}

namespace {

const char* describe(TableDefect defect) {
  switch (defect) {
    case TableDefect::none: return "valid";
    case TableDefect::too_small: return "a table needs at least 2 keys";
    case TableDefect::unsorted: return "keys are not in ascending order";
    case TableDefect::duplicate_key: return "keys contain a duplicate";
    case TableDefect::out_of_universe: return "key outside [1, 2^63-1]";
  }
  return "invalid";
}

template <typename Draw>
std::vector<std::uint64_t> distinct_sorted(std::size_t n, Draw&& draw) {
  if (n < 2) throw InvalidArgument("table size must be at least 2, got " + std::to_string(n));
  std::vector<std::uint64_t> keys;
  keys.reserve(n);
  while (keys.size() < n) {
    const std::size_t missing = n - keys.size();
    const std::size_t kept = keys.size();
    for (std::size_t i = 0; i < missing; ++i) keys.push_back(draw());
    std::sort(keys.begin() + static_cast<std::ptrdiff_t>(kept), keys.end());
    std::inplace_merge(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(kept), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  }
  return keys;
}

void put_u64(std::ofstream& out, std::uint64_t value) {
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(value >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

std::uint64_t get_u64(const unsigned char* bytes) {
  std::uint64_t value = 0;
  for (int i = 7; i >= 0; --i) value = (value << 8) | bytes[i];
  return value;
}

std::vector<unsigned char> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw LoadError(LoadErrorKind::io, "cannot open " + path.string());
  const auto size = static_cast<std::size_t>(in.tellg());
  std::vector<unsigned char> bytes(size);
  in.seekg(0);
  if (size > 0 && !in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size)))
    throw LoadError(LoadErrorKind::io, "cannot read " + path.string());
  return bytes;
}

// Reads `count` little-endian words starting at word `first`, after checking the size.
std::vector<std::uint64_t> decode_words(const std::vector<unsigned char>& bytes, std::size_t first,
                                        std::uint64_t count, const std::filesystem::path& path) {
  const std::size_t available = bytes.size() / 8 - first;
  if (available < count)
    throw LoadError(LoadErrorKind::truncated,
                    path.string() + " declares " + std::to_string(count) + " keys but holds " +
                        std::to_string(available));
  if (bytes.size() != (first + count) * 8)
    throw LoadError(LoadErrorKind::trailing_bytes, path.string());
  std::vector<std::uint64_t> words(count);
  for (std::size_t i = 0; i < count; ++i) words[i] = get_u64(bytes.data() + 8 * (first + i));
  return words;
}

void open_for_write(std::ofstream& out, const std::filesystem::path& path) {
  out.open(path, std::ios::binary | std::ios::trunc);
  if (!out) throw LoadError(LoadErrorKind::io, "cannot write " + path.string());
}

}  // namespace

SortedTable::SortedTable(std::vector<std::uint64_t> keys) : keys_(std::move(keys)) {
  if (const TableDefect defect = find_defect(keys_); defect != TableDefect::none)
    throw InvalidArgument(describe(defect));
}

bool SortedTable::contains(std::uint64_t key) const noexcept {
  return std::binary_search(keys_.begin(), keys_.end(), key);
}

KeyDistribution parse_distribution(std::string_view name) {
  if (name == "uniform" || name == "uni") return KeyDistribution::uniform;
  if (name == "lognormal" || name == "logn") return KeyDistribution::lognormal;
  if (name == "empirical") return KeyDistribution::empirical;
  throw InvalidArgument("unknown distribution '" + std::string(name) + "'");
}

std::string_view to_string(KeyDistribution dist) {
  switch (dist) {
    case KeyDistribution::uniform: return "uniform";
    case KeyDistribution::lognormal: return "lognormal";
    case KeyDistribution::empirical: return "empirical";
  }
  return "unknown";
}

std::uint64_t draw_lognormal_key(Rng& rng) {
  const double scaled = std::round(std::exp(rng.normal()) * kLognormalScale);
  if (!(scaled >= static_cast<double>(kMinKey))) return kMinKey;
  // 2^63 is the first double above kMaxKey's range.
  if (scaled >= 0x1.0p63) return kMaxKey;
  return static_cast<std::uint64_t>(scaled);
}

SortedTable generate_uniform(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  return SortedTable(distinct_sorted(n, [&] { return rng.uniform(kMinKey, kMaxKey); }));
}

SortedTable generate_lognormal(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  return SortedTable(distinct_sorted(n, [&] { return draw_lognormal_key(rng); }));
}

SortedTable generate(KeyDistribution dist, std::size_t n, std::uint64_t seed) {
  switch (dist) {
    case KeyDistribution::uniform: return generate_uniform(n, seed);
    case KeyDistribution::lognormal: return generate_lognormal(n, seed);
    case KeyDistribution::empirical: break;
  }
  throw InvalidArgument("the empirical distribution cannot generate tables");
}

QueryWorkload make_workload(const SortedTable& table, std::uint64_t seed,
                            KeyDistribution nonmember_dist) {
  Rng rng(seed);
  const std::span<const std::uint64_t> keys = table.keys();
  const std::size_t n = keys.size();

  QueryWorkload workload;
  const std::size_t total = workload_size(n);
  workload.member_count = workload_members(total);
  workload.queries.reserve(total);

  for (std::size_t i = 0; i < workload.member_count; ++i) workload.queries.push_back(keys[rng.index(n)]);

  auto draw_empirical = [&]() -> std::uint64_t {
    // Gaps of width zero (adjacent integers) are skipped; after repeated
    // misses fall back to the whole universe.
    for (int attempt = 0; attempt < 64; ++attempt) {
      const std::size_t gap = rng.index(n - 1);
      const std::uint64_t lo = keys[gap];
      const std::uint64_t hi = keys[gap + 1];
      if (hi - lo >= 2) return rng.uniform(lo + 1, hi - 1);
    }
    return rng.uniform(kMinKey, kMaxKey);
  };

  while (workload.queries.size() < total) {
    std::uint64_t candidate = 0;
    switch (nonmember_dist) {
      case KeyDistribution::uniform: candidate = rng.uniform(kMinKey, kMaxKey); break;
      case KeyDistribution::lognormal: candidate = draw_lognormal_key(rng); break;
      case KeyDistribution::empirical: candidate = draw_empirical(); break;
    }
    if (!table.contains(candidate)) workload.queries.push_back(candidate);
  }

  rng.shuffle(std::span<std::uint64_t>(workload.queries));
  return workload;
}

void save_table(const SortedTable& table, const std::filesystem::path& path) {
  std::ofstream out;
  open_for_write(out, path);
  put_u64(out, table.size());
  for (std::uint64_t key : table.keys()) put_u64(out, key);
  if (!out) throw LoadError(LoadErrorKind::io, "write failed for " + path.string());
}

SortedTable load_table(const std::filesystem::path& path) {
  const std::vector<unsigned char> bytes = read_all(path);
  if (bytes.size() < 8) throw LoadError(LoadErrorKind::malformed_header, path.string() + " is shorter than its header");
  const std::uint64_t n = get_u64(bytes.data());
  if (n < 2)
    throw LoadError(LoadErrorKind::malformed_header, path.string() + " declares " + std::to_string(n) + " keys");
  std::vector<std::uint64_t> keys = decode_words(bytes, 1, n, path);
  switch (find_defect(keys)) {
    case TableDefect::none: break;
    case TableDefect::too_small: throw LoadError(LoadErrorKind::malformed_header, path.string());
    case TableDefect::unsorted: throw LoadError(LoadErrorKind::unsorted, path.string());
    case TableDefect::duplicate_key: throw LoadError(LoadErrorKind::duplicate_key, path.string());
    case TableDefect::out_of_universe: throw LoadError(LoadErrorKind::out_of_universe, path.string());
  }
  return SortedTable(std::move(keys));
}

void save_workload(const QueryWorkload& workload, const std::filesystem::path& path) {
  std::ofstream out;
  open_for_write(out, path);
  put_u64(out, workload.queries.size());
  put_u64(out, workload.member_count);
  for (std::uint64_t key : workload.queries) put_u64(out, key);
  if (!out) throw LoadError(LoadErrorKind::io, "write failed for " + path.string());
}

QueryWorkload load_workload(const std::filesystem::path& path) {
  const std::vector<unsigned char> bytes = read_all(path);
  if (bytes.size() < 16) throw LoadError(LoadErrorKind::malformed_header, path.string() + " is shorter than its header");
  const std::uint64_t n = get_u64(bytes.data());
  const std::uint64_t members = get_u64(bytes.data() + 8);
  if (members > n)
    throw LoadError(LoadErrorKind::malformed_header,
                    path.string() + " declares more members than queries");
  QueryWorkload workload;
  workload.queries = decode_words(bytes, 2, n, path);
  workload.member_count = members;
  return workload;
}

}  // namespace ali
