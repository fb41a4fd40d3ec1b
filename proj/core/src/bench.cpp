#include "atomic_li/bench.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "atomic_li/errors.hpp"

namespace ali {
namespace {

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string format_double(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

std::string sanitize(std::string text) {
  for (char& c : text)
    if (c == ',' || c == '\n' || c == '\r') c = ' ';
  return text;
}

BenchRow make_row(const std::string& dataset, const std::string& model, SearchKind search, std::size_t n,
                  std::size_t repeats) {
  BenchRow row;
  row.dataset = dataset;
  row.model = model;
  row.search = std::string(to_string(search));
  row.n = n;
  row.repeats = repeats;
  return row;
}

void append_flag(std::string& flags, const std::string& token) {
  if (!flags.empty()) flags += ';';
  flags += token;
}

std::vector<std::string> split(const std::string& line, char separator) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream stream(line);
  while (std::getline(stream, field, separator)) fields.push_back(field);
  if (!line.empty() && line.back() == separator) fields.emplace_back();
  return fields;
}

template <typename T>
std::optional<T> parse_optional(const std::string& text, int line_number) {
  if (text.empty()) return std::nullopt;
  std::istringstream stream(text);
  T value{};
  stream >> value;
  if (!stream || stream.peek() != std::char_traits<char>::eof())
    throw LoadError(LoadErrorKind::malformed_header,
                    "CSV line " + std::to_string(line_number) + ": bad value '" + text + "'");
  return value;
}

std::string short_number(const std::optional<double>& value, const char* format) {
  if (!value) return "-";
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, format, *value);
  return buffer;
}

}  // namespace

double reduction_factor(const AtomicIndex& index, const QueryWorkload& workload) {
  if (workload.empty()) throw InvalidArgument("reduction factor needs a non-empty workload");
  const double n = static_cast<double>(index.table().size());
  return index.model().visit([&](const auto& m) {
    double total = 0.0;
    for (std::uint64_t q : workload.queries) {
      const Interval window = index.interval_with(m, q);
      total += 1.0 - static_cast<double>(window.length()) / n;
    }
    return 100.0 * total / static_cast<double>(workload.size());
  });
}

std::size_t count_repairs(const AtomicIndex& index, const QueryWorkload& workload) {
  return index.model().visit([&](const auto& m) {
    std::size_t repairs = 0;
    for (std::uint64_t q : workload.queries) {
      bool repaired = false;
      index.interval_with(m, q, &repaired);
      repairs += repaired ? 1 : 0;
    }
    return repairs;
  });
}

double clock_granularity() {
  static const double granularity = [] {
    double best = 1.0;
    for (int i = 0; i < 1000; ++i) {
      const Clock::time_point start = Clock::now();
      Clock::time_point now;
      do {
        now = Clock::now();
      } while (now == start);
      best = std::min(best, std::chrono::duration<double>(now - start).count());
    }
    return best;
  }();
  return granularity;
}

double median(std::vector<double> values) {
  if (values.empty()) throw InvalidArgument("median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

Timing measure_per_element(const std::function<std::uint64_t()>& run, std::size_t elements, std::size_t repeats,
                           bool warmup) {
  if (repeats < 1) throw InvalidArgument("repeats must be >= 1");
  if (elements < 1) throw InvalidArgument("nothing to time");
  if (warmup) run();
  std::vector<double> totals;
  totals.reserve(repeats);
  Timing timing;
  for (std::size_t r = 0; r < repeats; ++r) {
    const Clock::time_point start = Clock::now();
    timing.checksum = run();
    totals.push_back(seconds_since(start));
  }
  const double total = median(std::move(totals));
  timing.unreliable = total < 100.0 * clock_granularity();
  // A zero reading can only come from a coarse clock; keep times positive.
  timing.seconds_per_element = std::max(total, clock_granularity()) / static_cast<double>(elements);
  return timing;
}

Timing time_queries(const AtomicIndex& index, const QueryWorkload& workload, std::size_t repeats) {
  if (workload.empty()) throw InvalidArgument("query timing needs a non-empty workload");
  return index.model().visit([&](const auto& m) {
    return measure_per_element(
        [&]() -> std::uint64_t {
          std::uint64_t checksum = 0;
          for (std::uint64_t q : workload.queries) checksum += index.lookup_with(m, q).rank;
          return checksum;
        },
        workload.size(), repeats);
  });
}

Timing time_plain_search(const SortedTable& table, SearchKind kind, const QueryWorkload& workload,
                         std::size_t repeats) {
  if (workload.empty()) throw InvalidArgument("query timing needs a non-empty workload");
  const std::uint64_t* keys = table.data();
  const std::size_t last = table.size() - 1;
  return measure_per_element(
      [&]() -> std::uint64_t {
        std::uint64_t checksum = 0;
        if (kind == SearchKind::branchy) {
          for (std::uint64_t q : workload.queries) checksum += detail::branchy<false>(keys, q, 0, last, nullptr);
        } else {
          for (std::uint64_t q : workload.queries) checksum += detail::branch_free<false>(keys, q, 0, last, nullptr);
        }
        return checksum;
      },
      workload.size(), repeats);
}

Timing time_predictions(const CdfModel& model, std::size_t n, const QueryWorkload& workload, std::size_t repeats) {
  if (workload.empty()) throw InvalidArgument("prediction timing needs a non-empty workload");
  return model.visit([&](const auto& m) {
    return measure_per_element(
        [&]() -> std::uint64_t {
          std::uint64_t checksum = 0;
          for (std::uint64_t q : workload.queries) checksum += clamp_round(m.predict(q), n);
          return checksum;
        },
        workload.size(), repeats);
  });
}

Timing time_noop(const QueryWorkload& workload, std::size_t repeats) {
  if (workload.empty()) throw InvalidArgument("timing needs a non-empty workload");
  return measure_per_element(
      [&]() -> std::uint64_t {
        std::uint64_t checksum = 0;
        for (std::uint64_t q : workload.queries) {
          checksum += q;
          // Keep the loop from being folded into a closed form.
          asm volatile("" : "+r"(checksum));
        }
        return checksum;
      },
      workload.size(), repeats);
}

std::vector<BenchRow> run_suite(const std::vector<BenchDataset>& datasets, const std::vector<ModelKind>& models,
                                const std::vector<SearchKind>& searches, const SuiteConfig& config) {
  if (config.repeats < 1 || config.nn_train_repeats < 1) throw InvalidArgument("repeats must be >= 1");
  auto report = [&](const std::string& message) {
    if (config.progress) config.progress(message);
  };

  std::vector<BenchRow> rows;
  for (const BenchDataset& data : datasets) {
    if (!data.table) throw InvalidArgument("dataset '" + data.name + "' has no table");
    const SortedTable& table = *data.table;

    if (config.include_baseline) {
      for (SearchKind search : searches) {
        BenchRow row = make_row(data.name, "none", search, table.size(), config.repeats);
        row.rf_percent = 0.0;
        const Timing timing = time_plain_search(table, search, data.workload, config.repeats);
        row.query_s_per_elem = timing.seconds_per_element;
        if (timing.unreliable) append_flag(row.flags, "query_unreliable");
        rows.push_back(std::move(row));
      }
    }

    for (ModelKind kind : models) {
      const std::string model_name(to_string(kind));
      report("training " + model_name + " on " + data.name);
      std::optional<CdfModel> trained;
      Timing train_timing;
      std::string error;
      try {
        const std::size_t train_repeats = is_neural(kind) ? config.nn_train_repeats : config.repeats;
        train_timing = time_training([&](const SortedTable& t) { trained.emplace(train_model(kind, t, config.nn)); },
                                     table, train_repeats);
      } catch (const std::exception& e) {
        error = sanitize(e.what());
      }

      if (!trained) {
        for (SearchKind search : searches) {
          BenchRow row = make_row(data.name, model_name, search, table.size(), config.repeats);
          row.flags = "error=" + error;
          rows.push_back(std::move(row));
        }
        continue;
      }

      const AtomicIndex base(data.table, std::move(*trained), SearchKind::branch_free);
      const double rf = reduction_factor(base, data.workload);
      const std::size_t repairs = count_repairs(base, data.workload);
      for (SearchKind search : searches) {
        report("querying " + model_name + "-" + std::string(to_string(search)) + " on " + data.name);
        const AtomicIndex index = base.with_search(search);
        BenchRow row = make_row(data.name, model_name, search, table.size(), config.repeats);
        row.epsilon = index.epsilon();
        row.train_s_per_elem = train_timing.seconds_per_element;
        row.rf_percent = rf;
        const Timing query_timing = time_queries(index, data.workload, config.repeats);
        row.query_s_per_elem = query_timing.seconds_per_element;
        append_flag(row.flags, "repairs=" + std::to_string(repairs));
        if (train_timing.unreliable) append_flag(row.flags, "train_unreliable");
        if (query_timing.unreliable) append_flag(row.flags, "query_unreliable");
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

void write_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
  out << kCsvHeader << '\n';
  for (const BenchRow& row : rows) {
    out << sanitize(row.dataset) << ',' << sanitize(row.model) << ',' << sanitize(row.search) << ',' << row.n << ','
        << (row.epsilon ? std::to_string(*row.epsilon) : "") << ','
        << (row.train_s_per_elem ? format_double(*row.train_s_per_elem) : "") << ','
        << (row.rf_percent ? format_double(*row.rf_percent) : "") << ','
        << (row.query_s_per_elem ? format_double(*row.query_s_per_elem) : "") << ',' << row.repeats << ','
        << sanitize(row.flags) << '\n';
  }
}

std::vector<BenchRow> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader)
    throw LoadError(LoadErrorKind::malformed_header, "CSV header mismatch");
  std::vector<BenchRow> rows;
  int line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    const std::vector<std::string> fields = split(line, ',');
    if (fields.size() != 10)
      throw LoadError(LoadErrorKind::malformed_header,
                      "CSV line " + std::to_string(line_number) + " has " + std::to_string(fields.size()) + " fields");
    BenchRow row;
    row.dataset = fields[0];
    row.model = fields[1];
    row.search = fields[2];
    row.n = parse_optional<std::size_t>(fields[3], line_number).value_or(0);
    row.epsilon = parse_optional<std::size_t>(fields[4], line_number);
    row.train_s_per_elem = parse_optional<double>(fields[5], line_number);
    row.rf_percent = parse_optional<double>(fields[6], line_number);
    row.query_s_per_elem = parse_optional<double>(fields[7], line_number);
    row.repeats = parse_optional<std::size_t>(fields[8], line_number).value_or(0);
    row.flags = fields[9];
    rows.push_back(std::move(row));
  }
  return rows;
}

void print_table(std::ostream& out, const std::vector<BenchRow>& rows) {
  char line[256];
  std::snprintf(line, sizeof line, "%-10s %-5s %-4s %10s %10s %11s %9s %11s  %s\n", "dataset", "model", "srch", "n",
                "epsilon", "TT(s/el)", "RF(%)", "Q(s/q)", "flags");
  out << line;
  for (const BenchRow& row : rows) {
    std::snprintf(line, sizeof line, "%-10s %-5s %-4s %10zu %10s %11s %9s %11s  %s\n", row.dataset.c_str(),
                  row.model.c_str(), row.search.c_str(), row.n,
                  row.epsilon ? std::to_string(*row.epsilon).c_str() : "-",
                  short_number(row.train_s_per_elem, "%.3e").c_str(), short_number(row.rf_percent, "%.2f").c_str(),
                  short_number(row.query_s_per_elem, "%.3e").c_str(), row.flags.c_str());
    out << line;
  }
}

}  // namespace ali
