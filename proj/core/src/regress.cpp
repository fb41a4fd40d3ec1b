#include "atomic_li/regress.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <string>
#include <utility>

#include "atomic_li/errors.hpp"

namespace ali {
namespace {

constexpr double kPivotFloor = 1e-12;

/// Neumaier compensated summation.
class CompensatedSum {
 public:
  void add(double value) noexcept {
    const double t = sum_ + value;
    if (std::abs(sum_) >= std::abs(value))
      carry_ += (sum_ - t) + value;
    else
      carry_ += (value - t) + sum_;
    sum_ = t;
  }
  double value() const noexcept { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

std::string expect_field(std::istream& in, const char* name) {
  std::string key;
  std::string value;
  if (!(in >> key >> value) || key != name)
    throw LoadError(LoadErrorKind::malformed_header, std::string("expected field '") + name + "'");
  return value;
}

double parse_double(const std::string& text) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size()) throw LoadError(LoadErrorKind::malformed_header, "bad number '" + text + "'");
  return value;
}

}  // namespace

bool PolynomialModel::finite() const noexcept {
  for (int i = 0; i < degree; ++i)
    if (!std::isfinite(weights[static_cast<std::size_t>(i)])) return false;
  return std::isfinite(intercept) && std::isfinite(key_span) && std::isfinite(rank_scale);
}

std::vector<double> solve_normal_equations(std::span<const double> gram, std::span<const double> rhs) {
  const std::size_t m = rhs.size();
  if (m == 0 || m > 4 || gram.size() != m * m)
    throw InvalidArgument("normal equations must be m x m with 1 <= m <= 4");

  // Augmented matrix [gram | rhs].
  double a[4][5];
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < m; ++c) a[r][c] = gram[r * m + c];
    a[r][m] = rhs[r];
  }

  for (std::size_t col = 0; col < m; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < m; ++r)
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    if (!(std::abs(a[pivot][col]) >= kPivotFloor))
      throw SingularMatrix("pivot " + std::to_string(a[pivot][col]) + " in column " + std::to_string(col));
    if (pivot != col)
      for (std::size_t c = 0; c <= m; ++c) std::swap(a[col][c], a[pivot][c]);
    for (std::size_t r = col + 1; r < m; ++r) {
      const double factor = a[r][col] / a[col][col];
      for (std::size_t c = col; c <= m; ++c) a[r][c] -= factor * a[col][c];
    }
  }

  std::vector<double> theta(m);
  for (std::size_t r = m; r-- > 0;) {
    double acc = a[r][m];
    for (std::size_t c = r + 1; c < m; ++c) acc -= a[r][c] * theta[c];
    theta[r] = acc / a[r][r];
  }
  return theta;
}

PolynomialModel fit_polynomial(const SortedTable& table, int degree) {
  if (degree < 1 || degree > 3) throw InvalidArgument("polynomial degree must be 1, 2 or 3");
  const std::size_t n = table.size();
  if (n < static_cast<std::size_t>(degree) + 1)
    throw InvalidArgument("need at least degree + 1 keys to fit");

  PolynomialModel model;
  model.degree = degree;
  model.key_min = table.min_key();
  model.key_span = static_cast<double>(table.max_key() - table.min_key());
  model.rank_scale = static_cast<double>(n - 1);
  if (!(model.key_span > 0.0)) throw DegenerateInput("all keys identical after normalization");

  // Design row z = [x, x^2, ..., x^g, 1]. The Gram matrix only depends on
  // the power sums S_k = sum x^k (k <= 2g) and T_k = sum y x^k (k <= g).
  const std::size_t m = static_cast<std::size_t>(degree) + 1;
  const int max_power = 2 * degree;
  CompensatedSum power_sums[7];
  CompensatedSum target_sums[4];
  for (std::size_t rank = 0; rank < n; ++rank) {
    const double x = model.normalize(table[rank]);
    const double y = static_cast<double>(rank) / model.rank_scale;
    double xk = 1.0;
    for (int k = 0; k <= max_power; ++k) {
      power_sums[k].add(xk);
      if (k <= degree) target_sums[k].add(y * xk);
      xk *= x;
    }
  }

  // Column j of the design row carries power p(j) = j + 1, except the last (power 0).
  auto power_of = [&](std::size_t column) { return column + 1 == m ? 0 : static_cast<int>(column) + 1; };
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> gram(m * m);
  std::vector<double> rhs(m);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < m; ++c) gram[r * m + c] = power_sums[power_of(r) + power_of(c)].value() * inv_n;
    rhs[r] = target_sums[power_of(r)].value() * inv_n;
  }

  std::vector<double> theta;
  try {
    theta = solve_normal_equations(gram, rhs);
  } catch (const SingularMatrix& e) {
    throw DegenerateInput(std::string("normal equations are singular: ") + e.what());
  }
  for (int i = 0; i < degree; ++i) model.weights[static_cast<std::size_t>(i)] = theta[static_cast<std::size_t>(i)];
  model.intercept = theta[m - 1];
  if (!model.finite()) throw DegenerateInput("fit produced non-finite coefficients");
  return model;
}

double training_mse(const PolynomialModel& model, const SortedTable& table) {
  CompensatedSum total;
  for (std::size_t rank = 0; rank < table.size(); ++rank) {
    const double diff = model.predict(table[rank]) / model.rank_scale - static_cast<double>(rank) / model.rank_scale;
    total.add(diff * diff);
  }
  return total.value() / static_cast<double>(table.size());
}

void write_polynomial(std::ostream& out, const PolynomialModel& model) {
  const auto old_precision = out.precision(17);
  out << "poly\n"
      << "degree " << model.degree << '\n'
      << "key_min " << model.key_min << '\n'
      << "key_span " << model.key_span << '\n'
      << "rank_scale " << model.rank_scale << '\n'
      << "intercept " << model.intercept << '\n';
  for (int i = 0; i < model.degree; ++i) out << 'w' << (i + 1) << ' ' << model.weights[static_cast<std::size_t>(i)] << '\n';
  out.precision(old_precision);
}

PolynomialModel read_polynomial(std::istream& in) {
  PolynomialModel model;
  const std::string degree = expect_field(in, "degree");
  if (degree != "1" && degree != "2" && degree != "3")
    throw LoadError(LoadErrorKind::malformed_header, "degree must be 1, 2 or 3");
  model.degree = degree[0] - '0';
  const std::string key_min = expect_field(in, "key_min");
  try {
    std::size_t used = 0;
    model.key_min = std::stoull(key_min, &used);
    if (used != key_min.size()) throw std::invalid_argument(key_min);
  } catch (const std::exception&) {
    throw LoadError(LoadErrorKind::malformed_header, "bad key_min '" + key_min + "'");
  }
  model.key_span = parse_double(expect_field(in, "key_span"));
  model.rank_scale = parse_double(expect_field(in, "rank_scale"));
  model.intercept = parse_double(expect_field(in, "intercept"));
  for (int i = 0; i < model.degree; ++i) {
    const std::string name = "w" + std::to_string(i + 1);
    model.weights[static_cast<std::size_t>(i)] = parse_double(expect_field(in, name.c_str()));
  }
  if (!model.finite() || !(model.key_span > 0.0))
    throw LoadError(LoadErrorKind::malformed_header, "non-finite polynomial parameters");
  return model;
}

}  // namespace ali
