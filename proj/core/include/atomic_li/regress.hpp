#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "atomic_li/dataset.hpp"

namespace ali {

/// Closed-form polynomial model of a table's CDF (L, Q and C atomic models).
///
/// Keys are normalized to x = (key - key_min) / key_span before the powers
/// are taken; the fitted polynomial maps x to a rank fraction in [0, 1],
/// which rank_scale = n - 1 turns back into a 0-based rank.
struct PolynomialModel {
  int degree = 1;
  std::array<double, 3> weights{};  // weights[i] multiplies x^(i+1)
  double intercept = 0.0;
  std::uint64_t key_min = 0;
  double key_span = 1.0;
  double rank_scale = 1.0;

  double normalize(std::uint64_t key) const noexcept {
    const double offset = key >= key_min ? static_cast<double>(key - key_min)
                                         : -static_cast<double>(key_min - key);
    return offset / key_span;
  }

  /// Unclamped real rank estimate.
  double predict(std::uint64_t key) const noexcept {
    const double x = normalize(key);
    double acc = 0.0;
    for (int i = degree - 1; i >= 0; --i) acc = (acc + weights[static_cast<std::size_t>(i)]) * x;
    return rank_scale * (acc + intercept);
  }

  bool finite() const noexcept;

  friend bool operator==(const PolynomialModel&, const PolynomialModel&) = default;
};

/// Solves gram * theta = rhs by Gaussian elimination with partial pivoting.
/// `gram` is row-major m x m with m = rhs.size() <= 4. Throws SingularMatrix
/// when a pivot falls below 1e-12 in magnitude.
std::vector<double> solve_normal_equations(std::span<const double> gram, std::span<const double> rhs);

/// Least-squares fit of the degree-g polynomial (g in {1,2,3}) to the
/// (normalized key, normalized rank) pairs of `table`.
PolynomialModel fit_polynomial(const SortedTable& table, int degree);

/// Mean squared error of the model in normalized rank units over the table.
double training_mse(const PolynomialModel& model, const SortedTable& table);

void write_polynomial(std::ostream& out, const PolynomialModel& model);
/// Parses the body written by write_polynomial (after its "poly" tag line).
PolynomialModel read_polynomial(std::istream& in);

}  // namespace ali
