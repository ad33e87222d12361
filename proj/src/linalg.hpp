#pragma once

#include <cmath>
#include <optional>
#include <utility>
#include <vector>

namespace sensedelay::detail {

using Matrix = std::vector<std::vector<double>>;

// Gaussian elimination with partial pivoting. Returns nullopt when a pivot
// falls below tol times the largest entry of its column.
inline std::optional<std::vector<double>> solve_dense(Matrix a, std::vector<double> b,
                                                      double tol = 1e-14) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    double scale = 0.0;
    for (std::size_t r = c; r < n; ++r) {
      scale = std::max(scale, std::abs(a[r][c]));
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    }
    if (!(std::abs(a[piv][c]) > tol * std::max(scale, 1.0))) return std::nullopt;
    std::swap(a[c], a[piv]);
    std::swap(b[c], b[piv]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      if (f == 0.0) continue;
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= a[i][k] * x[k];
    x[i] = s / a[i][i];
  }
  for (double v : x)
    if (!std::isfinite(v)) return std::nullopt;
  return x;
}

}  // namespace sensedelay::detail
