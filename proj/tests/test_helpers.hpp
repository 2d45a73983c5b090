#pragma once

// Shared helpers for the test suites. Everything here is deliberately
// independent of the library implementation paths it is used to check:
// brute-force enumeration, dense linear algebra, adaptive quadrature.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

namespace testutil {

// Solve A x = b by Gaussian elimination with partial pivoting.
inline std::vector<double> dense_solve(std::vector<std::vector<double>> A,
                                       std::vector<double> b) {
  const int n = static_cast<int>(b.size());
  for (int c = 0; c < n; ++c) {
    int piv = c;
    for (int r = c + 1; r < n; ++r)
      if (std::abs(A[r][c]) > std::abs(A[piv][c])) piv = r;
    std::swap(A[c], A[piv]);
    std::swap(b[c], b[piv]);
    if (std::abs(A[c][c]) < 1e-300) throw std::runtime_error("singular system");
    for (int r = c + 1; r < n; ++r) {
      double f = A[r][c] / A[c][c];
      for (int k = c; k < n; ++k) A[r][k] -= f * A[c][k];
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(n);
  for (int r = n - 1; r >= 0; --r) {
    double s = b[r];
    for (int k = r + 1; k < n; ++k) s -= A[r][k] * x[k];
    x[r] = s / A[r][r];
  }
  return x;
}

// Barycentric coordinates of x with respect to the simplex with the given
// vertices (d+1 points in R^d), via a dense solve.
inline std::vector<double> barycentric(const std::vector<std::array<double, 8>>& verts,
                                       const std::array<double, 8>& x, int d) {
  const int n = d + 1;
  std::vector<std::vector<double>> A(n, std::vector<double>(n, 1.0));
  std::vector<double> b(n, 1.0);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < n; ++j) A[i][j] = verts[j][i];
    b[i] = x[i];
  }
  return dense_solve(std::move(A), std::move(b));
}

// Adaptive Simpson quadrature on [a, b].
inline double adaptive_simpson(const std::function<double(double)>& f, double a,
                               double b, double tol = 1e-12, int depth = 30) {
  auto simpson = [&](double lo, double hi) {
    double mid = 0.5 * (lo + hi);
    return (hi - lo) / 6.0 * (f(lo) + 4.0 * f(mid) + f(hi));
  };
  std::function<double(double, double, double, int)> rec =
      [&](double lo, double hi, double whole, int dep) -> double {
    double mid = 0.5 * (lo + hi);
    double left = simpson(lo, mid), right = simpson(mid, hi);
    if (dep <= 0 || std::abs(left + right - whole) < 15.0 * tol)
      return left + right + (left + right - whole) / 15.0;
    return rec(lo, mid, left, dep - 1) + rec(mid, hi, right, dep - 1);
  };
  return rec(a, b, simpson(a, b), depth);
}

// Least-squares slope of y against x.
inline double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace testutil
