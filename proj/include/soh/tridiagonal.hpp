/// @file tridiagonal.hpp
/// @brief Selected eigenpairs of a real symmetric tridiagonal matrix: Sturm-sequence
/// bisection for the eigenvalues, inverse iteration for the eigenvectors.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "soh/core.hpp"

namespace soh {

struct SymmetricTridiagonal {
  std::vector<double> diag;  // size n
  std::vector<double> off;   // size n-1, off[i] = T(i, i+1) = T(i+1, i)

  std::size_t size() const { return diag.size(); }

  /// Gershgorin enclosure, symmetric about zero so spectra of T and -T bisect alike.
  double spectral_bound() const {
    double b = 0.0;
    const std::size_t n = size();
    for (std::size_t i = 0; i < n; ++i) {
      double r = std::abs(diag[i]);
      if (i > 0) r += std::abs(off[i - 1]);
      if (i + 1 < n) r += std::abs(off[i]);
      b = std::max(b, r);
    }
    return b;
  }

  /// Number of eigenvalues strictly below x.
  std::size_t count_below(double x) const {
    const std::size_t n = size();
    const double tiny = std::numeric_limits<double>::min() * 1e10;
    std::size_t count = 0;
    double q = diag[0] - x;
    if (q < 0.0) ++count;
    for (std::size_t i = 1; i < n; ++i) {
      if (q == 0.0) q = tiny;
      q = (diag[i] - x) - off[i - 1] * off[i - 1] / q;
      if (q < 0.0) ++count;
    }
    return count;
  }

  /// The index-th smallest eigenvalue (0-based), bisected to full precision.
  double eigenvalue(std::size_t index) const {
    const double bound = spectral_bound() * (1.0 + 1e-12) + 1e-300;
    double lo = -bound;
    double hi = bound;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      if (count_below(mid) > index)
        hi = mid;
      else
        lo = mid;
    }
    return 0.5 * (lo + hi);
  }

  /// Dense product T x.
  std::vector<double> apply(const std::vector<double>& x) const {
    const std::size_t n = size();
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      double s = diag[i] * x[i];
      if (i > 0) s += off[i - 1] * x[i - 1];
      if (i + 1 < n) s += off[i] * x[i + 1];
      y[i] = s;
    }
    return y;
  }
};

namespace detail {

/// Solves (T - shift I) x = b by Gaussian elimination with partial pivoting (LAPACK
/// gttrf/gttrs layout). Zero pivots are replaced by a tiny multiple of the norm, which
/// is what inverse iteration needs at a converged eigenvalue.
inline std::vector<double> shifted_tridiagonal_solve(const SymmetricTridiagonal& t, double shift,
                                                     std::vector<double> b, double pivot_floor) {
  const std::size_t n = t.size();
  std::vector<double> dl(t.off), d(n), du(t.off), du2(n > 2 ? n - 2 : 0, 0.0);
  for (std::size_t i = 0; i < n; ++i) d[i] = t.diag[i] - shift;
  std::vector<char> swapped(n, 0);

  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (std::abs(d[i]) >= std::abs(dl[i])) {
      if (std::abs(d[i]) < pivot_floor) d[i] = std::copysign(pivot_floor, d[i] == 0.0 ? 1.0 : d[i]);
      const double f = dl[i] / d[i];
      dl[i] = f;
      d[i + 1] -= f * du[i];
      if (i + 2 < n) du2[i] = 0.0;
    } else {
      const double f = d[i] / dl[i];
      d[i] = dl[i];
      dl[i] = f;
      const double tmp = du[i];
      du[i] = d[i + 1];
      d[i + 1] = tmp - f * d[i + 1];
      if (i + 2 < n) {
        du2[i] = du[i + 1];
        du[i + 1] = -f * du[i + 1];
      }
      swapped[i] = 1;
    }
  }
  if (std::abs(d[n - 1]) < pivot_floor) d[n - 1] = std::copysign(pivot_floor, d[n - 1] == 0.0 ? 1.0 : d[n - 1]);

  // forward: apply L^-1 with the recorded row interchanges
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (swapped[i]) {
      const double tmp = b[i];
      b[i] = b[i + 1];
      b[i + 1] = tmp - dl[i] * b[i + 1];
    } else {
      b[i + 1] -= dl[i] * b[i];
    }
  }
  // backward: U x = b
  b[n - 1] /= d[n - 1];
  if (n > 1) b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
  for (std::size_t ii = n >= 2 ? n - 2 : 0; ii-- > 0;) {
    b[ii] = (b[ii] - du[ii] * b[ii + 1] - du2[ii] * b[ii + 2]) / d[ii];
  }
  return b;
}

inline double norm2(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

}  // namespace detail

struct TridiagonalEigenpair {
  double value;
  std::vector<double> vector;  // unit Euclidean norm
};

/// Eigenpairs for the given ascending indices. Vectors are computed by inverse iteration
/// and re-orthogonalized against the previously returned ones.
inline std::vector<TridiagonalEigenpair> tridiagonal_eigenpairs(
    const SymmetricTridiagonal& t, const std::vector<std::size_t>& indices) {
  const std::size_t n = t.size();
  const double norm = std::max(t.spectral_bound(), 1e-300);
  const double pivot_floor = norm * std::numeric_limits<double>::epsilon();
  std::vector<TridiagonalEigenpair> out;
  out.reserve(indices.size());

  for (std::size_t index : indices) {
    if (index >= n) throw NumericalError("eigenvalue index out of range");
    const double lambda = t.eigenvalue(index);
    // deterministic pseudo-random start vector
    std::vector<double> x(n);
    std::uint64_t state = 0x9E3779B97F4A7C15ull ^ (index * 0xBF58476D1CE4E5B9ull);
    for (std::size_t i = 0; i < n; ++i) {
      state ^= state >> 30;
      state *= 0xBF58476D1CE4E5B9ull;
      state ^= state >> 27;
      state *= 0x94D049BB133111EBull;
      state ^= state >> 31;
      x[i] = static_cast<double>(state >> 11) * 0x1.0p-53 - 0.5;
    }
    auto orthonormalize = [&](std::vector<double>& v) {
      for (const auto& prev : out) {
        const double dot = std::inner_product(v.begin(), v.end(), prev.vector.begin(), 0.0);
        for (std::size_t i = 0; i < n; ++i) v[i] -= dot * prev.vector[i];
      }
      const double nv = detail::norm2(v);
      if (!(nv > 0.0) || !std::isfinite(nv)) throw NumericalError("inverse iteration broke down");
      for (double& vi : v) vi /= nv;
    };
    orthonormalize(x);
    double residual = 0.0;
    for (int it = 0; it < 8; ++it) {
      x = detail::shifted_tridiagonal_solve(t, lambda, std::move(x), pivot_floor);
      orthonormalize(x);
      const auto tx = t.apply(x);
      residual = 0.0;
      for (std::size_t i = 0; i < n; ++i) residual = std::max(residual, std::abs(tx[i] - lambda * x[i]));
      if (it >= 1 && residual < 1e3 * pivot_floor) break;
    }
    if (!(residual < 1e6 * pivot_floor))
      throw NumericalError("inverse iteration did not converge");
    out.push_back({lambda, std::move(x)});
  }
  return out;
}

/// Indices of the k eigenvalues of smallest magnitude after subtracting `shift`,
/// sorted by the shifted eigenvalue.
inline std::vector<std::size_t> smallest_magnitude_indices(const SymmetricTridiagonal& t,
                                                           std::size_t k, double shift = 0.0) {
  const std::size_t n = t.size();
  if (k > n) throw ConfigError("more eigenpairs requested than the matrix dimension");
  const std::size_t split = t.count_below(shift);
  // candidates: k on each side of the shift
  const std::size_t lo = split > k ? split - k : 0;
  const std::size_t hi = std::min(n, split + k);
  std::vector<std::pair<double, std::size_t>> cand;
  for (std::size_t i = lo; i < hi; ++i) cand.emplace_back(t.eigenvalue(i) - shift, i);
  std::stable_sort(cand.begin(), cand.end(), [](const auto& a, const auto& b) {
    return std::abs(a.first) < std::abs(b.first);
  });
  cand.resize(k);
  std::sort(cand.begin(), cand.end());
  std::vector<std::size_t> idx;
  for (const auto& c : cand) idx.push_back(c.second);
  return idx;
}

}  // namespace soh
