/// @file bessel.hpp
/// @brief Bessel functions of the first kind for real order: ascending series for
/// moderate arguments, Hankel asymptotic expansion for large ones.
#pragma once

#include <cmath>
#include <limits>

#include "soh/core.hpp"

namespace soh::bessel {

namespace detail {

inline bool is_integer(double v) { return std::abs(v - std::round(v)) < 1e-12; }

/// sum_k (-1)^k (x/2)^(2k+v) / (k! Gamma(k+v+1)), v not a negative integer.
inline double j_series(double v, double x) {
  const double half = 0.5 * x;
  // Gamma(v+1) may be negative for negative non-integer v; tgamma handles the sign.
  double term = std::pow(half, v) / std::tgamma(v + 1.0);
  double sum = term;
  const double q = -half * half;
  for (int k = 1; k < 500; ++k) {
    term *= q / (k * (k + v));
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum) && k > half) break;
  }
  return sum;
}

/// Hankel expansion J_v(x) = sqrt(2/(pi x)) (P cos chi - Q sin chi), truncated at
/// the smallest term.
inline double j_asymptotic(double v, double x) {
  const double mu = 4.0 * v * v;
  double p = 1.0, q = 0.0;
  double term = 1.0;  // a_k / x^k with alternating signs folded in below
  double last = std::numeric_limits<double>::infinity();
  for (int k = 1; k < 200; ++k) {
    const double odd = 2.0 * k - 1.0;
    term *= (mu - odd * odd) / (k * 8.0 * x);
    const double mag = std::abs(term);
    if (mag > last) break;  // asymptotic series starts diverging
    last = mag;
    // k odd -> Q, k even -> P; sign pattern (+,-,-,+,+,-,-,...) for (Q1,P2,Q3,P4,...)
    const int r = k % 4;
    const double sign = (r == 1 || r == 0) ? 1.0 : -1.0;
    if (k % 2 == 1)
      q += sign * term;
    else
      p += sign * term;
    if (mag < 1e-17) break;
  }
  const double chi = x - (0.5 * v + 0.25) * kPi;
  return std::sqrt(2.0 / (kPi * x)) * (p * std::cos(chi) - q * std::sin(chi));
}

}  // namespace detail

/// J_v(x) for real order v and x > 0.
inline double cyl_j(double v, double x) {
  if (!(x > 0.0) || !std::isfinite(x))
    throw NumericalError("cyl_j: argument must be positive and finite");
  if (v < 0.0 && detail::is_integer(v)) {
    const long n = std::lround(-v);
    return (n % 2 == 0 ? 1.0 : -1.0) * cyl_j(static_cast<double>(n), x);
  }
  const double switch_point = std::max(12.0, 1.2 * std::abs(v));
  const double r = x <= switch_point ? detail::j_series(v, x) : detail::j_asymptotic(v, x);
  if (!std::isfinite(r)) throw NumericalError("cyl_j: evaluation overflow");
  return r;
}

/// dJ_v/dx = J_{v-1}(x) - (v/x) J_v(x).
inline double cyl_j_derivative(double v, double x) {
  return cyl_j(v - 1.0, x) - v / x * cyl_j(v, x);
}

/// Y_n(x) for integer order (only needed when (alpha+2)/2 is an integer).
inline double cyl_y_integer(double n, double x) {
  if (!detail::is_integer(n)) throw NumericalError("cyl_y_integer: order must be an integer");
  const double an = std::abs(std::round(n));
  const double y = std::cyl_neumann(an, x);
  const long in = std::lround(n);
  return (in < 0 && (std::labs(in) % 2 == 1)) ? -y : y;
}

}  // namespace soh::bessel
