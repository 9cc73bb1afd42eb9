/// @file core.hpp
/// @brief Model parameters, annulus grids, field containers, steady states and
/// the weighted inner products shared by the spectral, linear and nonlinear parts.
#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace soh {

//=============================================================================
// Errors

/// Invalid user input: bad parameter values, mismatched shapes, malformed files.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Failure of a numerical procedure (vacuum, degenerate orientation, no convergence).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Angle of the polarized steady state (clockwise rotation).
inline constexpr double kSteadyAngle = -0.5 * std::numbers::pi;

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  double w = std::remainder(a, kTwoPi);
  if (w <= -kPi) w += kTwoPi;
  return w;
}

//=============================================================================
// Parameters

/// Model constants. alpha = c2 / theta is derived on demand, never stored.
class Parameters {
 public:
  Parameters() = default;

  double c1 = 0.89307;
  double c2 = 0.69757;
  double theta = 0.2;
  double r1 = 1.9;
  double r2 = 2.1;
  double rho_star = 1.0;

  double alpha() const { return c2 / theta; }

  bool operator==(const Parameters&) const = default;
};

/// Validates and builds a parameter set.
inline Parameters make_parameters(double c1, double c2, double theta, double r1,
                                  double r2, double rho_star) {
  if (!(c1 > 0.0)) throw ConfigError("c1 must be positive (got " + std::to_string(c1) + ")");
  if (!(theta > 0.0))
    throw ConfigError("theta must be positive (got " + std::to_string(theta) + ")");
  if (!(r1 > 0.0)) throw ConfigError("r1 must be positive (got " + std::to_string(r1) + ")");
  if (!(r1 < r2)) throw ConfigError("r1 must be smaller than r2");
  if (!(rho_star > 0.0))
    throw ConfigError("rho_star must be positive (got " + std::to_string(rho_star) + ")");
  if (!std::isfinite(c2)) throw ConfigError("c2 must be finite");
  Parameters p;
  p.c1 = c1;
  p.c2 = c2;
  p.theta = theta;
  p.r1 = r1;
  p.r2 = r2;
  p.rho_star = rho_star;
  return p;
}

inline void validate(const Parameters& p) {
  (void)make_parameters(p.c1, p.c2, p.theta, p.r1, p.r2, p.rho_star);
}

/// Steady density rho_s(r) = rho_star * r^alpha on [r1, r2].
inline double steady_density(const Parameters& p, double r) {
  const double tol = 1e-12 * p.r2;
  if (r < p.r1 - tol || r > p.r2 + tol)
    throw ConfigError("steady_density: r = " + std::to_string(r) + " outside [r1, r2]");
  return p.rho_star * std::pow(r, p.alpha());
}

/// Closed-form radial derivative of the steady density.
inline double steady_density_derivative(const Parameters& p, double r) {
  return p.alpha() * p.rho_star * std::pow(r, p.alpha() - 1.0);
}

/// rho_star giving a mean steady density of `target_mean_density` over the annulus.
inline double default_rho_star(const Parameters& p, double target_mean_density) {
  if (!(target_mean_density > 0.0)) throw ConfigError("target mean density must be positive");
  const double a = p.alpha();
  const double area_factor = p.r2 * p.r2 - p.r1 * p.r1;
  // integral of r^(a+1) over [r1, r2]
  double moment;
  if (std::abs(a + 2.0) < 1e-12) {
    moment = std::log(p.r2 / p.r1);
  } else {
    moment = (std::pow(p.r2, a + 2.0) - std::pow(p.r1, a + 2.0)) / (a + 2.0);
  }
  return target_mean_density * area_factor / (2.0 * moment);
}

//=============================================================================
// Grids

/// Uniform radial mesh with nodes r_j = r1 + j h and midpoints r_{j+1/2}.
class RadialGrid {
 public:
  RadialGrid() = default;
  RadialGrid(double r1, double r2, int n_cells) : r1_(r1), r2_(r2), n_(n_cells) {
    if (n_cells < 1) throw ConfigError("radial grid needs at least one cell");
    if (!(r1 < r2)) throw ConfigError("radial grid needs r1 < r2");
    h_ = (r2 - r1) / n_cells;
  }
  explicit RadialGrid(const Parameters& p, int n_cells) : RadialGrid(p.r1, p.r2, n_cells) {}

  int n_cells() const { return n_; }
  double h() const { return h_; }
  double r1() const { return r1_; }
  double r2() const { return r2_; }

  double node(int j) const { return j == n_ ? r2_ : r1_ + j * h_; }
  double midpoint(int j) const { return r1_ + (j + 0.5) * h_; }

  std::vector<double> nodes() const {
    std::vector<double> r(n_ + 1);
    for (int j = 0; j <= n_; ++j) r[j] = node(j);
    return r;
  }
  std::vector<double> midpoints() const {
    std::vector<double> r(n_);
    for (int j = 0; j < n_; ++j) r[j] = midpoint(j);
    return r;
  }

  bool operator==(const RadialGrid&) const = default;

 private:
  double r1_ = 1.0;
  double r2_ = 2.0;
  int n_ = 1;
  double h_ = 1.0;
};

/// Tensor grid of radial cells and periodic azimuthal cells. Cell centers sit at
/// (r_{i+1/2}, (k+1/2) dtheta).
class PolarGrid {
 public:
  PolarGrid() = default;
  PolarGrid(RadialGrid radial, int n_theta) : radial_(radial), n_theta_(n_theta) {
    if (n_theta < 1) throw ConfigError("polar grid needs at least one azimuthal cell");
    dtheta_ = kTwoPi / n_theta;
  }
  PolarGrid(const Parameters& p, int n_r, int n_theta) : PolarGrid(RadialGrid(p, n_r), n_theta) {}

  const RadialGrid& radial() const { return radial_; }
  int n_r() const { return radial_.n_cells(); }
  int n_theta() const { return n_theta_; }
  double dtheta() const { return dtheta_; }
  double h() const { return radial_.h(); }
  double r(int i) const { return radial_.midpoint(i); }
  double theta(int k) const { return (k + 0.5) * dtheta_; }
  double theta_face(int k) const { return (k + 1) * dtheta_; }  // between k and k+1
  int wrap(int k) const { return ((k % n_theta_) + n_theta_) % n_theta_; }
  std::size_t size() const { return static_cast<std::size_t>(n_r()) * n_theta_; }

  bool operator==(const PolarGrid&) const = default;

 private:
  RadialGrid radial_;
  int n_theta_ = 1;
  double dtheta_ = kTwoPi;
};

//=============================================================================
// Field containers

/// Dense n_r x n_theta array, radial index major.
class Array2D {
 public:
  Array2D() = default;
  Array2D(int n_r, int n_theta, double fill = 0.0)
      : n_r_(n_r), n_theta_(n_theta), data_(static_cast<std::size_t>(n_r) * n_theta, fill) {}
  explicit Array2D(const PolarGrid& g, double fill = 0.0) : Array2D(g.n_r(), g.n_theta(), fill) {}

  int n_r() const { return n_r_; }
  int n_theta() const { return n_theta_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(int i, int k) { return data_[static_cast<std::size_t>(i) * n_theta_ + k]; }
  double operator()(int i, int k) const {
    return data_[static_cast<std::size_t>(i) * n_theta_ + k];
  }

  std::span<double> row(int i) {
    return {data_.data() + static_cast<std::size_t>(i) * n_theta_,
            static_cast<std::size_t>(n_theta_)};
  }
  std::span<const double> row(int i) const {
    return {data_.data() + static_cast<std::size_t>(i) * n_theta_,
            static_cast<std::size_t>(n_theta_)};
  }

  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }

  bool same_shape(const Array2D& o) const { return n_r_ == o.n_r_ && n_theta_ == o.n_theta_; }
  bool matches(const PolarGrid& g) const { return n_r_ == g.n_r() && n_theta_ == g.n_theta(); }

  bool operator==(const Array2D&) const = default;

 private:
  int n_r_ = 0;
  int n_theta_ = 0;
  std::vector<double> data_;
};

/// Density rho, speed modulus q = |Omega| and angle phi between e_r and Omega.
struct PrimitiveFields {
  Array2D rho;
  Array2D q;
  Array2D phi;

  explicit PrimitiveFields(const PolarGrid& g) : rho(g), q(g, 1.0), phi(g, kSteadyAngle) {}
  PrimitiveFields() = default;

  bool matches(const PolarGrid& g) const { return rho.matches(g) && q.matches(g) && phi.matches(g); }
};

/// Scaled deviation (rho - rho_s, phi - phi_s) / epsilon from the polarized steady state.
struct PerturbationFields {
  Array2D rho_tilde;
  Array2D phi_tilde;
  double epsilon = 1.0;

  PerturbationFields() = default;
  explicit PerturbationFields(const PolarGrid& g, double eps = 1.0)
      : rho_tilde(g), phi_tilde(g), epsilon(eps) {}

  bool matches(const PolarGrid& g) const { return rho_tilde.matches(g) && phi_tilde.matches(g); }
};

/// Steady state (rho_s, q = 1, phi = -pi/2) sampled at cell centers.
inline PrimitiveFields steady_fields(const Parameters& p, const PolarGrid& g) {
  PrimitiveFields f(g);
  for (int i = 0; i < g.n_r(); ++i) {
    const double rho = steady_density(p, g.r(i));
    for (int k = 0; k < g.n_theta(); ++k) f.rho(i, k) = rho;
  }
  return f;
}

/// Builds the full state rho_s + eps * rho_tilde, phi_s + eps * phi_tilde, q = 1.
inline PrimitiveFields perturbed_state(const Parameters& p, const PolarGrid& g,
                                       const PerturbationFields& pert) {
  if (!pert.matches(g)) throw ConfigError("perturbation shape does not match the grid");
  PrimitiveFields f(g);
  for (int i = 0; i < g.n_r(); ++i) {
    const double rho_s = steady_density(p, g.r(i));
    for (int k = 0; k < g.n_theta(); ++k) {
      f.rho(i, k) = rho_s + pert.epsilon * pert.rho_tilde(i, k);
      f.phi(i, k) = wrap_angle(kSteadyAngle + pert.epsilon * pert.phi_tilde(i, k));
    }
  }
  return f;
}

/// Extracts the epsilon-rescaled deviation from the steady state. Angle deviations are
/// measured relative to -pi/2; a deviation of pi or more is rejected.
inline PerturbationFields extract_perturbation(const Parameters& p, const PolarGrid& g,
                                               const PrimitiveFields& f, double epsilon) {
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (!f.matches(g)) throw ConfigError("field shape does not match the grid");
  PerturbationFields pert(g, epsilon);
  for (int i = 0; i < g.n_r(); ++i) {
    const double rho_s = steady_density(p, g.r(i));
    for (int k = 0; k < g.n_theta(); ++k) {
      const double dphi = wrap_angle(f.phi(i, k) - kSteadyAngle);
      if (std::abs(dphi) >= kPi) throw ConfigError("angle deviation reaches pi");
      pert.rho_tilde(i, k) = (f.rho(i, k) - rho_s) / epsilon;
      pert.phi_tilde(i, k) = dphi / epsilon;
    }
  }
  return pert;
}

//=============================================================================
// Weighted inner products

/// Density weight (theta / c1) r^(1 - alpha).
inline double density_weight(const Parameters& p, double r) {
  return p.theta / p.c1 * std::pow(r, 1.0 - p.alpha());
}

/// Angle weight rho_star^2 r^(alpha + 1).
inline double angle_weight(const Parameters& p, double r) {
  return p.rho_star * p.rho_star * std::pow(r, p.alpha() + 1.0);
}

/// Radial profiles on the staggered mesh: density at the N midpoints, angle at the N+1 nodes.
struct StaggeredProfile {
  std::vector<std::complex<double>> rho;
  std::vector<std::complex<double>> phi;
};

/// Radial inner product with the midpoint rule for the density component and the
/// trapezoidal node rule for the angle component.
inline std::complex<double> weighted_inner_product(const StaggeredProfile& a,
                                                   const StaggeredProfile& b,
                                                   const Parameters& p, const RadialGrid& g) {
  const auto n = static_cast<std::size_t>(g.n_cells());
  if (a.rho.size() != n || b.rho.size() != n || a.phi.size() != n + 1 || b.phi.size() != n + 1)
    throw ConfigError("weighted_inner_product: profile shape does not match the radial grid");
  std::complex<double> sum = 0.0;
  for (std::size_t j = 0; j < n; ++j)
    sum += density_weight(p, g.midpoint(static_cast<int>(j))) * a.rho[j] * std::conj(b.rho[j]);
  for (std::size_t j = 0; j <= n; ++j) {
    const double w = (j == 0 || j == n) ? 0.5 : 1.0;
    sum += w * angle_weight(p, g.node(static_cast<int>(j))) * a.phi[j] * std::conj(b.phi[j]);
  }
  return sum * g.h();
}

/// Full-field double-bracket product: azimuthal average of the radial product, midpoint
/// rule at cell centers in both directions.
inline double weighted_inner_product(const PerturbationFields& a, const PerturbationFields& b,
                                     const Parameters& p, const PolarGrid& g) {
  if (!a.matches(g) || !b.matches(g))
    throw ConfigError("weighted_inner_product: field shape does not match the grid");
  double sum = 0.0;
  for (int i = 0; i < g.n_r(); ++i) {
    const double wr = density_weight(p, g.r(i));
    const double wp = angle_weight(p, g.r(i));
    double row = 0.0;
    for (int k = 0; k < g.n_theta(); ++k)
      row += wr * a.rho_tilde(i, k) * b.rho_tilde(i, k) + wp * a.phi_tilde(i, k) * b.phi_tilde(i, k);
    sum += row;
  }
  return sum * g.h() / g.n_theta();
}

}  // namespace soh
