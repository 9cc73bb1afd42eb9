/// @file linear.hpp
/// @brief Modal synthesis, exact linear time evolution and projection of perturbation
/// fields onto the eigenbasis.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <random>
#include <utility>
#include <vector>

#include "soh/core.hpp"
#include "soh/spectral.hpp"

namespace soh {

/// One term k cos(n theta + phase) of a modal expansion.
struct ModalCoefficient {
  int n = 0;
  int m = 0;
  double k = 0.0;
  double phase = 0.0;  // in [0, 2 pi)

  bool operator==(const ModalCoefficient&) const = default;
};

inline double normalize_phase(double phase) {
  double p = std::fmod(phase, kTwoPi);
  if (p < 0.0) p += kTwoPi;
  if (p >= kTwoPi) p -= kTwoPi;
  return p;
}

/// Mode profiles moved to the radial cell centers of a polar grid and re-orthonormalized
/// under the cell-center quadrature used by projection.
struct CollocatedMode {
  double nu = 0.0;
  std::vector<double> rho;
  std::vector<double> psi;
};

using ModeKey = std::pair<int, int>;

class ModeBasis {
 public:
  Parameters params;
  RadialGrid grid;
  PolarGrid polar;
  int n_max = 0;
  int m_max = 0;     // for n >= 1
  int m_max_0 = 0;   // for n = 0, always even
  std::map<ModeKey, EigenMode> modes;
  std::map<ModeKey, CollocatedMode> collocated;  // on `polar`

  bool has(int n, int m) const { return modes.count({n, m}) != 0; }

  const EigenMode& mode(int n, int m) const {
    auto it = modes.find({n, m});
    if (it == modes.end())
      throw ConfigError("mode (" + std::to_string(n) + ", " + std::to_string(m) + ") not in basis");
    return it->second;
  }

  /// Labels present at azimuthal index n, ascending.
  std::vector<int> radial_indices(int n) const {
    std::vector<int> ms;
    for (const auto& [key, md] : modes)
      if (key.first == n) ms.push_back(key.second);
    return ms;
  }
};

namespace detail {

/// 4-point Lagrange interpolation of samples f(x0 + j dx) at x, stencil clipped to the data.
inline double cubic_interpolate(const std::vector<double>& f, double x0, double dx, double x) {
  const int n = static_cast<int>(f.size());
  const double s = (x - x0) / dx;
  if (std::abs(s - std::round(s)) < 1e-10) {
    const int j = static_cast<int>(std::lround(s));
    if (j >= 0 && j < n) return f[j];
  }
  if (n < 4) throw ConfigError("cubic_interpolate: need at least 4 samples");
  int j0 = static_cast<int>(std::floor(s)) - 1;
  j0 = std::clamp(j0, 0, n - 4);
  double sum = 0.0;
  for (int a = 0; a < 4; ++a) {
    double w = 1.0;
    for (int b = 0; b < 4; ++b)
      if (b != a) w *= (s - (j0 + b)) / static_cast<double>(a - b);
    sum += w * f[j0 + a];
  }
  return sum;
}

/// Collocates and Loewdin-orthonormalizes the modes of one azimuthal index.
inline std::vector<CollocatedMode> collocate_modes(const std::vector<const EigenMode*>& group,
                                                   const Parameters& p, const PolarGrid& polar) {
  const int nr = polar.n_r();
  const std::size_t M = group.size();
  if (M == 0) return {};
  const RadialGrid& g = group.front()->grid;
  if (std::abs(g.r1() - polar.radial().r1()) > 1e-12 || std::abs(g.r2() - polar.radial().r2()) > 1e-12)
    throw ConfigError("polar grid does not cover the same annulus as the mode basis");

  Eigen::MatrixXcd E(2 * nr, static_cast<Eigen::Index>(M));
  for (std::size_t c = 0; c < M; ++c) {
    const EigenMode& md = *group[c];
    for (int i = 0; i < nr; ++i) {
      const double r = polar.r(i);
      const double rho = cubic_interpolate(md.rho_hat, g.midpoint(0), g.h(), r);
      const double psi = cubic_interpolate(md.psi_hat, g.r1(), g.h(), r);
      E(i, static_cast<Eigen::Index>(c)) = rho;
      E(nr + i, static_cast<Eigen::Index>(c)) = std::complex<double>(0.0, psi);
    }
  }
  Eigen::VectorXd w(2 * nr);
  for (int i = 0; i < nr; ++i) {
    w(i) = polar.h() * density_weight(p, polar.r(i));
    w(nr + i) = polar.h() * angle_weight(p, polar.r(i));
  }
  const Eigen::MatrixXcd G = E.adjoint() * w.asDiagonal() * E;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(G);
  if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() < 1e-8)
    throw NumericalError("collocated mode Gram matrix is singular; refine the polar grid");
  const Eigen::MatrixXcd Ghalf_inv = es.operatorInverseSqrt();
  const Eigen::MatrixXcd Eo = E * Ghalf_inv;

  std::vector<CollocatedMode> out(M);
  for (std::size_t c = 0; c < M; ++c) {
    out[c].nu = group[c]->nu;
    out[c].rho.resize(nr);
    out[c].psi.resize(nr);
    for (int i = 0; i < nr; ++i) {
      out[c].rho[i] = Eo(i, static_cast<Eigen::Index>(c)).real();
      out[c].psi[i] = Eo(nr + i, static_cast<Eigen::Index>(c)).imag();
    }
  }
  return out;
}

inline std::map<ModeKey, CollocatedMode> collocate_basis(const ModeBasis& basis, const PolarGrid& polar) {
  std::map<ModeKey, CollocatedMode> out;
  for (int n = 0; n <= basis.n_max; ++n) {
    std::vector<const EigenMode*> group;
    std::vector<int> ms = basis.radial_indices(n);
    for (int m : ms) group.push_back(&basis.mode(n, m));
    auto col = collocate_modes(group, basis.params, polar);
    for (std::size_t c = 0; c < ms.size(); ++c) out[{n, ms[c]}] = std::move(col[c]);
  }
  return out;
}

}  // namespace detail

/// Default azimuthal resolution for a basis: comfortably above the aliasing limit.
inline int default_n_theta(int n_max) { return std::max(64, 4 * (n_max + 1)); }

/// Eigenmodes n = 0..n_max, m = 0..m_max (n = 0: m = 1..m_max rounded up to even) on the
/// radial grid, collocated on `polar`.
inline ModeBasis build_mode_basis(const Parameters& p, const RadialGrid& grid, int n_max, int m_max,
                                  const PolarGrid& polar) {
  if (n_max < 0 || m_max < 0) throw ConfigError("build_mode_basis: n_max and m_max must be nonnegative");
  ModeBasis b;
  b.params = p;
  b.grid = grid;
  b.polar = polar;
  b.n_max = n_max;
  b.m_max = m_max;
  b.m_max_0 = std::max(2, m_max + (m_max % 2));
  for (int n = 0; n <= n_max; ++n) {
    for (auto& md : compute_modes(p, grid, n, n == 0 ? b.m_max_0 : m_max)) b.modes[{n, md.m}] = std::move(md);
  }
  b.collocated = detail::collocate_basis(b, polar);
  return b;
}

inline ModeBasis build_mode_basis(const Parameters& p, const RadialGrid& grid, int n_max, int m_max) {
  return build_mode_basis(p, grid, n_max, m_max, PolarGrid(grid, default_n_theta(n_max)));
}

namespace detail {

inline const std::map<ModeKey, CollocatedMode>& collocation_for(
    const ModeBasis& basis, const PolarGrid& polar, std::map<ModeKey, CollocatedMode>& storage) {
  if (polar.radial() == basis.polar.radial()) return basis.collocated;
  storage = collocate_basis(basis, polar);
  return storage;
}

inline void add_mode(PerturbationFields& f, const PolarGrid& polar, const CollocatedMode& cm, int n,
                     double k, double phase) {
  if (k == 0.0) return;
  std::vector<double> c(polar.n_theta()), s(polar.n_theta());
  for (int j = 0; j < polar.n_theta(); ++j) {
    const double arg = n * polar.theta(j) + phase;
    c[j] = std::cos(arg);
    s[j] = std::sin(arg);
  }
  for (int i = 0; i < polar.n_r(); ++i) {
    const double a = k * cm.rho[i], b = -k * cm.psi[i];
    auto rr = f.rho_tilde.row(i);
    auto pr = f.phi_tilde.row(i);
    for (int j = 0; j < polar.n_theta(); ++j) {
      rr[j] += a * c[j];
      pr[j] += b * s[j];
    }
  }
}

}  // namespace detail

/// k (rho_hat cos(n theta + phase), -psi_hat sin(n theta + phase)) on the polar grid.
inline PerturbationFields synthesize_mode_fields(const ModeBasis& basis, int n, int m, double k, double phase,
                                                 const PolarGrid& polar) {
  if (n < 0 || !basis.has(n, m))
    throw ConfigError("synthesize_mode_fields: mode (" + std::to_string(n) + ", " + std::to_string(m) +
                      ") not in basis");
  std::map<ModeKey, CollocatedMode> storage;
  const auto& col = detail::collocation_for(basis, polar, storage);
  PerturbationFields f(polar);
  detail::add_mode(f, polar, col.at({n, m}), n, k, phase);
  return f;
}

inline PerturbationFields synthesize_mode_fields(const ModeBasis& basis, int n, int m, double k, double phase) {
  return synthesize_mode_fields(basis, n, m, k, phase, basis.polar);
}

/// Truncated modal sum at time t: each term's phase advances by nu_nm t.
inline PerturbationFields evaluate_linear_solution(const std::vector<ModalCoefficient>& coeffs,
                                                   const ModeBasis& basis, double t, const PolarGrid& polar) {
  std::map<ModeKey, CollocatedMode> storage;
  const auto& col = detail::collocation_for(basis, polar, storage);
  PerturbationFields f(polar);
  for (const auto& c : coeffs) {
    auto it = col.find({c.n, c.m});
    if (c.n < 0 || it == col.end())
      throw ConfigError("evaluate_linear_solution: mode (" + std::to_string(c.n) + ", " + std::to_string(c.m) +
                        ") not in basis");
    detail::add_mode(f, polar, it->second, c.n, c.k, c.phase + it->second.nu * t);
  }
  return f;
}

inline PerturbationFields evaluate_linear_solution(const std::vector<ModalCoefficient>& coeffs,
                                                   const ModeBasis& basis, double t) {
  return evaluate_linear_solution(coeffs, basis, t, basis.polar);
}

/// Folds every (0, 2m-1) term into its partner (0, 2m), which carries the same profiles
/// with the opposite angle sign, and merges duplicate labels. Output is sorted by (n, m).
inline std::vector<ModalCoefficient> canonical_coefficients(const std::vector<ModalCoefficient>& coeffs) {
  std::map<ModeKey, std::complex<double>> acc;
  for (const auto& c : coeffs) {
    if (c.n == 0 && c.m % 2 == 1)
      acc[{0, c.m + 1}] += std::polar(c.k, -c.phase);
    else
      acc[{c.n, c.m}] += std::polar(c.k, c.phase);
  }
  std::vector<ModalCoefficient> out;
  for (const auto& [key, a] : acc)
    out.push_back({key.first, key.second, std::abs(a), normalize_phase(std::arg(a))});
  return out;
}

/// Modal coefficients of a real perturbation field: azimuthal DFT at the cell centers,
/// then the weighted radial quadrature against each collocated mode. n = 0 is reported
/// through the (0, 2m) labels only.
inline std::vector<ModalCoefficient> project_field(const PerturbationFields& fields, const ModeBasis& basis) {
  const int nr = fields.rho_tilde.n_r(), nt = fields.rho_tilde.n_theta();
  if (nr < 4 || nt < 1) throw ConfigError("project_field: empty field");
  if (nt < 2 * basis.n_max + 2)
    throw ConfigError("project_field: n_theta = " + std::to_string(nt) + " cannot resolve n_max = " +
                      std::to_string(basis.n_max) + " (need n_theta >= 2 n_max + 2)");
  const PolarGrid polar(RadialGrid(basis.grid.r1(), basis.grid.r2(), nr), nt);
  if (!fields.matches(polar)) throw ConfigError("project_field: rho and phi shapes differ");
  std::map<ModeKey, CollocatedMode> storage;
  const auto& col = detail::collocation_for(basis, polar, storage);
  const Parameters& p = basis.params;

  std::vector<double> wr(nr), wp(nr);
  for (int i = 0; i < nr; ++i) {
    wr[i] = polar.h() * density_weight(p, polar.r(i));
    wp[i] = polar.h() * angle_weight(p, polar.r(i));
  }

  std::vector<ModalCoefficient> out;
  std::vector<std::complex<double>> R(nr), F(nr), tw(nt);
  for (int n = 0; n <= basis.n_max; ++n) {
    for (int j = 0; j < nt; ++j) tw[j] = std::polar(1.0 / nt, -n * polar.theta(j));
    for (int i = 0; i < nr; ++i) {
      std::complex<double> a = 0.0, b = 0.0;
      const auto rr = fields.rho_tilde.row(i);
      const auto pr = fields.phi_tilde.row(i);
      for (int j = 0; j < nt; ++j) {
        a += rr[j] * tw[j];
        b += pr[j] * tw[j];
      }
      R[i] = a;
      F[i] = b;
    }
    for (int m : basis.radial_indices(n)) {
      if (n == 0 && m % 2 == 1) continue;
      const CollocatedMode& cm = col.at({n, m});
      // <<f, (rho, i psi) e^{i n theta}>>
      std::complex<double> a = 0.0;
      for (int i = 0; i < nr; ++i)
        a += wr[i] * cm.rho[i] * R[i] - std::complex<double>(0.0, 1.0) * (wp[i] * cm.psi[i]) * F[i];
      out.push_back({n, m, 2.0 * std::abs(a), normalize_phase(std::arg(a))});
    }
  }
  return out;
}

/// Random modal initial data together with the exact coefficients used.
struct RandomSuperposition {
  PerturbationFields fields;
  std::vector<ModalCoefficient> coefficients;
  std::uint64_t seed = 0;
};

/// k_nm uniform on (0, 1] and phase uniform on [0, 2 pi) for every (n, m) != (0, 0) in
/// the basis, drawn from std::mt19937_64 in (n, m) order.
inline RandomSuperposition random_superposition(const ModeBasis& basis, std::uint64_t seed, double epsilon,
                                                int n_max = -1, int m_max = -1) {
  if (!(epsilon > 0.0)) throw ConfigError("random_superposition: epsilon must be positive");
  if (n_max < 0) n_max = basis.n_max;
  if (m_max < 0) m_max = std::max(basis.m_max, basis.m_max_0);
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  RandomSuperposition out;
  out.seed = seed;
  for (const auto& [key, md] : basis.modes) {
    if (key.first > n_max || key.second > m_max) continue;
    const double k = 1.0 - unit(gen);  // (0, 1]
    const double phase = kTwoPi * unit(gen);
    out.coefficients.push_back({key.first, key.second, k, normalize_phase(phase)});
  }
  out.fields = evaluate_linear_solution(out.coefficients, basis, 0.0);
  out.fields.epsilon = epsilon;
  return out;
}

}  // namespace soh
