/// @file spectral.hpp
/// @brief Eigenfrequencies and eigenfunctions of the Fourier-reduced linearized operator
/// on the annulus: staggered finite differences for every azimuthal index n, and the
/// Bessel determinant route for n = 0.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "soh/bessel.hpp"
#include "soh/core.hpp"
#include "soh/tridiagonal.hpp"

namespace soh {

/// One (n, m) eigenpair. The eigenvalue of the linearized operator is i*nu; the perturbation
/// carried by the mode is (rho_hat(r), i psi_hat(r)) e^{i n theta}.
struct EigenMode {
  int n = 0;
  int m = -1;  // -1 until labeled
  double nu = 0.0;
  std::vector<double> rho_hat;  // at the N radial midpoints
  std::vector<double> psi_hat;  // at the N+1 radial nodes, zero at both ends
  RadialGrid grid;

  StaggeredProfile profile() const {
    StaggeredProfile p;
    p.rho.assign(rho_hat.begin(), rho_hat.end());
    p.phi.resize(psi_hat.size());
    for (std::size_t j = 0; j < psi_hat.size(); ++j) p.phi[j] = {0.0, psi_hat[j]};
    return p;
  }

  bool operator==(const EigenMode&) const = default;
};

//=============================================================================
// Finite-difference operator

/// Tridiagonal matrix of the staggered scheme. Unknowns are interleaved by radius,
///   index 2j   -> rho_{j+1/2}  (0 <= j <= N-1)
///   index 2j-1 -> psi_j        (1 <= j <= N-1)
/// in the scaled variables rho_n = r^-alpha rho_hat and psi = rho_star r^(alpha+1) psi_hat.
/// `weight` is the diagonal of the discrete inner product in these variables; the
/// similarity sqrt(weight) M sqrt(weight)^-1 is symmetric.
class ModeMatrix {
 public:
  int n = 0;
  double shift = 0.0;  // added to the diagonal (1 for n = 0)
  Parameters params;
  RadialGrid grid;
  std::vector<double> diag;
  std::vector<double> lower;  // lower[i] = M(i+1, i)
  std::vector<double> upper;  // upper[i] = M(i, i+1)
  std::vector<double> weight;

  std::size_t size() const { return diag.size(); }

  static std::size_t rho_index(int j) { return static_cast<std::size_t>(2 * j); }
  static std::size_t psi_index(int j) { return static_cast<std::size_t>(2 * j - 1); }

  double entry(std::size_t i, std::size_t j) const {
    if (i == j) return diag[i];
    if (j == i + 1) return upper[i];
    if (i == j + 1) return lower[j];
    return 0.0;
  }

  SymmetricTridiagonal symmetrized() const {
    SymmetricTridiagonal t;
    t.diag = diag;
    t.off.resize(upper.size());
    for (std::size_t i = 0; i < upper.size(); ++i) {
      const double a = std::sqrt(weight[i] / weight[i + 1]) * upper[i];
      const double b = std::sqrt(weight[i + 1] / weight[i]) * lower[i];
      t.off[i] = 0.5 * (a + b);
    }
    return t;
  }

  /// max_i |S(i,i+1) - S(i+1,i)| / max|S| for the similarity-transformed matrix.
  double symmetry_defect() const {
    double defect = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < upper.size(); ++i) {
      const double a = std::sqrt(weight[i] / weight[i + 1]) * upper[i];
      const double b = std::sqrt(weight[i + 1] / weight[i]) * lower[i];
      defect = std::max(defect, std::abs(a - b));
      scale = std::max({scale, std::abs(a), std::abs(b)});
    }
    for (double d : diag) scale = std::max(scale, std::abs(d));
    return scale > 0.0 ? defect / scale : 0.0;
  }
};

inline ModeMatrix assemble_mode_matrix(const Parameters& p, const RadialGrid& g, int n) {
  validate(p);
  if (g.n_cells() < 4) throw ConfigError("assemble_mode_matrix: need at least 4 radial cells");
  if (p.c2 == 0.0)
    throw ConfigError("assemble_mode_matrix: c2 = 0 (alpha = 0) is outside the staggered scheme");
  const int N = g.n_cells();
  const double a = p.alpha();
  const double h = g.h();

  ModeMatrix mat;
  mat.n = n;
  mat.shift = n == 0 ? 1.0 : 0.0;
  mat.params = p;
  mat.grid = g;
  const std::size_t dim = static_cast<std::size_t>(2 * N - 1);
  mat.diag.assign(dim, 0.0);
  mat.lower.assign(dim - 1, 0.0);
  mat.upper.assign(dim - 1, 0.0);
  mat.weight.assign(dim, 0.0);

  for (int j = 0; j < N; ++j) {
    const double rm = g.midpoint(j);
    const std::size_t row = ModeMatrix::rho_index(j);
    const double coupling = p.c1 / (h * std::pow(rm, a + 1.0));
    mat.diag[row] = p.c1 * n / rm + mat.shift;
    if (j + 1 <= N - 1) mat.upper[row] = -coupling;    // psi_{j+1}
    if (j >= 1) mat.lower[row - 1] = coupling;         // psi_j
    mat.weight[row] = h * p.theta / p.c1 * std::pow(rm, a + 1.0);
  }
  for (int j = 1; j <= N - 1; ++j) {
    const double rn = g.node(j);
    const std::size_t row = ModeMatrix::psi_index(j);
    const double coupling = p.c2 * std::pow(rn, a + 1.0) / (a * h);
    mat.diag[row] = p.c2 * n / rn + mat.shift;
    mat.upper[row] = coupling;        // rho_{j+1/2}
    mat.lower[row - 1] = -coupling;   // rho_{j-1/2}
    mat.weight[row] = h * std::pow(rn, -(a + 1.0));
  }
  for (std::size_t i = 0; i + 1 < dim; ++i) {
    if (!(mat.upper[i] * mat.lower[i] > 0.0))
      throw NumericalError("assemble_mode_matrix: coupling product not positive, cannot symmetrize");
  }
  return mat;
}

namespace detail {

inline void normalize_mode(EigenMode& mode, const Parameters& p) {
  const double norm2 = std::real(weighted_inner_product(mode.profile(), mode.profile(), p, mode.grid));
  if (!(norm2 > 0.0)) throw NumericalError("eigenmode has zero norm");
  const double s = 1.0 / std::sqrt(norm2);
  std::size_t imax = 0;
  for (std::size_t j = 1; j < mode.rho_hat.size(); ++j)
    if (std::abs(mode.rho_hat[j]) > std::abs(mode.rho_hat[imax])) imax = j;
  const double sign = mode.rho_hat[imax] < 0.0 ? -1.0 : 1.0;
  for (double& v : mode.rho_hat) v *= sign * s;
  for (double& v : mode.psi_hat) v *= sign * s;
}

}  // namespace detail

/// The k_modes eigenpairs of smallest |nu|, sorted by nu, normalized and sign-fixed.
inline std::vector<EigenMode> solve_mode_spectrum(const ModeMatrix& mat, int k_modes) {
  if (k_modes < 0 || static_cast<std::size_t>(k_modes) > mat.size())
    throw ConfigError("solve_mode_spectrum: k_modes must lie in [0, 2N-1]");
  const SymmetricTridiagonal t = mat.symmetrized();
  const auto indices = smallest_magnitude_indices(t, static_cast<std::size_t>(k_modes), mat.shift);
  const auto pairs = tridiagonal_eigenpairs(t, indices);

  const Parameters& p = mat.params;
  const RadialGrid& g = mat.grid;
  const int N = g.n_cells();
  const double a = p.alpha();
  std::vector<EigenMode> modes;
  modes.reserve(pairs.size());
  for (const auto& pair : pairs) {
    EigenMode mode;
    mode.n = mat.n;
    mode.nu = pair.value - mat.shift;
    mode.grid = g;
    mode.rho_hat.resize(N);
    mode.psi_hat.assign(N + 1, 0.0);
    for (int j = 0; j < N; ++j) {
      const std::size_t i = ModeMatrix::rho_index(j);
      const double x = pair.vector[i] / std::sqrt(mat.weight[i]);
      mode.rho_hat[j] = std::pow(g.midpoint(j), a) * x;
    }
    for (int j = 1; j <= N - 1; ++j) {
      const std::size_t i = ModeMatrix::psi_index(j);
      const double x = pair.vector[i] / std::sqrt(mat.weight[i]);
      mode.psi_hat[j] = x / (p.rho_star * std::pow(g.node(j), a + 1.0));
    }
    detail::normalize_mode(mode, p);
    modes.push_back(std::move(mode));
  }
  return modes;
}

/// The (-n) partner: nu -> -nu, psi_hat -> -psi_hat.
inline EigenMode mirror_mode(const EigenMode& mode) {
  EigenMode out = mode;
  out.n = -mode.n;
  out.nu = -mode.nu;
  for (double& v : out.psi_hat) v = -v;
  return out;
}

/// Sign changes of the density profile, ignoring entries below 1e-8 of its maximum.
inline int radial_nodes(const EigenMode& mode) {
  double peak = 0.0;
  for (double v : mode.rho_hat) peak = std::max(peak, std::abs(v));
  int nodes = 0;
  double last = 0.0;
  for (double v : mode.rho_hat) {
    if (std::abs(v) <= 1e-8 * peak) continue;
    if (last != 0.0 && (v < 0.0) != (last < 0.0)) ++nodes;
    last = v;
  }
  return nodes;
}

/// Assigns radial indices. For n >= 1, m = 0 is the unpaired advective mode and the
/// remaining ones come in (slow, fast) = (odd m, even m) pairs of growing radial order.
/// Bare eigenvalue lists without profiles use magnitude order: smallest |nu| is m = 0,
/// then negative (odd m) / positive (even m) with increasing |nu|.
/// For n = 0, the near-zero constant-density mode is dropped and m = 2p-1, 2p label the
/// p-th opposite pair (negative first). Negative n is handled through the mirror.
inline std::vector<EigenMode> label_modes(std::vector<EigenMode> modes, int n) {
  if (modes.empty()) return modes;
  if (n < 0) {
    for (auto& md : modes) md = mirror_mode(md);
    auto labeled = label_modes(std::move(modes), -n);
    for (auto& md : labeled) md = mirror_mode(md);
    return labeled;
  }
  std::sort(modes.begin(), modes.end(),
            [](const EigenMode& a, const EigenMode& b) { return std::abs(a.nu) < std::abs(b.nu); });

  std::vector<EigenMode> out;
  if (n == 0) {
    double first_nonzero = 0.0;
    for (const auto& md : modes)
      if (std::abs(md.nu) > 0.0) {
        first_nonzero = std::abs(md.nu);
        break;
      }
    // zero_tol relative to the first clearly nonzero magnitude
    double ref = first_nonzero;
    if (modes.size() > 1 && std::abs(modes[0].nu) < 1e-6 * std::abs(modes[1].nu)) ref = std::abs(modes[1].nu);
    const double zero_tol = 1e-6 * ref;
    std::vector<EigenMode> neg, pos;
    for (auto& md : modes) {
      if (std::abs(md.nu) < zero_tol) continue;
      (md.nu < 0.0 ? neg : pos).push_back(std::move(md));
    }
    const std::size_t pairs = std::min(neg.size(), pos.size());
    for (std::size_t k = 0; k < pairs; ++k) {
      if (k + 1 < pairs && std::abs(pos[k + 1].nu - pos[k].nu) < zero_tol)
        throw NumericalError("label_modes: coincident eigenvalues at n = 0, labeling is ambiguous");
      neg[k].m = static_cast<int>(2 * k + 1);
      pos[k].m = static_cast<int>(2 * k + 2);
      out.push_back(std::move(neg[k]));
      out.push_back(std::move(pos[k]));
    }
    return out;
  }

  const double scale = std::abs(modes.back().nu) + 1.0;
  for (std::size_t k = 0; k + 1 < modes.size(); ++k)
    if (std::abs(modes[k + 1].nu - modes[k].nu) < 1e-12 * scale)
      throw NumericalError("label_modes: coincident eigenvalues at n = " + std::to_string(n) +
                           ", labeling is ambiguous");

  const bool have_profiles = std::all_of(modes.begin(), modes.end(),
                                         [](const EigenMode& e) { return !e.rho_hat.empty(); });
  if (!have_profiles) {
    modes[0].m = 0;
    std::vector<EigenMode> neg, pos;
    out.push_back(std::move(modes[0]));
    for (std::size_t k = 1; k < modes.size(); ++k) (modes[k].nu < 0.0 ? neg : pos).push_back(std::move(modes[k]));
    for (std::size_t k = 0; k < neg.size(); ++k) {
      neg[k].m = static_cast<int>(2 * k + 1);
      out.push_back(std::move(neg[k]));
    }
    for (std::size_t k = 0; k < pos.size(); ++k) {
      pos[k].m = static_cast<int>(2 * k + 2);
      out.push_back(std::move(pos[k]));
    }
  } else {
    // The m = 0 branch has a nodeless density; every other radial order k >= 1 carries
    // one slow (m = 2k-1) and one fast (m = 2k) mode with k density nodes. For large n
    // the slow branch is pushed past zero, so magnitude ordering alone would mislabel.
    std::map<int, std::vector<EigenMode>> by_nodes;
    for (auto& md : modes) by_nodes[radial_nodes(md)].push_back(std::move(md));
    double nu0 = 0.0;
    if (auto it = by_nodes.find(0); it != by_nodes.end()) {
      if (it->second.size() != 1)
        throw NumericalError("label_modes: more than one nodeless mode at n = " + std::to_string(n));
      nu0 = it->second[0].nu;
    }
    for (auto& [k, group] : by_nodes) {
      std::sort(group.begin(), group.end(), [](const EigenMode& a, const EigenMode& b) { return a.nu < b.nu; });
      if (k == 0) {
        group[0].m = 0;
      } else if (group.size() == 2) {
        group[0].m = 2 * k - 1;
        group[1].m = 2 * k;
      } else if (group.size() == 1) {
        group[0].m = group[0].nu < nu0 ? 2 * k - 1 : 2 * k;
      } else {
        throw NumericalError("label_modes: more than two modes with " + std::to_string(k) +
                             " density nodes at n = " + std::to_string(n));
      }
      for (auto& md : group) out.push_back(std::move(md));
    }
  }
  std::sort(out.begin(), out.end(), [](const EigenMode& a, const EigenMode& b) { return a.m < b.m; });
  return out;
}

/// Labeled modes m = 0..m_max (n != 0) or m = 1..m_max (n = 0) with no gaps.
inline std::vector<EigenMode> compute_modes(const Parameters& p, const RadialGrid& g, int n, int m_max) {
  if (m_max < 0) throw ConfigError("compute_modes: m_max must be nonnegative");
  const int dim = 2 * g.n_cells() - 1;
  int k = std::min(dim, m_max + 6);
  const ModeMatrix mat = assemble_mode_matrix(p, g, n);
  for (;;) {
    auto labeled = label_modes(solve_mode_spectrum(mat, k), n);
    std::vector<EigenMode> kept;
    const int m_first = n == 0 ? 1 : 0;
    for (int m = m_first; m <= m_max; ++m) {
      auto it = std::find_if(labeled.begin(), labeled.end(), [m](const EigenMode& e) { return e.m == m; });
      if (it == labeled.end()) break;
      kept.push_back(*it);
    }
    if (static_cast<int>(kept.size()) == m_max - m_first + 1) return kept;
    if (k == dim) throw NumericalError("compute_modes: grid too coarse for the requested m_max");
    k = std::min(dim, 2 * k);
  }
}

//=============================================================================
// Bessel route for n = 0

namespace detail {

inline double bessel_order(const Parameters& p) { return 0.5 * (p.alpha() + 2.0); }

inline double bessel_wavenumber(const Parameters& p, double nu) {
  const double prod = p.c1 * p.c2 * p.alpha();
  if (!(prod > 0.0)) throw ConfigError("Bessel route needs c1 * c2 * alpha > 0");
  return std::sqrt(p.alpha() * nu * nu / (p.c1 * p.c2));
}

/// Second solution used alongside J_order: J_{-order}, or Y_order for integer order.
inline double second_solution(double order, double x) {
  if (bessel::detail::is_integer(order)) return bessel::cyl_y_integer(order, x);
  return bessel::cyl_j(-order, x);
}

inline double second_solution_derivative(double order, double x) {
  if (bessel::detail::is_integer(order))
    return bessel::cyl_y_integer(order - 1.0, x) - order / x * bessel::cyl_y_integer(order, x);
  return bessel::cyl_j_derivative(-order, x);
}

}  // namespace detail

/// Boundary determinant whose zeros are the n = 0 eigenfrequencies.
inline double bessel_determinant(double nu, const Parameters& p) {
  if (nu == 0.0) throw ConfigError("bessel_determinant: nu must be nonzero");
  const double order = detail::bessel_order(p);
  const double beta = detail::bessel_wavenumber(p, nu);
  const double x1 = beta * p.r1, x2 = beta * p.r2;
  return bessel::cyl_j(order, x1) * detail::second_solution(order, x2) -
         bessel::cyl_j(order, x2) * detail::second_solution(order, x1);
}

/// Scan step: half the asymptotic spacing of the determinant's zeros.
inline double bessel_scan_step(const Parameters& p) {
  return kPi * std::sqrt(p.c1 * p.c2 / p.alpha()) / (2.0 * (p.r2 - p.r1));
}

/// Positive zeros of the Bessel determinant in (0, nu_max], bisected to 1e-10. When
/// `expected_count` is given (e.g. from the finite-difference spectrum) and the scan finds
/// a different number, the step is halved and the scan repeated.
inline std::vector<double> find_bessel_eigenvalues(const Parameters& p, double nu_max,
                                                   std::optional<int> expected_count = std::nullopt) {
  if (!(nu_max > 0.0)) throw ConfigError("find_bessel_eigenvalues: nu_max must be positive");
  double step = bessel_scan_step(p);
  std::vector<double> roots;
  for (int attempt = 0; attempt < 6; ++attempt) {
    roots.clear();
    double a = 1e-3 * step;
    double fa = bessel_determinant(a, p);
    while (a < nu_max) {
      const double b = std::min(a + step, nu_max);
      const double fb = bessel_determinant(b, p);
      if (fa == 0.0) {
        roots.push_back(a);
      } else if (fa * fb < 0.0) {
        double lo = a, hi = b, flo = fa;
        while (hi - lo > 1e-10) {
          const double mid = 0.5 * (lo + hi);
          const double fm = bessel_determinant(mid, p);
          if (fm == 0.0) {
            lo = hi = mid;
            break;
          }
          if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
          } else {
            hi = mid;
          }
        }
        roots.push_back(0.5 * (lo + hi));
      }
      a = b;
      fa = fb;
    }
    if (fa == 0.0 && (roots.empty() || roots.back() != a)) roots.push_back(a);
    if (!expected_count || static_cast<int>(roots.size()) == *expected_count) return roots;
    std::fprintf(stderr, "warning: Bessel scan found %zu roots, expected %d; rescanning at half step\n",
                 roots.size(), *expected_count);
    step *= 0.5;
  }
  return roots;
}

/// n = 0 eigenmode evaluated from the Bessel solution and sampled on the staggered grid.
inline EigenMode bessel_mode(const Parameters& p, const RadialGrid& g, double nu) {
  const double order = detail::bessel_order(p);
  const double beta = detail::bessel_wavenumber(p, nu);
  const double a = p.alpha();
  const double A = detail::second_solution(order, beta * p.r1);
  const double B = -bessel::cyl_j(order, beta * p.r1);
  // psi (scaled angle variable) = r^order [A J(beta r) + B Z(beta r)]
  auto psi_scaled = [&](double r) {
    return std::pow(r, order) * (A * bessel::cyl_j(order, beta * r) + B * detail::second_solution(order, beta * r));
  };
  auto psi_scaled_derivative = [&](double r) {
    const double x = beta * r;
    const double bracket = A * bessel::cyl_j(order, x) + B * detail::second_solution(order, x);
    const double dbracket = beta * (A * bessel::cyl_j_derivative(order, x) +
                                    B * detail::second_solution_derivative(order, x));
    return order * std::pow(r, order - 1.0) * bracket + std::pow(r, order) * dbracket;
  };
  EigenMode mode;
  mode.n = 0;
  mode.nu = nu;
  mode.grid = g;
  const int N = g.n_cells();
  mode.rho_hat.resize(N);
  mode.psi_hat.assign(N + 1, 0.0);
  for (int j = 0; j < N; ++j) {
    const double r = g.midpoint(j);
    const double rho_n = -p.c1 * psi_scaled_derivative(r) / (nu * std::pow(r, a + 1.0));
    mode.rho_hat[j] = std::pow(r, a) * rho_n;
  }
  for (int j = 1; j < N; ++j) {
    const double r = g.node(j);
    mode.psi_hat[j] = psi_scaled(r) / (p.rho_star * std::pow(r, a + 1.0));
  }
  detail::normalize_mode(mode, p);
  return mode;
}

}  // namespace soh
