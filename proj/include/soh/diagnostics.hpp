/// @file diagnostics.hpp
/// @brief Perturbation energy, modal amplitude histories, turn-on times, L1 distances
/// between snapshots and eigenvalue sweeps with overlap-based mode tracking.
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "soh/core.hpp"
#include "soh/linear.hpp"
#include "soh/nonlinear.hpp"
#include "soh/spectral.hpp"

namespace soh {

inline double perturbation_energy(const PerturbationFields& f, const Parameters& p, const PolarGrid& g) {
  return weighted_inner_product(f, f, p, g);
}

/// (fields - reference) / epsilon, angle difference wrapped to (-pi, pi].
inline PerturbationFields perturbation_from_reference(const PrimitiveFields& f, const PrimitiveFields& ref,
                                                      double epsilon) {
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (!f.rho.same_shape(ref.rho)) throw ConfigError("snapshot and reference shapes differ");
  PerturbationFields out;
  out.rho_tilde = Array2D(f.rho.n_r(), f.rho.n_theta());
  out.phi_tilde = Array2D(f.rho.n_r(), f.rho.n_theta());
  out.epsilon = epsilon;
  for (int i = 0; i < f.rho.n_r(); ++i)
    for (int k = 0; k < f.rho.n_theta(); ++k) {
      out.rho_tilde(i, k) = (f.rho(i, k) - ref.rho(i, k)) / epsilon;
      out.phi_tilde(i, k) = wrap_angle(f.phi(i, k) - ref.phi(i, k)) / epsilon;
    }
  return out;
}

/// k_nm(t) traces on a common time axis.
struct ModalTimeSeries {
  std::vector<double> times;
  std::map<ModeKey, std::vector<double>> entries;
  double threshold = 5e-4;
  double epsilon = 1.0;

  const std::vector<double>& trace(int n, int m) const {
    auto it = entries.find({n, m});
    if (it == entries.end())
      throw ConfigError("mode (" + std::to_string(n) + ", " + std::to_string(m) + ") not in the series");
    return it->second;
  }

  /// Appends one sample; times must increase strictly.
  void append(double t, const std::vector<ModalCoefficient>& coeffs) {
    if (!times.empty() && !(t > times.back())) throw ConfigError("modal history times must increase strictly");
    times.push_back(t);
    for (const auto& c : coeffs) entries[{c.n, c.m}].push_back(c.k);
  }
};

/// Incremental builder so long runs need not keep every snapshot in memory. The
/// reference is either the analytic steady state or, per sample, a caller-supplied field
/// (e.g. the same solver run from the unperturbed state, which removes numerical drift).
class ModalRecorder {
 public:
  ModalRecorder(const ModeBasis& basis, double epsilon, double threshold = 5e-4) : basis_(&basis) {
    if (!(threshold > 0.0)) throw ConfigError("threshold must be positive");
    series_.epsilon = epsilon;
    series_.threshold = threshold;
  }

  void add(double t, const PrimitiveFields& fields, const PrimitiveFields& reference) {
    series_.append(t, project_field(perturbation_from_reference(fields, reference, series_.epsilon), *basis_));
  }

  void add(double t, const PrimitiveFields& fields) {
    const PolarGrid g(RadialGrid(basis_->grid.r1(), basis_->grid.r2(), fields.rho.n_r()), fields.rho.n_theta());
    if (!steady_ || !steady_->rho.same_shape(fields.rho)) steady_ = steady_fields(basis_->params, g);
    add(t, fields, *steady_);
  }

  const ModalTimeSeries& series() const { return series_; }

 private:
  const ModeBasis* basis_;
  ModalTimeSeries series_;
  std::optional<PrimitiveFields> steady_;
};

inline ModalTimeSeries modal_history(const std::vector<Snapshot>& snapshots, const ModeBasis& basis,
                                     double epsilon, double threshold = 5e-4) {
  ModalRecorder rec(basis, epsilon, threshold);
  for (const auto& s : snapshots) rec.add(s.t, s.fields);
  return rec.series();
}

/// Same, with a drift reference sampled at the same times.
inline ModalTimeSeries modal_history(const std::vector<Snapshot>& snapshots, const ModeBasis& basis,
                                     double epsilon, const std::vector<Snapshot>& steady,
                                     double threshold = 5e-4) {
  if (steady.size() != snapshots.size()) throw ConfigError("reference run has a different number of snapshots");
  ModalRecorder rec(basis, epsilon, threshold);
  for (std::size_t i = 0; i < snapshots.size(); ++i) {
    if (std::abs(steady[i].t - snapshots[i].t) > 1e-12 * std::max(1.0, snapshots[i].t))
      throw ConfigError("reference snapshot times do not match");
    rec.add(snapshots[i].t, snapshots[i].fields, steady[i].fields);
  }
  return rec.series();
}

/// First time k_nm reaches the series threshold, linearly interpolated; none if never.
inline std::optional<double> turn_on_time(const ModalTimeSeries& s, int n, int m) {
  const auto& k = s.trace(n, m);
  for (std::size_t i = 0; i < k.size(); ++i) {
    if (k[i] >= s.threshold) {
      if (i == 0) return s.times[0];
      const double f = (s.threshold - k[i - 1]) / (k[i] - k[i - 1]);
      return s.times[i - 1] + f * (s.times[i] - s.times[i - 1]);
    }
  }
  return std::nullopt;
}

//=============================================================================
// L1 distances

namespace detail {
inline PolarGrid polar_of(const Array2D& a, const RadialGrid& radial_span) {
  return PolarGrid(RadialGrid(radial_span.r1(), radial_span.r2(), a.n_r()), a.n_theta());
}
}  // namespace detail

/// sum |rho_a - rho_b| r h dtheta.
inline double l1_distance(const PrimitiveFields& a, const PrimitiveFields& b, const PolarGrid& g) {
  if (!a.matches(g) || !b.matches(g)) throw ConfigError("l1_distance: snapshots on different grids");
  double sum = 0.0;
  for (int i = 0; i < g.n_r(); ++i) {
    double row = 0.0;
    for (int k = 0; k < g.n_theta(); ++k) row += std::abs(a.rho(i, k) - b.rho(i, k));
    sum += row * g.r(i);
  }
  return sum * g.h() * g.dtheta();
}

/// sum |wrap(phi_a - phi_b)| r h dtheta.
inline double l1_distance_angle(const PrimitiveFields& a, const PrimitiveFields& b, const PolarGrid& g) {
  if (!a.matches(g) || !b.matches(g)) throw ConfigError("l1_distance_angle: snapshots on different grids");
  double sum = 0.0;
  for (int i = 0; i < g.n_r(); ++i) {
    double row = 0.0;
    for (int k = 0; k < g.n_theta(); ++k) row += std::abs(wrap_angle(a.phi(i, k) - b.phi(i, k)));
    sum += row * g.r(i);
  }
  return sum * g.h() * g.dtheta();
}

inline double l1_distance_combined(const PrimitiveFields& a, const PrimitiveFields& b, const PolarGrid& g) {
  return l1_distance(a, b, g) + l1_distance_angle(a, b, g);
}

/// sum |rho| r h dtheta, the normalizer for relative distances.
inline double l1_norm(const PrimitiveFields& a, const PolarGrid& g) {
  double sum = 0.0;
  for (int i = 0; i < g.n_r(); ++i) {
    double row = 0.0;
    for (int k = 0; k < g.n_theta(); ++k) row += std::abs(a.rho(i, k));
    sum += row * g.r(i);
  }
  return sum * g.h() * g.dtheta();
}

//=============================================================================
// Parameter sweeps

enum class SweepParameter { c1, c2, theta, r1, r2 };

inline std::string to_string(SweepParameter w) {
  switch (w) {
    case SweepParameter::c1: return "c1";
    case SweepParameter::c2: return "c2";
    case SweepParameter::theta: return "theta";
    case SweepParameter::r1: return "r1";
    case SweepParameter::r2: return "r2";
  }
  return "?";
}

inline SweepParameter parse_sweep_parameter(const std::string& s) {
  if (s == "c1") return SweepParameter::c1;
  if (s == "c2") return SweepParameter::c2;
  if (s == "theta") return SweepParameter::theta;
  if (s == "r1") return SweepParameter::r1;
  if (s == "r2") return SweepParameter::r2;
  throw ConfigError("unknown sweep parameter '" + s + "' (expected c1, c2, theta, r1 or r2)");
}

inline Parameters with_value(Parameters p, SweepParameter w, double x) {
  switch (w) {
    case SweepParameter::c1: p.c1 = x; break;
    case SweepParameter::c2: p.c2 = x; break;
    case SweepParameter::theta: p.theta = x; break;
    case SweepParameter::r1: p.r1 = x; break;
    case SweepParameter::r2: p.r2 = x; break;
  }
  validate(p);
  return p;
}

struct SweepResult {
  SweepParameter parameter = SweepParameter::r1;
  int n = 0;
  std::vector<double> values;
  std::map<int, std::vector<double>> traces;  // m -> nu at each value
  std::map<int, std::vector<double>> overlaps;  // m -> tracking overlap with the previous value
};

namespace detail {

/// |<a, b>| / (|a| |b|) with both profiles read sample-by-sample on b's grid.
inline double profile_overlap(const EigenMode& a, const EigenMode& b, const Parameters& p) {
  EigenMode aa = a;
  aa.grid = b.grid;
  const auto ab = weighted_inner_product(aa.profile(), b.profile(), p, b.grid);
  const auto na = weighted_inner_product(aa.profile(), aa.profile(), p, b.grid);
  const auto nb = weighted_inner_product(b.profile(), b.profile(), p, b.grid);
  return std::abs(ab) / std::sqrt(std::real(na) * std::real(nb));
}

}  // namespace detail

/// Eigenvalue traces nu_nm(value) for the given radial indices. Labels are assigned at the
/// first value; later values follow each mode by maximal eigenvector overlap.
inline SweepResult parameter_sweep(const Parameters& base, SweepParameter which, const std::vector<double>& values,
                                   int n, const std::vector<int>& m_list, int n_cells) {
  if (values.empty()) throw ConfigError("parameter_sweep: no values");
  if (m_list.empty()) throw ConfigError("parameter_sweep: no radial indices");
  SweepResult res;
  res.parameter = which;
  res.n = n;
  res.values = values;
  const int m_max = *std::max_element(m_list.begin(), m_list.end());

  std::map<int, EigenMode> current;
  {
    const Parameters p = with_value(base, which, values[0]);
    for (auto& md : compute_modes(p, RadialGrid(p, n_cells), n, m_max)) current[md.m] = md;
    for (int m : m_list) {
      if (!current.count(m)) throw NumericalError("parameter_sweep: mode m = " + std::to_string(m) + " not found");
      res.traces[m].push_back(current[m].nu);
      res.overlaps[m].push_back(1.0);
    }
  }
  for (std::size_t v = 1; v < values.size(); ++v) {
    const Parameters p = with_value(base, which, values[v]);
    const RadialGrid g(p, n_cells);
    const ModeMatrix mat = assemble_mode_matrix(p, g, n);
    const int dim = static_cast<int>(mat.size());
    const auto candidates = solve_mode_spectrum(mat, std::min(dim, m_max + 8));
    std::vector<char> taken(candidates.size(), 0);
    std::map<int, EigenMode> next;
    for (int m : m_list) {
      double best = -1.0;
      std::size_t arg = 0;
      for (std::size_t c = 0; c < candidates.size(); ++c) {
        if (taken[c]) continue;
        const double ov = detail::profile_overlap(current[m], candidates[c], p);
        if (ov > best) {
          best = ov;
          arg = c;
        }
      }
      if (best < 0.5)
        throw NumericalError("parameter_sweep: tracking of m = " + std::to_string(m) + " lost at " +
                             to_string(which) + " = " + std::to_string(values[v]) + " (overlap " +
                             std::to_string(best) + "); use a finer sweep");
      taken[arg] = 1;
      EigenMode md = candidates[arg];
      md.m = m;
      res.traces[m].push_back(md.nu);
      res.overlaps[m].push_back(best);
      next[m] = std::move(md);
    }
    current = std::move(next);
  }
  return res;
}

}  // namespace soh
