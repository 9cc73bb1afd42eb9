/// @file nonlinear.hpp
/// @brief Nonlinear SOH solver: conservative (m, u, v) form of the relaxation system,
/// Rusanov finite volumes on the polar mesh, then normalization of the orientation.
#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "soh/core.hpp"

namespace soh {

/// m = r rho, (u, v) = r rho q (cos(phi + theta), sin(phi + theta)) at cell centers.
struct ConservativeState {
  PolarGrid grid;
  Array2D m, u, v;
  double t = 0.0;

  ConservativeState() = default;
  explicit ConservativeState(const PolarGrid& g) : grid(g), m(g), u(g), v(g) {}
};

enum class FluxKind { rusanov };

struct SolverConfig {
  double dt = 5e-4;
  double cfl_check = 0.9;
  FluxKind flux = FluxKind::rusanov;
  std::vector<double> snapshot_times;
  double t_end = 0.0;            // run length; snapshots beyond it are dropped
  double max_wall_seconds = 0.0; // 0 disables the guard
  bool warn = true;              // print CFL warnings to stderr
};

inline void validate(const SolverConfig& c) {
  if (!(c.dt > 0.0)) throw ConfigError("dt must be positive");
  if (!(c.cfl_check > 0.0)) throw ConfigError("cfl_check must be positive");
  if (!(c.t_end >= 0.0)) throw ConfigError("t_end must be nonnegative");
  for (std::size_t i = 0; i < c.snapshot_times.size(); ++i) {
    if (!(c.snapshot_times[i] >= 0.0)) throw ConfigError("snapshot times must be nonnegative");
    if (i > 0 && c.snapshot_times[i] < c.snapshot_times[i - 1])
      throw ConfigError("snapshot times must be nondecreasing");
  }
}

inline ConservativeState to_conservative(const PrimitiveFields& f, const PolarGrid& g) {
  if (!f.matches(g)) throw ConfigError("to_conservative: field shape does not match the grid");
  ConservativeState s(g);
  for (int i = 0; i < g.n_r(); ++i) {
    const double r = g.r(i);
    for (int k = 0; k < g.n_theta(); ++k) {
      const double rho = f.rho(i, k);
      if (!(rho > 0.0))
        throw NumericalError("to_conservative: nonpositive density at cell (" + std::to_string(i) + ", " +
                             std::to_string(k) + ")");
      const double mm = r * rho;
      const double a = f.phi(i, k) + g.theta(k);
      s.m(i, k) = mm;
      s.u(i, k) = mm * f.q(i, k) * std::cos(a);
      s.v(i, k) = mm * f.q(i, k) * std::sin(a);
    }
  }
  return s;
}

inline PrimitiveFields from_conservative(const ConservativeState& s) {
  const PolarGrid& g = s.grid;
  PrimitiveFields f(g);
  for (int i = 0; i < g.n_r(); ++i) {
    const double r = g.r(i);
    for (int k = 0; k < g.n_theta(); ++k) {
      const double mm = s.m(i, k);
      if (!(mm > 0.0)) throw NumericalError("from_conservative: vacuum cell");
      f.rho(i, k) = mm / r;
      f.q(i, k) = std::hypot(s.u(i, k), s.v(i, k)) / mm;
      f.phi(i, k) = wrap_angle(std::atan2(s.v(i, k), s.u(i, k)) - g.theta(k));
    }
  }
  return f;
}

using Flux3 = std::array<double, 3>;

/// Radial flux F(theta, U).
inline Flux3 flux_r(const Parameters& p, double theta, double m, double u, double v) {
  if (!(m > 0.0)) throw NumericalError("flux_r: vacuum");
  const double c = std::cos(theta), s = std::sin(theta);
  const double pr = u * c + v * s;
  return {p.c1 * pr, p.c2 * u / m * pr + p.theta * m * c, p.c2 * v / m * pr + p.theta * m * s};
}

/// Azimuthal flux G(r, theta, U).
inline Flux3 flux_theta(const Parameters& p, double r, double theta, double m, double u, double v) {
  if (!(m > 0.0)) throw NumericalError("flux_theta: vacuum");
  if (!(r > 0.0)) throw ConfigError("flux_theta: r must be positive");
  const double c = std::cos(theta), s = std::sin(theta);
  const double pt = v * c - u * s;
  return {p.c1 * pt / r, (p.c2 * u / m * pt - p.theta * m * s) / r, (p.c2 * v / m * pt + p.theta * m * c) / r};
}

/// Largest characteristic speed of the flux in a direction where the momentum component
/// per unit mass is w: |c2 w| + sqrt|c2^2 w^2 - c1 c2 w^2 + c1 theta|.
inline double directional_speed(const Parameters& p, double w) {
  const double disc = p.c2 * p.c2 * w * w - p.c1 * p.c2 * w * w + p.c1 * p.theta;
  return std::abs(p.c2 * w) + std::sqrt(std::abs(disc));
}

//=============================================================================
// Local-frame state
//
// The stepping loop works on (m, p_r, p_t), the momentum in the polar frame of each
// cell center. The update is the Cartesian (m, u, v) scheme written in rotated
// coordinates: only the half-cell angle enters, so the scheme is exactly invariant
// under shifts of the azimuthal index.

struct FrameState {
  PolarGrid grid;
  Array2D m, pr, pt;
  long step = 0;

  FrameState() = default;
  explicit FrameState(const PolarGrid& g) : grid(g), m(g), pr(g), pt(g) {}
};

inline FrameState to_frame(const ConservativeState& s) {
  FrameState f(s.grid);
  for (int i = 0; i < s.grid.n_r(); ++i)
    for (int k = 0; k < s.grid.n_theta(); ++k) {
      const double th = s.grid.theta(k), c = std::cos(th), sn = std::sin(th);
      f.m(i, k) = s.m(i, k);
      f.pr(i, k) = s.u(i, k) * c + s.v(i, k) * sn;
      f.pt(i, k) = s.v(i, k) * c - s.u(i, k) * sn;
    }
  return f;
}

inline ConservativeState from_frame(const FrameState& f, double t) {
  ConservativeState s(f.grid);
  s.t = t;
  for (int i = 0; i < f.grid.n_r(); ++i)
    for (int k = 0; k < f.grid.n_theta(); ++k) {
      const double th = f.grid.theta(k), c = std::cos(th), sn = std::sin(th);
      s.m(i, k) = f.m(i, k);
      s.u(i, k) = f.pr(i, k) * c - f.pt(i, k) * sn;
      s.v(i, k) = f.pr(i, k) * sn + f.pt(i, k) * c;
    }
  return s;
}

inline FrameState frame_from_primitive(const PrimitiveFields& f, const PolarGrid& g) {
  if (!f.matches(g)) throw ConfigError("field shape does not match the grid");
  FrameState s(g);
  for (int i = 0; i < g.n_r(); ++i) {
    const double r = g.r(i);
    for (int k = 0; k < g.n_theta(); ++k) {
      const double rho = f.rho(i, k);
      if (!(rho > 0.0))
        throw NumericalError("nonpositive density at cell (" + std::to_string(i) + ", " + std::to_string(k) + ")");
      const double mm = r * rho;
      s.m(i, k) = mm;
      s.pr(i, k) = mm * f.q(i, k) * std::cos(f.phi(i, k));
      s.pt(i, k) = mm * f.q(i, k) * std::sin(f.phi(i, k));
    }
  }
  return s;
}

inline PrimitiveFields primitive_from_frame(const FrameState& s) {
  const PolarGrid& g = s.grid;
  PrimitiveFields f(g);
  for (int i = 0; i < g.n_r(); ++i) {
    const double r = g.r(i);
    for (int k = 0; k < g.n_theta(); ++k) {
      const double mm = s.m(i, k);
      f.rho(i, k) = mm / r;
      f.q(i, k) = std::hypot(s.pr(i, k), s.pt(i, k)) / mm;
      f.phi(i, k) = std::atan2(s.pt(i, k), s.pr(i, k));
    }
  }
  return f;
}

/// Radial ghost rows: mass mirrored, radial momentum negated, tangential kept, then
/// rescaled to |p| = m.
struct GhostLayers {
  std::vector<double> m_in, pr_in, pt_in;    // below r1
  std::vector<double> m_out, pr_out, pt_out; // above r2
};

inline GhostLayers apply_boundary_conditions(const FrameState& s) {
  const int nr = s.grid.n_r(), nt = s.grid.n_theta();
  GhostLayers gl;
  auto fill = [&](int i, std::vector<double>& gm, std::vector<double>& gpr, std::vector<double>& gpt) {
    gm.resize(nt);
    gpr.resize(nt);
    gpt.resize(nt);
    for (int k = 0; k < nt; ++k) {
      const double mm = s.m(i, k), a = -s.pr(i, k), b = s.pt(i, k);
      const double norm = std::hypot(a, b);
      if (!(norm > 0.0)) throw NumericalError("boundary cell with zero momentum at theta index " + std::to_string(k));
      gm[k] = mm;
      gpr[k] = mm * a / norm;
      gpt[k] = mm * b / norm;
    }
  };
  fill(0, gl.m_in, gl.pr_in, gl.pt_in);
  fill(nr - 1, gl.m_out, gl.pr_out, gl.pt_out);
  return gl;
}

/// Same ghost rule on a Cartesian state: returns ghosts as (m, u, v) rows.
struct CartesianGhosts {
  std::vector<double> m_in, u_in, v_in, m_out, u_out, v_out;
};

inline CartesianGhosts apply_boundary_conditions(const ConservativeState& s) {
  const GhostLayers gl = apply_boundary_conditions(to_frame(s));
  const int nt = s.grid.n_theta();
  CartesianGhosts cg;
  cg.m_in = gl.m_in;
  cg.m_out = gl.m_out;
  cg.u_in.resize(nt);
  cg.v_in.resize(nt);
  cg.u_out.resize(nt);
  cg.v_out.resize(nt);
  for (int k = 0; k < nt; ++k) {
    const double th = s.grid.theta(k), c = std::cos(th), sn = std::sin(th);
    cg.u_in[k] = gl.pr_in[k] * c - gl.pt_in[k] * sn;
    cg.v_in[k] = gl.pr_in[k] * sn + gl.pt_in[k] * c;
    cg.u_out[k] = gl.pr_out[k] * c - gl.pt_out[k] * sn;
    cg.v_out[k] = gl.pr_out[k] * sn + gl.pt_out[k] * c;
  }
  return cg;
}

struct StepReport {
  double max_cfl = 0.0;
};

/// One forward-Euler Rusanov update of the transport part (relaxation term off).
inline FrameState conservative_step(const FrameState& s, const GhostLayers& gl, const Parameters& p, double dt,
                                    StepReport* report = nullptr) {
  const PolarGrid& g = s.grid;
  const int nr = g.n_r(), nt = g.n_theta();
  const double h = g.h(), dth = g.dtheta();
  const double cd = std::cos(0.5 * dth), sd = std::sin(0.5 * dth);
  const double c1 = p.c1, c2 = p.c2, th = p.theta;

  // radial interface fluxes, interfaces i = 0..nr (interface i sits below cell i)
  const std::size_t rowlen = static_cast<std::size_t>(nt);
  std::vector<double> fm((nr + 1) * rowlen), fr((nr + 1) * rowlen), ft((nr + 1) * rowlen);
  auto cell = [&](int i, int k, double& mm, double& a, double& b) {
    if (i < 0) {
      mm = gl.m_in[k];
      a = gl.pr_in[k];
      b = gl.pt_in[k];
    } else if (i >= nr) {
      mm = gl.m_out[k];
      a = gl.pr_out[k];
      b = gl.pt_out[k];
    } else {
      mm = s.m(i, k);
      a = s.pr(i, k);
      b = s.pt(i, k);
    }
  };

#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int i = 0; i <= nr; ++i) {
    for (int k = 0; k < nt; ++k) {
      double mL, aL, bL, mR, aR, bR;
      cell(i - 1, k, mL, aL, bL);
      cell(i, k, mR, aR, bR);
      const double wL = aL / mL, wR = aR / mR;
      const double s_ = std::max(directional_speed(p, wL), directional_speed(p, wR));
      const double FL0 = c1 * aL, FL1 = c2 * aL * wL + th * mL, FL2 = c2 * bL * wL;
      const double FR0 = c1 * aR, FR1 = c2 * aR * wR + th * mR, FR2 = c2 * bR * wR;
      const std::size_t idx = static_cast<std::size_t>(i) * rowlen + k;
      fm[idx] = (i == 0 || i == nr) ? 0.0 : 0.5 * (FL0 + FR0) - 0.5 * s_ * (mR - mL);
      fr[idx] = 0.5 * (FL1 + FR1) - 0.5 * s_ * (aR - aL);
      ft[idx] = 0.5 * (FL2 + FR2) - 0.5 * s_ * (bR - bL);
    }
  }

  FrameState out(g);
  out.step = s.step;
  double max_cfl = 0.0;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) reduction(max : max_cfl)
#endif
  for (int i = 0; i < nr; ++i) {
    const double r = g.r(i);
    const double inv_r = 1.0 / r;
    // azimuthal face fluxes for this row, face k sits between cells k and k+1,
    // expressed as (mass, face-radial, face-tangential)
    std::vector<double> gm(nt), gr(nt), gt(nt);
    for (int k = 0; k < nt; ++k) {
      const int k1 = k + 1 == nt ? 0 : k + 1;
      const double mL = s.m(i, k), aL = s.pr(i, k), bL = s.pt(i, k);
      const double mR = s.m(i, k1), aR = s.pr(i, k1), bR = s.pt(i, k1);
      // rotate both cells into the face frame
      const double PrL = aL * cd + bL * sd, PtL = -aL * sd + bL * cd;
      const double PrR = aR * cd - bR * sd, PtR = aR * sd + bR * cd;
      const double wL = PtL / mL, wR = PtR / mR;
      const double s_ = std::max(directional_speed(p, wL), directional_speed(p, wR));
      const double GL0 = c1 * PtL, GL1 = c2 * PrL * wL, GL2 = c2 * PtL * wL + th * mL;
      const double GR0 = c1 * PtR, GR1 = c2 * PrR * wR, GR2 = c2 * PtR * wR + th * mR;
      gm[k] = inv_r * (0.5 * (GL0 + GR0) - 0.5 * s_ * (mR - mL));
      gr[k] = inv_r * (0.5 * (GL1 + GR1) - 0.5 * s_ * (PrR - PrL));
      gt[k] = inv_r * (0.5 * (GL2 + GR2) - 0.5 * s_ * (PtR - PtL));
    }
    const double lr = dt / h, lt = dt / dth;
    for (int k = 0; k < nt; ++k) {
      const int km = k == 0 ? nt - 1 : k - 1;
      const std::size_t lo = static_cast<std::size_t>(i) * rowlen + k, hi = lo + rowlen;
      // face k (above, at theta_k + dth/2) and face km (below, at theta_k - dth/2) in this cell's frame
      const double up_r = gr[k] * cd - gt[k] * sd, up_t = gr[k] * sd + gt[k] * cd;
      const double dn_r = gr[km] * cd + gt[km] * sd, dn_t = -gr[km] * sd + gt[km] * cd;
      out.m(i, k) = s.m(i, k) - lr * (fm[hi] - fm[lo]) - lt * (gm[k] - gm[km]);
      out.pr(i, k) = s.pr(i, k) - lr * (fr[hi] - fr[lo]) - lt * (up_r - dn_r);
      out.pt(i, k) = s.pt(i, k) - lr * (ft[hi] - ft[lo]) - lt * (up_t - dn_t);

      const double mm = s.m(i, k);
      const double cfl = dt * (directional_speed(p, s.pr(i, k) / mm) / h +
                               directional_speed(p, s.pt(i, k) / mm) * inv_r / dth);
      max_cfl = std::max(max_cfl, cfl);
    }
  }
  for (int i = 0; i < nr; ++i)
    for (int k = 0; k < nt; ++k)
      if (!(out.m(i, k) > 0.0))
        throw NumericalError("vacuum: m <= 0 at cell (" + std::to_string(i) + ", " + std::to_string(k) + ")");
  if (report) report->max_cfl = max_cfl;
  return out;
}

/// Cartesian-state version: boundary fill and transport update.
inline ConservativeState conservative_step(const ConservativeState& s, const Parameters& p, const SolverConfig& c,
                                           StepReport* report = nullptr) {
  validate(c);
  const FrameState f = to_frame(s);
  return from_frame(conservative_step(f, apply_boundary_conditions(f), p, c.dt, report), s.t + c.dt);
}

/// (p_r, p_t) <- m (p_r, p_t) / |p|.
inline FrameState relaxation_step(FrameState s) {
  for (int i = 0; i < s.grid.n_r(); ++i)
    for (int k = 0; k < s.grid.n_theta(); ++k) {
      const double a = s.pr(i, k), b = s.pt(i, k);
      const double norm = std::hypot(a, b);
      if (!(norm > 0.0))
        throw NumericalError("zero momentum (degenerate orientation) at cell (" + std::to_string(i) + ", " +
                             std::to_string(k) + ")");
      const double f = s.m(i, k) / norm;
      s.pr(i, k) = a * f;
      s.pt(i, k) = b * f;
    }
  return s;
}

inline ConservativeState relaxation_step(ConservativeState s) {
  for (int i = 0; i < s.grid.n_r(); ++i)
    for (int k = 0; k < s.grid.n_theta(); ++k) {
      const double a = s.u(i, k), b = s.v(i, k);
      const double norm = std::hypot(a, b);
      if (!(norm > 0.0))
        throw NumericalError("zero momentum (degenerate orientation) at cell (" + std::to_string(i) + ", " +
                             std::to_string(k) + ")");
      const double f = s.m(i, k) / norm;
      s.u(i, k) = a * f;
      s.v(i, k) = b * f;
    }
  return s;
}

/// Sum of m h dtheta in row-major order.
inline double total_mass(const Array2D& m, const PolarGrid& g) {
  double sum = 0.0;
  for (double x : m.flat()) sum += x;
  return sum * g.h() * g.dtheta();
}

/// Rotation sense of the flow: -1 clockwise, +1 counter-clockwise. Mixed data is rejected.
inline int orientation(const FrameState& s) {
  double mean = 0.0;
  for (double x : s.pt.flat()) mean += x;
  const int sign = mean < 0.0 ? -1 : 1;
  for (int i = 0; i < s.grid.n_r(); ++i)
    for (int k = 0; k < s.grid.n_theta(); ++k)
      if (s.pt(i, k) * sign <= 0.0)
        throw ConfigError("mixed flow orientation: tangential momentum changes sign at cell (" + std::to_string(i) +
                          ", " + std::to_string(k) + ")");
  return sign;
}

struct Snapshot {
  double t = 0.0;
  long step = 0;
  PrimitiveFields fields;
};

struct RunStats {
  long steps = 0;
  double max_cfl = 0.0;
  int cfl_warnings = 0;
  int orientation = -1;
  double initial_mass = 0.0;
  double final_mass = 0.0;
  double max_norm_defect = 0.0;  // max | |p|/m - 1 | after the last step
  double wall_seconds = 0.0;
};

/// Steps at which each snapshot time is reached (nearest multiple of dt).
inline std::vector<long> snapshot_steps(const SolverConfig& c) {
  std::vector<long> out;
  for (double t : c.snapshot_times) {
    if (t > c.t_end + 1e-9 * std::max(1.0, c.t_end)) continue;
    out.push_back(std::lround(t / c.dt));
  }
  return out;
}

/// Runs boundary fill, transport and normalization up to t_end. Snapshots are passed to
/// `on_snapshot` as they are reached; simulated time is step * dt.
inline RunStats run_nonlinear(const Parameters& p, const PrimitiveFields& initial, const PolarGrid& g,
                              const SolverConfig& c, const std::function<void(const Snapshot&)>& on_snapshot) {
  validate(p);
  validate(c);
  const auto start = std::chrono::steady_clock::now();
  RunStats stats;
  FrameState s = relaxation_step(frame_from_primitive(initial, g));
  stats.orientation = orientation(s);
  stats.initial_mass = total_mass(s.m, g);

  const std::vector<long> snaps = snapshot_steps(c);
  const long n_steps = std::lround(c.t_end / c.dt);
  std::size_t next = 0;
  auto emit = [&](long step) {
    while (next < snaps.size() && snaps[next] == step) {
      if (on_snapshot) on_snapshot(Snapshot{step * c.dt, step, primitive_from_frame(s)});
      ++next;
    }
  };
  emit(0);
  for (long step = 1; step <= n_steps; ++step) {
    StepReport rep;
    s = relaxation_step(conservative_step(s, apply_boundary_conditions(s), p, c.dt, &rep));
    s.step = step;
    stats.max_cfl = std::max(stats.max_cfl, rep.max_cfl);
    if (rep.max_cfl > c.cfl_check) {
      if (c.warn && stats.cfl_warnings == 0)
        std::fprintf(stderr, "warning: CFL number %.3f exceeds %.3f at step %ld\n", rep.max_cfl, c.cfl_check, step);
      ++stats.cfl_warnings;
    }
    emit(step);
    if (c.max_wall_seconds > 0.0) {
      const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      if (elapsed > c.max_wall_seconds)
        throw NumericalError("wall-clock budget of " + std::to_string(c.max_wall_seconds) + " s exceeded at step " +
                             std::to_string(step));
    }
  }
  stats.steps = n_steps;
  stats.final_mass = total_mass(s.m, g);
  for (int i = 0; i < g.n_r(); ++i)
    for (int k = 0; k < g.n_theta(); ++k)
      stats.max_norm_defect =
          std::max(stats.max_norm_defect, std::abs(std::hypot(s.pr(i, k), s.pt(i, k)) / s.m(i, k) - 1.0));
  stats.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return stats;
}

/// Convenience form collecting all snapshots in memory.
inline std::vector<Snapshot> run_nonlinear(const Parameters& p, const PrimitiveFields& initial, const PolarGrid& g,
                                           const SolverConfig& c, RunStats* stats = nullptr) {
  std::vector<Snapshot> out;
  RunStats st = run_nonlinear(p, initial, g, c, [&](const Snapshot& sn) { out.push_back(sn); });
  if (stats) *stats = st;
  return out;
}

}  // namespace soh
