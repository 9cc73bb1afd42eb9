// Acceptance suite: one PASS/FAIL line per criterion, indented notes underneath.
//
//   acceptance                 exit 1 if any criterion fails
//   acceptance --report-only   always exit 0 once the report is complete
//   acceptance --only <text>   run criteria whose name contains <text>
//   acceptance --report <file> also write the report to <file>
//
// SOH_ACCEPTANCE_QUICK=1 runs the mode-coupling check at N = 200 instead of N = 400.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "soh/soh.hpp"

using namespace soh;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
  std::vector<std::string> notes;
};

std::string format(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string format(const char* f, ...) {
  char buf[1024];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Parameters defaults() {
  Parameters p;
  p.rho_star = default_rho_star(p, 1.0);
  return p;
}

double nu_of(const std::vector<EigenMode>& modes, int m) {
  for (const auto& md : modes)
    if (md.m == m) return md.nu;
  throw NumericalError("mode m = " + std::to_string(m) + " missing");
}

//=============================================================================
// spectral criteria

Outcome table_zero_modes() {
  const Parameters p = defaults();
  const auto t0 = std::chrono::steady_clock::now();
  const auto modes = compute_modes(p, RadialGrid(p, 1280), 0, 6);
  const double secs = seconds_since(t0);
  const double expect[] = {-6.6631, 6.6631, -13.2895, 13.2895, -19.9240, 19.9240};
  double worst = 0.0;
  for (int m = 1; m <= 6; ++m) worst = std::max(worst, std::abs(nu_of(modes, m) - expect[m - 1]));
  return {worst <= 5e-4 && secs < 30.0, format("max |dnu| = %.2e (tol 5e-4), %.2f s (limit 30 s)", worst, secs), {}};
}

Outcome bessel_cross_check() {
  const Parameters p = defaults();
  const auto roots = find_bessel_eigenvalues(p, 21.0, 3);
  const auto modes = compute_modes(p, RadialGrid(p, 1280), 0, 6);
  const double expect[] = {6.6631, 13.2895, 19.9240};
  if (roots.size() != 3) return {false, format("found %zu roots below 21, expected 3", roots.size()), {}};
  double worst_table = 0.0, worst_fd = 0.0;
  for (int i = 0; i < 3; ++i) {
    worst_table = std::max(worst_table, std::abs(roots[i] - expect[i]));
    worst_fd = std::max({worst_fd, std::abs(roots[i] - nu_of(modes, 2 * i + 2)),
                         std::abs(-roots[i] - nu_of(modes, 2 * i + 1))});
  }
  return {worst_table <= 5e-5 && worst_fd <= 1e-3,
          format("vs table %.2e (tol 5e-5), vs finite differences %.2e (tol 1e-3); roots %.6f %.6f %.6f", worst_table,
                 worst_fd, roots[0], roots[1], roots[2]),
          {}};
}

Outcome table_azimuthal_modes() {
  const Parameters p = defaults();
  const double table[4][7] = {{0.4452, -6.2647, 7.0618, -12.8913, 13.6876, -19.5256, 20.3217},
                              {0.8905, -5.8668, 7.4608, -12.4935, 14.0860, -19.1277, 20.7199},
                              {1.3357, -5.4692, 7.8603, -12.0958, 14.4845, -18.7299, 21.1182},
                              {1.7810, -5.0720, 8.2601, -11.6983, 14.8833, -18.3323, 21.5167}};
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  int count = 0;
  for (int n = 1; n <= 4; ++n) {
    const auto modes = compute_modes(p, RadialGrid(p, 400), n, 6);
    for (int m = 0; m <= 6; ++m, ++count) worst = std::max(worst, std::abs(nu_of(modes, m) - table[n - 1][m]));
  }
  const double secs = seconds_since(t0);
  return {worst <= 5e-4 && secs < 60.0 && count == 28,
          format("%d values, max |dnu| = %.2e (tol 5e-4), %.2f s (limit 60 s)", count, worst, secs),
          {}};
}

Outcome parity() {
  const Parameters p = defaults();
  const RadialGrid g(p, 400);
  double worst = 0.0;
  for (int n = 1; n <= 4; ++n) {
    const auto a = assemble_mode_matrix(p, g, n), b = assemble_mode_matrix(p, g, -n);
    std::vector<double> x, y;
    for (const auto& md : solve_mode_spectrum(a, static_cast<int>(a.size()))) x.push_back(md.nu);
    for (const auto& md : solve_mode_spectrum(b, static_cast<int>(b.size()))) y.push_back(-md.nu);
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, std::abs(x[i] - y[i]));
  }
  return {worst <= 1e-12, format("full spectra n = 1..4, max |nu(n) + nu(-n)| = %.2e (tol 1e-12)", worst), {}};
}

Outcome realness_orthonormality() {
  const Parameters p = defaults();
  const RadialGrid g(p, 400);
  double sym = 0.0, gram = 0.0;
  for (int n = 0; n <= 4; ++n) {
    sym = std::max(sym, assemble_mode_matrix(p, g, n).symmetry_defect());
    const auto modes = compute_modes(p, g, n, n == 0 ? 7 : 6);
    for (std::size_t i = 0; i < modes.size(); ++i)
      for (std::size_t j = 0; j < modes.size(); ++j) {
        const auto ip = weighted_inner_product(modes[i].profile(), modes[j].profile(), p, g);
        gram = std::max(gram, std::abs(ip - (i == j ? 1.0 : 0.0)));
      }
  }
  return {sym <= 1e-13 && gram <= 1e-8,
          format("symmetry defect %.2e (tol 1e-13), Gram deviation %.2e (tol 1e-8), n = 0..4, 7 modes each", sym, gram),
          {}};
}

Outcome eigensolver_order() {
  const Parameters p = defaults();
  Outcome o{true, "", {}};
  std::string d;
  for (auto [n, m] : {std::pair{1, 1}, std::pair{3, 2}, std::pair{2, 5}}) {
    const double ref = nu_of(compute_modes(p, RadialGrid(p, 3200), n, m), m);
    std::vector<double> err;
    for (int N : {100, 200, 400}) err.push_back(std::abs(nu_of(compute_modes(p, RadialGrid(p, N), n, m), m) - ref));
    for (std::size_t i = 1; i < err.size(); ++i) {
      const double order = std::log2(err[i - 1] / err[i]);
      o.pass = o.pass && std::abs(order - 2.0) <= 0.2;
      d += format("(%d,%d) %.3f ", n, m, order);
    }
  }
  o.detail = "observed orders " + d + "(target 2.0 +- 0.2)";
  return o;
}

//=============================================================================
// nonlinear runs shared by several criteria

struct ModeRun {
  int N;
  double eps;
  PrimitiveFields final_state;
  PrimitiveFields linear;
};

// mode (3,2), k = 0.01, dt = 1e-4 to t = 0.5; eps = 0 gives the unperturbed run
std::map<std::pair<int, double>, ModeRun>& mode_run_cache() {
  static std::map<std::pair<int, double>, ModeRun> cache;
  return cache;
}

const ModeRun& mode_run(int N, double eps) {
  auto& cache = mode_run_cache();
  if (auto it = cache.find({N, eps}); it != cache.end()) return it->second;
  const Parameters p = defaults();
  const PolarGrid g(p, N, N);
  const auto basis = build_mode_basis(p, RadialGrid(p, std::max(N, 40)), 3, 3, g);
  const std::vector<ModalCoefficient> c{{3, 2, 0.01, 0.0}};
  auto init = evaluate_linear_solution(c, basis, 0.0, g);
  auto lin = evaluate_linear_solution(c, basis, 0.5, g);
  init.epsilon = lin.epsilon = eps > 0.0 ? eps : 1.0;
  if (eps == 0.0) {
    init = PerturbationFields(g);
    lin = PerturbationFields(g);
  }
  SolverConfig sc;
  sc.dt = 1e-4;
  sc.t_end = 0.5;
  sc.snapshot_times = {0.5};
  sc.warn = false;
  auto snaps = run_nonlinear(p, perturbed_state(p, g, init), g, sc);
  ModeRun r{N, eps, snaps.back().fields, perturbed_state(p, g, lin)};
  return cache.emplace(std::pair{N, eps}, std::move(r)).first->second;
}

// r-weighted 2x2 average of a fine density onto the grid with half the cells
Array2D restrict_density(const Array2D& fine, const PolarGrid& fg) {
  Array2D out(fine.n_r() / 2, fine.n_theta() / 2);
  for (int i = 0; i < out.n_r(); ++i)
    for (int k = 0; k < out.n_theta(); ++k) {
      const double r0 = fg.r(2 * i), r1 = fg.r(2 * i + 1);
      out(i, k) = (r0 * (fine(2 * i, 2 * k) + fine(2 * i, 2 * k + 1)) + r1 * (fine(2 * i + 1, 2 * k) + fine(2 * i + 1, 2 * k + 1))) /
                  (2.0 * (r0 + r1));
    }
  return out;
}

void subtract(Array2D& a, const Array2D& b) {
  auto x = a.flat();
  auto y = b.flat();
  for (std::size_t i = 0; i < x.size(); ++i) x[i] -= y[i];
}

double l1_density(const Array2D& a, const Array2D& b, const PolarGrid& g) {
  double s = 0.0;
  for (int i = 0; i < g.n_r(); ++i)
    for (int k = 0; k < g.n_theta(); ++k) s += g.r(i) * std::abs(a(i, k) - b(i, k));
  return s * g.h() * g.dtheta();
}

Outcome nonlinear_order() {
  const Parameters p = defaults();
  const int Ns[] = {80, 160, 320};
  std::vector<double> diffs, corrected;
  for (int j = 0; j + 1 < 3; ++j) {
    const PolarGrid gc(p, Ns[j], Ns[j]), gf(p, Ns[j + 1], Ns[j + 1]);
    const auto& c = mode_run(Ns[j], 1e-3);
    const auto& f = mode_run(Ns[j + 1], 1e-3);
    diffs.push_back(l1_density(c.final_state.rho, restrict_density(f.final_state.rho, gf), gc));
    // same comparison after subtracting the unperturbed run on each grid
    Array2D dc = c.final_state.rho, df = f.final_state.rho;
    subtract(dc, mode_run(Ns[j], 0.0).final_state.rho);
    subtract(df, mode_run(Ns[j + 1], 0.0).final_state.rho);
    corrected.push_back(l1_density(dc, restrict_density(df, gf), gc));
  }
  const double order = std::log2(diffs[0] / diffs[1]);
  return {std::abs(order - 1.0) <= 0.3,
          format("self-convergence order %.3f (target 1.0 +- 0.3); |rho_80 - rho_160| = %.3e, |rho_160 - rho_320| = %.3e",
                 order, diffs[0], diffs[1]),
          {format("with the eps = 0 run subtracted: order %.3f (%.3e, %.3e)", std::log2(corrected[0] / corrected[1]),
                  corrected[0], corrected[1])}};
}

Outcome conservation() {
  const Parameters p = defaults();
  const PolarGrid g(p, 64, 64);
  const auto basis = build_mode_basis(p, RadialGrid(p, 64), 3, 3, g);
  auto pert = synthesize_mode_fields(basis, 3, 2, 0.01, 0.0, g);
  pert.epsilon = 1.0;
  FrameState s = relaxation_step(frame_from_primitive(perturbed_state(p, g, pert), g));
  const double m0 = total_mass(s.m, g);
  double dm = 0.0, dn = 0.0;
  for (int step = 0; step < 4000; ++step) {
    s = relaxation_step(conservative_step(s, apply_boundary_conditions(s), p, 5e-4));
    dm = std::max(dm, std::abs(total_mass(s.m, g) - m0) / m0);
    for (int i = 0; i < g.n_r(); ++i)
      for (int k = 0; k < g.n_theta(); ++k)
        dn = std::max(dn, std::abs(std::hypot(s.pr(i, k), s.pt(i, k)) / s.m(i, k) - 1.0));
  }
  return {dm <= 1e-12 && dn <= 1e-12,
          format("4000 steps, N = 64, mode (3,2) eps = 1: max relative mass change %.2e, max ||Omega| - 1| %.2e (tol 1e-12)",
                 dm, dn),
          {}};
}

// index of the first entry from which the sequence stays flat: each further halving of h
// changes the error by less than 20%
std::optional<std::size_t> plateau_start(const std::vector<double>& e) {
  std::optional<std::size_t> start;
  for (std::size_t i = e.size() - 1; i >= 1; --i) {
    if (e[i] >= 0.8 * e[i - 1] && e[i] <= 1.25 * e[i - 1])
      start = i - 1;
    else
      break;
  }
  if (start && *start == e.size() - 1) return std::nullopt;
  return start;
}

Outcome linear_error_structure() {
  const Parameters p = defaults();
  const std::vector<int> Ns{10, 20, 40, 80, 160, 320};
  const std::vector<double> eps{1e-3, 5e-4, 1e-4};
  std::map<double, std::vector<double>> raw, corrected;
  for (double e : eps)
    for (int N : Ns) {
      const PolarGrid g(p, N, N);
      const auto& r = mode_run(N, e);
      raw[e].push_back(l1_distance(r.final_state, r.linear, g));
      // nonlinear minus unperturbed run, plus the steady state
      auto c = r.final_state;
      const auto& zero = mode_run(N, 0.0);
      const auto st = steady_fields(p, g);
      for (int i = 0; i < N; ++i)
        for (int k = 0; k < N; ++k) c.rho(i, k) += st.rho(i, k) - zero.final_state.rho(i, k);
      corrected[e].push_back(l1_distance(c, r.linear, g));
    }
  Outcome o;
  bool pass = true;
  std::map<double, double> plateau;
  for (double e : eps) {
    const auto& v = raw[e];
    const auto ps = plateau_start(v);
    const bool decreases = ps && *ps >= 1 && std::is_sorted(v.begin(), v.begin() + *ps + 1, std::greater<>());
    pass = pass && decreases;
    if (ps) plateau[e] = v.back();
    std::string line = format("eps = %g: error", e);
    for (double x : v) line += format(" %.3e", x);
    line += ps ? format(" (flat from N = %d)", Ns[*ps]) : std::string(" (no plateau)");
    o.notes.push_back(line);
    std::string cl = format("eps = %g: drift-corrected", e);
    for (double x : corrected[e]) cl += format(" %.3e", x);
    o.notes.push_back(cl);
  }
  // strictly smaller, and resolvably so: a plateau set by the perturbation scales with eps
  const bool ordered = plateau.count(1e-3) && plateau.count(1e-4) && plateau[1e-4] < 0.5 * plateau[1e-3];
  o.pass = pass && ordered;
  o.detail = format("decrease-then-plateau for all eps: %s; plateau(1e-4) < 0.5 plateau(1e-3): %s",
                    pass ? "yes" : "no", ordered ? "yes" : "no");
  if (plateau.count(1e-3) && plateau.count(1e-4))
    o.detail += format(" (%.3e vs %.3e)", plateau[1e-4], plateau[1e-3]);
  return o;
}

//=============================================================================
// mode coupling

struct CouplingRun {
  ModalTimeSeries series;
  double seconds = 0.0;
};

CouplingRun coupling_run(int N, double eps, const ModeBasis& basis, const std::vector<Snapshot>& reference) {
  const Parameters p = defaults();
  const PolarGrid g(p, N, N);
  auto pert = synthesize_mode_fields(basis, 3, 2, 0.01, 0.0, g);
  pert.epsilon = eps;
  SolverConfig sc;
  sc.dt = 5e-4;
  sc.t_end = 2.0;
  for (int i = 0; i <= 100; ++i) sc.snapshot_times.push_back(0.02 * i);
  sc.warn = false;
  ModalRecorder rec(basis, eps);
  std::size_t idx = 0;
  const auto t0 = std::chrono::steady_clock::now();
  run_nonlinear(p, perturbed_state(p, g, pert), g, sc, [&](const Snapshot& s) {
    rec.add(s.t, s.fields, reference[idx++].fields);
  });
  return {rec.series(), seconds_since(t0)};
}

Outcome mode_coupling() {
  const bool full = [] {
    const char* e = std::getenv("SOH_ACCEPTANCE_QUICK");
    return !(e && std::strcmp(e, "1") == 0);
  }();
  const int N = full ? 400 : 200;
  const Parameters p = defaults();
  const PolarGrid g(p, N, N);
  const auto basis = build_mode_basis(p, RadialGrid(p, N), 12, 12, g);

  SolverConfig sc;
  sc.dt = 5e-4;
  sc.t_end = 2.0;
  for (int i = 0; i <= 100; ++i) sc.snapshot_times.push_back(0.02 * i);
  sc.warn = false;
  const auto reference = run_nonlinear(p, steady_fields(p, g), g, sc);

  Outcome o;
  auto t1 = [](const ModalTimeSeries& s, int n, int m) { return turn_on_time(s, n, m); };
  auto show = [](std::optional<double> t) { return t ? format("%.3f", *t) : std::string("none"); };
  auto peak = [](const ModalTimeSeries& s, int n, int m) {
    const auto& tr = s.trace(n, m);
    return *std::max_element(tr.begin(), tr.end());
  };

  const auto a = coupling_run(N, 1.0, basis, reference);
  const auto& s1 = a.series;
  // dominance: k_32(t) > 10 k_nm(t) for every other mode and sample
  double worst_ratio = 1e300;
  ModeKey worst_key{0, 0};
  for (const auto& [key, tr] : s1.entries) {
    if (key == ModeKey{3, 2}) continue;
    for (std::size_t i = 0; i < tr.size(); ++i) {
      const double r = s1.trace(3, 2)[i] / std::max(tr[i], 1e-300);
      if (r < worst_ratio) {
        worst_ratio = r;
        worst_key = key;
      }
    }
  }
  const bool c04 = t1(s1, 0, 4).has_value(), c64 = t1(s1, 6, 4).has_value(), dom = worst_ratio > 10.0;
  o.notes.push_back(format("eps = 1 (%.0f s): t1(0,4) = %s [peak %.3e], t1(6,4) = %s [peak %.3e]; "
                           "min k32/k_other = %.2f at (%d,%d)",
                           a.seconds, show(t1(s1, 0, 4)).c_str(), peak(s1, 0, 4), show(t1(s1, 6, 4)).c_str(),
                           peak(s1, 6, 4), worst_ratio, worst_key.first, worst_key.second));

  const auto b = coupling_run(N, 1.5, basis, reference);
  const auto& s2 = b.series;
  const auto u04 = t1(s2, 0, 4), u63 = t1(s2, 6, 3), u64 = t1(s2, 6, 4), u31 = t1(s2, 3, 1);
  const bool c63 = u63.has_value(), c31 = u31.has_value();
  const bool order = u04 && u63 && u64 && *u04 < *u63 && *u63 < *u64;
  o.notes.push_back(format("eps = 1.5 (%.0f s): t1(0,4) = %s, t1(6,3) = %s [peak %.3e], t1(6,4) = %s, "
                           "t1(3,1) = %s [peak %.3e]",
                           b.seconds, show(u04).c_str(), show(u63).c_str(), peak(s2, 6, 3), show(u64).c_str(),
                           show(u31).c_str(), peak(s2, 3, 1)));
  std::string others;
  for (const auto& [key, tr] : s2.entries) {
    if (key == ModeKey{3, 2}) continue;
    if (auto t = turn_on_time(s2, key.first, key.second)) others += format(" (%d,%d)@%.3f", key.first, key.second, *t);
  }
  o.notes.push_back("eps = 1.5 turn-ons:" + others);

  o.pass = c04 && c64 && dom && c63 && c31 && order;
  o.detail = format("N = %d%s; eps=1: (0,4) crosses %s, (6,4) crosses %s, k32 > 10x others %s; "
                    "eps=1.5: (6,3) crosses %s, (3,1) crosses %s, order (0,4)<(6,3)<(6,4) %s",
                    N, full ? "" : " (half-resolution gate)", c04 ? "yes" : "no", c64 ? "yes" : "no",
                    dom ? "yes" : "no", c63 ? "yes" : "no", c31 ? "yes" : "no", order ? "yes" : "no");
  return o;
}

//=============================================================================
// linear diagnostics, sweeps, random superposition

Outcome linear_diagnostics() {
  const Parameters p = defaults();
  const PolarGrid g(p, 200, 64);
  const auto basis = build_mode_basis(p, RadialGrid(p, 200), 12, 12, g);
  const auto rs = random_superposition(basis, 2024, 1.0);
  const auto k0 = project_field(rs.fields, basis);

  double flat = 0.0;
  for (double t : {0.5, 1.0, 2.0}) {
    const auto kt = project_field(evaluate_linear_solution(rs.coefficients, basis, t, g), basis);
    for (std::size_t i = 0; i < k0.size(); ++i) flat = std::max(flat, std::abs(kt[i].k - k0[i].k));
  }
  double sum = 0.0;
  for (const auto& c : k0) sum += 0.5 * c.k * c.k;
  const double energy = weighted_inner_product(rs.fields, rs.fields, p, g);
  const double parseval = std::abs(energy - sum) / energy;
  const auto canon = canonical_coefficients(rs.coefficients);
  double round = 0.0;
  for (std::size_t i = 0; i < canon.size(); ++i) {
    round = std::max(round, std::abs(canon[i].k - k0[i].k));
    round = std::max(round, canon[i].k * std::abs(std::remainder(canon[i].phase - k0[i].phase, kTwoPi)));
  }
  return {flat <= 1e-8 && parseval <= 1e-6 && round <= 1e-6 && canon.size() == k0.size(),
          format("%zu modes: k_nm drift %.2e (tol 1e-8), Parseval %.2e (tol 1e-6), round trip %.2e (tol 1e-6)",
                 k0.size(), flat, parseval, round),
          {}};
}

Outcome sweep_monotonicity() {
  const Parameters p = defaults();
  struct Range {
    SweepParameter w;
    double lo, hi;
    bool signed_nu;
    int m_first;
  };
  const Range ranges[] = {{SweepParameter::r1, 1.0, 2.05, false, 1},
                          {SweepParameter::c1, 0.1, 2.0, false, 0},
                          {SweepParameter::theta, 0.1, 1.0, false, 0},
                          {SweepParameter::c2, 0.2, 1.4, true, 0}};
  Outcome o{true, "", {}};
  std::string d;
  for (const auto& r : ranges) {
    std::vector<double> v;
    for (int i = 0; i < 22; ++i) v.push_back(r.lo + (r.hi - r.lo) * i / 21);
    const auto res = parameter_sweep(p, r.w, v, 2, {0, 1, 2, 3}, 400);
    std::string bad;
    for (int m = r.m_first; m <= 3; ++m) {
      bool ok = true;
      for (std::size_t i = 1; i < v.size(); ++i) {
        const double a = res.traces.at(m)[i - 1], b = res.traces.at(m)[i];
        ok = ok && (r.signed_nu ? b > a : std::abs(b) > std::abs(a));
      }
      if (!ok) {
        bad += format(" %d", m);
        o.notes.push_back(format("%s, m = %d: nu from %.6f to %.6f", to_string(r.w).c_str(), m, res.traces.at(m).front(),
                                 res.traces.at(m).back()));
      }
    }
    o.pass = o.pass && bad.empty();
    d += format("%s [%g, %g] %s; ", to_string(r.w).c_str(), r.lo, r.hi,
                bad.empty() ? "monotone" : ("NOT monotone for m =" + bad).c_str());
  }
  o.detail = d + "n = 2, m = 0..3 (R1: m >= 1), N = 400, 22 values each";
  return o;
}

Outcome random_superposition_comparison() {
  const Parameters p = defaults();
  const int N = 640;
  const PolarGrid g(p, N, N);
  const auto basis = build_mode_basis(p, RadialGrid(p, N), 12, 12, g);
  const auto rs = random_superposition(basis, 1234, 0.0025);
  SolverConfig sc;
  sc.dt = 5e-4;
  sc.t_end = 2.0;
  sc.snapshot_times = {2.0};
  sc.warn = false;
  RunStats stats;
  const auto t0 = std::chrono::steady_clock::now();
  const auto nl = run_nonlinear(p, perturbed_state(p, g, rs.fields), g, sc, &stats).back().fields;
  const double secs = seconds_since(t0);
  auto lin_pert = evaluate_linear_solution(rs.coefficients, basis, 2.0, g);
  lin_pert.epsilon = 0.0025;
  const auto lin = perturbed_state(p, g, lin_pert);
  const auto st = steady_fields(p, g);

  const double dist = l1_distance(nl, lin, g);
  const double rel = dist / l1_norm(lin, g);
  const double rel_pert = dist / l1_distance(lin, st, g);
  auto [lmin, lmax] = std::minmax_element(lin.rho.flat().begin(), lin.rho.flat().end());
  auto [nmin, nmax] = std::minmax_element(nl.rho.flat().begin(), nl.rho.flat().end());
  const double range = *lmax - *lmin;
  const double top = (*lmax - *nmax) / range, bottom = (*nmin - *lmin) / range;
  const bool contracted = top > 0.0 && bottom > 0.0;
  const bool weak = top < 0.25 && bottom < 0.25;
  Outcome o;
  o.pass = rel < 0.10 && contracted && weak;
  o.detail = format("relative L1 density distance %.2f%% (bar 10%%); extrema contracted %s, by %.1f%% / %.1f%% of the "
                    "linear range (weak: < 25%%)",
                    100 * rel, contracted ? "yes" : "no", 100 * top, 100 * bottom);
  o.notes.push_back(format("linear rho in [%.4f, %.4f], nonlinear rho in [%.4f, %.4f]; %zu modes, seed 1234, %.0f s, "
                           "max CFL %.3f",
                           *lmin, *lmax, *nmin, *nmax, rs.coefficients.size(), secs, stats.max_cfl));
  o.notes.push_back(format("distance relative to the linear perturbation alone: %.1f%%", 100 * rel_pert));
  return o;
}

void emit(const std::string& text, FILE* report) {
  std::fputs(text.c_str(), stdout);
  std::fflush(stdout);
  if (report) {
    std::fputs(text.c_str(), report);
    std::fflush(report);
  }
}

}  // namespace

int main(int argc, char** argv) {
  bool report_only = false;
  std::string only;
  FILE* report = nullptr;
  for (int i = 1; i < argc; ++i) {
    if (!std::strcmp(argv[i], "--report-only")) {
      report_only = true;
    } else if (!std::strcmp(argv[i], "--only") && i + 1 < argc) {
      only = argv[++i];
    } else if (!std::strcmp(argv[i], "--report") && i + 1 < argc) {
      report = std::fopen(argv[++i], "w");
      if (!report) {
        std::fprintf(stderr, "cannot write %s\n", argv[i]);
        return 2;
      }
    } else {
      std::fprintf(stderr, "usage: acceptance [--report-only] [--only <text>] [--report <file>]\n");
      return 2;
    }
  }
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"zero-mode-eigenvalues", table_zero_modes},
      {"bessel-cross-check", bessel_cross_check},
      {"azimuthal-mode-eigenvalues", table_azimuthal_modes},
      {"parity", parity},
      {"realness-orthonormality", realness_orthonormality},
      {"eigensolver-order", eigensolver_order},
      {"nonlinear-order", nonlinear_order},
      {"conservation-constraint", conservation},
      {"linear-error-structure", linear_error_structure},
      {"mode-coupling", mode_coupling},
      {"linear-diagnostics", linear_diagnostics},
      {"sweep-monotonicity", sweep_monotonicity},
      {"random-superposition", random_superposition_comparison},
  };
  int failed = 0, run = 0;
  const auto t0 = std::chrono::steady_clock::now();
  for (const auto& [name, fn] : criteria) {
    if (!only.empty() && name.find(only) == std::string::npos) continue;
    ++run;
    Outcome o;
    const auto c0 = std::chrono::steady_clock::now();
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what(), {}};
    }
    if (!o.pass) ++failed;
    std::string text = format("%s %s: ", o.pass ? "PASS" : "FAIL", name.c_str()) + o.detail +
                       format(" [%.1f s]\n", seconds_since(c0));
    for (const auto& n : o.notes) text += "    " + n + "\n";
    emit(text, report);
  }
  emit(format("%d/%d criteria passed in %.0f s\n", run - failed, run, seconds_since(t0)), report);
  if (report) std::fclose(report);
  return failed && !report_only ? 1 : 0;
}
