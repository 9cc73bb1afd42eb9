// soh: command-line driver for the annulus SOH library.
//
//   soh eigen          eigenvalues and mode profiles
//   soh linear-evolve  modal superposition at given times
//   soh nonlinear      conservative splitting solver
//   soh diagnose       k_nm(t) histories, turn-on times, energy
//   soh sweep          eigenvalue traces over one parameter
//   soh compare        L1 error of nonlinear runs against the linear solution
//   soh replay         re-run a manifest and check the outputs bitwise
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 replay mismatch.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "soh/soh.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fs = std::filesystem;
using soh::io::json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitMismatch = 4;

struct ReplayMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string abs_path(const std::string& p) { return p.empty() ? p : fs::absolute(p).lexically_normal().string(); }

std::string time_tag(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", t);
  return buf;
}

soh::Parameters load_config(const std::string& path) {
  return path.empty() ? soh::io::default_parameters() : soh::io::load_parameters(path);
}

/// Output directory plus the manifest being assembled for it.
class RunDir {
 public:
  RunDir(const std::string& dir, std::string command) : dir_(dir) {
    if (dir.empty()) throw soh::ConfigError("--out must name a directory");
    fs::create_directories(dir_);
    manifest_.command = std::move(command);
  }
  fs::path path(const std::string& name) const { return dir_ / name; }
  soh::io::RunManifest& manifest() { return manifest_; }

  void input(const std::string& p) {
    if (!p.empty()) manifest_.inputs[abs_path(p)] = soh::io::file_digest(p);
  }
  void output(const std::string& name) { manifest_.outputs[name] = soh::io::file_digest(dir_ / name); }

  void finish(std::chrono::steady_clock::time_point start) {
    manifest_.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    manifest_.write(dir_);
  }

 private:
  fs::path dir_;
  soh::io::RunManifest manifest_;
};

std::vector<std::string> with_config(std::vector<std::string> args, const std::string& config) {
  if (!config.empty()) {
    args.push_back("--config");
    args.push_back(abs_path(config));
  }
  return args;
}

std::string list_arg(const std::vector<double>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + soh::io::fmt(xs[i]);
  return s;
}

//=============================================================================
// eigen

struct EigenOptions {
  std::string config, out = "eigen_out", method = "fd";
  int n_max = 4, m_max = 6, n_cells = 400;
};

void write_mode_file(const fs::path& path, const soh::EigenMode& md) {
  soh::io::CsvWriter w(path, {"r", "rho_hat", "psi_hat", "staggering"});
  const auto& g = md.grid;
  const int N = g.n_cells();
  // off-grid values by linear interpolation / end extrapolation
  for (int j = 0; j <= N; ++j) {
    double rho;
    if (j == 0) rho = 1.5 * md.rho_hat[0] - 0.5 * md.rho_hat[1];
    else if (j == N) rho = 1.5 * md.rho_hat[N - 1] - 0.5 * md.rho_hat[N - 2];
    else rho = 0.5 * (md.rho_hat[j - 1] + md.rho_hat[j]);
    w.row({soh::io::fmt(g.node(j)), soh::io::fmt(rho), soh::io::fmt(md.psi_hat[j]), "node"});
    if (j < N)
      w.row({soh::io::fmt(g.midpoint(j)), soh::io::fmt(md.rho_hat[j]),
             soh::io::fmt(0.5 * (md.psi_hat[j] + md.psi_hat[j + 1])), "mid"});
  }
}

int run_eigen(const EigenOptions& o) {
  const auto start = std::chrono::steady_clock::now();
  if (o.method != "fd" && o.method != "bessel") throw soh::ConfigError("--method must be fd or bessel");
  if (o.n_max < 0 || o.m_max < 0) throw soh::ConfigError("--n-max and --m-max must be nonnegative");
  const soh::Parameters p = load_config(o.config);
  const soh::RadialGrid g(p, o.n_cells);

  RunDir run(o.out, "eigen");
  run.input(o.config);
  auto& man = run.manifest();
  man.args = with_config({"--n-max", std::to_string(o.n_max), "--m-max", std::to_string(o.m_max), "--n-cells",
                          std::to_string(o.n_cells), "--method", o.method},
                         o.config);
  man.config = soh::io::to_json(p);

  std::vector<std::vector<soh::EigenMode>> per_n(o.n_max + 1);
  for (int n = 0; n <= o.n_max; ++n) per_n[n] = soh::compute_modes(p, g, n, o.m_max);

  if (o.method == "bessel" && !per_n[0].empty()) {
    double nu_top = 0.0;
    for (const auto& md : per_n[0]) nu_top = std::max(nu_top, std::abs(md.nu));
    const double nu_max = nu_top + 0.5 * soh::bessel_scan_step(p);
    const soh::ModeMatrix mat = soh::assemble_mode_matrix(p, g, 0);
    int expected = 0;
    for (const auto& md : soh::label_modes(soh::solve_mode_spectrum(mat, std::min<int>(mat.size(), 2 * o.m_max + 8)), 0))
      if (md.nu > 0.0 && md.nu <= nu_max) ++expected;
    const auto roots = soh::find_bessel_eigenvalues(p, nu_max, expected);
    std::vector<soh::EigenMode> modes;
    for (std::size_t k = 0; k < roots.size(); ++k) {
      const int m_pos = static_cast<int>(2 * k + 2);
      if (m_pos - 1 > o.m_max) break;
      soh::EigenMode pos = soh::bessel_mode(p, g, roots[k]);
      pos.m = m_pos;
      soh::EigenMode neg = soh::mirror_mode(pos);
      neg.n = 0;
      neg.m = m_pos - 1;
      modes.push_back(neg);
      if (m_pos <= o.m_max) modes.push_back(pos);
    }
    per_n[0] = modes;
    man.extra["bessel_roots"] = roots;
  }

  {
    soh::io::CsvWriter w(run.path("eigenvalues.csv"), {"n", "m", "nu"});
    for (const auto& modes : per_n)
      for (const auto& md : modes) w.row({std::to_string(md.n), std::to_string(md.m), soh::io::fmt(md.nu)});
  }
  run.output("eigenvalues.csv");
  for (const auto& modes : per_n)
    for (const auto& md : modes) {
      const std::string name = "mode_n" + std::to_string(md.n) + "_m" + std::to_string(md.m) + ".csv";
      write_mode_file(run.path(name), md);
      run.output(name);
    }
  man.extra["n_max"] = o.n_max;
  man.extra["m_max"] = o.m_max;
  man.extra["n_cells"] = o.n_cells;
  run.finish(start);
  return 0;
}

//=============================================================================
// linear-evolve

struct LinearOptions {
  std::string config, coeffs, out = "linear_out";
  std::vector<double> times{0.0};
  int n_cells = 400, nr = 0, ntheta = 0;
};

soh::ModeBasis basis_for(const soh::Parameters& p, const std::vector<soh::ModalCoefficient>& coeffs, int n_cells,
                         const soh::PolarGrid& polar) {
  int n_max = 0, m_max = 0;
  for (const auto& c : coeffs) {
    n_max = std::max(n_max, c.n);
    m_max = std::max(m_max, c.m);
  }
  return soh::build_mode_basis(p, soh::RadialGrid(p, n_cells), n_max, m_max, polar);
}

int run_linear(const LinearOptions& o) {
  const auto start = std::chrono::steady_clock::now();
  if (o.coeffs.empty()) throw soh::ConfigError("--coeffs is required");
  const soh::Parameters p = load_config(o.config);
  const auto coeffs = soh::io::read_coefficients(o.coeffs);
  int n_max = 0;
  for (const auto& c : coeffs) n_max = std::max(n_max, c.n);
  const int nr = o.nr > 0 ? o.nr : o.n_cells;
  const int nt = o.ntheta > 0 ? o.ntheta : soh::default_n_theta(n_max);
  const soh::PolarGrid polar(p, nr, nt);
  const soh::ModeBasis basis = basis_for(p, coeffs, o.n_cells, polar);

  RunDir run(o.out, "linear-evolve");
  run.input(o.config);
  run.input(o.coeffs);
  auto& man = run.manifest();
  man.args = with_config({"--coeffs", abs_path(o.coeffs), "--t", list_arg(o.times), "--n-cells",
                          std::to_string(o.n_cells), "--nr", std::to_string(nr), "--ntheta", std::to_string(nt)},
                         o.config);
  man.config = soh::io::to_json(p);
  json snaps = json::array();
  for (double t : o.times) {
    const auto f = soh::evaluate_linear_solution(coeffs, basis, t, polar);
    const std::string name = "linear_t" + time_tag(t) + ".csv";
    soh::io::write_perturbation(run.path(name), f, polar);
    run.output(name);
    snaps.push_back({{"t", t}, {"file", name}});
  }
  man.extra["snapshots"] = snaps;
  man.extra["grid"] = {{"nr", nr}, {"ntheta", nt}, {"basis_cells", o.n_cells}};
  run.finish(start);
  return 0;
}

//=============================================================================
// nonlinear

struct NonlinearOptions {
  std::string config, init, out = "nonlinear_out";
  double epsilon = 0.0, dt = 5e-4, t_end = 0.0, cfl_check = 0.9, max_wall = 0.0;
  int nr = 400, ntheta = 400, basis_n_max = 12, basis_m_max = 12, basis_cells = 0;
  std::vector<double> snapshots;
};

struct InitialData {
  std::vector<soh::ModalCoefficient> coeffs;
  std::optional<std::uint64_t> seed;
};

InitialData parse_init(const std::string& init) {
  InitialData d;
  if (init.rfind("mode:", 0) == 0) {
    std::stringstream ss(init.substr(5));
    std::vector<double> xs;
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      try {
        xs.push_back(std::stod(tok));
      } catch (const std::exception&) {
        throw soh::ConfigError("--init mode:n,m,k,phase has a non-numeric entry '" + tok + "'");
      }
    }
    if (xs.size() != 4) throw soh::ConfigError("--init mode: expects four values n,m,k,phase");
    d.coeffs.push_back({static_cast<int>(xs[0]), static_cast<int>(xs[1]), xs[2], soh::normalize_phase(xs[3])});
  } else if (init.rfind("random:", 0) == 0) {
    try {
      d.seed = std::stoull(init.substr(7));
    } catch (const std::exception&) {
      throw soh::ConfigError("--init random:<seed> needs an unsigned integer seed");
    }
  } else if (!init.empty()) {
    d.coeffs = soh::io::read_coefficients(init);
  } else {
    throw soh::ConfigError("--init is required (mode:n,m,k,phase | coeffs.csv | random:seed)");
  }
  return d;
}

int run_nonlinear_cmd(const NonlinearOptions& o) {
  const auto start = std::chrono::steady_clock::now();
  const soh::Parameters p = load_config(o.config);
  if (!(o.epsilon >= 0.0)) throw soh::ConfigError("--epsilon must be nonnegative");
  if (!(o.t_end > 0.0)) throw soh::ConfigError("--t-end must be positive");
  InitialData init = parse_init(o.init);
  const soh::PolarGrid g(p, o.nr, o.ntheta);
  soh::SolverConfig sc;
  sc.dt = o.dt;
  sc.t_end = o.t_end;
  sc.cfl_check = o.cfl_check;
  sc.max_wall_seconds = o.max_wall;
  sc.snapshot_times = o.snapshots.empty() ? std::vector<double>{0.0, o.t_end} : o.snapshots;
  soh::validate(sc);

  int n_max = o.basis_n_max, m_max = o.basis_m_max;
  if (!init.seed) {
    n_max = 0;
    m_max = 0;
    for (const auto& c : init.coeffs) {
      n_max = std::max(n_max, c.n);
      m_max = std::max(m_max, c.m);
    }
  }
  const int basis_cells = o.basis_cells > 0 ? o.basis_cells : o.nr;
  const soh::ModeBasis basis = soh::build_mode_basis(p, soh::RadialGrid(p, basis_cells), n_max, m_max, g);
  soh::PerturbationFields pert(g, o.epsilon > 0.0 ? o.epsilon : 1.0);
  if (init.seed) {
    auto rs = soh::random_superposition(basis, *init.seed, pert.epsilon, n_max, m_max);
    init.coeffs = rs.coefficients;
    pert = rs.fields;
  } else {
    pert = soh::evaluate_linear_solution(init.coeffs, basis, 0.0, g);
  }
  pert.epsilon = o.epsilon > 0.0 ? o.epsilon : 1.0;
  if (o.epsilon == 0.0)
    for (double& x : pert.rho_tilde.flat()) x = 0.0;
  if (o.epsilon == 0.0)
    for (double& x : pert.phi_tilde.flat()) x = 0.0;
  const soh::PrimitiveFields initial = soh::perturbed_state(p, g, pert);

  RunDir run(o.out, "nonlinear");
  run.input(o.config);
  const bool init_is_file = o.init.rfind("mode:", 0) != 0 && o.init.rfind("random:", 0) != 0;
  if (init_is_file) run.input(o.init);
  auto& man = run.manifest();
  man.args = with_config({"--init", init_is_file ? abs_path(o.init) : o.init, "--epsilon", soh::io::fmt(o.epsilon),
                          "--dt", soh::io::fmt(o.dt), "--nr", std::to_string(o.nr), "--ntheta",
                          std::to_string(o.ntheta), "--t-end", soh::io::fmt(o.t_end), "--snapshots",
                          list_arg(sc.snapshot_times), "--basis-n-max", std::to_string(o.basis_n_max),
                          "--basis-m-max", std::to_string(o.basis_m_max), "--basis-cells",
                          std::to_string(basis_cells), "--cfl-check", soh::io::fmt(o.cfl_check), "--max-wall",
                          soh::io::fmt(o.max_wall)},
                         o.config);
  man.config = soh::io::to_json(p);
  man.seed = init.seed;
  soh::io::write_coefficients(run.path("init_coefficients.csv"), init.coeffs);
  run.output("init_coefficients.csv");

  json snaps = json::array();
  const double eps_out = o.epsilon > 0.0 ? o.epsilon : 1.0;
  const auto stats = soh::run_nonlinear(p, initial, g, sc, [&](const soh::Snapshot& s) {
    const std::string name = "snapshot_t" + time_tag(s.t) + ".csv";
    soh::io::write_snapshot(run.path(name), s.fields, p, g, eps_out);
    run.output(name);
    snaps.push_back({{"t", s.t}, {"step", s.step}, {"file", name}});
  });
  man.steps = stats.steps;
  man.extra["snapshots"] = snaps;
  man.extra["epsilon"] = o.epsilon;
  man.extra["dt"] = o.dt;
  man.extra["grid"] = {{"nr", o.nr}, {"ntheta", o.ntheta}};
  man.extra["basis"] = {{"n_max", n_max}, {"m_max", m_max}, {"cells", basis_cells}};
  man.extra["stats"] = {{"max_cfl", stats.max_cfl},        {"cfl_warnings", stats.cfl_warnings},
                        {"orientation", stats.orientation}, {"initial_mass", stats.initial_mass},
                        {"final_mass", stats.final_mass},   {"max_norm_defect", stats.max_norm_defect}};
  run.finish(start);
  return 0;
}

//=============================================================================
// Loading nonlinear runs back

struct LoadedRun {
  fs::path dir;
  soh::io::RunManifest manifest;
  soh::Parameters params;
  soh::PolarGrid grid;
  double epsilon = 1.0;
  std::vector<std::pair<double, std::string>> snapshots;

  soh::PrimitiveFields snapshot(std::size_t i) const { return soh::io::read_snapshot(dir / snapshots[i].second, grid); }
};

LoadedRun load_run(const std::string& manifest_path) {
  LoadedRun r;
  r.dir = fs::path(manifest_path).parent_path();
  if (r.dir.empty()) r.dir = ".";
  r.manifest = soh::io::RunManifest::read(manifest_path);
  if (r.manifest.command != "nonlinear")
    throw soh::ConfigError(manifest_path + " is not a nonlinear run manifest (command '" + r.manifest.command + "')");
  try {
    r.params = soh::io::parameters_from_json(r.manifest.config);
    const auto& e = r.manifest.extra;
    r.grid = soh::PolarGrid(r.params, e.at("grid").at("nr").get<int>(), e.at("grid").at("ntheta").get<int>());
    r.epsilon = e.at("epsilon").get<double>();
    for (const auto& s : e.at("snapshots")) r.snapshots.emplace_back(s.at("t").get<double>(), s.at("file").get<std::string>());
  } catch (const json::exception& ex) {
    throw soh::ConfigError(manifest_path + ": incomplete nonlinear manifest: " + ex.what());
  }
  return r;
}

//=============================================================================
// diagnose

struct DiagnoseOptions {
  std::string run, basis, reference, modes = "auto", out = "diagnose_out";
  double threshold = 5e-4;
  int n_max = 12, m_max = 12, basis_cells = 0;
};

std::vector<soh::ModeKey> parse_modes(const std::string& s) {
  std::vector<soh::ModeKey> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const auto colon = tok.find(':');
    if (colon == std::string::npos) throw soh::ConfigError("--modes entries look like n:m (got '" + tok + "')");
    try {
      out.emplace_back(std::stoi(tok.substr(0, colon)), std::stoi(tok.substr(colon + 1)));
    } catch (const std::exception&) {
      throw soh::ConfigError("--modes entry '" + tok + "' is not n:m");
    }
  }
  return out;
}

int run_diagnose(const DiagnoseOptions& o) {
  const auto start = std::chrono::steady_clock::now();
  if (o.run.empty()) throw soh::ConfigError("--run is required");
  const LoadedRun lr = load_run(o.run);
  std::optional<LoadedRun> ref;
  if (!o.reference.empty()) {
    ref = load_run(o.reference);
    if (!(ref->grid == lr.grid) || ref->snapshots.size() != lr.snapshots.size())
      throw soh::ConfigError("--reference run does not match the grid and snapshots of --run");
  }
  int n_max = o.n_max, m_max = o.m_max, cells = o.basis_cells > 0 ? o.basis_cells : lr.grid.n_r();
  if (!o.basis.empty()) {
    const auto bm = soh::io::RunManifest::read(fs::path(o.basis) / "manifest.json");
    if (bm.command != "eigen") throw soh::ConfigError("--basis must point to an eigen output directory");
    if (!(soh::io::parameters_from_json(bm.config) == lr.params))
      throw soh::ConfigError("--basis was computed with different parameters than --run");
    n_max = bm.extra.at("n_max").get<int>();
    m_max = bm.extra.at("m_max").get<int>();
    cells = bm.extra.at("n_cells").get<int>();
  }
  const soh::ModeBasis basis = soh::build_mode_basis(lr.params, soh::RadialGrid(lr.params, cells), n_max, m_max, lr.grid);
  const double eps = lr.epsilon > 0.0 ? lr.epsilon : 1.0;

  soh::ModalRecorder rec(basis, eps, o.threshold);
  std::vector<std::pair<double, double>> energy;
  const soh::PrimitiveFields steady = soh::steady_fields(lr.params, lr.grid);
  for (std::size_t i = 0; i < lr.snapshots.size(); ++i) {
    const auto f = lr.snapshot(i);
    const auto reference = ref ? ref->snapshot(i) : steady;
    rec.add(lr.snapshots[i].first, f, reference);
    const auto pert = soh::perturbation_from_reference(f, reference, eps);
    energy.emplace_back(lr.snapshots[i].first, soh::perturbation_energy(pert, lr.params, lr.grid));
  }
  const auto& series = rec.series();
  std::vector<soh::ModeKey> keys;
  if (o.modes == "auto") {
    for (const auto& [key, tr] : series.entries) keys.push_back(key);
  } else {
    keys = parse_modes(o.modes);
    for (const auto& k : keys) (void)series.trace(k.first, k.second);
  }

  RunDir run(o.out, "diagnose");
  run.input(o.run);
  if (ref) run.input(o.reference);
  auto& man = run.manifest();
  man.args = {"--run", abs_path(o.run), "--modes", o.modes, "--threshold", soh::io::fmt(o.threshold),
              "--n-max", std::to_string(n_max), "--m-max", std::to_string(m_max), "--basis-cells", std::to_string(cells)};
  if (ref) {
    man.args.push_back("--reference");
    man.args.push_back(abs_path(o.reference));
  }
  man.config = soh::io::to_json(lr.params);
  {
    soh::io::CsvWriter w(run.path("knm_history.csv"), {"t", "n", "m", "k"});
    for (std::size_t i = 0; i < series.times.size(); ++i)
      for (const auto& key : keys)
        w.row({soh::io::fmt(series.times[i]), std::to_string(key.first), std::to_string(key.second),
               soh::io::fmt(series.trace(key.first, key.second)[i])});
  }
  {
    soh::io::CsvWriter w(run.path("turnon.csv"), {"n", "m", "t1"});
    for (const auto& key : keys) {
      const auto t1 = soh::turn_on_time(series, key.first, key.second);
      w.row({std::to_string(key.first), std::to_string(key.second), t1 ? soh::io::fmt(*t1) : "none"});
    }
  }
  {
    soh::io::CsvWriter w(run.path("energy.csv"), {"t", "energy"});
    for (const auto& [t, e] : energy) w.row({soh::io::fmt(t), soh::io::fmt(e)});
  }
  for (const char* name : {"knm_history.csv", "turnon.csv", "energy.csv"}) run.output(name);
  run.finish(start);
  return 0;
}

//=============================================================================
// sweep

struct SweepOptions {
  std::string config, param = "r1", m_list = "0,1,2,3", out = "sweep_out";
  double from = 1.0, to = 2.05;
  int steps = 50, n = 2, n_cells = 400;
};

int run_sweep(const SweepOptions& o) {
  const auto start = std::chrono::steady_clock::now();
  const soh::Parameters base = load_config(o.config);
  const auto which = soh::parse_sweep_parameter(o.param);
  if (o.steps < 2) throw soh::ConfigError("--steps must be at least 2");
  std::vector<int> ms;
  {
    std::stringstream ss(o.m_list);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      try {
        ms.push_back(std::stoi(tok));
      } catch (const std::exception&) {
        throw soh::ConfigError("--m-list entry '" + tok + "' is not an integer");
      }
    }
  }
  std::vector<double> values(o.steps);
  for (int i = 0; i < o.steps; ++i) values[i] = o.from + (o.to - o.from) * i / (o.steps - 1);
  const auto res = soh::parameter_sweep(base, which, values, o.n, ms, o.n_cells);

  RunDir run(o.out, "sweep");
  run.input(o.config);
  auto& man = run.manifest();
  man.args = with_config({"--param", o.param, "--from", soh::io::fmt(o.from), "--to", soh::io::fmt(o.to), "--steps",
                          std::to_string(o.steps), "--n", std::to_string(o.n), "--m-list", o.m_list, "--n-cells",
                          std::to_string(o.n_cells)},
                         o.config);
  man.config = soh::io::to_json(base);
  {
    soh::io::CsvWriter w(run.path("sweep.csv"), {"param", "value", "n", "m", "nu", "overlap"});
    for (std::size_t i = 0; i < values.size(); ++i)
      for (int m : ms)
        w.row({o.param, soh::io::fmt(values[i]), std::to_string(o.n), std::to_string(m),
               soh::io::fmt(res.traces.at(m)[i]), soh::io::fmt(res.overlaps.at(m)[i])});
  }
  run.output("sweep.csv");
  run.finish(start);
  return 0;
}

//=============================================================================
// compare

struct CompareOptions {
  std::vector<std::string> runs;
  std::string linear, out = "compare_out";
  std::vector<double> times;
  int basis_cells = 0;
};

int run_compare(const CompareOptions& o) {
  const auto start = std::chrono::steady_clock::now();
  if (o.runs.empty()) throw soh::ConfigError("at least one --run is required");
  RunDir run(o.out, "compare");
  auto& man = run.manifest();
  man.args = {};
  for (const auto& r : o.runs) {
    man.args.push_back("--run");
    man.args.push_back(abs_path(r));
    run.input(r);
  }
  if (!o.linear.empty()) {
    man.args.push_back("--linear");
    man.args.push_back(abs_path(o.linear));
    run.input(o.linear);
  }
  if (!o.times.empty()) {
    man.args.push_back("--times");
    man.args.push_back(list_arg(o.times));
  }
  if (o.basis_cells > 0) {
    man.args.push_back("--basis-cells");
    man.args.push_back(std::to_string(o.basis_cells));
  }

  std::optional<soh::Parameters> params;
  {
  soh::io::CsvWriter w(run.path("error_vs_h.csv"), {"epsilon", "h", "t", "error"});
  for (const auto& path : o.runs) {
    const LoadedRun lr = load_run(path);
    if (params && !(*params == lr.params)) throw soh::ConfigError("runs passed to compare use different parameters");
    params = lr.params;
    const auto coeffs = soh::io::read_coefficients(o.linear.empty() ? (lr.dir / "init_coefficients.csv").string() : o.linear);
    const int cells = o.basis_cells > 0 ? o.basis_cells : std::max(lr.grid.n_r(), 40);
    const soh::ModeBasis basis = basis_for(lr.params, coeffs, cells, lr.grid);
    for (std::size_t i = 0; i < lr.snapshots.size(); ++i) {
      const double t = lr.snapshots[i].first;
      if (!o.times.empty() &&
          std::none_of(o.times.begin(), o.times.end(), [&](double x) { return std::abs(x - t) < 1e-9; }))
        continue;
      auto lin = soh::evaluate_linear_solution(coeffs, basis, t, lr.grid);
      lin.epsilon = lr.epsilon > 0.0 ? lr.epsilon : 1.0;
      if (lr.epsilon == 0.0) {
        for (double& x : lin.rho_tilde.flat()) x = 0.0;
        for (double& x : lin.phi_tilde.flat()) x = 0.0;
      }
      const auto linear_fields = soh::perturbed_state(lr.params, lr.grid, lin);
      const double err = soh::l1_distance(lr.snapshot(i), linear_fields, lr.grid);
      w.row({soh::io::fmt(lr.epsilon), soh::io::fmt(lr.grid.h()), soh::io::fmt(t), soh::io::fmt(err)});
    }
  }
  }
  if (params) man.config = soh::io::to_json(*params);
  run.output("error_vs_h.csv");
  run.finish(start);
  return 0;
}

//=============================================================================
// dispatch

int dispatch(std::vector<std::string> args);

int run_replay(const std::string& manifest_path, const std::string& out) {
  const auto man = soh::io::RunManifest::read(manifest_path);
  for (const auto& [path, digest] : man.inputs) {
    if (!fs::exists(path)) throw ReplayMismatch("input '" + path + "' is missing");
    if (soh::io::file_digest(path) != digest) throw ReplayMismatch("input '" + path + "' has changed since the run");
  }
  std::vector<std::string> args{man.command};
  args.insert(args.end(), man.args.begin(), man.args.end());
  args.push_back("--out");
  args.push_back(out);
  const int rc = dispatch(args);
  if (rc != 0) return rc;
  const auto fresh = soh::io::RunManifest::read(fs::path(out) / "manifest.json");
  int mismatches = 0;
  for (const auto& [name, digest] : man.outputs) {
    auto it = fresh.outputs.find(name);
    if (it == fresh.outputs.end()) {
      std::cerr << "replay: output " << name << " was not produced\n";
      ++mismatches;
    } else if (it->second != digest) {
      std::cerr << "replay: output " << name << " differs (" << it->second << " vs " << digest << ")\n";
      ++mismatches;
    }
  }
  if (fresh.outputs.size() != man.outputs.size()) ++mismatches;
  if (mismatches) throw ReplayMismatch(std::to_string(mismatches) + " output(s) differ from the manifest");
  std::cout << "replay: " << man.outputs.size() << " outputs identical\n";
  return 0;
}

void set_threads(int threads) {
  if (threads <= 0) {
    if (const char* env = std::getenv("SOH_THREADS")) threads = std::atoi(env);
  }
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#else
  (void)threads;
#endif
}

int dispatch(std::vector<std::string> args) {
  CLI::App app{"Eigenmodes and nonlinear dynamics of self-organized hydrodynamics on an annulus"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (default: SOH_THREADS or all cores)");

  EigenOptions eo;
  auto* eigen = app.add_subcommand("eigen", "eigenvalues and mode profiles");
  eigen->add_option("--config", eo.config, "parameter file (key = value or JSON)")->check(CLI::ExistingFile);
  eigen->add_option("--n-max", eo.n_max, "largest azimuthal index");
  eigen->add_option("--m-max", eo.m_max, "largest radial index");
  eigen->add_option("--n-cells", eo.n_cells, "radial cells N");
  eigen->add_option("--method", eo.method, "fd or bessel (bessel replaces n = 0)");
  eigen->add_option("--out", eo.out, "output directory");

  LinearOptions lo;
  auto* lin = app.add_subcommand("linear-evolve", "modal superposition at given times");
  lin->add_option("--config", lo.config)->check(CLI::ExistingFile);
  lin->add_option("--coeffs", lo.coeffs, "CSV with columns n, m, k, phase")->check(CLI::ExistingFile);
  lin->add_option("--t", lo.times, "evaluation time(s)")->delimiter(',');
  lin->add_option("--n-cells", lo.n_cells, "radial cells of the eigenbasis");
  lin->add_option("--nr", lo.nr, "radial cells of the output grid (default: --n-cells)");
  lin->add_option("--ntheta", lo.ntheta, "azimuthal cells of the output grid");
  lin->add_option("--out", lo.out);

  NonlinearOptions no;
  auto* nl = app.add_subcommand("nonlinear", "conservative splitting solver");
  nl->add_option("--config", no.config)->check(CLI::ExistingFile);
  nl->add_option("--init", no.init, "mode:n,m,k,phase | coeffs.csv | random:seed");
  nl->add_option("--epsilon", no.epsilon, "perturbation magnitude")->required();
  nl->add_option("--dt", no.dt);
  nl->add_option("--nr", no.nr);
  nl->add_option("--ntheta", no.ntheta);
  nl->add_option("--t-end", no.t_end)->required();
  nl->add_option("--snapshots", no.snapshots, "snapshot times")->delimiter(',');
  nl->add_option("--basis-n-max", no.basis_n_max, "azimuthal range of random initial data");
  nl->add_option("--basis-m-max", no.basis_m_max, "radial range of random initial data");
  nl->add_option("--basis-cells", no.basis_cells, "radial cells of the eigenbasis (default: --nr)");
  nl->add_option("--cfl-check", no.cfl_check, "CFL level above which a warning is printed");
  nl->add_option("--max-wall", no.max_wall, "abort after this many seconds (0: no limit)");
  nl->add_option("--out", no.out);

  DiagnoseOptions dop;
  auto* diag = app.add_subcommand("diagnose", "modal histories of a nonlinear run");
  diag->add_option("--run", dop.run, "manifest.json of a nonlinear run")->check(CLI::ExistingFile);
  diag->add_option("--basis", dop.basis, "eigen output directory defining the basis")->check(CLI::ExistingDirectory);
  diag->add_option("--reference", dop.reference, "manifest of an unperturbed run to subtract")->check(CLI::ExistingFile);
  diag->add_option("--modes", dop.modes, "list n:m,... or auto");
  diag->add_option("--threshold", dop.threshold, "turn-on threshold k_t");
  diag->add_option("--n-max", dop.n_max);
  diag->add_option("--m-max", dop.m_max);
  diag->add_option("--basis-cells", dop.basis_cells);
  diag->add_option("--out", dop.out);

  SweepOptions so;
  auto* sw = app.add_subcommand("sweep", "eigenvalue traces over one parameter");
  sw->add_option("--config", so.config)->check(CLI::ExistingFile);
  sw->add_option("--param", so.param, "c1, c2, theta, r1 or r2");
  sw->add_option("--from", so.from);
  sw->add_option("--to", so.to);
  sw->add_option("--steps", so.steps, "number of parameter values");
  sw->add_option("--n", so.n);
  sw->add_option("--m-list", so.m_list);
  sw->add_option("--n-cells", so.n_cells);
  sw->add_option("--out", so.out);

  CompareOptions co;
  auto* cmp = app.add_subcommand("compare", "L1 error of nonlinear runs against the linear solution");
  cmp->add_option("--run", co.runs, "nonlinear manifest(s)")->check(CLI::ExistingFile);
  cmp->add_option("--linear", co.linear, "coefficient CSV (default: the run's initial coefficients)")
      ->check(CLI::ExistingFile);
  cmp->add_option("--times", co.times)->delimiter(',');
  cmp->add_option("--basis-cells", co.basis_cells);
  cmp->add_option("--out", co.out);

  std::string replay_manifest, replay_out = "replay_out";
  auto* rp = app.add_subcommand("replay", "re-run a manifest and compare outputs bitwise");
  rp->add_option("--manifest", replay_manifest)->required()->check(CLI::ExistingFile);
  rp->add_option("--out", replay_out);

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitConfig;
  }
  set_threads(threads);

  if (*eigen) return run_eigen(eo);
  if (*lin) return run_linear(lo);
  if (*nl) return run_nonlinear_cmd(no);
  if (*diag) return run_diagnose(dop);
  if (*sw) return run_sweep(so);
  if (*cmp) return run_compare(co);
  if (*rp) return run_replay(replay_manifest, replay_out);
  return kExitConfig;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    return dispatch(args);
  } catch (const ReplayMismatch& e) {
    std::cerr << "soh: reproduction mismatch: " << e.what() << '\n';
    return kExitMismatch;
  } catch (const soh::ConfigError& e) {
    std::cerr << "soh: configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const soh::NumericalError& e) {
    std::cerr << "soh: numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "soh: configuration error: " << e.what() << '\n';
    return kExitConfig;
  }
}
