/// @file io.hpp
/// @brief Parameter files, CSV tables and snapshots, run manifests and file digests.
#pragma once

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "soh/core.hpp"
#include "soh/linear.hpp"

namespace soh::io {

using json = nlohmann::json;

//=============================================================================
// Parameter configuration

/// Parses `key = value` lines (``#`` comments) or a JSON object. Recognized keys are c1,
/// c2, theta, r1, r2 and rho_star; missing constants take their documented defaults and a
/// missing rho_star gives a unit mean steady density.
inline Parameters parse_parameters(const std::string& text, const std::string& origin = "<config>") {
  std::map<std::string, double> values;
  std::size_t first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::exception& e) {
      throw ConfigError(origin + ": invalid JSON: " + e.what());
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!it->is_number()) throw ConfigError(origin + ": value of '" + it.key() + "' must be a number");
      values[it.key()] = it->get<double>();
    }
  } else {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return std::string();
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
      };
      line = trim(line);
      if (line.empty()) continue;
      auto eq = line.find('=');
      if (eq == std::string::npos) eq = line.find(':');
      if (eq == std::string::npos)
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
      const std::string key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
      std::size_t used = 0;
      double x = 0.0;
      try {
        x = std::stod(val, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != val.size())
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": value of '" + key + "' is not a number");
      values[key] = x;
    }
  }
  Parameters p;
  for (const auto& [key, x] : values) {
    if (key == "c1") p.c1 = x;
    else if (key == "c2") p.c2 = x;
    else if (key == "theta") p.theta = x;
    else if (key == "r1") p.r1 = x;
    else if (key == "r2") p.r2 = x;
    else if (key == "rho_star") p.rho_star = x;
    else throw ConfigError(origin + ": unknown key '" + key + "' (expected c1, c2, theta, r1, r2, rho_star)");
  }
  if (!values.count("rho_star")) {
    p.rho_star = 1.0;
    validate(p);
    p.rho_star = default_rho_star(p, 1.0);
  }
  validate(p);
  return p;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Parameters load_parameters(const std::filesystem::path& path) {
  return parse_parameters(read_file(path), path.string());
}

/// Default parameter set with the unit-mean-density rho_star.
inline Parameters default_parameters() { return parse_parameters(""); }

inline json to_json(const Parameters& p) {
  return json{{"c1", p.c1}, {"c2", p.c2}, {"theta", p.theta}, {"r1", p.r1}, {"r2", p.r2}, {"rho_star", p.rho_star}};
}

inline Parameters parameters_from_json(const json& j) { return parse_parameters(j.dump(), "<manifest>"); }

//=============================================================================
// Digests

/// 64-bit FNV-1a of a byte string, as 16 hex digits.
inline std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string file_digest(const std::filesystem::path& path) { return fnv1a_hex(read_file(path)); }

//=============================================================================
// CSV

inline std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw ConfigError("cannot write '" + path.string() + "'");
    row(header);
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw ConfigError("CSV is missing column '" + name + "'");
  }
  double number(std::size_t row, std::size_t col) const {
    const std::string& s = rows[row][col];
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size())
      throw ConfigError("CSV row " + std::to_string(row + 2) + ": '" + s + "' is not a number");
    return x;
  }
};

inline CsvTable read_csv(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  CsvTable t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.emplace_back();
    if (first) {
      t.header = cells;
      first = false;
    } else {
      if (cells.size() != t.header.size())
        throw ConfigError(path.string() + ": row " + std::to_string(t.rows.size() + 2) + " has " +
                          std::to_string(cells.size()) + " cells, header has " + std::to_string(t.header.size()));
      t.rows.push_back(std::move(cells));
    }
  }
  if (first) throw ConfigError(path.string() + ": empty CSV");
  return t;
}

/// Coefficient table with columns n, m, k, phase.
inline std::vector<ModalCoefficient> read_coefficients(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  const auto cn = t.column("n"), cm = t.column("m"), ck = t.column("k"), cp = t.column("phase");
  std::vector<ModalCoefficient> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    ModalCoefficient c;
    const double n = t.number(r, cn), m = t.number(r, cm);
    if (n != std::floor(n) || m != std::floor(m) || n < 0 || m < 0)
      throw ConfigError(path.string() + ": row " + std::to_string(r + 2) + ": n and m must be nonnegative integers");
    c.n = static_cast<int>(n);
    c.m = static_cast<int>(m);
    c.k = t.number(r, ck);
    if (c.k < 0.0) throw ConfigError(path.string() + ": row " + std::to_string(r + 2) + ": k must be nonnegative");
    c.phase = normalize_phase(t.number(r, cp));
    out.push_back(c);
  }
  return out;
}

inline void write_coefficients(const std::filesystem::path& path, const std::vector<ModalCoefficient>& coeffs) {
  CsvWriter w(path, {"n", "m", "k", "phase"});
  for (const auto& c : coeffs) w.row({std::to_string(c.n), std::to_string(c.m), fmt(c.k), fmt(c.phase)});
}

/// Perturbation snapshot: r, theta, rho_tilde, phi_tilde.
inline void write_perturbation(const std::filesystem::path& path, const PerturbationFields& f, const PolarGrid& g) {
  CsvWriter w(path, {"r", "theta", "rho_tilde", "phi_tilde"});
  for (int i = 0; i < g.n_r(); ++i)
    for (int k = 0; k < g.n_theta(); ++k)
      w.row({fmt(g.r(i)), fmt(g.theta(k)), fmt(f.rho_tilde(i, k)), fmt(f.phi_tilde(i, k))});
}

/// Full-field snapshot: r, theta, rho, q, phi and the epsilon-rescaled deviation from the
/// steady state.
inline void write_snapshot(const std::filesystem::path& path, const PrimitiveFields& f, const Parameters& p,
                           const PolarGrid& g, double epsilon) {
  CsvWriter w(path, {"r", "theta", "rho", "q", "phi", "rho_tilde", "phi_tilde"});
  for (int i = 0; i < g.n_r(); ++i) {
    const double rho_s = steady_density(p, g.r(i));
    for (int k = 0; k < g.n_theta(); ++k)
      w.row({fmt(g.r(i)), fmt(g.theta(k)), fmt(f.rho(i, k)), fmt(f.q(i, k)), fmt(f.phi(i, k)),
             fmt((f.rho(i, k) - rho_s) / epsilon), fmt(wrap_angle(f.phi(i, k) - kSteadyAngle) / epsilon)});
  }
}

inline PrimitiveFields read_snapshot(const std::filesystem::path& path, const PolarGrid& g) {
  const CsvTable t = read_csv(path);
  if (t.rows.size() != g.size())
    throw ConfigError(path.string() + ": " + std::to_string(t.rows.size()) + " rows, grid has " +
                      std::to_string(g.size()) + " cells");
  const auto cr = t.column("rho"), cq = t.column("q"), cp = t.column("phi");
  PrimitiveFields f(g);
  std::size_t row = 0;
  for (int i = 0; i < g.n_r(); ++i)
    for (int k = 0; k < g.n_theta(); ++k, ++row) {
      f.rho(i, k) = t.number(row, cr);
      f.q(i, k) = t.number(row, cq);
      f.phi(i, k) = t.number(row, cp);
    }
  return f;
}

//=============================================================================
// Run manifest

inline constexpr const char* kToolVersion = "1.0.0";

/// Record of one CLI invocation: arguments, resolved configuration, inputs and outputs.
struct RunManifest {
  std::string command;
  std::vector<std::string> args;  // subcommand arguments without --out
  json config = json::object();
  std::map<std::string, std::string> inputs;   // path -> digest
  std::map<std::string, std::string> outputs;  // file name (relative to the run dir) -> digest
  json extra = json::object();
  double wall_seconds = 0.0;
  long steps = 0;
  std::optional<std::uint64_t> seed;

  json to_json() const {
    json j{{"tool", "soh"},       {"version", kToolVersion}, {"command", command},
           {"args", args},        {"config", config},        {"inputs", inputs},
           {"outputs", outputs},  {"wall_seconds", wall_seconds}, {"steps", steps},
           {"extra", extra}};
    j["seed"] = seed ? json(*seed) : json(nullptr);
    return j;
  }

  static RunManifest from_json(const json& j) {
    RunManifest m;
    try {
      m.command = j.at("command").get<std::string>();
      m.args = j.at("args").get<std::vector<std::string>>();
      m.config = j.at("config");
      m.inputs = j.at("inputs").get<std::map<std::string, std::string>>();
      m.outputs = j.at("outputs").get<std::map<std::string, std::string>>();
      if (j.contains("extra")) m.extra = j.at("extra");
      if (j.contains("wall_seconds")) m.wall_seconds = j.at("wall_seconds").get<double>();
      if (j.contains("steps")) m.steps = j.at("steps").get<long>();
      if (j.contains("seed") && !j.at("seed").is_null()) m.seed = j.at("seed").get<std::uint64_t>();
    } catch (const json::exception& e) {
      throw ConfigError(std::string("malformed manifest: ") + e.what());
    }
    return m;
  }

  void write(const std::filesystem::path& dir) const {
    std::ofstream out(dir / "manifest.json");
    if (!out) throw ConfigError("cannot write manifest in '" + dir.string() + "'");
    out << to_json().dump(2) << '\n';
  }

  static RunManifest read(const std::filesystem::path& path) {
    json j;
    try {
      j = json::parse(read_file(path));
    } catch (const json::exception& e) {
      throw ConfigError(path.string() + ": invalid JSON: " + e.what());
    }
    return from_json(j);
  }
};

}  // namespace soh::io
