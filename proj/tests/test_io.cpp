#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "soh/io.hpp"

using namespace soh;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("soh_test_io_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

void write(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

}  // namespace

TEST(Config, KeyValueWithComments) {
  const auto p = io::parse_parameters("# model\nc1 = 0.5\nc2: 0.25  # inline\n\ntheta=0.1\nrho_star = 2\n");
  EXPECT_EQ(p.c1, 0.5);
  EXPECT_EQ(p.c2, 0.25);
  EXPECT_EQ(p.theta, 0.1);
  EXPECT_EQ(p.rho_star, 2.0);
  EXPECT_EQ(p.r1, 1.9);
}

TEST(Config, JsonAndDefaults) {
  const auto p = io::parse_parameters(R"({"r1": 1.5, "r2": 2.5})");
  EXPECT_EQ(p.r1, 1.5);
  EXPECT_NEAR(p.rho_star, default_rho_star(p, 1.0), 1e-15);
  const auto d = io::default_parameters();
  EXPECT_NEAR(d.rho_star, 0.088558, 5e-7);
  EXPECT_EQ(io::parameters_from_json(io::to_json(d)), d);
}

TEST(Config, Errors) {
  EXPECT_THROW(io::parse_parameters("c1 = fast\n"), ConfigError);
  EXPECT_THROW(io::parse_parameters("gamma = 1\n"), ConfigError);
  EXPECT_THROW(io::parse_parameters("just words\n"), ConfigError);
  EXPECT_THROW(io::parse_parameters("c1 = -1\n"), ConfigError);
  EXPECT_THROW(io::parse_parameters("r1 = 2.2\n"), ConfigError);
  EXPECT_THROW(io::parse_parameters(R"({"c1": "x"})"), ConfigError);
  EXPECT_THROW(io::parse_parameters("{broken"), ConfigError);
  EXPECT_THROW(io::load_parameters("/nonexistent/soh.cfg"), ConfigError);
}

TEST(Digest, KnownVectors) {
  EXPECT_EQ(io::fnv1a_hex(""), "cbf29ce484222325");
  EXPECT_EQ(io::fnv1a_hex("a"), "af63dc4c8601ec8c");
  EXPECT_EQ(io::fnv1a_hex("foobar"), "85944171f73967e8");
}

TEST(Csv, FormatIsLossless) {
  for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.663077, 1e17})
    EXPECT_EQ(std::stod(io::fmt(x)), x);
}

TEST(Csv, CoefficientsRoundTrip) {
  const auto d = scratch("coeffs");
  const std::vector<ModalCoefficient> c{{3, 2, 0.01, 0.0}, {0, 1, 0.5, 6.2}, {12, 12, 1.0, 3.14159}};
  io::write_coefficients(d / "c.csv", c);
  EXPECT_EQ(io::read_coefficients(d / "c.csv"), c);
  write(d / "bad.csv", "n,m,k\n1,2,3\n");
  EXPECT_THROW(io::read_coefficients(d / "bad.csv"), ConfigError);
  write(d / "bad2.csv", "n,m,k,phase\n1,2,x,0\n");
  EXPECT_THROW(io::read_coefficients(d / "bad2.csv"), ConfigError);
  write(d / "neg.csv", "n,m,k,phase\n-1,2,0.1,0\n");
  EXPECT_THROW(io::read_coefficients(d / "neg.csv"), ConfigError);
}

TEST(Csv, SnapshotRoundTripIsBitwise) {
  const auto d = scratch("snap");
  const auto p = io::default_parameters();
  const PolarGrid g(p, 5, 7);
  auto f = steady_fields(p, g);
  for (int i = 0; i < 5; ++i)
    for (int k = 0; k < 7; ++k) {
      f.rho(i, k) += 1e-3 * std::sin(i * 7.0 + k);
      f.phi(i, k) += 1e-2 * std::cos(k * 1.0);
      f.q(i, k) = 1.0 + 1e-16 * k;
    }
  io::write_snapshot(d / "s.csv", f, p, g, 1e-3);
  const auto back = io::read_snapshot(d / "s.csv", g);
  EXPECT_EQ(back.rho, f.rho);
  EXPECT_EQ(back.phi, f.phi);
  EXPECT_EQ(back.q, f.q);
  const auto t = io::read_csv(d / "s.csv");
  EXPECT_EQ(t.rows.size(), 35u);
  EXPECT_NEAR(t.number(3, t.column("rho_tilde")), (f.rho(0, 3) - steady_density(p, g.r(0))) / 1e-3, 1e-9);
  EXPECT_THROW(io::read_snapshot(d / "s.csv", PolarGrid(p, 5, 8)), ConfigError);
}

TEST(Manifest, RoundTrip) {
  const auto d = scratch("manifest");
  io::RunManifest m;
  m.command = "nonlinear";
  m.args = {"--epsilon", "1"};
  m.config = io::to_json(io::default_parameters());
  m.inputs["/a/b.csv"] = "0123456789abcdef";
  m.outputs["snapshot.csv"] = "fedcba9876543210";
  m.extra["grid"] = {{"nr", 4}, {"ntheta", 8}};
  m.steps = 40;
  m.seed = 18446744073709551557ull;
  m.write(d);
  const auto r = io::RunManifest::read(d / "manifest.json");
  EXPECT_EQ(r.command, m.command);
  EXPECT_EQ(r.args, m.args);
  EXPECT_EQ(r.inputs, m.inputs);
  EXPECT_EQ(r.outputs, m.outputs);
  EXPECT_EQ(r.extra, m.extra);
  EXPECT_EQ(r.steps, 40);
  EXPECT_EQ(r.seed, m.seed);
  const auto j = io::json::parse(io::read_file(d / "manifest.json"));
  EXPECT_EQ(j.at("version"), io::kToolVersion);
  write(d / "broken.json", R"({"command": "x"})");
  EXPECT_THROW(io::RunManifest::read(d / "broken.json"), ConfigError);
}
