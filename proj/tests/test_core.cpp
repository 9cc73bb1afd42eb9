#include <gtest/gtest.h>

#include <cmath>

#include "soh/core.hpp"

using namespace soh;

namespace {

Parameters defaults() {
  Parameters p;
  p.rho_star = default_rho_star(p, 1.0);
  return p;
}

}  // namespace

TEST(Parameters, DefaultValues) {
  const Parameters p;
  EXPECT_EQ(p.c1, 0.89307);
  EXPECT_EQ(p.c2, 0.69757);
  EXPECT_EQ(p.theta, 0.2);
  EXPECT_EQ(p.r1, 1.9);
  EXPECT_EQ(p.r2, 2.1);
  EXPECT_NEAR(p.alpha(), 3.48785, 1e-12);
}

TEST(Parameters, RejectsInvalid) {
  EXPECT_THROW(make_parameters(0.0, 0.7, 0.2, 1.9, 2.1, 1.0), ConfigError);
  EXPECT_THROW(make_parameters(0.9, 0.7, -0.2, 1.9, 2.1, 1.0), ConfigError);
  EXPECT_THROW(make_parameters(0.9, 0.7, 0.2, 0.0, 2.1, 1.0), ConfigError);
  EXPECT_THROW(make_parameters(0.9, 0.7, 0.2, 2.1, 2.1, 1.0), ConfigError);
  EXPECT_THROW(make_parameters(0.9, 0.7, 0.2, 1.9, 2.1, 0.0), ConfigError);
  EXPECT_THROW(make_parameters(0.9, NAN, 0.2, 1.9, 2.1, 1.0), ConfigError);
  EXPECT_NO_THROW(make_parameters(0.9, 0.0, 0.2, 1.9, 2.1, 1.0));
}

TEST(SteadyState, DensityFormula) {
  const Parameters p = defaults();
  for (double r : {1.9, 1.95, 2.0, 2.1})
    EXPECT_DOUBLE_EQ(steady_density(p, r), p.rho_star * std::pow(r, p.alpha()));
  EXPECT_THROW(steady_density(p, 1.8), ConfigError);
  EXPECT_THROW(steady_density(p, 2.2), ConfigError);
}

TEST(SteadyState, DerivativeMatchesDifferenceQuotient) {
  const Parameters p = defaults();
  const double h = 1e-5;
  for (double r : {1.92, 2.0, 2.08}) {
    const double fd = (steady_density(p, r + h) - steady_density(p, r - h)) / (2 * h);
    EXPECT_NEAR(steady_density_derivative(p, r), fd, 1e-8);
  }
}

// mean density over the annulus by a 1e6-point trapezoid rule
TEST(SteadyState, DefaultRhoStarGivesUnitMean) {
  Parameters p;
  p.rho_star = default_rho_star(p, 1.0);
  EXPECT_NEAR(p.rho_star, 0.088558, 5e-7);
  const int n = 1000000;
  const double h = (p.r2 - p.r1) / n;
  double sum = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double r = p.r1 + i * h;
    sum += (i == 0 || i == n ? 0.5 : 1.0) * steady_density(p, r) * r;
  }
  const double mass = 2 * kPi * sum * h;
  const double area = kPi * (p.r2 * p.r2 - p.r1 * p.r1);
  EXPECT_NEAR(mass / area, 1.0, 1e-10);
  EXPECT_NEAR(default_rho_star(p, 2.5) / default_rho_star(p, 1.0), 2.5, 1e-14);
}

TEST(Grid, RadialGeometry) {
  const RadialGrid g(1.9, 2.1, 8);
  EXPECT_NEAR(g.h(), 0.025, 1e-15);
  EXPECT_DOUBLE_EQ(g.node(0), 1.9);
  EXPECT_DOUBLE_EQ(g.node(8), 2.1);
  EXPECT_NEAR(g.midpoint(3), 1.9 + 3.5 * 0.025, 1e-15);
  EXPECT_EQ(g.nodes().size(), 9u);
  EXPECT_EQ(g.midpoints().size(), 8u);
}

TEST(Grid, PolarGeometryAndWrap) {
  const Parameters p;
  const PolarGrid g(p, 10, 16);
  EXPECT_EQ(g.size(), 160u);
  EXPECT_DOUBLE_EQ(g.dtheta(), kTwoPi / 16);
  EXPECT_DOUBLE_EQ(g.theta(0), 0.5 * g.dtheta());
  EXPECT_EQ(g.wrap(-1), 15);
  EXPECT_EQ(g.wrap(16), 0);
  EXPECT_EQ(g.wrap(33), 1);
}

TEST(Angles, WrapIntoPrincipalRange) {
  for (double a : {0.0, 1.0, -1.0, 3.0, -3.0, 7.0, -7.0, 100.0}) {
    const double w = wrap_angle(a);
    EXPECT_GT(w, -kPi - 1e-15);
    EXPECT_LE(w, kPi);
    EXPECT_NEAR(std::remainder(w - a, kTwoPi), 0.0, 1e-12);
  }
}

TEST(Fields, SteadyIsPolarizedClockwise) {
  const Parameters p = defaults();
  const PolarGrid g(p, 6, 12);
  const auto f = steady_fields(p, g);
  for (int i = 0; i < 6; ++i)
    for (int k = 0; k < 12; ++k) {
      EXPECT_DOUBLE_EQ(f.rho(i, k), steady_density(p, g.r(i)));
      EXPECT_EQ(f.q(i, k), 1.0);
      EXPECT_DOUBLE_EQ(f.phi(i, k), -0.5 * kPi);
    }
}

TEST(Fields, PerturbationRoundTrip) {
  const Parameters p = defaults();
  const PolarGrid g(p, 7, 9);
  PerturbationFields pert(g, 1e-3);
  for (int i = 0; i < 7; ++i)
    for (int k = 0; k < 9; ++k) {
      pert.rho_tilde(i, k) = std::sin(i + 2.0 * k);
      pert.phi_tilde(i, k) = std::cos(3.0 * i - k);
    }
  const auto f = perturbed_state(p, g, pert);
  const auto back = extract_perturbation(p, g, f, 1e-3);
  for (int i = 0; i < 7; ++i)
    for (int k = 0; k < 9; ++k) {
      EXPECT_NEAR(back.rho_tilde(i, k), pert.rho_tilde(i, k), 1e-9);
      EXPECT_NEAR(back.phi_tilde(i, k), pert.phi_tilde(i, k), 1e-9);
    }
  EXPECT_THROW(extract_perturbation(p, g, f, 0.0), ConfigError);
  EXPECT_THROW(perturbed_state(p, PolarGrid(p, 7, 10), pert), ConfigError);
}

TEST(InnerProduct, RadialIsHermitianAndPositive) {
  const Parameters p = defaults();
  const RadialGrid g(p, 12);
  StaggeredProfile a, b;
  for (int j = 0; j < 12; ++j) {
    a.rho.push_back({std::sin(j + 1.0), 0.3 * j});
    b.rho.push_back({1.0 / (j + 1), -0.1});
  }
  for (int j = 0; j <= 12; ++j) {
    a.phi.push_back({0.2, std::cos(j * 1.0)});
    b.phi.push_back({j * 0.05, 1.0});
  }
  const auto ab = weighted_inner_product(a, b, p, g);
  const auto ba = weighted_inner_product(b, a, p, g);
  EXPECT_NEAR(std::abs(ab - std::conj(ba)), 0.0, 1e-15);
  const auto aa = weighted_inner_product(a, a, p, g);
  EXPECT_GT(aa.real(), 0.0);
  EXPECT_NEAR(aa.imag(), 0.0, 1e-16);

  // hand evaluation of one weight term
  StaggeredProfile e;
  e.rho.assign(12, 0.0);
  e.phi.assign(13, 0.0);
  e.rho[4] = 1.0;
  EXPECT_NEAR(weighted_inner_product(e, e, p, g).real(),
              g.h() * p.theta / p.c1 * std::pow(g.midpoint(4), 1.0 - p.alpha()), 1e-16);
  e.rho[4] = 0.0;
  e.phi[12] = 1.0;
  EXPECT_NEAR(weighted_inner_product(e, e, p, g).real(),
              0.5 * g.h() * p.rho_star * p.rho_star * std::pow(p.r2, p.alpha() + 1.0), 1e-16);

  StaggeredProfile bad = a;
  bad.phi.pop_back();
  EXPECT_THROW(weighted_inner_product(bad, b, p, g), ConfigError);
}

TEST(InnerProduct, FieldProductIsSymmetricBilinear) {
  const Parameters p = defaults();
  const PolarGrid g(p, 5, 8);
  PerturbationFields a(g), b(g);
  for (int i = 0; i < 5; ++i)
    for (int k = 0; k < 8; ++k) {
      a.rho_tilde(i, k) = i - k;
      a.phi_tilde(i, k) = 0.1 * k;
      b.rho_tilde(i, k) = std::sin(1.0 * k);
      b.phi_tilde(i, k) = i;
    }
  EXPECT_DOUBLE_EQ(weighted_inner_product(a, b, p, g), weighted_inner_product(b, a, p, g));
  EXPECT_GT(weighted_inner_product(a, a, p, g), 0.0);
}
