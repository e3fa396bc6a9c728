#include <doctest.h>

#include <cmath>
#include <random>

#include "mvlab/constants.hpp"
#include "mvlab/error.hpp"

using namespace mvlab;

TEST_CASE("epsilon examples") {
  CHECK(epsilon_ab(2.0, 0.0, 1.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(epsilon_ab(0.0, 4.0, 1.0) == doctest::Approx(0.125).epsilon(1e-15));
  const double e = epsilon_ab(1.0, 1.0, 2.0);
  CHECK(e == doctest::Approx((std::sqrt(2.0) - 1.0) / 2.0).epsilon(1e-14));
  CHECK(std::abs(e * e + e - 0.25) < 1e-12);
  CHECK_THROWS_AS(epsilon_ab(0.0, 0.0, 1.0), Error);
  CHECK_THROWS_AS(epsilon_ab(1.0, 0.0, 0.0), Error);
}

TEST_CASE("mu examples") {
  CHECK(mu_ab(2.0, 0.0, 1.0, 2) == doctest::Approx(0.125).epsilon(1e-15));
  CHECK(mu_ab(0.0, 4.0, 1.0, 2) == doctest::Approx(1.0 / 128.0).epsilon(1e-15));
  const double e = (std::sqrt(2.0) - 1.0) / 2.0;
  CHECK(mu_ab(1.0, 1.0, 2.0, 3) == doctest::Approx(e * e * e / 4.0).epsilon(1e-13));
  CHECK(mu_ab(1.0, 1.0, 2.0, 3) == doctest::Approx(2.221e-3).epsilon(1e-3));
}

TEST_CASE("epsilon root residual and monotonicity over random parameters") {
  std::mt19937_64 rng(20261016);
  std::uniform_real_distribution<double> logu(-6.0, 6.0);
  for (int k = 0; k < 1000; ++k) {
    const double a = std::exp(logu(rng)) * (k % 3 == 0 ? 0.0 : 1.0);
    const double b = std::exp(logu(rng)) * (k % 3 == 1 ? 0.0 : 1.0);
    const double C = std::exp(logu(rng));
    const double e = epsilon_ab(a, b, C);
    const double target = 0.5 / C;
    CHECK(std::abs(a * e * e + b * e - target) < 1e-12 * std::max(1.0, target));
    CHECK(mu_ab(a, b, C, 2) == std::pow(e, 2) / (2.0 * C));
    if (a > 0) CHECK(epsilon_ab(a * 1.5, b, C) < e);
    if (b > 0) CHECK(epsilon_ab(a, b * 1.5, C) < e);
    CHECK(epsilon_ab(a, b, C * 1.5) < e);
    if (a > 0) CHECK(mu_ab(a * 1.5, b, C, 3) < mu_ab(a, b, C, 3));
    if (b > 0) CHECK(mu_ab(a, b * 1.5, C, 3) < mu_ab(a, b, C, 3));
  }
}

TEST_CASE("interior right hand side") {
  BoundParams p;
  CHECK(interior_rhs(p, 1.0, 3.0, 0.5) == doctest::Approx(1.5));
  p.A0 = 1.0;
  CHECK(interior_rhs(p, 0.5, 0.0, 1.0) == doctest::Approx(0.25));
  p.A1 = 4.0;
  CHECK(interior_rhs(p, 1.0, 1.0, 1.0) == doctest::Approx(6.0));
  CHECK_THROWS_AS(interior_rhs(p, 1.5, 1.0, 1.0), Error);
}

TEST_CASE("boundary right hand side") {
  BoundParams p;
  CHECK(boundary_rhs(p, 0.5, 2.0, 0.7) == doctest::Approx(0.7 * 4.0 * 2.0));
  p.B0 = 2.0;
  CHECK(boundary_rhs(p, 0.5, 0.0, 1.0) == doctest::Approx(1.0));
  BoundParams q;
  q.A1 = 1.0;
  q.B1 = 1.0;
  CHECK(boundary_rhs(q, 1.0, 1.0, 1.0) == doctest::Approx(3.0));
  // reduces to the interior form plus the boundary terms
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int k = 0; k < 100; ++k) {
    BoundParams r{3, u(rng), u(rng), u(rng), u(rng), u(rng), u(rng)};
    const double rad = 0.05 + 0.9 * u(rng) / 2.0, E = u(rng), C = 0.1 + u(rng);
    CHECK(boundary_rhs(r, rad, E, C) ==
          doctest::Approx(interior_rhs(r, rad, E, C) + C * r.B0 * rad + C * std::pow(r.B1, 3) * E).epsilon(1e-13));
  }
}

TEST_CASE("dichotomy") {
  BoundParams p;
  DichotomyResult tie = quantization_dichotomy(1.0, p, 1.0, 1.0);
  CHECK(tie.lhs == 1.0);
  CHECK(tie.rhs == 1.0);
  CHECK(tie.branch == Branch::BoundConsistent);
  // R^{n/2} = C hbar flips at R = 1/8 for n = 2, hbar = 1/8
  CHECK(quantization_dichotomy(0.124, p, 0.125, 1.0).branch == Branch::BoundConsistent);
  CHECK(quantization_dichotomy(0.126, p, 0.125, 1.0).branch == Branch::ConcentrationForced);
  // large R: the right hand side tends to C hbar
  BoundParams q{2, 1.0, 2.0, 0.0, 0.5, 0.3, 0.0};
  const DichotomyResult far = quantization_dichotomy(1e8, q, 0.2, 0.5);
  CHECK(far.branch == Branch::ConcentrationForced);
  CHECK(far.rhs == doctest::Approx(0.5 * 0.2).epsilon(1e-3));
  // once forced, forced for every larger R
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (int k = 0; k < 200; ++k) {
    BoundParams r{2 + k % 3, u(rng), u(rng), 0.0, u(rng), u(rng), 0.0};
    const double hbar = 0.01 + u(rng), C = 0.1 + u(rng);
    bool forced = false;
    for (double R = 0.01; R < 1e4; R *= 1.1) {
      const bool now = quantization_dichotomy(R, r, hbar, C).branch == Branch::ConcentrationForced;
      if (forced) CHECK(now);
      forced = forced || now;
    }
    CHECK(forced);
  }
}

TEST_CASE("epsilon prime examples") {
  BoundParams p;
  p.B1 = 1.0;
  EpsilonPrime e = epsilon_prime(p, 1.0, 1.0, 0.5);
  CHECK(e.value == doctest::Approx(0.125).epsilon(1e-14));
  CHECK_FALSE(e.capped);
  CHECK(e.linear.applicable);
  CHECK(e.linear.holds);

  BoundParams q;
  q.A1 = 1.0;
  e = epsilon_prime(q, 1.0, 1.0, 0.5);
  CHECK(e.value == doctest::Approx(std::pow(2.0, -1.5)).epsilon(1e-14));
  CHECK(e.quadratic.applicable);
  CHECK(e.quadratic.holds);
  e = epsilon_prime(q, 1.0, 1.0, 0.25);
  CHECK(e.capped);
  CHECK(e.value == 0.25);

  BoundParams both;
  both.A1 = 1.0;
  both.B1 = 1.0;
  e = epsilon_prime(both, 1.0, 1.0, 0.5);
  CHECK(e.value == doctest::Approx((-1.0 + std::sqrt(1.5)) / 2.0).epsilon(1e-13));
  CHECK(e.residual < 1e-12);
  CHECK((e.quadratic.applicable || e.linear.applicable));
  if (e.quadratic.applicable) CHECK(e.quadratic.holds);
  if (e.linear.applicable) CHECK(e.linear.holds);
  CHECK_THROWS_AS(epsilon_prime(BoundParams{}, 1.0, 1.0, 0.5), Error);
}

TEST_CASE("epsilon prime residual and certificates over random parameters") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> logu(-4.0, 4.0);
  for (int k = 0; k < 1000; ++k) {
    BoundParams p;
    p.n = 2 + k % 3;
    p.A1 = k % 4 == 0 ? 0.0 : std::exp(logu(rng));
    p.B1 = k % 4 == 1 ? 0.0 : std::exp(logu(rng));
    const double r = std::exp(logu(rng) / 4.0);
    const double C = std::exp(logu(rng) / 2.0);
    const EpsilonPrime e = epsilon_prime(p, r, C, 0.5);
    const double t = e.root;
    const double target = std::ldexp(1.0, -p.n - 1) / C;
    CHECK(std::abs(p.A1 * t * t + p.B1 * t - target) < 1e-12 * std::max(1.0, target));
    CHECK((e.quadratic.applicable || e.linear.applicable));
    if (e.quadratic.applicable) CHECK(e.quadratic.holds);
    if (e.linear.applicable) CHECK(e.linear.holds);
    CHECK(e.value <= 0.5);
  }
}

TEST_CASE("ledger derivation and text") {
  BoundParams p;
  p.a = 2.0;
  const ConstantLedger l = ConstantLedger::derive(p, 1.0, Provenance::Configured);
  REQUIRE(l.eps_ab.has_value());
  CHECK(*l.eps_ab == 0.5);
  CHECK(*l.mu_ab == 0.125);
  CHECK(*l.hbar == *l.mu_ab);
  const std::string text = l.to_text();
  CHECK(text.find("C = 1 (configured)") != std::string::npos);
  CHECK(text.find("hbar = 0.125 (derived)") != std::string::npos);
  CHECK(l.to_json()["C"]["provenance"] == "configured");

  const ConstantLedger zero = ConstantLedger::derive(BoundParams{}, 0.3, Provenance::Measured);
  CHECK_FALSE(zero.hbar.has_value());
  CHECK(zero.to_json()["C"]["provenance"] == "measured");
  CHECK_THROWS_AS((BoundParams{2, -1.0}).validate(), Error);
  CHECK_THROWS_AS((BoundParams{5}).validate(), Error);
}
