#include <doctest.h>

#include <cmath>
#include <numbers>

#include "mvlab/error.hpp"
#include "mvlab/grid.hpp"

using namespace mvlab;

namespace {

std::size_t count_class(const Domain& d, NodeClass c) {
  std::size_t k = 0;
  for (std::size_t f : d.mask_nodes())
    if (d.node_class(f) == c) ++k;
  return k;
}

}  // namespace

TEST_CASE("disk mask matches the area up to the boundary layer") {
  const double h = 1.0 / 64.0;
  auto d = make_ball_domain(Point{}, 1.0, h, 2);
  const double expected = std::numbers::pi / (h * h);
  const double layer = 2.0 * std::numbers::pi / h;
  CHECK(std::abs(static_cast<double>(d->mask_nodes().size()) - expected) < layer);
  // every mask node is strictly inside, every box node outside the mask is not
  for (std::size_t f = 0; f < d->box_size(); ++f) {
    const double r = std::sqrt(norm_squared(d->position(f), 2));
    CHECK(d->in_mask(f) == (r < 1.0));
  }
}

TEST_CASE("coarse spacing is rejected") {
  try {
    make_ball_domain(Point{}, 1.0, 0.25, 2);
    FAIL("expected ResolutionTooCoarse");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ResolutionTooCoarse);
  }
  CHECK_THROWS_AS(make_ball_domain(Point{}, 1.0, 1.0 / 64.0, 5), Error);
  CHECK_THROWS_AS(make_half_ball_domain(Point{-0.5, 0.0}, 1.0, 1.0 / 64.0, 2), Error);
}

TEST_CASE("conformal metric changes the node count by under two percent") {
  const double h = 1.0 / 64.0;
  const double c = 0.01;
  auto flat = make_ball_domain(Point{}, 1.0, h, 2);
  auto bent = make_ball_domain(Point{}, 1.0, h, 2, MetricSpec::conformal_linear(c, 1));
  const double n0 = static_cast<double>(flat->mask_nodes().size());
  const double n1 = static_cast<double>(bent->mask_nodes().size());
  CHECK(std::abs(n1 - n0) / n0 < 0.02);

  // brute force: straight segment length in g to first order, |x| (1 + c x1 / 4)
  std::size_t brute = 0;
  const int m = 64;
  for (int i = -m; i <= m; ++i) {
    for (int j = -m; j <= m; ++j) {
      const double x0 = i * h, x1 = j * h;
      const double r = std::hypot(x0, x1);
      if (r * (1.0 + c * x1 / 4.0) < 1.0) ++brute;
    }
  }
  CHECK(std::abs(n1 - static_cast<double>(brute)) <= 2.0 / h * 0.1);
}

TEST_CASE("half disk centred on the boundary") {
  const double h = 1.0 / 64.0;
  auto d = make_half_ball_domain(Point{}, 1.0, h, 2);
  CHECK(count_class(*d, NodeClass::FlatBoundary) == 127);
  for (std::size_t f : d->mask_nodes()) {
    const Point p = d->position(f);
    CHECK(p[0] >= 0.0);
    if (d->node_class(f) == NodeClass::FlatBoundary) {
      CHECK(p[0] == 0.0);
      CHECK(std::abs(p[1]) < 1.0);
    }
  }
}

TEST_CASE("half ball away from the boundary is a full ball") {
  const double h = 1.0 / 64.0;
  auto half = make_half_ball_domain(Point{2.0, 0.0}, 1.0, h, 2);
  auto ball = make_ball_domain(Point{2.0, 0.0}, 1.0, h, 2);
  CHECK(count_class(*half, NodeClass::FlatBoundary) == 0);
  CHECK(half->mask_nodes().size() == ball->mask_nodes().size());
}

TEST_CASE("clipped disk has a flat boundary of width sqrt 3") {
  const double h = 1.0 / 64.0;
  auto d = make_half_ball_domain(Point{0.5, 0.0}, 1.0, h, 2);
  double lo = 1e9, hi = -1e9;
  for (std::size_t f : d->mask_nodes()) {
    if (d->node_class(f) != NodeClass::FlatBoundary) continue;
    lo = std::min(lo, d->position(f)[1]);
    hi = std::max(hi, d->position(f)[1]);
  }
  CHECK(std::abs((hi - lo) - std::sqrt(3.0)) <= h);
  CHECK_THROWS_AS(make_half_ball_domain(Point{0.3, 0.0}, 1.0, 1.0 / 64.0, 2), Error);
}

TEST_CASE("metric deviation") {
  const double h = 1.0 / 64.0;
  auto d = make_ball_domain(Point{}, 1.0, h, 2);
  CHECK(metric_deviation(MetricSpec::identity(), *d) == 0.0);
  CHECK(metric_deviation(MetricSpec::constant_scale(0.03), *d) == doctest::Approx(0.03).epsilon(1e-12));
  // |0.01 sin x1| <= 0.01 sin 1 and |0.01 cos x1| peaks at 0.01 on x1 = 0
  CHECK(std::abs(metric_deviation(MetricSpec::sine_entry(0.01, 0, 1), *d) - 0.01) <= 10.0 * h * h);
}

TEST_CASE("shrinking the radius never adds nodes") {
  const double h = 1.0 / 32.0;
  for (int n = 2; n <= 3; ++n) {
    auto big = make_ball_domain(Point{}, 1.0, h, n);
    auto small = make_ball_domain(Point{}, 0.75, h, n);
    for (std::size_t f : small->mask_nodes()) {
      auto g = big->node_at(small->position(f));
      REQUIRE(g.has_value());
      CHECK(big->in_mask(*g));
    }
    CHECK(small->mask_nodes().size() < big->mask_nodes().size());
  }
}

TEST_CASE("node volume converges at first order") {
  double prev = 0.0;
  for (int k = 5; k <= 7; ++k) {
    const double h = std::ldexp(1.0, -k);
    auto d = make_ball_domain(Point{}, 1.0, h, 2);
    const double err = std::abs(static_cast<double>(d->mask_nodes().size()) * h * h - std::numbers::pi);
    CHECK(err <= 8.0 * h);
    if (k > 5) CHECK(err <= prev + 1e-12);
    prev = err;
  }
}

TEST_CASE("sphere volumes") {
  CHECK(sphere_volume(2) == doctest::Approx(2.0 * std::numbers::pi));
  CHECK(sphere_volume(3) == doctest::Approx(4.0 * std::numbers::pi));
  CHECK(sphere_volume(4) == doctest::Approx(2.0 * std::numbers::pi * std::numbers::pi));
}

TEST_CASE("interpolation reproduces linear fields") {
  auto d = make_ball_domain(Point{}, 1.0, 1.0 / 32.0, 2);
  auto e = ScalarField::sample(d, [](const Point& p) { return 4.0 + 3.0 * p[0] - p[1]; });
  const Point p{0.1234, -0.3456};
  auto v = interpolate(e, p);
  REQUIRE(v.has_value());
  CHECK(*v == doctest::Approx(4.0 + 3.0 * p[0] - p[1]).epsilon(1e-13));
  CHECK_FALSE(interpolate(e, Point{0.999, 0.2}).has_value());
  double m = -1e300;
  for (std::size_t f : d->mask_nodes()) m = std::max(m, e[f]);
  CHECK(e.sup() == m);
  CHECK(e.sup() < 4.0 + std::sqrt(10.0));
}
