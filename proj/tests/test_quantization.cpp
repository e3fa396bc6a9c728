#include <doctest.h>

#include <cmath>
#include <numbers>

#include "mvlab/calculus.hpp"
#include "mvlab/error.hpp"
#include "mvlab/quantization.hpp"
#include "mvlab/synth.hpp"

using namespace mvlab;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kC = 1.0 / kPi;

GeneratorSpec bubble_at(Point c, GeneratorKind k = GeneratorKind::Bubble) {
  GeneratorSpec b;
  b.kind = k;
  b.center = c;
  return b;
}

GeneratorSpec zero() {
  GeneratorSpec z;
  z.amplitude = 0.0;
  return z;
}

ConstantLedger ledger_for(const BoundParams& p) { return ConstantLedger::derive(p, kC, Provenance::Configured); }

DetectorSettings settings_for(const Domain& d) {
  DetectorSettings s;
  s.tolerance = 10.0 * d.spacing();
  return s;
}

const std::vector<double> kSchedule{0.125, 0.0625, 0.03125, 0.015625};

}  // namespace

TEST_CASE("concentration energy of a bubble") {
  auto d = make_ball_domain(Point{}, 1.0, 1.0 / 256.0, 2);
  auto z = ScalarField::sample(d, [](const Point&) { return 0.0; });
  CHECK(concentration_energy(z, Point{}, 0.3) == 0.0);
  GeneratorSpec b = bubble_at(Point{0.1, -0.1});
  b.lambda = 0.05;
  auto e = gen(b, d);
  const double m = kPi;
  // pi rho^2 / (1 + rho^2) with rho = delta / lambda
  const double wide = concentration_energy(e, b.center, 0.5);
  CHECK(wide >= 0.9 * m);
  CHECK(wide == doctest::Approx(m * 100.0 / 101.0).epsilon(0.01));
  const double narrow = concentration_energy(e, b.center, 0.005);
  CHECK(narrow < 0.2 * m);
  CHECK(narrow == doctest::Approx(m * 0.01 / 1.01).epsilon(0.05));
}

TEST_CASE("bounded sequence has no concentration") {
  auto d = make_ball_domain(Point{}, 1.0, 1.0 / 64.0, 2);
  DensitySequence seq;
  for (int i = 0; i < 4; ++i) seq.fields.push_back(ScalarField::sample(d, [](const Point&) { return 2.0; }));
  seq.energy_bound = 2.0 * kPi;
  seq.params.a = 1.0;
  seq.validate(10.0 * d->spacing());
  const ConcentrationReport r = detect_concentration(seq, ledger_for(seq.params), settings_for(*d));
  CHECK(r.count == 0);
  CHECK(r.candidates.empty());
  CHECK(r.status == DetectionStatus::Completed);
  REQUIRE(r.residual_bound.size() == 4);
  for (double v : r.residual_bound) CHECK(v == 2.0);
}

TEST_CASE("single planted bubble") {
  auto d = make_ball_domain(Point{}, 1.0, 1.0 / 256.0, 2);
  const GeneratorSpec b[] = {bubble_at(Point{0.1, -0.2})};
  DensitySequence seq = gen_sequence(b, kSchedule, zero(), d, BoundParams{});
  const ConstantLedger l = ledger_for(seq.params);
  REQUIRE(l.hbar.has_value());
  CHECK(*l.hbar < kPi);
  const ConcentrationReport r = detect_concentration(seq, l, settings_for(*d));
  REQUIRE(r.count == 1);
  const Candidate& c = r.candidates[r.points[0]];
  CHECK(c.outcome == CandidateOutcome::Extracted);
  CHECK(distance(c.x, b[0].center, 2) <= 2.0 * d->spacing());
  REQUIRE(c.onset.has_value());
  for (const WitnessStep& w : c.witnesses) {
    if (w.index < *c.onset) continue;
    CHECK(w.branch == Branch::ConcentrationForced);
    CHECK(w.energy > *l.hbar);
  }
  // certified energy against the analytic radial mass at the last scale
  const WitnessStep& last = c.witnesses.back();
  CHECK(c.certified_energy == doctest::Approx(bubble_radial_mass(2, kSchedule.back(), last.delta)).epsilon(0.02));
  CHECK(c.certified_energy > 0.95 * kPi);
  CHECK(r.count * r.hbar <= r.energy_bound + 10.0 * d->spacing());
}

TEST_CASE("witness scale covariance") {
  auto d = make_ball_domain(Point{}, 1.0, 1.0 / 256.0, 2);
  const GeneratorSpec b[] = {bubble_at(Point{})};
  DensitySequence seq = gen_sequence(b, kSchedule, zero(), d, BoundParams{});
  DetectorSettings s = settings_for(*d);
  s.divergence_threshold = 10.0;
  const ConcentrationReport r = detect_concentration(seq, ledger_for(seq.params), s);
  REQUIRE(r.count == 1);
  const Candidate& c = r.candidates[r.points[0]];
  REQUIRE(c.witnesses.size() >= 3);
  for (const WitnessStep& w : c.witnesses) {
    const double lambda = kSchedule[w.index];
    CHECK(w.R * lambda == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(w.delta / std::sqrt(lambda) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("three planted bubbles") {
  auto d = make_ball_domain(Point{}, 1.0, 1.0 / 256.0, 2);
  std::vector<GeneratorSpec> three;
  for (int k = 0; k < 3; ++k) {
    const double t = 2.0 * kPi * k / 3.0;
    three.push_back(bubble_at(Point{0.5 * std::cos(t), 0.5 * std::sin(t)}));
  }
  DensitySequence seq = gen_sequence(three, kSchedule, zero(), d, BoundParams{});
  const ConstantLedger l = ledger_for(seq.params);
  const double tol = 10.0 * d->spacing();
  const ConcentrationReport r = detect_concentration(seq, l, settings_for(*d));
  CHECK(r.status == DetectionStatus::Completed);
  REQUIRE(r.count == 3);
  CHECK(r.count <= r.budget);
  CHECK(r.budget == static_cast<std::size_t>(std::floor(seq.energy_bound / *l.hbar)));
  for (const GeneratorSpec& b : three) {
    double best = 1e9;
    for (std::size_t k : r.points) best = std::min(best, distance(r.candidates[k].x, b.center, 2));
    CHECK(best <= 2.0 * d->spacing());
  }
  double certified = 0.0;
  for (std::size_t i = 0; i < r.points.size(); ++i) {
    const Candidate& a = r.candidates[r.points[i]];
    certified += a.certified_energy;
    for (std::size_t j = 0; j < i; ++j) {
      const Candidate& b = r.candidates[r.points[j]];
      CHECK(distance(a.x, b.x, 2) > 2.0 * std::max(a.exclusion_radius, b.exclusion_radius));
    }
  }
  CHECK(certified <= r.energy_bound + tol);
  // off the extracted balls the fields stay small
  for (double v : r.residual_bound) CHECK(v < 100.0);
  CHECK(r.surviving_subsequence.size() >= 1);

  // identical inputs, identical report
  const ConcentrationReport again = detect_concentration(seq, l, settings_for(*d));
  CHECK(again.to_json(2) == r.to_json(2));
  CHECK(again.witness_csv(2) == r.witness_csv(2));
}

TEST_CASE("raising hbar above the bubble mass leaves everything bounded") {
  auto d = make_ball_domain(Point{}, 1.0, 1.0 / 256.0, 2);
  std::vector<GeneratorSpec> three;
  for (int k = 0; k < 3; ++k) {
    const double t = 2.0 * kPi * k / 3.0;
    three.push_back(bubble_at(Point{0.5 * std::cos(t), 0.5 * std::sin(t)}));
  }
  DensitySequence seq = gen_sequence(three, kSchedule, zero(), d, BoundParams{});
  seq.params.a = 0.001;
  const ConstantLedger l = ledger_for(seq.params);
  CHECK(*l.hbar > kPi);
  const ConcentrationReport r = detect_concentration(seq, l, settings_for(*d));
  CHECK(r.count == 0);
  CHECK(r.status == DetectionStatus::Completed);
  CHECK(r.candidates.size() == 3);
  for (const Candidate& c : r.candidates) CHECK(c.outcome == CandidateOutcome::BoundedAfterAll);
}

TEST_CASE("forced concentration without the energy is a quantization violation") {
  auto d = make_ball_domain(Point{}, 1.0, 1.0 / 256.0, 2);
  const GeneratorSpec b[] = {bubble_at(Point{})};
  DensitySequence seq = gen_sequence(b, kSchedule, zero(), d, BoundParams{});
  // hbar = pi^2 / (4 a) = 5 > pi, while R > C hbar already forces concentration
  seq.params.a = kPi * kPi / 20.0;
  const ConstantLedger l = ledger_for(seq.params);
  CHECK(*l.hbar == doctest::Approx(5.0));
  const ConcentrationReport r = detect_concentration(seq, l, settings_for(*d));
  CHECK(r.status == DetectionStatus::QuantizationViolated);
  REQUIRE_FALSE(r.candidates.empty());
  CHECK(r.candidates[0].outcome == CandidateOutcome::QuantizationViolated);
  CHECK(r.count == 0);
}

TEST_CASE("boundary concentration point on a half ball") {
  auto d = make_half_ball_domain(Point{}, 1.0, 1.0 / 256.0, 2);
  const GeneratorSpec b[] = {bubble_at(Point{0.0, 0.2}, GeneratorKind::ReflectedBubble)};
  DensitySequence seq = gen_sequence(b, kSchedule, zero(), d, BoundParams{});
  const ConcentrationReport r = detect_concentration(seq, ledger_for(seq.params), settings_for(*d));
  REQUIRE(r.count == 1);
  CHECK(distance(r.candidates[r.points[0]].x, b[0].center, 2) <= 2.0 * d->spacing());
}

TEST_CASE("sequence validation") {
  auto d1 = make_ball_domain(Point{}, 1.0, 1.0 / 32.0, 2);
  auto d2 = make_ball_domain(Point{}, 1.0, 1.0 / 64.0, 2);
  DensitySequence seq;
  seq.fields.push_back(ScalarField::sample(d1, [](const Point&) { return 1.0; }));
  seq.fields.push_back(ScalarField::sample(d2, [](const Point&) { return 1.0; }));
  seq.energy_bound = 10.0;
  try {
    seq.validate(0.0);
    FAIL("expected InconsistentSequence");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InconsistentSequence);
  }
  DensitySequence over;
  over.fields.push_back(ScalarField::sample(d1, [](const Point&) { return 1.0; }));
  over.energy_bound = 1.0;
  CHECK_THROWS_AS(over.validate(0.1), Error);
  over.energy_bound = kPi;
  over.validate(0.1);
  CHECK(over.energies.size() == 1);
}

TEST_CASE("randomized configurations respect the budget") {
  auto d = make_ball_domain(Point{}, 1.0, 1.0 / 128.0, 2);
  const std::vector<double> schedule{0.125, 0.0625, 0.03125};
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto bubbles = random_bubbles(seed, 1 + seed % 4, *d, 0.6, 0.3);
    DensitySequence seq = gen_sequence(bubbles, schedule, zero(), d, BoundParams{});
    const ConcentrationReport r = detect_concentration(seq, ledger_for(seq.params), settings_for(*d));
    CHECK(r.count <= r.budget);
    CHECK(r.count * r.hbar <= r.energy_bound + 10.0 * d->spacing());
  }
}
