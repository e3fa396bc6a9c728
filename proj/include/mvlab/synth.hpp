#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvlab/grid.hpp"
#include "mvlab/jet.hpp"
#include "mvlab/quantization.hpp"

namespace mvlab {

enum class GeneratorKind {
  Constant,         // offset + amplitude
  Quadratic,        // offset + amplitude |x - center|^2
  RadialPower,      // offset + amplitude |x - center|^power
  HarmonicProduct,  // offset + amplitude * form(k (x - center)_axis, k (x - center)_axis2)
  PoissonPeak,      // offset + amplitude (rho^2 - |x - center|^2) / (rho |x - center - pole|^n), |pole| = rho
  Exponential,      // offset + amplitude exp(k (x - center)_axis)
  Bubble,           // offset + amplitude lambda^{-n} (1 + |x - center|^2 / lambda^2)^{-n}
  ReflectedBubble,  // Bubble plus its mirror image in x0 = 0 (the bubble itself when center0 = 0)
  LinearX0,         // offset + amplitude x0 (absolute coordinate, centre ignored)
  Sum,              // sum of terms
};

enum class HarmonicForm { CosCosh, CoshCos, ExpCos };

std::string_view to_string(GeneratorKind k);
std::optional<GeneratorKind> generator_kind_from_string(std::string_view s);

struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::Constant;
  double amplitude = 1.0;
  double offset = 0.0;
  Point center{};
  Point pole{};  // PoissonPeak: offset of the pole from the centre
  double lambda = 0.25;
  double frequency = 1.0;
  double power = 4.0;
  int axis = 0;
  int axis2 = 1;
  HarmonicForm form = HarmonicForm::CosCosh;
  std::vector<GeneratorSpec> terms;

  template <class T>
  T eval(const std::array<T, kMaxDim>& x, int n) const;

  nlohmann::json to_json() const;
  static GeneratorSpec from_json(const nlohmann::json& j);
};

double generator_value(const GeneratorSpec& spec, const Point& x, int n);
/// Positive-definite Laplacian, exact through jets.
double generator_laplacian(const GeneratorSpec& spec, const Point& x, int n);
/// Outer normal derivative -d/dx0.
double generator_normal_derivative(const GeneratorSpec& spec, const Point& x, int n);

/// Analytic claims that the measurements can be checked against.
struct GeneratorFacts {
  bool harmonic = false;
  bool subharmonic = false;
  std::optional<double> laplacian;  // Delta e when it is a known constant
  bool even_in_x0 = false;          // de/dnu = 0 on x0 = 0 by reflection symmetry
  std::optional<double> mass;       // integral over R^n
  std::vector<std::string> claims;
};
GeneratorFacts generator_facts(const GeneratorSpec& spec, int n);

/// Samples the generator on the domain; throws SpecOutOfDomain when a value is
/// negative or not finite there.
ScalarField gen(const GeneratorSpec& spec, std::shared_ptr<const Domain> domain);

/// Integral over R^n of the unit-amplitude bubble: Vol S^{n-1} B(n/2, n/2) / 2.
double bubble_mass(int n);
/// Integral of the unit-amplitude bubble over a ball of radius delta about its centre.
double bubble_radial_mass(int n, double lambda, double delta);

/// e_i = background + sum of the planted bubbles at scale schedule[i].
/// The schedule must decrease strictly with schedule.back() >= 4h. The energy
/// bound is the largest energy; a (and b on half balls) are fitted per index
/// with the given A0, A1, B0, B1 and their maxima are stored in params.
DensitySequence gen_sequence(std::span<const GeneratorSpec> bubbles, std::span<const double> schedule,
                             const GeneratorSpec& background, std::shared_ptr<const Domain> domain,
                             const BoundParams& linear_terms);

/// Seeded placement of `count` unit bubbles at mutually separated points inside
/// the ball of radius `spread` about the domain centre.
std::vector<GeneratorSpec> random_bubbles(std::uint64_t seed, std::size_t count, const Domain& domain,
                                          double spread, double separation);

/// The families are laid out for a ball centred at the origin, or a half ball
/// whose centre lies on the x0 axis; r scales every member.
/// Subharmonic members for Morrey checks on a ball of radius r (12 members).
std::vector<GeneratorSpec> interior_family(double r, int n);
/// Neumann-subharmonic members for a half ball (8 members).
std::vector<GeneratorSpec> boundary_family(double r, int n);
/// Harmonic members used to measure C (value at the centre equals the mean).
std::vector<GeneratorSpec> interior_calibration_family(double r, int n);
std::vector<GeneratorSpec> boundary_calibration_family(double r, int n);

// ---------------------------------------------------------------------------

template <class T>
T GeneratorSpec::eval(const std::array<T, kMaxDim>& x, int n) const {
  using std::cos;
  using std::cosh;
  using std::exp;
  using std::pow;
  auto dist2 = [&](const Point& c) {
    T s = T(0.0);
    for (int k = 0; k < n; ++k) {
      const T u = x[k] - T(c[k]);
      s += u * u;
    }
    return s;
  };
  auto bubble = [&](const Point& c) {
    const double ln = std::pow(lambda, -n);
    return T(ln) * pow(T(1.0) + dist2(c) * T(1.0 / (lambda * lambda)), -static_cast<double>(n));
  };
  T profile = T(0.0);
  switch (kind) {
    case GeneratorKind::Constant:
      profile = T(1.0);
      break;
    case GeneratorKind::Quadratic:
      profile = dist2(center);
      break;
    case GeneratorKind::RadialPower:
      profile = pow(dist2(center), 0.5 * power);
      break;
    case GeneratorKind::HarmonicProduct: {
      const T u = T(frequency) * (x[axis] - T(center[axis]));
      const T v = T(frequency) * (x[axis2] - T(center[axis2]));
      switch (form) {
        case HarmonicForm::CosCosh: profile = cos(u) * cosh(v); break;
        case HarmonicForm::CoshCos: profile = cosh(u) * cos(v); break;
        case HarmonicForm::ExpCos: profile = exp(u) * cos(v); break;
      }
      break;
    }
    case GeneratorKind::PoissonPeak: {
      double rho2 = 0.0;
      Point p = center;
      for (int k = 0; k < n; ++k) {
        rho2 += pole[k] * pole[k];
        p[k] += pole[k];
      }
      const double rho = std::sqrt(rho2);
      profile = (T(rho2) - dist2(center)) / (T(rho) * pow(dist2(p), 0.5 * n));
      break;
    }
    case GeneratorKind::Exponential:
      profile = exp(T(frequency) * (x[axis] - T(center[axis])));
      break;
    case GeneratorKind::Bubble:
      profile = bubble(center);
      break;
    case GeneratorKind::ReflectedBubble: {
      profile = bubble(center);
      if (center[0] != 0.0) {
        Point mirror = center;
        mirror[0] = -center[0];
        profile += bubble(mirror);
      }
      break;
    }
    case GeneratorKind::LinearX0:
      profile = x[0];
      break;
    case GeneratorKind::Sum:
      for (const GeneratorSpec& t : terms) profile += t.eval<T>(x, n);
      break;
  }
  return T(offset) + T(amplitude) * profile;
}

}  // namespace mvlab
