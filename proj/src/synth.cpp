#include "mvlab/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "mvlab/calculus.hpp"
#include "mvlab/error.hpp"
#include "mvlab/verify.hpp"

namespace mvlab {

namespace {

constexpr std::pair<GeneratorKind, std::string_view> kKindNames[] = {
    {GeneratorKind::Constant, "constant"},
    {GeneratorKind::Quadratic, "quadratic"},
    {GeneratorKind::RadialPower, "radial_power"},
    {GeneratorKind::HarmonicProduct, "harmonic_product"},
    {GeneratorKind::PoissonPeak, "poisson_peak"},
    {GeneratorKind::Exponential, "exponential"},
    {GeneratorKind::Bubble, "bubble"},
    {GeneratorKind::ReflectedBubble, "reflected_bubble"},
    {GeneratorKind::LinearX0, "linear_x0"},
    {GeneratorKind::Sum, "sum"},
};

constexpr std::pair<HarmonicForm, std::string_view> kFormNames[] = {
    {HarmonicForm::CosCosh, "cos_cosh"},
    {HarmonicForm::CoshCos, "cosh_cos"},
    {HarmonicForm::ExpCos, "exp_cos"},
};

nlohmann::json point_json(const Point& p) {
  nlohmann::json j = nlohmann::json::array();
  for (double x : p) j.push_back(x);
  return j;
}

Point point_from(const nlohmann::json& j, const char* key) {
  Point p{};
  if (!j.is_array() || j.size() > static_cast<std::size_t>(kMaxDim))
    throw Error(ErrorCode::ConfigError, std::string(key) + ": expected an array of at most 4 numbers");
  for (std::size_t i = 0; i < j.size(); ++i) p[i] = j[i].get<double>();
  return p;
}

std::array<Jet, kMaxDim> seeded(const Point& x, int axis) {
  std::array<Jet, kMaxDim> a{};
  for (int k = 0; k < kMaxDim; ++k) a[k] = Jet(x[k]);
  a[axis] = Jet::variable(x[axis]);
  return a;
}

GeneratorSpec make(GeneratorKind kind, double amplitude = 1.0, double offset = 0.0) {
  GeneratorSpec s;
  s.kind = kind;
  s.amplitude = amplitude;
  s.offset = offset;
  return s;
}

GeneratorSpec harmonic(HarmonicForm form, double k, int axis, int axis2, const Point& c,
                       double amplitude = 1.0) {
  GeneratorSpec s = make(GeneratorKind::HarmonicProduct, amplitude);
  s.form = form;
  s.frequency = k;
  s.axis = axis;
  s.axis2 = axis2;
  s.center = c;
  return s;
}

GeneratorSpec sum(std::vector<GeneratorSpec> terms) {
  GeneratorSpec s = make(GeneratorKind::Sum);
  s.terms = std::move(terms);
  return s;
}

}  // namespace

std::string_view to_string(GeneratorKind k) {
  for (const auto& [kind, name] : kKindNames)
    if (kind == k) return name;
  return "unknown";
}

std::optional<GeneratorKind> generator_kind_from_string(std::string_view s) {
  for (const auto& [kind, name] : kKindNames)
    if (name == s) return kind;
  return std::nullopt;
}

nlohmann::json GeneratorSpec::to_json() const {
  nlohmann::json j;
  j["kind"] = std::string(to_string(kind));
  j["amplitude"] = amplitude;
  j["offset"] = offset;
  switch (kind) {
    case GeneratorKind::Quadratic:
    case GeneratorKind::RadialPower:
      j["center"] = point_json(center);
      if (kind == GeneratorKind::RadialPower) j["power"] = power;
      break;
    case GeneratorKind::HarmonicProduct:
      j["center"] = point_json(center);
      j["frequency"] = frequency;
      j["axis"] = axis;
      j["axis2"] = axis2;
      for (const auto& [f, name] : kFormNames)
        if (f == form) j["form"] = std::string(name);
      break;
    case GeneratorKind::PoissonPeak:
      j["center"] = point_json(center);
      j["pole"] = point_json(pole);
      break;
    case GeneratorKind::Exponential:
      j["center"] = point_json(center);
      j["frequency"] = frequency;
      j["axis"] = axis;
      break;
    case GeneratorKind::Bubble:
    case GeneratorKind::ReflectedBubble:
      j["center"] = point_json(center);
      j["lambda"] = lambda;
      break;
    case GeneratorKind::Sum: {
      nlohmann::json t = nlohmann::json::array();
      for (const GeneratorSpec& s : terms) t.push_back(s.to_json());
      j["terms"] = t;
      break;
    }
    default:
      break;
  }
  return j;
}

GeneratorSpec GeneratorSpec::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, "generator: expected an object");
  GeneratorSpec s;
  const std::string kind = j.value("kind", std::string());
  auto k = generator_kind_from_string(kind);
  if (!k) throw Error(ErrorCode::ConfigError, "generator.kind: unknown generator '" + kind + "'");
  s.kind = *k;
  try {
    s.amplitude = j.value("amplitude", 1.0);
    s.offset = j.value("offset", 0.0);
    if (j.contains("center")) s.center = point_from(j["center"], "generator.center");
    if (j.contains("pole")) s.pole = point_from(j["pole"], "generator.pole");
    s.lambda = j.value("lambda", s.lambda);
    s.frequency = j.value("frequency", s.frequency);
    s.power = j.value("power", s.power);
    s.axis = j.value("axis", s.axis);
    s.axis2 = j.value("axis2", s.axis2);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("generator: ") + e.what());
  }
  if (s.axis < 0 || s.axis >= kMaxDim || s.axis2 < 0 || s.axis2 >= kMaxDim)
    throw Error(ErrorCode::ConfigError, "generator.axis: out of range");
  if (j.contains("form")) {
    const std::string f = j["form"].get<std::string>();
    bool found = false;
    for (const auto& [form, name] : kFormNames) {
      if (name == f) {
        s.form = form;
        found = true;
      }
    }
    if (!found) throw Error(ErrorCode::ConfigError, "generator.form: unknown form '" + f + "'");
  }
  if (j.contains("terms")) {
    if (!j["terms"].is_array()) throw Error(ErrorCode::ConfigError, "generator.terms: expected an array");
    for (const auto& t : j["terms"]) s.terms.push_back(from_json(t));
  }
  return s;
}

double generator_value(const GeneratorSpec& spec, const Point& x, int n) {
  std::array<double, kMaxDim> a{};
  for (int k = 0; k < kMaxDim; ++k) a[k] = x[k];
  return spec.eval<double>(a, n);
}

double generator_laplacian(const GeneratorSpec& spec, const Point& x, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += spec.eval<Jet>(seeded(x, i), n).dd;
  return -s;
}

double generator_normal_derivative(const GeneratorSpec& spec, const Point& x, int n) {
  return -spec.eval<Jet>(seeded(x, 0), n).d;
}

double bubble_mass(int n) {
  if (n < 2 || n > 4) throw Error(ErrorCode::InvalidArgument, "dimension must be 2, 3 or 4");
  const double h = 0.5 * n;
  const double beta = std::tgamma(h) * std::tgamma(h) / std::tgamma(2.0 * h);
  return sphere_volume(n) * 0.5 * beta;
}

double bubble_radial_mass(int n, double lambda, double delta) {
  if (n < 2 || n > 4) throw Error(ErrorCode::InvalidArgument, "dimension must be 2, 3 or 4");
  if (!(lambda > 0.0) || !(delta >= 0.0)) throw Error(ErrorCode::InvalidArgument, "lambda, delta");
  // With u = s^2 / (1 + s^2) the radial integral is (1/2) int_0^U u^{n/2-1} (1-u)^{n/2-1} du.
  const double rho = delta / lambda;
  const double U = rho * rho / (1.0 + rho * rho);
  double half_beta = 0.0;
  switch (n) {
    case 2: half_beta = 0.5 * U; break;
    case 3: {
      const double t = std::asin(std::sqrt(U));
      half_beta = 0.5 * (0.25 * t - std::sin(4.0 * t) / 16.0);
      break;
    }
    default: half_beta = 0.5 * (0.5 * U * U - U * U * U / 3.0); break;
  }
  return sphere_volume(n) * half_beta;
}

GeneratorFacts generator_facts(const GeneratorSpec& spec, int n) {
  GeneratorFacts f;
  switch (spec.kind) {
    case GeneratorKind::Constant:
      f.harmonic = f.subharmonic = f.even_in_x0 = true;
      f.laplacian = 0.0;
      f.claims = {"Delta e = 0", "de/dnu = 0"};
      break;
    case GeneratorKind::Quadratic:
      f.subharmonic = spec.amplitude >= 0.0;
      f.laplacian = -2.0 * n * spec.amplitude;
      f.even_in_x0 = spec.center[0] == 0.0;
      f.claims = {"Delta e = -2n amplitude exactly"};
      if (f.even_in_x0) f.claims.push_back("de/dnu = 0 on x0 = 0");
      break;
    case GeneratorKind::RadialPower:
      f.subharmonic = spec.amplitude >= 0.0 && spec.power > 0.0;
      f.even_in_x0 = spec.center[0] == 0.0;
      f.claims = {"Delta e = -p (p + n - 2) amplitude |x - c|^{p-2}"};
      break;
    case GeneratorKind::HarmonicProduct:
      f.harmonic = f.subharmonic = true;
      f.laplacian = 0.0;
      if (spec.axis != 0 && spec.axis2 != 0)
        f.even_in_x0 = true;
      else if (spec.axis == 0 && spec.form == HarmonicForm::ExpCos)
        f.even_in_x0 = false;
      else
        f.even_in_x0 = spec.center[0] == 0.0;
      f.claims = {"Delta e = 0"};
      if (f.even_in_x0) f.claims.push_back("de/dnu = 0 on x0 = 0");
      break;
    case GeneratorKind::PoissonPeak:
      f.harmonic = f.subharmonic = true;
      f.laplacian = 0.0;
      f.claims = {"Delta e = 0 away from the pole"};
      break;
    case GeneratorKind::Exponential:
      f.subharmonic = spec.amplitude >= 0.0;
      f.claims = {"Delta e = -k^2 (e - offset)"};
      break;
    case GeneratorKind::Bubble:
    case GeneratorKind::ReflectedBubble: {
      const int copies = spec.kind == GeneratorKind::ReflectedBubble && spec.center[0] != 0.0 ? 2 : 1;
      f.mass = copies * spec.amplitude * bubble_mass(n);
      f.even_in_x0 = spec.center[0] == 0.0 || spec.kind == GeneratorKind::ReflectedBubble;
      f.claims = {"sup = amplitude lambda^{-n} at the centre", "mass independent of lambda",
                  "Delta e / e^{(n+2)/n} <= 2n^2 amplitude^{-2/n}"};
      if (f.even_in_x0) f.claims.push_back("de/dnu = 0 on x0 = 0 by reflection symmetry");
      break;
    }
    case GeneratorKind::LinearX0:
      f.harmonic = f.subharmonic = true;
      f.laplacian = 0.0;
      f.claims = {"Delta e = 0", "de/dnu = -amplitude"};
      break;
    case GeneratorKind::Sum: {
      f.harmonic = f.subharmonic = f.even_in_x0 = true;
      double lap = 0.0;
      bool constant_lap = true;
      double mass = 0.0;
      bool has_mass = true;
      for (const GeneratorSpec& t : spec.terms) {
        const GeneratorFacts tf = generator_facts(t, n);
        f.harmonic = f.harmonic && tf.harmonic;
        f.subharmonic = f.subharmonic && tf.subharmonic;
        f.even_in_x0 = f.even_in_x0 && tf.even_in_x0;
        if (tf.laplacian) lap += *tf.laplacian; else constant_lap = false;
        if (tf.mass) mass += *tf.mass; else has_mass = false;
      }
      if (constant_lap) f.laplacian = lap * spec.amplitude;
      if (has_mass && !spec.terms.empty()) f.mass = mass * spec.amplitude;
      f.claims = {"sum of terms"};
      break;
    }
  }
  return f;
}

ScalarField gen(const GeneratorSpec& spec, std::shared_ptr<const Domain> domain) {
  const int n = domain->dimension();
  std::vector<double> values(domain->box_size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t f : domain->mask_nodes()) {
    const double v = generator_value(spec, domain->position(f), n);
    if (!std::isfinite(v) || v < 0.0) {
      throw Error(ErrorCode::SpecOutOfDomain, std::string(to_string(spec.kind)) +
                                                  " generator is negative or singular on the domain");
    }
    values[f] = v;
  }
  return ScalarField(std::move(domain), std::move(values), true);
}

DensitySequence gen_sequence(std::span<const GeneratorSpec> bubbles, std::span<const double> schedule,
                             const GeneratorSpec& background, std::shared_ptr<const Domain> domain,
                             const BoundParams& linear_terms) {
  if (schedule.empty()) throw Error(ErrorCode::InvalidArgument, "empty schedule");
  for (std::size_t i = 1; i < schedule.size(); ++i)
    if (!(schedule[i] < schedule[i - 1]))
      throw Error(ErrorCode::InvalidArgument, "schedule must decrease strictly");
  if (schedule.back() < 4.0 * domain->spacing() * (1.0 - 1e-12))
    throw Error(ErrorCode::UnresolvableScale, "smallest scale is below 4h");

  DensitySequence seq;
  seq.params = linear_terms;
  seq.params.n = domain->dimension();
  seq.params.a = 0.0;
  seq.params.b = 0.0;
  const bool half = domain->kind() == DomainKind::HalfBall;
  double emax = 0.0;
  for (double lambda : schedule) {
    GeneratorSpec spec = sum({background});
    for (GeneratorSpec b : bubbles) {
      b.lambda = lambda;
      spec.terms.push_back(b);
    }
    ScalarField e = gen(spec, domain);
    double a = 0.0, b = 0.0;
    try {
      a = fit_nonlinearity(e, linear_terms.A0, linear_terms.A1).required;
    } catch (const Error& err) {
      if (err.code() != ErrorCode::AllNodesBelowFloor) throw;
    }
    if (half) {
      try {
        b = fit_boundary_nonlinearity(e, linear_terms.B0, linear_terms.B1).required;
      } catch (const Error& err) {
        if (err.code() != ErrorCode::AllNodesBelowFloor) throw;
      }
    }
    seq.a_fit.push_back(a);
    seq.b_fit.push_back(b);
    seq.params.a = std::max(seq.params.a, a);
    seq.params.b = std::max(seq.params.b, b);
    emax = std::max(emax, integrate(e));
    seq.scales.push_back(lambda);
    seq.fields.push_back(std::move(e));
  }
  seq.energy_bound = emax;
  seq.validate(0.0);
  return seq;
}

std::vector<GeneratorSpec> random_bubbles(std::uint64_t seed, std::size_t count, const Domain& domain,
                                          double spread, double separation) {
  const int n = domain.dimension();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<GeneratorSpec> out;
  std::size_t attempts = 0;
  while (out.size() < count) {
    if (++attempts > 100000)
      throw Error(ErrorCode::InvalidArgument, "cannot place the bubbles with the requested separation");
    Point p = domain.center();
    double s2 = 0.0;
    Point u{};
    for (int k = 0; k < n; ++k) {
      u[k] = unit(rng);
      s2 += u[k] * u[k];
    }
    if (s2 > 1.0) continue;
    for (int k = 0; k < n; ++k) p[k] += spread * u[k];
    if (domain.kind() == DomainKind::HalfBall && p[0] < 0.0) continue;
    bool ok = true;
    for (const GeneratorSpec& b : out)
      if (distance(b.center, p, n) < separation) ok = false;
    if (!ok) continue;
    GeneratorSpec b = make(domain.kind() == DomainKind::HalfBall ? GeneratorKind::ReflectedBubble
                                                                 : GeneratorKind::Bubble);
    b.center = p;
    out.push_back(b);
  }
  return out;
}

std::vector<GeneratorSpec> interior_family(double r, int n) {
  (void)n;
  const double k = 1.0 / r;
  const Point c{};
  std::vector<GeneratorSpec> f;
  f.push_back(make(GeneratorKind::Constant, 1.0));
  f.push_back(make(GeneratorKind::Quadratic, k * k));
  {
    GeneratorSpec q = make(GeneratorKind::Quadratic, k * k, 0.1);
    q.center = {0.3 * r, -0.2 * r};
    f.push_back(q);
  }
  f.push_back(harmonic(HarmonicForm::CosCosh, k, 0, 1, c));
  f.push_back(harmonic(HarmonicForm::ExpCos, k, 0, 1, c));
  {
    GeneratorSpec p = make(GeneratorKind::PoissonPeak, r);
    p.pole = {1.5 * r, 0.0};
    f.push_back(p);
  }
  {
    GeneratorSpec p = make(GeneratorKind::PoissonPeak, r);
    p.pole = {-1.2 * r, 1.6 * r};
    f.push_back(p);
  }
  f.push_back(sum({make(GeneratorKind::Quadratic, k * k), make(GeneratorKind::LinearX0, k, 1.0)}));
  {
    GeneratorSpec e = make(GeneratorKind::Exponential);
    e.frequency = k;
    f.push_back(e);
  }
  {
    GeneratorSpec e1 = make(GeneratorKind::Exponential);
    e1.frequency = 2.0 * k;
    e1.axis = 1;
    GeneratorSpec e2 = make(GeneratorKind::Exponential);
    e2.frequency = -k;
    f.push_back(sum({e1, e2}));
  }
  {
    GeneratorSpec p = make(GeneratorKind::RadialPower, k * k * k * k);
    p.power = 4.0;
    f.push_back(p);
  }
  f.push_back(sum({harmonic(HarmonicForm::CoshCos, k, 0, 1, c), make(GeneratorKind::Quadratic, 0.5 * k * k)}));
  return f;
}

std::vector<GeneratorSpec> boundary_family(double r, int n) {
  (void)n;
  const double k = 1.0 / r;
  const Point c{};
  std::vector<GeneratorSpec> f;
  f.push_back(make(GeneratorKind::Constant, 1.0));
  f.push_back(make(GeneratorKind::Quadratic, k * k));
  f.push_back(make(GeneratorKind::LinearX0, k));
  f.push_back(harmonic(HarmonicForm::CoshCos, k, 0, 1, c));
  f.push_back(make(GeneratorKind::Quadratic, 0.5 * k * k, 1.0));
  f.push_back(harmonic(HarmonicForm::ExpCos, k, 0, 1, c));
  {
    GeneratorSpec q = make(GeneratorKind::Quadratic, k * k);
    q.center = {-r, 0.3 * r};
    f.push_back(q);
  }
  f.push_back(harmonic(HarmonicForm::CosCosh, k, 0, 1, c));
  return f;
}

std::vector<GeneratorSpec> interior_calibration_family(double r, int n) {
  (void)n;
  const double k = 1.0 / r;
  const Point c{};
  std::vector<GeneratorSpec> f;
  f.push_back(make(GeneratorKind::Constant, 1.0));
  f.push_back(harmonic(HarmonicForm::CosCosh, k, 0, 1, c));
  f.push_back(harmonic(HarmonicForm::ExpCos, k, 1, 0, c));
  for (double dist : {1.5, 2.0}) {
    GeneratorSpec p = make(GeneratorKind::PoissonPeak, r);
    p.pole = {0.6 * dist * r, 0.8 * dist * r};
    f.push_back(p);
  }
  return f;
}

std::vector<GeneratorSpec> boundary_calibration_family(double r, int n) {
  (void)n;
  const double k = 1.0 / r;
  const Point c{};
  std::vector<GeneratorSpec> f;
  f.push_back(make(GeneratorKind::Constant, 1.0));
  f.push_back(harmonic(HarmonicForm::CoshCos, k, 0, 1, c));
  f.push_back(harmonic(HarmonicForm::CosCosh, k, 0, 1, c));
  f.push_back(harmonic(HarmonicForm::CoshCos, 0.5 * k, 0, 1, c, 2.0));
  return f;
}

}  // namespace mvlab
