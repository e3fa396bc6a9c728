#include "mvlab/constants.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

#include "mvlab/error.hpp"

namespace mvlab {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::InvalidArgument, what);
}

bool nonneg(double x) { return std::isfinite(x) && x >= 0.0; }

double ipow(double x, int p) {
  double r = 1.0;
  for (int i = 0; i < p; ++i) r *= x;
  return r;
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

void BoundParams::validate() const {
  require(n >= 2 && n <= 4, "dimension must be 2, 3 or 4");
  require(nonneg(A0) && nonneg(A1) && nonneg(a) && nonneg(B0) && nonneg(B1) && nonneg(b),
          "bound constants must be finite and nonnegative");
}

nlohmann::json BoundParams::to_json() const {
  return {{"n", n}, {"A0", A0}, {"A1", A1}, {"a", a}, {"B0", B0}, {"B1", B1}, {"b", b}};
}

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::Configured: return "configured";
    case Provenance::Measured: return "measured";
    case Provenance::Derived: return "derived";
  }
  return "unknown";
}

std::string_view to_string(Branch b) {
  return b == Branch::ConcentrationForced ? "ConcentrationForced" : "BoundConsistent";
}

double epsilon_ab(double a, double b, double C) {
  require(nonneg(a) && nonneg(b), "a and b must be nonnegative");
  require(std::isfinite(C) && C > 0.0, "C must be positive");
  if (a == 0.0 && b == 0.0)
    throw Error(ErrorCode::BothNonlinearitiesZero, "eps(a, b) is undefined for a = b = 0");
  if (a == 0.0) return 1.0 / (2.0 * b * C);
  // Rationalised root, free of cancellation when b^2 >> a / C.
  return (1.0 / C) / (b + std::sqrt(b * b + 2.0 * a / C));
}

double mu_ab(double a, double b, double C, int n) {
  require(n >= 2 && n <= 4, "dimension must be 2, 3 or 4");
  return ipow(epsilon_ab(a, b, C), n) / (2.0 * C);
}

double interior_rhs(const BoundParams& params, double r, double energy, double C) {
  params.validate();
  require(r > 0.0, "radius must be positive");
  require(nonneg(energy), "energy must be nonnegative");
  if (r > 1.0) throw Error(ErrorCode::RadiusOutOfRange, "interior mean value inequality needs r <= 1");
  const int n = params.n;
  return C * params.A0 * r * r + C * (std::pow(params.A1, 0.5 * n) + std::pow(r, -n)) * energy;
}

double boundary_rhs(const BoundParams& params, double r, double energy, double C) {
  params.validate();
  require(r > 0.0, "radius must be positive");
  require(nonneg(energy), "energy must be nonnegative");
  const int n = params.n;
  return C * params.A0 * r * r + C * params.B0 * r +
         C * (std::pow(params.A1, 0.5 * n) + ipow(params.B1, n) + std::pow(r, -n)) * energy;
}

DichotomyResult quantization_dichotomy(double R, const BoundParams& params, double hbar, double C) {
  params.validate();
  require(R > 0.0 && std::isfinite(R), "R must be positive");
  const int n = params.n;
  DichotomyResult out;
  out.lhs = std::pow(R, 0.5 * n);
  const double rn2 = std::pow(R, -0.5 * n);
  out.rhs = C * params.A0 * std::pow(R, -0.5 * (n + 2)) + C * params.B0 * std::pow(R, -0.5 * (n + 1)) +
            C * hbar * (std::pow(params.A1, 0.5 * n) * rn2 + ipow(params.B1, n) * rn2 + 1.0);
  out.branch = out.lhs > out.rhs ? Branch::ConcentrationForced : Branch::BoundConsistent;
  return out;
}

EpsilonPrime epsilon_prime(const BoundParams& params, double r, double C, double eps) {
  params.validate();
  require(r > 0.0, "radius must be positive");
  require(C > 0.0, "C must be positive");
  require(eps > 0.0 && eps <= 0.5, "eps must lie in (0, 1/2]");
  const double A1 = params.A1, B1 = params.B1;
  if (A1 == 0.0 && B1 == 0.0)
    throw Error(ErrorCode::BothLinearTermsZero, "eps' is undefined for A1 = B1 = 0");

  const int n = params.n;
  const double target = 1.0 / (ipow(2.0, n + 1) * C);
  EpsilonPrime out;
  out.effective_C = ipow(2.0, n + 1) * C;
  // A1 t^2 + B1 t = target, same rationalised form as eps(a, b)
  out.root = A1 == 0.0 ? target / B1 : 2.0 * target / (B1 + std::sqrt(B1 * B1 + 4.0 * A1 * target));
  out.residual = std::abs(A1 * out.root * out.root + B1 * out.root - target);
  out.capped = out.root / r >= eps;
  out.value = out.capped ? eps : out.root / r;

  const double Cp = out.effective_C;
  const double s2m1 = std::numbers::sqrt2 - 1.0;
  out.quadratic.applicable = A1 > 0.0 && B1 <= 2.0 * std::sqrt(A1 / Cp);
  if (out.quadratic.applicable) {
    out.quadratic.bound = s2m1 / std::sqrt(Cp * A1);
    out.quadratic.holds = out.root >= out.quadratic.bound * (1.0 - 1e-14);
  }
  out.linear.applicable = B1 > 0.0 && A1 <= 0.25 * Cp * B1 * B1;
  if (out.linear.applicable) {
    out.linear.bound = 2.0 * s2m1 / (Cp * B1);
    out.linear.holds = out.root >= out.linear.bound * (1.0 - 1e-14);
  }
  return out;
}

ConstantLedger ConstantLedger::derive(const BoundParams& params, double C, Provenance C_source,
                                      double delta, Provenance delta_source) {
  params.validate();
  require(std::isfinite(C) && C > 0.0, "C must be positive");
  require(nonneg(delta), "delta must be nonnegative");
  ConstantLedger ledger;
  ledger.C = C;
  ledger.C_source = C_source;
  ledger.delta = delta;
  ledger.delta_source = delta_source;
  if (params.a > 0.0 || params.b > 0.0) {
    ledger.eps_ab = mvlab::epsilon_ab(params.a, params.b, C);
    ledger.mu_ab = mvlab::mu_ab(params.a, params.b, C, params.n);
    ledger.hbar = ledger.mu_ab;
  }
  return ledger;
}

std::string ConstantLedger::to_text() const {
  std::string s;
  auto line = [&](const char* key, std::optional<double> v, Provenance p) {
    s += key;
    s += " = ";
    s += v ? fmt(*v) : std::string("undefined");
    s += " (";
    s += to_string(p);
    s += ")\n";
  };
  line("C", C, C_source);
  line("delta", delta, delta_source);
  line("eps_ab", eps_ab, Provenance::Derived);
  line("mu_ab", mu_ab, Provenance::Derived);
  line("hbar", hbar, Provenance::Derived);
  if (eps_prime) line("eps_prime", eps_prime, Provenance::Derived);
  return s;
}

nlohmann::json ConstantLedger::to_json() const {
  auto entry = [](std::optional<double> v, Provenance p) {
    nlohmann::json j;
    j["value"] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
    j["provenance"] = std::string(to_string(p));
    return j;
  };
  nlohmann::json j;
  j["C"] = entry(C, C_source);
  j["delta"] = entry(delta, delta_source);
  j["eps_ab"] = entry(eps_ab, Provenance::Derived);
  j["mu_ab"] = entry(mu_ab, Provenance::Derived);
  j["hbar"] = entry(hbar, Provenance::Derived);
  if (eps_prime) j["eps_prime"] = entry(eps_prime, Provenance::Derived);
  return j;
}

}  // namespace mvlab
