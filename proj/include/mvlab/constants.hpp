#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

namespace mvlab {

/// Constants of the hypotheses
///   Delta e <= A0 + A1 e + a e^{(n+2)/n}      (interior)
///   de/dnu  <= B0 + B1 e + b e^{(n+1)/n}      (flat boundary)
struct BoundParams {
  int n = 2;
  double A0 = 0.0;
  double A1 = 0.0;
  double a = 0.0;
  double B0 = 0.0;
  double B1 = 0.0;
  double b = 0.0;

  /// Throws InvalidArgument unless all constants are finite and >= 0 and n is 2, 3 or 4.
  void validate() const;
  nlohmann::json to_json() const;
};

enum class Provenance { Configured, Measured, Derived };
std::string_view to_string(Provenance p);

/// Positive root of a eps^2 + b eps = 1 / (2C).
double epsilon_ab(double a, double b, double C);
/// eps(a, b)^n / (2C), the energy quantum hbar.
double mu_ab(double a, double b, double C, int n);

/// C A0 r^2 + C (A1^{n/2} + r^{-n}) energy; requires 0 < r <= 1.
double interior_rhs(const BoundParams& params, double r, double energy, double C);
/// C A0 r^2 + C B0 r + C (A1^{n/2} + B1^n + r^{-n}) energy; requires r > 0.
double boundary_rhs(const BoundParams& params, double r, double energy, double C);

enum class Branch { ConcentrationForced, BoundConsistent };
std::string_view to_string(Branch b);

struct DichotomyResult {
  Branch branch = Branch::BoundConsistent;
  double lhs = 0.0;  // R^{n/2}
  double rhs = 0.0;
};

/// Compares R^{n/2} with
///   C A0 R^{-(n+2)/2} + C B0 R^{-(n+1)/2} + C hbar (A1^{n/2} R^{-n/2} + B1^n R^{-n/2} + 1).
/// Ties resolve to BoundConsistent.
DichotomyResult quantization_dichotomy(double R, const BoundParams& params, double hbar, double C);

struct Certificate {
  bool applicable = false;
  double bound = 0.0;  // lower bound on eps' r claimed when applicable
  bool holds = false;
};

struct EpsilonPrime {
  double value = 0.0;     // eps', possibly capped at eps
  double root = 0.0;      // uncapped t = eps' r solving A1 t^2 + B1 t = 2^{-n-1} / C
  bool capped = false;
  double residual = 0.0;  // |A1 t^2 + B1 t - 2^{-n-1}/C| at the uncapped root
  Certificate quadratic;  // B1 <= 2 sqrt(A1 / C'):  t >= (sqrt2 - 1) / sqrt(C' A1)
  Certificate linear;     // A1 <= C' B1^2 / 4:      t >= 2 (sqrt2 - 1) / (C' B1)
  double effective_C = 0.0;  // C' = 2^{n+1} C
};

EpsilonPrime epsilon_prime(const BoundParams& params, double r, double C, double eps);

/// The constants shared by every report, with where each one came from.
struct ConstantLedger {
  double C = 1.0;
  Provenance C_source = Provenance::Configured;
  double delta = 0.05;
  Provenance delta_source = Provenance::Configured;
  std::optional<double> eps_ab;
  std::optional<double> mu_ab;
  std::optional<double> hbar;
  std::optional<double> eps_prime;

  /// Fills eps_ab, mu_ab and hbar from (a, b) of the params; they stay empty when a = b = 0.
  static ConstantLedger derive(const BoundParams& params, double C, Provenance C_source,
                               double delta = 0.05, Provenance delta_source = Provenance::Configured);

  /// Flat "key = value (provenance)" lines.
  std::string to_text() const;
  nlohmann::json to_json() const;
};

}  // namespace mvlab
