#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvlab/calculus.hpp"
#include "mvlab/constants.hpp"
#include "mvlab/grid.hpp"

namespace mvlab {

/// Grid parameters embedded in every report.
nlohmann::json grid_json(const Domain& domain);

enum class Verdict { Holds, Fails, HypothesisViolated };
std::string_view to_string(Verdict v);

enum class HypothesisKind { InteriorBound, BoundaryBound, EnergyAboveThreshold, MetricDeviation };
std::string_view to_string(HypothesisKind k);

struct HypothesisFailure {
  HypothesisKind kind = HypothesisKind::InteriorBound;
  std::optional<std::size_t> node;
  Point position{};
  double value = 0.0;  // measured quantity (Delta e, de/dnu, energy or deviation)
  double limit = 0.0;  // what the hypothesis allows, tolerance included
};

struct VerificationReport {
  std::string claim;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;  // rhs - lhs
  double tolerance = 0.0;
  Verdict verdict = Verdict::Holds;
  std::optional<HypothesisFailure> failure;
  double energy = 0.0;
  std::optional<double> energy_threshold;
  double ratio = 0.0;  // e(center) r^n / energy, the C this instance needs
  std::optional<double> a_required;
  std::optional<double> b_required;
  std::optional<double> metric_deviation;
  std::string branch;  // dominant term of the right hand side
  BoundParams params;
  ConstantLedger ledger;
  nlohmann::json grid;

  nlohmann::json to_json() const;
};

struct NonlinearityFit {
  double required = 0.0;  // a (interior) or b (boundary), clamped below at 0
  std::optional<std::size_t> node;
  std::size_t evaluated_nodes = 0;
};

/// Smallest a with Delta e <= A0 + A1 e + a e^{(n+2)/n} at every stencil-valid
/// node where e exceeds floor_factor * sup e.
NonlinearityFit fit_nonlinearity(const ScalarField& e, double A0, double A1,
                                 double floor_factor = 1e-8);
/// Smallest b with de/dnu <= B0 + B1 e + b e^{(n+1)/n} on the flat boundary.
NonlinearityFit fit_boundary_nonlinearity(const ScalarField& e, double B0, double B1,
                                          double floor_factor = 1e-8);

/// First node where the differential hypotheses of params fail by more than tol
/// (interior bound on stencil-valid nodes, boundary bound on the flat boundary).
std::optional<HypothesisFailure> check_hypotheses(const ScalarField& e, const BoundParams& params,
                                                  double tol);

/// e(center) <= C r^{-n} integral of e, after checking Delta e <= tol (and
/// de/dnu <= tol on a half ball).
VerificationReport verify_morrey(const ScalarField& e, const ConstantLedger& ledger, double tol);
VerificationReport verify_interior_mvi(const ScalarField& e, const BoundParams& params,
                                       const ConstantLedger& ledger, double tol);
VerificationReport verify_boundary_mvi(const ScalarField& e, const BoundParams& params,
                                       const ConstantLedger& ledger, double tol);

/// 2^{n+1} n Vol S^{n-2} / Vol S^{n-1} times pi/2 (n = 2) or 1 (n >= 3).
double large_radius_constant(int n);

struct TIntegral {
  double value = 0.0;  // quadrature of int_1^T t^{-2} (1 - t^{-2})^{(n-3)/2} dt
  double exact = 0.0;
  double bound = 0.0;  // pi/2 for n = 2, 1 for n >= 3
};
/// Evaluates the t-integral for T = r / y0 > 1 by Gauss-Legendre after t = 1 + u^2.
TIntegral t_integral_quadrature(int n, double T);

struct LargeRadiusCheck {
  double r = 0.0;
  double lhs = 0.0;  // Vol S^{n-1} e(y)
  double rhs = 0.0;  // M(r) + C_n R^{-n} integral over D_R(y)
  bool holds = false;
};

struct MonotonicityReport {
  std::vector<ShellSample> profile;
  double y0 = 0.0;
  double tolerance = 0.0;
  std::optional<HypothesisFailure> failure;

  bool monotone_applicable = false;
  double min_increment = 0.0;
  bool monotone = true;

  bool limit_applicable = false;
  double limit_expected = 0.0;
  double limit_measured = 0.0;
  double limit_relative_error = 0.0;
  bool limit_ok = true;

  double C_n = 0.0;
  double outer_radius = 0.0;
  double outer_energy = 0.0;
  std::vector<LargeRadiusCheck> large_radius;
  bool large_radius_ok = true;

  bool passes() const { return !failure && monotone && limit_ok && large_radius_ok; }
  nlohmann::json to_json() const;
};

/// Shell-average checks about the centre y of a half-ball domain D_R(y):
/// M(r) nondecreasing (all r when y0 = 0, r <= y0 otherwise), the small-radius
/// limit, and for 0 < y0 < r <= R/2 the large-radius inequality.
MonotonicityReport monotonicity_suite(const ScalarField& e, std::span<const double> radii,
                                      double tol, double limit_tolerance = 0.02);

enum class FamilyKind { Interior, Boundary };

struct ConstantEstimate {
  double C = 0.0;
  std::size_t argmax = 0;
  std::vector<double> ratios;
};

/// Maximum over the family of e(center) r^n / integral of e.
ConstantEstimate estimate_constant(std::span<const ScalarField> family, FamilyKind kind, double tol);

}  // namespace mvlab
