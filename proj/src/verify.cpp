#include "mvlab/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "mvlab/error.hpp"

namespace mvlab {

namespace {

double ipow(double x, int p) {
  double r = 1.0;
  for (int i = 0; i < p; ++i) r *= x;
  return r;
}

nlohmann::json point_json(const Point& p, int n) {
  nlohmann::json j = nlohmann::json::array();
  for (int i = 0; i < n; ++i) j.push_back(p[i]);
  return j;
}

double sup_floor(const ScalarField& e, double floor_factor) { return floor_factor * e.sup(); }

VerificationReport base_report(const ScalarField& e, std::string claim, const BoundParams& params,
                               const ConstantLedger& ledger, double tol) {
  VerificationReport rep;
  rep.claim = std::move(claim);
  rep.tolerance = tol;
  rep.params = params;
  rep.ledger = ledger;
  rep.grid = grid_json(e.domain());
  return rep;
}

// The deviation is evaluated exactly at the nodes, so no discretisation tolerance applies.
std::optional<HypothesisFailure> metric_failure(const Domain& d, const ConstantLedger& ledger,
                                                std::optional<double>& measured) {
  if (d.metric().is_identity()) return std::nullopt;
  measured = metric_deviation(d.metric(), d);
  if (*measured <= ledger.delta) return std::nullopt;
  HypothesisFailure f;
  f.kind = HypothesisKind::MetricDeviation;
  f.value = *measured;
  f.limit = ledger.delta;
  return f;
}

void finish(VerificationReport& rep) {
  rep.margin = rep.rhs - rep.lhs;
  if (rep.failure)
    rep.verdict = Verdict::HypothesisViolated;
  else
    rep.verdict = rep.margin >= -rep.tolerance ? Verdict::Holds : Verdict::Fails;
}

std::string dominant(std::initializer_list<std::pair<const char*, double>> terms) {
  const char* name = "none";
  double best = 0.0;
  for (const auto& [k, v] : terms) {
    if (v > best) {
      best = v;
      name = k;
    }
  }
  return name;
}

// Shared core of the mean value checks: hypotheses, energy, lhs.
void evaluate_common(VerificationReport& rep, const ScalarField& e, const BoundParams& params,
                     const ConstantLedger& ledger, double tol) {
  const Domain& d = e.domain();
  const int n = d.dimension();
  rep.failure = metric_failure(d, ledger, rep.metric_deviation);
  if (!rep.failure) rep.failure = check_hypotheses(e, params, tol);
  rep.energy = integrate(e);
  rep.lhs = e.at(d.center());
  rep.ratio = rep.energy > 0.0 ? rep.lhs * ipow(d.radius(), n) / rep.energy
                               : std::numeric_limits<double>::infinity();
  if (rep.lhs == 0.0) rep.ratio = 0.0;
}

}  // namespace

nlohmann::json grid_json(const Domain& d) {
  nlohmann::json j;
  j["kind"] = d.kind() == DomainKind::Ball ? "ball" : "half_ball";
  j["dimension"] = d.dimension();
  j["spacing"] = d.spacing();
  j["radius"] = d.radius();
  j["center"] = point_json(d.center(), d.dimension());
  j["mask_nodes"] = d.mask_nodes().size();
  j["metric"] = nlohmann::json::parse(d.metric().descriptor());
  return j;
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Holds: return "Holds";
    case Verdict::Fails: return "Fails";
    case Verdict::HypothesisViolated: return "HypothesisViolated";
  }
  return "unknown";
}

std::string_view to_string(HypothesisKind k) {
  switch (k) {
    case HypothesisKind::InteriorBound: return "InteriorBound";
    case HypothesisKind::BoundaryBound: return "BoundaryBound";
    case HypothesisKind::EnergyAboveThreshold: return "EnergyAboveThreshold";
    case HypothesisKind::MetricDeviation: return "MetricDeviation";
  }
  return "unknown";
}

nlohmann::json VerificationReport::to_json() const {
  const int n = params.n;
  nlohmann::json j;
  j["claim"] = claim;
  j["verdict"] = std::string(to_string(verdict));
  j["lhs"] = lhs;
  j["rhs"] = rhs;
  j["margin"] = margin;
  j["tolerance"] = tolerance;
  j["energy"] = energy;
  j["energy_threshold"] = energy_threshold ? nlohmann::json(*energy_threshold) : nlohmann::json();
  j["ratio"] = ratio;
  j["branch"] = branch;
  nlohmann::json hyp;
  hyp["params"] = params.to_json();
  hyp["a_required"] = a_required ? nlohmann::json(*a_required) : nlohmann::json();
  hyp["b_required"] = b_required ? nlohmann::json(*b_required) : nlohmann::json();
  hyp["metric_deviation"] = metric_deviation ? nlohmann::json(*metric_deviation) : nlohmann::json();
  if (failure) {
    hyp["failure"] = {{"kind", std::string(to_string(failure->kind))},
                      {"node", failure->node ? nlohmann::json(*failure->node) : nlohmann::json()},
                      {"position", point_json(failure->position, n)},
                      {"value", failure->value},
                      {"limit", failure->limit}};
  }
  j["hypotheses"] = hyp;
  j["ledger"] = ledger.to_json();
  j["grid"] = grid;
  return j;
}

NonlinearityFit fit_nonlinearity(const ScalarField& e, double A0, double A1, double floor_factor) {
  const Domain& d = e.domain();
  const int n = d.dimension();
  const double floor = sup_floor(e, floor_factor);
  const StencilField lap = laplacian(e);
  NonlinearityFit fit;
  double best = 0.0;
  for (std::size_t f : d.mask_nodes()) {
    if (!lap.defined(f) || !(e[f] > floor)) continue;
    ++fit.evaluated_nodes;
    const double q = (lap.values[f] - A0 - A1 * e[f]) / std::pow(e[f], (n + 2.0) / n);
    if (q > best) {
      best = q;
      fit.node = f;
    }
  }
  if (fit.evaluated_nodes == 0)
    throw Error(ErrorCode::AllNodesBelowFloor, "no stencil-valid node above the floor");
  fit.required = best;
  return fit;
}

NonlinearityFit fit_boundary_nonlinearity(const ScalarField& e, double B0, double B1,
                                          double floor_factor) {
  const int n = e.domain().dimension();
  const double floor = sup_floor(e, floor_factor);
  NonlinearityFit fit;
  double best = 0.0;
  for (const BoundaryValue& bv : normal_derivative(e)) {
    const double v = e[bv.node];
    if (!(v > floor)) continue;
    ++fit.evaluated_nodes;
    const double q = (bv.value - B0 - B1 * v) / std::pow(v, (n + 1.0) / n);
    if (q > best) {
      best = q;
      fit.node = bv.node;
    }
  }
  if (fit.evaluated_nodes == 0)
    throw Error(ErrorCode::AllNodesBelowFloor, "no flat-boundary node above the floor");
  fit.required = best;
  return fit;
}

std::optional<HypothesisFailure> check_hypotheses(const ScalarField& e, const BoundParams& params,
                                                  double tol) {
  const Domain& d = e.domain();
  const int n = d.dimension();
  const StencilField lap = laplacian(e);
  for (std::size_t f : d.mask_nodes()) {
    if (!lap.defined(f)) continue;
    const double v = std::max(e[f], 0.0);
    const double allowed = params.A0 + params.A1 * v + params.a * std::pow(v, (n + 2.0) / n) + tol;
    if (lap.values[f] > allowed) {
      return HypothesisFailure{HypothesisKind::InteriorBound, f, d.position(f), lap.values[f], allowed};
    }
  }
  if (d.kind() == DomainKind::HalfBall) {
    for (const BoundaryValue& bv : normal_derivative(e)) {
      const double v = std::max(e[bv.node], 0.0);
      const double allowed = params.B0 + params.B1 * v + params.b * std::pow(v, (n + 1.0) / n) + tol;
      if (bv.value > allowed) {
        return HypothesisFailure{HypothesisKind::BoundaryBound, bv.node, d.position(bv.node), bv.value,
                                 allowed};
      }
    }
  }
  return std::nullopt;
}

VerificationReport verify_morrey(const ScalarField& e, const ConstantLedger& ledger, double tol) {
  const Domain& d = e.domain();
  BoundParams zero;
  zero.n = d.dimension();
  VerificationReport rep = base_report(e, "morrey", zero, ledger, tol);
  evaluate_common(rep, e, zero, ledger, tol);
  rep.rhs = ledger.C * std::pow(d.radius(), -d.dimension()) * rep.energy;
  rep.branch = "morrey";
  finish(rep);
  return rep;
}

VerificationReport verify_interior_mvi(const ScalarField& e, const BoundParams& params,
                                       const ConstantLedger& ledger, double tol) {
  params.validate();
  const Domain& d = e.domain();
  const int n = d.dimension();
  if (params.n != n) throw Error(ErrorCode::InvalidArgument, "params and domain disagree on n");
  if (d.kind() != DomainKind::Ball)
    throw Error(ErrorCode::InvalidArgument, "interior mean value check needs a ball domain");
  if (d.radius() > 1.0)
    throw Error(ErrorCode::RadiusOutOfRange, "interior mean value inequality needs r <= 1");

  VerificationReport rep = base_report(e, "interior_mvi", params, ledger, tol);
  evaluate_common(rep, e, params, ledger, tol);
  if (!rep.failure && params.a > 0.0) {
    rep.energy_threshold = mu_ab(params.a, 0.0, ledger.C, n);
    if (rep.energy > *rep.energy_threshold) {
      rep.failure = HypothesisFailure{HypothesisKind::EnergyAboveThreshold, std::nullopt, d.center(),
                                      rep.energy, *rep.energy_threshold};
    }
  }
  try {
    rep.a_required = fit_nonlinearity(e, params.A0, params.A1).required;
  } catch (const Error& err) {
    if (err.code() != ErrorCode::AllNodesBelowFloor) throw;
  }
  const double r = d.radius();
  rep.rhs = interior_rhs(params, r, rep.energy, ledger.C);
  rep.branch = dominant({{"A0", ledger.C * params.A0 * r * r},
                         {"A1", ledger.C * std::pow(params.A1, 0.5 * n) * rep.energy},
                         {"morrey", ledger.C * std::pow(r, -n) * rep.energy}});
  finish(rep);
  return rep;
}

VerificationReport verify_boundary_mvi(const ScalarField& e, const BoundParams& params,
                                       const ConstantLedger& ledger, double tol) {
  params.validate();
  const Domain& d = e.domain();
  const int n = d.dimension();
  if (params.n != n) throw Error(ErrorCode::InvalidArgument, "params and domain disagree on n");
  if (d.kind() != DomainKind::HalfBall)
    throw Error(ErrorCode::DomainNotHalfBall, "boundary mean value check needs a half ball");

  VerificationReport rep = base_report(e, "boundary_mvi", params, ledger, tol);
  evaluate_common(rep, e, params, ledger, tol);
  if (!rep.failure && (params.a > 0.0 || params.b > 0.0)) {
    rep.energy_threshold = mu_ab(params.a, params.b, ledger.C, n);
    if (rep.energy > *rep.energy_threshold) {
      rep.failure = HypothesisFailure{HypothesisKind::EnergyAboveThreshold, std::nullopt, d.center(),
                                      rep.energy, *rep.energy_threshold};
    }
  }
  try {
    rep.a_required = fit_nonlinearity(e, params.A0, params.A1).required;
  } catch (const Error& err) {
    if (err.code() != ErrorCode::AllNodesBelowFloor) throw;
  }
  try {
    rep.b_required = fit_boundary_nonlinearity(e, params.B0, params.B1).required;
  } catch (const Error& err) {
    if (err.code() != ErrorCode::AllNodesBelowFloor) throw;
  }
  const double r = d.radius();
  rep.rhs = boundary_rhs(params, r, rep.energy, ledger.C);
  rep.branch = dominant({{"A0", ledger.C * params.A0 * r * r},
                         {"B0", ledger.C * params.B0 * r},
                         {"A1", ledger.C * std::pow(params.A1, 0.5 * n) * rep.energy},
                         {"B1", ledger.C * ipow(params.B1, n) * rep.energy},
                         {"morrey", ledger.C * std::pow(r, -n) * rep.energy}});
  finish(rep);
  return rep;
}

double large_radius_constant(int n) {
  if (n < 2 || n > 4) throw Error(ErrorCode::InvalidArgument, "dimension must be 2, 3 or 4");
  const double t_bound = n == 2 ? 0.5 * std::numbers::pi : 1.0;
  return ipow(2.0, n + 1) * n * sphere_volume(n - 1) / sphere_volume(n) * t_bound;
}

TIntegral t_integral_quadrature(int n, double T) {
  if (n < 2 || n > 4) throw Error(ErrorCode::InvalidArgument, "dimension must be 2, 3 or 4");
  if (!(T > 1.0)) throw Error(ErrorCode::InvalidArgument, "upper limit must exceed 1");
  // t = 1 + u^2: dt = 2u du and 1 - t^{-2} = u^2 (2 + u^2) / t^2, so the
  // integrand becomes 2 t^{-2} u^{n-2} ((2 + u^2) / t^2)^{(n-3)/2}, smooth at u = 0.
  auto integrand = [n](double u) {
    const double t = 1.0 + u * u;
    return 2.0 / (t * t) * ipow(u, n - 2) * std::pow((2.0 + u * u) / (t * t), 0.5 * (n - 3));
  };
  std::vector<double> x, w;
  gauss_legendre(8, x, w);
  const double U = std::sqrt(T - 1.0);
  const int panels = 64;
  double sum = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double a = U * p / panels, b = U * (p + 1) / panels;
    for (std::size_t k = 0; k < x.size(); ++k)
      sum += 0.5 * (b - a) * w[k] * integrand(0.5 * (a + b) + 0.5 * (b - a) * x[k]);
  }
  TIntegral out;
  out.value = sum;
  const double s = 1.0 / T;
  switch (n) {
    case 2: out.exact = std::acos(s); break;
    case 3: out.exact = 1.0 - s; break;
    default: out.exact = 0.25 * std::numbers::pi - 0.5 * (s * std::sqrt(1.0 - s * s) + std::asin(s)); break;
  }
  out.bound = n == 2 ? 0.5 * std::numbers::pi : 1.0;
  return out;
}

nlohmann::json MonotonicityReport::to_json() const {
  nlohmann::json j;
  j["claim"] = "monotonicity";
  j["verdict"] = failure ? "HypothesisViolated" : (passes() ? "Holds" : "Fails");
  j["y0"] = y0;
  j["tolerance"] = tolerance;
  j["monotone"] = {{"applicable", monotone_applicable}, {"min_increment", min_increment}, {"holds", monotone}};
  j["limit"] = {{"applicable", limit_applicable},
                {"expected", limit_expected},
                {"measured", limit_measured},
                {"relative_error", limit_relative_error},
                {"holds", limit_ok}};
  nlohmann::json lr = nlohmann::json::array();
  for (const auto& c : large_radius) lr.push_back({{"r", c.r}, {"lhs", c.lhs}, {"rhs", c.rhs}, {"holds", c.holds}});
  j["large_radius"] = {{"C_n", C_n}, {"R", outer_radius}, {"energy", outer_energy}, {"checks", lr}, {"holds", large_radius_ok}};
  if (failure) {
    j["failure"] = {{"kind", std::string(to_string(failure->kind))}, {"value", failure->value}, {"limit", failure->limit}};
  }
  return j;
}

MonotonicityReport monotonicity_suite(const ScalarField& e, std::span<const double> radii,
                                      double tol, double limit_tolerance) {
  const Domain& d = e.domain();
  if (d.kind() != DomainKind::HalfBall)
    throw Error(ErrorCode::DomainNotHalfBall, "monotonicity suite needs a half ball");
  if (radii.empty()) throw Error(ErrorCode::InvalidArgument, "no radii");
  for (std::size_t k = 1; k < radii.size(); ++k)
    if (!(radii[k] > radii[k - 1])) throw Error(ErrorCode::InvalidArgument, "radii must increase");

  const int n = d.dimension();
  const Point y = d.center();
  const double vol = sphere_volume(n);
  MonotonicityReport rep;
  rep.y0 = y[0];
  rep.tolerance = tol;
  BoundParams zero;
  zero.n = n;
  rep.failure = check_hypotheses(e, zero, tol);
  rep.profile = shell_profile(e, y, radii);

  rep.min_increment = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < rep.profile.size(); ++k) {
    if (rep.y0 > 0.0 && radii[k] > rep.y0) break;
    rep.monotone_applicable = true;
    rep.min_increment = std::min(rep.min_increment, rep.profile[k].mean - rep.profile[k - 1].mean);
  }
  if (rep.monotone_applicable) {
    rep.monotone = rep.min_increment >= -tol;
  } else {
    rep.min_increment = 0.0;
  }

  const double ey = e.at(y);
  const double r_min = radii.front();
  bool flat_normal = true;
  if (rep.y0 == 0.0) {
    Point p1 = y, p2 = y;
    p1[0] = d.spacing();
    p2[0] = 2.0 * d.spacing();
    const double d0 = (-3.0 * ey + 4.0 * e.at(p1) - e.at(p2)) / (2.0 * d.spacing());
    flat_normal = std::abs(d0) <= tol;
  }
  rep.limit_applicable = ey > 0.0 && ((rep.y0 == 0.0 && flat_normal) || rep.y0 >= r_min);
  rep.limit_expected = (rep.y0 == 0.0 ? 0.5 : 1.0) * vol * ey;
  rep.limit_measured = rep.profile.front().mean;
  if (rep.limit_applicable) {
    rep.limit_relative_error = std::abs(rep.limit_measured - rep.limit_expected) / rep.limit_expected;
    rep.limit_ok = rep.limit_relative_error <= limit_tolerance;
  }

  rep.C_n = large_radius_constant(n);
  rep.outer_radius = d.radius();
  if (rep.y0 > 0.0) {
    rep.outer_energy = integrate(e);
    const double tail = rep.C_n * std::pow(rep.outer_radius, -n) * rep.outer_energy;
    for (std::size_t k = 0; k < radii.size(); ++k) {
      if (radii[k] <= rep.y0 || radii[k] > 0.5 * rep.outer_radius) continue;
      LargeRadiusCheck c;
      c.r = radii[k];
      c.lhs = vol * ey;
      c.rhs = rep.profile[k].mean + tail;
      c.holds = c.lhs <= c.rhs + tol;
      rep.large_radius_ok = rep.large_radius_ok && c.holds;
      rep.large_radius.push_back(c);
    }
  }
  return rep;
}

ConstantEstimate estimate_constant(std::span<const ScalarField> family, FamilyKind kind, double tol) {
  if (family.empty()) throw Error(ErrorCode::EmptyFamily, "constant estimate needs at least one field");
  ConstantEstimate est;
  for (std::size_t i = 0; i < family.size(); ++i) {
    const ScalarField& e = family[i];
    const Domain& d = e.domain();
    const bool half = d.kind() == DomainKind::HalfBall;
    if (half != (kind == FamilyKind::Boundary))
      throw Error(ErrorCode::InvalidArgument, "family member " + std::to_string(i) + " has the wrong domain kind");
    BoundParams zero;
    zero.n = d.dimension();
    if (auto f = check_hypotheses(e, zero, tol)) {
      throw Error(ErrorCode::HypothesisViolated, "family member " + std::to_string(i) +
                                                     " is not subharmonic at node " +
                                                     std::to_string(f->node.value_or(0)));
    }
    const double energy = integrate(e);
    const double lhs = e.at(d.center());
    const double ratio = lhs == 0.0 ? 0.0 : lhs * ipow(d.radius(), d.dimension()) / energy;
    est.ratios.push_back(ratio);
    if (i == 0 || ratio > est.C) {
      est.C = ratio;
      est.argmax = i;
    }
  }
  return est;
}

}  // namespace mvlab
