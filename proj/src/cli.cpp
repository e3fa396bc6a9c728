#include "mvlab/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mvlab/calculus.hpp"
#include "mvlab/constants.hpp"
#include "mvlab/error.hpp"
#include "mvlab/heinz.hpp"
#include "mvlab/io.hpp"
#include "mvlab/quantization.hpp"
#include "mvlab/synth.hpp"
#include "mvlab/verify.hpp"

namespace mvlab {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Options {
  std::string config;
  std::optional<double> spacing;
  std::optional<int> dimension;
  std::optional<double> c_constant;
  bool measure_c = false;
  std::optional<double> tolerance_k;
  std::string out;
  std::optional<std::uint64_t> seed;

  // constants subcommand
  double a = 0.0, b = 0.0, A0 = 0.0, A1 = 0.0, B0 = 0.0, B1 = 0.0;
  int n = 2;
  double r = 1.0;
  std::optional<double> eps;
};

struct Context {
  Options opt;
  json config = json::object();
  fs::path base = ".";
  fs::path out_dir;
  std::ostream* out = nullptr;
};

[[noreturn]] void config_fail(const std::string& what) { throw Error(ErrorCode::ConfigError, what); }

fs::path resolve(const Context& ctx, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : ctx.base / path;
}

std::shared_ptr<const Domain> load_domain(const Context& ctx) {
  DomainOverrides ov{ctx.opt.spacing, ctx.opt.dimension};
  const json* d = config_find(ctx.config, "domain");
  return domain_from_json(d ? *d : json::object(), "domain", ov);
}

double tolerance(const Context& ctx, const Domain& d) {
  const double k = ctx.opt.tolerance_k ? *ctx.opt.tolerance_k : config_number(ctx.config, "tolerance_k", 10.0);
  if (!(k >= 0.0)) config_fail("tolerance_k: must be nonnegative");
  return k * d.spacing();
}

struct Input {
  ScalarField field;
  json echo;
};

Input load_input(const Context& ctx) {
  const json* in = config_find(ctx.config, "input");
  if (!in || !in->is_object()) config_fail("input: missing (expected {\"generator\": ...} or {\"field\": ...})");
  const bool has_gen = in->contains("generator");
  const bool has_field = in->contains("field");
  if (has_gen == has_field) config_fail("input: exactly one of 'generator' and 'field' is required");
  if (has_field) {
    if (ctx.opt.spacing || ctx.opt.dimension)
      config_fail("input.field: --spacing and --dimension do not apply to field files");
    const std::string name = config_string(*in, "field");
    return {read_field(resolve(ctx, name)), json{{"field", name}}};
  }
  GeneratorSpec spec = GeneratorSpec::from_json((*in)["generator"]);
  return {gen(spec, load_domain(ctx)), json{{"generator", spec.to_json()}}};
}

struct ParamsInput {
  BoundParams params;
  bool fit_a = false;
  bool fit_b = false;
};

ParamsInput read_params(const Context& ctx, int n) {
  ParamsInput p;
  p.params.n = n;
  const json* j = config_find(ctx.config, "params");
  if (!j) return p;
  if (!j->is_object()) config_fail("params: expected an object");
  auto number = [&](const char* key, double& dst, bool* fit) {
    auto it = j->find(key);
    if (it == j->end()) return;
    if (fit && it->is_string() && it->get<std::string>() == "fit") {
      *fit = true;
      return;
    }
    if (!it->is_number()) config_fail(std::string("params.") + key + ": expected a number" + (fit ? " or \"fit\"" : ""));
    dst = it->get<double>();
  };
  number("A0", p.params.A0, nullptr);
  number("A1", p.params.A1, nullptr);
  number("a", p.params.a, &p.fit_a);
  number("B0", p.params.B0, nullptr);
  number("B1", p.params.B1, nullptr);
  number("b", p.params.b, &p.fit_b);
  try {
    p.params.validate();
  } catch (const Error& e) {
    config_fail(std::string("params: ") + e.what());
  }
  return p;
}

template <class Fit>
double fit_or_zero(Fit&& fit) {
  try {
    return fit().required;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::AllNodesBelowFloor) throw;
    return 0.0;
  }
}

void apply_fits(ParamsInput& p, const ScalarField& e) {
  if (p.fit_a) p.params.a = fit_or_zero([&] { return fit_nonlinearity(e, p.params.A0, p.params.A1); });
  if (p.fit_b) p.params.b = fit_or_zero([&] { return fit_boundary_nonlinearity(e, p.params.B0, p.params.B1); });
}

// Harmonic calibration on a domain of the same shape centred at the origin
// (a half ball with its centre on the flat boundary).
ConstantEstimate measure_constant(const Domain& like, double tol, bool subharmonic = false) {
  const int n = like.dimension();
  const double R = like.radius();
  const double h = like.spacing();
  const bool half = like.kind() == DomainKind::HalfBall;
  auto domain = half ? make_half_ball_domain(Point{}, R, h, n) : make_ball_domain(Point{}, R, h, n);
  std::vector<GeneratorSpec> specs;
  if (subharmonic) {
    specs = half ? boundary_family(R, n) : interior_family(R, n);
  } else {
    specs = half ? boundary_calibration_family(R, n) : interior_calibration_family(R, n);
  }
  std::vector<ScalarField> fields;
  for (const GeneratorSpec& s : specs) fields.push_back(gen(s, domain));
  return estimate_constant(fields, half ? FamilyKind::Boundary : FamilyKind::Interior, tol);
}

struct LedgerInputs {
  double C = 1.0;
  Provenance source = Provenance::Configured;
  double delta = 0.05;
  Provenance delta_source = Provenance::Configured;
  json calibration;
};

LedgerInputs ledger_inputs(const Context& ctx, const Domain& like, double tol) {
  LedgerInputs li;
  const json* lc = config_find(ctx.config, "ledger");
  if (lc && !lc->is_object()) config_fail("ledger: expected an object");
  li.delta = lc ? config_number(*lc, "delta", 0.05) : 0.05;
  if (!(li.delta > 0.0)) config_fail("ledger.delta: must be positive");

  std::optional<double> configured = ctx.opt.c_constant;
  if (!configured && !ctx.opt.measure_c && lc && lc->contains("C")) {
    const json& c = (*lc)["C"];
    if (c.is_number()) {
      configured = c.get<double>();
    } else if (!(c.is_string() && c.get<std::string>() == "measure")) {
      config_fail("ledger.C: expected a number or \"measure\"");
    }
  }
  if (configured) {
    if (!(*configured > 0.0) || !std::isfinite(*configured)) config_fail("C: must be positive and finite");
    li.C = *configured;
    return li;
  }
  const ConstantEstimate est = measure_constant(like, tol);
  li.C = est.C;
  li.source = Provenance::Measured;
  li.calibration = {{"family", like.kind() == DomainKind::HalfBall ? "boundary_calibration" : "interior_calibration"},
                    {"members", est.ratios.size()},
                    {"argmax", est.argmax},
                    {"ratios", est.ratios}};
  return li;
}

ConstantLedger make_ledger(const LedgerInputs& li, const BoundParams& params) {
  return ConstantLedger::derive(params, li.C, li.source, li.delta, li.delta_source);
}

void attach(json& record, const ConstantLedger& ledger, const Domain& d, const LedgerInputs& li) {
  record["ledger"] = ledger.to_json();
  record["grid"] = grid_json(d);
  if (!li.calibration.is_null()) record["calibration"] = li.calibration;
}

fs::path write_report(const Context& ctx, const std::string& command, const std::vector<json>& records) {
  ReportWriter w(command);
  for (const json& r : records) w.add(r);
  const fs::path p = ctx.out_dir / (command + ".jsonl");
  w.write(p);
  return p;
}

int verdict_status(Verdict v) {
  switch (v) {
    case Verdict::Holds: return kExitOk;
    case Verdict::Fails: return kExitClaimFailed;
    case Verdict::HypothesisViolated: return kExitHypothesisViolated;
  }
  return kExitClaimFailed;
}

void print_verification(std::ostream& os, const std::string& cmd, const VerificationReport& r) {
  os << cmd << ": " << to_string(r.verdict) << "  lhs=" << format_double(r.lhs) << "  rhs=" << format_double(r.rhs)
     << "  margin=" << format_double(r.margin) << "  C=" << format_double(r.ledger.C) << " ("
     << to_string(r.ledger.C_source) << ")\n";
  if (r.failure)
    os << "  hypothesis " << to_string(r.failure->kind) << ": value " << format_double(r.failure->value)
       << " exceeds " << format_double(r.failure->limit) << "\n";
}

int cmd_verify(Context& ctx, const std::string& cmd) {
  Input in = load_input(ctx);
  const ScalarField& e = in.field;
  const Domain& d = e.domain();
  const double tol = tolerance(ctx, d);
  const LedgerInputs li = ledger_inputs(ctx, d, tol);
  VerificationReport rep;
  if (cmd == "verify-morrey") {
    BoundParams zero;
    zero.n = d.dimension();
    rep = verify_morrey(e, make_ledger(li, zero), tol);
  } else {
    ParamsInput p = read_params(ctx, d.dimension());
    if (cmd == "verify-interior") {
      p.fit_b = false;
      apply_fits(p, e);
      rep = verify_interior_mvi(e, p.params, make_ledger(li, p.params), tol);
    } else {
      apply_fits(p, e);
      rep = verify_boundary_mvi(e, p.params, make_ledger(li, p.params), tol);
    }
  }
  json record = rep.to_json();
  record["input"] = in.echo;
  if (!li.calibration.is_null()) record["calibration"] = li.calibration;
  const fs::path path = write_report(ctx, cmd, {record});
  print_verification(*ctx.out, cmd, rep);
  *ctx.out << "  report: " << path.string() << "\n";
  return verdict_status(rep.verdict);
}

std::vector<double> radii_from(const Context& ctx, const Domain& d) {
  const double h = d.spacing();
  const json* j = config_find(ctx.config, "radii");
  double lo = 16.0 * h, hi = 0.75 * d.radius();
  int count = 24;
  if (j) {
    if (j->is_array()) {
      std::vector<double> out;
      for (const json& x : *j) {
        if (!x.is_number()) config_fail("radii: expected numbers");
        out.push_back(x.get<double>());
      }
      return out;
    }
    if (!j->is_object()) config_fail("radii: expected an array or {\"min\", \"max\", \"count\"}");
    lo = config_number(*j, "min", lo);
    hi = config_number(*j, "max", hi);
    count = config_int(*j, "count", count);
  }
  if (count < 2 || !(hi > lo)) config_fail("radii: need count >= 2 and max > min");
  std::vector<double> out;
  for (int k = 0; k < count; ++k) out.push_back(lo + (hi - lo) * k / (count - 1));
  return out;
}

int cmd_monotonicity(Context& ctx) {
  Input in = load_input(ctx);
  const ScalarField& e = in.field;
  const Domain& d = e.domain();
  const double tol = tolerance(ctx, d);
  const LedgerInputs li = ledger_inputs(ctx, d, tol);
  BoundParams zero;
  zero.n = d.dimension();
  const ConstantLedger ledger = make_ledger(li, zero);
  const std::vector<double> radii = radii_from(ctx, d);
  const MonotonicityReport rep = monotonicity_suite(e, radii, tol, config_number(ctx.config, "limit_tolerance", 0.02));
  json record = rep.to_json();
  record["claim"] = "monotonicity";
  record["input"] = in.echo;
  attach(record, ledger, d, li);
  const fs::path path = write_report(ctx, "monotonicity", {record});
  write_text(ctx.out_dir / "monotonicity_profile.csv", shell_profile_csv(rep.profile));
  std::ostream& os = *ctx.out;
  os << "monotonicity: " << (rep.passes() ? "Holds" : rep.failure ? "HypothesisViolated" : "Fails")
     << "  y0=" << format_double(rep.y0) << "  min_increment=" << format_double(rep.min_increment)
     << "  limit_error=" << format_double(rep.limit_relative_error) << "  large_radius_checks=" << rep.large_radius.size()
     << "\n  report: " << path.string() << "\n";
  if (rep.failure) return kExitHypothesisViolated;
  return rep.passes() ? kExitOk : kExitClaimFailed;
}

int cmd_heinz(Context& ctx) {
  Input in = load_input(ctx);
  const ScalarField& e = in.field;
  const Domain& d = e.domain();
  const double tol = tolerance(ctx, d);
  const json* hj = config_find(ctx.config, "heinz");
  const json cfg = hj ? *hj : json::object();
  Point center = d.center();
  if (const json* c = config_find(cfg, "center")) {
    if (!c->is_array() || c->size() != static_cast<std::size_t>(d.dimension()))
      config_fail("heinz.center: expected one coordinate per dimension");
    for (int k = 0; k < d.dimension(); ++k) center[k] = (*c)[k].get<double>();
  }
  const double r = config_number(cfg, "radius", d.radius());
  const int res = config_int(cfg, "resolution", 256);
  const HeinzReport rep = heinz_scan(e, center, r, res);

  const LedgerInputs li = ledger_inputs(ctx, d, tol);
  ParamsInput p = read_params(ctx, d.dimension());
  apply_fits(p, e);
  const ConstantLedger ledger = make_ledger(li, p.params);

  json record = rep.to_json();
  record["claim"] = "heinz";
  record["input"] = in.echo;
  record["params"] = p.params.to_json();
  bool ok = rep.passes();
  bool hypothesis_ok = true;
  if (d.kind() == DomainKind::Ball) {
    const ComparisonResult cmp = comparison_function_interior(e, rep.x_bar, p.params, rep.c_bar, rep.eps * r);
    hypothesis_ok = !check_hypotheses(e, p.params, tol).has_value();
    record["comparison"] = {{"max_laplacian", cmp.max_laplacian},
                            {"checked_nodes", cmp.checked_nodes},
                            {"tolerance", tol},
                            {"hypotheses_hold", hypothesis_ok},
                            {"holds", cmp.passes(tol)}};
    if (hypothesis_ok) ok = ok && cmp.passes(tol);
  }
  attach(record, ledger, d, li);
  const fs::path path = write_report(ctx, "heinz-scan", {record});
  write_text(ctx.out_dir / "heinz_profile.csv", heinz_csv(rep));
  std::ostream& os = *ctx.out;
  os << "heinz-scan: " << (ok ? "Holds" : "Fails") << "  rho_bar=" << format_double(rep.rho_bar)
     << "  c_bar=" << format_double(rep.c_bar) << "  eps=" << format_double(rep.eps) << "\n  report: " << path.string()
     << "\n";
  if (!ok) return kExitClaimFailed;
  return hypothesis_ok ? kExitOk : kExitHypothesisViolated;
}

json epsilon_prime_json(const EpsilonPrime& ep, double r, double eps) {
  auto cert = [](const Certificate& c) {
    return json{{"applicable", c.applicable}, {"bound", c.bound}, {"holds", c.holds}};
  };
  return {{"r", r},         {"eps", eps},         {"value", ep.value},
          {"root", ep.root}, {"capped", ep.capped}, {"residual", ep.residual},
          {"effective_C", ep.effective_C}, {"quadratic", cert(ep.quadratic)}, {"linear", cert(ep.linear)}};
}

int cmd_constants(Context& ctx, const CLI::App& sub) {
  const Options& o = ctx.opt;
  BoundParams p;
  p.n = o.n;
  if (const json* j = config_find(ctx.config, "params")) p = params_from_json(*j, "params", o.n);
  auto take = [&](const char* flag, double v, double& dst) {
    if (sub.count(flag) > 0) dst = v;
  };
  take("--a", o.a, p.a);
  take("--b", o.b, p.b);
  take("--A0", o.A0, p.A0);
  take("--A1", o.A1, p.A1);
  take("--B0", o.B0, p.B0);
  take("--B1", o.B1, p.B1);
  p.validate();

  LedgerInputs li;
  if (o.c_constant || (!o.measure_c && config_find(ctx.config, "ledger.C"))) {
    auto like = make_ball_domain(Point{}, 1.0, 1.0 / 64.0, o.n);
    li = ledger_inputs(ctx, *like, 0.0);
  } else {
    const double h = o.spacing ? *o.spacing : 1.0 / 64.0;
    auto like = make_ball_domain(Point{}, 1.0, h, o.n);
    li = ledger_inputs(ctx, *like, 10.0 * h);
  }
  ConstantLedger ledger = make_ledger(li, p);
  json record{{"claim", "constants"}, {"params", p.to_json()}};
  std::ostream& os = *ctx.out;
  if (p.A1 > 0.0 || p.B1 > 0.0) {
    const double eps = o.eps ? *o.eps : 0.5;
    const EpsilonPrime ep = epsilon_prime(p, o.r, ledger.C, eps);
    ledger.eps_prime = ep.value;
    record["eps_prime"] = epsilon_prime_json(ep, o.r, eps);
  }
  record["ledger"] = ledger.to_json();
  if (!li.calibration.is_null()) record["calibration"] = li.calibration;
  const fs::path path = write_report(ctx, "constants", {record});
  os << ledger.to_text();
  os << "report: " << path.string() << "\n";
  return kExitOk;
}

std::vector<double> schedule_from(const json& j) {
  std::vector<double> out;
  if (j.is_array()) {
    for (const json& x : j) {
      if (!x.is_number()) config_fail("sequence.schedule: expected numbers");
      out.push_back(x.get<double>());
    }
    return out;
  }
  if (!j.is_object()) config_fail("sequence.schedule: expected an array or {\"lambda0\", \"ratio\", \"count\"}");
  const double l0 = config_number(j, "lambda0");
  const double q = config_number(j, "ratio", 0.5);
  const int count = config_int(j, "count");
  if (count < 1) config_fail("sequence.schedule.count: must be positive");
  double l = l0;
  for (int i = 0; i < count; ++i, l *= q) out.push_back(l);
  return out;
}

std::uint64_t seed_of(const Context& ctx) {
  if (ctx.opt.seed) return *ctx.opt.seed;
  const json* s = config_find(ctx.config, "seed");
  if (!s) return 0;
  if (!s->is_number_unsigned()) config_fail("seed: expected a nonnegative integer");
  return s->get<std::uint64_t>();
}

struct SequenceInput {
  DensitySequence seq;
  json echo;
};

SequenceInput build_sequence(const Context& ctx) {
  const json* sj = config_find(ctx.config, "sequence");
  const json* mj = config_find(ctx.config, "manifest");
  if ((sj != nullptr) == (mj != nullptr)) config_fail("exactly one of 'sequence' and 'manifest' is required");
  SequenceInput out;
  if (mj) {
    if (!mj->is_string()) config_fail("manifest: expected a path");
    const fs::path mpath = resolve(ctx, mj->get<std::string>());
    const json m = load_config(mpath);
    const json* files = config_find(m, "fields");
    if (!files || !files->is_array() || files->empty()) config_fail(mpath.string() + ": fields: expected a nonempty array");
    std::vector<fs::path> paths;
    for (const json& f : *files) {
      if (!f.is_string()) config_fail(mpath.string() + ": fields: expected paths");
      fs::path p(f.get<std::string>());
      if (!p.is_absolute()) p = mpath.parent_path() / p;
      if (!fs::exists(p)) throw Error(ErrorCode::IoError, "missing field file " + p.string());
      paths.push_back(p);
    }
    for (const fs::path& p : paths) out.seq.fields.push_back(read_field(p));
    const int n = out.seq.fields.front().domain().dimension();
    out.seq.energy_bound = config_number(m, "energy_bound");
    const json* pj = config_find(m, "params");
    out.seq.params = pj ? params_from_json(*pj, "params", n) : BoundParams{n};
    out.echo = {{"manifest", mj->get<std::string>()}};
    return out;
  }
  auto domain = load_domain(ctx);
  const json* sched = config_find(*sj, "schedule");
  if (!sched) config_fail("sequence.schedule: missing");
  const std::vector<double> schedule = schedule_from(*sched);
  std::vector<GeneratorSpec> bubbles;
  json placement;
  if (const json* bj = config_find(*sj, "bubbles")) {
    if (!bj->is_array()) config_fail("sequence.bubbles: expected an array");
    for (const json& b : *bj) bubbles.push_back(GeneratorSpec::from_json(b));
  }
  if (const json* rj = config_find(*sj, "random")) {
    const std::uint64_t seed = seed_of(ctx);
    const int count = config_int(*rj, "count");
    if (count < 0) config_fail("sequence.random.count: must be nonnegative");
    auto extra = random_bubbles(seed, static_cast<std::size_t>(count), *domain, config_number(*rj, "spread"),
                                config_number(*rj, "separation"));
    const double amp = config_number(*rj, "amplitude", 1.0);
    for (GeneratorSpec& b : extra) b.amplitude = amp;
    bubbles.insert(bubbles.end(), extra.begin(), extra.end());
    placement = {{"seed", seed}, {"count", count}};
  }
  GeneratorSpec background;
  background.amplitude = 0.0;
  if (const json* bg = config_find(*sj, "background")) background = GeneratorSpec::from_json(*bg);
  ParamsInput lin = read_params(ctx, domain->dimension());
  out.seq = gen_sequence(bubbles, schedule, background, domain, lin.params);
  // Numeric a and b in the configuration are declared values that replace the fits.
  const json* pj = config_find(ctx.config, "params");
  if (pj && pj->contains("a") && (*pj)["a"].is_number()) out.seq.params.a = lin.params.a;
  if (pj && pj->contains("b") && (*pj)["b"].is_number()) out.seq.params.b = lin.params.b;
  json specs = json::array();
  for (const GeneratorSpec& b : bubbles) specs.push_back(b.to_json());
  out.echo = {{"bubbles", specs}, {"schedule", schedule}, {"background", background.to_json()}};
  if (!placement.is_null()) out.echo["placement"] = placement;
  return out;
}

int cmd_detect(Context& ctx) {
  SequenceInput in = build_sequence(ctx);
  DensitySequence& seq = in.seq;
  const Domain& d = seq.fields.front().domain();
  const double tol = tolerance(ctx, d);
  seq.validate(tol);
  const LedgerInputs li = ledger_inputs(ctx, d, tol);
  const ConstantLedger ledger = make_ledger(li, seq.params);
  if (!ledger.hbar) config_fail("params: a and b are both zero, so the energy quantum is undefined");

  DetectorSettings s;
  s.tolerance = tol;
  if (const json* dj = config_find(ctx.config, "detector")) {
    s.divergence_threshold = config_number(*dj, "divergence_threshold", s.divergence_threshold);
    s.cluster_radius_factor = config_number(*dj, "cluster_radius_factor", s.cluster_radius_factor);
    s.exclusion_floor_factor = config_number(*dj, "exclusion_floor_factor", s.exclusion_floor_factor);
    const int mw = config_int(*dj, "min_witnesses", 0);
    if (mw < 0) config_fail("detector.min_witnesses: must be nonnegative");
    s.min_witnesses = static_cast<std::size_t>(mw);
  }
  const ConcentrationReport rep = detect_concentration(seq, ledger, s);
  const int n = d.dimension();
  json record = rep.to_json(n);
  record["claim"] = "detect-bubbles";
  record["input"] = in.echo;
  record["params"] = seq.params.to_json();
  record["energies"] = seq.energies;
  if (!seq.a_fit.empty()) record["a_fit"] = seq.a_fit;
  if (!seq.scales.empty()) record["scales"] = seq.scales;
  attach(record, ledger, d, li);
  const fs::path path = write_report(ctx, "detect-bubbles", {record});
  write_text(ctx.out_dir / "detect_bubbles_witnesses.csv", rep.witness_csv(n));
  std::ostream& os = *ctx.out;
  os << "detect-bubbles: N=" << rep.count << "  budget=" << rep.budget << "  hbar=" << format_double(rep.hbar)
     << "  E=" << format_double(rep.energy_bound) << "  status="
     << (rep.status == DetectionStatus::Completed ? "Completed" : "QuantizationViolated") << "\n";
  for (std::size_t k : rep.points) {
    const Candidate& c = rep.candidates[k];
    os << "  point";
    for (int i = 0; i < n; ++i) os << " " << format_double(c.x[i]);
    os << "  energy=" << format_double(c.certified_energy) << "\n";
  }
  os << "  report: " << path.string() << "\n";
  return rep.status == DetectionStatus::Completed ? kExitOk : kExitHypothesisViolated;
}

int cmd_estimate(Context& ctx) {
  auto domain = load_domain(ctx);
  const double tol = tolerance(ctx, *domain);
  const std::string family = config_string(ctx.config, "family", std::string("calibration"));
  if (family != "calibration" && family != "subharmonic")
    config_fail("family: expected \"calibration\" or \"subharmonic\"");
  const ConstantEstimate est = measure_constant(*domain, tol, family == "subharmonic");
  json record{{"claim", "estimate-c"},
              {"family", family},
              {"kind", domain->kind() == DomainKind::HalfBall ? "boundary" : "interior"},
              {"C", est.C},
              {"argmax", est.argmax},
              {"ratios", est.ratios},
              {"tolerance", tol},
              {"grid", grid_json(*domain)}};
  const fs::path path = write_report(ctx, "estimate-c", {record});
  *ctx.out << "estimate-c: C=" << format_double(est.C) << " over " << est.ratios.size() << " " << family
           << " members (argmax " << est.argmax << ")\n  report: " << path.string() << "\n";
  return kExitOk;
}

int cmd_generate(Context& ctx) {
  std::ostream& os = *ctx.out;
  if (config_find(ctx.config, "sequence")) {
    SequenceInput in = build_sequence(ctx);
    json files = json::array();
    for (std::size_t i = 0; i < in.seq.fields.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "field_%03zu.txt", i);
      write_field(in.seq.fields[i], ctx.out_dir / name);
      files.push_back(name);
    }
    json manifest{{"fields", files}, {"energy_bound", in.seq.energy_bound}, {"params", in.seq.params.to_json()}};
    write_text(ctx.out_dir / "manifest.json", manifest.dump(2) + "\n");
    os << "generate: " << files.size() << " fields, E=" << format_double(in.seq.energy_bound) << "\n  manifest: "
       << (ctx.out_dir / "manifest.json").string() << "\n";
    return kExitOk;
  }
  Input in = load_input(ctx);
  write_field(in.field, ctx.out_dir / "field.txt");
  os << "generate: " << (ctx.out_dir / "field.txt").string() << "\n";
  return kExitOk;
}

int status_for(const Error& e) {
  return e.code() == ErrorCode::HypothesisViolated ? kExitHypothesisViolated : kExitInputError;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Grid checks of mean value inequalities for subharmonic-type energy densities.", "mvlab"};
  app.fallthrough();
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", std::string(kVersion));
  app.footer(
      "Exit status: 0 all verdicts hold, 1 a claim failed, 2 a hypothesis or the\n"
      "quantization was violated, 3 input or configuration error.\n\n"
      "Environment:\n"
      "  MVLAB_OUT_DIR  output directory used when --out is not given (default ./mvlab-out)");

  Context ctx;
  Options& o = ctx.opt;
  app.add_option("--config", o.config, "JSON run configuration");
  app.add_option("--spacing", o.spacing, "grid spacing h, overrides domain.spacing")->check(CLI::PositiveNumber);
  app.add_option("--dimension", o.dimension, "dimension n (2, 3 or 4), overrides domain.dimension")
      ->check(CLI::Range(2, 4));
  app.add_option("--c-constant", o.c_constant, "use this C instead of the configured or measured one")
      ->check(CLI::PositiveNumber);
  app.add_flag("--measure-c", o.measure_c, "measure C on the harmonic calibration family");
  app.add_option("--tolerance-k", o.tolerance_k, "verdict tolerance K, tol = K h (default 10)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--out", o.out, "output directory for reports and CSV files");
  app.add_option("--seed", o.seed, "seed for randomized bubble placement");

  struct Sub {
    const char* name;
    const char* help;
  };
  const Sub subs[] = {
      {"verify-morrey", "check e(center) <= C r^-n integral of e for a subharmonic density"},
      {"verify-interior", "interior mean value inequality with A0, A1, a"},
      {"verify-boundary", "boundary mean value inequality on a half ball with A0, A1, a, B0, B1, b"},
      {"monotonicity", "shell averages M(r), small-radius limit and large-radius inequality"},
      {"heinz-scan", "maximiser of (1 - rho)^n sup e and the comparison function check"},
      {"constants", "print the constant ledger for given parameters"},
      {"detect-bubbles", "concentration point extraction on a density sequence"},
      {"estimate-c", "measure C on a calibration or subharmonic family"},
      {"generate", "write field files (and a sequence manifest) from generator specs"},
  };
  std::vector<CLI::App*> handles;
  for (const Sub& s : subs) handles.push_back(app.add_subcommand(s.name, s.help));
  CLI::App* constants = handles[5];
  constants->add_option("--a", o.a, "interior nonlinearity a")->check(CLI::NonNegativeNumber);
  constants->add_option("--b", o.b, "boundary nonlinearity b")->check(CLI::NonNegativeNumber);
  constants->add_option("--A0", o.A0, "interior constant A0")->check(CLI::NonNegativeNumber);
  constants->add_option("--A1", o.A1, "interior linear coefficient A1")->check(CLI::NonNegativeNumber);
  constants->add_option("--B0", o.B0, "boundary constant B0")->check(CLI::NonNegativeNumber);
  constants->add_option("--B1", o.B1, "boundary linear coefficient B1")->check(CLI::NonNegativeNumber);
  constants->add_option("--C", o.c_constant, "alias of --c-constant")->check(CLI::PositiveNumber);
  constants->add_option("-n", o.n, "dimension")->check(CLI::Range(2, 4));
  constants->add_option("--r", o.r, "radius for eps'")->check(CLI::PositiveNumber);
  constants->add_option("--eps", o.eps, "cap for eps' (default 1/2)");

  std::vector<std::string> argv_store{"mvlab"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (std::string& s : argv_store) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInputError;
  }
  if (constants->parsed() && o.dimension) o.n = *o.dimension;

  try {
    if (!o.config.empty()) {
      const fs::path cp(o.config);
      if (!fs::exists(cp)) throw Error(ErrorCode::ConfigError, "config file not found: " + o.config);
      ctx.config = load_config(cp);
      if (!ctx.config.is_object()) throw Error(ErrorCode::ConfigError, o.config + ": expected a JSON object");
      ctx.base = cp.has_parent_path() ? cp.parent_path() : fs::path(".");
    }
    if (!o.out.empty()) {
      ctx.out_dir = o.out;
    } else if (const json* oj = config_find(ctx.config, "out"); oj && oj->is_string()) {
      ctx.out_dir = resolve(ctx, oj->get<std::string>());
    } else if (const char* env = std::getenv("MVLAB_OUT_DIR"); env && *env) {
      ctx.out_dir = env;
    } else {
      ctx.out_dir = "mvlab-out";
    }
    fs::create_directories(ctx.out_dir);
    ctx.out = &out;

    for (std::size_t k = 0; k < handles.size(); ++k) {
      if (!handles[k]->parsed()) continue;
      const std::string name = subs[k].name;
      if (name == "verify-morrey" || name == "verify-interior" || name == "verify-boundary")
        return cmd_verify(ctx, name);
      if (name == "monotonicity") return cmd_monotonicity(ctx);
      if (name == "heinz-scan") return cmd_heinz(ctx);
      if (name == "constants") return cmd_constants(ctx, *constants);
      if (name == "detect-bubbles") return cmd_detect(ctx);
      if (name == "estimate-c") return cmd_estimate(ctx);
      if (name == "generate") return cmd_generate(ctx);
    }
  } catch (const Error& e) {
    err << "mvlab: " << to_string(e.code()) << ": " << e.what() << "\n";
    return status_for(e);
  } catch (const fs::filesystem_error& e) {
    err << "mvlab: IoError: " << e.what() << "\n";
    return kExitInputError;
  }
  return kExitInputError;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace mvlab
