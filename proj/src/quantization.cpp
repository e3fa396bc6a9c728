#include "mvlab/quantization.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "mvlab/calculus.hpp"
#include "mvlab/error.hpp"

namespace mvlab {

namespace {

struct Ball {
  Point x;
  double radius;
};

bool same_grid(const Domain& a, const Domain& b) {
  return &a == &b || (a.kind() == b.kind() && a.center() == b.center() && a.radius() == b.radius() &&
                      a.spacing() == b.spacing() && a.dimension() == b.dimension() &&
                      a.box_size() == b.box_size() && a.metric().descriptor() == b.metric().descriptor());
}

bool inside_any(const Point& p, const std::vector<Ball>& balls, int n) {
  for (const Ball& b : balls)
    if (distance(p, b.x, n) < b.radius) return true;
  return false;
}

// Largest value above `above` outside the balls (and within `near` of `around`
// when given); ties go to the lexicographically smallest node.
std::optional<std::size_t> argmax(const ScalarField& e, const std::vector<Ball>& excluded, double above,
                                  const Point* around = nullptr, double near = 0.0) {
  const Domain& d = e.domain();
  const int n = d.dimension();
  std::optional<std::size_t> best;
  double best_v = above;
  for (std::size_t f : d.mask_nodes()) {
    const double v = e[f];
    if (!(v > best_v)) continue;
    const Point p = d.position(f);
    if (around && distance(p, *around, n) > near) continue;
    if (inside_any(p, excluded, n)) continue;
    best_v = v;
    best = f;
  }
  return best;
}

nlohmann::json point_json(const Point& p, int n) {
  nlohmann::json j = nlohmann::json::array();
  for (int i = 0; i < n; ++i) j.push_back(p[i]);
  return j;
}

}  // namespace

void DensitySequence::validate(double tol) {
  if (fields.empty()) throw Error(ErrorCode::InconsistentSequence, "empty density sequence");
  params.validate();
  const Domain& d0 = fields.front().domain();
  if (d0.dimension() != params.n)
    throw Error(ErrorCode::InconsistentSequence, "params and fields disagree on n");
  energies.clear();
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (!same_grid(d0, fields[i].domain()))
      throw Error(ErrorCode::InconsistentSequence, "field " + std::to_string(i) + " lives on another domain");
    if (!fields[i].density())
      throw Error(ErrorCode::InconsistentSequence, "field " + std::to_string(i) + " is not a density");
    const double E = integrate(fields[i]);
    if (E > energy_bound + tol)
      throw Error(ErrorCode::InconsistentSequence, "field " + std::to_string(i) + " has energy " +
                                                       std::to_string(E) + " above the bound");
    energies.push_back(E);
  }
}

double concentration_energy(const ScalarField& e, const Point& x, double delta) {
  return integrate(e, Region{x, delta});
}

std::string_view to_string(CandidateOutcome o) {
  switch (o) {
    case CandidateOutcome::Extracted: return "Extracted";
    case CandidateOutcome::BoundedAfterAll: return "BoundedAfterAll";
    case CandidateOutcome::QuantizationViolated: return "QuantizationViolated";
    case CandidateOutcome::Merged: return "Merged";
    case CandidateOutcome::BudgetExhausted: return "BudgetExhausted";
  }
  return "unknown";
}

ConcentrationReport detect_concentration(const DensitySequence& seq, const ConstantLedger& ledger,
                                         const DetectorSettings& settings) {
  if (seq.fields.empty()) throw Error(ErrorCode::InconsistentSequence, "empty density sequence");
  if (!ledger.hbar || !(*ledger.hbar > 0.0))
    throw Error(ErrorCode::InvalidArgument, "detector needs hbar > 0 (a or b must be positive)");
  if (!(settings.divergence_threshold > 0.0))
    throw Error(ErrorCode::InvalidArgument, "divergence threshold must be positive");

  const Domain& d = seq.fields.front().domain();
  const int n = d.dimension();
  const double h = d.spacing();
  const std::size_t len = seq.fields.size();
  const double hbar = *ledger.hbar;

  ConcentrationReport rep;
  rep.settings = settings;
  rep.hbar = hbar;
  rep.energy_bound = seq.energy_bound;
  rep.budget = static_cast<std::size_t>(std::floor(seq.energy_bound / hbar));
  rep.min_witnesses = settings.min_witnesses > 0
                          ? settings.min_witnesses
                          : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(len))));

  const double cluster = settings.cluster_radius_factor * h;
  const double floor_radius = settings.exclusion_floor_factor * h;
  std::vector<Ball> searched;
  std::vector<Ball> extracted;
  bool stop = false;

  while (!stop) {
    // Anchor: argmax of the latest index that still exceeds the threshold.
    std::optional<Point> anchor;
    for (std::size_t i = len; i-- > 0 && !anchor;) {
      if (auto f = argmax(seq.fields[i], searched, settings.divergence_threshold)) anchor = d.position(*f);
    }
    if (!anchor) break;

    Candidate cand;
    for (std::size_t i = 0; i < len; ++i) {
      const ScalarField& e = seq.fields[i];
      auto f = argmax(e, searched, settings.divergence_threshold, &*anchor, cluster);
      if (!f) continue;
      WitnessStep s;
      s.index = i;
      s.z = d.position(*f);
      s.R = std::pow(e[*f], 1.0 / n);
      s.delta = 1.0 / std::sqrt(s.R);
      const DichotomyResult dr = quantization_dichotomy(s.R, seq.params, hbar, ledger.C);
      s.branch = dr.branch;
      s.lhs = dr.lhs;
      s.rhs = dr.rhs;
      s.energy = concentration_energy(e, s.z, s.delta);
      cand.witnesses.push_back(s);
    }
    if (cand.witnesses.size() < rep.min_witnesses) {
      // A peak that does not persist along the sequence: not a blow-up point.
      searched.push_back({*anchor, floor_radius});
      continue;
    }

    cand.x = cand.witnesses.back().z;
    double max_delta = 0.0;
    for (const WitnessStep& s : cand.witnesses) max_delta = std::max(max_delta, s.delta);
    cand.exclusion_radius = std::max(max_delta, floor_radius);
    cand.certified_energy = cand.witnesses.back().energy;

    for (std::size_t k = cand.witnesses.size(); k-- > 0;) {
      if (cand.witnesses[k].branch != Branch::ConcentrationForced) break;
      cand.onset = k;
    }
    bool violated = false;
    for (const WitnessStep& s : cand.witnesses)
      if (s.branch == Branch::ConcentrationForced && !(s.energy > hbar)) violated = true;

    if (violated) {
      cand.outcome = CandidateOutcome::QuantizationViolated;
      rep.status = DetectionStatus::QuantizationViolated;
    } else if (!cand.onset) {
      cand.outcome = CandidateOutcome::BoundedAfterAll;
    } else {
      bool overlap = false;
      for (const Ball& b : extracted)
        if (distance(b.x, cand.x, n) <= 2.0 * std::max(b.radius, cand.exclusion_radius)) overlap = true;
      if (overlap) {
        cand.outcome = CandidateOutcome::Merged;
      } else if (rep.count + 1 > rep.budget) {
        cand.outcome = CandidateOutcome::BudgetExhausted;
        stop = true;
      } else {
        cand.outcome = CandidateOutcome::Extracted;
        ++rep.count;
        extracted.push_back({cand.x, cand.exclusion_radius});
        rep.points.push_back(rep.candidates.size());
      }
    }
    if (cand.onset) {
      for (std::size_t k = *cand.onset; k < cand.witnesses.size(); ++k)
        cand.subsequence.push_back(cand.witnesses[k].index);
    }
    searched.push_back({cand.x, cand.exclusion_radius});
    searched.push_back({*anchor, cand.exclusion_radius});
    rep.candidates.push_back(std::move(cand));
  }

  rep.residual_bound.assign(len, 0.0);
  for (std::size_t i = 0; i < len; ++i) {
    const ScalarField& e = seq.fields[i];
    double sup = 0.0;
    for (std::size_t f : d.mask_nodes()) {
      if (e[f] > sup && !inside_any(d.position(f), extracted, n)) sup = e[f];
    }
    rep.residual_bound[i] = sup;
  }

  for (std::size_t i = 0; i < len; ++i) {
    bool keep = true;
    for (std::size_t p : rep.points) {
      const auto& sub = rep.candidates[p].subsequence;
      if (std::find(sub.begin(), sub.end(), i) == sub.end()) keep = false;
    }
    if (keep) rep.surviving_subsequence.push_back(i);
  }
  return rep;
}

nlohmann::json ConcentrationReport::to_json(int n) const {
  nlohmann::json j;
  j["claim"] = "concentration";
  j["status"] = status == DetectionStatus::Completed ? "Completed" : "QuantizationViolated";
  j["count"] = count;
  j["budget"] = budget;
  j["hbar"] = hbar;
  j["energy_bound"] = energy_bound;
  j["min_witnesses"] = min_witnesses;
  j["settings"] = {{"divergence_threshold", settings.divergence_threshold},
                   {"cluster_radius_factor", settings.cluster_radius_factor},
                   {"exclusion_floor_factor", settings.exclusion_floor_factor}};
  nlohmann::json cands = nlohmann::json::array();
  for (const Candidate& c : candidates) {
    nlohmann::json w = nlohmann::json::array();
    for (const WitnessStep& s : c.witnesses) {
      w.push_back({{"index", s.index},
                   {"z", point_json(s.z, n)},
                   {"R", s.R},
                   {"delta", s.delta},
                   {"energy", s.energy},
                   {"branch", std::string(to_string(s.branch))},
                   {"lhs", s.lhs},
                   {"rhs", s.rhs}});
    }
    cands.push_back({{"x", point_json(c.x, n)},
                     {"outcome", std::string(to_string(c.outcome))},
                     {"onset", c.onset ? nlohmann::json(c.witnesses[*c.onset].index) : nlohmann::json()},
                     {"exclusion_radius", c.exclusion_radius},
                     {"certified_energy", c.certified_energy},
                     {"subsequence", c.subsequence},
                     {"witnesses", w}});
  }
  j["candidates"] = cands;
  j["points"] = points;
  j["residual_bound"] = residual_bound;
  j["surviving_subsequence"] = surviving_subsequence;
  return j;
}

std::string ConcentrationReport::witness_csv(int n) const {
  std::string out = "candidate,i";
  for (int k = 0; k < n; ++k) out += ",z" + std::to_string(k);
  out += ",R,delta,energy,branch\n";
  char buf[96];
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    for (const WitnessStep& s : candidates[c].witnesses) {
      out += std::to_string(c) + "," + std::to_string(s.index);
      for (int k = 0; k < n; ++k) {
        std::snprintf(buf, sizeof buf, ",%.17g", s.z[k]);
        out += buf;
      }
      std::snprintf(buf, sizeof buf, ",%.17g,%.17g,%.17g,", s.R, s.delta, s.energy);
      out += buf;
      out += to_string(s.branch);
      out += "\n";
    }
  }
  return out;
}

}  // namespace mvlab
