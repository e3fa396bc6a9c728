#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvlab/constants.hpp"
#include "mvlab/grid.hpp"

namespace mvlab {

/// Ordered density fields on one domain with a common energy bound.
struct DensitySequence {
  std::vector<ScalarField> fields;
  double energy_bound = 0.0;
  BoundParams params;
  std::vector<double> energies;  // integral of each field, filled by validate()
  std::vector<double> scales;    // planted bubble scale per index, when generated
  std::vector<double> a_fit;     // fitted a per index, when generated
  std::vector<double> b_fit;     // fitted b per index (half balls), when generated

  /// Checks the common domain and energies <= energy_bound + tol; fills energies.
  void validate(double tol);
};

/// Integral of e over B_delta(x) intersected with the domain.
double concentration_energy(const ScalarField& e, const Point& x, double delta);

struct DetectorSettings {
  double divergence_threshold = 100.0;
  double cluster_radius_factor = 4.0;    // argmax clustering radius in units of h
  double exclusion_floor_factor = 8.0;   // minimum exclusion radius in units of h
  std::size_t min_witnesses = 0;         // 0 selects ceil(sqrt(sequence length))
  double tolerance = 0.0;                // energy accounting tolerance
};

struct WitnessStep {
  std::size_t index = 0;
  Point z{};
  double R = 0.0;
  double delta = 0.0;
  double energy = 0.0;  // integral over B_delta(z) of e_index
  Branch branch = Branch::BoundConsistent;
  double lhs = 0.0;
  double rhs = 0.0;
};

enum class CandidateOutcome { Extracted, BoundedAfterAll, QuantizationViolated, Merged, BudgetExhausted };
std::string_view to_string(CandidateOutcome o);

struct Candidate {
  Point x{};
  CandidateOutcome outcome = CandidateOutcome::BoundedAfterAll;
  std::vector<WitnessStep> witnesses;
  std::optional<std::size_t> onset;  // first witness index from which every step is forced
  double exclusion_radius = 0.0;
  double certified_energy = 0.0;     // energy at the last witness
  std::vector<std::size_t> subsequence;  // witness indices from the onset on
};

enum class DetectionStatus { Completed, QuantizationViolated };

struct ConcentrationReport {
  std::vector<Candidate> candidates;  // in discovery order
  std::vector<std::size_t> points;    // indices into candidates of the extracted points
  std::size_t count = 0;              // N
  std::size_t budget = 0;             // floor(E / hbar)
  double hbar = 0.0;
  double energy_bound = 0.0;
  std::vector<double> residual_bound;  // per index: sup of e_i off the extracted balls
  std::vector<std::size_t> surviving_subsequence;
  DetectionStatus status = DetectionStatus::Completed;
  DetectorSettings settings;
  std::size_t min_witnesses = 0;

  nlohmann::json to_json(int n) const;
  /// Rows (candidate, i, z, R, delta, energy, branch) for the witness CSV.
  std::string witness_csv(int n) const;
};

/// Finite-sequence surrogate of the bubble extraction: blow-up candidates are
/// argmax clusters whose value exceeds the divergence threshold on at least
/// min_witnesses indices; each candidate is classified through the
/// concentration dichotomy at R_i = e_i(z_i)^{1/n}, delta_i = R_i^{-1/2}.
ConcentrationReport detect_concentration(const DensitySequence& seq, const ConstantLedger& ledger,
                                         const DetectorSettings& settings);

}  // namespace mvlab
