#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvlab/constants.hpp"
#include "mvlab/grid.hpp"

namespace mvlab {

struct InequalityCheck {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

struct HeinzReport {
  double rho_bar = 0.0;
  double c_bar = 0.0;
  Point x_bar{};
  std::size_t x_bar_node = 0;
  double eps = 0.5;
  double radius = 0.0;
  std::vector<double> rho_grid;  // k / resolution, k = 0 .. resolution - 1
  std::vector<double> f_values;  // (1 - rho)^n sup over the closed ball of radius rho r
  InequalityCheck center_check;        // e(center) <= 2^n eps^n c_bar
  InequalityCheck neighborhood_check;  // sup over B_{eps r}(x_bar) of e <= 2^n c_bar

  bool passes() const { return center_check.holds && neighborhood_check.holds; }
  nlohmann::json to_json() const;
};

/// Maximises f(rho) = (1 - rho)^n sup_{B_{rho r}(center)} e over rho in [0, 1).
/// The supremum is a step function of rho that only changes at node distances,
/// so the maximiser is found exactly by sweeping the nodes in order of
/// distance; f is additionally sampled on a uniform grid for output. Ties go to
/// the smallest rho and then to the lexicographically smallest node. For a half
/// ball the balls are intersected with the mask.
HeinzReport heinz_scan(const ScalarField& e, const Point& center, double r,
                       int rho_resolution = 256);

struct ComparisonResult {
  ScalarField v;
  double max_laplacian = -std::numeric_limits<double>::infinity();
  std::optional<double> max_normal;  // boundary comparison functions only
  std::size_t checked_nodes = 0;

  bool passes(double tol) const {
    return max_laplacian <= tol && (!max_normal || *max_normal <= tol);
  }
};

/// v = e + (1/n)(A0 + 2^n c_bar (A1 + 4 a c_bar^{2/n})) |x - x_bar|^2.
/// Delta v is checked on the stencil-valid nodes of B_{check_radius}(x_bar).
ComparisonResult comparison_function_interior(const ScalarField& e, const Point& x_bar,
                                              const BoundParams& params, double c_bar,
                                              double check_radius);

/// v = e + (1/2n) A |x - y|^2 + (B + A y0 / n) x0, the x0 term dropped when r <= y0.
/// Delta v is checked on all stencil-valid nodes and dv/dnu on the flat boundary
/// inside B_r(y); max_normal stays empty when B_r(y) misses the boundary.
ComparisonResult comparison_function_boundary(const ScalarField& e, const Point& y, double A,
                                              double B, double r);

}  // namespace mvlab
