#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "mvlab/grid.hpp"
#include "mvlab/jet.hpp"

namespace mvlab {

/// Nodal result of a stencil operator. Nodes where the stencil does not fit in
/// the mask hold NaN and are listed in `undefined_nodes`.
struct StencilField {
  std::shared_ptr<const Domain> domain;
  std::vector<double> values;
  std::vector<std::size_t> undefined_nodes;

  bool defined(std::size_t flat) const { return domain->in_mask(flat) && !std::isnan(values[flat]); }
  /// Maximum over defined nodes (-inf when none) and the node attaining it.
  std::pair<double, std::optional<std::size_t>> max() const;
};

/// Positive-definite Laplacian (Delta = d*d, so Delta |x|^2 = -2n).
/// Identity metric: second-order central differences on Interior nodes.
/// General metric: -(1/sqrt g) d_i(sqrt g g^{ij} d_j e) with centred fluxes,
/// which additionally needs the diagonal neighbours in the mask.
StencilField laplacian(const ScalarField& e);

struct BoundaryValue {
  std::size_t node = 0;
  double value = 0.0;
};

/// Outer normal derivative -de/dx0 on FlatBoundary nodes by the one-sided
/// stencil -(-3 e0 + 4 e1 - e2) / (2h). Nodes whose inward neighbours leave
/// the mask are skipped.
std::vector<BoundaryValue> normal_derivative(const ScalarField& e);

/// Euclidean ball used to restrict integrals; it is always intersected with
/// the domain region.
struct Region {
  Point center{};
  double radius = 0.0;
};

/// Integral of e * sqrt(det g) over the domain (optionally intersected with a
/// ball). Cells cut by the region boundary are split into 4^n subsamples; a
/// subsample inside the region whose own node is outside the mask is charged
/// to the nearest in-mask node of its 3^n neighbourhood.
double integrate(const ScalarField& e, std::optional<Region> subregion = std::nullopt);

/// Clipping angle of the sphere of radius r about a point at height y0:
/// arccos(-y0 / r), or pi when y0 >= r (whole sphere inside the half space).
double clipping_angle(double y0, double r);

struct ShellNode {
  Point point{};
  double weight = 0.0;  // area element on the sphere of radius r
};

struct Shell {
  double radius = 0.0;
  double phi0 = 0.0;
  bool clipped = false;
  std::vector<ShellNode> nodes;
};

/// Product quadrature over Gamma_r = dB_r(center) n H^n in the coordinates
/// (r, phi, z), phi in [0, phi0(r)], z in S^{n-2}. Gauss-Legendre panels in
/// phi with a panel edge at phi0; S^0 is the two-point sum, S^1 a uniform
/// trapezoid, S^2 Gauss-Legendre in the polar angle times a uniform azimuth.
struct ShellQuadrature {
  Point center{};
  std::vector<Shell> shells;
};

ShellQuadrature make_shell_quadrature(const Domain& domain, const Point& center,
                                      std::span<const double> radii);

struct ShellSample {
  double radius = 0.0;
  double mean = 0.0;  // M(r) = r^{1-n} * integral over Gamma_r
  std::size_t node_count = 0;
  bool clipped = false;
};

std::vector<ShellSample> shell_profile(const ScalarField& e, const Point& center,
                                       std::span<const double> radii);

/// Nodes and weights of the m-point Gauss-Legendre rule on [-1, 1].
void gauss_legendre(int m, std::vector<double>& nodes, std::vector<double>& weights);

/// Nonnegative test function with vanishing normal derivative on x0 = 0:
///   psi(x) = (1 - |x - p|^2 / rho^2)_+^4 * (1 + alpha cos(k x0)) * (1 + beta ((x1 - p1)/rho)^2)
/// with p0 = 0 or p0 >= rho, so d psi / d x0 = 0 on the flat boundary.
struct TestFunction {
  Point center{};
  double support = 1.0;
  double alpha = 0.0;
  double frequency = 0.0;
  double beta = 0.0;

  template <class T>
  T eval(const std::array<T, kMaxDim>& x, int n) const {
    using std::cos;
    using std::pow;
    T s2 = T(0.0);
    for (int k = 0; k < n; ++k) {
      const T u = x[k] - T(center[k]);
      s2 += u * u;
    }
    if (value_of(s2) >= support * support) return T(0.0);
    const T bump = pow(T(1.0) - s2 * T(1.0 / (support * support)), 4.0);
    const T wave = T(1.0) + T(alpha) * cos(T(frequency) * x[0]);
    const T u1 = (x[1] - T(center[1])) * T(1.0 / support);
    const T poly = T(1.0) + T(beta) * u1 * u1;
    return bump * wave * poly;
  }

  double value(const Point& x, int n) const;
  /// Positive-definite Laplacian evaluated exactly through jets.
  double laplacian(const Point& x, int n) const;
  double d_dx0(const Point& x, int n) const;
};

struct WeakTestSet {
  std::vector<TestFunction> functions;

  /// At least `count` test functions supported strictly inside the domain
  /// region (vanishing near the cap), mixing boundary-centred and interior
  /// centres, radii and modulations.
  static WeakTestSet standard(const Domain& domain, std::size_t count = 16);
};

struct WeakTestReport {
  std::vector<double> values;  // integral of e * Delta psi per test function
  double tolerance = 0.0;
  bool subharmonic = true;
};

WeakTestReport weak_subharmonic_test(const ScalarField& e, const WeakTestSet& tests,
                                     double tolerance);

}  // namespace mvlab
