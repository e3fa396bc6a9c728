#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mvlab {

inline constexpr int kMaxDim = 4;

/// A point of R^n stored in a fixed-size array; components past the
/// dimension are zero. Component 0 is the normal coordinate x0 of the half space.
using Point = std::array<double, kMaxDim>;
using Matrix = std::array<std::array<double, kMaxDim>, kMaxDim>;
using NodeIndex = std::array<int, kMaxDim>;

double distance(const Point& a, const Point& b, int n);
double norm_squared(const Point& a, int n);

/// Volume of the unit sphere S^{n-1} (2, 2pi, 4pi, 2pi^2 for n = 1..4).
double sphere_volume(int n);

/// Riemannian metric on R^n given by its matrix-valued entries g(x).
/// A default-constructed metric is the Euclidean identity.
class MetricSpec {
 public:
  using Entries = std::function<Matrix(const Point&)>;

  struct PolynomialTerm {
    int row = 0;
    int col = 0;
    double coefficient = 0.0;
    std::array<int, kMaxDim> powers{};
  };

  MetricSpec() = default;
  MetricSpec(Entries entries, double declared_deviation, std::string descriptor);

  static MetricSpec identity();
  /// (1 + c) * identity.
  static MetricSpec constant_scale(double c);
  /// (1 + c * x_axis) * identity.
  static MetricSpec conformal_linear(double c, int axis);
  /// identity + c * sin(x_axis) * E_{entry,entry}.
  static MetricSpec sine_entry(double c, int entry, int axis);
  /// identity + sum of monomials placed symmetrically at (row, col) and (col, row).
  static MetricSpec polynomial(std::vector<PolynomialTerm> terms, double declared_deviation);

  bool is_identity() const { return !entries_; }
  /// g(x), with the unused trailing block set to the identity.
  Matrix at(const Point& x) const;
  double declared_deviation() const { return declared_deviation_; }
  /// JSON text that reconstructs this metric through the configuration reader.
  const std::string& descriptor() const { return descriptor_; }

 private:
  Entries entries_;
  double declared_deviation_ = 0.0;
  std::string descriptor_ = R"({"preset":"identity"})";
};

/// sqrt(det g) and g^{-1} for the leading n x n block.
struct MetricFactors {
  double sqrt_det = 1.0;
  Matrix inverse{};
};
MetricFactors metric_factors(const Matrix& g, int n);

enum class DomainKind { Ball, HalfBall };

enum class NodeClass : std::uint8_t { Outside, Interior, FlatBoundary, CapBoundary };

/// Masked uniform vertex-centred grid over a ball B_r(center) or a clipped
/// half ball D_r(y) = B_r(y) n {x0 >= 0}. Node positions are
/// origin + index * h; for a ball the origin is the centre, for a half ball it
/// is (0, y-bar) so the plane x0 = 0 is the grid plane with index 0.
/// Immutable after construction.
class Domain {
 public:
  DomainKind kind() const { return kind_; }
  const Point& center() const { return center_; }
  double radius() const { return radius_; }
  double spacing() const { return spacing_; }
  int dimension() const { return dimension_; }
  const MetricSpec& metric() const { return metric_; }
  const Point& origin() const { return origin_; }

  const NodeIndex& box_lo() const { return lo_; }
  const NodeIndex& box_extent() const { return extent_; }
  std::size_t box_size() const { return classes_.size(); }

  NodeIndex node_index(std::size_t flat) const;
  std::optional<std::size_t> flat_index(const NodeIndex& index) const;
  Point position(std::size_t flat) const;
  Point position(const NodeIndex& index) const;

  NodeClass node_class(std::size_t flat) const { return classes_[flat]; }
  bool in_mask(std::size_t flat) const { return classes_[flat] != NodeClass::Outside; }
  /// In-mask nodes in lexicographic order.
  std::span<const std::size_t> mask_nodes() const { return mask_nodes_; }

  /// Node one step along an axis, if it lies inside the bounding box.
  std::optional<std::size_t> neighbor(std::size_t flat, int axis, int step) const;
  /// Node whose position coincides with p (to 1e-9 h), if any.
  std::optional<std::size_t> node_at(const Point& p) const;
  /// Node nearest to p inside the bounding box (not necessarily in the mask).
  std::size_t nearest_box_node(const Point& p) const;
  std::size_t center_node() const { return center_node_; }

  /// Distance to the centre used for the mask: Euclidean for the identity
  /// metric, otherwise the length of the straight segment in g (first-order
  /// geodesic distance, Simpson rule along the segment).
  double center_distance(const Point& p) const;
  /// Membership of a continuous point in the region the mask discretises.
  bool contains(const Point& p) const;
  /// Upper bound on the Euclidean extent of the region measured from the centre.
  double euclidean_reach() const { return reach_; }

  /// sqrt(det g) at a node (1 for the identity metric).
  double volume_factor(std::size_t flat) const;

 private:
  friend std::shared_ptr<const Domain> make_ball_domain(const Point&, double, double, int,
                                                        MetricSpec);
  friend std::shared_ptr<const Domain> make_half_ball_domain(const Point&, double, double, int);

  Domain() = default;
  void build_box(const NodeIndex& lo, const NodeIndex& hi);
  void classify();

  DomainKind kind_ = DomainKind::Ball;
  Point center_{};
  Point origin_{};
  double radius_ = 0.0;
  double spacing_ = 0.0;
  int dimension_ = 2;
  double reach_ = 0.0;
  MetricSpec metric_;
  NodeIndex lo_{};
  NodeIndex extent_{};
  std::array<std::size_t, kMaxDim> stride_{};
  std::vector<NodeClass> classes_;
  std::vector<std::size_t> mask_nodes_;
  std::size_t center_node_ = 0;
};

std::shared_ptr<const Domain> make_ball_domain(const Point& center, double r, double h, int n,
                                               MetricSpec metric = {});
std::shared_ptr<const Domain> make_half_ball_domain(const Point& y, double r, double h, int n);

/// Measured W^{1,inf} deviation of g from the identity over the in-mask nodes:
/// max of |g - 1|_inf and |dg|_inf, derivatives by central differences.
double metric_deviation(const MetricSpec& metric, const Domain& domain);

/// Nodal values on a domain. Values are stored for every bounding-box node;
/// only in-mask entries are meaningful (out-of-mask entries are NaN).
/// Density fields are nonnegative; comparison functions set density = false.
class ScalarField {
 public:
  ScalarField(std::shared_ptr<const Domain> domain, std::vector<double> values,
              bool density = true);

  template <class Fn>
  static ScalarField sample(std::shared_ptr<const Domain> domain, Fn&& fn, bool density = true) {
    std::vector<double> values(domain->box_size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t node : domain->mask_nodes()) values[node] = fn(domain->position(node));
    return ScalarField(std::move(domain), std::move(values), density);
  }

  const Domain& domain() const { return *domain_; }
  const std::shared_ptr<const Domain>& domain_ptr() const { return domain_; }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t flat) const { return values_[flat]; }
  bool density() const { return density_; }

  /// Value at a node position, or multilinear interpolation when p is not a node.
  double at(const Point& p) const;
  /// Maximum over in-mask nodes.
  double sup() const;

 private:
  std::shared_ptr<const Domain> domain_;
  std::vector<double> values_;
  bool density_ = true;
};

/// Multilinear interpolation; empty when a corner of the enclosing cell is
/// outside the mask.
std::optional<double> interpolate(const ScalarField& field, const Point& p);

}  // namespace mvlab
