#include "mvlab/heinz.hpp"

#include <algorithm>
#include <cmath>

#include "mvlab/calculus.hpp"
#include "mvlab/error.hpp"

namespace mvlab {

namespace {

double ipow(double x, int p) {
  double r = 1.0;
  for (int i = 0; i < p; ++i) r *= x;
  return r;
}

struct Entry {
  double dist;
  std::size_t node;
};

}  // namespace

nlohmann::json HeinzReport::to_json() const {
  auto check = [](const InequalityCheck& c) {
    return nlohmann::json{{"name", c.name}, {"lhs", c.lhs}, {"rhs", c.rhs}, {"holds", c.holds}};
  };
  nlohmann::json xb = nlohmann::json::array();
  for (double x : x_bar) xb.push_back(x);
  return {{"rho_bar", rho_bar},
          {"c_bar", c_bar},
          {"x_bar", xb},
          {"eps", eps},
          {"radius", radius},
          {"checks", {check(center_check), check(neighborhood_check)}}};
}

HeinzReport heinz_scan(const ScalarField& e, const Point& center, double r, int rho_resolution) {
  const Domain& d = e.domain();
  const int n = d.dimension();
  if (rho_resolution < 64) throw Error(ErrorCode::InvalidArgument, "rho resolution must be >= 64");
  if (!(r > 0.0)) throw Error(ErrorCode::InvalidArgument, "radius must be positive");
  const auto center_node = d.node_at(center);
  if (!center_node || !d.in_mask(*center_node))
    throw Error(ErrorCode::EmptyBall, "the ball of radius 0 contains no grid node");

  std::vector<Entry> entries;
  for (std::size_t f : d.mask_nodes()) {
    const double dist = distance(d.position(f), center, n);
    if (dist < r) entries.push_back({dist, f});
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& x, const Entry& y) {
    return x.dist != y.dist ? x.dist < y.dist : x.node < y.node;
  });
  // The centre node has distance exactly 0 and therefore comes first.

  HeinzReport rep;
  rep.radius = r;
  double running = -1.0;
  std::size_t running_node = 0;
  double best_f = -1.0;
  std::size_t i = 0;
  while (i < entries.size()) {
    const double dist = entries[i].dist;
    for (; i < entries.size() && entries[i].dist == dist; ++i) {
      const double v = e[entries[i].node];
      if (v > running || (v == running && entries[i].node < running_node)) {
        running = v;
        running_node = entries[i].node;
      }
    }
    const double rho = dist / r;
    const double f = ipow(1.0 - rho, n) * running;
    if (f > best_f) {
      best_f = f;
      rep.rho_bar = rho;
      rep.c_bar = running;
      rep.x_bar_node = running_node;
    }
  }
  rep.x_bar = d.position(rep.x_bar_node);
  rep.eps = 0.5 * (1.0 - rep.rho_bar);

  rep.rho_grid.resize(rho_resolution);
  rep.f_values.resize(rho_resolution);
  std::size_t j = 0;
  running = -1.0;
  for (int k = 0; k < rho_resolution; ++k) {
    const double rho = static_cast<double>(k) / rho_resolution;
    for (; j < entries.size() && entries[j].dist <= rho * r; ++j) running = std::max(running, e[entries[j].node]);
    rep.rho_grid[k] = rho;
    rep.f_values[k] = ipow(1.0 - rho, n) * running;
  }

  const double two_n = ipow(2.0, n);
  rep.center_check.name = "center_bound";
  rep.center_check.lhs = e[*center_node];
  rep.center_check.rhs = ipow(2.0 * rep.eps, n) * rep.c_bar;
  rep.center_check.holds = rep.center_check.lhs <= rep.center_check.rhs;

  double sup_near = 0.0;
  for (std::size_t f : d.mask_nodes()) {
    if (distance(d.position(f), rep.x_bar, n) <= rep.eps * r) sup_near = std::max(sup_near, e[f]);
  }
  rep.neighborhood_check.name = "neighborhood_bound";
  rep.neighborhood_check.lhs = sup_near;
  rep.neighborhood_check.rhs = two_n * rep.c_bar;
  rep.neighborhood_check.holds = sup_near <= rep.neighborhood_check.rhs;
  return rep;
}

ComparisonResult comparison_function_interior(const ScalarField& e, const Point& x_bar,
                                              const BoundParams& params, double c_bar,
                                              double check_radius) {
  params.validate();
  const Domain& d = e.domain();
  const int n = d.dimension();
  const double k = (params.A0 + ipow(2.0, n) * c_bar *
                                    (params.A1 + 4.0 * params.a * std::pow(c_bar, 2.0 / n))) /
                   n;
  std::vector<double> values(d.box_size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t f : d.mask_nodes()) {
    const Point x = d.position(f);
    double s2 = 0.0;
    for (int i = 0; i < n; ++i) s2 += (x[i] - x_bar[i]) * (x[i] - x_bar[i]);
    values[f] = e[f] + k * s2;
  }
  ComparisonResult out{ScalarField(e.domain_ptr(), std::move(values), false),
                       -std::numeric_limits<double>::infinity(), std::nullopt, 0};
  const StencilField lap = laplacian(out.v);
  for (std::size_t f : d.mask_nodes()) {
    if (!lap.defined(f) || distance(d.position(f), x_bar, n) > check_radius) continue;
    out.max_laplacian = std::max(out.max_laplacian, lap.values[f]);
    ++out.checked_nodes;
  }
  return out;
}

ComparisonResult comparison_function_boundary(const ScalarField& e, const Point& y, double A,
                                              double B, double r) {
  const Domain& d = e.domain();
  if (d.kind() != DomainKind::HalfBall)
    throw Error(ErrorCode::DomainNotHalfBall, "boundary comparison function needs a half ball");
  if (!(A >= 0.0) || !(B >= 0.0))
    throw Error(ErrorCode::InvalidArgument, "A and B must be nonnegative");
  const int n = d.dimension();
  const bool drop_linear = r <= y[0];
  const double slope = drop_linear ? 0.0 : B + A * y[0] / n;
  std::vector<double> values(d.box_size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t f : d.mask_nodes()) {
    const Point x = d.position(f);
    double s2 = 0.0;
    for (int i = 0; i < n; ++i) s2 += (x[i] - y[i]) * (x[i] - y[i]);
    values[f] = e[f] + A / (2.0 * n) * s2 + slope * x[0];
  }
  ComparisonResult out{ScalarField(e.domain_ptr(), std::move(values), false),
                       -std::numeric_limits<double>::infinity(), std::nullopt, 0};
  const StencilField lap = laplacian(out.v);
  for (std::size_t f : d.mask_nodes()) {
    if (!lap.defined(f)) continue;
    out.max_laplacian = std::max(out.max_laplacian, lap.values[f]);
    ++out.checked_nodes;
  }
  double max_normal = -std::numeric_limits<double>::infinity();
  bool any = false;
  // only the part of the flat boundary inside B_r(y) is constrained
  for (const BoundaryValue& bv : normal_derivative(out.v)) {
    if (distance(d.position(bv.node), y, n) > r) continue;
    max_normal = std::max(max_normal, bv.value);
    any = true;
  }
  if (any) out.max_normal = max_normal;
  return out;
}

}  // namespace mvlab
