#include "mvlab/calculus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "mvlab/error.hpp"

namespace mvlab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double ipow(double x, int p) {
  double r = 1.0;
  for (int i = 0; i < p; ++i) r *= x;
  return r;
}

// Odometer over an index box [lo, hi] in the first n axes.
template <class Fn>
void for_each_index(const NodeIndex& lo, const NodeIndex& hi, int n, Fn&& fn) {
  for (int k = 0; k < n; ++k)
    if (hi[k] < lo[k]) return;
  NodeIndex idx = lo;
  while (true) {
    fn(idx);
    int k = n - 1;
    while (k >= 0) {
      if (++idx[k] <= hi[k]) break;
      idx[k] = lo[k];
      --k;
    }
    if (k < 0) return;
  }
}

double laplacian_identity(const ScalarField& e, std::size_t f) {
  const Domain& d = e.domain();
  const double h2 = d.spacing() * d.spacing();
  double sum = 0.0;
  for (int k = 0; k < d.dimension(); ++k) {
    const std::size_t p = *d.neighbor(f, k, 1);
    const std::size_t m = *d.neighbor(f, k, -1);
    sum += (e[p] - 2.0 * e[f] + e[m]) / h2;
  }
  return -sum;
}

std::optional<double> laplacian_metric(const ScalarField& e, std::size_t f) {
  const Domain& d = e.domain();
  const int n = d.dimension();
  const double h = d.spacing();
  const NodeIndex idx = d.node_index(f);

  auto value = [&](const NodeIndex& at) -> std::optional<double> {
    auto g = d.flat_index(at);
    if (!g || !d.in_mask(*g)) return std::nullopt;
    return e[*g];
  };
  auto shifted = [&](NodeIndex base, int axis, int step) {
    base[axis] += step;
    return base;
  };
  // Centred difference along axis j at a node, if both neighbours exist.
  auto central = [&](const NodeIndex& at, int j) -> std::optional<double> {
    auto p = value(shifted(at, j, 1));
    auto m = value(shifted(at, j, -1));
    if (!p || !m) return std::nullopt;
    return (*p - *m) / (2.0 * h);
  };

  const Point x = d.position(f);
  double divergence = 0.0;
  for (int i = 0; i < n; ++i) {
    double flux[2] = {0.0, 0.0};
    for (int side = 0; side < 2; ++side) {
      const int s = side == 0 ? -1 : 1;
      const NodeIndex nb = shifted(idx, i, s);
      auto enb = value(nb);
      if (!enb) return std::nullopt;
      Point xm = x;
      xm[i] += 0.5 * s * h;
      const MetricFactors mf = metric_factors(d.metric().at(xm), n);
      const double grad_i = s * (*enb - e[f]) / h;
      double fl = mf.sqrt_det * mf.inverse[i][i] * grad_i;
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        auto c0 = central(idx, j);
        auto c1 = central(nb, j);
        if (!c0 || !c1) return std::nullopt;
        fl += mf.sqrt_det * mf.inverse[i][j] * 0.5 * (*c0 + *c1);
      }
      flux[side] = fl;
    }
    divergence += (flux[1] - flux[0]) / h;
  }
  const double sqrt_det = metric_factors(d.metric().at(x), n).sqrt_det;
  return -divergence / sqrt_det;
}

}  // namespace

std::pair<double, std::optional<std::size_t>> StencilField::max() const {
  double best = -std::numeric_limits<double>::infinity();
  std::optional<std::size_t> at;
  for (std::size_t f : domain->mask_nodes()) {
    if (std::isnan(values[f])) continue;
    if (values[f] > best) {
      best = values[f];
      at = f;
    }
  }
  return {best, at};
}

StencilField laplacian(const ScalarField& e) {
  const Domain& d = e.domain();
  StencilField out{e.domain_ptr(), std::vector<double>(d.box_size(), kNaN), {}};
  const bool identity = d.metric().is_identity();
  for (std::size_t f : d.mask_nodes()) {
    if (d.node_class(f) != NodeClass::Interior) {
      out.undefined_nodes.push_back(f);
      continue;
    }
    if (identity) {
      out.values[f] = laplacian_identity(e, f);
    } else if (auto v = laplacian_metric(e, f)) {
      out.values[f] = *v;
    } else {
      out.undefined_nodes.push_back(f);
    }
  }
  return out;
}

std::vector<BoundaryValue> normal_derivative(const ScalarField& e) {
  const Domain& d = e.domain();
  if (d.kind() != DomainKind::HalfBall)
    throw Error(ErrorCode::DomainHasNoFlatBoundary, "normal derivative needs a half-ball domain");
  const double h = d.spacing();
  std::vector<BoundaryValue> out;
  for (std::size_t f : d.mask_nodes()) {
    if (d.node_class(f) != NodeClass::FlatBoundary) continue;
    auto f1 = d.neighbor(f, 0, 1);
    auto f2 = d.neighbor(f, 0, 2);
    if (!f1 || !f2 || !d.in_mask(*f1) || !d.in_mask(*f2)) continue;
    const double d0 = (-3.0 * e[f] + 4.0 * e[*f1] - e[*f2]) / (2.0 * h);
    out.push_back({f, -d0});
  }
  return out;
}

double integrate(const ScalarField& e, std::optional<Region> subregion) {
  const Domain& d = e.domain();
  const int n = d.dimension();
  const double h = d.spacing();
  if (subregion) {
    if (!(subregion->radius > 0.0))
      throw Error(ErrorCode::InvalidArgument, "subregion radius must be positive");
    if (!d.contains(subregion->center))
      throw Error(ErrorCode::SubregionOutsideDomain, "subregion centre is outside the domain");
  }

  NodeIndex lo = d.box_lo();
  NodeIndex hi{};
  for (int k = 0; k < n; ++k) hi[k] = lo[k] + d.box_extent()[k] - 1;
  if (subregion) {
    for (int k = 0; k < n; ++k) {
      const double a = (subregion->center[k] - subregion->radius - d.origin()[k]) / h - 1.0;
      const double b = (subregion->center[k] + subregion->radius - d.origin()[k]) / h + 1.0;
      lo[k] = std::max(lo[k], static_cast<int>(std::floor(a)));
      hi[k] = std::min(hi[k], static_cast<int>(std::ceil(b)));
    }
  }

  const bool identity = d.metric().is_identity();
  const bool half = d.kind() == DomainKind::HalfBall;
  const double half_diag = 0.5 * h * std::sqrt(static_cast<double>(n));
  const double cell = ipow(h, n);
  constexpr int kSub = 4;
  int subsamples = 1;
  for (int k = 0; k < n; ++k) subsamples *= kSub;
  const double sub_weight = cell / subsamples;

  auto inside = [&](const Point& p) {
    if (!d.contains(p)) return false;
    return !subregion || distance(p, subregion->center, n) < subregion->radius;
  };

  auto nearest_mask_node = [&](const NodeIndex& idx, const Point& q) -> std::optional<std::size_t> {
    std::optional<std::size_t> best;
    double best_dist = std::numeric_limits<double>::infinity();
    NodeIndex a{}, b{};
    for (int k = 0; k < n; ++k) {
      a[k] = idx[k] - 1;
      b[k] = idx[k] + 1;
    }
    for_each_index(a, b, n, [&](const NodeIndex& nb) {
      auto g = d.flat_index(nb);
      if (!g || !d.in_mask(*g)) return;
      const double dist = distance(d.position(nb), q, n);
      if (dist < best_dist) {
        best_dist = dist;
        best = g;
      }
    });
    return best;
  };

  double total = 0.0;
  for_each_index(lo, hi, n, [&](const NodeIndex& idx) {
    const Point p = d.position(idx);
    const std::size_t f = *d.flat_index(idx);
    const double dc = distance(p, d.center(), n);
    if (dc - half_diag >= d.euclidean_reach()) return;
    double ds = 0.0;
    if (subregion) {
      ds = distance(p, subregion->center, n);
      if (ds - half_diag >= subregion->radius) return;
    }

    bool full = !subregion || ds + half_diag < subregion->radius;
    if (half && p[0] - 0.5 * h < 0.0) full = false;
    if (full) {
      if (identity) {
        full = dc + half_diag < d.radius();
      } else {
        for (unsigned corner = 0; corner < (1u << n) && full; ++corner) {
          Point q = p;
          for (int k = 0; k < n; ++k) q[k] += (corner & (1u << k)) ? 0.5 * h : -0.5 * h;
          full = d.contains(q);
        }
      }
    }
    if (full && d.in_mask(f)) {
      total += e[f] * d.volume_factor(f) * cell;
      return;
    }

    for (int s = 0; s < subsamples; ++s) {
      Point q = p;
      int code = s;
      for (int k = 0; k < n; ++k) {
        const int j = code % kSub;
        code /= kSub;
        q[k] += ((j + 0.5) / kSub - 0.5) * h;
      }
      if (!inside(q)) continue;
      std::optional<std::size_t> owner;
      if (d.in_mask(f)) {
        owner = f;
      } else {
        owner = nearest_mask_node(idx, q);
      }
      if (!owner) continue;
      total += e[*owner] * d.volume_factor(*owner) * sub_weight;
    }
  });
  return total;
}

double clipping_angle(double y0, double r) {
  if (y0 >= r) return std::numbers::pi;
  return std::acos(-y0 / r);
}

void gauss_legendre(int m, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(m, 0.0);
  weights.assign(m, 0.0);
  for (int i = 0; i < m; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= m; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (m == 1) {
        p1 = x;
        p0 = 1.0;
      }
      dp = m * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    nodes[i] = x;
    weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
}

ShellQuadrature make_shell_quadrature(const Domain& domain, const Point& center,
                                      std::span<const double> radii) {
  using std::numbers::pi;
  const int n = domain.dimension();
  const double h = domain.spacing();
  std::vector<double> gl_x, gl_w;
  gauss_legendre(4, gl_x, gl_w);

  ShellQuadrature q;
  q.center = center;
  for (double r : radii) {
    Shell shell;
    shell.radius = r;
    shell.phi0 = domain.kind() == DomainKind::HalfBall ? clipping_angle(center[0], r) : pi;
    shell.clipped = shell.phi0 < pi;

    // S^{n-2}: directions z (as components 1..n-1) and weights
    std::vector<std::array<double, kMaxDim>> zs;
    std::vector<double> zw;
    if (n == 2) {
      zs = {{-1.0}, {1.0}};
      zw = {1.0, 1.0};
    } else if (n == 3) {
      const int m = std::max(16, static_cast<int>(std::ceil(2.0 * pi * r / h)));
      for (int j = 0; j < m; ++j) {
        const double t = 2.0 * pi * j / m;
        zs.push_back({std::cos(t), std::sin(t)});
        zw.push_back(2.0 * pi / m);
      }
    } else {
      const int m = std::max(8, static_cast<int>(std::ceil(pi * r / (2.0 * h))));
      std::vector<double> cx, cw;
      gauss_legendre(m, cx, cw);
      const int naz = 2 * m;
      for (int a = 0; a < m; ++a) {
        const double s = std::sqrt(std::max(0.0, 1.0 - cx[a] * cx[a]));
        for (int b = 0; b < naz; ++b) {
          const double t = 2.0 * pi * b / naz;
          zs.push_back({s * std::cos(t), s * std::sin(t), cx[a]});
          zw.push_back(cw[a] * 2.0 * pi / naz);
        }
      }
    }

    const int panels = std::max(1, static_cast<int>(std::ceil(pi * r / h)));
    const double width = shell.phi0 / panels;
    const double rn1 = ipow(r, n - 1);
    for (int p = 0; p < panels; ++p) {
      const double a = p * width;
      for (std::size_t g = 0; g < gl_x.size(); ++g) {
        const double phi = a + 0.5 * width * (gl_x[g] + 1.0);
        const double wphi = 0.5 * width * gl_w[g];
        const double sphi = std::sin(phi);
        const double jac = rn1 * ipow(sphi, n - 2) * wphi;
        for (std::size_t z = 0; z < zs.size(); ++z) {
          ShellNode node;
          node.point = center;
          node.point[0] = center[0] + r * std::cos(phi);
          for (int k = 1; k < n; ++k) node.point[k] = center[k] + r * sphi * zs[z][k - 1];
          node.weight = jac * zw[z];
          shell.nodes.push_back(node);
        }
      }
    }
    q.shells.push_back(std::move(shell));
  }
  return q;
}

std::vector<ShellSample> shell_profile(const ScalarField& e, const Point& center,
                                       std::span<const double> radii) {
  const Domain& d = e.domain();
  const int n = d.dimension();
  for (double r : radii) {
    if (r < 4.0 * d.spacing() * (1.0 - 1e-12))
      throw Error(ErrorCode::RadiusBelowResolution, "shell radius below 4h");
  }
  const ShellQuadrature q = make_shell_quadrature(d, center, radii);
  std::vector<ShellSample> out;
  out.reserve(q.shells.size());
  for (const Shell& shell : q.shells) {
    double acc = 0.0;
    for (const ShellNode& node : shell.nodes) {
      auto v = interpolate(e, node.point);
      if (!v) throw Error(ErrorCode::ShellExitsDomain, "shell of radius " +
                                                           std::to_string(shell.radius) +
                                                           " leaves the mask");
      acc += node.weight * *v;
    }
    out.push_back({shell.radius, acc / ipow(shell.radius, n - 1), shell.nodes.size(), shell.clipped});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Weak Neumann subharmonicity

double TestFunction::value(const Point& x, int n) const {
  std::array<double, kMaxDim> a{};
  for (int k = 0; k < kMaxDim; ++k) a[k] = x[k];
  return eval<double>(a, n);
}

double TestFunction::laplacian(const Point& x, int n) const {
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    std::array<Jet, kMaxDim> a{};
    for (int k = 0; k < kMaxDim; ++k) a[k] = Jet(x[k]);
    a[i] = Jet::variable(x[i]);
    sum += eval<Jet>(a, n).dd;
  }
  return -sum;
}

double TestFunction::d_dx0(const Point& x, int n) const {
  std::array<Jet, kMaxDim> a{};
  for (int k = 0; k < kMaxDim; ++k) a[k] = Jet(x[k]);
  a[0] = Jet::variable(x[0]);
  return eval<Jet>(a, n).d;
}

WeakTestSet WeakTestSet::standard(const Domain& domain, std::size_t count) {
  using std::numbers::pi;
  const int n = domain.dimension();
  const Point c = domain.center();
  const double R = domain.radius();
  const bool half = domain.kind() == DomainKind::HalfBall;
  const double limit = 0.95 * R;

  WeakTestSet set;
  double scale = 1.0;
  for (int attempt = 0; attempt < 6 && set.functions.size() < count; ++attempt, scale *= 0.7) {
    set.functions.clear();
    const double supports[] = {0.35 * R * scale, 0.25 * R * scale, 0.18 * R * scale};
    const double shifts[] = {0.0, 0.3, -0.3, 0.5, -0.5};
    int variant = 0;
    for (double rho : supports) {
      std::vector<Point> centres;
      if (half && c[0] < R) {
        for (double s : shifts) {
          Point p = c;
          p[0] = 0.0;
          p[1] = c[1] + s * R;
          centres.push_back(p);
        }
      }
      for (double s : shifts) {
        Point p = c;
        p[1] = c[1] + s * R;
        if (half) p[0] = std::max(c[0], rho) + 0.1 * R * scale;
        centres.push_back(p);
      }
      for (const Point& p : centres) {
        if (distance(p, c, n) + rho >= limit) continue;
        if (half && p[0] != 0.0 && p[0] < rho) continue;
        TestFunction t;
        t.center = p;
        t.support = rho;
        t.alpha = (variant % 2 == 0) ? 0.0 : 0.5;
        t.frequency = (variant % 3 == 0) ? pi / rho : 2.0 * pi / rho;
        t.beta = (variant % 4 < 2) ? 0.0 : 1.0;
        ++variant;
        set.functions.push_back(t);
      }
    }
  }
  if (set.functions.size() < count)
    throw Error(ErrorCode::InvalidArgument, "domain too small for the requested test set");
  return set;
}

WeakTestReport weak_subharmonic_test(const ScalarField& e, const WeakTestSet& tests,
                                     double tolerance) {
  const Domain& d = e.domain();
  const int n = d.dimension();
  WeakTestReport report;
  report.tolerance = tolerance;
  for (const TestFunction& psi : tests.functions) {
    std::vector<double> prod(d.box_size(), kNaN);
    for (std::size_t f : d.mask_nodes()) prod[f] = e[f] * psi.laplacian(d.position(f), n);
    const double v = integrate(ScalarField(e.domain_ptr(), std::move(prod), false));
    report.values.push_back(v);
    if (v > tolerance) report.subharmonic = false;
  }
  return report;
}

}  // namespace mvlab
