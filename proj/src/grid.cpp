#include "mvlab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "mvlab/error.hpp"

namespace mvlab {

namespace {

Matrix identity_matrix() {
  Matrix m{};
  for (int i = 0; i < kMaxDim; ++i) m[i][i] = 1.0;
  return m;
}

bool cholesky_ok(const Matrix& g, int n) {
  std::array<std::array<double, kMaxDim>, kMaxDim> l{};
  for (int j = 0; j < n; ++j) {
    double d = g[j][j];
    for (int k = 0; k < j; ++k) d -= l[j][k] * l[j][k];
    if (!(d > 0.0)) return false;
    l[j][j] = std::sqrt(d);
    for (int i = j + 1; i < n; ++i) {
      double s = g[i][j];
      for (int k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
      l[i][j] = s / l[j][j];
    }
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j)
      if (std::abs(g[i][j] - g[j][i]) > 1e-12 * (1.0 + std::abs(g[i][j]))) return false;
  return true;
}

}  // namespace

double distance(const Point& a, const Point& b, int n) {
  double s = 0.0;
  for (int k = 0; k < n; ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

double norm_squared(const Point& a, int n) {
  double s = 0.0;
  for (int k = 0; k < n; ++k) s += a[k] * a[k];
  return s;
}

double sphere_volume(int n) {
  using std::numbers::pi;
  switch (n) {
    case 1: return 2.0;
    case 2: return 2.0 * pi;
    case 3: return 4.0 * pi;
    case 4: return 2.0 * pi * pi;
    default: return 2.0 * std::pow(pi, 0.5 * n) / std::tgamma(0.5 * n);
  }
}

// ---------------------------------------------------------------------------
// MetricSpec

MetricSpec::MetricSpec(Entries entries, double declared_deviation, std::string descriptor)
    : entries_(std::move(entries)),
      declared_deviation_(declared_deviation),
      descriptor_(std::move(descriptor)) {}

MetricSpec MetricSpec::identity() { return MetricSpec(); }

MetricSpec MetricSpec::constant_scale(double c) {
  nlohmann::ordered_json d{{"preset", "constant_scale"}, {"coefficient", c}};
  return MetricSpec(
      [c](const Point&) {
        Matrix m = identity_matrix();
        for (int i = 0; i < kMaxDim; ++i) m[i][i] += c;
        return m;
      },
      std::abs(c), d.dump());
}

MetricSpec MetricSpec::conformal_linear(double c, int axis) {
  if (axis < 0 || axis >= kMaxDim) throw Error(ErrorCode::InvalidArgument, "metric axis out of range");
  nlohmann::ordered_json d{{"preset", "conformal_linear"}, {"coefficient", c}, {"axis", axis}};
  return MetricSpec(
      [c, axis](const Point& x) {
        Matrix m = identity_matrix();
        for (int i = 0; i < kMaxDim; ++i) m[i][i] += c * x[axis];
        return m;
      },
      std::abs(c), d.dump());
}

MetricSpec MetricSpec::sine_entry(double c, int entry, int axis) {
  if (axis < 0 || axis >= kMaxDim || entry < 0 || entry >= kMaxDim)
    throw Error(ErrorCode::InvalidArgument, "metric index out of range");
  nlohmann::ordered_json d{
      {"preset", "sine_entry"}, {"coefficient", c}, {"entry", entry}, {"axis", axis}};
  return MetricSpec(
      [c, entry, axis](const Point& x) {
        Matrix m = identity_matrix();
        m[entry][entry] += c * std::sin(x[axis]);
        return m;
      },
      std::abs(c), d.dump());
}

MetricSpec MetricSpec::polynomial(std::vector<PolynomialTerm> terms, double declared_deviation) {
  nlohmann::ordered_json table = nlohmann::ordered_json::array();
  for (const auto& t : terms) {
    if (t.row < 0 || t.row >= kMaxDim || t.col < 0 || t.col >= kMaxDim)
      throw Error(ErrorCode::InvalidArgument, "polynomial metric term index out of range");
    table.push_back({{"row", t.row}, {"col", t.col}, {"coefficient", t.coefficient},
                     {"powers", t.powers}});
  }
  nlohmann::ordered_json d{{"polynomial", table}, {"declared_deviation", declared_deviation}};
  return MetricSpec(
      [terms = std::move(terms)](const Point& x) {
        Matrix m = identity_matrix();
        for (const auto& t : terms) {
          double v = t.coefficient;
          for (int k = 0; k < kMaxDim; ++k)
            for (int p = 0; p < t.powers[k]; ++p) v *= x[k];
          m[t.row][t.col] += v;
          if (t.row != t.col) m[t.col][t.row] += v;
        }
        return m;
      },
      declared_deviation, d.dump());
}

Matrix MetricSpec::at(const Point& x) const {
  return entries_ ? entries_(x) : identity_matrix();
}

MetricFactors metric_factors(const Matrix& g, int n) {
  // Gauss-Jordan with partial pivoting on the leading n x n block.
  std::array<std::array<double, 2 * kMaxDim>, kMaxDim> a{};
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a[i][j] = g[i][j];
    a[i][n + i] = 1.0;
  }
  double det = 1.0;
  for (int c = 0; c < n; ++c) {
    int piv = c;
    for (int r = c + 1; r < n; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    if (a[piv][c] == 0.0) throw Error(ErrorCode::MetricNotPositiveDefinite, "singular metric");
    if (piv != c) {
      std::swap(a[piv], a[c]);
      det = -det;
    }
    det *= a[c][c];
    const double inv = 1.0 / a[c][c];
    for (int j = 0; j < 2 * n; ++j) a[c][j] *= inv;
    for (int r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = a[r][c];
      if (f == 0.0) continue;
      for (int j = 0; j < 2 * n; ++j) a[r][j] -= f * a[c][j];
    }
  }
  if (!(det > 0.0)) throw Error(ErrorCode::MetricNotPositiveDefinite, "nonpositive determinant");
  MetricFactors out;
  out.sqrt_det = std::sqrt(det);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out.inverse[i][j] = a[i][n + j];
  return out;
}

// ---------------------------------------------------------------------------
// Domain

NodeIndex Domain::node_index(std::size_t flat) const {
  NodeIndex idx{};
  for (int k = 0; k < dimension_; ++k) {
    idx[k] = lo_[k] + static_cast<int>((flat / stride_[k]) % static_cast<std::size_t>(extent_[k]));
  }
  return idx;
}

std::optional<std::size_t> Domain::flat_index(const NodeIndex& index) const {
  std::size_t flat = 0;
  for (int k = 0; k < dimension_; ++k) {
    const int off = index[k] - lo_[k];
    if (off < 0 || off >= extent_[k]) return std::nullopt;
    flat += static_cast<std::size_t>(off) * stride_[k];
  }
  return flat;
}

Point Domain::position(const NodeIndex& index) const {
  Point p{};
  for (int k = 0; k < dimension_; ++k) p[k] = origin_[k] + index[k] * spacing_;
  return p;
}

Point Domain::position(std::size_t flat) const { return position(node_index(flat)); }

std::optional<std::size_t> Domain::neighbor(std::size_t flat, int axis, int step) const {
  NodeIndex idx = node_index(flat);
  idx[axis] += step;
  return flat_index(idx);
}

std::optional<std::size_t> Domain::node_at(const Point& p) const {
  NodeIndex idx{};
  for (int k = 0; k < dimension_; ++k) {
    const double s = (p[k] - origin_[k]) / spacing_;
    const double r = std::round(s);
    if (std::abs(s - r) > 1e-9) return std::nullopt;
    idx[k] = static_cast<int>(r);
  }
  return flat_index(idx);
}

std::size_t Domain::nearest_box_node(const Point& p) const {
  NodeIndex idx{};
  for (int k = 0; k < dimension_; ++k) {
    const int i = static_cast<int>(std::lround((p[k] - origin_[k]) / spacing_));
    idx[k] = std::clamp(i, lo_[k], lo_[k] + extent_[k] - 1);
  }
  return *flat_index(idx);
}

double Domain::center_distance(const Point& p) const {
  if (metric_.is_identity()) return distance(p, center_, dimension_);
  Point mid{};
  Point delta{};
  for (int k = 0; k < dimension_; ++k) {
    mid[k] = 0.5 * (p[k] + center_[k]);
    delta[k] = p[k] - center_[k];
  }
  const Matrix g0 = metric_.at(center_);
  const Matrix g1 = metric_.at(mid);
  const Matrix g2 = metric_.at(p);
  double q = 0.0;
  for (int i = 0; i < dimension_; ++i)
    for (int j = 0; j < dimension_; ++j)
      q += delta[i] * delta[j] * (g0[i][j] + 4.0 * g1[i][j] + g2[i][j]) / 6.0;
  return std::sqrt(std::max(q, 0.0));
}

bool Domain::contains(const Point& p) const {
  if (kind_ == DomainKind::HalfBall && p[0] < 0.0) return false;
  return center_distance(p) < radius_;
}

double Domain::volume_factor(std::size_t flat) const {
  if (metric_.is_identity()) return 1.0;
  return metric_factors(metric_.at(position(flat)), dimension_).sqrt_det;
}

void Domain::build_box(const NodeIndex& lo, const NodeIndex& hi) {
  lo_ = {};
  extent_ = {};
  stride_ = {};
  std::size_t total = 1;
  for (int k = dimension_ - 1; k >= 0; --k) {
    lo_[k] = lo[k];
    extent_[k] = hi[k] - lo[k] + 1;
    stride_[k] = total;
    total *= static_cast<std::size_t>(extent_[k]);
  }
  classes_.assign(total, NodeClass::Outside);
}

void Domain::classify() {
  const std::size_t total = classes_.size();
  std::vector<char> inside(total, 0);
  for (std::size_t f = 0; f < total; ++f) inside[f] = contains(position(f)) ? 1 : 0;

  mask_nodes_.clear();
  for (std::size_t f = 0; f < total; ++f) {
    if (!inside[f]) continue;
    mask_nodes_.push_back(f);
    const NodeIndex idx = node_index(f);
    if (kind_ == DomainKind::HalfBall && idx[0] == 0) {
      classes_[f] = NodeClass::FlatBoundary;
      continue;
    }
    bool full = true;
    for (int k = 0; k < dimension_ && full; ++k) {
      for (int s : {-1, 1}) {
        NodeIndex nb = idx;
        nb[k] += s;
        auto nf = flat_index(nb);
        if (!nf || !inside[*nf]) {
          full = false;
          break;
        }
      }
    }
    classes_[f] = full ? NodeClass::Interior : NodeClass::CapBoundary;
  }
}

namespace {

void check_common(double r, double h, int n) {
  if (n < 2 || n > kMaxDim)
    throw Error(ErrorCode::InvalidArgument, "dimension must be 2, 3 or 4");
  if (!(r > 0.0)) throw Error(ErrorCode::InvalidArgument, "radius must be positive");
  if (!(h > 0.0)) throw Error(ErrorCode::InvalidArgument, "spacing must be positive");
  if (h > r / 8.0 * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "spacing " << h << " exceeds r/8 = " << r / 8.0;
    throw Error(ErrorCode::ResolutionTooCoarse, os.str());
  }
}

}  // namespace

std::shared_ptr<const Domain> make_ball_domain(const Point& center, double r, double h, int n,
                                               MetricSpec metric) {
  check_common(r, h, n);
  std::shared_ptr<Domain> d(new Domain());
  d->kind_ = DomainKind::Ball;
  d->dimension_ = n;
  d->radius_ = r;
  d->spacing_ = h;
  d->center_ = {};
  for (int k = 0; k < n; ++k) d->center_[k] = center[k];
  d->origin_ = d->center_;
  d->metric_ = std::move(metric);
  d->reach_ = d->metric_.is_identity() ? r : 1.25 * r;

  const int m = static_cast<int>(std::ceil(d->reach_ / h - 1e-9)) + (d->metric_.is_identity() ? 0 : 1);
  NodeIndex lo{}, hi{};
  for (int k = 0; k < n; ++k) {
    lo[k] = -m;
    hi[k] = m;
  }
  d->build_box(lo, hi);

  if (!d->metric_.is_identity()) {
    for (std::size_t f = 0; f < d->box_size(); ++f) {
      if (!cholesky_ok(d->metric_.at(d->position(f)), n)) {
        throw Error(ErrorCode::MetricNotPositiveDefinite,
                    "metric not symmetric positive definite on the bounding box");
      }
    }
  }
  d->classify();
  d->center_node_ = *d->flat_index(NodeIndex{});
  return d;
}

std::shared_ptr<const Domain> make_half_ball_domain(const Point& y, double r, double h, int n) {
  check_common(r, h, n);
  if (y[0] < 0.0) throw Error(ErrorCode::CenterBelowBoundary, "y0 must be nonnegative");
  const double steps = y[0] / h;
  if (std::abs(steps - std::round(steps)) > 1e-9)
    throw Error(ErrorCode::CenterOffGrid, "y0 must be an integer multiple of the spacing");

  std::shared_ptr<Domain> d(new Domain());
  d->kind_ = DomainKind::HalfBall;
  d->dimension_ = n;
  d->radius_ = r;
  d->spacing_ = h;
  d->center_ = {};
  for (int k = 0; k < n; ++k) d->center_[k] = y[k];
  d->origin_ = d->center_;
  d->origin_[0] = 0.0;
  d->reach_ = r;

  const int y_steps = static_cast<int>(std::lround(steps));
  const int m = static_cast<int>(std::ceil(r / h - 1e-9));
  NodeIndex lo{}, hi{};
  lo[0] = std::max(0, y_steps - m);
  hi[0] = y_steps + m;
  for (int k = 1; k < n; ++k) {
    lo[k] = -m;
    hi[k] = m;
  }
  d->build_box(lo, hi);
  d->classify();
  NodeIndex c{};
  c[0] = y_steps;
  d->center_node_ = *d->flat_index(c);
  return d;
}

double metric_deviation(const MetricSpec& metric, const Domain& domain) {
  if (metric.is_identity()) return 0.0;
  const int n = domain.dimension();
  const double h = domain.spacing();
  double dev = 0.0;
  for (std::size_t node : domain.mask_nodes()) {
    const Point x = domain.position(node);
    const Matrix g = metric.at(x);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) dev = std::max(dev, std::abs(g[i][j] - (i == j ? 1.0 : 0.0)));
    for (int k = 0; k < n; ++k) {
      Point xp = x, xm = x;
      xp[k] += h;
      xm[k] -= h;
      const Matrix gp = metric.at(xp);
      const Matrix gm = metric.at(xm);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          dev = std::max(dev, std::abs(gp[i][j] - gm[i][j]) / (2.0 * h));
    }
  }
  return dev;
}

// ---------------------------------------------------------------------------
// ScalarField

ScalarField::ScalarField(std::shared_ptr<const Domain> domain, std::vector<double> values,
                         bool density)
    : domain_(std::move(domain)), values_(std::move(values)), density_(density) {
  if (!domain_) throw Error(ErrorCode::InvalidArgument, "field without domain");
  if (values_.size() != domain_->box_size())
    throw Error(ErrorCode::InvalidArgument, "field size does not match the domain box");
  for (std::size_t f = 0; f < values_.size(); ++f) {
    if (!domain_->in_mask(f)) {
      values_[f] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    if (!std::isfinite(values_[f]))
      throw Error(ErrorCode::InvalidArgument, "non-finite field value at an in-mask node");
    if (density_ && values_[f] < 0.0)
      throw Error(ErrorCode::InvalidArgument, "negative value in a density field");
  }
}

double ScalarField::at(const Point& p) const {
  if (auto node = domain_->node_at(p); node && domain_->in_mask(*node)) return values_[*node];
  if (auto v = interpolate(*this, p)) return *v;
  throw Error(ErrorCode::ShellExitsDomain, "point is not inside the interpolable region");
}

double ScalarField::sup() const {
  double s = -std::numeric_limits<double>::infinity();
  for (std::size_t node : domain_->mask_nodes()) s = std::max(s, values_[node]);
  return s;
}

std::optional<double> interpolate(const ScalarField& field, const Point& p) {
  const Domain& d = field.domain();
  const int n = d.dimension();
  NodeIndex base{};
  std::array<double, kMaxDim> t{};
  for (int k = 0; k < n; ++k) {
    double s = (p[k] - d.origin()[k]) / d.spacing();
    const double lo = d.box_lo()[k];
    const double hi = lo + d.box_extent()[k] - 1;
    if (s < lo && s > lo - 1e-9) s = lo;
    if (s > hi && s < hi + 1e-9) s = hi;
    if (s < lo || s > hi) return std::nullopt;
    int b = static_cast<int>(std::floor(s));
    double frac = s - b;
    if (b >= static_cast<int>(hi)) {
      b = static_cast<int>(hi) - 1;
      frac = 1.0;
    }
    base[k] = b;
    t[k] = frac;
  }
  double acc = 0.0;
  for (unsigned corner = 0; corner < (1u << n); ++corner) {
    NodeIndex idx = base;
    double w = 1.0;
    for (int k = 0; k < n; ++k) {
      if (corner & (1u << k)) {
        idx[k] += 1;
        w *= t[k];
      } else {
        w *= 1.0 - t[k];
      }
    }
    auto f = d.flat_index(idx);
    if (!f || !d.in_mask(*f)) {
      if (w == 0.0) continue;
      return std::nullopt;
    }
    acc += w * field[*f];
  }
  return acc;
}

}  // namespace mvlab
