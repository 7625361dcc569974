#include "mfao/geometry.hpp"

#include <gsl/gsl_integration.h>

#include <algorithm>
#include <limits>
#include <numbers>
#include <sstream>

namespace mfao {

Domain Domain::box(int dim, const Vec3& lower, const Vec3& upper) {
  if (dim != 2 && dim != 3) throw ContractError("domain dimension must be 2 or 3");
  Domain d;
  d.shape_ = DomainShape::Box;
  d.dim_ = dim;
  d.lower_ = lower;
  d.upper_ = upper;
  if (dim == 2) d.lower_[2] = d.upper_[2] = 0.0;
  for (int a = 0; a < dim; ++a) {
    if (!(d.upper_[a] > d.lower_[a])) throw ContractError("box extents must be positive");
  }
  d.center_ = 0.5 * (d.lower_ + d.upper_);
  return d;
}

Domain Domain::ball(int dim, const Vec3& center, double radius) {
  if (dim != 2 && dim != 3) throw ContractError("domain dimension must be 2 or 3");
  if (!(radius > 0.0)) throw ContractError("ball radius must be positive");
  Domain d;
  d.shape_ = DomainShape::Ball;
  d.dim_ = dim;
  d.center_ = center;
  if (dim == 2) d.center_[2] = 0.0;
  d.radius_ = radius;
  for (int a = 0; a < 3; ++a) {
    const bool active = a < dim;
    d.lower_[a] = active ? d.center_[a] - radius : 0.0;
    d.upper_[a] = active ? d.center_[a] + radius : 0.0;
  }
  return d;
}

double Domain::diameter() const {
  if (shape_ == DomainShape::Ball) return 2.0 * radius_;
  return norm(upper_ - lower_);
}

bool Domain::contains(const Vec3& x) const {
  const double tol = tolerance();
  if (shape_ == DomainShape::Ball) {
    Vec3 r = x - center_;
    if (dim_ == 2) r[2] = 0.0;
    return norm(r) <= radius_ + tol;
  }
  for (int a = 0; a < dim_; ++a) {
    if (x[a] < lower_[a] - tol || x[a] > upper_[a] + tol) return false;
  }
  return true;
}

bool Domain::on_boundary(const Vec3& x) const {
  if (!contains(x)) return false;
  const double tol = 1e3 * tolerance();
  if (shape_ == DomainShape::Ball) {
    Vec3 r = x - center_;
    if (dim_ == 2) r[2] = 0.0;
    return std::abs(norm(r) - radius_) <= tol;
  }
  for (int a = 0; a < dim_; ++a) {
    if (std::abs(x[a] - lower_[a]) <= tol || std::abs(x[a] - upper_[a]) <= tol) return true;
  }
  return false;
}

double Domain::exit_distance(const Vec3& x, const Vec3& dir) const {
  if (shape_ == DomainShape::Ball) {
    Vec3 r = x - center_;
    Vec3 d = dir;
    if (dim_ == 2) r[2] = d[2] = 0.0;
    const double b = dot(r, d);
    const double c = dot(r, r) - radius_ * radius_;
    const double disc = b * b - c;
    if (disc <= 0.0) return 0.0;
    return std::max(0.0, -b + std::sqrt(disc));
  }
  double t = std::numeric_limits<double>::infinity();
  for (int a = 0; a < dim_; ++a) {
    if (dir[a] > 0.0) {
      t = std::min(t, (upper_[a] - x[a]) / dir[a]);
    } else if (dir[a] < 0.0) {
      t = std::min(t, (lower_[a] - x[a]) / dir[a]);
    }
  }
  if (!std::isfinite(t)) throw ContractError("exit_distance: zero direction");
  return std::max(0.0, t);
}

Vec3 Domain::normal(const Vec3& x) const {
  if (shape_ == DomainShape::Ball) {
    Vec3 r = x - center_;
    if (dim_ == 2) r[2] = 0.0;
    return normalized(r);
  }
  int best = 0;
  double best_gap = std::numeric_limits<double>::infinity();
  for (int f = 0; f < 2 * dim_; ++f) {
    const int a = f / 2;
    const double gap = std::abs(x[a] - ((f % 2) ? upper_[a] : lower_[a]));
    if (gap < best_gap) {
      best_gap = gap;
      best = f;
    }
  }
  return face_normal(best);
}

Vec3 Domain::face_normal(int face) const {
  Vec3 n{0.0, 0.0, 0.0};
  n[face / 2] = (face % 2) ? 1.0 : -1.0;
  return n;
}

std::string Domain::describe() const {
  std::ostringstream os;
  if (shape_ == DomainShape::Box) {
    os << "box(" << dim_ << "d, [" << lower_[0] << "," << upper_[0] << "]x[" << lower_[1] << "," << upper_[1]
       << "]";
    if (dim_ == 3) os << "x[" << lower_[2] << "," << upper_[2] << "]";
    os << ")";
  } else {
    os << "ball(" << dim_ << "d, r=" << radius_ << ")";
  }
  return os.str();
}

Vec3 gamma(const Domain& domain, const Vec3& x, const Vec3& theta, int sign) {
  if (!domain.contains(x)) throw DomainError("gamma: point outside domain");
  const Vec3 dir = (sign >= 0 ? 1.0 : -1.0) * theta;
  return x + domain.exit_distance(x, dir) * dir;
}

RayChord ray_trace(const Domain& domain, const Vec3& x, const Vec3& theta) {
  RayChord chord{};
  chord.entry = gamma(domain, x, theta, -1);
  chord.exit = gamma(domain, x, theta, +1);
  chord.length = norm(chord.exit - chord.entry);
  chord.degenerate = chord.length < domain.tolerance();
  return chord;
}

// ---------------------------------------------------------------------------

AngularGrid AngularGrid::circle(std::size_t count) {
  if (count < 2 || count % 2 != 0) throw ContractError("circle quadrature needs an even node count");
  AngularGrid g;
  g.dim_ = 2;
  g.n_polar_ = 1;
  g.n_azimuth_ = count;
  g.directions_.resize(count);
  g.weights_.assign(count, 2.0 * std::numbers::pi / static_cast<double>(count));
  g.antipodes_.resize(count);
  const std::size_t half = count / 2;
  for (std::size_t i = 0; i < half; ++i) {
    const double phi = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(count);
    g.directions_[i] = {std::cos(phi), std::sin(phi), 0.0};
    g.directions_[i + half] = -g.directions_[i];
    g.antipodes_[i] = i + half;
    g.antipodes_[i + half] = i;
  }
  return g;
}

AngularGrid AngularGrid::sphere(std::size_t n_polar, std::size_t n_azimuth) {
  if (n_polar < 2 || n_polar % 2 != 0) throw ContractError("polar order must be even");
  if (n_azimuth < 2 || n_azimuth % 2 != 0) throw ContractError("azimuth count must be even");
  gsl_integration_glfixed_table* table = gsl_integration_glfixed_table_alloc(n_polar);
  std::vector<double> mu(n_polar), w(n_polar);
  for (std::size_t k = 0; k < n_polar; ++k) {
    gsl_integration_glfixed_point(-1.0, 1.0, k, &mu[k], &w[k], table);
  }
  gsl_integration_glfixed_table_free(table);
  std::vector<std::size_t> order(n_polar);
  for (std::size_t k = 0; k < n_polar; ++k) order[k] = k;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return mu[a] < mu[b]; });

  AngularGrid g;
  g.dim_ = 3;
  g.n_polar_ = n_polar;
  g.n_azimuth_ = n_azimuth;
  const std::size_t n = n_polar * n_azimuth;
  g.directions_.resize(n);
  g.weights_.resize(n);
  g.antipodes_.resize(n);
  const double dphi = 2.0 * std::numbers::pi / static_cast<double>(n_azimuth);
  auto idx = [&](std::size_t k, std::size_t m) { return k * n_azimuth + m; };
  // Lower hemisphere (mu < 0) is generated, the upper one is its exact negation.
  for (std::size_t k = 0; k < n_polar / 2; ++k) {
    const double muk = mu[order[k]];
    // Symmetrize weights of mirrored nodes.
    const double wk = 0.5 * (w[order[k]] + w[order[n_polar - 1 - k]]);
    const double s = std::sqrt(std::max(0.0, 1.0 - muk * muk));
    for (std::size_t m = 0; m < n_azimuth; ++m) {
      const double phi = dphi * static_cast<double>(m);
      double c = std::cos(phi), sn = std::sin(phi);
      if (4 * m == n_azimuth || 4 * m == 3 * n_azimuth) c = 0.0;
      if (2 * m == n_azimuth) sn = 0.0;
      const std::size_t i = idx(k, m);
      const std::size_t j = idx(n_polar - 1 - k, (m + n_azimuth / 2) % n_azimuth);
      g.directions_[i] = {muk, s * c, s * sn};
      g.directions_[j] = -g.directions_[i];
      g.weights_[i] = g.weights_[j] = wk * dphi;
      g.antipodes_[i] = j;
      g.antipodes_[j] = i;
    }
  }
  return g;
}

double AngularGrid::measure() const { return dim_ == 2 ? 2.0 * std::numbers::pi : 4.0 * std::numbers::pi; }

std::size_t AngularGrid::nearest(const Vec3& dir) const {
  std::size_t best = 0;
  double best_dot = -2.0;
  for (std::size_t i = 0; i < directions_.size(); ++i) {
    const double d = dot(directions_[i], dir);
    if (d > best_dot) {
      best_dot = d;
      best = i;
    }
  }
  return best;
}

std::optional<std::size_t> AngularGrid::find(const Vec3& dir, double tol) const {
  const std::size_t i = nearest(dir);
  if (norm(directions_[i] - dir) <= tol) return i;
  return std::nullopt;
}

double AngularGrid::min_spacing() const {
  double best = 2.0;
  for (std::size_t i = 0; i < size(); ++i) {
    for (std::size_t j = i + 1; j < size(); ++j) best = std::min(best, norm(directions_[i] - directions_[j]));
  }
  return best;
}

double AngularGrid::max_spacing() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < size(); ++i) {
    double nearest_gap = 2.0;
    for (std::size_t j = 0; j < size(); ++j) {
      if (i != j) nearest_gap = std::min(nearest_gap, norm(directions_[i] - directions_[j]));
    }
    worst = std::max(worst, nearest_gap);
  }
  return worst;
}

std::string AngularGrid::describe() const {
  std::ostringstream os;
  if (dim_ == 2) {
    os << "circle(" << size() << ")";
  } else {
    os << "sphere(" << n_polar_ << "x" << n_azimuth_ << ")";
  }
  return os.str();
}

// ---------------------------------------------------------------------------

SpatialGrid::SpatialGrid(const Vec3& lower, const Vec3& upper, const std::array<std::size_t, 3>& counts)
    : lower_(lower), upper_(upper), counts_(counts) {
  for (int a = 0; a < 3; ++a) {
    if (counts_[a] == 0) throw ContractError("grid counts must be positive");
    if (counts_[a] == 1) {
      spacing_[a] = 1.0;
      upper_[a] = lower_[a];
    } else {
      spacing_[a] = (upper_[a] - lower_[a]) / static_cast<double>(counts_[a] - 1);
      if (!(spacing_[a] > 0.0)) throw ContractError("grid spacing must be positive");
    }
  }
}

SpatialGrid SpatialGrid::covering(const Domain& domain, std::size_t nodes_per_axis) {
  if (nodes_per_axis < 2) throw ContractError("grid needs at least two nodes per axis");
  std::array<std::size_t, 3> counts{nodes_per_axis, nodes_per_axis, domain.dim() == 3 ? nodes_per_axis : 1};
  return SpatialGrid(domain.lower(), domain.upper(), counts);
}

double SpatialGrid::min_spacing() const {
  double s = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (counts_[a] > 1) s = std::min(s, spacing_[a]);
  }
  return s;
}

std::array<std::size_t, 3> SpatialGrid::multi_index(std::size_t node) const {
  const std::size_t i = node % counts_[0];
  const std::size_t rest = node / counts_[0];
  return {i, rest % counts_[1], rest / counts_[1]};
}

Vec3 SpatialGrid::node(std::size_t i, std::size_t j, std::size_t k) const {
  return {lower_[0] + spacing_[0] * static_cast<double>(i), lower_[1] + spacing_[1] * static_cast<double>(j),
          counts_[2] > 1 ? lower_[2] + spacing_[2] * static_cast<double>(k) : lower_[2]};
}

Vec3 SpatialGrid::node(std::size_t n) const {
  const auto m = multi_index(n);
  return node(m[0], m[1], m[2]);
}

Stencil SpatialGrid::stencil(const Vec3& x) const {
  std::array<std::size_t, 3> base{0, 0, 0};
  std::array<double, 3> frac{0.0, 0.0, 0.0};
  int active = 0;
  std::array<int, 3> axes{};
  for (int a = 0; a < 3; ++a) {
    if (counts_[a] < 2) continue;
    double u = (x[a] - lower_[a]) / spacing_[a];
    const double top = static_cast<double>(counts_[a] - 1);
    u = std::clamp(u, 0.0, top);
    double cell = std::floor(u);
    if (cell >= top) cell = top - 1.0;
    base[a] = static_cast<std::size_t>(cell);
    frac[a] = u - cell;
    axes[active++] = a;
  }
  Stencil s;
  s.size = 1 << active;
  for (int c = 0; c < s.size; ++c) {
    std::array<std::size_t, 3> m = base;
    double w = 1.0;
    for (int b = 0; b < active; ++b) {
      const int a = axes[b];
      if (c & (1 << b)) {
        m[a] += 1;
        w *= frac[a];
      } else {
        w *= 1.0 - frac[a];
      }
    }
    s.node[c] = index(m[0], m[1], m[2]);
    s.weight[c] = w;
  }
  return s;
}

double SpatialGrid::quadrature_weight(std::size_t n) const {
  const auto m = multi_index(n);
  double w = 1.0;
  for (int a = 0; a < 3; ++a) {
    if (counts_[a] < 2) continue;
    double h = spacing_[a];
    if (m[a] == 0 || m[a] == counts_[a] - 1) h *= 0.5;
    w *= h;
  }
  return w;
}

std::size_t SpatialGrid::depth(std::size_t n) const {
  const auto m = multi_index(n);
  std::size_t d = std::numeric_limits<std::size_t>::max();
  for (int a = 0; a < 3; ++a) {
    if (counts_[a] < 2) continue;
    d = std::min({d, m[a], counts_[a] - 1 - m[a]});
  }
  return d;
}

double interpolate(const SpatialGrid& grid, const std::vector<double>& values, const Vec3& x) {
  const Stencil s = grid.stencil(x);
  double v = 0.0;
  for (int c = 0; c < s.size; ++c) v += s.weight[c] * values[s.node[c]];
  return v;
}

double default_step(const SpatialGrid& grid) {
  double h = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (grid.counts()[a] > 1) h = std::min(h, grid.spacing()[a]);
  }
  return 0.5 * h;
}

double optical_distance(const std::function<double(const Vec3&)>& sigma, const Vec3& x, const Vec3& y,
                        double step) {
  if (!(step > 0.0)) throw ContractError("optical_distance: step must be positive");
  const Vec3 d = y - x;
  const double len = norm(d);
  if (len == 0.0) return 0.0;
  const auto panels = static_cast<std::size_t>(std::ceil(len / step));
  const double h = len / static_cast<double>(panels);
  const Vec3 u = (1.0 / len) * d;
  double sum = 0.5 * (sigma(x) + sigma(y));
  for (std::size_t i = 1; i < panels; ++i) sum += sigma(x + (h * static_cast<double>(i)) * u);
  return sum * h;
}

}  // namespace mfao
