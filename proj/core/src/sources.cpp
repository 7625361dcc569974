#include "mfao/sources.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include "mfao/errors.hpp"
#include "mfao/parallel.hpp"

namespace mfao {

namespace {

Vec3 unit(const Vec3& v, const char* what) {
  const double n = norm(v);
  if (!(n > 0.0)) throw ContractError(std::string(what) + ": direction must be nonzero");
  return (1.0 / n) * v;
}

double min_spacing(const SpatialGrid& grid) {
  double h = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (grid.counts()[a] > 1) h = std::min(h, grid.spacing()[a]);
  }
  return h;
}

double max_spacing(const SpatialGrid& grid) {
  double h = 0.0;
  for (int a = 0; a < 3; ++a) {
    if (grid.counts()[a] > 1) h = std::max(h, grid.spacing()[a]);
  }
  return h;
}

void require_boundary(const Domain& domain, const Vec3& x0, const char* what) {
  if (!domain.on_boundary(x0)) throw ContractError(std::string(what) + ": anchor must lie on the boundary");
}

}  // namespace

bool AngularDelta::contains(std::size_t angle) const {
  return std::binary_search(support.begin(), support.end(), angle);
}

AngularDelta make_angular_delta(const AngularGrid& grid, const Vec3& theta1, double h) {
  if (!(h > 0.0)) throw ContractError("angular delta: h must be positive");
  AngularDelta d;
  d.center = unit(theta1, "angular delta");
  d.h = h;
  d.height = std::pow(h, -(grid.dim() - 1));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (norm(grid.direction(i) - d.center) < h) {
      d.support.push_back(i);
      d.mass += grid.weight(i) * d.height;
    }
  }
  if (d.support.empty()) {
    std::ostringstream os;
    os << "angular delta: no direction of " << grid.describe() << " within " << h << " of the cap centre";
    throw UnresolvedSourceError(os.str());
  }
  return d;
}

SpatialSpot make_spatial_spot(const Domain& domain, const Vec3& x0, double h) {
  if (!(h > 0.0)) throw ContractError("spatial spot: h must be positive");
  require_boundary(domain, x0, "spatial spot");
  return {x0, h, std::pow(h, -(domain.dim() - 1))};
}

double spot_mass(const SpatialSpot& spot, const BoundaryQuadrature& quadrature) {
  // Every face node appears once per angle; count each (face, position) once.
  std::vector<std::pair<int, Vec3>> seen;
  double mass = 0.0;
  for (const auto& s : quadrature.samples()) {
    if (!spot.contains(s.x)) continue;
    const bool dup = std::any_of(seen.begin(), seen.end(),
                                 [&](const auto& p) { return p.first == s.face && norm(p.second - s.x) == 0.0; });
    if (dup) continue;
    seen.emplace_back(s.face, s.x);
    mass += s.area_weight * spot.height;
  }
  if (seen.empty()) throw UnresolvedSourceError("spatial spot: no boundary node within the spot");
  return mass;
}

SourceScales resolvable_scales(const Discretization& disc, double spot_cells, double wavelength_cells) {
  const double dx = min_spacing(disc.spatial);
  SourceScales s;
  if (disc.domain.dim() == 2) {
    const double m = std::ceil(spot_cells - 0.5);
    s.spot = (m + 0.5) * dx;
  } else {
    s.spot = spot_cells * dx;
  }
  s.oscillation = wavelength_cells * max_spacing(disc.spatial) / (2.0 * std::numbers::pi);
  s.angular = 0.6 * disc.angular.min_spacing();
  return s;
}

BoundarySource make_point_source(const Discretization& disc, const Vec3& x0, const Vec3& theta1,
                                 const SourceScales& scales) {
  const Vec3 th = unit(theta1, "point source");
  require_boundary(disc.domain, x0, "point source");
  if (!(dot(th, disc.domain.normal(x0)) < 0.0)) throw ContractError("point source: theta1 must point into the domain");
  const AngularDelta ang = make_angular_delta(disc.angular, th, scales.angular);
  const SpatialSpot spot = make_spatial_spot(disc.domain, x0, scales.spot);
  BoundarySource src;
  src.side = BoundarySide::Incoming;
  src.label = "point-source";
  src.angles = ang.support;
  src.value = [ang, spot](const Vec3& x, std::size_t i) { return ang(i) * spot(x); };
  return src;
}

BoundarySource make_point_detector(const Discretization& disc, const Vec3& x0, const Vec3& theta2,
                                   const SourceScales& scales) {
  const Vec3 th = unit(theta2, "point detector");
  require_boundary(disc.domain, x0, "point detector");
  if (!(dot(th, disc.domain.normal(x0)) > 0.0)) throw ContractError("point detector: theta2 must leave the domain");
  const AngularDelta ang = make_angular_delta(disc.angular, th, scales.angular);
  const SpatialSpot spot = make_spatial_spot(disc.domain, x0, scales.spot);
  const double prefactor = std::pow(scales.spot, disc.domain.dim() - 1);
  BoundarySource src;
  src.side = BoundarySide::Outgoing;
  src.label = "point-detector";
  src.angles = ang.support;
  src.value = [ang, spot, prefactor](const Vec3& x, std::size_t i) { return prefactor * ang(i) * spot(x); };
  return src;
}

ComplexSource make_oscillatory_source(const Discretization& disc, const Vec3& theta1, const Vec3& axis,
                                      const SourceScales& scales) {
  if (disc.domain.dim() != 3) throw ContractError("oscillatory source: requires n = 3");
  const Vec3 th = unit(theta1, "oscillatory source");
  const Vec3 ax = unit(axis, "oscillatory source");
  if (std::abs(dot(th, ax)) > 1e-12) throw ContractError("oscillatory source: theta1 must be orthogonal to the axis");
  const double h = scales.oscillation;
  if (!(h > 0.0)) throw ContractError("oscillatory source: h must be positive");
  const double spacing = max_spacing(disc.spatial);
  if (2.0 * std::numbers::pi * h < 4.0 * spacing) {
    std::ostringstream os;
    os << "oscillatory source: wavelength " << 2.0 * std::numbers::pi * h << " aliases on grid spacing " << spacing;
    throw UnresolvedSourceError(os.str());
  }
  const AngularDelta ang = make_angular_delta(disc.angular, th, scales.angular);
  ComplexSource out;
  out.re.side = out.im.side = BoundarySide::Incoming;
  out.re.label = "oscillatory-re";
  out.im.label = "oscillatory-im";
  out.re.angles = out.im.angles = ang.support;
  out.re.value = [ang, ax, h](const Vec3& x, std::size_t i) { return ang(i) * std::cos(dot(ax, x) / h); };
  out.im.value = [ang, ax, h](const Vec3& x, std::size_t i) { return ang(i) * std::sin(dot(ax, x) / h); };
  return out;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ContractError("loglog_slope: need two or more matching samples");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::string ScalingAuditReport::summary() const {
  std::ostringstream os;
  os << "Jf sup slope " << slope_jf_sup << ", KJf sup slope " << slope_kjf_sup << ", KJf L1 slope " << slope_kjf_l1
     << ", off-cap K*J*g slope " << slope_adjoint_offcap;
  if (!remainder_evaluated) os << ", remainder not evaluated";
  return os.str();
}

namespace {

using cplx = std::complex<double>;

/// Pointwise evaluation of the collision-expansion terms for one h.
class AuditTerms {
 public:
  AuditTerms(const Phantom& ph, const Domain& dom, const AngularGrid& grid, double h, double step)
      : ph_(ph), dom_(dom), grid_(grid), h_(h), step_(step) {}

  double tau(const Vec3& x, const Vec3& y) const {
    if (ph_.sigma.is_constant()) return ph_.sigma.constant_value() * norm(x - y);
    return optical_distance([this](const Vec3& p) { return ph_.sigma(p); }, x, y, step_);
  }

  /// int_0^L e^{-tau(x, x + t dir)} F(x + t dir) dt with L the distance to the boundary along dir.
  template <class F>
  cplx along(const Vec3& x, const Vec3& dir, F&& integrand) const {
    const double L = dom_.exit_distance(x, dir);
    if (L <= 0.0) return 0.0;
    const auto panels = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(L / step_)));
    const double dt = L / static_cast<double>(panels);
    const bool uniform = ph_.sigma.is_constant();
    double tau = 0.0, s_prev = uniform ? 0.0 : ph_.sigma(x);
    cplx acc = 0.5 * dt * integrand(x);
    for (std::size_t k = 1; k <= panels; ++k) {
      const Vec3 y = x + (dt * static_cast<double>(k)) * dir;
      if (uniform) {
        tau = ph_.sigma.constant_value() * dt * static_cast<double>(k);
      } else {
        const double s = ph_.sigma(y);
        tau += 0.5 * dt * (s_prev + s);
        s_prev = s;
      }
      acc += (k == panels ? 0.5 : 1.0) * dt * std::exp(-tau) * integrand(y);
    }
    return acc;
  }

  /// Jf(y, theta_j) for every cap node of the oscillatory plane source.
  void forward_ballistic(const AngularDelta& cap, const Vec3& axis, const Vec3& y, std::vector<cplx>& out) const {
    out.resize(cap.support.size());
    for (std::size_t c = 0; c < cap.support.size(); ++c) {
      const Vec3& th = grid_.direction(cap.support[c]);
      const Vec3 entry = gamma(dom_, y, th, -1);
      out[c] = std::exp(-tau(y, entry)) * cap.height * std::polar(1.0, dot(axis, entry) / h_);
    }
  }

  /// J*g(y, theta_j) for every cap node of the point detector.
  void adjoint_ballistic(const AngularDelta& cap, const SpatialSpot& spot, double prefactor, const Vec3& y,
                         std::vector<cplx>& out) const {
    out.resize(cap.support.size());
    for (std::size_t c = 0; c < cap.support.size(); ++c) {
      const Vec3& th = grid_.direction(cap.support[c]);
      const Vec3 exit = gamma(dom_, y, th, +1);
      out[c] = spot.contains(exit) ? std::exp(-tau(y, exit)) * prefactor * cap.height * spot.height : 0.0;
    }
  }

  /// sum_j w_j k(y, a, b) values[j], with (a, b) = (i, cap node) or (cap node, i).
  cplx scatter(const AngularDelta& cap, const std::vector<cplx>& values, const Vec3& y, std::size_t i,
               bool adjoint) const {
    const double kappa = ph_.kappa(y);
    if (kappa == 0.0) return 0.0;
    cplx acc = 0.0;
    for (std::size_t c = 0; c < cap.support.size(); ++c) {
      if (values[c] == 0.0) continue;
      const std::size_t j = cap.support[c];
      const double p = adjoint ? ph_.angular_kernel(grid_, j, i) : ph_.angular_kernel(grid_, i, j);
      acc += grid_.weight(j) * p * values[c];
    }
    return kappa * acc;
  }

 private:
  const Phantom& ph_;
  const Domain& dom_;
  const AngularGrid& grid_;
  double h_;
  double step_;
};

}  // namespace

ScalingAuditReport scaling_audit(const Phantom& phantom, const Domain& domain, const ScalingAuditOptions& opt) {
  if (domain.dim() != 3) throw ContractError("scaling audit: requires n = 3");
  if (opt.h.size() < 3) throw ContractError("scaling audit: need at least three h values");
  for (std::size_t k = 0; k + 1 < opt.h.size(); ++k) {
    if (std::abs(opt.h[k + 1] / opt.h[k] - 0.5) > 1e-9) throw ContractError("scaling audit: h values must halve");
  }
  const Vec3 th1 = unit(opt.theta1, "scaling audit");
  const Vec3 th2 = unit(opt.theta2, "scaling audit");
  const Vec3 ax = unit(opt.axis, "scaling audit");
  if (std::abs(dot(th1, ax)) > 1e-12 || std::abs(dot(th2, ax)) > 1e-12) {
    throw ContractError("scaling audit: theta1 and theta2 must be orthogonal to the axis");
  }
  const AngularGrid grid = AngularGrid::sphere(opt.n_polar, opt.n_azimuth);
  const Vec3 centre = 0.5 * (domain.lower() + domain.upper());
  const Vec3 x0 = opt.x0 ? *opt.x0 : gamma(domain, centre, th2, +1);
  require_boundary(domain, x0, "scaling audit");

  std::vector<Vec3> points = opt.points;
  if (points.empty()) {
    const double back = domain.exit_distance(centre, -1.0 * th1);
    const double fwd = domain.exit_distance(centre, th1);
    for (double s : {-0.8 * back, 0.0, 0.8 * fwd}) points.push_back(centre + s * th1);
  }
  std::vector<Vec3> detector_points;
  const double depth = domain.exit_distance(x0, -1.0 * th2);
  for (double s : {0.3, 0.6}) detector_points.push_back(x0 - (s * depth) * th2);
  std::vector<std::size_t> offcap;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (std::abs(dot(grid.direction(i), th2)) <= 0.25) offcap.push_back(i);
  }

  const std::size_t na = grid.size();
  const unsigned workers = static_cast<unsigned>(opt.workers);
  ScalingAuditReport rep;
  for (double h : opt.h) {
    ScalingRow row;
    row.h = h;
    const AuditTerms terms(phantom, domain, grid, h, opt.step_fraction * h);
    const AngularDelta cap1 = make_angular_delta(grid, th1, h);
    const AngularDelta cap2 = make_angular_delta(grid, th2, h);
    const SpatialSpot spot = make_spatial_spot(domain, x0, h);
    row.cap_nodes = cap1.support.size();
    row.cap_mass = cap1.mass;

    for (const Vec3& x : points) {
      std::vector<cplx> jf;
      terms.forward_ballistic(cap1, ax, x, jf);
      double l1 = 0.0;
      for (std::size_t c = 0; c < jf.size(); ++c) {
        row.jf_sup = std::max(row.jf_sup, std::abs(jf[c]));
        l1 += grid.weight(cap1.support[c]) * std::abs(jf[c]);
      }
      row.jf_l1 = std::max(row.jf_l1, l1);

      std::vector<double> kjf(na);
      parallel_for(na, workers, [&](std::size_t i) {
        std::vector<cplx> local;
        kjf[i] = std::abs(terms.along(x, -1.0 * grid.direction(i), [&](const Vec3& y) {
          terms.forward_ballistic(cap1, ax, y, local);
          return terms.scatter(cap1, local, y, i, false);
        }));
      });
      double kl1 = 0.0;
      for (std::size_t i = 0; i < na; ++i) {
        row.kjf_sup = std::max(row.kjf_sup, kjf[i]);
        kl1 += grid.weight(i) * kjf[i];
      }
      row.kjf_l1 = std::max(row.kjf_l1, kl1);
    }

    const double prefactor = h * h;
    for (const Vec3& x : detector_points) {
      std::vector<double> vals(offcap.size());
      parallel_for(offcap.size(), workers, [&](std::size_t k) {
        const std::size_t i = offcap[k];
        std::vector<cplx> local;
        vals[k] = std::abs(terms.along(x, grid.direction(i), [&](const Vec3& y) {
          terms.adjoint_ballistic(cap2, spot, prefactor, y, local);
          return terms.scatter(cap2, local, y, i, true);
        }));
      });
      for (double v : vals) row.adjoint_offcap = std::max(row.adjoint_offcap, v);
    }
    rep.rows.push_back(row);
  }

  std::vector<double> hs, a, b, c, d, e;
  for (const auto& r : rep.rows) {
    hs.push_back(r.h);
    a.push_back(r.jf_sup);
    b.push_back(r.jf_l1);
    c.push_back(r.kjf_sup);
    d.push_back(r.kjf_l1);
    e.push_back(r.adjoint_offcap);
  }
  const auto slope = [&](const std::vector<double>& y) {
    return std::all_of(y.begin(), y.end(), [](double v) { return v > 0.0; }) ? loglog_slope(hs, y)
                                                                               : std::numeric_limits<double>::quiet_NaN();
  };
  rep.slope_jf_sup = slope(a);
  rep.slope_jf_l1 = slope(b);
  rep.slope_kjf_sup = slope(c);
  rep.slope_kjf_l1 = slope(d);
  rep.slope_adjoint_offcap = slope(e);
  rep.jf_sup_ok = std::abs(rep.slope_jf_sup + 2.0) <= 0.3;
  rep.kjf_sup_ok = std::abs(rep.slope_kjf_sup) <= 0.3;
  rep.kjf_l1_decays = true;
  for (std::size_t k = 0; k + 1 < d.size(); ++k) rep.kjf_l1_decays = rep.kjf_l1_decays && d[k + 1] < d[k];
  rep.adjoint_ok = rep.slope_adjoint_offcap >= 0.8;
  return rep;
}

}  // namespace mfao
