#include "mfao/coefficients.hpp"

#include <algorithm>
#include <limits>
#include <numbers>
#include <sstream>

namespace mfao {

ScalarField ScalarField::constant(double value) {
  ScalarField f;
  f.kind_ = Kind::Constant;
  f.value_ = value;
  return f;
}

ScalarField ScalarField::analytic(std::function<double(const Vec3&)> fn) {
  ScalarField f;
  f.kind_ = Kind::Analytic;
  f.fn_ = std::move(fn);
  return f;
}

ScalarField ScalarField::gridded(SpatialGrid grid, std::vector<double> values) {
  if (values.size() != grid.size()) throw ContractError("gridded field: value count does not match grid");
  ScalarField f;
  f.kind_ = Kind::Gridded;
  f.grid_ = std::make_shared<const SpatialGrid>(std::move(grid));
  f.values_ = std::make_shared<const std::vector<double>>(std::move(values));
  return f;
}

double ScalarField::operator()(const Vec3& x) const {
  switch (kind_) {
    case Kind::Constant:
      return value_;
    case Kind::Analytic:
      return fn_(x);
    case Kind::Gridded:
      return interpolate(*grid_, *values_, x);
  }
  return 0.0;
}

std::vector<double> ScalarField::sample(const SpatialGrid& grid) const {
  std::vector<double> out(grid.size());
  for (std::size_t n = 0; n < grid.size(); ++n) out[n] = (*this)(grid.node(n));
  return out;
}

// ---------------------------------------------------------------------------

namespace {

double sphere_measure(int dim) { return dim == 2 ? 2.0 * std::numbers::pi : 4.0 * std::numbers::pi; }

}  // namespace

PhaseFunction PhaseFunction::linear(double g) {
  if (!(std::abs(g) <= 1.0)) throw ContractError("linear phase function needs |g| <= 1");
  return PhaseFunction(Kind::Linear, g);
}

PhaseFunction PhaseFunction::henyey_greenstein(double g) {
  if (!(std::abs(g) < 1.0)) throw ContractError("Henyey-Greenstein needs |g| < 1");
  return PhaseFunction(Kind::HenyeyGreenstein, g);
}

double PhaseFunction::operator()(double t, int dim) const {
  switch (kind_) {
    case Kind::Isotropic:
      return 1.0 / sphere_measure(dim);
    case Kind::Linear:
      return (1.0 + g_ * t) / sphere_measure(dim);
    case Kind::HenyeyGreenstein: {
      const double d = 1.0 + g_ * g_ - 2.0 * g_ * t;
      if (dim == 2) return (1.0 - g_ * g_) / (2.0 * std::numbers::pi * d);
      return (1.0 - g_ * g_) / (4.0 * std::numbers::pi * d * std::sqrt(d));
    }
  }
  return 0.0;
}

std::array<double, 2> PhaseFunction::coefficients(int dim) const {
  if (!is_polynomial()) throw ContractError("phase function is not polynomial");
  const double m = sphere_measure(dim);
  return {1.0 / m, kind_ == Kind::Linear ? g_ / m : 0.0};
}

std::string PhaseFunction::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::Isotropic:
      os << "isotropic";
      break;
    case Kind::Linear:
      os << "linear(g=" << g_ << ")";
      break;
    case Kind::HenyeyGreenstein:
      os << "henyey-greenstein(g=" << g_ << ")";
      break;
  }
  return os.str();
}

double Phantom::angular_kernel(const AngularGrid& angles, std::size_t i, std::size_t j) const {
  if (table) {
    if (table->size != angles.size()) throw ContractError("kernel table does not match the angular grid");
    return (*table)(i, j);
  }
  return phase(dot(angles.direction(i), angles.direction(j)), angles.dim());
}

// ---------------------------------------------------------------------------

std::string ValidationReport::summary() const {
  std::ostringstream os;
  os << "margin=" << min_margin << " min_sigma=" << min_sigma << " min_kernel=" << min_kernel
     << " isotropy_defect=" << max_isotropy_defect << " ratio=" << max_ratio;
  if (!violations.empty()) {
    os << " violations:";
    for (const auto& v : violations) os << ' ' << v;
  }
  return os.str();
}

ValidationReport validate(const Phantom& phantom, const SpatialGrid& grid, const AngularGrid& angles) {
  const std::size_t na = angles.size();
  std::vector<double> P(na * na);
  for (std::size_t i = 0; i < na; ++i) {
    for (std::size_t j = 0; j < na; ++j) P[i * na + j] = phantom.angular_kernel(angles, i, j);
  }
  double row_max = 0.0;
  double p_min = std::numeric_limits<double>::infinity();
  double p_max = 0.0;
  double defect = 0.0;
  for (std::size_t i = 0; i < na; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < na; ++j) {
      const double v = P[i * na + j];
      row += angles.weight(j) * v;
      p_min = std::min(p_min, v);
      p_max = std::max(p_max, std::abs(v));
      const double mirrored = P[angles.antipode(j) * na + angles.antipode(i)];
      defect = std::max(defect, std::abs(v - mirrored));
    }
    row_max = std::max(row_max, row);
  }

  ValidationReport r;
  r.min_margin = std::numeric_limits<double>::infinity();
  r.min_sigma = std::numeric_limits<double>::infinity();
  r.min_kernel = std::numeric_limits<double>::infinity();
  double sigma_inf = std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n < grid.size(); ++n) {
    const Vec3 x = grid.node(n);
    const double s = phantom.sigma(x);
    const double k = phantom.kappa(x);
    const double rho = std::max(0.0, k) * row_max;
    r.max_rho = std::max(r.max_rho, rho);
    r.min_sigma = std::min(r.min_sigma, s);
    sigma_inf = std::min(sigma_inf, s);
    r.min_kernel = std::min({r.min_kernel, k * (k >= 0 ? p_min : p_max)});
    r.max_isotropy_defect = std::max(r.max_isotropy_defect, std::abs(k) * defect);
    if (s - rho < r.min_margin) {
      r.min_margin = s - rho;
      r.worst_margin_point = x;
    }
  }
  r.max_ratio = sigma_inf > 0.0 ? r.max_rho / sigma_inf : std::numeric_limits<double>::infinity();
  if (r.min_sigma < 0.0 || r.min_kernel < 0.0) r.violations.push_back("nonnegativity");
  if (!(r.min_margin > phantom.required_margin)) r.violations.push_back("absorption-margin");
  if (r.max_isotropy_defect > 1e-12) r.violations.push_back("kernel-symmetry");
  return r;
}

ValidationReport require_valid(const Phantom& phantom, const SpatialGrid& grid, const AngularGrid& angles) {
  ValidationReport r = validate(phantom, grid, angles);
  if (!r.passed()) {
    std::ostringstream os;
    os << "phantom '" << phantom.name << "' invalid (" << r.summary() << "); worst margin at ("
       << r.worst_margin_point[0] << ", " << r.worst_margin_point[1] << ", " << r.worst_margin_point[2] << ")";
    throw ValidationError(r.violations.front(), os.str());
  }
  return r;
}

// ---------------------------------------------------------------------------

namespace {

double param(const PhantomParams& p, const std::string& key, double fallback) {
  auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

struct UnitBox {
  Vec3 lower, extent;
  int dim;
  Vec3 operator()(const Vec3& x) const {
    Vec3 u{0.5, 0.5, 0.5};
    for (int a = 0; a < dim; ++a) u[a] = (x[a] - lower[a]) / extent[a];
    return u;
  }
};

double bump(const Vec3& u, const Vec3& c, double w, int dim) {
  double r2 = 0.0;
  for (int a = 0; a < dim; ++a) r2 += (u[a] - c[a]) * (u[a] - c[a]);
  return std::exp(-r2 / (2.0 * w * w));
}

double inclusion(const Vec3& u, const Vec3& c, double r, double eps, int dim) {
  double r2 = 0.0;
  for (int a = 0; a < dim; ++a) r2 += (u[a] - c[a]) * (u[a] - c[a]);
  return 0.5 * (1.0 + std::tanh((r - std::sqrt(r2)) / eps));
}

PhaseFunction phase_from(const PhantomParams& p) {
  const double g = param(p, "g", 0.0);
  const double hg = param(p, "hg", 0.0);
  if (hg != 0.0) return PhaseFunction::henyey_greenstein(hg);
  if (g == 0.0) return PhaseFunction::isotropic();
  return PhaseFunction::linear(g);
}

}  // namespace

std::vector<std::string> phantom_names() { return {"homogeneous", "gaussian-bumps", "two-inclusion"}; }

Phantom phantom_library(const std::string& name, const PhantomParams& params, const Domain& domain) {
  const int dim = domain.dim();
  const UnitBox unit{domain.lower(), domain.upper() - domain.lower(), dim};
  Phantom ph;
  ph.name = name;
  ph.params = params;
  ph.required_margin = param(params, "margin", 0.1);
  ph.phase = phase_from(params);

  if (name == "homogeneous") {
    ph.sigma = ScalarField::constant(param(params, "sigma0", 2.0));
    ph.kappa = ScalarField::constant(param(params, "kappa0", 0.1));
  } else if (name == "gaussian-bumps") {
    const double s0 = param(params, "sigma0", 1.5);
    const double sa = param(params, "sigma_amp", 1.0);
    const double k0 = param(params, "kappa0", 0.1);
    const double ka = param(params, "kappa_amp", 1.0);
    ph.sigma = ScalarField::analytic([=](const Vec3& x) {
      const Vec3 u = unit(x);
      return s0 + sa * (0.4 * bump(u, {0.35, 0.4, 0.5}, 0.15, dim) + 0.3 * bump(u, {0.65, 0.62, 0.5}, 0.12, dim));
    });
    ph.kappa = ScalarField::analytic([=](const Vec3& x) {
      const Vec3 u = unit(x);
      return k0 + ka * 0.1 * bump(u, {0.55, 0.5, 0.5}, 0.18, dim);
    });
  } else if (name == "two-inclusion") {
    const double s0 = param(params, "sigma0", 1.0);
    const double contrast = param(params, "contrast", 1.0);
    const double k0 = param(params, "kappa0", 0.15);
    const double eps = param(params, "edge", 0.03);
    ph.sigma = ScalarField::analytic([=](const Vec3& x) {
      const Vec3 u = unit(x);
      return s0 + contrast * (0.6 * inclusion(u, {0.35, 0.35, 0.5}, 0.15, eps, dim) +
                              0.4 * inclusion(u, {0.68, 0.62, 0.5}, 0.12, eps, dim));
    });
    ph.kappa = ScalarField::analytic([=](const Vec3& x) {
      const Vec3 u = unit(x);
      return k0 + 0.1 * inclusion(u, {0.35, 0.35, 0.5}, 0.15, eps, dim);
    });
  } else {
    throw ConfigError("unknown phantom '" + name + "'");
  }
  return ph;
}

}  // namespace mfao
