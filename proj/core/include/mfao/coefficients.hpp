#pragma once

#include <array>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "mfao/geometry.hpp"

namespace mfao {

/// A scalar function on X: constant, analytic, or multilinearly interpolated grid samples.
class ScalarField {
 public:
  ScalarField() = default;
  static ScalarField constant(double value);
  static ScalarField analytic(std::function<double(const Vec3&)> fn);
  static ScalarField gridded(SpatialGrid grid, std::vector<double> values);

  double operator()(const Vec3& x) const;

  bool is_constant() const { return kind_ == Kind::Constant; }
  bool is_gridded() const { return kind_ == Kind::Gridded; }
  double constant_value() const { return value_; }
  const SpatialGrid& grid() const { return *grid_; }
  const std::vector<double>& values() const { return *values_; }

  std::vector<double> sample(const SpatialGrid& grid) const;

 private:
  enum class Kind { Constant, Analytic, Gridded };
  Kind kind_ = Kind::Constant;
  double value_ = 0.0;
  std::function<double(const Vec3&)> fn_;
  std::shared_ptr<const SpatialGrid> grid_;
  std::shared_ptr<const std::vector<double>> values_;
};

/// Even phase function p(theta . theta') normalized so that its integral over the sphere is one.
class PhaseFunction {
 public:
  enum class Kind { Isotropic, Linear, HenyeyGreenstein };

  static PhaseFunction isotropic() { return PhaseFunction(Kind::Isotropic, 0.0); }
  /// p(t) proportional to 1 + g t, |g| <= 1.
  static PhaseFunction linear(double g);
  static PhaseFunction henyey_greenstein(double g);

  double operator()(double t, int dim) const;

  Kind kind() const { return kind_; }
  double anisotropy() const { return g_; }
  /// True when p is a polynomial of degree <= 1, i.e. A2 has a low-rank angular factor.
  bool is_polynomial() const { return kind_ != Kind::HenyeyGreenstein; }
  /// Normalized polynomial coefficients {c0, c1}: p(t) = c0 + c1 t.
  std::array<double, 2> coefficients(int dim) const;
  std::string describe() const;

 private:
  PhaseFunction(Kind kind, double g) : kind_(kind), g_(g) {}
  Kind kind_;
  double g_;
};

/// Fully tabulated angular kernel P(i, j) on a specific angular grid; k = kappa(x) P(i, j).
struct KernelTable {
  std::size_t size = 0;
  std::vector<double> values;  ///< row-major, size*size
  double operator()(std::size_t i, std::size_t j) const { return values[i * size + j]; }
};

/// Optical coefficients: absorption sigma and kernel k(x, theta_i, theta_j) = kappa(x) p(theta_i . theta_j).
struct Phantom {
  std::string name = "custom";
  ScalarField sigma;
  ScalarField kappa;
  PhaseFunction phase = PhaseFunction::isotropic();
  std::shared_ptr<const KernelTable> table;
  /// Subcriticality margin c that validation requires: inf(sigma - rho) > c.
  double required_margin = 0.1;
  std::map<std::string, double> params;

  /// Angular factor P(i, j) of the kernel on the given grid.
  double angular_kernel(const AngularGrid& angles, std::size_t i, std::size_t j) const;
  double kernel(const Vec3& x, const AngularGrid& angles, std::size_t i, std::size_t j) const {
    return kappa(x) * angular_kernel(angles, i, j);
  }
};

struct ValidationReport {
  double min_margin = 0.0;   ///< min over nodes of sigma - rho
  double min_sigma = 0.0;
  double min_kernel = 0.0;
  double max_isotropy_defect = 0.0;
  double max_rho = 0.0;
  double max_ratio = 0.0;    ///< sup rho / inf sigma
  Vec3 worst_margin_point{};
  std::vector<std::string> violations;  ///< condition names that failed
  bool passed() const { return violations.empty(); }
  std::string summary() const;
};

/// Checks nonnegativity, the absorption margin and the kernel symmetry at every grid node.
ValidationReport validate(const Phantom& phantom, const SpatialGrid& grid, const AngularGrid& angles);

/// As validate, but throws ValidationError naming the first failed condition.
ValidationReport require_valid(const Phantom& phantom, const SpatialGrid& grid, const AngularGrid& angles);

using PhantomParams = std::map<std::string, double>;

/// Names accepted by phantom_library.
std::vector<std::string> phantom_names();

/// Analytic phantom families placed relative to the domain bounding box:
/// homogeneous, gaussian-bumps, two-inclusion.
Phantom phantom_library(const std::string& name, const PhantomParams& params, const Domain& domain);

}  // namespace mfao
