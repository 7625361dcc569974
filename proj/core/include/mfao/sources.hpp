#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "mfao/coefficients.hpp"
#include "mfao/field.hpp"

namespace mfao {

/// Angular cap delta: height h^{-(n-1)} on the chordal cap |theta - theta1| < h.
struct AngularDelta {
  Vec3 center{};
  double h = 0.0;
  double height = 0.0;
  std::vector<std::size_t> support;  ///< sorted node indices inside the cap
  double mass = 0.0;                 ///< sum_i w_i delta(theta_i)

  bool contains(std::size_t angle) const;
  double operator()(std::size_t angle) const { return contains(angle) ? height : 0.0; }
};

/// Throws UnresolvedSourceError when no angular node lies inside the cap.
AngularDelta make_angular_delta(const AngularGrid& grid, const Vec3& theta1, double h);

/// Spatial spot on the boundary: height h^{-(n-1)} on |x - x0| < h.
struct SpatialSpot {
  Vec3 x0{};
  double h = 0.0;
  double height = 0.0;

  bool contains(const Vec3& x) const { return norm(x - x0) < h; }
  double operator()(const Vec3& x) const { return contains(x) ? height : 0.0; }
};

SpatialSpot make_spatial_spot(const Domain& domain, const Vec3& x0, double h);

/// Discrete mass of a spot over the face nodes of a boundary quadrature. Throws
/// UnresolvedSourceError when the spot covers no node.
double spot_mass(const SpatialSpot& spot, const BoundaryQuadrature& quadrature);

/// Widths used by the source constructors.
struct SourceScales {
  double spot = 0.0;         ///< spatial radius of boundary spots
  double oscillation = 0.0;  ///< h in e^{i x3 / h}
  double angular = 0.0;      ///< chordal cap radius
};

/// Grid-resolvable widths: spots of at least `spot_cells` spacings (rounded to (m + 1/2) spacings
/// in 2D so that node rows are never split), oscillation wavelength 2 pi h of at least
/// `wavelength_cells` spacings, and angular caps holding a single node.
SourceScales resolvable_scales(const Discretization& disc, double spot_cells = 2.5, double wavelength_cells = 4.0);

/// Incoming point source delta_{x0} delta_{theta1} on Gamma_-; requires theta1 . nu(x0) < 0.
BoundarySource make_point_source(const Discretization& disc, const Vec3& x0, const Vec3& theta1,
                                 const SourceScales& scales);

/// Outgoing detector h^{n-1} delta_{x0} delta_{theta2} on Gamma_+, with h the spot radius;
/// requires theta2 . nu(x0) > 0.
BoundarySource make_point_detector(const Discretization& disc, const Vec3& x0, const Vec3& theta2,
                                   const SourceScales& scales);

/// Plane source delta_{theta1}(theta) e^{i axis . x / h} on Gamma_- (n = 3, theta1 orthogonal to axis).
/// Throws UnresolvedSourceError when 2 pi h is below four grid spacings.
ComplexSource make_oscillatory_source(const Discretization& disc, const Vec3& theta1, const Vec3& axis,
                                      const SourceScales& scales);

/// Configuration of the h-sweep for the ballistic and single-scattering estimates.
struct ScalingAuditOptions {
  /// The detector tube of radius about h (1 + depth) must fit inside the domain for the off-cap
  /// estimate to be in its asymptotic regime; 0.2 is the largest such value in a unit box.
  std::vector<double> h{0.2, 0.1, 0.05};
  /// Defaults keep both caps on the equator of the direction grid, away from its polar clustering.
  Vec3 theta1{0.0, 1.0, 0.0};
  Vec3 axis{1.0, 0.0, 0.0};
  Vec3 theta2{0.0, 0.0, 1.0};
  /// Detector anchor on the boundary; defaults to the exit point of the centre along theta2.
  std::optional<Vec3> x0;
  /// Evaluation points for the forward terms; defaults to points on the theta1 line through the centre.
  std::vector<Vec3> points;
  std::size_t n_polar = 96;
  std::size_t n_azimuth = 192;
  /// March step as a fraction of h.
  double step_fraction = 1.0 / 16.0;
  std::size_t workers = 0;
};

struct ScalingRow {
  double h = 0.0;
  std::size_t cap_nodes = 0;
  double cap_mass = 0.0;
  double jf_sup = 0.0;       ///< sup |Jf|
  double jf_l1 = 0.0;        ///< max_x int |Jf(x, .)|
  double kjf_sup = 0.0;      ///< sup |KJf|
  double kjf_l1 = 0.0;       ///< max_x int |KJf(x, .)|
  double adjoint_offcap = 0.0;  ///< sup |K* J* g| over directions far from theta2
};

struct ScalingAuditReport {
  std::vector<ScalingRow> rows;
  double slope_jf_sup = 0.0;
  double slope_jf_l1 = 0.0;
  double slope_kjf_sup = 0.0;
  double slope_kjf_l1 = 0.0;
  double slope_adjoint_offcap = 0.0;
  /// The multiply scattered remainder needs a full fine-grid solve and is not evaluated here.
  bool remainder_evaluated = false;
  bool jf_sup_ok = false;       ///< slope -2 +- 0.3
  bool kjf_sup_ok = false;      ///< slope in [-0.3, 0.3]
  bool kjf_l1_decays = false;   ///< strictly decreasing along the sweep
  bool adjoint_ok = false;      ///< slope >= 0.8
  bool passed() const { return jf_sup_ok && kjf_sup_ok && kjf_l1_decays && adjoint_ok; }
  std::string summary() const;
};

/// Gridless h-sweep of the collision-expansion terms in n = 3. Every term is evaluated
/// pointwise on a fine direction grid with march steps much smaller than h.
ScalingAuditReport scaling_audit(const Phantom& phantom, const Domain& domain, const ScalingAuditOptions& options);

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace mfao
