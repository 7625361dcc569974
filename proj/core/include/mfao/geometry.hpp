#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mfao/errors.hpp"

namespace mfao {

/// Points and directions. Two-dimensional problems keep the third entry at zero.
using Vec3 = std::array<double, 3>;

inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator-(const Vec3& a) { return {-a[0], -a[1], -a[2]}; }
inline Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }
inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline Vec3 normalized(const Vec3& a) { return (1.0 / norm(a)) * a; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

/// Absolute tolerance for boundary membership, relative to the domain scale.
inline constexpr double kGeometryTolerance = 1e-10;

enum class DomainShape { Box, Ball };

/// Convex physical domain X: an axis-aligned box or a ball, in two or three dimensions.
class Domain {
 public:
  static Domain box(int dim, const Vec3& lower, const Vec3& upper);
  static Domain ball(int dim, const Vec3& center, double radius);

  int dim() const { return dim_; }
  DomainShape shape() const { return shape_; }
  const Vec3& lower() const { return lower_; }
  const Vec3& upper() const { return upper_; }
  const Vec3& center() const { return center_; }
  double radius() const { return radius_; }
  double diameter() const;
  /// Absolute boundary tolerance (kGeometryTolerance times the diameter).
  double tolerance() const { return kGeometryTolerance * diameter(); }

  bool contains(const Vec3& x) const;
  bool on_boundary(const Vec3& x) const;

  /// Distance travelled from x along dir before leaving the closure of X.
  /// Zero when x sits on the boundary and dir points outward.
  double exit_distance(const Vec3& x, const Vec3& dir) const;

  /// Outward unit normal at a boundary point (nearest face for a box).
  Vec3 normal(const Vec3& x) const;

  /// Box faces are numbered 2*axis + (0 lower | 1 upper).
  int face_count() const { return shape_ == DomainShape::Box ? 2 * dim_ : 1; }
  Vec3 face_normal(int face) const;

  std::string describe() const;

 private:
  Domain() = default;
  DomainShape shape_ = DomainShape::Box;
  int dim_ = 3;
  Vec3 lower_{}, upper_{}, center_{};
  double radius_ = 0.0;
};

/// First boundary point reached from x travelling along sign*theta.
Vec3 gamma(const Domain& domain, const Vec3& x, const Vec3& theta, int sign);

struct RayChord {
  Vec3 entry;      ///< gamma_-(x, theta)
  Vec3 exit;       ///< gamma_+(x, theta)
  double length;   ///< |exit - entry|
  bool degenerate; ///< chord shorter than the geometric tolerance
};

RayChord ray_trace(const Domain& domain, const Vec3& x, const Vec3& theta);

/// Quadrature on the unit circle (dim 2) or sphere (dim 3), closed under theta -> -theta.
class AngularGrid {
 public:
  /// `count` equally spaced angles starting at 0; count must be even.
  static AngularGrid circle(std::size_t count);
  /// Gauss-Legendre in the cosine about the x axis times uniform azimuth in the (y,z) plane.
  /// Both orders must be even. The azimuth starts at 0, so directions with zero z component exist.
  static AngularGrid sphere(std::size_t n_polar, std::size_t n_azimuth);

  int dim() const { return dim_; }
  std::size_t size() const { return directions_.size(); }
  const Vec3& direction(std::size_t i) const { return directions_[i]; }
  double weight(std::size_t i) const { return weights_[i]; }
  std::size_t antipode(std::size_t i) const { return antipodes_[i]; }
  const std::vector<Vec3>& directions() const { return directions_; }
  const std::vector<double>& weights() const { return weights_; }
  /// |S^{n-1}|: 2*pi or 4*pi.
  double measure() const;
  std::size_t n_polar() const { return n_polar_; }
  std::size_t n_azimuth() const { return n_azimuth_; }

  std::size_t nearest(const Vec3& dir) const;
  std::optional<std::size_t> find(const Vec3& dir, double tol = 1e-12) const;
  /// Smallest chord |theta_i - theta_j| between distinct nodes.
  double min_spacing() const;
  /// Largest distance from any node to its nearest neighbour.
  double max_spacing() const;

  std::string describe() const;

 private:
  AngularGrid() = default;
  int dim_ = 3;
  std::size_t n_polar_ = 0, n_azimuth_ = 0;
  std::vector<Vec3> directions_;
  std::vector<double> weights_;
  std::vector<std::size_t> antipodes_;
};

/// Multilinear interpolation stencil: up to eight (node, weight) pairs.
struct Stencil {
  std::array<std::size_t, 8> node{};
  std::array<double, 8> weight{};
  int size = 0;
};

/// Uniform node lattice covering the bounding box of the domain.
class SpatialGrid {
 public:
  SpatialGrid(const Vec3& lower, const Vec3& upper, const std::array<std::size_t, 3>& counts);
  static SpatialGrid covering(const Domain& domain, std::size_t nodes_per_axis);

  const Vec3& lower() const { return lower_; }
  const Vec3& upper() const { return upper_; }
  const std::array<std::size_t, 3>& counts() const { return counts_; }
  const Vec3& spacing() const { return spacing_; }
  std::size_t size() const { return counts_[0] * counts_[1] * counts_[2]; }
  int dim() const { return counts_[2] > 1 ? 3 : 2; }
  double min_spacing() const;

  std::size_t index(std::size_t i, std::size_t j, std::size_t k) const {
    return i + counts_[0] * (j + counts_[1] * k);
  }
  std::array<std::size_t, 3> multi_index(std::size_t node) const;
  Vec3 node(std::size_t n) const;
  Vec3 node(std::size_t i, std::size_t j, std::size_t k) const;

  /// Multilinear stencil at x; x is clamped into the grid box.
  Stencil stencil(const Vec3& x) const;
  /// Trapezoid weight of a node (cell volume, halved per boundary axis).
  double quadrature_weight(std::size_t n) const;
  /// Nodes-from-boundary distance in units of grid spacing (minimum over axes).
  std::size_t depth(std::size_t n) const;

  bool operator==(const SpatialGrid& other) const = default;

 private:
  Vec3 lower_{}, upper_{};
  std::array<std::size_t, 3> counts_{1, 1, 1};
  Vec3 spacing_{1.0, 1.0, 1.0};
};

/// Multilinear interpolation of nodal values.
double interpolate(const SpatialGrid& grid, const std::vector<double>& values, const Vec3& x);

/// Composite trapezoid line integral of sigma along [y, x] with n = ceil(|x-y|/step) panels.
double optical_distance(const std::function<double(const Vec3&)>& sigma, const Vec3& x, const Vec3& y,
                        double step);

/// Default ray-march step: half the smallest active grid spacing.
double default_step(const SpatialGrid& grid);

}  // namespace mfao
