#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "mfao/geometry.hpp"

namespace mfao {

/// Domain, spatial grid and angular quadrature shared by every field of one experiment.
struct Discretization {
  Domain domain;
  SpatialGrid spatial;
  AngularGrid angular;

  static std::shared_ptr<const Discretization> make(Domain domain, std::size_t nodes_per_axis,
                                                    AngularGrid angular);
  std::string describe() const;
};
using DiscretizationPtr = std::shared_ptr<const Discretization>;

/// A batch of real radiance columns u_c(x_n, theta_i), stored [angle][node][column].
/// Complex quantities are carried as (real, imaginary) column pairs.
class RadianceField {
 public:
  RadianceField() = default;
  explicit RadianceField(DiscretizationPtr disc, std::size_t columns = 1);

  const Discretization& disc() const { return *disc_; }
  const DiscretizationPtr& disc_ptr() const { return disc_; }
  std::size_t nodes() const { return nodes_; }
  std::size_t angles() const { return angles_; }
  std::size_t columns() const { return columns_; }
  bool empty() const { return data_.empty(); }

  std::size_t offset(std::size_t angle, std::size_t node) const { return (angle * nodes_ + node) * columns_; }
  double& operator()(std::size_t angle, std::size_t node, std::size_t col = 0) {
    return data_[offset(angle, node) + col];
  }
  double operator()(std::size_t angle, std::size_t node, std::size_t col = 0) const {
    return data_[offset(angle, node) + col];
  }
  double* row(std::size_t angle, std::size_t node) { return data_.data() + offset(angle, node); }
  const double* row(std::size_t angle, std::size_t node) const { return data_.data() + offset(angle, node); }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  RadianceField select_columns(const std::vector<std::size_t>& cols) const;
  void assign_column(std::size_t col, const RadianceField& src, std::size_t src_col);

  double sup_norm() const;
  std::vector<double> sup_norms() const;
  /// Angular L1 norm sum_i w_i |u(x_n, theta_i)| of one column.
  double angular_l1(std::size_t node, std::size_t col = 0) const;

  RadianceField& operator+=(const RadianceField& other);
  RadianceField& operator-=(const RadianceField& other);
  RadianceField& operator*=(double s);

  /// w(x, theta) -> w(x, -theta).
  RadianceField antipodal() const;

 private:
  DiscretizationPtr disc_;
  std::size_t nodes_ = 0, angles_ = 0, columns_ = 0;
  std::vector<double> data_;
};

enum class BoundarySide { Incoming, Outgoing };

/// Real boundary data f(x, theta_i) on Gamma_- (Incoming) or Gamma_+ (Outgoing).
/// `angles` lists the nodes where the data may be nonzero; empty means all.
struct BoundarySource {
  BoundarySide side = BoundarySide::Incoming;
  std::string label;
  std::function<double(const Vec3&, std::size_t)> value;
  std::vector<std::size_t> angles;

  double operator()(const Vec3& x, std::size_t angle) const { return value(x, angle); }
  bool supports(std::size_t angle) const;
};

/// Complex boundary data as a pair of real sources.
struct ComplexSource {
  BoundarySource re;
  BoundarySource im;
};

/// theta -> -theta relabeling: data on one side of the phase-space boundary becomes data on the other.
BoundarySource reflect(const BoundarySource& g, const AngularGrid& angles);

/// Uniform constant data on all of one boundary side.
BoundarySource constant_source(double value, BoundarySide side = BoundarySide::Incoming);

/// One point of the phase-space boundary quadrature.
struct BoundarySample {
  Vec3 x{};
  Vec3 normal{};
  std::size_t node = kNoNode;   ///< grid node at x, or kNoNode for off-grid samples
  std::size_t angle = 0;
  int face = 0;
  double cos_normal = 0.0;      ///< theta . nu(x)
  double area_weight = 0.0;
  double weight = 0.0;          ///< area_weight * angular weight * |theta . nu|
  static constexpr std::size_t kNoNode = std::numeric_limits<std::size_t>::max();
};

/// Tensor quadrature of one side of the phase-space boundary: face nodes (box) or
/// uniformly sampled sphere points (ball) times the angular nodes on that side.
class BoundaryQuadrature {
 public:
  static std::shared_ptr<const BoundaryQuadrature> build(const DiscretizationPtr& disc, BoundarySide side);

  BoundarySide side() const { return side_; }
  const std::vector<BoundarySample>& samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  const DiscretizationPtr& disc() const { return disc_; }
  /// True when every sample lies on a grid node, so traces are read from gridded fields.
  bool on_grid() const { return on_grid_; }

 private:
  DiscretizationPtr disc_;
  BoundarySide side_ = BoundarySide::Outgoing;
  std::vector<BoundarySample> samples_;
  bool on_grid_ = true;
};
using BoundaryQuadraturePtr = std::shared_ptr<const BoundaryQuadrature>;

/// Values on a boundary quadrature, one or more real columns per sample.
struct BoundaryField {
  BoundaryQuadraturePtr quadrature;
  std::size_t columns = 0;
  std::vector<double> values;  ///< [sample][column]

  double operator()(std::size_t sample, std::size_t col = 0) const { return values[sample * columns + col]; }
  double& operator()(std::size_t sample, std::size_t col = 0) { return values[sample * columns + col]; }
  /// Sum over samples of weight * |value| for one column.
  double weighted_l1(std::size_t col = 0) const;
};

/// Samples real boundary data on a quadrature of the matching side.
BoundaryField sample_boundary(const BoundaryQuadraturePtr& quadrature, const std::vector<BoundarySource>& data);

enum class Provenance : unsigned char { Oracle = 0, FourierRecovered = 1, Synthetic = 2 };
std::string to_string(Provenance p);

/// Internal functional H on the spatial grid.
struct FunctionalField {
  DiscretizationPtr disc;
  std::vector<std::complex<double>> values;
  Provenance provenance = Provenance::Oracle;
  std::string label;

  std::size_t size() const { return values.size(); }
  std::vector<double> real() const;
  std::vector<double> imag() const;
  double sup_norm() const;
};

}  // namespace mfao
