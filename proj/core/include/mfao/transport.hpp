#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "mfao/coefficients.hpp"
#include "mfao/field.hpp"

namespace mfao {

struct TransportOptions {
  double step = 0.0;            ///< ray-march step; 0 selects half the grid spacing
  double tol = 1e-8;            ///< Neumann stopping tolerance relative to the first term
  std::size_t max_terms = 200;
  unsigned workers = 1;
};

/// Result of a collision-expansion solve for a batch of columns.
struct SolveResult {
  RadianceField u;
  /// A2 u plus any internal source; with the boundary data it determines u at arbitrary points.
  RadianceField collision;
  /// Incoming boundary data per column (empty for internal-source solves).
  std::vector<BoundarySource> boundary;
  /// history[m][c]: sup norm of the m-th Neumann term of column c.
  std::vector<std::vector<double>> history;
  std::size_t terms = 0;
  /// Largest ratio of successive term norms over all columns.
  double max_ratio = 0.0;
  /// Solution of the adjoint problem, stored as the relabeled forward solve.
  bool adjoint = false;
};

/// Transport operators on a fixed discretization: J, T^{-1}, A2, K = T^{-1} A2 and the
/// collision-expansion solvers. Angular dependence is nodal; spatial sources inside T^{-1}
/// are interpolated multilinearly; sigma is evaluated through the phantom along each ray.
class Transport {
 public:
  Transport(Phantom phantom, DiscretizationPtr disc, TransportOptions options = {});

  const Phantom& phantom() const { return phantom_; }
  const Discretization& disc() const { return *disc_; }
  const DiscretizationPtr& disc_ptr() const { return disc_; }
  const TransportOptions& options() const { return options_; }
  double step() const { return step_; }

  /// J f: one column per boundary source.
  RadianceField ballistic(const std::vector<BoundarySource>& f) const;
  /// T^{-1} S.
  RadianceField lift(const RadianceField& S) const;
  /// A2 w = sum_j w_j k(x, theta_i, theta_j) w(x, theta_j).
  RadianceField scatter(const RadianceField& w) const;
  /// Adjoint scattering built from the kernel at antipodally permuted nodes.
  RadianceField scatter_adjoint(const RadianceField& w) const;
  /// K w = T^{-1} A2 w.
  RadianceField K_apply(const RadianceField& w) const;

  /// u = (1 + K + K^2 + ...) J f.
  SolveResult solve(const std::vector<BoundarySource>& f) const;
  /// u = (1 + K + K^2 + ...) T^{-1} S with zero inflow.
  SolveResult solve_internal(const RadianceField& S) const;
  /// v(x, theta) = u~(x, -theta) with u~ the forward solve for g~(x, theta) = g(x, -theta).
  SolveResult solve_adjoint(const std::vector<BoundarySource>& g) const;

  /// Ballistic value e^{-tau(x, gamma_-)} f(gamma_-, theta_i) at an arbitrary point.
  double ballistic_at(const BoundarySource& f, const Vec3& x, std::size_t angle) const;
  /// T^{-1} S at an arbitrary point for one column of a gridded source.
  double lift_at(const RadianceField& S, const Vec3& x, std::size_t angle, std::size_t col) const;
  /// Solution value at an arbitrary point: J f + T^{-1}(collision).
  double evaluate(const SolveResult& r, const Vec3& x, std::size_t angle, std::size_t col = 0) const;

  /// Trace of a solution on a boundary quadrature (grid values or pointwise evaluation).
  BoundaryField trace(const SolveResult& r, const BoundaryQuadraturePtr& q) const;
  /// Albedo data u00 restricted to Gamma_+.
  BoundaryField albedo(const std::vector<BoundarySource>& f, const BoundaryQuadraturePtr& q) const;

  /// Optical distance between two points using this solver's step.
  double tau(const Vec3& x, const Vec3& y) const;

  /// Integral along the backward ray: int_0^L e^{-tau(x, x - t dir)} s(x - t dir) dt, L to the boundary.
  double lift_function(const std::function<double(const Vec3&)>& s, const Vec3& x, const Vec3& dir,
                       double step) const;

 private:
  SolveResult neumann(RadianceField w0) const;
  template <class Visit>
  void march(const Vec3& x, const Vec3& dir, double step, Visit&& visit) const;

  Phantom phantom_;
  DiscretizationPtr disc_;
  TransportOptions options_;
  double step_;
  std::vector<double> kappa_nodes_;
  bool low_rank_ = true;
  std::array<double, 2> poly_{};
  std::vector<double> dense_;  ///< w_j P_ij when the kernel is not low rank
};

/// Weighted inner product sum_n w_n sum_i w_i u v over X x S for one column of each field.
double inner(const RadianceField& u, std::size_t cu, const RadianceField& v, std::size_t cv);

}  // namespace mfao
