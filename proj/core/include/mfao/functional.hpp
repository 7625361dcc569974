#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <optional>
#include <vector>

#include "mfao/cascade.hpp"

namespace mfao {

/// Symmetric wavevector lattice Q_m = m * dQ per axis with |m| <= M_a.
/// The full lattice of a grid with odd node counts N_a uses dQ_a = 2 pi / (N_a h_a) and
/// M_a = (N_a - 1) / 2, which makes synthesis the exact inverse of trapezoid analysis.
class QLattice {
 public:
  static QLattice for_grid(const SpatialGrid& grid);
  /// Same spacing as for_grid, restricted to |m_a| <= max_index.
  static QLattice truncated(const SpatialGrid& grid, int max_index);

  std::size_t size() const { return indices_.size(); }
  int dim() const { return dim_; }
  const Vec3& spacing() const { return spacing_; }
  const std::array<int, 3>& half_extent() const { return extent_; }
  const std::array<int, 3>& index(std::size_t k) const { return indices_[k]; }
  Vec3 wavevector(std::size_t k) const;
  std::optional<std::size_t> find(const std::array<int, 3>& m) const;
  /// Lattice position of -Q_k.
  std::size_t opposite(std::size_t k) const;
  /// Q = 0 followed by one representative of every {Q, -Q} pair.
  std::vector<std::size_t> half() const;
  /// Product of the per-axis spacings over the active axes.
  double cell_volume() const;
  /// Largest |Q_a| along each axis.
  Vec3 max_wavevector() const;

 private:
  int dim_ = 2;
  Vec3 spacing_{};
  std::array<int, 3> extent_{};
  std::vector<std::array<int, 3>> indices_;
};

/// Probes with phases 0 and pi/2 for every listed lattice point (phase pi/2 omitted at Q = 0).
std::vector<UltrasoundProbe> lattice_probes(const QLattice& lattice, const std::vector<std::size_t>& points, double a,
                                            double b = 0.0);

/// H(x_n) = sum_i w_i u(x_n, theta_i) v(x_n, theta_i); u and v columns are (re[, im]).
FunctionalField functional_from(const RadianceField& u, const std::vector<std::size_t>& u_cols,
                                const RadianceField& v, const std::vector<std::size_t>& v_cols);

/// Direct functional: solves u00 for f and the adjoint v for g. Each list holds one (real)
/// or two (real, imaginary) sources.
FunctionalField H_oracle(const Transport& transport, const std::vector<BoundarySource>& f,
                         const std::vector<BoundarySource>& g);

/// Fourier coefficients c(Q) = int e^{-i Q.x} H(x) dx on a lattice.
struct CoefficientTable {
  QLattice lattice;
  std::vector<std::complex<double>> values;
  std::vector<bool> present;
  /// Entries derived from their opposite lattice point by the parity of the cosine.
  std::size_t parity_filled = 0;
  /// All measurements carried zero coupling; the coefficients are identically zero.
  bool degenerate = false;
};

/// Trapezoid-rule analysis of a functional on the lattice.
CoefficientTable analyze(const FunctionalField& H, const QLattice& lattice);

/// Assembles c(Q) = (R_0 + i R_{pi/2}) / a with R_phase = int_{Gamma_+} u01 g (theta . n).
/// Missing opposite points are filled from R(-Q) = (R_0, -R_{pi/2}) when parity_fill is set.
/// `g` holds one (real) or two (real, imaginary) detector columns sampled on the measurement quadrature.
CoefficientTable H_hat_from_boundary(const MeasurementSet& measurements, const BoundaryField& g,
                                     const QLattice& lattice, bool parity_fill = true);

/// Pairing int_{Gamma_+} u01 g (theta . n) for one probe column group.
std::complex<double> boundary_pairing(const MeasurementSet& measurements, std::size_t probe, const BoundaryField& g);

/// Left side of the integration-by-parts identity: int_X a cos(Q.x + phase) H dx.
std::complex<double> modulated_integral(const FunctionalField& H, const UltrasoundProbe& probe);

/// Band-limited synthesis H(x_n) = (prod dQ / 2 pi) / e_n sum_Q c(Q) e^{i Q.x_n}, with e_n the
/// trapezoid edge factor; exact inverse of `analyze` on the full lattice.
FunctionalField H_recover(const CoefficientTable& table, const DiscretizationPtr& disc);

struct FunctionalStabilityReport {
  double lhs = 0.0;          ///< sup |H1 - H2|
  double g_sup = 0.0;        ///< sup |g|
  double data_l1 = 0.0;      ///< sum_Q dQ^n sum_phase int_{Gamma_+} |A1 - A2| (theta . n)
  double constant_bound = 0.0;  ///< 2^n / ((2 pi)^n a)
  double rhs = 0.0;          ///< constant_bound * g_sup * data_l1
  double observed_constant = 0.0;  ///< lhs / (g_sup * data_l1)
  bool holds = false;
  double margin() const { return rhs - lhs; }
};

/// Compares two recovered functionals with the boundary data that produced them.
FunctionalStabilityReport stability_gap(const FunctionalField& H1, const FunctionalField& H2,
                                        const MeasurementSet& m1, const MeasurementSet& m2, const BoundaryField& g,
                                        const QLattice& lattice);

}  // namespace mfao
