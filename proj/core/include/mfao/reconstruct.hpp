#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mfao/functional.hpp"
#include "mfao/sources.hpp"

namespace mfao {

/// Directional difference quotient of a functional.
struct DifferenceQuotient {
  std::complex<double> value;
  double s = 0.0;
  /// Bound on the interpolation contribution: corner spread of both stencils divided by s.
  double interpolation_bound = 0.0;
};

/// [H(x) - H(x - s theta2)] / s with H interpolated multilinearly. Throws DomainError when
/// either point leaves the domain.
DifferenceQuotient extract_F(const FunctionalField& H, const Vec3& x, const Vec3& theta2, double s);

/// Same quotient for a functional evaluated pointwise.
DifferenceQuotient extract_F(const std::function<std::complex<double>(const Vec3&)>& H, const Domain& domain,
                             const Vec3& x, const Vec3& theta2, double s);

/// tau(x, gamma_-(x, theta1)) from the backscatter pair F_fwd = F(x, theta1, -theta1),
/// F_bwd = F(x, -theta1, theta1) and the ballistic transmission T = e^{-tau(x1, x2)} of the chord:
/// tau = (log F_bwd - log F_fwd) / 4 - (log T) / 2. Throws LogDomainError on nonpositive input.
double recover_tau(double F_fwd, double F_bwd, double transmission);

/// Derivative of tau sampled at spacing dt along a ray: centred differences inside, second-order
/// one-sided differences at both ends. Throws ContractError for fewer than three samples.
std::vector<double> recover_sigma(const std::vector<double>& tau, double dt);

/// k(x, theta2, theta1) = F e^{tau_out + tau_in}. Throws DomainError when the attenuation
/// exponent exceeds `attenuation_cap`.
double recover_k(double F, double tau_out, double tau_in, double attenuation_cap = 30.0);

/// Source widths implementing 0 < h << s << 1: h = s^2 / diameter, raised to grid resolvability.
SourceScales ratio_policy(const Discretization& disc, double s);

/// Default difference-quotient step: eight grid spacings.
double default_quotient_step(const Discretization& disc);

struct BrokenRayDatum {
  std::string key;
  Vec3 x{};
  Vec3 theta1{};
  Vec3 theta2{};
  double F = 0.0;
  /// Functional at x divided by the source and detector normalization, so that F is its derivative.
  double H = 0.0;
  double s = 0.0;
  double h = 0.0;
  /// |Im| / |Re| of the phase-normalized quotient (0 for real pipelines).
  double imag_ratio = 0.0;
  bool valid = true;
  std::string flag;
};

/// One ray of a line family: tau(x, entry) and its derivative at equally spaced samples.
struct LineRecord {
  std::string key;
  Vec3 entry{};
  Vec3 direction{};
  double dt = 0.0;
  double transmission = 0.0;
  std::vector<double> t;
  std::vector<double> log_F_fwd;
  std::vector<double> log_F_bwd;
  std::vector<double> tau;
  std::vector<double> sigma;
  std::vector<bool> valid;
};

struct SigmaSample {
  Vec3 x{};
  std::size_t node = SIZE_MAX;  ///< grid node when the sample sits on one
  double value = 0.0;
  double truth = std::numeric_limits<double>::quiet_NaN();
  double dispersion = 0.0;      ///< half range of the per-ray estimates
  int count = 0;
  bool interior = false;
  bool valid = false;
};

struct KSample {
  std::string key;
  Vec3 x{};
  Vec3 theta_out{};  ///< theta2
  Vec3 theta_in{};   ///< theta1
  double value = 0.0;
  double truth = std::numeric_limits<double>::quiet_NaN();
  bool mirrored = false;  ///< written as k(x, -theta1, -theta2) from its partner
  bool valid = false;
  std::string flag;
};

struct ReconstructionMetrics {
  double sigma_rel_linf = std::numeric_limits<double>::quiet_NaN();
  double sigma_rel_median = std::numeric_limits<double>::quiet_NaN();
  std::size_t sigma_samples = 0;
  std::size_t sigma_invalid_interior = 0;
  double k_rel_max = std::numeric_limits<double>::quiet_NaN();
  double k_rel_median = std::numeric_limits<double>::quiet_NaN();
  std::size_t k_samples = 0;
  std::size_t k_invalid = 0;
  std::size_t direction_pairs = 0;  ///< distinct (theta2, theta1) pairs with a valid k sample
  double tau_additivity = 0.0;
  double imag_ratio_max = 0.0;
  double F_scale = 0.0;             ///< max |F| over valid broken-ray data
};

struct ReconstructionResult {
  std::string pipeline;
  SourceScales scales;
  double s = 0.0;
  std::vector<SigmaSample> sigma;
  std::vector<KSample> k;
  std::vector<LineRecord> lines;
  std::vector<BrokenRayDatum> data;
  std::vector<std::string> failures;
  ReconstructionMetrics metrics;
  /// Largest chord optical depth -log T over the recorded lines.
  double max_chord_tau() const;
};

/// Interior means at least `spacings` grid spacings from the boundary.
bool is_interior(const Discretization& disc, const Vec3& x, double spacings = 3.0);

/// Fills the ground-truth columns and the metrics from the phantom of `transport`.
void score(ReconstructionResult& result, const Transport& transport, double interior_spacings = 3.0);

struct PointPipelineOptions {
  std::optional<SourceScales> scales;
  double s = 0.0;                 ///< 0 selects eight spacings
  /// Recover every functional from boundary data through the Fourier lattice instead of the direct product.
  bool measured = false;
  std::size_t line_stride = 1;
  std::size_t k_stride = 8;
  double attenuation_cap = 30.0;
  double interior_spacings = 3.0;
};

/// Point-source pipeline in n = 2 on a box: backscatter pairs on every grid row and column give
/// tau and sigma, right-angle crossings of row and column beams give k.
ReconstructionResult run_point_pipeline(const Transport& transport, const PointPipelineOptions& options = {});

struct OscillatoryPipelineOptions {
  std::optional<SourceScales> scales;
  double s = 0.0;  ///< 0 selects eight spacings
  /// Quotient step along the sigma lines, where both beams share one axis; 0 selects four spacings.
  double line_s = 0.0;
  /// Rotation angles alpha of the oscillation axis (0, -sin alpha, cos alpha) about the polar axis.
  std::vector<double> rotations{0.0, 0.7853981633974483, 1.5707963267948966, 2.356194490192345};
  /// Parallel theta1 lines of the first rotation used for sigma.
  std::size_t sigma_lines = 11;
  double line_spacing = 0.0;  ///< 0 selects one grid spacing
  std::size_t k_points = 2;
  std::size_t k_directions = 3;
  std::size_t batch = 24;
  double attenuation_cap = 30.0;
  double interior_spacings = 3.0;
};

/// Oscillatory plane-source pipeline in n = 3: for every rotation of the oscillation axis one
/// complex plane source per direction +-theta1 and point detectors on lines in the plane through
/// the centre orthogonal to the axis.
ReconstructionResult run_oscillatory_pipeline(const Transport& transport, const OscillatoryPipelineOptions& options = {});

/// Surrogates for the coefficient stability estimates evaluated on two reconstructions of the
/// same experiment design. Left sides are differences of reconstructed coefficients.
struct CoefficientStabilityReport {
  double sigma_lhs = 0.0;  ///< max |sigma1 - sigma2| over common samples
  double sigma_rhs = 0.0;  ///< (1/2) C^1 norm of log F1 - log F2 along the rays
  double k_lhs = 0.0;      ///< max |k1 - k2| over common tuples
  double k_rhs = 0.0;      ///< sup e^{tau_in + tau_out} C^1 norm of the normalized functional difference
  std::size_t sigma_pairs = 0;
  std::size_t k_pairs = 0;
  bool sigma_holds() const { return sigma_lhs <= sigma_rhs; }
  bool k_holds() const { return k_lhs <= k_rhs; }
  double sigma_margin() const { return sigma_rhs - sigma_lhs; }
  double k_margin() const { return k_rhs - k_lhs; }
};

CoefficientStabilityReport stability_report(const ReconstructionResult& r1, const ReconstructionResult& r2);

}  // namespace mfao
