#pragma once

#include <cstddef>
#include <vector>

#include "mfao/transport.hpp"

namespace mfao {

/// Plane ultrasound wave cos(Q . x + phase) with the coupling amplitudes a (u00 -> u01) and b (u01 -> u11).
struct UltrasoundProbe {
  Vec3 Q{};
  double phase = 0.0;
  double a = 1.0;
  double b = 1.0;

  double modulation(const Vec3& x) const { return std::cos(dot(Q, x) + phase); }
};

struct CascadeOptions {
  bool compute_u11 = true;
  /// Number of probes solved together in one batched Neumann series.
  std::size_t batch = 16;
};

/// Source, frequency-shifted and coherence intensities for a set of probes.
/// u01 and u11 have one column per (probe, source column), probe-major.
struct CascadeSolution {
  SolveResult u00;
  RadianceField u01;
  RadianceField u11;
  std::vector<UltrasoundProbe> probes;
  std::size_t source_columns = 0;

  std::size_t column(std::size_t probe, std::size_t source_col) const { return probe * source_columns + source_col; }
};

/// Modulated internal source a cos(Q . x + phase) u for every probe and every column of u.
RadianceField modulated_source(const RadianceField& u, const std::vector<UltrasoundProbe>& probes, bool use_b);

CascadeSolution solve_cascade(const Transport& transport, const std::vector<UltrasoundProbe>& probes,
                              const std::vector<BoundarySource>& f, const CascadeOptions& options = {});

/// Frequency-shifted measurements u01 on Gamma_+, one column per (probe, source column).
struct MeasurementSet {
  BoundaryQuadraturePtr quadrature;
  std::vector<UltrasoundProbe> probes;
  std::size_t source_columns = 0;
  BoundaryField values;

  std::size_t column(std::size_t probe, std::size_t source_col) const { return probe * source_columns + source_col; }
};

/// Traces of u01 on Gamma_+ for each probe; only the traces are kept, probes are processed in batches.
MeasurementSet measure_A01(const Transport& transport, const std::vector<UltrasoundProbe>& probes,
                           const SolveResult& u00, const BoundaryQuadraturePtr& quadrature,
                           const CascadeOptions& options = {});
MeasurementSet measure_A01(const Transport& transport, const std::vector<UltrasoundProbe>& probes,
                           const std::vector<BoundarySource>& f, const BoundaryQuadraturePtr& quadrature,
                           const CascadeOptions& options = {});

}  // namespace mfao
