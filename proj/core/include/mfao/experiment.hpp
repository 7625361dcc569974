#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mfao/reconstruct.hpp"

namespace mfao {

/// Boundary data of an experiment. `kind` is one of smooth, constant or point.
struct BoundarySpec {
  std::string kind = "smooth";
  double amplitude = 1.0;
  /// smooth: amplitude (1 + 0.4 cos(wave . x + 0.1 i)).
  Vec3 wave{2.0, 1.5, 0.0};
  /// point: spot centre on the boundary and direction.
  Vec3 x0{};
  Vec3 theta{};

  bool operator==(const BoundarySpec&) const = default;
};

struct ExperimentConfig {
  // Domain and grids.
  std::string shape = "box";  ///< box or ball
  int dim = 2;
  Vec3 lower{0.0, 0.0, 0.0};
  Vec3 upper{1.0, 1.0, 0.0};
  Vec3 center{0.5, 0.5, 0.0};
  double radius = 0.5;
  std::size_t nodes = 33;
  std::size_t angles = 16;  ///< circle nodes (n = 2)
  std::size_t n_polar = 8;  ///< sphere orders (n = 3)
  std::size_t n_azimuth = 16;

  // Phantom.
  std::string phantom = "gaussian-bumps";
  std::map<std::string, double> phantom_params;
  /// Added to one off-diagonal entry of the tabulated angular kernel; nonzero breaks its symmetry.
  double kernel_skew = 0.0;

  // Transport.
  double step = 0.0;
  double tol = 1e-8;
  std::size_t max_terms = 200;

  // Probe lattice: |m_a| <= probe_max_index, or the full grid lattice when negative.
  int probe_max_index = 2;
  double a = 1.0;
  double b = 1.0;
  std::size_t batch = 16;

  BoundarySpec source;
  BoundarySpec detector;

  // Reconstruction.
  std::string pipeline = "oracle";  ///< oracle or measured
  double s = 0.0;
  std::vector<double> rotations{0.0};
  std::size_t sigma_lines = 11;
  std::size_t line_stride = 1;
  std::size_t k_stride = 8;

  // Verification.
  std::size_t verify_samples = 16;
  double adjoint_tol = 1e-10;
  double identity_tol = 0.02;

  std::string output = "out";
  std::uint64_t seed = 0;
  unsigned workers = 1;

  bool operator==(const ExperimentConfig&) const = default;
};

/// Parses JSON text; throws ConfigError naming the offending key. Unknown keys are rejected.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::string& path);
/// Canonical JSON text with sorted keys; parse_config(emit_config(c)) == c.
std::string emit_config(const ExperimentConfig& config);
/// Throws ConfigError when a cross-reference does not resolve or a parameter is out of range.
void check_config(const ExperimentConfig& config);

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

/// Discretization, phantom, transport and boundary data built from a configuration.
class Experiment {
 public:
  explicit Experiment(ExperimentConfig config);

  const ExperimentConfig& config() const { return config_; }
  const DiscretizationPtr& disc() const { return disc_; }
  const Phantom& phantom() const { return phantom_; }
  const Transport& transport() const { return transport_; }
  BoundarySource source() const;
  BoundarySource detector() const;
  QLattice lattice() const;
  std::vector<UltrasoundProbe> probes() const;
  BoundaryQuadraturePtr measurement_quadrature() const { return quadrature_; }

 private:
  ExperimentConfig config_;
  DiscretizationPtr disc_;
  Phantom phantom_;
  Transport transport_;
  BoundaryQuadraturePtr quadrature_;
};

/// Outcome of one subcommand: files written (relative to the output directory), scalar metrics,
/// tolerances used, and failed checks. A stage with failed checks reports an invariant failure.
struct StageReport {
  std::string stage;
  std::vector<std::string> files;
  std::map<std::string, double> metrics;
  std::map<std::string, double> tolerances;
  std::vector<std::string> checks;    ///< "name: pass" or "name: FAIL ..." lines
  std::vector<std::string> failures;
  bool ok() const { return failures.empty(); }
};

/// Solves the cascade for every probe and writes measurements.bin and measurements.csv.
StageReport run_simulate(const Experiment& experiment, const std::string& out_dir);

/// Reads measurements.bin (or `measurements` when given), recovers H from the boundary data, and
/// writes it with the oracle functional, the coefficient table and a node-by-node comparison.
StageReport run_functional(const Experiment& experiment, const std::string& out_dir,
                           const std::optional<std::string>& measurements = std::nullopt);

/// Runs the point pipeline (n = 2) or the oscillatory pipeline (n = 3) and writes the results.
StageReport run_reconstruct(const Experiment& experiment, const std::string& out_dir);

/// Invariant suite over geometry, coefficients, transport and the boundary identity.
StageReport run_verify(const ExperimentConfig& config, const std::string& out_dir);

/// Samples the phantom on the grid and writes sigma, kappa and the validation summary.
StageReport run_phantom(const ExperimentConfig& config, const std::string& out_dir);

/// Writes manifest-<stage>.json: config hash, library version, tolerances, metrics and file hashes.
void write_manifest(const ExperimentConfig& config, const StageReport& report, const std::string& out_dir);

/// Library version string.
std::string version();

}  // namespace mfao
