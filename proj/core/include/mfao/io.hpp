#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mfao/functional.hpp"
#include "mfao/reconstruct.hpp"

namespace mfao {

/// Header of the field binary format. The file is the magic "MFAO", then the header fields as
/// little-endian integers, then little-endian 64-bit floats ordered spatial-major, then angular,
/// then column; complex values store (re, im) adjacent.
struct FieldHeader {
  static constexpr std::uint32_t kVersion = 1;
  std::uint32_t version = kVersion;
  std::uint32_t dim = 2;
  std::array<std::uint64_t, 3> spatial{1, 1, 1};
  std::uint64_t angles = 0;  ///< 0 for scalar fields on the spatial grid
  std::uint64_t columns = 1;
  bool complex = false;
  Provenance provenance = Provenance::Synthetic;

  std::size_t spatial_size() const { return spatial[0] * spatial[1] * spatial[2]; }
  /// Number of doubles in the payload.
  std::size_t payload() const;
};

struct FieldFile {
  FieldHeader header;
  std::vector<double> data;
};

void write_field(std::ostream& out, const FieldFile& file);
/// Throws FormatError on a bad magic, unknown version or truncated payload.
FieldFile read_field(std::istream& in);
void write_field(const std::string& path, const FieldFile& file);
FieldFile read_field(const std::string& path);

FieldFile to_file(const RadianceField& u, bool complex_pairs = false, Provenance provenance = Provenance::Synthetic);
/// Rebuilds a radiance field; the header must match the discretization.
RadianceField radiance_from(const FieldFile& file, const DiscretizationPtr& disc);

FieldFile to_file(const FunctionalField& H);
/// Restores values and provenance; the header must match the discretization.
FunctionalField functional_from(const FieldFile& file, const DiscretizationPtr& disc);

/// Real scalar field on the spatial grid (NaN where undefined).
FieldFile scalar_file(const Discretization& disc, const std::vector<double>& values, Provenance provenance);

/// Measurement set binary: magic "MFAM", version, probe count, source columns, sample count,
/// probe records (Qx, Qy, Qz, phase, a, b) and the values [sample][probe][column].
void write_measurements(const std::string& path, const MeasurementSet& m);
/// Reads a measurement set recorded on `quadrature`; throws FormatError when the sizes disagree.
MeasurementSet read_measurements(const std::string& path, const BoundaryQuadraturePtr& quadrature);

/// One row per (probe, boundary sample): Qx,Qy,Qz,phase,x,y,z,angle,Re,Im. The imaginary part is
/// the second source column when there is one, otherwise zero.
void write_measurements_csv(const std::string& path, const MeasurementSet& m);

/// Qx,Qy,Qz,Re,Im for every present lattice point.
void write_coefficients_csv(const std::string& path, const CoefficientTable& table);

/// x,y,z,oracle_re,oracle_im,measured_re,measured_im per grid node.
void write_functional_comparison_csv(const std::string& path, const FunctionalField& oracle,
                                     const FunctionalField& measured);

/// x,y,z,node,value,truth,dispersion,count,interior,valid.
void write_sigma_csv(const std::string& path, const ReconstructionResult& r);
/// x,y,z,theta2 (3),theta1 (3),value,truth,mirrored,valid,flag.
void write_k_csv(const std::string& path, const ReconstructionResult& r);
/// key,t,x,y,z,log_F_fwd,log_F_bwd,tau,sigma,valid per line sample.
void write_lines_csv(const std::string& path, const ReconstructionResult& r);
/// Reconstructed sigma on the grid: node samples averaged, NaN elsewhere.
std::vector<double> sigma_on_grid(const ReconstructionResult& r, const Discretization& disc);

/// Shortest decimal text that reads back to the same double ("nan", "inf" and "-inf" for specials).
std::string format_double(double v);

}  // namespace mfao
