#include "mfao/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>

#include "mfao/errors.hpp"

namespace mfao {

static_assert(std::endian::native == std::endian::little, "binary writers assume a little-endian host");

namespace {

constexpr char kFieldMagic[4] = {'M', 'F', 'A', 'O'};
constexpr char kMeasurementMagic[4] = {'M', 'F', 'A', 'M'};
constexpr std::uint32_t kMeasurementVersion = 1;

template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw FormatError("truncated header");
  return v;
}

void put_doubles(std::ostream& out, const std::vector<double>& v) {
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> get_doubles(std::istream& in, std::size_t n) {
  std::vector<double> v(n);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (static_cast<std::size_t>(in.gcount()) != n * sizeof(double)) throw FormatError("truncated payload");
  return v;
}

void check_magic(std::istream& in, const char (&magic)[4]) {
  char m[4] = {};
  in.read(m, 4);
  if (!in || std::memcmp(m, magic, 4) != 0) throw FormatError("bad magic, expected " + std::string(magic, 4));
}

std::ofstream open_out(const std::string& path, bool binary) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw Error("cannot open " + path + " for writing");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return in;
}

void check_grid(const FieldHeader& h, const Discretization& disc, std::size_t angles) {
  const auto& c = disc.spatial.counts();
  for (int a = 0; a < 3; ++a) {
    if (h.spatial[a] != c[a]) throw FormatError("field grid does not match the discretization");
  }
  if (h.angles != angles) throw FormatError("field angular count does not match the discretization");
}

std::string fmt_vec(const Vec3& x) {
  return format_double(x[0]) + "," + format_double(x[1]) + "," + format_double(x[2]);
}

}  // namespace

std::size_t FieldHeader::payload() const {
  return spatial_size() * std::max<std::uint64_t>(angles, 1) * columns * (complex ? 2 : 1);
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

void write_field(std::ostream& out, const FieldFile& file) {
  const FieldHeader& h = file.header;
  if (file.data.size() != h.payload()) throw ContractError("field payload does not match its header");
  out.write(kFieldMagic, 4);
  put<std::uint32_t>(out, h.version);
  put<std::uint32_t>(out, h.dim);
  for (auto n : h.spatial) put<std::uint64_t>(out, n);
  put<std::uint64_t>(out, h.angles);
  put<std::uint64_t>(out, h.columns);
  put<std::uint8_t>(out, h.complex ? 1 : 0);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(h.provenance));
  put_doubles(out, file.data);
}

FieldFile read_field(std::istream& in) {
  check_magic(in, kFieldMagic);
  FieldFile f;
  FieldHeader& h = f.header;
  h.version = get<std::uint32_t>(in);
  if (h.version != FieldHeader::kVersion) throw FormatError("unsupported field version " + std::to_string(h.version));
  h.dim = get<std::uint32_t>(in);
  for (auto& n : h.spatial) n = get<std::uint64_t>(in);
  h.angles = get<std::uint64_t>(in);
  h.columns = get<std::uint64_t>(in);
  const auto cplx = get<std::uint8_t>(in);
  const auto prov = get<std::uint8_t>(in);
  if (cplx > 1 || prov > 2 || (h.dim != 2 && h.dim != 3)) throw FormatError("invalid field header");
  h.complex = cplx == 1;
  h.provenance = static_cast<Provenance>(prov);
  f.data = get_doubles(in, h.payload());
  return f;
}

void write_field(const std::string& path, const FieldFile& file) {
  auto out = open_out(path, true);
  write_field(out, file);
}

FieldFile read_field(const std::string& path) {
  auto in = open_in(path);
  return read_field(in);
}

FieldFile to_file(const RadianceField& u, bool complex_pairs, Provenance provenance) {
  if (complex_pairs && u.columns() % 2 != 0) throw ContractError("complex fields need (re, im) column pairs");
  const Discretization& d = u.disc();
  FieldFile f;
  FieldHeader& h = f.header;
  h.dim = static_cast<std::uint32_t>(d.domain.dim());
  for (int a = 0; a < 3; ++a) h.spatial[a] = d.spatial.counts()[a];
  h.angles = u.angles();
  h.complex = complex_pairs;
  h.columns = complex_pairs ? u.columns() / 2 : u.columns();
  h.provenance = provenance;
  f.data.reserve(h.payload());
  for (std::size_t n = 0; n < u.nodes(); ++n) {
    for (std::size_t i = 0; i < u.angles(); ++i) {
      const double* row = u.row(i, n);
      f.data.insert(f.data.end(), row, row + u.columns());
    }
  }
  return f;
}

RadianceField radiance_from(const FieldFile& file, const DiscretizationPtr& disc) {
  const FieldHeader& h = file.header;
  check_grid(h, *disc, disc->angular.size());
  RadianceField u(disc, h.columns * (h.complex ? 2 : 1));
  std::size_t p = 0;
  for (std::size_t n = 0; n < u.nodes(); ++n) {
    for (std::size_t i = 0; i < u.angles(); ++i) {
      for (std::size_t c = 0; c < u.columns(); ++c) u(i, n, c) = file.data[p++];
    }
  }
  return u;
}

FieldFile to_file(const FunctionalField& H) {
  FieldFile f;
  FieldHeader& h = f.header;
  h.dim = static_cast<std::uint32_t>(H.disc->domain.dim());
  for (int a = 0; a < 3; ++a) h.spatial[a] = H.disc->spatial.counts()[a];
  h.angles = 0;
  h.complex = true;
  h.provenance = H.provenance;
  if (H.values.size() != h.spatial_size()) throw ContractError("functional size does not match its grid");
  f.data.reserve(h.payload());
  for (const auto& v : H.values) {
    f.data.push_back(v.real());
    f.data.push_back(v.imag());
  }
  return f;
}

FunctionalField functional_from(const FieldFile& file, const DiscretizationPtr& disc) {
  const FieldHeader& h = file.header;
  check_grid(h, *disc, 0);
  if (!h.complex || h.columns != 1) throw FormatError("functional files hold one complex column");
  FunctionalField H;
  H.disc = disc;
  H.provenance = h.provenance;
  H.values.resize(h.spatial_size());
  for (std::size_t n = 0; n < H.values.size(); ++n) H.values[n] = {file.data[2 * n], file.data[2 * n + 1]};
  return H;
}

FieldFile scalar_file(const Discretization& disc, const std::vector<double>& values, Provenance provenance) {
  FieldFile f;
  f.header.dim = static_cast<std::uint32_t>(disc.domain.dim());
  for (int a = 0; a < 3; ++a) f.header.spatial[a] = disc.spatial.counts()[a];
  f.header.angles = 0;
  f.header.provenance = provenance;
  if (values.size() != f.header.spatial_size()) throw ContractError("scalar field size does not match its grid");
  f.data = values;
  return f;
}

void write_measurements(const std::string& path, const MeasurementSet& m) {
  auto out = open_out(path, true);
  out.write(kMeasurementMagic, 4);
  put<std::uint32_t>(out, kMeasurementVersion);
  put<std::uint64_t>(out, m.probes.size());
  put<std::uint64_t>(out, m.source_columns);
  put<std::uint64_t>(out, m.quadrature ? m.quadrature->size() : 0);
  for (const auto& p : m.probes) {
    put_doubles(out, {p.Q[0], p.Q[1], p.Q[2], p.phase, p.a, p.b});
  }
  put_doubles(out, m.values.values);
}

MeasurementSet read_measurements(const std::string& path, const BoundaryQuadraturePtr& quadrature) {
  auto in = open_in(path);
  check_magic(in, kMeasurementMagic);
  if (get<std::uint32_t>(in) != kMeasurementVersion) throw FormatError("unsupported measurement version");
  const auto probes = get<std::uint64_t>(in);
  const auto columns = get<std::uint64_t>(in);
  const auto samples = get<std::uint64_t>(in);
  if (samples != quadrature->size()) throw FormatError("measurement set was recorded on a different quadrature");
  MeasurementSet m;
  m.quadrature = quadrature;
  m.source_columns = columns;
  for (std::uint64_t p = 0; p < probes; ++p) {
    const auto r = get_doubles(in, 6);
    m.probes.push_back({{r[0], r[1], r[2]}, r[3], r[4], r[5]});
  }
  m.values.quadrature = quadrature;
  m.values.columns = probes * columns;
  m.values.values = get_doubles(in, samples * probes * columns);
  return m;
}

void write_measurements_csv(const std::string& path, const MeasurementSet& m) {
  auto out = open_out(path, false);
  out << "Qx,Qy,Qz,phase,x,y,z,angle,Re,Im\n";
  const auto& samples = m.quadrature->samples();
  for (std::size_t p = 0; p < m.probes.size(); ++p) {
    const auto& pr = m.probes[p];
    for (std::size_t s = 0; s < samples.size(); ++s) {
      const double re = m.values(s, m.column(p, 0));
      const double im = m.source_columns > 1 ? m.values(s, m.column(p, 1)) : 0.0;
      out << fmt_vec(pr.Q) << ',' << format_double(pr.phase) << ',' << fmt_vec(samples[s].x) << ','
          << samples[s].angle << ',' << format_double(re) << ',' << format_double(im) << '\n';
    }
  }
}

void write_coefficients_csv(const std::string& path, const CoefficientTable& table) {
  auto out = open_out(path, false);
  out << "Qx,Qy,Qz,Re,Im\n";
  for (std::size_t k = 0; k < table.lattice.size(); ++k) {
    if (!table.present[k]) continue;
    out << fmt_vec(table.lattice.wavevector(k)) << ',' << format_double(table.values[k].real()) << ','
        << format_double(table.values[k].imag()) << '\n';
  }
}

void write_functional_comparison_csv(const std::string& path, const FunctionalField& oracle,
                                     const FunctionalField& measured) {
  if (oracle.size() != measured.size()) throw ContractError("functionals live on different grids");
  auto out = open_out(path, false);
  out << "x,y,z,oracle_re,oracle_im,measured_re,measured_im\n";
  for (std::size_t n = 0; n < oracle.size(); ++n) {
    out << fmt_vec(oracle.disc->spatial.node(n)) << ',' << format_double(oracle.values[n].real()) << ','
        << format_double(oracle.values[n].imag()) << ',' << format_double(measured.values[n].real()) << ','
        << format_double(measured.values[n].imag()) << '\n';
  }
}

void write_sigma_csv(const std::string& path, const ReconstructionResult& r) {
  auto out = open_out(path, false);
  out << "x,y,z,node,value,truth,dispersion,count,interior,valid\n";
  for (const auto& s : r.sigma) {
    out << fmt_vec(s.x) << ',' << (s.node == SIZE_MAX ? std::string("-1") : std::to_string(s.node)) << ','
        << format_double(s.value) << ',' << format_double(s.truth) << ',' << format_double(s.dispersion) << ','
        << s.count << ',' << s.interior << ',' << s.valid << '\n';
  }
}

void write_k_csv(const std::string& path, const ReconstructionResult& r) {
  auto out = open_out(path, false);
  out << "key,x,y,z,theta2_x,theta2_y,theta2_z,theta1_x,theta1_y,theta1_z,value,truth,mirrored,valid,flag\n";
  for (const auto& k : r.k) {
    out << k.key << ',' << fmt_vec(k.x) << ',' << fmt_vec(k.theta_out) << ',' << fmt_vec(k.theta_in) << ','
        << format_double(k.value) << ',' << format_double(k.truth) << ',' << k.mirrored << ',' << k.valid << ','
        << k.flag << '\n';
  }
}

void write_lines_csv(const std::string& path, const ReconstructionResult& r) {
  auto out = open_out(path, false);
  out << "key,t,x,y,z,log_F_fwd,log_F_bwd,tau,sigma,valid\n";
  for (const auto& l : r.lines) {
    for (std::size_t i = 0; i < l.t.size(); ++i) {
      const Vec3 x = l.entry + l.t[i] * l.direction;
      out << l.key << ',' << format_double(l.t[i]) << ',' << fmt_vec(x) << ',' << format_double(l.log_F_fwd[i]) << ','
          << format_double(l.log_F_bwd[i]) << ',' << format_double(l.tau[i]) << ',' << format_double(l.sigma[i])
          << ',' << static_cast<bool>(l.valid[i]) << '\n';
    }
  }
}

std::vector<double> sigma_on_grid(const ReconstructionResult& r, const Discretization& disc) {
  std::vector<double> sum(disc.spatial.size(), 0.0);
  std::vector<int> count(sum.size(), 0);
  for (const auto& s : r.sigma) {
    if (!s.valid || s.node >= sum.size()) continue;
    sum[s.node] += s.value;
    ++count[s.node];
  }
  for (std::size_t n = 0; n < sum.size(); ++n) sum[n] = count[n] ? sum[n] / count[n] : std::nan("");
  return sum;
}

}  // namespace mfao
