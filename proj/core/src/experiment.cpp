#include "mfao/experiment.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "mfao/errors.hpp"
#include "mfao/io.hpp"

#ifndef MFAO_VERSION
#define MFAO_VERSION "0.0.0"
#endif

namespace mfao {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

/// Reads the keys of one config object, rejecting any key that no reader consumed.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }
  ~Section() = default;

  template <class T>
  void read(const char* key, T& out) {
    seen_.push_back(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(path_ + "." + key + ": " + e.what());
    }
  }

  void read_vec(const char* key, Vec3& out) {
    std::vector<double> v;
    read(key, v);
    if (!j_.contains(key)) return;
    if (v.size() < 2 || v.size() > 3) throw ConfigError(path_ + "." + key + ": expected 2 or 3 numbers");
    out = {v[0], v[1], v.size() == 3 ? v[2] : 0.0};
  }

  std::optional<Section> sub(const char* key) {
    seen_.push_back(key);
    if (!j_.contains(key)) return std::nullopt;
    return Section(j_.at(key), path_ + "." + key);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (std::find(seen_.begin(), seen_.end(), it.key()) == seen_.end()) {
        throw ConfigError(path_ + ": unknown key '" + it.key() + "'");
      }
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::vector<std::string> seen_;
};

json vec_json(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }

void read_boundary(Section s, BoundarySpec& b) {
  s.read("kind", b.kind);
  s.read("amplitude", b.amplitude);
  s.read_vec("wave", b.wave);
  s.read_vec("x0", b.x0);
  s.read_vec("theta", b.theta);
  s.finish();
}

json boundary_json(const BoundarySpec& b) {
  return {{"kind", b.kind}, {"amplitude", b.amplitude}, {"wave", vec_json(b.wave)}, {"x0", vec_json(b.x0)},
          {"theta", vec_json(b.theta)}};
}

json config_json(const ExperimentConfig& c) {
  json j;
  j["domain"] = {{"shape", c.shape}, {"dim", c.dim}, {"lower", vec_json(c.lower)}, {"upper", vec_json(c.upper)},
                 {"center", vec_json(c.center)}, {"radius", c.radius}};
  j["grid"] = {{"nodes", c.nodes}, {"angles", c.angles}, {"n_polar", c.n_polar}, {"n_azimuth", c.n_azimuth}};
  j["phantom"] = {{"name", c.phantom}, {"params", c.phantom_params}, {"kernel_skew", c.kernel_skew}};
  j["transport"] = {{"step", c.step}, {"tol", c.tol}, {"max_terms", c.max_terms}};
  j["probes"] = {{"max_index", c.probe_max_index}, {"a", c.a}, {"b", c.b}, {"batch", c.batch}};
  j["source"] = boundary_json(c.source);
  j["detector"] = boundary_json(c.detector);
  j["reconstruction"] = {{"pipeline", c.pipeline},       {"s", c.s},
                         {"rotations", c.rotations},     {"sigma_lines", c.sigma_lines},
                         {"line_stride", c.line_stride}, {"k_stride", c.k_stride}};
  j["verify"] = {{"samples", c.verify_samples}, {"adjoint_tol", c.adjoint_tol}, {"identity_tol", c.identity_tol}};
  j["output"] = c.output;
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  return j;
}

Domain make_domain(const ExperimentConfig& c) {
  return c.shape == "ball" ? Domain::ball(c.dim, c.center, c.radius) : Domain::box(c.dim, c.lower, c.upper);
}

AngularGrid make_angular(const ExperimentConfig& c) {
  return c.dim == 2 ? AngularGrid::circle(c.angles) : AngularGrid::sphere(c.n_polar, c.n_azimuth);
}

Phantom make_phantom(const ExperimentConfig& c, const Domain& domain, const AngularGrid& angles) {
  Phantom ph = phantom_library(c.phantom, c.phantom_params, domain);
  if (c.kernel_skew != 0.0) {
    auto table = std::make_shared<KernelTable>();
    table->size = angles.size();
    table->values.resize(angles.size() * angles.size());
    for (std::size_t i = 0; i < angles.size(); ++i) {
      for (std::size_t j = 0; j < angles.size(); ++j) table->values[i * angles.size() + j] = ph.angular_kernel(angles, i, j);
    }
    table->values[1] += c.kernel_skew;
    ph.table = table;
  }
  return ph;
}

TransportOptions transport_options(const ExperimentConfig& c) {
  TransportOptions o;
  o.step = c.step;
  o.tol = c.tol;
  o.max_terms = c.max_terms;
  o.workers = c.workers;
  return o;
}

BoundarySource make_boundary(const BoundarySpec& b, BoundarySide side, const Discretization& disc) {
  if (b.kind == "constant") {
    BoundarySource s = constant_source(b.amplitude, side);
    return s;
  }
  if (b.kind == "smooth") {
    BoundarySource s;
    s.side = side;
    s.label = "smooth";
    const Vec3 w = b.wave;
    const double amp = b.amplitude;
    s.value = [w, amp](const Vec3& x, std::size_t i) { return amp * (1.0 + 0.4 * std::cos(dot(w, x) + 0.1 * i)); };
    return s;
  }
  const SourceScales scales = resolvable_scales(disc);
  const Vec3 theta = normalized(b.theta);
  BoundarySource s = side == BoundarySide::Incoming ? make_point_source(disc, b.x0, theta, scales)
                                                    : make_point_detector(disc, b.x0, theta, scales);
  if (b.amplitude != 1.0) {
    auto inner = s.value;
    const double amp = b.amplitude;
    s.value = [inner, amp](const Vec3& x, std::size_t i) { return amp * inner(x, i); };
  }
  return s;
}

std::string join(const fs::path& dir, const std::string& name) { return (dir / name).string(); }

fs::path prepare(const std::string& out_dir) {
  fs::path p(out_dir);
  fs::create_directories(p);
  return p;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << text;
}

std::string read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void check(StageReport& r, const std::string& name, bool ok, const std::string& detail) {
  r.checks.push_back(name + (ok ? ": pass " : ": FAIL ") + detail);
  if (!ok) r.failures.push_back(name + ": " + detail);
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

Vec3 random_point(const Domain& d, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (;;) {
    Vec3 x{};
    if (d.shape() == DomainShape::Box) {
      for (int a = 0; a < d.dim(); ++a) x[a] = d.lower()[a] + u(rng) * (d.upper()[a] - d.lower()[a]);
    } else {
      for (int a = 0; a < d.dim(); ++a) x[a] = d.center()[a] + (2.0 * u(rng) - 1.0) * d.radius();
    }
    if (d.contains(x)) return x;
  }
}

Vec3 random_direction(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec3 v{n(rng), n(rng), dim == 3 ? n(rng) : 0.0};
  return normalized(v);
}

double interior_rel_linf(const FunctionalField& ref, const FunctionalField& other) {
  double err = 0.0, scale = 0.0;
  for (std::size_t n = 0; n < ref.size(); ++n) {
    if (!is_interior(*ref.disc, ref.disc->spatial.node(n))) continue;
    err = std::max(err, std::abs(ref.values[n] - other.values[n]));
    scale = std::max(scale, std::abs(ref.values[n]));
  }
  return scale > 0.0 ? err / scale : err;
}

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  ExperimentConfig c;
  Section root(j, "config");
  if (auto s = root.sub("domain")) {
    s->read("shape", c.shape);
    s->read("dim", c.dim);
    s->read_vec("lower", c.lower);
    s->read_vec("upper", c.upper);
    s->read_vec("center", c.center);
    s->read("radius", c.radius);
    s->finish();
  }
  if (auto s = root.sub("grid")) {
    s->read("nodes", c.nodes);
    s->read("angles", c.angles);
    s->read("n_polar", c.n_polar);
    s->read("n_azimuth", c.n_azimuth);
    s->finish();
  }
  if (auto s = root.sub("phantom")) {
    s->read("name", c.phantom);
    s->read("params", c.phantom_params);
    s->read("kernel_skew", c.kernel_skew);
    s->finish();
  }
  if (auto s = root.sub("transport")) {
    s->read("step", c.step);
    s->read("tol", c.tol);
    s->read("max_terms", c.max_terms);
    s->finish();
  }
  if (auto s = root.sub("probes")) {
    s->read("max_index", c.probe_max_index);
    s->read("a", c.a);
    s->read("b", c.b);
    s->read("batch", c.batch);
    s->finish();
  }
  if (auto s = root.sub("source")) read_boundary(*s, c.source);
  if (auto s = root.sub("detector")) read_boundary(*s, c.detector);
  if (auto s = root.sub("reconstruction")) {
    s->read("pipeline", c.pipeline);
    s->read("s", c.s);
    s->read("rotations", c.rotations);
    s->read("sigma_lines", c.sigma_lines);
    s->read("line_stride", c.line_stride);
    s->read("k_stride", c.k_stride);
    s->finish();
  }
  if (auto s = root.sub("verify")) {
    s->read("samples", c.verify_samples);
    s->read("adjoint_tol", c.adjoint_tol);
    s->read("identity_tol", c.identity_tol);
    s->finish();
  }
  root.read("output", c.output);
  root.read("seed", c.seed);
  root.read("workers", c.workers);
  root.finish();
  check_config(c);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string emit_config(const ExperimentConfig& config) { return config_json(config).dump(2) + "\n"; }

void check_config(const ExperimentConfig& c) {
  if (c.shape != "box" && c.shape != "ball") throw ConfigError("domain.shape must be box or ball");
  if (c.dim != 2 && c.dim != 3) throw ConfigError("domain.dim must be 2 or 3");
  if (c.nodes < 3) throw ConfigError("grid.nodes must be at least 3");
  if (c.dim == 2 && (c.angles < 2 || c.angles % 2 != 0)) throw ConfigError("grid.angles must be even");
  if (c.dim == 3 && (c.n_polar % 2 != 0 || c.n_azimuth % 2 != 0 || c.n_polar == 0 || c.n_azimuth == 0)) {
    throw ConfigError("grid.n_polar and grid.n_azimuth must be even");
  }
  const auto names = phantom_names();
  if (std::find(names.begin(), names.end(), c.phantom) == names.end()) {
    throw ConfigError("phantom.name '" + c.phantom + "' is not in the library");
  }
  for (const BoundarySpec* b : {&c.source, &c.detector}) {
    if (b->kind != "smooth" && b->kind != "constant" && b->kind != "point") {
      throw ConfigError("boundary kind '" + b->kind + "' must be smooth, constant or point");
    }
    if (b->kind == "point" && norm(b->theta) == 0.0) throw ConfigError("point boundary data needs a direction");
  }
  if (c.pipeline != "oracle" && c.pipeline != "measured") throw ConfigError("reconstruction.pipeline must be oracle or measured");
  if (c.pipeline == "measured" && c.dim == 3) {
    throw ConfigError("the measured pipeline is available in two dimensions only");
  }
  if (c.tol <= 0.0 || c.step < 0.0 || c.s < 0.0) throw ConfigError("tolerances and steps must be positive");
  if (c.batch == 0 || c.line_stride == 0 || c.k_stride == 0) throw ConfigError("batch and strides must be positive");
  if (c.rotations.empty()) throw ConfigError("reconstruction.rotations must not be empty");
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string version() { return MFAO_VERSION; }

Experiment::Experiment(ExperimentConfig config)
    : config_(std::move(config)),
      disc_(Discretization::make(make_domain(config_), config_.nodes, make_angular(config_))),
      phantom_(make_phantom(config_, disc_->domain, disc_->angular)),
      transport_(phantom_, disc_, transport_options(config_)),
      quadrature_(BoundaryQuadrature::build(disc_, BoundarySide::Outgoing)) {}

BoundarySource Experiment::source() const { return make_boundary(config_.source, BoundarySide::Incoming, *disc_); }

BoundarySource Experiment::detector() const {
  return make_boundary(config_.detector, BoundarySide::Outgoing, *disc_);
}

QLattice Experiment::lattice() const {
  return config_.probe_max_index < 0 ? QLattice::for_grid(disc_->spatial)
                                     : QLattice::truncated(disc_->spatial, config_.probe_max_index);
}

std::vector<UltrasoundProbe> Experiment::probes() const {
  const QLattice q = lattice();
  return lattice_probes(q, q.half(), config_.a, config_.b);
}

StageReport run_simulate(const Experiment& e, const std::string& out_dir) {
  const fs::path dir = prepare(out_dir);
  StageReport r;
  r.stage = "simulate";
  CascadeOptions opt;
  opt.compute_u11 = false;
  opt.batch = e.config().batch;
  const MeasurementSet m = measure_A01(e.transport(), e.probes(), {e.source()}, e.measurement_quadrature(), opt);
  write_measurements(join(dir, "measurements.bin"), m);
  write_measurements_csv(join(dir, "measurements.csv"), m);
  r.files = {"measurements.bin", "measurements.csv"};
  double sup = 0.0;
  for (double v : m.values.values) sup = std::max(sup, std::abs(v));
  r.metrics["probes"] = static_cast<double>(m.probes.size());
  r.metrics["boundary_samples"] = static_cast<double>(m.quadrature->size());
  r.metrics["measurement_sup"] = sup;
  r.tolerances["neumann_tol"] = e.config().tol;
  r.tolerances["march_step"] = e.transport().step();
  return r;
}

StageReport run_functional(const Experiment& e, const std::string& out_dir, const std::optional<std::string>& measurements) {
  const fs::path dir = prepare(out_dir);
  StageReport r;
  r.stage = "functional";
  const MeasurementSet m = read_measurements(measurements.value_or(join(dir, "measurements.bin")), e.measurement_quadrature());
  const BoundaryField g = sample_boundary(e.measurement_quadrature(), {e.detector()});
  const QLattice q = e.lattice();
  const CoefficientTable table = H_hat_from_boundary(m, g, q);
  FunctionalField measured = H_recover(table, e.disc());
  measured.provenance = Provenance::FourierRecovered;
  FunctionalField oracle = H_oracle(e.transport(), {e.source()}, {e.detector()});
  oracle.provenance = Provenance::Oracle;
  write_field(join(dir, "H_measured.mfao"), to_file(measured));
  write_field(join(dir, "H_oracle.mfao"), to_file(oracle));
  write_coefficients_csv(join(dir, "coefficients.csv"), table);
  write_functional_comparison_csv(join(dir, "functional.csv"), oracle, measured);
  r.files = {"H_measured.mfao", "H_oracle.mfao", "coefficients.csv", "functional.csv"};
  // The oracle is compared with its own band limit so that only the measurement path is tested.
  const FunctionalField band = H_recover(analyze(oracle, q), e.disc());
  r.metrics["interior_rel_linf_vs_bandlimited_oracle"] = interior_rel_linf(band, measured);
  r.metrics["interior_rel_linf_vs_oracle"] = interior_rel_linf(oracle, measured);
  r.metrics["degenerate"] = table.degenerate ? 1.0 : 0.0;
  r.metrics["parity_filled"] = static_cast<double>(table.parity_filled);
  r.metrics["H_sup"] = measured.sup_norm();
  r.tolerances["neumann_tol"] = e.config().tol;
  return r;
}

StageReport run_reconstruct(const Experiment& e, const std::string& out_dir) {
  const fs::path dir = prepare(out_dir);
  const ExperimentConfig& c = e.config();
  StageReport r;
  r.stage = "reconstruct";
  ReconstructionResult res;
  if (c.dim == 2) {
    PointPipelineOptions o;
    o.s = c.s;
    o.measured = c.pipeline == "measured";
    o.line_stride = c.line_stride;
    o.k_stride = c.k_stride;
    res = run_point_pipeline(e.transport(), o);
  } else {
    OscillatoryPipelineOptions o;
    o.s = c.s;
    o.rotations = c.rotations;
    o.sigma_lines = c.sigma_lines;
    res = run_oscillatory_pipeline(e.transport(), o);
  }
  const Provenance prov = c.pipeline == "measured" ? Provenance::FourierRecovered : Provenance::Oracle;
  write_field(join(dir, "sigma.mfao"), scalar_file(*e.disc(), sigma_on_grid(res, *e.disc()), prov));
  write_sigma_csv(join(dir, "sigma.csv"), res);
  write_k_csv(join(dir, "k.csv"), res);
  write_lines_csv(join(dir, "lines.csv"), res);
  std::string failures;
  for (const auto& f : res.failures) failures += f + "\n";
  write_text(dir / "failures.txt", failures);

  const ReconstructionMetrics& m = res.metrics;
  json metrics = {{"pipeline", res.pipeline},
                  {"s", res.s},
                  {"scales", {{"spot", res.scales.spot}, {"oscillation", res.scales.oscillation}, {"angular", res.scales.angular}}},
                  {"sigma", {{"rel_linf", m.sigma_rel_linf}, {"rel_median", m.sigma_rel_median}, {"samples", m.sigma_samples},
                             {"invalid_interior", m.sigma_invalid_interior}}},
                  {"k", {{"rel_max", m.k_rel_max}, {"rel_median", m.k_rel_median}, {"samples", m.k_samples},
                         {"invalid", m.k_invalid}, {"direction_pairs", m.direction_pairs}}},
                  {"tau_additivity", m.tau_additivity},
                  {"imag_ratio_max", m.imag_ratio_max},
                  {"F_scale", m.F_scale},
                  {"failures", res.failures.size()},
                  {"lines", res.lines.size()}};
  write_text(dir / "metrics.json", metrics.dump(2) + "\n");
  r.files = {"sigma.mfao", "sigma.csv", "k.csv", "lines.csv", "failures.txt", "metrics.json"};
  r.metrics["sigma_rel_linf"] = m.sigma_rel_linf;
  r.metrics["sigma_rel_median"] = m.sigma_rel_median;
  r.metrics["k_rel_max"] = m.k_rel_max;
  r.metrics["k_samples"] = static_cast<double>(m.k_samples);
  r.metrics["failures"] = static_cast<double>(res.failures.size());
  r.tolerances["neumann_tol"] = c.tol;
  r.tolerances["quotient_step"] = res.s;
  return r;
}

StageReport run_verify(const ExperimentConfig& c, const std::string& out_dir) {
  const fs::path dir = prepare(out_dir);
  StageReport r;
  r.stage = "verify";
  r.tolerances = {{"adjoint_tol", c.adjoint_tol}, {"identity_tol", c.identity_tol}, {"neumann_tol", c.tol}};
  std::mt19937_64 rng(c.seed);
  const Domain domain = make_domain(c);
  const AngularGrid angular = make_angular(c);
  const DiscretizationPtr disc = Discretization::make(domain, c.nodes, angular);
  const Phantom ph = make_phantom(c, domain, angular);

  // Angular quadrature.
  double wsum = 0.0;
  bool closed = true;
  for (std::size_t i = 0; i < angular.size(); ++i) {
    wsum += angular.weight(i);
    const std::size_t a = angular.antipode(i);
    const Vec3 s = angular.direction(i) + angular.direction(a);
    closed = closed && norm(s) == 0.0 && angular.weight(a) == angular.weight(i) && angular.antipode(a) == i;
  }
  const double wdef = std::abs(wsum - angular.measure()) / angular.measure();
  check(r, "angular-weights", wdef <= 1e-12, "relative defect " + sci(wdef));
  check(r, "angular-antipodes", closed, "exact antipodal closure");

  // Geometry.
  double gdef = 0.0, tsym = 0.0, tadd = 0.0;
  const auto sigma = [&](const Vec3& x) { return ph.sigma(x); };
  for (std::size_t k = 0; k < c.verify_samples; ++k) {
    const Vec3 x = random_point(domain, rng), y = random_point(domain, rng);
    const Vec3 th = random_direction(c.dim, rng);
    gdef = std::max(gdef, norm(gamma(domain, x, th, +1) - gamma(domain, x, -th, -1)));
    tsym = std::max(tsym, std::abs(optical_distance(sigma, x, y, 1e-3) - optical_distance(sigma, y, x, 1e-3)));
    const Vec3 mid = 0.5 * (x + y);
    tadd = std::max(tadd, std::abs(optical_distance(sigma, x, y, 1e-4) -
                                   optical_distance(sigma, x, mid, 1e-4) - optical_distance(sigma, mid, y, 1e-4)));
  }
  check(r, "gamma-reversal", gdef <= 1e-10 * domain.diameter(), "max distance " + sci(gdef));
  check(r, "tau-symmetry", tsym <= 1e-10, "max defect " + sci(tsym));
  check(r, "tau-additivity", tadd <= 1e-8, "max defect " + sci(tadd));

  // Coefficient conditions.
  const ValidationReport v = validate(ph, disc->spatial, angular);
  check(r, "absorption", std::find(v.violations.begin(), v.violations.end(), "absorption-margin") == v.violations.end(),
        "min margin " + sci(v.min_margin));
  check(r, "kernel-symmetry", std::find(v.violations.begin(), v.violations.end(), "kernel-symmetry") == v.violations.end(),
        "max defect " + sci(v.max_isotropy_defect));
  check(r, "nonnegativity", std::find(v.violations.begin(), v.violations.end(), "nonnegativity") == v.violations.end(),
        "min sigma " + sci(v.min_sigma) + ", min kernel " + sci(v.min_kernel));
  r.metrics["sup_rho_over_inf_sigma"] = v.max_ratio;

  if (v.passed()) {
    const Transport t(ph, disc, transport_options(c));
    const BoundarySource f = make_boundary(c.source, BoundarySide::Incoming, *disc);
    const BoundarySource g = make_boundary(c.detector, BoundarySide::Outgoing, *disc);
    try {
      const SolveResult u = t.solve({f});
      check(r, "contraction", u.max_ratio <= v.max_ratio + 0.05,
            "max term ratio " + sci(u.max_ratio) + " against bound " + sci(v.max_ratio + 0.05));
      r.metrics["neumann_terms"] = static_cast<double>(u.terms);

      RadianceField a(disc), b(disc);
      std::uniform_real_distribution<double> unit(-1.0, 1.0);
      for (double& x : a.data()) x = unit(rng);
      for (double& x : b.data()) x = unit(rng);
      const double lhs = inner(t.scatter(a), 0, b, 0), rhs = inner(a, 0, t.scatter_adjoint(b), 0);
      const double adj = std::abs(lhs - rhs) / std::sqrt(inner(a, 0, a, 0) * inner(b, 0, b, 0));
      check(r, "adjoint-pairing", adj <= c.adjoint_tol, "relative defect " + sci(adj));

      const QLattice q = QLattice::truncated(disc->spatial, 1);
      const auto probes = lattice_probes(q, q.half(), c.a, c.b);
      const MeasurementSet m = measure_A01(t, probes, u, BoundaryQuadrature::build(disc, BoundarySide::Outgoing));
      const BoundaryField gs = sample_boundary(m.quadrature, {g});
      const FunctionalField H = H_oracle(t, {f}, {g});
      double err2 = 0.0, ref2 = 0.0, worst = 0.0;
      for (std::size_t p = 0; p < probes.size(); ++p) {
        const double l = modulated_integral(H, probes[p]).real(), rr = boundary_pairing(m, p, gs).real();
        err2 += (l - rr) * (l - rr);
        ref2 += l * l;
        worst = std::max(worst, std::abs(l - rr));
      }
      const double mismatch = ref2 > 0.0 ? std::sqrt(err2 / ref2) : std::sqrt(err2);
      r.metrics["identity_worst_abs"] = worst;
      check(r, "boundary-identity", mismatch <= c.identity_tol,
            "relative l2 mismatch " + sci(mismatch) + " over " + std::to_string(probes.size()) + " probes");
    } catch (const NonContractionError& err) {
      check(r, "contraction", false, err.what());
    }
  }

  std::string report;
  for (const auto& line : r.checks) report += line + "\n";
  write_text(dir / "verify.txt", report);
  r.files = {"verify.txt"};
  return r;
}

StageReport run_phantom(const ExperimentConfig& c, const std::string& out_dir) {
  const fs::path dir = prepare(out_dir);
  StageReport r;
  r.stage = "phantom";
  const Domain domain = make_domain(c);
  const AngularGrid angular = make_angular(c);
  const DiscretizationPtr disc = Discretization::make(domain, c.nodes, angular);
  const Phantom ph = make_phantom(c, domain, angular);
  const std::vector<double> s = ph.sigma.sample(disc->spatial), k = ph.kappa.sample(disc->spatial);
  write_field(join(dir, "phantom_sigma.mfao"), scalar_file(*disc, s, Provenance::Synthetic));
  write_field(join(dir, "phantom_kappa.mfao"), scalar_file(*disc, k, Provenance::Synthetic));
  std::ostringstream csv;
  csv << "x,y,z,sigma,kappa\n";
  for (std::size_t n = 0; n < s.size(); ++n) {
    const Vec3 x = disc->spatial.node(n);
    csv << format_double(x[0]) << ',' << format_double(x[1]) << ',' << format_double(x[2]) << ',' << format_double(s[n])
        << ',' << format_double(k[n]) << '\n';
  }
  write_text(dir / "phantom.csv", csv.str());
  const ValidationReport v = validate(ph, disc->spatial, angular);
  write_text(dir / "validation.txt", v.summary() + "\n");
  for (const auto& name : v.violations) r.failures.push_back(name);
  r.checks.push_back(v.summary());
  r.metrics["min_margin"] = v.min_margin;
  r.metrics["sup_rho_over_inf_sigma"] = v.max_ratio;
  r.files = {"phantom_sigma.mfao", "phantom_kappa.mfao", "phantom.csv", "validation.txt"};
  return r;
}

void write_manifest(const ExperimentConfig& config, const StageReport& report, const std::string& out_dir) {
  const fs::path dir = prepare(out_dir);
  const std::string text = emit_config(config);
  json files = json::object();
  for (const auto& f : report.files) files[f] = hex64(fnv1a64(read_bytes(dir / f)));
  json m = {{"stage", report.stage},
            {"version", version()},
            {"config_hash", hex64(fnv1a64(text))},
            {"config", config_json(config)},
            {"tolerances", report.tolerances},
            {"metrics", report.metrics},
            {"checks", report.checks},
            {"failures", report.failures},
            {"files", files}};
  write_text(dir / ("manifest-" + report.stage + ".json"), m.dump(2) + "\n");
}

}  // namespace mfao
