#include "mfao/reconstruct.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <utility>

#include "mfao/errors.hpp"

namespace mfao {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double max_spacing(const SpatialGrid& g) {
  double m = 0.0;
  for (int a = 0; a < g.dim(); ++a) m = std::max(m, g.spacing()[a]);
  return m;
}

std::complex<double> interpolate_complex(const FunctionalField& H, const Vec3& x, double* spread) {
  const Stencil st = H.disc->spatial.stencil(x);
  std::complex<double> v{0.0, 0.0};
  double lo_r = 1e300, hi_r = -1e300, lo_i = 1e300, hi_i = -1e300;
  for (int c = 0; c < st.size; ++c) {
    const std::complex<double> h = H.values[st.node[c]];
    v += st.weight[c] * h;
    lo_r = std::min(lo_r, h.real());
    hi_r = std::max(hi_r, h.real());
    lo_i = std::min(lo_i, h.imag());
    hi_i = std::max(hi_i, h.imag());
  }
  if (spread) *spread = st.size > 1 ? (hi_r - lo_r) + (hi_i - lo_i) : 0.0;
  return v;
}

std::string tag(const char* fmt, long a, long b = 0, long c = 0, long d = 0) {
  char buf[96];
  std::snprintf(buf, sizeof buf, fmt, a, b, c, d);
  return buf;
}

double safe_log(double v) { return v > 0.0 ? std::log(v) : kNaN; }

/// Centred differences on each maximal run of valid samples; runs shorter than three stay invalid.
void sigma_on_segments(LineRecord& line) {
  const std::size_t n = line.tau.size();
  line.sigma.assign(n, kNaN);
  std::size_t a = 0;
  while (a < n) {
    if (!line.valid[a]) {
      ++a;
      continue;
    }
    std::size_t b = a;
    while (b < n && line.valid[b]) ++b;
    if (b - a >= 3) {
      const std::vector<double> seg(line.tau.begin() + static_cast<long>(a), line.tau.begin() + static_cast<long>(b));
      const std::vector<double> d = recover_sigma(seg, line.dt);
      std::copy(d.begin(), d.end(), line.sigma.begin() + static_cast<long>(a));
    }
    a = b;
  }
}

double median(std::vector<double> v) {
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

/// The spot of radius r around a boundary point lies on a single face.
bool spot_fits(const Domain& d, const Vec3& x0, double r) {
  if (d.shape() == DomainShape::Ball) return true;
  const double tol = d.tolerance();
  for (int a = 0; a < d.dim(); ++a) {
    const bool on_face = std::abs(x0[a] - d.lower()[a]) < tol || std::abs(x0[a] - d.upper()[a]) < tol;
    if (!on_face && (x0[a] - d.lower()[a] < r || d.upper()[a] - x0[a] < r)) return false;
  }
  return true;
}

/// Beams entering at grazing incidence are thinner than the grid in one direction.
bool beam_resolved(const Domain& d, const Vec3& x0, const Vec3& theta, double r) {
  return spot_fits(d, x0, r) && std::abs(dot(theta, d.normal(x0))) >= 0.5;
}

std::size_t angle_of(const AngularGrid& grid, const Vec3& dir, const char* what) {
  const auto i = grid.find(dir, 1e-9);
  if (!i) throw ContractError(std::string(what) + ": direction is not an angular node");
  return *i;
}

/// Accumulates per-ray sigma estimates at shared sample positions.
struct SigmaAccumulator {
  struct Entry {
    Vec3 x{};
    std::size_t node = SIZE_MAX;
    std::vector<double> values;
  };
  std::map<std::size_t, Entry> by_node;
  std::vector<Entry> free;

  void add(const Vec3& x, std::size_t node, double v) {
    if (node == SIZE_MAX) {
      free.push_back({x, node, {v}});
      return;
    }
    Entry& e = by_node[node];
    e.x = x;
    e.node = node;
    e.values.push_back(v);
  }

  std::vector<SigmaSample> finish() const {
    std::vector<SigmaSample> out;
    auto emit = [&](const Entry& e) {
      SigmaSample s;
      s.x = e.x;
      s.node = e.node;
      s.count = static_cast<int>(e.values.size());
      double sum = 0.0, lo = 1e300, hi = -1e300;
      for (double v : e.values) {
        sum += v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      s.value = sum / static_cast<double>(e.values.size());
      s.dispersion = 0.5 * (hi - lo);
      s.valid = std::isfinite(s.value);
      out.push_back(s);
    };
    for (const auto& [n, e] : by_node) emit(e);
    for (const auto& e : free) emit(e);
    return out;
  }
};

}  // namespace

DifferenceQuotient extract_F(const FunctionalField& H, const Vec3& x, const Vec3& theta2, double s) {
  if (!(s > 0.0)) throw ContractError("extract_F: s must be positive");
  const Domain& dom = H.disc->domain;
  const Vec3 p = x - s * theta2;
  if (!dom.contains(x) || !dom.contains(p)) throw DomainError("extract_F: quotient stencil leaves the domain");
  double sx = 0.0, sp = 0.0;
  const std::complex<double> hx = interpolate_complex(H, x, &sx);
  const std::complex<double> hp = interpolate_complex(H, p, &sp);
  return {(hx - hp) / s, s, (sx + sp) / s};
}

DifferenceQuotient extract_F(const std::function<std::complex<double>(const Vec3&)>& H, const Domain& domain,
                             const Vec3& x, const Vec3& theta2, double s) {
  if (!(s > 0.0)) throw ContractError("extract_F: s must be positive");
  const Vec3 p = x - s * theta2;
  if (!domain.contains(x) || !domain.contains(p)) throw DomainError("extract_F: quotient stencil leaves the domain");
  return {(H(x) - H(p)) / s, s, 0.0};
}

double recover_tau(double F_fwd, double F_bwd, double transmission) {
  if (!(F_fwd > 0.0) || !(F_bwd > 0.0) || !(transmission > 0.0)) {
    std::ostringstream os;
    os << "recover_tau: nonpositive input (F_fwd " << F_fwd << ", F_bwd " << F_bwd << ", T " << transmission << ")";
    throw LogDomainError(os.str());
  }
  return 0.25 * (std::log(F_bwd) - std::log(F_fwd)) - 0.5 * std::log(transmission);
}

std::vector<double> recover_sigma(const std::vector<double>& tau, double dt) {
  const std::size_t n = tau.size();
  if (n < 3) throw ContractError("recover_sigma: need at least three samples");
  if (!(dt > 0.0)) throw ContractError("recover_sigma: dt must be positive");
  std::vector<double> d(n);
  for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (tau[i + 1] - tau[i - 1]) / (2.0 * dt);
  d[0] = (-3.0 * tau[0] + 4.0 * tau[1] - tau[2]) / (2.0 * dt);
  d[n - 1] = (3.0 * tau[n - 1] - 4.0 * tau[n - 2] + tau[n - 3]) / (2.0 * dt);
  return d;
}

double recover_k(double F, double tau_out, double tau_in, double attenuation_cap) {
  const double e = tau_out + tau_in;
  if (!std::isfinite(e) || e > attenuation_cap) {
    std::ostringstream os;
    os << "recover_k: attenuation exponent " << e << " exceeds cap " << attenuation_cap;
    throw DomainError(os.str());
  }
  return F * std::exp(e);
}

SourceScales ratio_policy(const Discretization& disc, double s) {
  if (!(s > 0.0)) throw ContractError("ratio_policy: s must be positive");
  const SourceScales r = resolvable_scales(disc);
  const double base = s * s / disc.domain.diameter();
  return {std::max(base, r.spot), std::max(base, r.oscillation), r.angular};
}

double default_quotient_step(const Discretization& disc) { return 8.0 * max_spacing(disc.spatial); }

double ReconstructionResult::max_chord_tau() const {
  double m = 0.0;
  for (const auto& l : lines)
    if (l.transmission > 0.0) m = std::max(m, -std::log(l.transmission));
  return m;
}

bool is_interior(const Discretization& disc, const Vec3& x, double spacings) {
  const double margin = spacings * max_spacing(disc.spatial);
  const Domain& d = disc.domain;
  if (!d.contains(x)) return false;
  if (d.shape() == DomainShape::Ball) return d.radius() - norm(x - d.center()) >= margin - d.tolerance();
  for (int a = 0; a < d.dim(); ++a)
    if (x[a] - d.lower()[a] < margin - d.tolerance() || d.upper()[a] - x[a] < margin - d.tolerance()) return false;
  return true;
}

void score(ReconstructionResult& r, const Transport& t, double interior_spacings) {
  const Discretization& disc = t.disc();
  const Phantom& ph = t.phantom();
  ReconstructionMetrics m;
  m.imag_ratio_max = 0.0;
  for (const auto& d : r.data) {
    if (!d.valid) continue;
    m.F_scale = std::max(m.F_scale, std::abs(d.F));
    m.imag_ratio_max = std::max(m.imag_ratio_max, d.imag_ratio);
  }

  std::vector<double> rel;
  for (auto& s : r.sigma) {
    s.truth = ph.sigma(s.x);
    s.interior = is_interior(disc, s.x, interior_spacings);
    if (!s.interior) continue;
    if (!s.valid) {
      ++m.sigma_invalid_interior;
      continue;
    }
    rel.push_back(std::abs(s.value - s.truth) / std::max(std::abs(s.truth), 1e-12));
  }
  m.sigma_samples = rel.size();
  if (!rel.empty()) {
    m.sigma_rel_linf = *std::max_element(rel.begin(), rel.end());
    m.sigma_rel_median = median(rel);
  }

  rel.clear();
  std::set<std::pair<std::size_t, std::size_t>> pairs;
  for (auto& k : r.k) {
    const std::size_t i2 = angle_of(disc.angular, k.theta_out, "score");
    const std::size_t i1 = angle_of(disc.angular, k.theta_in, "score");
    k.truth = ph.kernel(k.x, disc.angular, i2, i1);
    if (!k.valid) {
      ++m.k_invalid;
      continue;
    }
    pairs.insert({i2, i1});
    rel.push_back(std::abs(k.value - k.truth) / std::max(std::abs(k.truth), 1e-12));
  }
  m.k_samples = rel.size();
  m.direction_pairs = pairs.size();
  if (!rel.empty()) {
    m.k_rel_max = *std::max_element(rel.begin(), rel.end());
    m.k_rel_median = median(rel);
  }

  for (const auto& l : r.lines) {
    for (std::size_t i = 0; i < l.tau.size(); ++i) {
      if (!l.valid[i]) continue;
      const double other = 0.25 * (l.log_F_fwd[i] - l.log_F_bwd[i]) - 0.5 * std::log(l.transmission);
      m.tau_additivity = std::max(m.tau_additivity, std::abs(l.tau[i] + other + std::log(l.transmission)));
    }
  }
  r.metrics = m;
}

// ---------------------------------------------------------------------------------------------
// Point-source pipeline (n = 2, box)

namespace {

struct Beam {
  BoundarySource source;
  Vec3 anchor{};
  Vec3 dir{};
  std::size_t angle = 0;
};

class PointPipeline {
 public:
  PointPipeline(const Transport& t, const PointPipelineOptions& opt) : t_(t), opt_(opt), disc_(t.disc()) {}

  ReconstructionResult run();

 private:
  std::complex<double> pair_value(std::size_t a, std::size_t b, std::size_t node);
  const FunctionalField& measured_pair(std::size_t a, std::size_t b);
  void run_line(std::size_t fwd, std::size_t bwd, bool row, std::size_t fixed, const std::string& key);

  const Transport& t_;
  PointPipelineOptions opt_;
  const Discretization& disc_;
  ReconstructionResult res_;
  std::vector<Beam> beams_;
  SolveResult sol_;
  double P_ = 0.0, height_a_ = 0.0, height_s_ = 0.0;
  double sx_ = 0.0, sy_ = 0.0;
  std::size_t mx_ = 0, my_ = 0;
  std::map<std::pair<std::size_t, std::size_t>, FunctionalField> measured_;
  // tau(x, entry) of the row through node j and of the column through node i, per node
  std::vector<double> tau_row_, tau_col_;
  std::vector<double> T_row_, T_col_;
  std::vector<std::size_t> row_fwd_, row_bwd_, col_fwd_, col_bwd_;
  SigmaAccumulator sigma_;
};

std::complex<double> PointPipeline::pair_value(std::size_t a, std::size_t b, std::size_t node) {
  if (opt_.measured) return measured_pair(a, b).values[node];
  const AngularGrid& ang = disc_.angular;
  double v = 0.0;
  for (std::size_t i = 0; i < ang.size(); ++i) v += ang.weight(i) * sol_.u(i, node, a) * sol_.u(ang.antipode(i), node, b);
  return P_ * v;
}

const FunctionalField& PointPipeline::measured_pair(std::size_t a, std::size_t b) {
  auto it = measured_.find({a, b});
  if (it != measured_.end()) return it->second;
  const auto& dp = t_.disc_ptr();
  const QLattice lattice = QLattice::for_grid(disc_.spatial);
  const auto quad = BoundaryQuadrature::build(dp, BoundarySide::Outgoing);
  const auto probes = lattice_probes(lattice, lattice.half(), 1.0);
  const SolveResult u00 = t_.solve({beams_[a].source});
  const MeasurementSet m = measure_A01(t_, probes, u00, quad);
  const SourceScales& sc = res_.scales;
  const BoundarySource det = make_point_detector(disc_, beams_[b].anchor, -beams_[b].dir, sc);
  FunctionalField H = H_recover(H_hat_from_boundary(m, sample_boundary(quad, {det}), lattice), dp);
  return measured_.emplace(std::make_pair(a, b), std::move(H)).first->second;
}

void PointPipeline::run_line(std::size_t fwd, std::size_t bwd, bool row, std::size_t fixed, const std::string& key) {
  const SpatialGrid& g = disc_.spatial;
  const AngularGrid& ang = disc_.angular;
  const std::size_t N = g.counts()[row ? 0 : 1];
  const std::size_t m = row ? mx_ : my_;
  const double s = row ? sx_ : sy_;
  auto node_at = [&](std::size_t q) { return row ? g.index(q, fixed, 0) : g.index(fixed, q, 0); };
  const Beam& bf = beams_[fwd];
  const Beam& bb = beams_[bwd];
  const double Bf = ang.weight(bf.angle) * height_a_ * height_s_;
  const double Bg_f = ang.weight(ang.antipode(bf.angle)) * height_a_;
  const double Bb = ang.weight(bb.angle) * height_a_ * height_s_;
  const double Bg_b = ang.weight(ang.antipode(bb.angle)) * height_a_;
  const double nf = 2.0 * Bf * Bg_f, nb = 2.0 * Bb * Bg_b;

  std::vector<double> hf(N), hb(N);
  for (std::size_t q = 0; q < N; ++q) {
    hf[q] = pair_value(fwd, fwd, node_at(q)).real();
    hb[q] = pair_value(bwd, bwd, node_at(q)).real();
  }
  const double T = sol_.u(bf.angle, node_at(N - 1), fwd) / (height_a_ * height_s_);

  LineRecord line;
  line.key = key;
  line.entry = g.node(node_at(0));
  line.direction = bf.dir;
  line.dt = g.spacing()[row ? 0 : 1];
  line.transmission = T;
  std::vector<std::size_t> nodes;
  for (std::size_t q = m; q + m < N; ++q) {
    const std::size_t node = node_at(q);
    const Vec3 x = g.node(node);
    const double Ff = (hf[q - m] - hf[q + m]) / s / nf;
    const double Fb = (hb[q + m] - hb[q - m]) / s / nb;
    BrokenRayDatum df{key + tag("/%03ld/fwd", static_cast<long>(q)), x, bf.dir, -bf.dir, Ff, hf[q] / nf, s,
                      res_.scales.spot, 0.0, true, {}};
    BrokenRayDatum db{key + tag("/%03ld/bwd", static_cast<long>(q)), x, bb.dir, -bb.dir, Fb, hb[q] / nb, s,
                      res_.scales.spot, 0.0, true, {}};
    double tau = kNaN;
    bool ok = true;
    try {
      tau = recover_tau(Ff, Fb, T);
    } catch (const LogDomainError&) {
      ok = false;
      df.valid = db.valid = false;
      df.flag = db.flag = "log-domain";
    }
    res_.data.push_back(df);
    res_.data.push_back(db);
    line.t.push_back(static_cast<double>(q) * line.dt);
    line.log_F_fwd.push_back(safe_log(Ff));
    line.log_F_bwd.push_back(safe_log(Fb));
    line.tau.push_back(tau);
    line.valid.push_back(ok);
    nodes.push_back(node);
  }
  if (line.tau.size() < 3) throw ContractError("point pipeline: the quotient step leaves fewer than three samples per line");
  sigma_on_segments(line);
  auto& tau_field = row ? tau_row_ : tau_col_;
  auto& T_field = row ? T_row_ : T_col_;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    tau_field[nodes[k]] = line.valid[k] ? line.tau[k] : kNaN;
    T_field[nodes[k]] = T;
    if (std::isfinite(line.sigma[k])) sigma_.add(g.node(nodes[k]), nodes[k], line.sigma[k]);
  }
  res_.lines.push_back(std::move(line));
}

ReconstructionResult PointPipeline::run() {
  const Domain& dom = disc_.domain;
  const SpatialGrid& g = disc_.spatial;
  const AngularGrid& ang = disc_.angular;
  if (dom.dim() != 2 || dom.shape() != DomainShape::Box)
    throw ContractError("point pipeline: requires a two-dimensional box");
  const Vec3 ex{1, 0, 0}, ey{0, 1, 0};
  const std::size_t ipx = angle_of(ang, ex, "point pipeline"), imx = angle_of(ang, -ex, "point pipeline");
  const std::size_t ipy = angle_of(ang, ey, "point pipeline"), imy = angle_of(ang, -ey, "point pipeline");

  res_.pipeline = opt_.measured ? "point-measured" : "point-oracle";
  res_.s = opt_.s > 0.0 ? opt_.s : default_quotient_step(disc_);
  res_.scales = opt_.scales ? *opt_.scales : ratio_policy(disc_, res_.s);
  const SourceScales& sc = res_.scales;
  if (std::sqrt(2.0) < 10.0 * sc.spot)
    throw ContractError("point pipeline: crossing angle is below ten spot radii");
  mx_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(res_.s / (2.0 * g.spacing()[0]))));
  my_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(res_.s / (2.0 * g.spacing()[1]))));
  sx_ = 2.0 * static_cast<double>(mx_) * g.spacing()[0];
  sy_ = 2.0 * static_cast<double>(my_) * g.spacing()[1];
  res_.s = std::max(sx_, sy_);

  const AngularDelta cap = make_angular_delta(ang, ex, sc.angular);
  height_a_ = cap.height;
  height_s_ = 1.0 / sc.spot;
  P_ = sc.spot;

  const std::size_t Nx = g.counts()[0], Ny = g.counts()[1];
  const std::size_t stride = std::max<std::size_t>(1, opt_.line_stride);
  auto add_beam = [&](const Vec3& x0, const Vec3& dir, std::size_t angle) {
    beams_.push_back({make_point_source(disc_, x0, dir, sc), x0, dir, angle});
    return beams_.size() - 1;
  };
  row_fwd_.assign(Ny, SIZE_MAX);
  row_bwd_.assign(Ny, SIZE_MAX);
  col_fwd_.assign(Nx, SIZE_MAX);
  col_bwd_.assign(Nx, SIZE_MAX);
  for (std::size_t j = 1; j + 1 < Ny; j += stride) {
    row_fwd_[j] = add_beam(g.node(0, j, 0), ex, ipx);
    row_bwd_[j] = add_beam(g.node(Nx - 1, j, 0), -ex, imx);
  }
  for (std::size_t i = 1; i + 1 < Nx; i += stride) {
    col_fwd_[i] = add_beam(g.node(i, 0, 0), ey, ipy);
    col_bwd_[i] = add_beam(g.node(i, Ny - 1, 0), -ey, imy);
  }
  std::vector<BoundarySource> sources;
  for (const auto& b : beams_) sources.push_back(b.source);
  sol_ = t_.solve(sources);

  tau_row_.assign(g.size(), kNaN);
  tau_col_.assign(g.size(), kNaN);
  T_row_.assign(g.size(), kNaN);
  T_col_.assign(g.size(), kNaN);
  for (std::size_t j = 0; j < Ny; ++j)
    if (row_fwd_[j] != SIZE_MAX) run_line(row_fwd_[j], row_bwd_[j], true, j, tag("row/%03ld", static_cast<long>(j)));
  for (std::size_t i = 0; i < Nx; ++i)
    if (col_fwd_[i] != SIZE_MAX) run_line(col_fwd_[i], col_bwd_[i], false, i, tag("col/%03ld", static_cast<long>(i)));
  res_.sigma = sigma_.finish();

  // k at a sparse set of crossing nodes
  const std::size_t ks = std::max<std::size_t>(1, opt_.k_stride);
  auto on_stride = [&](std::size_t q, std::size_t N) {
    const long d = static_cast<long>(q) - static_cast<long>(N / 2);
    return d % static_cast<long>(ks) == 0;
  };
  const double W = 2.0 * sc.spot;
  auto push_k = [&](KSample k, bool mirror) {
    res_.k.push_back(k);
    if (!mirror) return;
    k.key += "/mirror";
    k.mirrored = true;
    const Vec3 a = k.theta_out;
    k.theta_out = -k.theta_in;
    k.theta_in = -a;
    res_.k.push_back(k);
  };
  for (std::size_t j = my_; j + my_ < Ny; ++j) {
    if (row_fwd_[j] == SIZE_MAX || !on_stride(j, Ny)) continue;
    for (std::size_t i = mx_; i + mx_ < Nx; ++i) {
      if (col_fwd_[i] == SIZE_MAX || !on_stride(i, Nx)) continue;
      const std::size_t node = g.index(i, j, 0);
      const Vec3 x = g.node(node);
      const double tl = tau_row_[node], tr = -std::log(T_row_[node]) - tl;
      const double tb = tau_col_[node], tt = -std::log(T_col_[node]) - tb;

      // backscatter: k(x, -theta1, theta1) = F e^{2 tau(x, gamma_-(x, theta1))}
      const std::string base = tag("node/%03ld/%03ld", static_cast<long>(i), static_cast<long>(j));
      struct Back {
        const char* name;
        Vec3 dir;
        double tau;
      };
      for (const Back& b : {Back{"px", ex, tl}, Back{"mx", -ex, tr}, Back{"py", ey, tb}, Back{"my", -ey, tt}}) {
        KSample k;
        k.key = base + "/back/" + b.name;
        k.x = x;
        k.theta_in = b.dir;
        k.theta_out = -b.dir;
        const bool row = b.dir[0] != 0.0;
        const std::string dkey = (row ? tag("row/%03ld", static_cast<long>(j)) : tag("col/%03ld", static_cast<long>(i))) +
                                 tag("/%03ld/", static_cast<long>(row ? i : j)) +
                                 ((row ? b.dir[0] : b.dir[1]) > 0 ? "fwd" : "bwd");
        const auto it = std::find_if(res_.data.begin(), res_.data.end(), [&](const BrokenRayDatum& d) { return d.key == dkey; });
        if (it == res_.data.end() || !it->valid || !std::isfinite(b.tau)) {
          k.flag = "log-domain";
        } else {
          try {
            k.value = recover_k(it->F, b.tau, b.tau, opt_.attenuation_cap);
            k.valid = true;
          } catch (const DomainError& e) {
            k.flag = "attenuation-cap";
          }
        }
        push_k(k, false);
      }

      // crossings: theta1 along the row, theta2 along the column
      struct Cross {
        const char* name;
        std::size_t src;
        Vec3 theta1;
        double tau_in;
        std::size_t det;  // beam whose reversal is the detector
        Vec3 theta2;
        double tau_out;
      };
      const Cross crosses[] = {
          {"px-py", row_fwd_[j], ex, tl, col_bwd_[i], ey, tt},
          {"px-my", row_fwd_[j], ex, tl, col_fwd_[i], -ey, tb},
          {"mx-py", row_bwd_[j], -ex, tr, col_bwd_[i], ey, tt},
          {"mx-my", row_bwd_[j], -ex, tr, col_fwd_[i], -ey, tb},
      };
      for (const Cross& c : crosses) {
        const double up = pair_value(c.src, c.det, g.index(i, j + my_, 0)).real();
        const double dn = pair_value(c.src, c.det, g.index(i, j - my_, 0)).real();
        const double q = c.theta2[1] > 0 ? (up - dn) / sy_ : (dn - up) / sy_;
        const double Bf = ang.weight(beams_[c.src].angle) * height_a_ * height_s_;
        const double Bg = ang.weight(angle_of(ang, c.theta2, "point pipeline")) * height_a_;
        const double F = q * sy_ / (Bf * Bg * W);
        BrokenRayDatum d{base + "/cross/" + c.name, x, c.theta1, c.theta2, F,
                         pair_value(c.src, c.det, node).real() / (Bf * Bg * W), sy_, sc.spot, 0.0, true, {}};
        KSample k;
        k.key = d.key;
        k.x = x;
        k.theta_in = c.theta1;
        k.theta_out = c.theta2;
        if (!std::isfinite(c.tau_in) || !std::isfinite(c.tau_out)) {
          k.flag = "log-domain";
          d.valid = false;
          d.flag = k.flag;
        } else {
          try {
            k.value = recover_k(F, c.tau_out, c.tau_in, opt_.attenuation_cap);
            k.valid = true;
          } catch (const DomainError&) {
            k.flag = "attenuation-cap";
          }
        }
        res_.data.push_back(d);
        push_k(k, true);
      }
    }
  }
  for (const auto& d : res_.data)
    if (!d.valid) res_.failures.push_back(d.key + ": " + d.flag);
  score(res_, t_, opt_.interior_spacings);
  return std::move(res_);
}

}  // namespace

ReconstructionResult run_point_pipeline(const Transport& transport, const PointPipelineOptions& options) {
  PointPipeline p(transport, options);
  return p.run();
}

// ---------------------------------------------------------------------------------------------
// Oscillatory pipeline (n = 3)

namespace {

class OscillatoryPipeline {
 public:
  OscillatoryPipeline(const Transport& t, const OscillatoryPipelineOptions& opt) : t_(t), opt_(opt), disc_(t.disc()) {}
  ReconstructionResult run();

 private:
  struct LineTask {
    std::string key;
    Vec3 entry{}, exit{}, dir{};
    double length = 0.0;
    std::size_t col_in = 0, col_out = 0;  // point sources at entry (+dir) and exit (-dir)
    bool central = false;
  };
  struct KTask {
    std::string key;
    Vec3 x{}, theta1{}, theta2{};
    double tau_in = kNaN;
    std::size_t col_d = 0, col_e = 0;  // beams entering at gamma_+(x, theta2) along -theta2 and at gamma_-(x, theta2)
    std::size_t col_c = 0;             // narrow detector beam for the crossing quotient
  };

  /// Detector-beam radiance with its first scattering evaluated without the grid.
  struct DetectorField {
    const OscillatoryPipeline* self;
    const BoundarySource* source;
    std::size_t angle;  // cap node of the beam
    double step;
    RadianceField rest;  // collision beyond the first scattering
    std::vector<double> operator()(const Vec3& y) const;
  };
  DetectorField detector_field(const SolveResult& sol, std::size_t col, double spot) const;
  void rotation(std::size_t r, double alpha);
  std::vector<double> values_at(const SolveResult& s, std::size_t col, const Vec3& y) const;
  /// P sum_i w_i a(theta_i) b(-theta_i).
  std::complex<double> pair(const std::vector<std::complex<double>>& a, const std::vector<double>& b) const {
    return pair(a, b, P_);
  }
  std::complex<double> pair(const std::vector<std::complex<double>>& a, const std::vector<double>& b, double P) const;
  double point_pair(const SolveResult& s, std::size_t ca, std::size_t cb, const Vec3& y) const;

  const Transport& t_;
  OscillatoryPipelineOptions opt_;
  const Discretization& disc_;
  ReconstructionResult res_;
  SigmaAccumulator sigma_;
  double P_ = 1.0, height_a_ = 0.0, height_s_ = 0.0, h_osc_ = 0.0;
  SourceScales crossing_;
};

OscillatoryPipeline::DetectorField OscillatoryPipeline::detector_field(const SolveResult& sol, std::size_t col,
                                                                      double spot) const {
  const BoundarySource& g = sol.boundary[col];
  if (g.angles.size() != 1) throw ContractError("oscillatory pipeline: detector beams need single-node caps");
  RadianceField rest = sol.collision.select_columns({col});
  rest -= t_.scatter(t_.ballistic({g}));
  return {this, &g, g.angles[0], spot / 8.0, std::move(rest)};
}

std::vector<double> OscillatoryPipeline::DetectorField::operator()(const Vec3& y) const {
  const Transport& t = self->t_;
  const Discretization& disc = self->disc_;
  const AngularGrid& ang = disc.angular;
  const Vec3& th = ang.direction(angle);
  const BoundarySource& g = *source;
  auto beam = [&](const Vec3& z) {
    const Vec3 entry = z - disc.domain.exit_distance(z, -th) * th;
    const double v = g(entry, angle);
    return v == 0.0 ? 0.0 : std::exp(-t.tau(z, entry)) * v;
  };
  const double wa = ang.weight(angle);
  std::vector<double> v(ang.size());
  for (std::size_t i = 0; i < ang.size(); ++i) {
    const double first = t.lift_function(
        [&](const Vec3& z) { return wa * t.phantom().kernel(z, ang, i, angle) * beam(z); }, y, ang.direction(i), step);
    v[i] = (i == angle ? beam(y) : 0.0) + first + t.lift_at(rest, y, i, 0);
  }
  return v;
}

std::vector<double> OscillatoryPipeline::values_at(const SolveResult& s, std::size_t col, const Vec3& y) const {
  std::vector<double> v(disc_.angular.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = t_.evaluate(s, y, i, col);
  return v;
}

std::complex<double> OscillatoryPipeline::pair(const std::vector<std::complex<double>>& a,
                                               const std::vector<double>& b, double P) const {
  const AngularGrid& ang = disc_.angular;
  std::complex<double> v{0.0, 0.0};
  for (std::size_t i = 0; i < ang.size(); ++i) v += ang.weight(i) * a[i] * b[ang.antipode(i)];
  return P * v;
}

double OscillatoryPipeline::point_pair(const SolveResult& s, std::size_t ca, std::size_t cb, const Vec3& y) const {
  const std::vector<double> a = values_at(s, ca, y);
  const std::vector<double> b = ca == cb ? a : values_at(s, cb, y);
  std::vector<std::complex<double>> ac(a.begin(), a.end());
  return pair(ac, b).real();
}

void OscillatoryPipeline::rotation(std::size_t r, double alpha) {
  const Domain& dom = disc_.domain;
  const AngularGrid& ang = disc_.angular;
  const SourceScales& sc = res_.scales;
  const double s = res_.s;
  const Vec3 x3{0.0, -std::sin(alpha), std::cos(alpha)};
  const double h = h_osc_;

  // in-plane directions
  std::vector<std::size_t> plane;
  for (std::size_t i = 0; i < ang.size(); ++i)
    if (std::abs(dot(ang.direction(i), x3)) < 1e-6) plane.push_back(i);
  if (plane.size() < 4) throw ContractError("oscillatory pipeline: fewer than four angular nodes in the rotated plane");
  std::size_t i1 = plane[0];
  for (std::size_t i : plane)
    if (ang.direction(i)[0] > ang.direction(i1)[0] + 1e-12) i1 = i;
  const Vec3 th1 = ang.direction(i1);
  const std::size_t im1 = ang.antipode(i1);
  const Vec3 eperp = normalized(cross(x3, th1));
  const Vec3 c = dom.shape() == DomainShape::Ball ? dom.center() : 0.5 * (dom.lower() + dom.upper());
  const std::string rkey = tag("rot/%02ld", static_cast<long>(r));

  // plane sources +theta1 and -theta1
  const ComplexSource fp = make_oscillatory_source(disc_, th1, x3, sc);
  const ComplexSource fm = make_oscillatory_source(disc_, -th1, x3, sc);
  const SolveResult pl = t_.solve({fp.re, fp.im, fm.re, fm.im});
  auto plane_values = [&](std::size_t col, const Vec3& y) {
    std::vector<std::complex<double>> v(ang.size());
    const std::complex<double> ph = std::polar(1.0, -dot(x3, y) / h);
    for (std::size_t i = 0; i < ang.size(); ++i)
      v[i] = std::complex<double>(t_.evaluate(pl, y, i, col), t_.evaluate(pl, y, i, col + 1)) * ph;
    return v;
  };

  // tasks
  std::vector<BoundarySource> points;
  std::vector<std::size_t> group_end;  // solve chunks never split the columns of one task
  auto add_point = [&](const Vec3& x0, const Vec3& dir, const SourceScales& scales) {
    points.push_back(make_point_source(disc_, x0, dir, scales));
    return points.size() - 1;
  };
  std::vector<LineTask> lines;
  const std::size_t nl = r == 0 ? std::max<std::size_t>(1, opt_.sigma_lines) : 1;
  const double spacing = opt_.line_spacing > 0.0 ? opt_.line_spacing : max_spacing(disc_.spatial);
  for (std::size_t l = 0; l < nl; ++l) {
    const double off = (static_cast<double>(l) - 0.5 * static_cast<double>(nl - 1)) * spacing;
    const Vec3 p = c + off * eperp;
    if (!dom.contains(p)) continue;
    const RayChord ch = ray_trace(dom, p, th1);
    if (!beam_resolved(dom, ch.entry, th1, sc.spot) || !beam_resolved(dom, ch.exit, th1, sc.spot)) {
      res_.failures.push_back(rkey + tag("/line/%02ld: beam crosses a face edge or grazes the boundary", static_cast<long>(l)));
      continue;
    }
    LineTask L;
    L.key = rkey + tag("/line/%02ld", static_cast<long>(l));
    L.entry = ch.entry;
    L.exit = ch.exit;
    L.dir = th1;
    L.length = norm(ch.exit - ch.entry);
    L.central = 2 * l + 1 == nl;
    L.col_in = add_point(ch.entry, th1, sc);
    L.col_out = add_point(ch.exit, -th1, sc);
    group_end.push_back(points.size());
    lines.push_back(L);
  }

  // per line: sample positions, tau, sigma; the central line feeds k
  const double dt = max_spacing(disc_.spatial);
  const double line_s = opt_.line_s > 0.0 ? opt_.line_s : 4.0 * dt;
  const double Bf_plane = ang.weight(i1) * height_a_;
  const double Bf_point = ang.weight(i1) * height_a_ * height_s_;
  std::vector<KTask> ktasks;
  std::map<std::size_t, LineRecord> records;

  // chunked solves over point sources, lines first so k tasks find their tau
  const std::size_t batch = std::max<std::size_t>(3, opt_.batch);
  auto process_line = [&](const SolveResult& sol, std::size_t base, LineTask& L) {
    LineRecord rec;
    rec.key = L.key;
    rec.entry = L.entry;
    rec.direction = L.dir;
    rec.dt = dt;
    const std::size_t n = L.length > line_s + dt ? static_cast<std::size_t>(std::floor((L.length - line_s - dt) / dt)) + 1 : 0;
    if (n < 3) {
      res_.failures.push_back(L.key + ": chord too short for the quotient step");
      return;
    }
    const double t0 = 0.5 * (L.length - static_cast<double>(n - 1) * dt);
    // transmission from the plane source: phase of the entry point removed
    const Vec3 xe = L.exit - 1e-9 * L.dir;
    const std::complex<double> ue(t_.evaluate(pl, xe, i1, 0), t_.evaluate(pl, xe, i1, 1));
    rec.transmission = (ue * std::polar(1.0, -dot(x3, L.entry) / h)).real() / height_a_;
    const double Bg = ang.weight(im1) * height_a_;
    for (std::size_t q = 0; q < n; ++q) {
      const double tq = t0 + static_cast<double>(q) * dt;
      const Vec3 x = L.entry + tq * L.dir;
      const Vec3 xm = x - (0.5 * line_s) * L.dir, xp = x + (0.5 * line_s) * L.dir;
      // forward: plane +theta1 against the detector at the entry along -theta1
      const std::vector<double> dm = values_at(sol, base + L.col_in, xm), dp = values_at(sol, base + L.col_in, xp);
      const std::complex<double> Hm = pair(plane_values(0, xm), dm), Hp = pair(plane_values(0, xp), dp);
      const std::complex<double> qf = (Hm - Hp) / line_s / (2.0 * Bf_plane * Bg);
      // backward: point source at the exit against itself
      const double bm = point_pair(sol, base + L.col_out, base + L.col_out, xm);
      const double bp = point_pair(sol, base + L.col_out, base + L.col_out, xp);
      const double Fb = (bp - bm) / line_s / (2.0 * Bf_point * Bg);
      BrokenRayDatum df{L.key + tag("/%03ld/fwd", static_cast<long>(q)), x, L.dir, -L.dir, qf.real(),
                        0.5 * (Hm + Hp).real() / (2.0 * Bf_plane * Bg), line_s, h, 0.0, true, {}};
      df.imag_ratio = std::abs(qf.imag()) / std::max(std::abs(qf.real()), 1e-300);
      BrokenRayDatum db{L.key + tag("/%03ld/bwd", static_cast<long>(q)), x, -L.dir, L.dir, Fb,
                        0.5 * (bm + bp) / (2.0 * Bf_point * Bg), line_s, sc.spot, 0.0, true, {}};
      double tau = kNaN;
      bool ok = true;
      try {
        tau = recover_tau(df.F, Fb, rec.transmission);
      } catch (const LogDomainError&) {
        ok = false;
        df.valid = db.valid = false;
        df.flag = db.flag = "log-domain";
      }
      res_.data.push_back(df);
      res_.data.push_back(db);
      rec.t.push_back(tq);
      rec.log_F_fwd.push_back(safe_log(df.F));
      rec.log_F_bwd.push_back(safe_log(Fb));
      rec.tau.push_back(tau);
      rec.valid.push_back(ok);
    }
    sigma_on_segments(rec);
    for (std::size_t q = 0; q < n; ++q)
      if (std::isfinite(rec.sigma[q])) sigma_.add(rec.entry + rec.t[q] * rec.direction, SIZE_MAX, rec.sigma[q]);

    if (!L.central) {
      res_.lines.push_back(std::move(rec));
      return;
    }
    // k points on the central line with in-plane theta2
    std::vector<std::size_t> cand;
    for (std::size_t i : plane) {
      const Vec3 d2 = ang.direction(i);
      if (i == im1 || norm(d2 - th1) < 10.0 * crossing_.spot) continue;
      cand.push_back(i);
    }
    std::sort(cand.begin(), cand.end(), [&](std::size_t a, std::size_t b) {
      return dot(ang.direction(a), th1) > dot(ang.direction(b), th1);
    });
    // most forward pairs first: the tube term of the crossing quotient grows like tan of half the scattering angle
    const double r = std::max(sc.spot, crossing_.spot);
    for (std::size_t kp = 0; kp < opt_.k_points; ++kp) {
      const std::size_t q = ((kp + 1) * n) / (opt_.k_points + 1);
      if (!rec.valid[q]) continue;
      const Vec3 x = rec.entry + rec.t[q] * rec.direction;
      std::size_t taken = 0;
      for (std::size_t i2 : cand) {
        if (taken == opt_.k_directions) break;
        const Vec3 th2 = ang.direction(i2);
        if (!dom.contains(x - (0.5 * s) * th2) || !dom.contains(x + (0.5 * s) * th2)) continue;
        const RayChord ch = ray_trace(dom, x, th2);
        if (!beam_resolved(dom, ch.exit, th2, r) || !beam_resolved(dom, ch.entry, th2, r)) continue;
        ++taken;
        KTask k;
        k.key = rkey + tag("/k/%02ld/%03ld", static_cast<long>(kp), static_cast<long>(i2));
        k.x = x;
        k.theta1 = th1;
        k.theta2 = th2;
        k.tau_in = rec.tau[q];
        k.col_d = add_point(ch.exit, -th2, sc);
        k.col_e = add_point(ch.entry, th2, sc);
        k.col_c = add_point(ch.exit, -th2, crossing_);
        group_end.push_back(points.size());
        ktasks.push_back(k);
      }
    }
    res_.lines.push_back(std::move(rec));
  };

  auto process_k = [&](const SolveResult& sol, std::size_t base, const KTask& k) {
    const std::size_t i2 = angle_of(ang, k.theta2, "oscillatory pipeline");
    const Vec3 xm = k.x - (0.5 * s) * k.theta2, xp = k.x + (0.5 * s) * k.theta2;
    const double Bg2 = ang.weight(i2) * height_a_;
    // crossing: plane +theta1 against the detector at gamma_+(x, theta2), for two detector widths
    auto crossing = [&](std::size_t col, double spot) {
      const DetectorField v = detector_field(sol, col, spot);
      const double P = spot * spot;
      const std::complex<double> Hm = pair(plane_values(0, xm), v(xm), P), Hp = pair(plane_values(0, xp), v(xp), P);
      return std::make_pair((Hp - Hm) / s / (Bf_plane * Bg2), 0.5 * (Hm + Hp).real() / (Bf_plane * Bg2));
    };
    const double hc = crossing_.spot, hd = sc.spot;
    const auto [qc, Hc] = crossing(base + k.col_c, hc);
    const auto [qd, Hd] = crossing(base + k.col_d, hd);
    // the detector tube contributes O(h); extrapolate both quotients to h = 0
    const std::complex<double> q = (hd * qc - hc * qd) / (hd - hc);
    const double Hx = (hd * Hc - hc * Hd) / (hd - hc);
    BrokenRayDatum d{k.key, k.x, k.theta1, k.theta2, q.real(), Hx, s, h, 0.0, true, {}};
    d.imag_ratio = std::abs(q.imag()) / std::max(std::abs(q.real()), 1e-300);

    // tau(x, gamma_+(x, theta2)) from point backscatter on the theta2 chord
    const RayChord ch = ray_trace(dom, k.x, k.theta2);
    const double Bpt = ang.weight(i2) * height_a_ * height_s_;
    const double Bgd = ang.weight(ang.antipode(i2)) * height_a_;
    const double ef = (point_pair(sol, base + k.col_e, base + k.col_e, xm) -
                       point_pair(sol, base + k.col_e, base + k.col_e, xp)) / s / (2.0 * Bpt * Bgd);
    const double eb = (point_pair(sol, base + k.col_d, base + k.col_d, xp) -
                       point_pair(sol, base + k.col_d, base + k.col_d, xm)) / s / (2.0 * Bpt * Bgd);
    const double T2 = t_.evaluate(sol, ch.exit - 1e-9 * k.theta2, i2, base + k.col_e) / (height_a_ * height_s_);
    KSample ks;
    ks.key = k.key;
    ks.x = k.x;
    ks.theta_in = k.theta1;
    ks.theta_out = k.theta2;
    try {
      const double tau_e = recover_tau(ef, eb, T2);  // tau(x, gamma_-(x, theta2))
      const double tau_out = -std::log(T2) - tau_e;
      ks.value = recover_k(d.F, tau_out, k.tau_in, opt_.attenuation_cap);
      ks.valid = true;
    } catch (const LogDomainError&) {
      ks.flag = "log-domain";
      d.valid = false;
      d.flag = ks.flag;
    } catch (const DomainError&) {
      ks.flag = "attenuation-cap";
    }
    res_.data.push_back(d);
    res_.k.push_back(ks);
    ks.key += "/mirror";
    ks.mirrored = true;
    ks.theta_out = -k.theta1;
    ks.theta_in = -k.theta2;
    res_.k.push_back(ks);
  };

  // lines first; their k tasks append more point columns which are solved afterwards
  std::size_t done = 0;
  std::size_t line_next = 0, k_next = 0;
  std::size_t g = 0;
  while (done < points.size()) {
    std::size_t end = group_end[g++];
    while (g < group_end.size() && group_end[g] - done <= batch) end = group_end[g++];
    const std::vector<BoundarySource> chunk(points.begin() + static_cast<long>(done),
                                            points.begin() + static_cast<long>(end));
    const SolveResult sol = t_.solve(chunk);
    auto inside = [&](std::size_t a) { return a >= done && a < end; };
    while (line_next < lines.size() && inside(lines[line_next].col_in)) {
      LineTask L = lines[line_next];
      L.col_in -= done;
      L.col_out -= done;
      process_line(sol, 0, L);
      ++line_next;
    }
    while (k_next < ktasks.size() && inside(ktasks[k_next].col_d)) {
      KTask k = ktasks[k_next];
      k.col_d -= done;
      k.col_e -= done;
      k.col_c -= done;
      process_k(sol, 0, k);
      ++k_next;
    }
    done = end;
  }
}

ReconstructionResult OscillatoryPipeline::run() {
  if (disc_.domain.dim() != 3) throw ContractError("oscillatory pipeline: requires n = 3");
  res_.pipeline = "oscillatory";
  res_.s = opt_.s > 0.0 ? opt_.s : default_quotient_step(disc_);
  res_.scales = opt_.scales ? *opt_.scales : ratio_policy(disc_, res_.s);
  h_osc_ = res_.scales.oscillation;
  height_a_ = std::pow(res_.scales.angular, -2.0);
  height_s_ = std::pow(res_.scales.spot, -2.0);
  P_ = std::pow(res_.scales.spot, 2.0);
  crossing_ = res_.scales;
  crossing_.spot = std::max(res_.s * res_.s / disc_.domain.diameter(), max_spacing(disc_.spatial));  // detector prefactor; the point columns carry the spot height
  for (std::size_t r = 0; r < opt_.rotations.size(); ++r) rotation(r, opt_.rotations[r]);
  res_.sigma = sigma_.finish();
  for (const auto& d : res_.data)
    if (!d.valid) res_.failures.push_back(d.key + ": " + d.flag);
  score(res_, t_, opt_.interior_spacings);
  return std::move(res_);
}

}  // namespace

ReconstructionResult run_oscillatory_pipeline(const Transport& transport, const OscillatoryPipelineOptions& options) {
  OscillatoryPipeline p(transport, options);
  return p.run();
}

// ---------------------------------------------------------------------------------------------

CoefficientStabilityReport stability_report(const ReconstructionResult& r1, const ReconstructionResult& r2) {
  CoefficientStabilityReport rep;
  std::map<std::string, const LineRecord*> l2;
  for (const auto& l : r2.lines) l2[l.key] = &l;
  for (const auto& a : r1.lines) {
    const auto it = l2.find(a.key);
    if (it == l2.end()) continue;
    const LineRecord& b = *it->second;
    const std::size_t n = std::min(a.tau.size(), b.tau.size());
    for (int dirn = 0; dirn < 2; ++dirn) {
      const auto& fa = dirn ? a.log_F_bwd : a.log_F_fwd;
      const auto& fb = dirn ? b.log_F_bwd : b.log_F_fwd;
      LineRecord diff;
      diff.dt = a.dt;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = fa[i] - fb[i];
        diff.tau.push_back(d);
        diff.valid.push_back(a.valid[i] && b.valid[i] && std::isfinite(d));
      }
      sigma_on_segments(diff);
      double sup = 0.0, dsup = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (!diff.valid[i]) continue;
        sup = std::max(sup, std::abs(diff.tau[i]));
        if (std::isfinite(diff.sigma[i])) dsup = std::max(dsup, std::abs(diff.sigma[i]));
      }
      rep.sigma_rhs = std::max(rep.sigma_rhs, 0.5 * (sup + dsup));
    }
  }
  for (std::size_t i = 0; i < std::min(r1.sigma.size(), r2.sigma.size()); ++i) {
    const SigmaSample &a = r1.sigma[i], &b = r2.sigma[i];
    if (!a.valid || !b.valid || norm(a.x - b.x) > 1e-12) continue;
    rep.sigma_lhs = std::max(rep.sigma_lhs, std::abs(a.value - b.value));
    ++rep.sigma_pairs;
  }

  std::map<std::string, const BrokenRayDatum*> d2;
  for (const auto& d : r2.data) d2[d.key] = &d;
  double dH = 0.0, dF = 0.0;
  for (const auto& a : r1.data) {
    const auto it = d2.find(a.key);
    if (it == d2.end() || !a.valid || !it->second->valid) continue;
    dH = std::max(dH, std::abs(a.H - it->second->H));
    dF = std::max(dF, std::abs(a.F - it->second->F));
  }
  std::map<std::string, const KSample*> k2;
  for (const auto& k : r2.k) k2[k.key] = &k;
  for (const auto& a : r1.k) {
    const auto it = k2.find(a.key);
    if (a.mirrored || it == k2.end() || !a.valid || !it->second->valid) continue;
    rep.k_lhs = std::max(rep.k_lhs, std::abs(a.value - it->second->value));
    ++rep.k_pairs;
  }
  const double tau_max = std::max(r1.max_chord_tau(), r2.max_chord_tau());
  rep.k_rhs = std::exp(2.0 * tau_max) * (dH + dF);
  return rep;
}

}  // namespace mfao
