#include "mfao/functional.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

namespace mfao {

namespace {

using cplx = std::complex<double>;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

}  // namespace

QLattice QLattice::truncated(const SpatialGrid& grid, int max_index) {
  QLattice q;
  q.dim_ = grid.dim();
  const auto counts = grid.counts();
  for (int a = 0; a < 3; ++a) {
    if (counts[a] < 2) {
      q.spacing_[a] = 0.0;
      q.extent_[a] = 0;
      continue;
    }
    if (counts[a] % 2 == 0) throw ContractError("Q lattice needs an odd node count per axis");
    q.spacing_[a] = kTwoPi / (static_cast<double>(counts[a]) * grid.spacing()[a]);
    q.extent_[a] = std::min<int>(max_index, static_cast<int>((counts[a] - 1) / 2));
  }
  for (int m2 = -q.extent_[2]; m2 <= q.extent_[2]; ++m2) {
    for (int m1 = -q.extent_[1]; m1 <= q.extent_[1]; ++m1) {
      for (int m0 = -q.extent_[0]; m0 <= q.extent_[0]; ++m0) q.indices_.push_back({m0, m1, m2});
    }
  }
  return q;
}

QLattice QLattice::for_grid(const SpatialGrid& grid) {
  return truncated(grid, std::numeric_limits<int>::max());
}

Vec3 QLattice::wavevector(std::size_t k) const {
  const auto& m = indices_[k];
  return {spacing_[0] * m[0], spacing_[1] * m[1], spacing_[2] * m[2]};
}

std::optional<std::size_t> QLattice::find(const std::array<int, 3>& m) const {
  for (int a = 0; a < 3; ++a) {
    if (std::abs(m[a]) > extent_[a]) return std::nullopt;
  }
  const std::size_t n0 = 2 * extent_[0] + 1, n1 = 2 * extent_[1] + 1;
  return static_cast<std::size_t>(m[0] + extent_[0]) +
         n0 * (static_cast<std::size_t>(m[1] + extent_[1]) + n1 * static_cast<std::size_t>(m[2] + extent_[2]));
}

std::size_t QLattice::opposite(std::size_t k) const {
  const auto& m = indices_[k];
  return *find({-m[0], -m[1], -m[2]});
}

std::vector<std::size_t> QLattice::half() const {
  std::vector<std::size_t> out;
  out.push_back(*find({0, 0, 0}));
  for (std::size_t k = 0; k < indices_.size(); ++k) {
    const auto& m = indices_[k];
    const bool positive = m[0] > 0 || (m[0] == 0 && (m[1] > 0 || (m[1] == 0 && m[2] > 0)));
    if (positive) out.push_back(k);
  }
  return out;
}

double QLattice::cell_volume() const {
  double v = 1.0;
  for (int a = 0; a < 3; ++a) {
    if (spacing_[a] > 0.0) v *= spacing_[a];
  }
  return v;
}

Vec3 QLattice::max_wavevector() const {
  return {spacing_[0] * extent_[0], spacing_[1] * extent_[1], spacing_[2] * extent_[2]};
}

std::vector<UltrasoundProbe> lattice_probes(const QLattice& lattice, const std::vector<std::size_t>& points, double a,
                                            double b) {
  std::vector<UltrasoundProbe> probes;
  for (std::size_t k : points) {
    UltrasoundProbe p;
    p.Q = lattice.wavevector(k);
    p.a = a;
    p.b = b;
    probes.push_back(p);
    if (norm(p.Q) > 0.0) {
      p.phase = std::numbers::pi / 2;
      probes.push_back(p);
    }
  }
  return probes;
}

// ---------------------------------------------------------------------------

FunctionalField functional_from(const RadianceField& u, const std::vector<std::size_t>& u_cols,
                                const RadianceField& v, const std::vector<std::size_t>& v_cols) {
  const Discretization& d = u.disc();
  FunctionalField H;
  H.disc = u.disc_ptr();
  H.values.assign(d.spatial.size(), cplx(0.0, 0.0));
  const bool uc = u_cols.size() > 1, vc = v_cols.size() > 1;
  for (std::size_t i = 0; i < u.angles(); ++i) {
    const double w = d.angular.weight(i);
    for (std::size_t n = 0; n < u.nodes(); ++n) {
      const cplx a(u(i, n, u_cols[0]), uc ? u(i, n, u_cols[1]) : 0.0);
      const cplx b(v(i, n, v_cols[0]), vc ? v(i, n, v_cols[1]) : 0.0);
      H.values[n] += w * a * b;
    }
  }
  return H;
}

FunctionalField H_oracle(const Transport& transport, const std::vector<BoundarySource>& f,
                         const std::vector<BoundarySource>& g) {
  if (f.empty() || f.size() > 2 || g.empty() || g.size() > 2) {
    throw ContractError("H_oracle: sources are given as one real or a (real, imaginary) pair");
  }
  const SolveResult u = transport.solve(f);
  const SolveResult v = transport.solve_adjoint(g);
  std::vector<std::size_t> uc(f.size()), vc(g.size());
  for (std::size_t c = 0; c < uc.size(); ++c) uc[c] = c;
  for (std::size_t c = 0; c < vc.size(); ++c) vc[c] = c;
  FunctionalField H = functional_from(u.u, uc, v.u, vc);
  H.provenance = Provenance::Oracle;
  H.label = "oracle";
  return H;
}

// ---------------------------------------------------------------------------

namespace {

/// Applies a per-axis linear map: out[..., r, ...] = sum_c M[r][c] in[..., c, ...].
std::vector<cplx> apply_axis(const std::vector<cplx>& in, std::array<std::size_t, 3>& dims, int axis,
                             const std::vector<cplx>& M, std::size_t rows) {
  const std::size_t cols = dims[axis];
  std::array<std::size_t, 3> out_dims = dims;
  out_dims[axis] = rows;
  std::vector<cplx> out(out_dims[0] * out_dims[1] * out_dims[2], cplx(0.0, 0.0));
  const std::size_t stride_in = axis == 0 ? 1 : (axis == 1 ? dims[0] : dims[0] * dims[1]);
  const std::size_t stride_out = axis == 0 ? 1 : (axis == 1 ? out_dims[0] : out_dims[0] * out_dims[1]);
  const std::size_t outer = axis == 2 ? 1 : (axis == 1 ? dims[2] : dims[1] * dims[2]);
  const std::size_t inner = axis == 0 ? 1 : (axis == 1 ? dims[0] : dims[0] * dims[1]);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t s = 0; s < inner; ++s) {
      const std::size_t base_in = o * cols * inner + s;
      const std::size_t base_out = o * rows * inner + s;
      for (std::size_t r = 0; r < rows; ++r) {
        cplx acc(0.0, 0.0);
        for (std::size_t c = 0; c < cols; ++c) acc += M[r * cols + c] * in[base_in + c * stride_in];
        out[base_out + r * stride_out] = acc;
      }
    }
  }
  dims = out_dims;
  return out;
}

}  // namespace

CoefficientTable analyze(const FunctionalField& H, const QLattice& lattice) {
  const SpatialGrid& g = H.disc->spatial;
  std::array<std::size_t, 3> dims = g.counts();
  std::vector<cplx> data = H.values;
  for (int a = 0; a < 3; ++a) {
    const std::size_t n = dims[a];
    const std::size_t rows = 2 * lattice.half_extent()[a] + 1;
    std::vector<cplx> M(rows * n);
    for (std::size_t r = 0; r < rows; ++r) {
      const double q = lattice.spacing()[a] * (static_cast<int>(r) - lattice.half_extent()[a]);
      for (std::size_t i = 0; i < n; ++i) {
        double w = 1.0;
        if (n > 1) w = g.spacing()[a] * ((i == 0 || i == n - 1) ? 0.5 : 1.0);
        const double x = g.lower()[a] + g.spacing()[a] * static_cast<double>(i);
        M[r * n + i] = w * std::polar(1.0, -q * x);
      }
    }
    data = apply_axis(data, dims, a, M, rows);
  }
  CoefficientTable t;
  t.lattice = lattice;
  t.values = std::move(data);
  t.present.assign(lattice.size(), true);
  return t;
}

FunctionalField H_recover(const CoefficientTable& table, const DiscretizationPtr& disc) {
  const SpatialGrid& g = disc->spatial;
  const QLattice& lat = table.lattice;
  std::array<std::size_t, 3> dims{};
  for (int a = 0; a < 3; ++a) dims[a] = 2 * lat.half_extent()[a] + 1;
  std::vector<cplx> data(table.values.size());
  for (std::size_t k = 0; k < data.size(); ++k) data[k] = table.present[k] ? table.values[k] : cplx(0.0, 0.0);
  for (int a = 0; a < 3; ++a) {
    const std::size_t n = g.counts()[a];
    const std::size_t cols = dims[a];
    std::vector<cplx> M(n * cols);
    for (std::size_t i = 0; i < n; ++i) {
      double scale = 1.0;
      if (n > 1) scale = lat.spacing()[a] / kTwoPi * ((i == 0 || i == n - 1) ? 2.0 : 1.0);
      const double x = g.lower()[a] + g.spacing()[a] * static_cast<double>(i);
      for (std::size_t c = 0; c < cols; ++c) {
        const double q = lat.spacing()[a] * (static_cast<int>(c) - lat.half_extent()[a]);
        M[i * cols + c] = scale * std::polar(1.0, q * x);
      }
    }
    data = apply_axis(data, dims, a, M, n);
  }
  FunctionalField H;
  H.disc = disc;
  H.values = std::move(data);
  H.provenance = Provenance::FourierRecovered;
  H.label = "fourier-recovered";
  return H;
}

std::complex<double> boundary_pairing(const MeasurementSet& m, std::size_t probe, const BoundaryField& g) {
  const auto& samples = m.quadrature->samples();
  if (g.quadrature->size() != samples.size()) throw ContractError("boundary_pairing: detector sampled on another quadrature");
  const bool uc = m.source_columns > 1, gc = g.columns > 1;
  cplx acc(0.0, 0.0);
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const cplx u(m.values(k, m.column(probe, 0)), uc ? m.values(k, m.column(probe, 1)) : 0.0);
    const cplx gv(g(k, 0), gc ? g(k, 1) : 0.0);
    acc += samples[k].weight * u * gv;
  }
  return acc;
}

std::complex<double> modulated_integral(const FunctionalField& H, const UltrasoundProbe& probe) {
  const SpatialGrid& g = H.disc->spatial;
  cplx acc(0.0, 0.0);
  for (std::size_t n = 0; n < g.size(); ++n) {
    acc += g.quadrature_weight(n) * probe.a * probe.modulation(g.node(n)) * H.values[n];
  }
  return acc;
}

namespace {

struct PhasePair {
  std::optional<cplx> r0, r1;
  double a = 0.0;
};

std::size_t lattice_slot(const QLattice& lat, const Vec3& Q) {
  std::array<int, 3> m{0, 0, 0};
  for (int a = 0; a < 3; ++a) {
    if (lat.spacing()[a] == 0.0) {
      if (std::abs(Q[a]) > 1e-12) throw ContractError("probe wavevector is off the lattice");
      continue;
    }
    const double u = Q[a] / lat.spacing()[a];
    m[a] = static_cast<int>(std::lround(u));
    if (std::abs(u - m[a]) > 1e-9) throw ContractError("probe wavevector is off the lattice");
  }
  const auto k = lat.find(m);
  if (!k) throw ContractError("probe wavevector lies outside the lattice");
  return *k;
}

}  // namespace

CoefficientTable H_hat_from_boundary(const MeasurementSet& m, const BoundaryField& g, const QLattice& lattice,
                                     bool parity_fill) {
  std::map<std::size_t, PhasePair> pairs;
  for (std::size_t p = 0; p < m.probes.size(); ++p) {
    const UltrasoundProbe& probe = m.probes[p];
    PhasePair& slot = pairs[lattice_slot(lattice, probe.Q)];
    const cplx r = boundary_pairing(m, p, g);
    slot.a = probe.a;
    if (std::abs(probe.phase) < 1e-12) {
      slot.r0 = r;
    } else if (std::abs(probe.phase - std::numbers::pi / 2) < 1e-12) {
      slot.r1 = r;
    } else {
      throw ContractError("H_hat_from_boundary: probe phases must be 0 or pi/2");
    }
  }

  CoefficientTable t;
  t.lattice = lattice;
  t.values.assign(lattice.size(), cplx(0.0, 0.0));
  t.present.assign(lattice.size(), false);
  bool all_zero_coupling = !pairs.empty();
  const auto coefficient = [&](const PhasePair& pp, double sign) {
    if (pp.a == 0.0) return cplx(0.0, 0.0);
    return (*pp.r0 + cplx(0.0, sign) * pp.r1.value_or(cplx(0.0, 0.0))) / pp.a;
  };
  for (const auto& [k, pp] : pairs) {
    const bool origin = norm(lattice.wavevector(k)) == 0.0;
    if (!pp.r0 || (!pp.r1 && !origin)) {
      throw IncompleteDataError("missing probe phase for lattice point " + std::to_string(k));
    }
    if (pp.a != 0.0) all_zero_coupling = false;
    t.values[k] = coefficient(pp, 1.0);
    t.present[k] = true;
  }
  if (parity_fill) {
    for (const auto& [k, pp] : pairs) {
      const std::size_t o = lattice.opposite(k);
      if (t.present[o]) continue;
      t.values[o] = coefficient(pp, -1.0);
      t.present[o] = true;
      ++t.parity_filled;
    }
  }
  t.degenerate = all_zero_coupling;
  return t;
}

FunctionalStabilityReport stability_gap(const FunctionalField& H1, const FunctionalField& H2,
                                        const MeasurementSet& m1, const MeasurementSet& m2, const BoundaryField& g,
                                        const QLattice& lattice) {
  if (H1.size() != H2.size()) throw ContractError("stability_gap: functionals on different grids");
  if (m1.probes.size() != m2.probes.size() || m1.values.values.size() != m2.values.values.size()) {
    throw ContractError("stability_gap: measurement sets differ in design");
  }
  FunctionalStabilityReport r;
  for (std::size_t n = 0; n < H1.size(); ++n) r.lhs = std::max(r.lhs, std::abs(H1.values[n] - H2.values[n]));
  const bool gc = g.columns > 1;
  for (std::size_t k = 0; k < g.quadrature->size(); ++k) {
    r.g_sup = std::max(r.g_sup, std::abs(cplx(g(k, 0), gc ? g(k, 1) : 0.0)));
  }
  std::vector<bool> measured(lattice.size(), false);
  for (const auto& p : m1.probes) measured[lattice_slot(lattice, p.Q)] = true;
  const auto& samples = m1.quadrature->samples();
  const bool uc = m1.source_columns > 1;
  double a_min = std::numeric_limits<double>::infinity();
  double l1 = 0.0;
  for (std::size_t p = 0; p < m1.probes.size(); ++p) {
    const std::size_t k = lattice_slot(lattice, m1.probes[p].Q);
    const double mult = (norm(m1.probes[p].Q) > 0.0 && !measured[lattice.opposite(k)]) ? 2.0 : 1.0;
    a_min = std::min(a_min, m1.probes[p].a);
    double s = 0.0;
    for (std::size_t q = 0; q < samples.size(); ++q) {
      const cplx d1(m1.values(q, m1.column(p, 0)), uc ? m1.values(q, m1.column(p, 1)) : 0.0);
      const cplx d2(m2.values(q, m2.column(p, 0)), uc ? m2.values(q, m2.column(p, 1)) : 0.0);
      s += samples[q].weight * std::abs(d1 - d2);
    }
    l1 += mult * s;
  }
  r.data_l1 = lattice.cell_volume() * l1;
  const int n = lattice.dim();
  r.constant_bound = std::pow(2.0, n) / (std::pow(kTwoPi, n) * a_min);
  r.rhs = r.constant_bound * r.g_sup * r.data_l1;
  r.observed_constant = (r.g_sup * r.data_l1) > 0.0 ? r.lhs / (r.g_sup * r.data_l1) : 0.0;
  r.holds = r.lhs <= r.rhs * (1.0 + 1e-12) + 1e-300;
  return r;
}

}  // namespace mfao
