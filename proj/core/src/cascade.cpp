#include "mfao/cascade.hpp"

#include <algorithm>

namespace mfao {

RadianceField modulated_source(const RadianceField& u, const std::vector<UltrasoundProbe>& probes, bool use_b) {
  const Discretization& d = u.disc();
  const std::size_t sc = u.columns();
  const std::size_t cols = probes.size() * sc;
  RadianceField out(u.disc_ptr(), cols);
  std::vector<double> factor(d.spatial.size() * probes.size());
  for (std::size_t n = 0; n < d.spatial.size(); ++n) {
    const Vec3 x = d.spatial.node(n);
    for (std::size_t p = 0; p < probes.size(); ++p) {
      const double amp = use_b ? probes[p].b : probes[p].a;
      factor[n * probes.size() + p] = amp * probes[p].modulation(x);
    }
  }
  for (std::size_t i = 0; i < u.angles(); ++i) {
    for (std::size_t n = 0; n < u.nodes(); ++n) {
      const double* src = u.row(i, n);
      double* dst = out.row(i, n);
      for (std::size_t p = 0; p < probes.size(); ++p) {
        const double m = factor[n * probes.size() + p];
        for (std::size_t c = 0; c < sc; ++c) dst[p * sc + c] = m * src[c];
      }
    }
  }
  return out;
}

CascadeSolution solve_cascade(const Transport& transport, const std::vector<UltrasoundProbe>& probes,
                              const std::vector<BoundarySource>& f, const CascadeOptions& options) {
  CascadeSolution sol;
  sol.probes = probes;
  sol.source_columns = f.size();
  sol.u00 = transport.solve(f);
  const std::size_t sc = f.size();
  sol.u01 = RadianceField(transport.disc_ptr(), probes.size() * sc);
  if (options.compute_u11) sol.u11 = RadianceField(transport.disc_ptr(), probes.size() * sc);
  const std::size_t batch = std::max<std::size_t>(1, options.batch);
  for (std::size_t start = 0; start < probes.size(); start += batch) {
    const std::size_t end = std::min(probes.size(), start + batch);
    const std::vector<UltrasoundProbe> group(probes.begin() + start, probes.begin() + end);
    const SolveResult u01 = transport.solve_internal(modulated_source(sol.u00.u, group, false));
    for (std::size_t c = 0; c < u01.u.columns(); ++c) sol.u01.assign_column(start * sc + c, u01.u, c);
    if (options.compute_u11) {
      // Each probe couples its own u01 column to u11.
      RadianceField src(transport.disc_ptr(), u01.u.columns());
      for (std::size_t p = 0; p < group.size(); ++p) {
        std::vector<std::size_t> cols;
        for (std::size_t c = 0; c < sc; ++c) cols.push_back(p * sc + c);
        const RadianceField s = modulated_source(u01.u.select_columns(cols), {group[p]}, true);
        for (std::size_t c = 0; c < sc; ++c) src.assign_column(p * sc + c, s, c);
      }
      const SolveResult u11 = transport.solve_internal(src);
      for (std::size_t c = 0; c < u11.u.columns(); ++c) sol.u11.assign_column(start * sc + c, u11.u, c);
    }
  }
  return sol;
}

MeasurementSet measure_A01(const Transport& transport, const std::vector<UltrasoundProbe>& probes,
                           const SolveResult& u00, const BoundaryQuadraturePtr& quadrature,
                           const CascadeOptions& options) {
  if (quadrature->side() != BoundarySide::Outgoing) throw ContractError("measure_A01: measurements live on Gamma_+");
  MeasurementSet m;
  m.quadrature = quadrature;
  m.probes = probes;
  m.source_columns = u00.u.columns();
  const std::size_t sc = m.source_columns;
  m.values.quadrature = quadrature;
  m.values.columns = probes.size() * sc;
  m.values.values.assign(quadrature->size() * m.values.columns, 0.0);
  const std::size_t batch = std::max<std::size_t>(1, options.batch);
  for (std::size_t start = 0; start < probes.size(); start += batch) {
    const std::size_t end = std::min(probes.size(), start + batch);
    const std::vector<UltrasoundProbe> group(probes.begin() + start, probes.begin() + end);
    const SolveResult u01 = transport.solve_internal(modulated_source(u00.u, group, false));
    const BoundaryField tr = transport.trace(u01, quadrature);
    for (std::size_t k = 0; k < quadrature->size(); ++k) {
      for (std::size_t c = 0; c < tr.columns; ++c) m.values(k, start * sc + c) = tr(k, c);
    }
  }
  return m;
}

MeasurementSet measure_A01(const Transport& transport, const std::vector<UltrasoundProbe>& probes,
                           const std::vector<BoundarySource>& f, const BoundaryQuadraturePtr& quadrature,
                           const CascadeOptions& options) {
  return measure_A01(transport, probes, transport.solve(f), quadrature, options);
}

}  // namespace mfao
