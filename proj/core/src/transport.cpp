#include "mfao/transport.hpp"

#include <algorithm>
#include <cmath>

#include "mfao/parallel.hpp"

namespace mfao {

Transport::Transport(Phantom phantom, DiscretizationPtr disc, TransportOptions options)
    : phantom_(std::move(phantom)), disc_(std::move(disc)), options_(options) {
  step_ = options_.step > 0.0 ? options_.step : default_step(disc_->spatial);
  kappa_nodes_ = phantom_.kappa.sample(disc_->spatial);
  const AngularGrid& ang = disc_->angular;
  low_rank_ = !phantom_.table && phantom_.phase.is_polynomial();
  if (low_rank_) {
    poly_ = phantom_.phase.coefficients(ang.dim());
  } else {
    const std::size_t na = ang.size();
    dense_.resize(na * na);
    for (std::size_t i = 0; i < na; ++i) {
      for (std::size_t j = 0; j < na; ++j) dense_[i * na + j] = ang.weight(j) * phantom_.angular_kernel(ang, i, j);
    }
  }
}

namespace {

/// Panel weights for int_0^1 e^{-d u} (1 - u) du and int_0^1 e^{-d u} u du, given e = e^{-d}.
inline void panel_weights(double d, double e, double& w0, double& w1) {
  if (d < 1e-3) {
    w1 = 0.5 - d / 3.0 + d * d / 8.0;
    w0 = 0.5 - d / 6.0 + d * d / 24.0;
    return;
  }
  w1 = (1.0 - e * (1.0 + d)) / (d * d);
  w0 = (1.0 - e) / d - w1;
}

}  // namespace

// Optical depth is trapezoidal in sigma; within a panel the attenuation is integrated exactly
// against the linear interpolant of the visited samples.
template <class Visit>
void Transport::march(const Vec3& x, const Vec3& dir, double step, Visit&& visit) const {
  const double L = disc_->domain.exit_distance(x, -dir);
  if (L <= 0.0) return;
  const auto panels = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(L / step)));
  const double h = L / static_cast<double>(panels);
  const ScalarField& sigma = phantom_.sigma;
  const bool uniform = sigma.is_constant();
  double d = 0.0, e = 1.0, w0 = 0.5, w1 = 0.5;
  if (uniform) {
    d = sigma.constant_value() * h;
    e = std::exp(-d);
    panel_weights(d, e, w0, w1);
  }
  double att = 1.0;
  double s_prev = uniform ? 0.0 : sigma(x);
  Vec3 pending = x;
  double pending_w = 0.0;
  for (std::size_t k = 1; k <= panels; ++k) {
    const Vec3 y = x - (h * static_cast<double>(k)) * dir;
    if (!uniform) {
      const double s = sigma(y);
      d = 0.5 * h * (s_prev + s);
      s_prev = s;
      e = std::exp(-d);
      panel_weights(d, e, w0, w1);
    }
    visit(pending, pending_w + att * h * w0);
    pending = y;
    pending_w = att * h * w1;
    att *= e;
  }
  visit(pending, pending_w);
}

double Transport::tau(const Vec3& x, const Vec3& y) const {
  if (phantom_.sigma.is_constant()) return phantom_.sigma.constant_value() * norm(x - y);
  return optical_distance([this](const Vec3& p) { return phantom_.sigma(p); }, x, y, step_);
}

double Transport::lift_function(const std::function<double(const Vec3&)>& s, const Vec3& x, const Vec3& dir,
                                double step) const {
  double acc = 0.0;
  march(x, dir, step, [&](const Vec3& y, double w) { acc += w * s(y); });
  return acc;
}

RadianceField Transport::ballistic(const std::vector<BoundarySource>& f) const {
  for (const auto& src : f) {
    if (src.side != BoundarySide::Incoming) throw ContractError("ballistic: boundary data must live on Gamma_-");
  }
  const Discretization& d = *disc_;
  RadianceField out(disc_, f.size());
  const std::size_t na = d.angular.size();
  const std::size_t nn = d.spatial.size();
  parallel_for(na, options_.workers, [&](std::size_t i) {
    std::vector<std::size_t> cols;
    for (std::size_t c = 0; c < f.size(); ++c) {
      if (f[c].supports(i)) cols.push_back(c);
    }
    if (cols.empty()) return;
    const Vec3& theta = d.angular.direction(i);
    for (std::size_t n = 0; n < nn; ++n) {
      const Vec3 x = d.spatial.node(n);
      const double L = d.domain.exit_distance(x, -theta);
      const Vec3 y = x - L * theta;
      const double att = std::exp(-tau(x, y));
      double* row = out.row(i, n);
      for (std::size_t c : cols) row[c] = att * f[c](y, i);
    }
  });
  return out;
}

double Transport::ballistic_at(const BoundarySource& f, const Vec3& x, std::size_t angle) const {
  if (!f.supports(angle)) return 0.0;
  const Vec3& theta = disc_->angular.direction(angle);
  const double L = disc_->domain.exit_distance(x, -theta);
  const Vec3 y = x - L * theta;
  return std::exp(-tau(x, y)) * f(y, angle);
}

RadianceField Transport::lift(const RadianceField& S) const {
  const Discretization& d = *disc_;
  const std::size_t cols = S.columns();
  RadianceField out(disc_, cols);
  const std::size_t na = d.angular.size();
  const std::size_t nn = d.spatial.size();
  parallel_for(na, options_.workers, [&](std::size_t i) {
    const Vec3& theta = d.angular.direction(i);
    for (std::size_t n = 0; n < nn; ++n) {
      double* acc = out.row(i, n);
      march(d.spatial.node(n), theta, step_, [&](const Vec3& y, double w) {
        const Stencil st = d.spatial.stencil(y);
        for (int s = 0; s < st.size; ++s) {
          const double coef = w * st.weight[s];
          if (coef == 0.0) continue;
          const double* src = S.row(i, st.node[s]);
          for (std::size_t c = 0; c < cols; ++c) acc[c] += coef * src[c];
        }
      });
    }
  });
  return out;
}

double Transport::lift_at(const RadianceField& S, const Vec3& x, std::size_t angle, std::size_t col) const {
  const Discretization& d = *disc_;
  double acc = 0.0;
  march(x, d.angular.direction(angle), step_, [&](const Vec3& y, double w) {
    const Stencil st = d.spatial.stencil(y);
    for (int s = 0; s < st.size; ++s) acc += w * st.weight[s] * S(angle, st.node[s], col);
  });
  return acc;
}

RadianceField Transport::scatter(const RadianceField& w) const {
  const Discretization& d = *disc_;
  const AngularGrid& ang = d.angular;
  const std::size_t na = ang.size();
  const std::size_t nn = d.spatial.size();
  const std::size_t cols = w.columns();
  RadianceField out(disc_, cols);

  if (low_rank_) {
    const int dim = ang.dim();
    const std::size_t block = nn * cols;
    std::vector<double> m0(block, 0.0);
    std::vector<double> m1(poly_[1] != 0.0 ? 3 * block : 0, 0.0);
    for (std::size_t j = 0; j < na; ++j) {
      const double wj = ang.weight(j);
      const Vec3& th = ang.direction(j);
      const double* src = w.row(j, 0);
      for (std::size_t k = 0; k < block; ++k) m0[k] += wj * src[k];
      if (!m1.empty()) {
        for (int a = 0; a < dim; ++a) {
          const double c = wj * th[a];
          double* dst = m1.data() + a * block;
          for (std::size_t k = 0; k < block; ++k) dst[k] += c * src[k];
        }
      }
    }
    parallel_for(na, options_.workers, [&](std::size_t i) {
      const Vec3& th = ang.direction(i);
      double* dst = out.row(i, 0);
      for (std::size_t n = 0; n < nn; ++n) {
        const double kap = kappa_nodes_[n];
        for (std::size_t c = 0; c < cols; ++c) {
          const std::size_t k = n * cols + c;
          double v = poly_[0] * m0[k];
          if (!m1.empty()) {
            for (int a = 0; a < dim; ++a) v += poly_[1] * th[a] * m1[a * block + k];
          }
          dst[k] = kap * v;
        }
      }
    });
    return out;
  }

  parallel_for(na, options_.workers, [&](std::size_t i) {
    const std::size_t block = nn * cols;
    double* dst = out.row(i, 0);
    for (std::size_t j = 0; j < na; ++j) {
      const double c = dense_[i * na + j];
      if (c == 0.0) continue;
      const double* src = w.row(j, 0);
      for (std::size_t k = 0; k < block; ++k) dst[k] += c * src[k];
    }
    for (std::size_t n = 0; n < nn; ++n) {
      for (std::size_t c = 0; c < cols; ++c) dst[n * cols + c] *= kappa_nodes_[n];
    }
  });
  return out;
}

RadianceField Transport::scatter_adjoint(const RadianceField& w) const { return scatter(w.antipodal()).antipodal(); }

RadianceField Transport::K_apply(const RadianceField& w) const { return lift(scatter(w)); }

SolveResult Transport::neumann(RadianceField w0) const {
  SolveResult r;
  const std::size_t cols = w0.columns();
  const std::vector<double> first = w0.sup_norms();
  r.history.push_back(first);
  r.u = w0;
  std::vector<std::size_t> active;
  for (std::size_t c = 0; c < cols; ++c) {
    if (first[c] > 0.0) active.push_back(c);
  }
  std::vector<double> prev = first;
  std::vector<int> rising(cols, 0);
  RadianceField w = active.size() == cols ? std::move(w0) : w0.select_columns(active);
  std::size_t m = 0;
  while (!active.empty() && m < options_.max_terms) {
    ++m;
    w = K_apply(w);
    const std::vector<double> norms = w.sup_norms();
    std::vector<double> row(cols, 0.0);
    std::vector<std::size_t> keep;
    const std::size_t rows = r.u.nodes() * r.u.angles();
    for (std::size_t a = 0; a < active.size(); ++a) {
      const std::size_t c = active[a];
      row[c] = norms[a];
      for (std::size_t k = 0; k < rows; ++k) r.u.data()[k * cols + c] += w.data()[k * active.size() + a];
      const double ratio = prev[c] > 0.0 ? norms[a] / prev[c] : 0.0;
      r.max_ratio = std::max(r.max_ratio, ratio);
      rising[c] = ratio >= 1.0 ? rising[c] + 1 : 0;
      if (rising[c] >= 2) {
        throw NonContractionError("Neumann series is not contracting (column " + std::to_string(c) + ", term " +
                                  std::to_string(m) + ", ratio " + std::to_string(ratio) + ")");
      }
      prev[c] = norms[a];
      if (norms[a] >= options_.tol * first[c]) keep.push_back(a);
    }
    r.history.push_back(std::move(row));
    if (keep.size() != active.size()) {
      std::vector<std::size_t> next;
      for (std::size_t a : keep) next.push_back(active[a]);
      w = w.select_columns(keep);
      active = std::move(next);
    }
  }
  r.terms = m + 1;
  return r;
}

SolveResult Transport::solve(const std::vector<BoundarySource>& f) const {
  SolveResult r = neumann(ballistic(f));
  r.collision = scatter(r.u);
  r.boundary = f;
  return r;
}

SolveResult Transport::solve_internal(const RadianceField& S) const {
  SolveResult r = neumann(lift(S));
  r.collision = scatter(r.u);
  r.collision += S;
  return r;
}

SolveResult Transport::solve_adjoint(const std::vector<BoundarySource>& g) const {
  std::vector<BoundarySource> reflected;
  reflected.reserve(g.size());
  for (const auto& src : g) {
    if (src.side != BoundarySide::Outgoing) throw ContractError("solve_adjoint: detector data must live on Gamma_+");
    reflected.push_back(reflect(src, disc_->angular));
  }
  SolveResult r = solve(reflected);
  r.u = r.u.antipodal();
  r.adjoint = true;
  return r;
}

double Transport::evaluate(const SolveResult& r, const Vec3& x, std::size_t angle, std::size_t col) const {
  const std::size_t a = r.adjoint ? disc_->angular.antipode(angle) : angle;
  double v = lift_at(r.collision, x, a, col);
  if (!r.boundary.empty()) v += ballistic_at(r.boundary[col], x, a);
  return v;
}

BoundaryField Transport::trace(const SolveResult& r, const BoundaryQuadraturePtr& q) const {
  BoundaryField out;
  out.quadrature = q;
  out.columns = r.u.columns();
  out.values.assign(q->size() * out.columns, 0.0);
  const auto& samples = q->samples();
  parallel_for(samples.size(), options_.workers, [&](std::size_t k) {
    const BoundarySample& s = samples[k];
    for (std::size_t c = 0; c < out.columns; ++c) {
      out(k, c) = s.node != BoundarySample::kNoNode ? r.u(s.angle, s.node, c) : evaluate(r, s.x, s.angle, c);
    }
  });
  return out;
}

BoundaryField Transport::albedo(const std::vector<BoundarySource>& f, const BoundaryQuadraturePtr& q) const {
  if (q->side() != BoundarySide::Outgoing) throw ContractError("albedo: measurements live on Gamma_+");
  return trace(solve(f), q);
}

double inner(const RadianceField& u, std::size_t cu, const RadianceField& v, std::size_t cv) {
  const Discretization& d = u.disc();
  double total = 0.0;
  for (std::size_t i = 0; i < u.angles(); ++i) {
    double s = 0.0;
    for (std::size_t n = 0; n < u.nodes(); ++n) s += d.spatial.quadrature_weight(n) * u(i, n, cu) * v(i, n, cv);
    total += d.angular.weight(i) * s;
  }
  return total;
}

}  // namespace mfao
