#include "mfao/field.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace mfao {

std::shared_ptr<const Discretization> Discretization::make(Domain domain, std::size_t nodes_per_axis,
                                                           AngularGrid angular) {
  if (angular.dim() != domain.dim()) throw ContractError("angular grid dimension does not match the domain");
  SpatialGrid grid = SpatialGrid::covering(domain, nodes_per_axis);
  return std::make_shared<const Discretization>(Discretization{std::move(domain), std::move(grid), std::move(angular)});
}

std::string Discretization::describe() const {
  std::ostringstream os;
  os << domain.describe() << " grid " << spatial.counts()[0] << "x" << spatial.counts()[1];
  if (spatial.dim() == 3) os << "x" << spatial.counts()[2];
  os << " angles " << angular.describe();
  return os.str();
}

RadianceField::RadianceField(DiscretizationPtr disc, std::size_t columns)
    : disc_(std::move(disc)),
      nodes_(disc_->spatial.size()),
      angles_(disc_->angular.size()),
      columns_(columns),
      data_(nodes_ * angles_ * columns, 0.0) {}

RadianceField RadianceField::select_columns(const std::vector<std::size_t>& cols) const {
  RadianceField out(disc_, cols.size());
  const std::size_t rows = nodes_ * angles_;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) out.data_[r * cols.size() + c] = data_[r * columns_ + cols[c]];
  }
  return out;
}

void RadianceField::assign_column(std::size_t col, const RadianceField& src, std::size_t src_col) {
  if (src.nodes_ != nodes_ || src.angles_ != angles_) throw ContractError("assign_column: shape mismatch");
  const std::size_t rows = nodes_ * angles_;
  for (std::size_t r = 0; r < rows; ++r) data_[r * columns_ + col] = src.data_[r * src.columns_ + src_col];
}

double RadianceField::sup_norm() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

std::vector<double> RadianceField::sup_norms() const {
  std::vector<double> m(columns_, 0.0);
  const std::size_t rows = nodes_ * angles_;
  for (std::size_t r = 0; r < rows; ++r) {
    const double* p = data_.data() + r * columns_;
    for (std::size_t c = 0; c < columns_; ++c) m[c] = std::max(m[c], std::abs(p[c]));
  }
  return m;
}

double RadianceField::angular_l1(std::size_t node, std::size_t col) const {
  double s = 0.0;
  for (std::size_t i = 0; i < angles_; ++i) s += disc_->angular.weight(i) * std::abs((*this)(i, node, col));
  return s;
}

RadianceField& RadianceField::operator+=(const RadianceField& other) {
  if (other.data_.size() != data_.size()) throw ContractError("field sum: shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

RadianceField& RadianceField::operator-=(const RadianceField& other) {
  if (other.data_.size() != data_.size()) throw ContractError("field difference: shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

RadianceField& RadianceField::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

RadianceField RadianceField::antipodal() const {
  RadianceField out(disc_, columns_);
  const std::size_t block = nodes_ * columns_;
  for (std::size_t i = 0; i < angles_; ++i) {
    const std::size_t j = disc_->angular.antipode(i);
    std::copy_n(data_.data() + j * block, block, out.data_.data() + i * block);
  }
  return out;
}

// ---------------------------------------------------------------------------

bool BoundarySource::supports(std::size_t angle) const {
  return angles.empty() || std::binary_search(angles.begin(), angles.end(), angle);
}

BoundarySource reflect(const BoundarySource& g, const AngularGrid& angles) {
  BoundarySource out;
  out.side = g.side == BoundarySide::Incoming ? BoundarySide::Outgoing : BoundarySide::Incoming;
  out.label = g.label + "~";
  auto value = g.value;
  const AngularGrid grid = angles;
  out.value = [value, grid](const Vec3& x, std::size_t i) { return value(x, grid.antipode(i)); };
  for (std::size_t i : g.angles) out.angles.push_back(angles.antipode(i));
  std::sort(out.angles.begin(), out.angles.end());
  return out;
}

BoundarySource constant_source(double value, BoundarySide side) {
  BoundarySource s;
  s.side = side;
  s.label = "constant";
  s.value = [value](const Vec3&, std::size_t) { return value; };
  return s;
}

// ---------------------------------------------------------------------------

namespace {

void add_angles(std::vector<BoundarySample>& out, const Discretization& d, BoundarySide side, BoundarySample base) {
  for (std::size_t i = 0; i < d.angular.size(); ++i) {
    const double c = dot(d.angular.direction(i), base.normal);
    const bool keep = side == BoundarySide::Outgoing ? c > 0.0 : c < 0.0;
    if (!keep) continue;
    BoundarySample s = base;
    s.angle = i;
    s.cos_normal = c;
    s.weight = base.area_weight * d.angular.weight(i) * std::abs(c);
    out.push_back(s);
  }
}

}  // namespace

std::shared_ptr<const BoundaryQuadrature> BoundaryQuadrature::build(const DiscretizationPtr& disc,
                                                                   BoundarySide side) {
  auto q = std::make_shared<BoundaryQuadrature>();
  q->disc_ = disc;
  q->side_ = side;
  const Discretization& d = *disc;
  const SpatialGrid& g = d.spatial;
  const int dim = d.domain.dim();

  if (d.domain.shape() == DomainShape::Box) {
    const auto counts = g.counts();
    for (int face = 0; face < 2 * dim; ++face) {
      const int axis = face / 2;
      const std::size_t fixed = (face % 2) ? counts[axis] - 1 : 0;
      for (std::size_t n = 0; n < g.size(); ++n) {
        const auto m = g.multi_index(n);
        if (m[axis] != fixed) continue;
        double area = 1.0;
        for (int a = 0; a < dim; ++a) {
          if (a == axis) continue;
          double h = g.spacing()[a];
          if (m[a] == 0 || m[a] == counts[a] - 1) h *= 0.5;
          area *= h;
        }
        BoundarySample base;
        base.x = g.node(n);
        base.normal = d.domain.face_normal(face);
        base.node = n;
        base.face = face;
        base.area_weight = area;
        add_angles(q->samples_, d, side, base);
      }
    }
  } else {
    q->on_grid_ = false;
    const double r = d.domain.radius();
    const std::size_t n0 = g.counts()[0];
    if (dim == 2) {
      const std::size_t m = 4 * (n0 - 1);
      for (std::size_t k = 0; k < m; ++k) {
        const double phi = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(m);
        BoundarySample base;
        base.normal = {std::cos(phi), std::sin(phi), 0.0};
        base.x = d.domain.center() + r * base.normal;
        base.area_weight = 2.0 * std::numbers::pi * r / static_cast<double>(m);
        add_angles(q->samples_, d, side, base);
      }
    } else {
      const std::size_t np = n0 + (n0 % 2);
      const AngularGrid pts = AngularGrid::sphere(np, 2 * np);
      for (std::size_t k = 0; k < pts.size(); ++k) {
        BoundarySample base;
        base.normal = pts.direction(k);
        base.x = d.domain.center() + r * base.normal;
        base.area_weight = r * r * pts.weight(k);
        add_angles(q->samples_, d, side, base);
      }
    }
  }
  return q;
}

double BoundaryField::weighted_l1(std::size_t col) const {
  double s = 0.0;
  const auto& samples = quadrature->samples();
  for (std::size_t k = 0; k < samples.size(); ++k) s += samples[k].weight * std::abs((*this)(k, col));
  return s;
}

BoundaryField sample_boundary(const BoundaryQuadraturePtr& quadrature, const std::vector<BoundarySource>& data) {
  BoundaryField out;
  out.quadrature = quadrature;
  out.columns = data.size();
  out.values.assign(quadrature->size() * data.size(), 0.0);
  for (std::size_t c = 0; c < data.size(); ++c) {
    if (data[c].side != quadrature->side()) throw ContractError("sample_boundary: data on the wrong boundary side");
  }
  const auto& samples = quadrature->samples();
  for (std::size_t k = 0; k < samples.size(); ++k) {
    for (std::size_t c = 0; c < data.size(); ++c) {
      if (data[c].supports(samples[k].angle)) out(k, c) = data[c](samples[k].x, samples[k].angle);
    }
  }
  return out;
}

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::Oracle:
      return "oracle";
    case Provenance::FourierRecovered:
      return "fourier-recovered";
    case Provenance::Synthetic:
      return "synthetic";
  }
  return "unknown";
}

std::vector<double> FunctionalField::real() const {
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = values[i].real();
  return out;
}

std::vector<double> FunctionalField::imag() const {
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = values[i].imag();
  return out;
}

double FunctionalField::sup_norm() const {
  double m = 0.0;
  for (const auto& v : values) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace mfao
