#include <gtest/gtest.h>

#include <numbers>

#include "mfao/cascade.hpp"

using namespace mfao;

namespace {

DiscretizationPtr square(std::size_t nodes, std::size_t angles) {
  return Discretization::make(Domain::box(2, {0, 0, 0}, {1, 1, 0}), nodes, AngularGrid::circle(angles));
}

BoundarySource smooth_source() {
  BoundarySource s;
  s.label = "smooth";
  s.value = [](const Vec3& x, std::size_t i) { return 1.0 + 0.5 * std::cos(2.0 * x[0] - x[1] + 0.2 * i); };
  return s;
}

Phantom slab(double sigma) {
  Phantom ph;
  ph.sigma = ScalarField::constant(sigma);
  ph.kappa = ScalarField::constant(0.0);
  return ph;
}

}  // namespace

TEST(Cascade, ZeroCouplingGivesZeroShiftedLight) {
  const auto d = square(17, 16);
  const Transport t(phantom_library("gaussian-bumps", {}, d->domain), d);
  UltrasoundProbe p;
  p.Q = {6.0, 0.0, 0.0};
  p.a = 0.0;
  const CascadeSolution s = solve_cascade(t, {p}, {smooth_source()});
  EXPECT_EQ(s.u01.sup_norm(), 0.0);
  EXPECT_EQ(s.u11.sup_norm(), 0.0);
  const auto q = BoundaryQuadrature::build(d, BoundarySide::Outgoing);
  EXPECT_EQ(measure_A01(t, {p}, {smooth_source()}, q).values.weighted_l1(), 0.0);
}

TEST(Cascade, UniformCouplingOnASlab) {
  const auto d = square(65, 16);
  const double s0 = 1.1, a = 0.7;
  const Transport t(slab(s0), d);
  BoundarySource beam;
  beam.angles = {0};
  beam.value = [](const Vec3&, std::size_t i) { return i == 0 ? 1.0 : 0.0; };
  UltrasoundProbe p;
  p.a = a;
  const CascadeSolution s = solve_cascade(t, {p}, {beam});
  for (std::size_t n = 0; n < d->spatial.size(); ++n) {
    const double depth = d->spatial.node(n)[0];
    EXPECT_NEAR(s.u01(0, n), a * depth * std::exp(-s0 * depth), 1e-4);
  }
}

TEST(Cascade, LinearInTheSource) {
  const auto d = square(17, 16);
  const Transport t(phantom_library("two-inclusion", {}, d->domain), d);
  UltrasoundProbe p;
  p.Q = {2 * std::numbers::pi, 4 * std::numbers::pi, 0};
  BoundarySource twice = smooth_source();
  twice.value = [](const Vec3& x, std::size_t i) { return 2.0 * (1.0 + 0.5 * std::cos(2.0 * x[0] - x[1] + 0.2 * i)); };
  const CascadeSolution one = solve_cascade(t, {p}, {smooth_source()});
  const CascadeSolution two = solve_cascade(t, {p}, {twice});
  for (std::size_t k = 0; k < one.u01.data().size(); ++k) ASSERT_EQ(2.0 * one.u01.data()[k], two.u01.data()[k]);
}

TEST(Cascade, ZeroInflowAndOrdering) {
  const auto d = square(17, 16);
  const Transport t(phantom_library("gaussian-bumps", {}, d->domain), d);
  UltrasoundProbe p;
  p.Q = {0, 2 * std::numbers::pi, 0};
  p.b = 0.0;
  const CascadeSolution s = solve_cascade(t, {p}, {smooth_source()});
  EXPECT_EQ(s.u11.sup_norm(), 0.0);
  p.b = 1.0;
  const CascadeSolution full = solve_cascade(t, {p}, {smooth_source()});
  EXPECT_EQ(s.u01.data(), full.u01.data());
  EXPECT_GT(full.u11.sup_norm(), 0.0);

  const auto q = BoundaryQuadrature::build(d, BoundarySide::Incoming);
  double worst = 0.0;
  for (const auto& smp : q->samples()) {
    worst = std::max({worst, std::abs(full.u01(smp.angle, smp.node)), std::abs(full.u11(smp.angle, smp.node))});
  }
  EXPECT_LE(worst, 1e-12 * full.u00.u.sup_norm());
}

TEST(Cascade, StageResidualsAreSmall) {
  const auto d = square(65, 16);
  const Phantom ph = phantom_library("gaussian-bumps", {{"kappa0", 0.3}}, d->domain);
  const Transport t(ph, d);
  UltrasoundProbe p;
  p.Q = {2 * std::numbers::pi, 0, 0};
  p.phase = 0.3;
  const CascadeSolution s = solve_cascade(t, {p}, {smooth_source()});
  const RadianceField a01 = t.scatter(s.u01);
  const SpatialGrid& g = d->spatial;
  const double h = g.spacing()[0];
  double worst = 0.0;
  for (std::size_t j = 2; j + 2 < 65; ++j) {
    for (std::size_t i = 2; i + 2 < 65; ++i) {
      const std::size_t n = g.index(i, j, 0);
      const Vec3 x = g.node(n);
      const double dx = (s.u01(0, g.index(i + 1, j, 0)) - s.u01(0, g.index(i - 1, j, 0))) / (2 * h);
      const double rhs = a01(0, n) + p.a * p.modulation(x) * s.u00.u(0, n);
      worst = std::max(worst, std::abs(dx + ph.sigma(x) * s.u01(0, n) - rhs));
    }
  }
  EXPECT_LT(worst, 5e-3 * s.u00.u.sup_norm());
}

TEST(Cascade, QuadraturePhasesCombineIntoAComplexExponential) {
  const auto d = square(17, 16);
  const Transport t(phantom_library("gaussian-bumps", {}, d->domain), d);
  const auto q = BoundaryQuadrature::build(d, BoundarySide::Outgoing);
  UltrasoundProbe c, s;
  c.Q = s.Q = {2 * std::numbers::pi, -2 * std::numbers::pi, 0};
  s.phase = std::numbers::pi / 2;
  const SolveResult u00 = t.solve({smooth_source()});
  const MeasurementSet m = measure_A01(t, {c, s}, u00, q);

  // Direct solve with the real and imaginary parts of e^{-i Q.x}.
  RadianceField src(d, 2);
  for (std::size_t i = 0; i < d->angular.size(); ++i) {
    for (std::size_t n = 0; n < d->spatial.size(); ++n) {
      const double qx = dot(c.Q, d->spatial.node(n));
      src(i, n, 0) = std::cos(qx) * u00.u(i, n);
      src(i, n, 1) = -std::sin(qx) * u00.u(i, n);
    }
  }
  const BoundaryField direct = t.trace(t.solve_internal(src), q);
  for (std::size_t k = 0; k < q->size(); ++k) {
    EXPECT_NEAR(m.values(k, 0), direct(k, 0), 1e-12);
    EXPECT_NEAR(m.values(k, 1), direct(k, 1), 1e-12);
  }
}
