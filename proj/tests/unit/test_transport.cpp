#include <gtest/gtest.h>

#include <random>

#include "mfao/transport.hpp"
#include "oracles.hpp"

using namespace mfao;

namespace {

DiscretizationPtr square(std::size_t nodes, std::size_t angles) {
  return Discretization::make(Domain::box(2, {0, 0, 0}, {1, 1, 0}), nodes, AngularGrid::circle(angles));
}

DiscretizationPtr cube(std::size_t nodes, std::size_t np, std::size_t na) {
  return Discretization::make(Domain::box(3, {0, 0, 0}, {1, 1, 1}), nodes, AngularGrid::sphere(np, na));
}

Phantom constant_phantom(double sigma, double kappa, PhaseFunction p = PhaseFunction::isotropic()) {
  Phantom ph;
  ph.name = "constant";
  ph.sigma = ScalarField::constant(sigma);
  ph.kappa = ScalarField::constant(kappa);
  ph.phase = p;
  return ph;
}

BoundarySource single_direction(std::size_t angle, double value) {
  BoundarySource s;
  s.label = "beam";
  s.angles = {angle};
  s.value = [angle, value](const Vec3&, std::size_t i) { return i == angle ? value : 0.0; };
  return s;
}

BoundarySource smooth_source(BoundarySide side) {
  BoundarySource s;
  s.side = side;
  s.label = "smooth";
  s.value = [](const Vec3& x, std::size_t i) { return 1.0 + 0.5 * std::sin(3.0 * x[0] + 2.0 * x[1] + 0.3 * i); };
  return s;
}

RadianceField random_field(const DiscretizationPtr& d, std::size_t cols, unsigned seed) {
  RadianceField f(d, cols);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double& v : f.data()) v = u(rng);
  return f;
}

}  // namespace

TEST(Ballistic, SlabAttenuation) {
  const auto d = square(33, 16);
  const Transport t(constant_phantom(1.3, 0.0), d);
  const RadianceField u = t.ballistic({single_direction(0, 1.0)});
  for (std::size_t n = 0; n < d->spatial.size(); ++n) {
    EXPECT_NEAR(u(0, n), std::exp(-1.3 * d->spatial.node(n)[0]), 1e-14);
    EXPECT_EQ(u(3, n), 0.0);
  }
}

TEST(Ballistic, ZeroDataAndWrongSide) {
  const auto d = square(9, 8);
  const Transport t(constant_phantom(1.0, 0.0), d);
  EXPECT_EQ(t.ballistic({constant_source(0.0)}).sup_norm(), 0.0);
  EXPECT_THROW(t.ballistic({constant_source(1.0, BoundarySide::Outgoing)}), ContractError);
}

TEST(Ballistic, GaussianSigmaMatchesErfOracle) {
  oracle::GaussianSigma g;
  g.dim = 3;
  Phantom ph = constant_phantom(1.0, 0.0);
  ph.sigma = ScalarField::analytic([g](const Vec3& x) { return g(x); });
  const auto d = cube(5, 8, 16);
  TransportOptions opt;
  opt.step = 2e-3;
  const Transport t(ph, d, opt);
  const BoundarySource f = constant_source(2.0);
  const Vec3 x{0.3, 0.55, 0.62};
  for (std::size_t i : {0u, 17u, 40u, 101u}) {
    const Vec3& th = d->angular.direction(i);
    const Vec3 entry = gamma(d->domain, x, th, -1);
    EXPECT_NEAR(t.ballistic_at(f, x, i), 2.0 * std::exp(-g.tau(x, entry)), 1e-6);
  }
}

TEST(Lift, ConstantSourceIsExactlyIntegrable) {
  const auto d = square(17, 16);
  const double s0 = 1.5;
  const Transport t(constant_phantom(s0, 0.0), d);
  RadianceField S(d);
  for (double& v : S.data()) v = s0;
  const RadianceField out = t.lift(S);
  double worst = 0.0;
  for (std::size_t i = 0; i < d->angular.size(); ++i) {
    for (std::size_t n = 0; n < d->spatial.size(); ++n) {
      const Vec3 x = d->spatial.node(n);
      const double L = d->domain.exit_distance(x, -d->angular.direction(i));
      worst = std::max(worst, std::abs(out(i, n) - (1.0 - std::exp(-s0 * L))));
    }
  }
  EXPECT_LT(worst, 1e-4);
  EXPECT_EQ(t.lift(RadianceField(d)).sup_norm(), 0.0);
}

TEST(Lift, BoundedBySupOverMinimumAbsorption) {
  const auto d = square(17, 16);
  Phantom ph = phantom_library("gaussian-bumps", {}, d->domain);
  const double sigma_min = 1.5;
  const Transport t(ph, d);
  for (unsigned seed = 1; seed <= 5; ++seed) {
    const RadianceField S = random_field(d, 1, seed);
    EXPECT_LE(t.lift(S).sup_norm(), S.sup_norm() / sigma_min * (1.0 + 1e-9));
  }
}

TEST(Lift, PointwiseMatchesGrid) {
  const auto d = square(9, 8);
  const Transport t(phantom_library("gaussian-bumps", {}, d->domain), d);
  const RadianceField S = random_field(d, 2, 4);
  const RadianceField out = t.lift(S);
  for (std::size_t n : {0u, 13u, 40u, 80u}) {
    for (std::size_t i : {0u, 3u, 6u}) EXPECT_NEAR(t.lift_at(S, d->spatial.node(n), i, 1), out(i, n, 1), 1e-13);
  }
}

TEST(Scatter, ZeroKernelAndNormalization) {
  const auto d = cube(5, 8, 16);
  const Transport none(constant_phantom(1.0, 0.0), d);
  EXPECT_EQ(none.scatter(random_field(d, 1, 2)).sup_norm(), 0.0);

  Phantom ph = phantom_library("gaussian-bumps", {{"g", 0.5}}, d->domain);
  RadianceField ones(d);
  for (double& v : ones.data()) v = 1.0;
  const RadianceField a = Transport(ph, d).scatter(ones);
  for (std::size_t n = 0; n < d->spatial.size(); ++n) {
    for (std::size_t i = 0; i < d->angular.size(); i += 7) EXPECT_NEAR(a(i, n), ph.kappa(d->spatial.node(n)), 1e-13);
  }
}

TEST(Scatter, SupBoundedByKernelTimesAngularL1) {
  const auto d = cube(3, 8, 16);
  Phantom ph = constant_phantom(2.0, 0.4, PhaseFunction::henyey_greenstein(0.5));
  const Transport t(ph, d);
  double kmax = 0.0;
  for (std::size_t i = 0; i < d->angular.size(); ++i) kmax = std::max(kmax, ph.kernel({}, d->angular, 0, i));
  const RadianceField w = random_field(d, 1, 9);
  const RadianceField a = t.scatter(w);
  for (std::size_t n = 0; n < d->spatial.size(); ++n) {
    double sup = 0.0;
    for (std::size_t i = 0; i < d->angular.size(); ++i) sup = std::max(sup, std::abs(a(i, n)));
    EXPECT_LE(sup, kmax * w.angular_l1(n) * (1.0 + 1e-12));
  }
}

TEST(KApply, SingleNodeKernelMatchesHandQuadrature) {
  const auto d = square(17, 8);
  const std::size_t i0 = 1, j0 = 6;
  auto table = std::make_shared<KernelTable>();
  table->size = 8;
  table->values.assign(64, 0.0);
  table->values[i0 * 8 + j0] = 0.7;
  Phantom ph = constant_phantom(1.2, 0.5);
  ph.table = table;
  const Transport t(ph, d);
  RadianceField w(d);
  for (std::size_t n = 0; n < d->spatial.size(); ++n) w(j0, n) = 1.0;
  const RadianceField k = t.K_apply(w);
  const double src = 0.5 * 0.7 * d->angular.weight(j0);
  for (std::size_t n = 0; n < d->spatial.size(); ++n) {
    const Vec3 x = d->spatial.node(n);
    const double L = d->domain.exit_distance(x, -d->angular.direction(i0));
    EXPECT_NEAR(k(i0, n), src / 1.2 * (1.0 - std::exp(-1.2 * L)), 1e-5);
    EXPECT_EQ(k(j0, n), 0.0);
  }
  EXPECT_EQ(t.K_apply(RadianceField(d)).sup_norm(), 0.0);
}

TEST(Solve, NoScatteringTerminatesWithBallistic) {
  const auto d = square(17, 16);
  const Transport t(constant_phantom(1.0, 0.0), d);
  const SolveResult r = t.solve({smooth_source(BoundarySide::Incoming)});
  const RadianceField j = t.ballistic({smooth_source(BoundarySide::Incoming)});
  EXPECT_EQ(r.u.data(), j.data());
  EXPECT_EQ(r.terms, 2u);
}

TEST(Solve, HomogeneousContractionRatio) {
  const auto d = square(17, 16);
  const Transport t(phantom_library("homogeneous", {}, d->domain), d);
  const SolveResult r = t.solve({constant_source(1.0)});
  EXPECT_LE(r.max_ratio, 0.1 / 2.0 + 0.05);
  EXPECT_LT(r.history.back()[0], 1e-8 * r.history.front()[0]);
}

TEST(Solve, NonContractingPhantomIsReported) {
  const auto d = square(9, 8);
  TransportOptions opt;
  opt.max_terms = 50;
  const Transport t(constant_phantom(0.2, 6.0), Discretization::make(Domain::box(2, {0, 0, 0}, {10, 10, 0}), 9,
                                                                     AngularGrid::circle(8)),
                    opt);
  EXPECT_THROW(t.solve({constant_source(1.0)}), NonContractionError);
}

TEST(Solve, FiniteDifferenceResidualIsSmall) {
  const auto d = square(65, 16);
  const Phantom ph = phantom_library("gaussian-bumps", {{"kappa0", 0.3}}, d->domain);
  const Transport t(ph, d);
  const SolveResult r = t.solve({smooth_source(BoundarySide::Incoming)});
  const RadianceField a = t.scatter(r.u);
  const SpatialGrid& g = d->spatial;
  const double h = g.spacing()[0];
  double worst = 0.0;
  // Axis directions: angle 0 is +x, angle 4 is +y; centered differences along grid lines.
  for (std::size_t j = 2; j + 2 < 65; ++j) {
    for (std::size_t i = 2; i + 2 < 65; ++i) {
      const std::size_t n = g.index(i, j, 0);
      const Vec3 x = g.node(n);
      const double dx = (r.u(0, g.index(i + 1, j, 0)) - r.u(0, g.index(i - 1, j, 0))) / (2 * h);
      const double dy = (r.u(4, g.index(i, j + 1, 0)) - r.u(4, g.index(i, j - 1, 0))) / (2 * h);
      worst = std::max(worst, std::abs(dx + ph.sigma(x) * r.u(0, n) - a(0, n)));
      worst = std::max(worst, std::abs(dy + ph.sigma(x) * r.u(4, n) - a(4, n)));
    }
  }
  EXPECT_LT(worst, 2e-3 * r.u.sup_norm());
}

TEST(Adjoint, RelabelIdentityIsExact) {
  const auto d = square(17, 16);
  const Transport t(phantom_library("gaussian-bumps", {}, d->domain), d);
  const BoundarySource g = smooth_source(BoundarySide::Outgoing);
  const SolveResult v = t.solve_adjoint({g});
  const SolveResult u = t.solve({reflect(g, d->angular)});
  for (std::size_t i = 0; i < d->angular.size(); ++i) {
    const std::size_t j = d->angular.antipode(i);
    for (std::size_t n = 0; n < d->spatial.size(); ++n) ASSERT_EQ(v.u(i, n), u.u(j, n));
  }
  EXPECT_THROW(t.solve_adjoint({smooth_source(BoundarySide::Incoming)}), ContractError);
}

TEST(Adjoint, DiscretePairingUnderKernelSymmetry) {
  for (const auto& d : {square(9, 16), cube(5, 6, 12)}) {
    for (const PhaseFunction& p : {PhaseFunction::linear(0.6), PhaseFunction::henyey_greenstein(0.7)}) {
      Phantom ph = phantom_library("gaussian-bumps", {}, d->domain);
      ph.phase = p;
      const Transport t(ph, d);
      const RadianceField u = random_field(d, 1, 21), v = random_field(d, 1, 22);
      const double lhs = inner(t.scatter(u), 0, v, 0);
      const double rhs = inner(u, 0, t.scatter_adjoint(v), 0);
      const double scale = std::sqrt(inner(u, 0, u, 0) * inner(v, 0, v, 0));
      EXPECT_LE(std::abs(lhs - rhs), 1e-10 * scale);
    }
  }
}

TEST(Adjoint, NoScatteringProductConstantAlongRays) {
  const auto d = square(33, 16);
  Phantom ph = phantom_library("gaussian-bumps", {{"kappa0", 0.0}, {"kappa_amp", 0.0}}, d->domain);
  const Transport t(ph, d);
  const SolveResult u = t.solve({smooth_source(BoundarySide::Incoming)});
  const SolveResult v = t.solve_adjoint({smooth_source(BoundarySide::Outgoing)});
  const SpatialGrid& g = d->spatial;
  const double h = g.spacing()[0];
  double sup = 0.0, worst = 0.0;
  for (std::size_t n = 0; n < g.size(); ++n) sup = std::max(sup, std::abs(u.u(0, n) * v.u(0, n)));
  for (std::size_t j = 1; j + 1 < 33; ++j) {
    for (std::size_t i = 1; i + 1 < 33; ++i) {
      const auto uv = [&](std::size_t a, std::size_t b) {
        const std::size_t n = g.index(a, b, 0);
        return u.u(0, n) * v.u(0, n);
      };
      worst = std::max(worst, std::abs(uv(i + 1, j) - uv(i - 1, j)) / (2 * h));
    }
  }
  EXPECT_LE(worst, 1e-3 * sup);
}

TEST(Solve, MaximumPrincipleSurrogate) {
  const auto d = square(17, 16);
  const Transport t(phantom_library("two-inclusion", {}, d->domain), d);
  const SolveResult r = t.solve({smooth_source(BoundarySide::Incoming)});
  EXPECT_LE(r.u.sup_norm(), 1.5 / (1.0 - r.max_ratio));
}

TEST(Albedo, TransmissionOfAPointLikeBeam) {
  const auto d = square(33, 16);
  oracle::GaussianSigma gs;
  gs.dim = 2;
  Phantom ph = constant_phantom(1.0, 0.0);
  ph.sigma = ScalarField::analytic([gs](const Vec3& x) { return gs(x); });
  TransportOptions opt;
  opt.step = 1e-3;
  const Transport t(ph, d, opt);
  const double y0 = 0.4375;  // a grid row
  BoundarySource f = single_direction(0, 1.0);
  f.value = [y0](const Vec3& x, std::size_t i) { return i == 0 && std::abs(x[1] - y0) < 0.01 ? 1.0 : 0.0; };
  const auto q = BoundaryQuadrature::build(d, BoundarySide::Outgoing);
  const BoundaryField a = t.albedo({f}, q);
  const double expected = std::exp(-gs.tau({1.0, y0, 0}, {0.0, y0, 0}));
  bool found = false;
  for (std::size_t k = 0; k < q->size(); ++k) {
    const auto& s = q->samples()[k];
    if (s.face == 1 && s.angle == 0 && std::abs(s.x[1] - y0) < 1e-12) {
      EXPECT_NEAR(a(k), expected, 1e-6);
      found = true;
    }
  }
  EXPECT_TRUE(found);
  EXPECT_EQ(t.albedo({constant_source(0.0)}, q).weighted_l1(), 0.0);
}

TEST(Albedo, OutgoingFluxBoundedByIncomingFlux) {
  const auto d = square(33, 32);
  const Transport t(phantom_library("gaussian-bumps", {{"kappa0", 0.4}}, d->domain), d);
  const BoundarySource f = smooth_source(BoundarySide::Incoming);
  const auto qin = BoundaryQuadrature::build(d, BoundarySide::Incoming);
  const auto qout = BoundaryQuadrature::build(d, BoundarySide::Outgoing);
  const double in = sample_boundary(qin, {f}).weighted_l1();
  const double out = t.albedo({f}, qout).weighted_l1();
  EXPECT_GT(out, 0.0);
  EXPECT_LE(out, in);
}
