#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "mfao/coefficients.hpp"

using namespace mfao;

namespace {

const Domain kBox2 = Domain::box(2, {0, 0, 0}, {1, 1, 0});
const Domain kBox3 = Domain::box(3, {0, 0, 0}, {1, 1, 1});

}  // namespace

TEST(Validate, ZeroScatteringPassesWithFullMargin) {
  Phantom ph;
  ph.sigma = ScalarField::constant(2.0);
  ph.kappa = ScalarField::constant(0.0);
  const ValidationReport r = validate(ph, SpatialGrid::covering(kBox2, 9), AngularGrid::circle(16));
  EXPECT_TRUE(r.passed());
  EXPECT_NEAR(r.min_margin, 2.0, 1e-15);
}

TEST(Validate, ScatteringAboveAbsorptionFails) {
  Phantom ph;
  ph.sigma = ScalarField::constant(1.0);
  ph.kappa = ScalarField::constant(2.0);
  const SpatialGrid grid = SpatialGrid::covering(kBox2, 9);
  const AngularGrid ang = AngularGrid::circle(16);
  const ValidationReport r = validate(ph, grid, ang);
  ASSERT_FALSE(r.passed());
  EXPECT_EQ(r.violations.front(), "absorption-margin");
  EXPECT_NEAR(r.max_rho, 2.0, 1e-12);
  try {
    require_valid(ph, grid, ang);
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.condition(), "absorption-margin");
  }
}

TEST(Validate, SeparableKernelHasNoSymmetryDefect) {
  Phantom ph;
  ph.sigma = ScalarField::constant(2.0);
  ph.kappa = ScalarField::constant(0.3);
  ph.phase = PhaseFunction::henyey_greenstein(0.6);
  const ValidationReport r = validate(ph, SpatialGrid::covering(kBox3, 3), AngularGrid::sphere(6, 12));
  EXPECT_EQ(r.max_isotropy_defect, 0.0);
}

TEST(Validate, AsymmetricTableFailsSymmetry) {
  const AngularGrid ang = AngularGrid::circle(8);
  auto table = std::make_shared<KernelTable>();
  table->size = ang.size();
  table->values.assign(ang.size() * ang.size(), 0.01);
  table->values[0 * ang.size() + 1] = 0.05;
  Phantom ph;
  ph.sigma = ScalarField::constant(2.0);
  ph.kappa = ScalarField::constant(1.0);
  ph.table = table;
  const ValidationReport r = validate(ph, SpatialGrid::covering(kBox2, 5), ang);
  ASSERT_FALSE(r.passed());
  EXPECT_EQ(r.violations.front(), "kernel-symmetry");
}

TEST(Validate, NegativeSigmaFailsNonnegativity) {
  Phantom ph;
  ph.sigma = ScalarField::analytic([](const Vec3& x) { return x[0] - 0.5; });
  ph.kappa = ScalarField::constant(0.0);
  const ValidationReport r = validate(ph, SpatialGrid::covering(kBox2, 5), AngularGrid::circle(8));
  ASSERT_FALSE(r.passed());
  EXPECT_EQ(r.violations.front(), "nonnegativity");
}

TEST(PhaseFunction, NormalizedOnGridAndContinuum) {
  for (const PhaseFunction& p :
       {PhaseFunction::isotropic(), PhaseFunction::linear(0.4), PhaseFunction::henyey_greenstein(0.3)}) {
    for (const AngularGrid& ang : {AngularGrid::circle(64), AngularGrid::sphere(16, 32)}) {
      double sum = 0.0;
      for (std::size_t j = 0; j < ang.size(); ++j) sum += ang.weight(j) * p(dot(ang.direction(3), ang.direction(j)), ang.dim());
      EXPECT_NEAR(sum, 1.0, 2e-3) << p.describe() << " " << ang.describe();
    }
  }
}

TEST(PhaseFunction, RhoEqualsMeasureTimesKappaTimesMeanP) {
  Phantom ph = phantom_library("gaussian-bumps", {{"g", 0.3}}, kBox3);
  const AngularGrid ang = AngularGrid::sphere(8, 16);
  const Vec3 x{0.4, 0.5, 0.6};
  double rho = 0.0;
  for (std::size_t j = 0; j < ang.size(); ++j) rho += ang.weight(j) * ph.kernel(x, ang, 5, j);
  double mean_p = 0.0;
  for (std::size_t j = 0; j < ang.size(); ++j) mean_p += ang.weight(j) * ph.angular_kernel(ang, 5, j);
  mean_p /= ang.measure();
  EXPECT_NEAR(rho, ang.measure() * ph.kappa(x) * mean_p, 1e-14);
  EXPECT_NEAR(rho, ph.kappa(x), 1e-12);
}

TEST(PhantomLibrary, HomogeneousDefaults) {
  const Phantom ph = phantom_library("homogeneous", {}, kBox3);
  EXPECT_TRUE(ph.sigma.is_constant());
  EXPECT_EQ(ph.sigma({0.3, 0.2, 0.1}), 2.0);
  EXPECT_EQ(ph.kappa({0.3, 0.2, 0.1}), 0.1);
  EXPECT_THROW(phantom_library("nonexistent", {}, kBox3), ConfigError);
}

TEST(PhantomLibrary, EveryPhantomValidatesWithMarginByDenseSampling) {
  for (const Domain& dom : {kBox2, kBox3}) {
    const AngularGrid ang = dom.dim() == 2 ? AngularGrid::circle(32) : AngularGrid::sphere(8, 16);
    for (const std::string& name : phantom_names()) {
      const Phantom ph = phantom_library(name, {}, dom);
      EXPECT_TRUE(require_valid(ph, SpatialGrid::covering(dom, dom.dim() == 2 ? 65 : 17), ang).passed());
      // Independent dense random sampling of sigma - kappa.
      std::mt19937_64 rng(13);
      std::uniform_real_distribution<double> u(0.0, 1.0);
      double margin = 1e9;
      for (int k = 0; k < 20000; ++k) {
        const Vec3 x{u(rng), u(rng), dom.dim() == 3 ? u(rng) : 0.0};
        margin = std::min(margin, ph.sigma(x) - ph.kappa(x));
        EXPECT_GE(ph.kappa(x), 0.0);
      }
      EXPECT_GE(margin, 0.1) << name;
    }
  }
}

TEST(ScalarField, GriddedInterpolatesAndRejectsMismatch) {
  const SpatialGrid g = SpatialGrid::covering(kBox2, 5);
  std::vector<double> v(g.size());
  for (std::size_t n = 0; n < g.size(); ++n) v[n] = 2.0 * g.node(n)[0] + g.node(n)[1];
  const ScalarField f = ScalarField::gridded(g, v);
  EXPECT_NEAR(f({0.33, 0.71, 0}), 2.0 * 0.33 + 0.71, 1e-12);
  EXPECT_THROW(ScalarField::gridded(g, std::vector<double>(3)), ContractError);
}
