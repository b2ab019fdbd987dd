#include <doctest.h>

#include "hwall/observables.hpp"
#include "hwall/rng.hpp"
#include "hwall/sampler.hpp"

using namespace hwall;

TEST_CASE("exact sampler covariance on two sites") {
  const LatticeDomain dom = domain_from_sites(3, {{0, 0, 0}, {1, 0, 0}}, 1, 1);
  const GreenTable g = green_finite(dom);
  const ExactSampler sampler(dom, BoundaryCondition::zero());
  const Index n = 200000;
  const Eigen::MatrixXd x = sampler.interior_samples(4, 0, n);
  REQUIRE(x.rows() == 2);
  const double c00 = x.row(0).squaredNorm() / n, c01 = x.row(0).dot(x.row(1)) / n;
  CHECK(std::abs(c00 - g(0, 0)) < 4.0 * std::sqrt(2.0 * g(0, 0) * g(0, 0) / n));
  CHECK(std::abs(c01 - g(0, 1)) <
        4.0 * std::sqrt((g(0, 0) * g(1, 1) + g(0, 1) * g(0, 1)) / n));
  // a single draw is reproducible
  CHECK(sampler.sample(4, 17).values == sampler.sample(4, 17).values);
  CHECK(exact_sample(dom, BoundaryCondition::zero(), 4).values == sampler.sample(4, 0).values);
}

TEST_CASE("affine boundary values are harmonic") {
  const BoundaryCondition bc = BoundaryCondition::affine(1.0, Eigen::Vector3d(0.5, -0.25, 0.0));
  const LatticeDomain dom = build_domain(ShapeSpec::cube(3), 6, 3, 2);
  const ExactSampler sampler(dom, bc);
  const auto& interior = sampler.interior();
  for (std::size_t i = 0; i < interior.size(); ++i) {
    CHECK(sampler.mean()[static_cast<Index>(i)] ==
          doctest::Approx(bc.value(dom.box().site(interior[i]))).epsilon(1e-10));
  }
  const Field f = boundary_field(dom.box(), bc);
  CHECK(f[{0, 0, 0}] == 1.0);
  CHECK_THROWS_AS(BoundaryCondition::affine(0.0, Eigen::Vector2d(1, 1)).validate(3), InvalidArgument);
}

TEST_CASE("heat bath does not depend on the thread count") {
  const LatticeDomain dom = build_domain(ShapeSpec::cube(3), 8, 3, 4);
  const WallField wall = sample_wall(WallSpec::gaussian(1.0, 3), dom);
  Eigen::VectorXd ref;
  for (int t : {1, 3, 8}) {
    set_threads(t);
    const ConditionedRun run = sample_conditioned(dom, wall, BoundaryCondition::zero(),
                                                  Schedule{10, 1, 5}, 21, 1.0,
                                                  [&](Index k, const SamplerState& st) {
                                                    if (k == 4) {
                                                      if (ref.size() == 0) {
                                                        ref = st.field.values;
                                                      } else {
                                                        CHECK(st.field.values == ref);
                                                      }
                                                    }
                                                  });
    CHECK(run.sweeps == 15);
  }
  set_threads(1);
}

TEST_CASE("heat-bath stationary variance") {
  const LatticeDomain dom = build_domain(ShapeSpec::cube(3), 4, 3, 1);
  const double target = green_finite(dom)(13, 13);
  SamplerState st = make_state(dom, BoundaryCondition::zero(), 8);
  for (int s = 0; s < 200; ++s) heat_bath_sweep(st);
  std::vector<double> sq;
  for (int s = 0; s < 40000; ++s) {
    heat_bath_sweep(st);
    const double v = st.field.values[dom.flat_of(13)];
    sq.push_back(v * v);
  }
  const Summary sm = batch_summary(sq);
  CHECK(std::abs(sm.mean - target) < 4.0 * sm.se);
}

TEST_CASE("conditioned samples stay above the wall") {
  const LatticeDomain dom = build_domain(ShapeSpec::cube(3), 6, 3, 3);
  const WallField wall = sample_wall(WallSpec::gaussian(1.0, 9), dom);
  Index seen = 0;
  const ConditionedRun run =
      sample_conditioned(dom, wall, BoundaryCondition::zero(), Schedule{1, 2, 60}, 5, 0.5,
                         [&](Index, const SamplerState& st) {
                           ++seen;
                           CHECK(satisfies_wall(st));
                           const Eigen::VectorXd v = site_values(st.field, dom);
                           CHECK((v - wall.values).minCoeff() >= 0.0);
                         });
  CHECK(seen == 60);
  CHECK(run.block_means.size() == 60);
  CHECK(std::isfinite(run.tau));
  CHECK_FALSE(run.burn_in_ok);
  CHECK_FALSE(run.warnings.empty());
}

TEST_CASE("integrated autocorrelation of an AR(1) series") {
  const double rho = 0.8;
  double sum = 0.0;
  const int series = 40;
  for (int r = 0; r < series; ++r) {
    std::vector<double> x;
    double v = 0.0;
    for (int k = 0; k < 100000; ++k) {
      CounterRng rng(3, StreamTag::test, static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(r));
      v = rho * v + std::sqrt(1 - rho * rho) * rng.normal();
      x.push_back(v);
    }
    sum += integrated_autocorrelation(x);
  }
  CHECK(sum / series == doctest::Approx(0.5 * (1 + rho) / (1 - rho)).epsilon(0.15));
}

TEST_CASE("field helpers") {
  const LatticeDomain a = build_domain(ShapeSpec::cube(3), 4, 3, 1);
  const LatticeDomain b = build_domain(ShapeSpec::cube(3), 4, 3, 2);
  const Field fa = boundary_field(a.box(), BoundaryCondition::zero());
  const Field fb = boundary_field(b.box(), BoundaryCondition::zero());
  CHECK_THROWS_AS(shift_field(fa, fb), InvalidArgument);
  CHECK(site_values(fa, a).size() == 27);
  CHECK_THROWS_AS((Schedule{-1, 1, 1}.validate()), InvalidArgument);
}
