#include <doctest.h>

#include "hwall/capacity.hpp"
#include "hwall/green.hpp"
#include "hwall/rng.hpp"

using namespace hwall;

namespace {

const double kBallCap = 2.0 * M_PI / 3.0;

// E |X - Y + k|^{-1} with X, Y uniform on the unit cube.
std::pair<double, double> interaction_mc(const std::vector<int>& k, int n) {
  double s = 0.0, s2 = 0.0;
  for (int t = 0; t < n; ++t) {
    CounterRng rng(5, StreamTag::test, static_cast<std::uint32_t>(t), 77);
    double r2 = 0.0;
    for (int i = 0; i < 3; ++i) {
      const double u = rng.uniform() - rng.uniform() + k[static_cast<std::size_t>(i)];
      r2 += u * u;
    }
    const double v = 1.0 / std::sqrt(r2);
    s += v;
    s2 += v * v;
  }
  const double m = s / n;
  return {m, std::sqrt((s2 / n - m * m) / n)};
}

}  // namespace

TEST_CASE("cell interaction against Monte Carlo") {
  for (const auto& k : {std::vector<int>{0, 0, 0}, {1, 0, 0}, {1, 1, 1}, {2, 1, 0}}) {
    const auto [m, se] = interaction_mc(k, 2000000);
    CHECK(std::abs(cell_interaction(k) - m) < 4.0 * se);
  }
  CHECK(cell_interaction({0, 0, 0}) == doctest::Approx(1.882312644390).epsilon(1e-10));
  // far field: the quadrupole term vanishes for equal axis variances
  CHECK(cell_interaction({4, 3, 0}) == doctest::Approx(0.2).epsilon(2e-4));
  CHECK(cell_interaction({1, -2, 0}) == cell_interaction({-2, 0, 1}));
}

TEST_CASE("dual lower estimate of the ball") {
  const double rd = rd_asymptotic(3);
  const CapacityEstimate a = capacity_dual(ShapeSpec::ball(3, 1.0), 1.0 / 6, rd);
  CHECK(a.value < kBallCap);
  CHECK(a.value > 0.95 * kBallCap);
  const CapacityEstimate b = capacity_dual(ShapeSpec::ball(3, 2.0), 1.0 / 3, rd);
  CHECK(b.value == doctest::Approx(2.0 * a.value).epsilon(1e-12));
  const CapacityEstimate study = capacity_dual_study(ShapeSpec::ball(3, 1.0), {0.25, 1.0 / 6}, rd);
  CHECK(study.refinement_history.size() == 2);
  for (const auto& [mesh, value] : study.refinement_history) CHECK(value < kBallCap);
  CHECK(study.value == study.refinement_history[1].second);
  CHECK_THROWS_AS(capacity_dual(ShapeSpec::ball(3, 1.0), 0.04, rd), SizeGuardExceeded);
}

TEST_CASE("primal estimate of the ball") {
  const CapacityEstimate st = capacity_primal_study(ShapeSpec::ball(3, 1.0), 5.0, {0.25, 0.125});
  CHECK(st.value == doctest::Approx(kBallCap).epsilon(0.05));
  CHECK(st.box_coefficient > 0.0);
  CHECK_THROWS_AS(capacity_primal(ShapeSpec::ball(3, 1.0), 1.0, 0.25), InvalidArgument);
  CHECK_THROWS_AS(capacity_primal(ShapeSpec::ball(3, 1.0), 5.0, 0.3), InvalidArgument);
}

TEST_CASE("discrete escape sum of one site") {
  const CapacityEstimate est = capacity_discrete(ShapeSpec::ball(3, 0.4), 1, 3, 200000, 3, 1.0, 20.0);
  REQUIRE(est.boundary_sites == 1);
  CHECK(std::abs(est.value - 1.0 / green_diag_value(3)) < 4.0 * est.se);
}

TEST_CASE("outer layer") {
  const LatticeDomain dom = build_domain(ShapeSpec::cube(3), 4, 3, 1);
  CHECK(outer_layer(dom).size() == 26);
}

TEST_CASE("calibrated discrete estimate of the ball") {
  const CapacityEstimate b = capacity_discrete(ShapeSpec::ball(3, 1.0), 32, 3, 400000, 12);
  CHECK(b.calibration == kDiscreteCalibration);
  CHECK(std::abs(b.value - kBallCap) <= 4.0 * b.se);
}
