#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "hwall/bounds.hpp"
#include "hwall/rare_event.hpp"
#include "hwall/rng.hpp"

using namespace hwall;

namespace {

LatticeDomain one_site() { return domain_from_sites(3, {{0, 0, 0}}, 1, 1); }

WallField flat_on(const LatticeDomain& dom, double c) {
  return WallField{WallSpec::flat(c), Eigen::VectorXd::Constant(dom.size(), c)};
}

// P(X >= 0, Y >= 0) for a centered pair with the given covariance, by
// integrating P(Y >= 0 | X = x) against the law of X.
double orthant_quadrature(double sxx, double sxy, double syy) {
  const double sx = std::sqrt(sxx);
  const double cond_sd = std::sqrt(syy - sxy * sxy / sxx);
  auto f = [&](double x) {
    const double dens = std::exp(-0.5 * x * x / sxx) / (sx * std::sqrt(2 * M_PI));
    return dens * normal_upper_tail(-(sxy / sxx) * x / cond_sd);
  };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, 12.0 * sx, 15, 1e-14);
}

}  // namespace

TEST_CASE("direct estimates on trivial events") {
  const LatticeDomain box = build_domain(ShapeSpec::cube(3), 4, 3, 1);
  const ProbEstimate all = direct_mc_prob(box, flat_on(box, -1e6), BoundaryCondition::zero(), 1000, 1);
  CHECK(all.prob == 1.0);
  CHECK(all.log_prob == 0.0);
  const LatticeDomain one = one_site();
  const ProbEstimate half = direct_mc_prob(one, flat_on(one, 0.0), BoundaryCondition::zero(), 100000, 2);
  CHECK(std::abs(half.prob - 0.5) < 4.0 * half.se);
  const ProbEstimate none = direct_mc_prob(one, flat_on(one, 9.0), BoundaryCondition::zero(), 1000, 2);
  CHECK(none.flagged);
  CHECK(none.one_sided);
  CHECK(none.log_prob == doctest::Approx(std::log(3.0 / 1000)));
}

TEST_CASE("two-site orthant probability") {
  const LatticeDomain two = domain_from_sites(3, {{0, 0, 0}, {1, 0, 0}}, 1, 1);
  const GreenTable g = green_finite(two);
  const double ref = orthant_quadrature(g(0, 0), g(0, 1), g(1, 1));
  const double rho = g(0, 1) / std::sqrt(g(0, 0) * g(1, 1));
  CHECK(ref == doctest::Approx(0.25 + std::asin(rho) / (2 * M_PI)).epsilon(1e-10));
  const ProbEstimate est = direct_mc_prob(two, flat_on(two, 0.0), BoundaryCondition::zero(), 200000, 3);
  CHECK(std::abs(est.prob - ref) < 4.0 * est.se);
}

TEST_CASE("importance sampling on one site") {
  const LatticeDomain one = one_site();
  for (double a : {0.0, 1.0, 2.0, 4.0}) {
    const Field psi = default_shift_profile(one, a, 0);
    const ProbEstimate is = importance_log_prob(one, flat_on(one, a), BoundaryCondition::zero(), psi, 100000, 4);
    const double exact = normal_upper_tail(a);
    CHECK(std::abs(is.prob - exact) < 4.0 * is.se);
    CHECK(is.ess <= static_cast<double>(is.samples));
    CHECK(is.log_prob <= 0.0);
    CHECK(is.shift_entropy == doctest::Approx(a * a));
    if (a == 2.0) {
      const ProbEstimate direct = direct_mc_prob(one, flat_on(one, a), BoundaryCondition::zero(), 100000, 4);
      CHECK(is.ess > 10.0 * static_cast<double>(direct.hits));
    }
  }
}

TEST_CASE("zero shift has the direct law") {
  const LatticeDomain box = build_domain(ShapeSpec::cube(3), 4, 3, 1);
  const Field psi = default_shift_profile(box, 0.0, 0);
  const WallField wall = flat_on(box, -0.5);
  const ProbEstimate is = importance_log_prob(box, wall, BoundaryCondition::affine(1.0, Eigen::Vector3d::Zero()), psi, 20000, 5);
  CHECK(is.weight_mean == 1.0);
  CHECK(is.ess == doctest::Approx(static_cast<double>(is.hits)));
}

TEST_CASE("weights have unit mean") {
  const LatticeDomain box = build_domain(ShapeSpec::cube(3), 6, 3, 2);
  const Field psi = default_shift_profile(box, 0.4, 1);
  const ProbEstimate is = importance_log_prob(box, flat_on(box, 0.0), BoundaryCondition::zero(), psi, 100000, 6);
  CHECK(std::abs(is.weight_mean - 1.0) < 4.0 * is.weight_mean_se);
  CHECK(is.psi_hash.size() == 64);
}

TEST_CASE("probability decreases as the wall rises") {
  const LatticeDomain box = build_domain(ShapeSpec::cube(3), 4, 3, 1);
  const BoundaryCondition bc = BoundaryCondition::affine(2.0, Eigen::Vector3d::Zero());
  const ProbEstimate lo = direct_mc_prob(box, flat_on(box, 0.0), bc, 100000, 7);
  const ProbEstimate hi = direct_mc_prob(box, flat_on(box, 0.5), bc, 100000, 7);
  CHECK(hi.log_prob < lo.log_prob);
}

TEST_CASE("sandwich with the entropy bound") {
  const LatticeDomain box = build_domain(ShapeSpec::cube(3), 6, 3, 1);
  const BoundaryCondition bc = BoundaryCondition::affine(3.0, Eigen::Vector3d::Zero());
  const Field psi = default_shift_profile(box, 0.2, 0);
  const ProbEstimate is = importance_log_prob(box, flat_on(box, 1.0), bc, psi, 50000, 8);
  const double p_mu = is.tilted_hit_fraction;
  CHECK(is.log_prob >= std::log(p_mu) + entropy_lower_bound(is.shift_entropy, p_mu));
}

TEST_CASE("shift profile") {
  const LatticeDomain dom = build_domain(ShapeSpec::cube(3), 4, 3, 3);
  const Field psi = default_shift_profile(dom, 2.0, 2);
  for (Index i = 0; i < dom.size(); ++i) CHECK(psi.values[dom.flat_of(i)] == 2.0);
  for (Index f = 0; f < dom.box().size(); ++f) {
    if (!dom.box().interior(f)) CHECK(psi.values[f] == 0.0);
  }
  CHECK(psi[{2, 0, 0}] == doctest::Approx(2.0 * 0.5 * (1 + std::cos(M_PI / 3))));
  CHECK(psi[{4, 0, 0}] == 0.0);
  Field bad = psi;
  bad.values[0] = 1.0;
  CHECK_THROWS_AS(importance_log_prob(dom, flat_on(dom, 0.0), BoundaryCondition::zero(), bad, 10, 1),
                  InvalidArgument);
}
