#include <doctest.h>

#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/binomial.hpp>
#include <boost/math/special_functions/factorials.hpp>

#include "hwall/green.hpp"

using namespace hwall;

namespace {

constexpr double kWatson = 1.516386059151978;

// Neumann series sum_k P^k of the walk killed on leaving D_N, applied entrywise.
Eigen::MatrixXd neumann_green(const LatticeDomain& dom) {
  const Index n = dom.size();
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (int a = 0; a < dom.dim(); ++a) {
      for (int s : {-1, 1}) {
        Site y = dom.site(i);
        y[static_cast<std::size_t>(a)] += s;
        if (auto j = dom.index_of(y)) P(i, *j) += 1.0 / (2 * dom.dim());
      }
    }
  }
  Eigen::MatrixXd G = Eigen::MatrixXd::Identity(n, n), term = G;
  for (int k = 0; k < 400; ++k) {
    term = term * P;
    G += term;
  }
  return G;
}

// Closed 2n-step walks in Z^3 over 6^{2n}.
double return_prob_3d(int n) {
  double s = 0.0;
  for (int j = 0; j <= n; ++j)
    for (int k = 0; j + k <= n; ++k) {
      const double m = boost::math::factorial<double>(n) /
                       (boost::math::factorial<double>(j) * boost::math::factorial<double>(k) *
                        boost::math::factorial<double>(n - j - k));
      s += m * m;
    }
  return boost::math::binomial_coefficient<double>(2 * n, n) * s / std::pow(6.0, 2 * n);
}

}  // namespace

TEST_CASE("return probabilities match the closed-walk count") {
  const auto p = return_probabilities(3, 12);
  CHECK(p[0] == 1.0);
  CHECK(p[1] == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
  for (int n = 2; n <= 12; ++n) CHECK(p[n] == doctest::Approx(return_prob_3d(n)).epsilon(1e-12));
}

TEST_CASE("diagonal series brackets the known constant") {
  const DiagonalSeries s = green_infinite_diag_at(3, 10000);
  CHECK(std::abs(s.value - kWatson) <= s.error_bound);
  CHECK(s.error_bound < 1e-6);
  const DiagonalSeries fine = green_infinite_diag(3, 1e-8);
  CHECK(std::abs(fine.value - kWatson) <= fine.error_bound);
  CHECK(std::abs(green_diag_value(3) - kWatson) < 1e-7);
  CHECK_THROWS_AS(green_infinite_diag(3, 1e-14), BudgetError);
}

TEST_CASE("finite Green function equals the Neumann series") {
  for (const auto& dom : {build_domain(ShapeSpec::cube(3), 4, 3, 1),
                          build_domain(ShapeSpec::ball(3, 1.0), 2, 3, 2)}) {
    const GreenTable g = green_finite(dom, true);
    const Eigen::MatrixXd ref = neumann_green(dom);
    CHECK((g.values - ref).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((g.factor * g.factor.transpose() - g.values).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((g.values - g.values.transpose()).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("generator rows and float instantiation") {
  const BoxGeometry box({-2, -2, -2}, {2, 2, 2});
  const auto region = box.interior_indices();
  const Matrix<double> A = killed_walk_generator<double>(box, region);
  const Matrix<float> Af = killed_walk_generator<float>(box, region);
  CHECK(A(0, 0) == 1.0);
  CHECK((A.cast<float>() - Af).cwiseAbs().maxCoeff() == 0.0f);
  CHECK(A.rowwise().sum().minCoeff() >= -1e-15);
}

TEST_CASE("conditional variances") {
  CHECK(conditional_variance_box(2, 3) == 1.0);
  const LatticeDomain cube3 = build_domain(ShapeSpec::cube(3), 4, 3, 1);
  const Eigen::MatrixXd ref = neumann_green(cube3);
  CHECK(conditional_variance_box(4, 3) == doctest::Approx(ref(13, 13)).epsilon(1e-12));
  double prev = 0.0;
  for (int L : {2, 4, 8, 16}) {
    const double g = conditional_variance_box(L, 3);
    CHECK(g > prev);
    CHECK(g < kWatson);
    prev = g;
  }
  CHECK_THROWS_AS(conditional_variance_box(3, 3), InvalidArgument);
  CHECK_THROWS_AS(conditional_variance_box(40, 3), SizeGuardExceeded);
}

TEST_CASE("scaled Bessel values") {
  for (double s : {0.3, 5.0, 120.0, 699.0}) {
    const auto v = scaled_bessel_i(6, s);
    for (int n = 0; n <= 6; ++n) {
      CHECK(v[n] == doctest::Approx(std::exp(-s) * boost::math::cyl_bessel_i(n, s)).epsilon(1e-12));
    }
  }
  // large-argument expansion
  for (double s : {701.0, 3000.0}) {
    const auto v = scaled_bessel_i(6, s);
    for (int n = 0; n <= 6; ++n) {
      const double mu = 4.0 * n * n;
      double term = 1.0, sum = 1.0;
      for (int k = 1; k <= 8; ++k) {
        term *= -(mu - (2 * k - 1) * (2 * k - 1)) / (k * 8.0 * s);
        sum += term;
      }
      CHECK(v[n] == doctest::Approx(sum / std::sqrt(2 * M_PI * s)).epsilon(1e-12));
    }
  }
  const auto a = scaled_bessel_i(4, 699.999999), b = scaled_bessel_i(4, 700.000001);
  for (int n = 0; n <= 4; ++n) CHECK(a[n] == doctest::Approx(b[n]).epsilon(1e-8));
}

TEST_CASE("infinite-volume Green function") {
  const InfiniteGreen g(3, 12);
  CHECK(g({0, 0, 0}) == doctest::Approx(kWatson).epsilon(1e-10));
  // harmonic except at the origin: G(0) - mean of neighbors = 1
  CHECK(g({0, 0, 0}) - g({1, 0, 0}) == doctest::Approx(1.0).epsilon(1e-10));
  for (const Site& x : {Site{3, 1, 2}, Site{5, 5, 0}, Site{7, 2, 1}}) {
    double avg = 0.0;
    for (int a = 0; a < 3; ++a)
      for (int s : {-1, 1}) {
        Site y = x;
        y[a] += s;
        avg += g(y) / 6.0;
      }
    CHECK(avg == doctest::Approx(g(x)).epsilon(1e-10));
  }
  CHECK(g({1, 2, 3}) == g({-3, 1, -2}));
  CHECK_THROWS_AS(g({13, 0, 0}), InvalidArgument);
}

TEST_CASE("tail constant") {
  CHECK(rd_asymptotic(3) == doctest::Approx(1.5 / M_PI).epsilon(1e-15));
  const TailConstants tc = fit_Rd(3, 20, 40);
  CHECK(tc.R_d == doctest::Approx(rd_asymptotic(3)).epsilon(1e-3));
  CHECK(tc.plateau_ratio <= 1.05);
  CHECK_THROWS_AS(fit_Rd(3, 5, 40), InvalidArgument);
}
