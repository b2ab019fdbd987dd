#include <doctest.h>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "hwall/rng.hpp"

using namespace hwall;

TEST_CASE("philox known answers") {
  using A4 = std::array<std::uint32_t, 4>;
  CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == A4{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                   {0xffffffffu, 0xffffffffu}) ==
        A4{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                   {0xa4093822u, 0x299f31d0u}) ==
        A4{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("streams are pure functions of their address") {
  CounterRng a(42, StreamTag::heat_bath, 7, 3), b(42, StreamTag::heat_bath, 7, 3);
  CounterRng c(42, StreamTag::heat_bath, 7, 4), e(42, StreamTag::exact, 7, 3);
  for (int i = 0; i < 10; ++i) {
    const double u = a.uniform();
    CHECK(u == b.uniform());
    CHECK(u != c.uniform());
    CHECK(u != e.uniform());
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("normal helpers against boost") {
  const boost::math::normal_distribution<double> nd;
  for (double p : {1e-300, 1e-12, 0.001, 0.025, 0.3, 0.5, 0.77, 0.975, 1 - 1e-12}) {
    CHECK(normal_quantile(p) == doctest::Approx(boost::math::quantile(nd, p)).epsilon(1e-12));
  }
  for (double x : {-8.0, -2.0, 0.0, 1.0, 2.0, 10.0, 30.0}) {
    CHECK(normal_cdf(x) == doctest::Approx(boost::math::cdf(nd, x)).epsilon(1e-12));
    CHECK(normal_upper_tail(x) ==
          doctest::Approx(boost::math::cdf(boost::math::complement(nd, x))).epsilon(1e-12));
  }
}

TEST_CASE("truncated moments against quadrature") {
  for (double a : {-3.0, -0.5, 0.0, 1.0, 2.5, 5.0, 9.0}) {
    auto dens = [a](double x) { return std::exp(-0.5 * x * x) * (x >= a); };
    const double z = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(dens, a, a + 40);
    const double m1 = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
                          [&](double x) { return x * dens(x); }, a, a + 40) / z;
    const double m2 = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
                          [&](double x) { return x * x * dens(x); }, a, a + 40) / z;
    const TruncatedMoments tm = truncated_normal_moments(a);
    CHECK(tm.mean == doctest::Approx(m1).epsilon(1e-9));
    CHECK(tm.variance == doctest::Approx(m2 - m1 * m1).epsilon(1e-7));
  }
}

TEST_CASE("truncated draws respect the bound and the moments") {
  for (double a : {-1.0, 0.0, 2.0, 4.5, 7.0}) {
    const int n = 200000;
    double s = 0.0, s2 = 0.0;
    for (int k = 0; k < n; ++k) {
      CounterRng rng(9, StreamTag::test, static_cast<std::uint32_t>(k), 0);
      const double x = truncated_standard_normal(a, rng);
      REQUIRE(x >= a);
      s += x;
      s2 += x * x;
    }
    const TruncatedMoments tm = truncated_normal_moments(a);
    const double mean = s / n;
    CHECK(std::abs(mean - tm.mean) < 4.0 * std::sqrt(tm.variance / n));
  }
  CounterRng rng(1, StreamTag::test, 0, 0);
  CHECK_THROWS(truncated_standard_normal(std::numeric_limits<double>::infinity(), rng));
  CHECK_THROWS(truncated_standard_normal(std::nan(""), rng));
}
