#include <doctest.h>

#include "hwall/wall.hpp"

using namespace hwall;

TEST_CASE("heights depend only on the wall parameters and the site") {
  const WallSpec spec = WallSpec::gaussian(1.0, 11);
  const LatticeDomain small = build_domain(ShapeSpec::cube(3), 6, 3, 1);
  const LatticeDomain big = build_domain(ShapeSpec::cube(3), 10, 3, 1);
  const WallField a = sample_wall(spec, small), b = sample_wall(spec, big);
  for (Index i = 0; i < small.size(); ++i) {
    CHECK(a.values[i] == b.values[*big.index_of(small.site(i))]);
  }
  const WallField c = sample_wall(WallSpec::gaussian(1.0, 12), small);
  CHECK(c.values != a.values);
}

TEST_CASE("family laws") {
  const LatticeDomain dom = build_domain(ShapeSpec::cube(3), 50, 3, 1);
  const double n = static_cast<double>(dom.size());
  {
    const WallField w = sample_wall(WallSpec::gaussian(2.0, 1), dom);
    const double var = w.values.squaredNorm() / n;
    CHECK(std::abs(w.values.mean()) < 4.0 * std::sqrt(2.0 / n));
    CHECK(std::abs(var - 2.0) < 4.0 * std::sqrt(2.0 * 4.0 / n));
  }
  {
    const WallField w = sample_wall(WallSpec::half_gaussian(1.0, 1), dom);
    CHECK(w.values.minCoeff() >= 0.0);
    CHECK(std::abs(w.values.mean() - std::sqrt(2.0 / M_PI)) < 4.0 * std::sqrt((1 - 2 / M_PI) / n));
  }
  {
    const WallField w = sample_wall(WallSpec::bounded(-0.5, 0.5, 1), dom);
    CHECK(w.values.minCoeff() >= -0.5);
    CHECK(w.values.maxCoeff() <= 0.5);
  }
  for (double beta : {0.5, 0.8}) {
    const double Q = 1.0;
    const WallField w = sample_wall(WallSpec::stretched(beta, Q, 3), dom);
    for (double r : {1.0, 3.0}) {
      const double p = 0.5 * std::exp(-std::pow(r, 2 * beta) / (2 * Q));
      const double emp = (w.values.array() > r).cast<double>().mean();
      CHECK(std::abs(emp - p) < 4.0 * std::sqrt(p * (1 - p) / n));
    }
    CHECK((w.values.array() < 0).cast<double>().mean() == doctest::Approx(0.5).epsilon(0.02));
  }
  const WallField f = sample_wall(WallSpec::flat(1.5), dom);
  CHECK(f.values.minCoeff() == 1.5);
  CHECK(f.values.maxCoeff() == 1.5);
}

TEST_CASE("wall validation names the field") {
  try {
    WallSpec::stretched(1.2, 1.0).validate();
    FAIL("expected an error");
  } catch (const InvalidArgument& e) {
    CHECK(std::string(e.what()).find("beta") != std::string::npos);
  }
  CHECK_THROWS_AS(WallSpec::gaussian(-1.0).validate(), InvalidArgument);
  CHECK_THROWS_AS(WallSpec::bounded(1.0, 0.0).validate(), InvalidArgument);
  CHECK_THROWS_AS(parse_family("cauchy"), InvalidArgument);
  CHECK(parse_family(family_name(WallSpec::Family::stretched)) == WallSpec::Family::stretched);
}

TEST_CASE("level decomposition") {
  CHECK(level_width(4, 1.0) == doctest::Approx(0.5625));
  CHECK(top_level(4, 1.0, 3) == 5);
  const LatticeDomain dom = build_domain(ShapeSpec::cube(3), 16, 3, 1);
  const WallField w = sample_wall(WallSpec::gaussian(1.0, 5), dom);
  const LevelDecomposition lv = discretize_wall(w, dom, 4, 1.0);
  Index total = lv.count(LevelDecomposition::kInfinity);
  for (const auto& [k, sites] : lv.level_sets) total += static_cast<Index>(sites.size());
  CHECK(total == dom.size());
  for (Index i = 0; i < dom.size(); ++i) {
    const int k = lv.level[static_cast<std::size_t>(i)];
    if (k == LevelDecomposition::kInfinity) {
      CHECK(w.values[i] > lv.ktilde * lv.width);
      continue;
    }
    CHECK(lv.sigma_tilde[i] >= w.values[i]);
    if (k > 1 && k <= lv.kbar) CHECK(w.values[i] > (k - 1) * lv.width);
  }
  const double th = lv.theta0;
  CHECK(predicted_level_count(2, 16, 3, th, 1.0, 4, lv.ktilde) ==
        doctest::Approx(std::pow(16.0, 3 - th * th / 2)));
  CHECK_THROWS_AS(predicted_level_count(1, 16, 3, th, 1.0, 4, lv.ktilde), InvalidArgument);
}

TEST_CASE("level counts concentrate around the predicted scale") {
  const int N = 64;
  const LatticeDomain dom = build_domain(ShapeSpec::ball(3, 1.0), N, 3, 1);
  const double band = std::pow(static_cast<double>(N), 0.25);
  for (int k : {2, 3}) {
    double mean = 0.0;
    int ktilde = 0;
    double theta = 0.0;
    for (std::uint64_t s = 0; s < 20; ++s) {
      const LevelDecomposition lv = discretize_wall(sample_wall(WallSpec::gaussian(1.0, 100 + s), dom), dom, 4, 1.0);
      mean += static_cast<double>(lv.count(k)) / 20.0;
      ktilde = lv.ktilde;
      theta = lv.theta0;
    }
    const double f = predicted_level_count(k, N, 3, theta, 1.0, 4, ktilde);
    CHECK(mean >= f / band);
    CHECK(mean <= f * band);
  }
}

TEST_CASE("upper tail rates") {
  const LatticeDomain dom = build_domain(ShapeSpec::cube(3), 47, 3, 1);
  REQUIRE(dom.size() >= 100000);
  const double n = static_cast<double>(dom.size());
  const double r = 3.0;
  {
    const WallField w = sample_wall(WallSpec::gaussian(1.0, 8), dom);
    const double p = (w.values.array() > r).cast<double>().mean();
    const double exact = 0.5 * std::erfc(r / std::sqrt(2.0));
    CHECK(std::abs(p - exact) < 4.0 * std::sqrt(exact * (1 - exact) / n));
    CHECK(-std::log(p) / (r * r) == doctest::Approx(0.734).epsilon(0.05));
  }
  {
    const WallField w = sample_wall(WallSpec::stretched(0.5, 1.0, 8), dom);
    const double p = (w.values.array() > r).cast<double>().mean();
    const double rate = -std::log(p) / r;
    CHECK(rate > 0.25);
    CHECK(rate < 0.75);
  }
}
