#include <doctest.h>

#include "hwall/lattice.hpp"

using namespace hwall;

namespace {

// Brute-force count of x in Z^3 with |x| < r N.
Index ball_count(double r, int N) {
  Index c = 0;
  const int R = static_cast<int>(std::ceil(r * N)) + 1;
  for (int x = -R; x <= R; ++x)
    for (int y = -R; y <= R; ++y)
      for (int z = -R; z <= R; ++z)
        if (std::sqrt(double(x * x + y * y + z * z)) / N < r) ++c;
  return c;
}

}  // namespace

TEST_CASE("cube and ball site counts") {
  CHECK(build_domain(ShapeSpec::cube(3), 6, 3, 1).size() == 125);
  CHECK(build_domain(ShapeSpec::cube(3), 8, 3, 1).size() == 343);
  for (int N : {2, 5, 9}) CHECK(build_domain(ShapeSpec::ball(3, 1.0), N, 3, 2).size() == ball_count(1.0, N));
}

TEST_CASE("indexing round trip and padding") {
  const LatticeDomain dom = build_domain(ShapeSpec::ball(3, 1.0), 4, 3, 3);
  CHECK(dom.padding() == 3);
  for (Index i = 0; i < dom.size(); ++i) {
    CHECK(dom.index_of(dom.site(i)) == i);
    CHECK(dom.site_of_flat(dom.flat_of(i)) == i);
    CHECK(dom.box().interior(dom.flat_of(i)));
  }
  CHECK_FALSE(dom.contains({4, 0, 0}));
  CHECK(dom.box().lower()[0] == -3 - 3);
}

TEST_CASE("neighbors classify the embedding faces") {
  const LatticeDomain dom = domain_from_sites(3, {{0, 0, 0}}, 1, 1);
  const auto nb = neighbors({0, 0, 0}, dom);
  REQUIRE(nb.size() == 6);
  for (const Neighbor& n : nb) CHECK(n.kind == Neighbor::Kind::boundary);
  const LatticeDomain big = domain_from_sites(3, {{0, 0, 0}}, 1, 3);
  for (const Neighbor& n : neighbors({0, 0, 0}, big)) CHECK(n.kind == Neighbor::Kind::interior);
}

TEST_CASE("box geometry parity and offsets") {
  const BoxGeometry box({-2, -2, -2}, {2, 2, 2});
  CHECK(box.size() == 125);
  CHECK(box.interior_indices().size() == 27);
  const Index f = box.flat({0, 0, 0});
  for (Index off : box.neighbor_offsets()) CHECK(box.parity(f + off) != box.parity(f));
}

TEST_CASE("shape validation") {
  CHECK_THROWS_AS(ShapeSpec::ball(3, -1.0), InvalidArgument);
  CHECK_THROWS_AS(build_domain(ShapeSpec::cube(3), 0, 3), InvalidArgument);
}
