#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "hwall/io.hpp"

using namespace hwall;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("hwall_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("sha256 known vectors") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("long table csv") {
  const fs::path dir = scratch("csv");
  LongTable t;
  t.add(8, "gaussian(Q=1)", "block_mean", 2.5, 0.125);
  t.add(16, "a,b", "x", 0.1);
  t.write_csv(dir / "t.csv");
  CHECK(slurp(dir / "t.csv") ==
        "N,parameter,observable,value,se\n8,gaussian(Q=1),block_mean,2.5,0.125\n16,\"a,b\",x,0.1,0\n");
  CHECK(format_double(0.1) == "0.1");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("frame files") {
  const fs::path dir = scratch("frames");
  {
    FrameWriter w(dir / "f.bin", 3);
    w.write(Eigen::Vector3d(1.0, -2.5, 1e300));
    w.write(Eigen::Vector3d(0.0, 4.0, -0.0));
    CHECK_THROWS_AS(w.write(Eigen::Vector2d(1, 2)), InvalidArgument);
  }
  const std::string bytes = slurp(dir / "f.bin");
  REQUIRE(bytes.size() == 16 + 2 * 3 * 8);
  CHECK(bytes.substr(0, 4) == "HWFR");
  CHECK(bytes[4] == 1);
  CHECK(bytes[8] == 3);
  const auto frames = read_frames(dir / "f.bin");
  REQUIRE(frames.size() == 2);
  CHECK(frames[0][2] == 1e300);
  CHECK(frames[1][1] == 4.0);
  std::ofstream(dir / "bad.bin") << "nope";
  CHECK_THROWS_AS(read_frames(dir / "bad.bin"), Error);
}

TEST_CASE("wall files round trip") {
  const fs::path dir = scratch("wall");
  const LatticeDomain dom = build_domain(ShapeSpec::cube(3), 4, 3, 1);
  const WallField w = sample_wall(WallSpec::gaussian(1.0, 3), dom);
  save_wall_csv(dir / "w.csv", dom, w);
  const WallField back = load_wall_csv(dir / "w.csv", dom, w.spec);
  CHECK(back.values == w.values);
  const LatticeDomain bigger = build_domain(ShapeSpec::cube(3), 6, 3, 1);
  CHECK_THROWS_AS(load_wall_csv(dir / "w.csv", bigger, w.spec), Error);
}

TEST_CASE("json conversions keep their key order") {
  const Json j = to_json(WallSpec::stretched(0.5, 2.0));
  CHECK(j.dump() == R"({"family":"stretched","beta":0.5,"Q":2.0})");
  CHECK(wall_from_json(j).beta == 0.5);
  try {
    wall_from_json(Json{{"family", "stretched"}, {"beta", 1.2}, {"Q", 1.0}}, "walls[0]");
    FAIL("expected an error");
  } catch (const InvalidArgument& e) {
    CHECK(std::string(e.what()).rfind("walls[0].beta", 0) == 0);
  }
  const ShapeSpec s = shape_from_json(to_json(ShapeSpec::ball(3, 1.5)), 3);
  CHECK(s.kind == ShapeSpec::Kind::ball);
  CHECK(s.radius == 1.5);
  CHECK_THROWS_AS(shape_from_json(Json{{"kind", "torus"}}, 3), InvalidArgument);
}
