#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "hwall/capacity.hpp"
#include "hwall/common.hpp"
#include "hwall/green.hpp"
#include "hwall/lattice.hpp"
#include "hwall/rare_event.hpp"
#include "hwall/wall.hpp"

namespace hwall {

/// Insertion-ordered JSON; every writer inserts keys in a fixed order.
using Json = nlohmann::ordered_json;

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

/// Long-format table: N, parameter, observable, value, se.
class LongTable {
 public:
  void add(double N, std::string parameter, std::string observable, double value,
           double se = 0.0);
  void write_csv(const std::filesystem::path& path) const;
  std::size_t rows() const { return rows_.size(); }

  struct Row {
    double N;
    std::string parameter, observable;
    double value, se;
  };
  const std::vector<Row>& data() const { return rows_; }

 private:
  std::vector<Row> rows_;
};

/// Binary frames of doubles: a 16-byte header (magic "HWFR", version u32,
/// values per frame u64, little-endian) followed by the frames.
class FrameWriter {
 public:
  static constexpr char kMagic[4] = {'H', 'W', 'F', 'R'};
  static constexpr std::uint32_t kVersion = 1;

  FrameWriter(const std::filesystem::path& path, std::uint64_t frame_length);
  void write(const Eigen::VectorXd& frame);
  std::uint64_t frames() const { return frames_; }

 private:
  std::ofstream out_;
  std::uint64_t frame_length_;
  std::uint64_t frames_ = 0;
};

/// All frames of a file written by FrameWriter.
std::vector<Eigen::VectorXd> read_frames(const std::filesystem::path& path);

/// Wall heights keyed by coordinates: CSV with header x0..x{d-1},value.
void save_wall_csv(const std::filesystem::path& path, const LatticeDomain& domain,
                   const WallField& wall);
/// Loads heights for every site of the domain; throws when one is missing.
WallField load_wall_csv(const std::filesystem::path& path, const LatticeDomain& domain,
                        const WallSpec& spec);

Json to_json(const ShapeSpec& shape);
ShapeSpec shape_from_json(const Json& j, int d, const std::string& path = "shape");
Json to_json(const WallSpec& spec);
WallSpec wall_from_json(const Json& j, const std::string& path = "wall");
Json to_json(const CapacityEstimate& est);
Json to_json(const TailConstants& tc);
Json to_json(const DiagonalSeries& s);
Json to_json(const ProbEstimate& p);

/// Writes `j` with two-space indentation and a trailing newline.
void write_json(const std::filesystem::path& path, const Json& j);
Json read_json(const std::filesystem::path& path);

}  // namespace hwall
