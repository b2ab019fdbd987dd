#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hwall/io.hpp"
#include "hwall/lattice.hpp"
#include "hwall/sampler.hpp"
#include "hwall/wall.hpp"

namespace hwall {

inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr int kSchemaVersion = 1;

/// Replay found a stored input whose hash differs from the manifest.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

/// Deterministic 64-bit seed for a labelled stream of a run.
std::uint64_t derive_seed(std::uint64_t master, const std::string& label);

struct WallEntry {
  WallSpec spec;
  /// Optional wall file (coordinates and heights) replacing the sampled wall.
  std::optional<std::filesystem::path> file;
};

struct CapacityShape {
  ShapeSpec shape;
  std::string label;
  std::vector<double> primal_meshes;
  std::vector<double> dual_meshes;
};

struct ExperimentSpec {
  enum class Kind {
    green_validation,
    capacity_study,
    repulsion_scaling,
    regime_comparison,
    hitting_validation,
    bounds_validation,
    rare_event_validation
  };

  Kind kind = Kind::green_validation;
  int dimension = 3;
  ShapeSpec shape;
  std::vector<int> N;
  std::optional<int> padding;
  double padding_factor = 0.5;
  std::vector<WallEntry> walls;
  int replications = 1;
  Schedule schedule;
  std::vector<double> epsilon{0.3};
  std::uint64_t seed = 1;
  int threads = 1;
  BoundaryCondition boundary;
  double h0 = 2.0;

  // green_validation, rare_event_validation
  Index samples = 10000;
  // capacity_study
  std::vector<CapacityShape> shapes;
  double box_radius = 5.0;
  std::vector<int> discrete_N;
  Index walkers = 100000;
  double kill_factor = 4.0;
  // bounds_validation, rare_event_validation
  std::vector<double> thresholds;
  Index trials = 100000;
  Index rademacher_n = 100;
  std::vector<double> bennett_t{5, 10, 20};
  std::optional<double> shift_height;
  std::optional<int> shift_ramp;

  /// Padding used at scale N.
  int padding_at(int N) const;
};

std::string kind_name(ExperimentSpec::Kind kind);

/// Validates a configuration. Errors name the offending field by its path,
/// e.g. "walls[0].beta: must lie in (0, 1)". Relative wall files resolve
/// against base_dir.
ExperimentSpec parse_experiment(const Json& config, const std::filesystem::path& base_dir);

struct RunOptions {
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;
};

/// Runs the experiment into out_dir (written through a staging directory and
/// renamed into place; nothing is left behind on failure). out_dir must be
/// absent, empty, or a previous run directory. Returns the manifest.
Json run_experiment(const Json& config, const std::filesystem::path& base_dir,
                    const std::filesystem::path& out_dir, const RunOptions& options = {});

/// run_experiment on a config file.
Json run_config_file(const std::filesystem::path& config_path,
                     const std::filesystem::path& out_dir, const RunOptions& options = {});

struct ReplayReport {
  bool identical = true;
  /// One line per output whose hash differs or is missing.
  std::vector<std::string> diff;
  std::vector<std::string> warnings;
  Json manifest;
};

/// Re-runs the stored configuration into out_dir and compares output hashes.
/// Throws IntegrityError when a referenced wall file changed, Error when an
/// input is missing.
ReplayReport replay(const std::filesystem::path& manifest_path,
                    const std::filesystem::path& out_dir, const RunOptions& options = {});

}  // namespace hwall
