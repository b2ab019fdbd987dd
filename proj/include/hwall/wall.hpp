#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hwall/common.hpp"
#include "hwall/lattice.hpp"

namespace hwall {

/// Law of the IID substrate heights.
struct WallSpec {
  enum class Family { gaussian, half_gaussian, bounded, stretched, flat };

  Family family = Family::flat;
  double Q = 1.0;     // gaussian, half_gaussian, stretched
  double beta = 0.5;  // stretched, in (0, 1)
  double lo = 0.0, hi = 0.0;  // bounded
  double c = 0.0;     // flat
  std::uint64_t seed = 0;

  static WallSpec gaussian(double Q, std::uint64_t seed = 0);
  static WallSpec half_gaussian(double Q, std::uint64_t seed = 0);
  static WallSpec bounded(double lo, double hi, std::uint64_t seed = 0);
  /// P(h > r) = exp(-r^{2 beta} / (2Q)) on the upper side (probability 1/2),
  /// -|N(0,1)| on the lower side.
  static WallSpec stretched(double beta, double Q, std::uint64_t seed = 0);
  static WallSpec flat(double c);

  void validate() const;
  /// Gaussian-scale constant of the upward tail, when the family has one.
  bool has_tail_scale() const;
};

std::string family_name(WallSpec::Family family);
WallSpec::Family parse_family(const std::string& name);

/// Wall heights in site-index order of the domain they were drawn on.
struct WallField {
  WallSpec spec;
  Eigen::VectorXd values;

  Index size() const { return values.size(); }
};

/// The height at site x. Depends only on (spec, x), so fields drawn on nested
/// domains agree on shared sites.
double wall_value(const WallSpec& spec, const Site& x);

WallField sample_wall(const WallSpec& spec, const LatticeDomain& domain);

/// Level sets of the discretized wall.
struct LevelDecomposition {
  static constexpr int kInfinity = -1;

  int kbar = 0;
  int ktilde = 0;
  double theta0 = 0.0;
  /// theta0 * sqrt(log N): the level width in height units.
  double width = 0.0;
  int N = 0;
  int d = 0;
  /// Level per site index (kInfinity above the top level).
  std::vector<int> level;
  /// Right endpoint of the site's level interval (+inf on the infinity set).
  Eigen::VectorXd sigma_tilde;
  std::map<int, std::vector<Index>> level_sets;
  std::vector<Index> infinity_set;

  Index count(int k) const;
};

/// theta0 = sqrt(4Q)(1 + 1/(2 kbar)) / kbar.
double level_width(int kbar, double Q);
/// floor(sqrt(2(d+2)Q) / theta0).
int top_level(int kbar, double Q, int d);

LevelDecomposition discretize_wall(const WallField& wall, const LatticeDomain& domain, int kbar,
                                   double Q);

/// f_N(k) = N^{d - (k-1)^2 theta0^2 / (2Q)} for 2 <= k <= kbar and
/// N^{d - kbar^2 theta0^2 / (2Q)} for k = ktilde.
double predicted_level_count(int k, int N, int d, double theta0, double Q, int kbar, int ktilde);

}  // namespace hwall
