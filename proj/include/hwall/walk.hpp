#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hwall/common.hpp"
#include "hwall/lattice.hpp"

namespace hwall {

/// Absorbing shell around the origin. Sphere: interior {|x| < n}, shell the
/// outer vertex boundary {|y| >= n with a neighbor of norm < n}. Box: interior
/// {|x|_inf < L/2}, shell {|y|_inf = L/2}.
struct ShellGeometry {
  enum class Kind { sphere, box };

  Kind kind = Kind::sphere;
  int d = 3;
  int n = 0;  // sphere radius, or L for the box

  static ShellGeometry sphere(int d, int n);
  static ShellGeometry box(int d, int L);

  bool inside(const Site& x) const;
  /// Shell sites in lexicographic order.
  std::vector<Site> shell() const;
  /// Radius used to normalize: n for the sphere, L/2 for the box.
  double radius() const;
};

struct HittingMethod {
  enum class Kind { exact, monte_carlo };

  Kind kind = Kind::exact;
  Index walkers = 0;
  std::uint64_t seed = 0;
  Index max_steps = 10'000'000;

  static HittingMethod exact() { return {}; }
  static HittingMethod monte_carlo(Index walkers, std::uint64_t seed);
};

/// Law of the first shell site hit from `start`.
struct HittingTable {
  ShellGeometry geometry;
  HittingMethod method;
  Site start;
  std::vector<Site> shell;
  Eigen::VectorXd prob;
  /// Standard errors (zero for the exact method).
  Eigen::VectorXd se;
  /// Walkers stopped by the step cap (excluded from prob).
  Index censored = 0;
  /// Relative residual of the linear solve (exact method).
  double residual = 0.0;

  /// Probability of shell site y (0 for sites off the shell).
  double operator()(const Site& y) const;
};

/// The exact method solves (I - P) g = 1_x on the interior and sets
/// H(x, y) = sum over interior z ~ y of g(z) / 2d.
HittingTable hitting_distribution(const Site& x, const ShellGeometry& geometry,
                                  const HittingMethod& method = HittingMethod::exact());

/// max_y |H(x,y) - H(x',y)| * n^{d-1}, exact method.
double lipschitz_defect(const Site& x, const Site& x_prime, const ShellGeometry& geometry);

struct EscapeEstimate {
  /// Fraction of walkers leaving the kill ball before touching the trap.
  double raw = 0.0;
  double raw_se = 0.0;
  /// raw times (1 - return_bound).
  double corrected = 0.0;
  double corrected_se = 0.0;
  /// Transience estimate of a return to the trap after leaving the kill ball:
  /// R_d R^{2-d} |T| / G.
  double return_bound = 0.0;
  Index walkers = 0;
  Index censored = 0;
};

/// Monte Carlo escape probability from x avoiding the trap set. The kill
/// ball is {|y| < kill_radius} around the origin.
EscapeEstimate escape_probability(const Site& x, std::span<const Site> trap, double kill_radius,
                                  Index walkers, std::uint64_t seed,
                                  Index max_steps = 10'000'000);

}  // namespace hwall
