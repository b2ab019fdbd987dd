#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hwall/common.hpp"
#include "hwall/lattice.hpp"

namespace hwall {

struct CapacityEstimate {
  enum class Method { primal, dual, discrete };

  ShapeSpec shape;
  Method method = Method::dual;
  double value = 0.0;
  /// Grid spacing h (primal), cell size (dual) or lattice scale N (discrete).
  double mesh = 0.0;
  /// (mesh, value) in refinement order.
  std::vector<std::pair<double, double>> refinement_history;
  /// True when successive refinement gaps shrink.
  bool converged = true;
  std::vector<std::string> notes;

  // primal
  double box_radius = 0.0;
  /// Coefficient a in 1/Cap_R = 1/Cap - a/R (0 when no extrapolation ran).
  double box_coefficient = 0.0;
  int cg_iterations = 0;
  /// Finest-mesh value before the mesh extrapolation.
  double unextrapolated = 0.0;

  // discrete
  double se = 0.0;
  double raw_sum = 0.0;
  double raw_sum_se = 0.0;
  double kill_radius = 0.0;
  /// Fraction removed for returns from beyond the kill radius.
  double return_correction = 0.0;
  double calibration = 1.0;
  Index walkers = 0;
  Index boundary_sites = 0;
};

std::string method_name(CapacityEstimate::Method method);

/// Calibration of the lattice escape sum against the continuum capacity,
/// fixed once from the unit ball (d = 3, N = 32, 10^7 walkers).
inline constexpr double kDiscreteCalibration = 1.0112;

/// Discrete Dirichlet energy (1/2d) h^{d-2} sum over edges (f_x - f_y)^2 of
/// the harmonic f with f = 1 on grid nodes inside the shape and f = 0 on the
/// faces of the box of half-width box_radius about the shape's center.
CapacityEstimate capacity_primal(const ShapeSpec& shape, double box_radius, double h);

/// Primal solves over the meshes (coarse to fine) at box_radius, with the
/// outer box effect removed by a second solve at 2 box_radius on the
/// coarsest mesh (1/Cap = 1/Cap_R + a/R), then extrapolated linearly in h
/// from the two finest meshes.
CapacityEstimate capacity_primal_study(const ShapeSpec& shape, double box_radius,
                                       const std::vector<double>& meshes);

/// E(k) = int_{[-1,1]^d} prod (1 - |u_i|) |u + k|^{2-d} du: interaction of
/// two unit cells at integer offset k.
double cell_interaction(const std::vector<int>& k);

/// sup (int f)^2 / (R_d int int f f' |r - r'|^{2-d}) over cell-wise constant f
/// on cubes of side `mesh` whose centers lie in the shape.
CapacityEstimate capacity_dual(const ShapeSpec& shape, double mesh, double R_d);

/// Dual estimates over the meshes (coarse to fine).
CapacityEstimate capacity_dual_study(const ShapeSpec& shape, const std::vector<double>& meshes,
                                     double R_d);

/// Calibrated N^{2-d} sum over x in D_N of the probability that the walk from
/// x never returns to D_N. Walkers start from the outer layer of D_N
/// (systematic allocation); walks are stopped at kill_factor times the
/// shape's circumradius times N, and the return from beyond is removed
/// through cap = raw / (1 + R_d R^{2-d} raw).
CapacityEstimate capacity_discrete(const ShapeSpec& shape, int N, int d, Index walkers,
                                   std::uint64_t seed, double calibration = kDiscreteCalibration,
                                   double kill_factor = 4.0);

/// D_N sites with a neighbor outside D_N.
std::vector<Site> outer_layer(const LatticeDomain& domain);

}  // namespace hwall
