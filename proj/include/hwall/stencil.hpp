#pragma once

#include <cstdint>
#include <vector>

#include "hwall/common.hpp"
#include "hwall/lattice.hpp"

namespace hwall {

/// Dot product with a fixed chunked summation order, so the result does not
/// depend on the thread count.
double stable_dot(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

struct CgResult {
  Eigen::VectorXd x;
  int iterations = 0;
  /// Final ||b - A x|| / ||b||.
  double relative_residual = 0.0;
  bool converged = false;
};

/// y = (I - P) x on the free sites, where P averages the 2d neighbors and
/// entries off the free set count as zero.
void apply_killed_walk(const BoxGeometry& box, const std::vector<Index>& free_sites,
                       const std::vector<std::uint8_t>& is_free, const Eigen::VectorXd& x,
                       Eigen::VectorXd& y);

/// Conjugate gradients for (I - P_A) u = b with A = {is_free != 0}; vectors
/// span the whole box and vanish off A. Free sites must avoid the box faces.
CgResult solve_killed_walk(const BoxGeometry& box, const std::vector<std::uint8_t>& is_free,
                           const Eigen::VectorXd& rhs, double rel_tol, int max_iterations);

}  // namespace hwall
