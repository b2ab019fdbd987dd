#pragma once

#include <vector>

#include "hwall/common.hpp"
#include "hwall/lattice.hpp"

namespace hwall {

/// Largest region handled by the dense Green-function solves.
inline constexpr Index kDenseSiteGuard = 6000;

/// Dense generator I - P_A of the simple random walk killed on leaving the
/// region A (given as box flat indices). Rows of exiting moves lose mass.
template <typename Scalar = double>
Matrix<Scalar> killed_walk_generator(const BoxGeometry& box, const std::vector<Index>& region);

/// Finite-volume Green function G_A(x, y) of the killed walk.
struct GreenTable {
  BoxGeometry box;
  std::vector<Index> region;  // box flat index of row i
  Eigen::MatrixXd values;
  /// Lower Cholesky factor of `values`; empty unless requested.
  Eigen::MatrixXd factor;

  Index size() const { return static_cast<Index>(region.size()); }
  double operator()(Index i, Index j) const { return values(i, j); }
};

/// Green function of the walk killed on leaving `region`.
GreenTable green_region(const BoxGeometry& box, std::vector<Index> region, bool with_factor = false,
                        Index guard = kDenseSiteGuard);

/// Green function of the walk killed on leaving D_N, rows in site-index order.
GreenTable green_finite(const LatticeDomain& domain, bool with_factor = false,
                        Index guard = kDenseSiteGuard);

/// Green function on the free region of the field: the strict interior of
/// the embedding box.
GreenTable green_field_region(const LatticeDomain& domain, bool with_factor = false,
                              Index guard = kDenseSiteGuard);

/// G(0,0) = sum_n p_n(0,0) from the exact return probabilities up to 2M
/// steps plus the local-CLT tail, with a certified-by-calibration bound.
struct DiagonalSeries {
  int d = 3;
  double value = 0.0;
  /// Bound on |value - G(0,0)|.
  double error_bound = 0.0;
  Index terms = 0;  // M: return probabilities p_{2n}, n <= M, summed exactly
  double partial_sum = 0.0;
  double tail_estimate = 0.0;
  /// C_d: 2 x max of n^{d/2} p_{2n} over the calibration window.
  double lclt_constant = 0.0;
  /// Crude certified tail bound C_d sum_{n>M} n^{-d/2} (no asymptotic subtraction).
  double lclt_tail_bound = 0.0;
  /// K_d: 2 x max of n^{d/2+1} |p_{2n} - A_d n^{-d/2}| over the window.
  double remainder_constant = 0.0;
};

/// Truncation level M is explicit (M >= 10^4 so the calibration window
/// [10^3, 10^4] is available).
DiagonalSeries green_infinite_diag_at(int d, Index terms);

/// Smallest M (doubling from 10^4, capped at 8*10^4) whose bound is <= tol.
/// Throws BudgetError reporting the achieved bound when tol is unreachable.
DiagonalSeries green_infinite_diag(int d, double tol);

/// G(0,0) to within 1e-7, memoized per dimension.
double green_diag_value(int d);

/// Exact return probabilities p_{2n}(0,0) for n = 0..M.
std::vector<double> return_probabilities(int d, Index terms);

/// G_L: variance of the field at y given its values on the l-infinity sphere
/// of radius L/2 around y, i.e. the killed-walk Green function at the center
/// of the open box of radius L/2. L even, >= 2.
double conditional_variance_box(int L, int d, Index guard = kDenseSiteGuard);

/// Infinite-volume G(0, x) through the continuous-time representation
/// G(0,x) = d * int_0^inf prod_i e^{-s} I_{x_i}(s) ds, evaluated by composite
/// Gauss-Legendre in log s with an analytic large-s tail. The quadrature
/// table is built once for coordinates up to `max_coordinate`.
class InfiniteGreen {
 public:
  InfiniteGreen(int d, int max_coordinate);
  int dim() const { return d_; }
  int max_coordinate() const { return max_coord_; }
  double operator()(const Site& x) const;

 private:
  int d_;
  int max_coord_;
  std::vector<double> weights_;  // quadrature weight times ds/du
  Matrix<double> scaled_bessel_;  // node x order: e^{-s} I_n(s)
  double tail_cut_;
};

/// e^{-s} I_n(s) for n = 0..max_order.
std::vector<double> scaled_bessel_i(int max_order, double s);

/// lim |x|^{d-2} G(0,x) for the simple random walk,
/// (d/2) Gamma(d/2 - 1) pi^{-d/2}.
double rd_asymptotic(int d);

struct TailConstants {
  int d = 3;
  double G_diag = 0.0;
  double G_diag_error = 0.0;
  double R_d = 0.0;
  double r_min = 0.0, r_max = 0.0;
  Index points = 0;
  /// max / min of |x|^{d-2} G(0,x) over the window.
  double plateau_ratio = 0.0;
  double residual_rms = 0.0;
};

/// Least-squares constant fit of |x|^{d-2} G(0,x) over lattice points with
/// r_min <= |x| <= r_max (one representative per symmetry orbit, weighted by
/// orbit size).
TailConstants fit_Rd(int d, double r_min, double r_max, double diag_tol = 1e-6);

}  // namespace hwall
