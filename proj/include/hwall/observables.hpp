#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "hwall/bounds.hpp"
#include "hwall/common.hpp"
#include "hwall/lattice.hpp"
#include "hwall/sampler.hpp"
#include "hwall/walk.hpp"

namespace hwall {

/// (a, b], (-inf, b] or (a, inf).
struct Interval {
  enum class Kind { bounded, below, above };

  Kind kind = Kind::bounded;
  double a = 0.0, b = 0.0;

  static Interval half_open(double a, double b);
  static Interval at_most(double b);
  static Interval greater_than(double a);

  bool contains(double v) const;
};

/// L_A(I): fraction of the values indexed by A that fall in I.
double empirical_measure(const Eigen::VectorXd& values, std::span<const Index> A,
                         const Interval& I);

/// Sites of Lambda_N = N Lambda ∩ Z^d, as site indices of D_N. Throws when
/// Lambda_N is empty or leaves D_N.
std::vector<Index> block_sites(const LatticeDomain& domain, const ShapeSpec& lambda);

/// M_N^Lambda: mean of the site values over Lambda_N.
double block_mean(const Eigen::VectorXd& site_values, const LatticeDomain& domain,
                  const ShapeSpec& lambda);
double block_mean(const Field& field, const LatticeDomain& domain, const ShapeSpec& lambda);

/// Fraction of sites with |sigma_x / target - 1| >= eps, target the regime
/// height at scale N.
double eps_count(const Eigen::VectorXd& site_values, int N, double eps, const RegimeSpec& regime);

/// Hitting-measure average of the field over the shell centered at y.
double harmonic_average(const Field& field, const Site& y, const HittingTable& hitting);

struct Summary {
  double mean = 0.0;
  double se = 0.0;
  Index count = 0;
};

/// Mean with a batch-means standard error (plain i.i.d. error when fewer
/// than two full batches are available).
Summary batch_summary(std::span<const double> series, int batches = 20);

/// Mean and i.i.d. standard error.
Summary iid_summary(std::span<const double> series);

struct Histogram {
  double lo = 0.0, hi = 0.0;
  std::vector<Index> counts;

  void add(double v);
};

/// Per-sample observable records with aggregation.
class ObservableReport {
 public:
  ObservableReport(std::vector<Interval> intervals, std::vector<double> eps, RegimeSpec regime,
                   int N, Histogram histogram);

  /// Records L_{D_N}(I), M_N^D, N_eps fractions, min and max for one sample.
  void add(const Eigen::VectorXd& site_values);

  Index samples() const { return samples_; }
  /// Observable name to per-sample series, names in insertion order.
  const std::vector<std::pair<std::string, std::vector<double>>>& series() const {
    return series_;
  }
  std::vector<std::pair<std::string, Summary>> aggregate(int batches = 20) const;
  const Histogram& histogram() const { return histogram_; }

 private:
  std::vector<double>& slot(const std::string& name);

  std::vector<Interval> intervals_;
  std::vector<double> eps_;
  RegimeSpec regime_;
  int N_;
  Histogram histogram_;
  Index samples_ = 0;
  std::vector<std::pair<std::string, std::vector<double>>> series_;
};

std::string interval_label(const Interval& I);

}  // namespace hwall
