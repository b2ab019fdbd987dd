#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hwall/common.hpp"
#include "hwall/green.hpp"
#include "hwall/lattice.hpp"
#include "hwall/wall.hpp"

namespace hwall {

/// Values held on the box faces: zero, or a + v.x.
struct BoundaryCondition {
  enum class Kind { zero, affine };

  Kind kind = Kind::zero;
  double a = 0.0;
  Eigen::VectorXd v;

  static BoundaryCondition zero() { return {}; }
  static BoundaryCondition affine(double a, Eigen::VectorXd v);

  double value(const Site& x) const;
  void validate(int d) const;
};

/// A configuration on the whole embedding box, flat order. Face entries carry
/// the boundary condition.
struct Field {
  BoxGeometry box;
  Eigen::VectorXd values;

  double operator[](const Site& x) const { return values[box.flat(x)]; }
};

/// Every box entry set to the boundary value, which is also the harmonic
/// extension since affine functions are discrete harmonic.
Field boundary_field(const BoxGeometry& box, const BoundaryCondition& bc);

/// Field values in site-index order of D_N.
Eigen::VectorXd site_values(const Field& field, const LatticeDomain& domain);

/// Pointwise sum.
Field shift_field(const Field& field, const Field& psi);

/// Gaussian sampler through the Cholesky factor of the finite-volume Green
/// function on the box interior.
class ExactSampler {
 public:
  ExactSampler(const LatticeDomain& domain, const BoundaryCondition& bc,
               Index guard = kDenseSiteGuard);

  const BoxGeometry& box() const { return box_; }
  /// Box flat indices of the free sites, ascending.
  const std::vector<Index>& interior() const { return interior_; }
  const Eigen::VectorXd& mean() const { return mean_; }
  /// Lower Cholesky factor of the covariance on the interior.
  const Eigen::MatrixXd& factor() const { return factor_; }
  const Eigen::MatrixXd& covariance() const { return covariance_; }
  const Field& boundary() const { return boundary_; }

  /// Standard normals driving sample `index`.
  Eigen::VectorXd noise(std::uint64_t seed, Index index) const;
  /// Interior values of samples first..first+count-1, one column each.
  Eigen::MatrixXd interior_samples(std::uint64_t seed, Index first, Index count) const;
  Field sample(std::uint64_t seed, Index index) const;

 private:
  BoxGeometry box_;
  std::vector<Index> interior_;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd covariance_;
  Eigen::MatrixXd factor_;
  Field boundary_;
};

Field exact_sample(const LatticeDomain& domain, const BoundaryCondition& bc, std::uint64_t seed);

struct Schedule {
  Index burn_in = 500;
  Index thinning = 1;
  Index samples = 100;

  void validate() const;
};

/// Heat-bath chain. The lower bounds are wall heights on D_N and -inf
/// elsewhere.
struct SamplerState {
  Field field;
  Eigen::VectorXd lower;
  bool wall_active = false;
  Index sweep_count = 0;
  std::uint64_t seed = 0;
  Schedule schedule;
  /// Interior flat indices of even and odd parity.
  std::shared_ptr<const std::array<std::vector<Index>, 2>> colors;
};

/// A state with the field at the boundary value everywhere and no wall.
SamplerState make_state(const LatticeDomain& domain, const BoundaryCondition& bc,
                        std::uint64_t seed);
/// Activates the wall constraint on D_N.
void set_wall(SamplerState& state, const LatticeDomain& domain, const WallField& wall);

/// One checkerboard sweep: even sites, then odd. Throws NumericalError naming
/// the site when a truncated draw fails.
void heat_bath_sweep(SamplerState& state);

/// True when every active constraint holds.
bool satisfies_wall(const SamplerState& state);

struct ConditionedRun {
  Index samples = 0;
  Index sweeps = 0;
  /// Integrated autocorrelation time of the D_N block mean, in sweeps.
  double tau = 0.0;
  bool burn_in_ok = true;
  std::vector<std::string> warnings;
  /// D_N block mean of every emitted sample.
  std::vector<double> block_means;
};

using SampleSink = std::function<void(Index sample_index, const SamplerState& state)>;

/// Heat-bath sampling of the field conditioned on staying above the wall on
/// D_N. Starts from max(wall, bc) + h0 on D_N and bc + h0 elsewhere.
ConditionedRun sample_conditioned(const LatticeDomain& domain, const WallField& wall,
                                  const BoundaryCondition& bc, const Schedule& schedule,
                                  std::uint64_t seed, double h0, const SampleSink& sink = {});

/// tau from batch means of a series (20 batches), in units of the series step.
double integrated_autocorrelation(const std::vector<double>& series, int batches = 20);

}  // namespace hwall
