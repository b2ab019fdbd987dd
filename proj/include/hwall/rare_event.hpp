#pragma once

#include <cstdint>
#include <string>

#include "hwall/common.hpp"
#include "hwall/lattice.hpp"
#include "hwall/sampler.hpp"
#include "hwall/wall.hpp"

namespace hwall {

struct ProbEstimate {
  enum class Method { direct, importance };

  Method method = Method::direct;
  double prob = 0.0;
  double se = 0.0;
  /// log prob and the delta-method error se / prob.
  double log_prob = 0.0;
  double log_se = 0.0;
  double ess = 0.0;
  Index samples = 0;
  Index hits = 0;
  /// Zero hits (log_prob is then the one-sided bound log(3/n)) or ESS below
  /// 1% of the samples.
  bool flagged = false;
  bool one_sided = false;
  std::string note;

  // importance only
  /// Fraction of tilted draws inside the event.
  double tilted_hit_fraction = 0.0;
  /// shift_entropy of the profile.
  double shift_entropy = 0.0;
  /// Mean and standard error of the weight over all tilted draws (target 1).
  double weight_mean = 0.0;
  double weight_mean_se = 0.0;
  /// SHA-256 of the profile bytes.
  std::string psi_hash;
};

std::string method_name(ProbEstimate::Method method);

/// Fraction of exact draws with sigma >= wall on D_N.
ProbEstimate direct_mc_prob(const LatticeDomain& domain, const WallField& wall,
                            const BoundaryCondition& bc, Index samples, std::uint64_t seed);

/// E over sigma + psi of w 1{sigma + psi in the event}, with the exact
/// Gaussian likelihood ratio w = exp(-psi' A (sigma - m) - psi' A psi / 2)
/// evaluated at the shifted point, A = I - P on the box interior.
ProbEstimate importance_log_prob(const LatticeDomain& domain, const WallField& wall,
                                 const BoundaryCondition& bc, const Field& psi, Index samples,
                                 std::uint64_t seed);

/// psi = height on D_N, a cosine ramp to zero over `ramp` lattice steps
/// (graph distance from D_N through the box interior), zero beyond and on the
/// faces.
Field default_shift_profile(const LatticeDomain& domain, double height, int ramp);

}  // namespace hwall
