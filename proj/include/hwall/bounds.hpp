#pragma once

#include <string>

#include "hwall/common.hpp"
#include "hwall/lattice.hpp"

namespace hwall {

/// 2 exp(-t^2 / (2 n var1 + 2t/3)), capped at 2.
double bennett_bound(Index n, double var1, double t);

/// (1/4d) sum over ordered nearest-neighbor pairs of (psi_x - psi_y)^2, with
/// psi given on the box (flat order) and zero outside it.
double shift_entropy(const BoxGeometry& box, const Eigen::VectorXd& psi);

/// Lower bound -(H + 1/e) / P_mu(E) on log(P_nu(E) / P_mu(E)).
double entropy_lower_bound(double H, double p_mu_of_E);

/// (log E e^{tY} - log P(E)) / t, an upper bound on E[Y | E].
double jensen_conditional_bound(double log_mgf_at_t, double log_p_E, double t);

struct RegimeSpec {
  enum class Kind { critical, sub_gaussian, super_gaussian };

  Kind kind = Kind::critical;
  double G = 0.0;
  double Q = 0.0;
  double beta = 0.5;
  double cap = 0.0;

  static RegimeSpec critical(double G, double Q, double cap = 0.0);
  static RegimeSpec sub_gaussian(double G, double cap = 0.0);
  static RegimeSpec super_gaussian(double Q, double beta, double cap = 0.0);

  void validate() const;
};

std::string regime_name(RegimeSpec::Kind kind);

struct RatePrediction {
  /// c in log P ~ -c N^{d-2} (log N)^gamma.
  double constant = 0.0;
  double gamma = 1.0;
};

RatePrediction predict_rate(const RegimeSpec& regime);

/// Regime target height: sqrt(4(G+Q) log N), sqrt(4G log N) or
/// (4Q log N)^{1/(2 beta)}.
double predict_height(const RegimeSpec& regime, double N);

/// Flat-wall reference sqrt(4G log N).
double flat_wall_height(double G, double N);

/// Naive translate level sqrt(2dG log N). Diagnostic only: it overshoots the
/// optimal height.
double naive_translate_height(double G, int d, double N);

/// (2 sqrt(G+Q) + b)^2 Cap / 2. Formula only.
double shifted_event_rate(double G, double Q, double b, double cap);

}  // namespace hwall
