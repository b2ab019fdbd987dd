#include "hwall/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace hwall {

double bennett_bound(Index n, double var1, double t) {
  require(n >= 1, "bennett_bound: n must be >= 1");
  require(var1 > 0 && var1 <= 1, "bennett_bound: var1 must lie in (0, 1]");
  require(t >= 0, "bennett_bound: t must be >= 0");
  const double value = 2.0 * std::exp(-t * t / (2.0 * n * var1 + 2.0 * t / 3.0));
  return std::min(value, 2.0);
}

double shift_entropy(const BoxGeometry& box, const Eigen::VectorXd& psi) {
  require(psi.size() == box.size(), "shift_entropy: psi must span the box");
  const int d = box.dim();
  // Every edge with at least one endpoint in the box, once per direction of
  // travel: for x in the box, the +e_i edge always; the -e_i edge only when
  // its far end leaves the box.
  double sum = 0.0;
  for (Index f = 0; f < box.size(); ++f) {
    const Site x = box.site(f);
    for (int axis = 0; axis < d; ++axis) {
      Site y = x;
      y[axis] += 1;
      const double up = box.contains(y) ? psi[box.flat(y)] : 0.0;
      sum += (psi[f] - up) * (psi[f] - up);
      if (x[axis] == box.lower()[axis]) sum += psi[f] * psi[f];
    }
  }
  // ordered pairs count each edge twice
  return 2.0 * sum / (4.0 * d);
}

double entropy_lower_bound(double H, double p_mu_of_E) {
  require(H >= 0, "entropy_lower_bound: H must be >= 0");
  require(p_mu_of_E > 0 && p_mu_of_E <= 1, "entropy_lower_bound: probability must lie in (0, 1]");
  return -(H + std::exp(-1.0)) / p_mu_of_E;
}

double jensen_conditional_bound(double log_mgf_at_t, double log_p_E, double t) {
  require(t > 0, "jensen_conditional_bound: t must be > 0");
  require(std::isfinite(log_mgf_at_t) && std::isfinite(log_p_E),
          "jensen_conditional_bound: inputs must be finite");
  return (log_mgf_at_t - log_p_E) / t;
}

RegimeSpec RegimeSpec::critical(double G, double Q, double cap) {
  RegimeSpec r;
  r.kind = Kind::critical;
  r.G = G;
  r.Q = Q;
  r.cap = cap;
  r.validate();
  return r;
}

RegimeSpec RegimeSpec::sub_gaussian(double G, double cap) {
  RegimeSpec r;
  r.kind = Kind::sub_gaussian;
  r.G = G;
  r.cap = cap;
  r.validate();
  return r;
}

RegimeSpec RegimeSpec::super_gaussian(double Q, double beta, double cap) {
  RegimeSpec r;
  r.kind = Kind::super_gaussian;
  r.Q = Q;
  r.beta = beta;
  r.cap = cap;
  r.validate();
  return r;
}

void RegimeSpec::validate() const {
  require(cap >= 0, "regime.cap: must be >= 0");
  switch (kind) {
    case Kind::critical:
      require(G > 0, "regime.G: must be > 0");
      require(Q >= 0, "regime.Q: must be >= 0");
      break;
    case Kind::sub_gaussian:
      require(G > 0, "regime.G: must be > 0");
      break;
    case Kind::super_gaussian:
      require(Q > 0, "regime.Q: must be > 0");
      require(beta > 0 && beta <= 1, "regime.beta: must lie in (0, 1]");
      break;
  }
}

std::string regime_name(RegimeSpec::Kind kind) {
  switch (kind) {
    case RegimeSpec::Kind::critical:
      return "critical";
    case RegimeSpec::Kind::sub_gaussian:
      return "sub_gaussian";
    case RegimeSpec::Kind::super_gaussian:
      return "super_gaussian";
  }
  return "?";
}

RatePrediction predict_rate(const RegimeSpec& regime) {
  regime.validate();
  switch (regime.kind) {
    case RegimeSpec::Kind::critical:
      return {2.0 * (regime.G + regime.Q) * regime.cap, 1.0};
    case RegimeSpec::Kind::sub_gaussian:
      return {2.0 * regime.G * regime.cap, 1.0};
    case RegimeSpec::Kind::super_gaussian:
      return {std::pow(4.0 * regime.Q, 1.0 / regime.beta) * regime.cap / 2.0, 1.0 / regime.beta};
  }
  return {};
}

double predict_height(const RegimeSpec& regime, double N) {
  regime.validate();
  require(N >= 1, "predict_height: N must be >= 1");
  const double log_n = std::log(N);
  switch (regime.kind) {
    case RegimeSpec::Kind::critical:
      return std::sqrt(4.0 * (regime.G + regime.Q) * log_n);
    case RegimeSpec::Kind::sub_gaussian:
      return std::sqrt(4.0 * regime.G * log_n);
    case RegimeSpec::Kind::super_gaussian:
      return std::pow(4.0 * regime.Q * log_n, 1.0 / (2.0 * regime.beta));
  }
  return 0.0;
}

double flat_wall_height(double G, double N) { return std::sqrt(4.0 * G * std::log(N)); }

double naive_translate_height(double G, int d, double N) {
  return std::sqrt(2.0 * d * G * std::log(N));
}

double shifted_event_rate(double G, double Q, double b, double cap) {
  const double s = 2.0 * std::sqrt(G + Q) + b;
  return s * s * cap / 2.0;
}

}  // namespace hwall
