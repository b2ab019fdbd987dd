#include "hwall/rare_event.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>

#include "hwall/bounds.hpp"
#include "hwall/io.hpp"

namespace hwall {

std::string method_name(ProbEstimate::Method method) {
  return method == ProbEstimate::Method::direct ? "direct" : "importance";
}

namespace {

constexpr Index kBatch = 4096;

// Row of each D_N site in the sampler's interior ordering, with its wall.
std::vector<Index> site_rows(const ExactSampler& sampler, const LatticeDomain& domain) {
  std::vector<Index> rows(static_cast<std::size_t>(domain.size()));
  const auto& interior = sampler.interior();
  for (Index i = 0; i < domain.size(); ++i) {
    auto it = std::lower_bound(interior.begin(), interior.end(), domain.flat_of(i));
    require(it != interior.end() && *it == domain.flat_of(i),
            "rare event: D_N site outside the box interior");
    rows[static_cast<std::size_t>(i)] = it - interior.begin();
  }
  return rows;
}

bool in_event(const Eigen::Ref<const Eigen::VectorXd>& x, const std::vector<Index>& rows,
              const WallField& wall) {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (x[rows[i]] < wall.values[static_cast<Index>(i)]) return false;
  }
  return true;
}

}  // namespace

ProbEstimate direct_mc_prob(const LatticeDomain& domain, const WallField& wall,
                            const BoundaryCondition& bc, Index samples, std::uint64_t seed) {
  require(samples >= 1, "direct_mc_prob: samples must be >= 1");
  require(wall.size() == domain.size(), "direct_mc_prob: wall does not match the domain");
  const ExactSampler sampler(domain, bc);
  const std::vector<Index> rows = site_rows(sampler, domain);
  ProbEstimate est;
  est.method = ProbEstimate::Method::direct;
  est.samples = samples;
  for (Index first = 0; first < samples; first += kBatch) {
    const Index count = std::min(kBatch, samples - first);
    const Eigen::MatrixXd x = sampler.interior_samples(seed, first, count);
    for (Index k = 0; k < count; ++k) {
      if (in_event(x.col(k), rows, wall)) ++est.hits;
    }
  }
  const double n = static_cast<double>(samples);
  est.prob = static_cast<double>(est.hits) / n;
  est.se = std::sqrt(est.prob * (1.0 - est.prob) / n);
  est.ess = static_cast<double>(est.hits);
  if (est.hits == 0) {
    est.flagged = true;
    est.one_sided = true;
    est.log_prob = std::log(3.0 / n);
    est.log_se = std::numeric_limits<double>::infinity();
    est.note = "no hits: log_prob is the one-sided 95% bound log(3/n)";
  } else {
    est.log_prob = std::log(est.prob);
    est.log_se = est.se / est.prob;
  }
  return est;
}

ProbEstimate importance_log_prob(const LatticeDomain& domain, const WallField& wall,
                                 const BoundaryCondition& bc, const Field& psi, Index samples,
                                 std::uint64_t seed) {
  require(samples >= 2, "importance_log_prob: samples must be >= 2");
  require(wall.size() == domain.size(), "importance_log_prob: wall does not match the domain");
  require(psi.box == domain.box(), "importance_log_prob: psi must live on the domain's box");
  const BoxGeometry& box = domain.box();
  for (Index f = 0; f < box.size(); ++f) {
    require(box.interior(f) || psi.values[f] == 0.0,
            "importance_log_prob: psi must vanish on the box faces");
  }
  const ExactSampler sampler(domain, bc);
  const std::vector<Index> rows = site_rows(sampler, domain);
  const auto& interior = sampler.interior();
  const auto m = static_cast<Index>(interior.size());

  Eigen::VectorXd shift(m), a_shift(m);
  const auto& offsets = box.neighbor_offsets();
  const double hop = 1.0 / static_cast<double>(offsets.size());
  for (Index i = 0; i < m; ++i) {
    const Index f = interior[static_cast<std::size_t>(i)];
    shift[i] = psi.values[f];
    double s = 0.0;
    for (Index off : offsets) s += psi.values[f + off];
    a_shift[i] = psi.values[f] - hop * s;
  }
  const double quad = shift.dot(a_shift);
  const Eigen::VectorXd u = sampler.factor().triangularView<Eigen::Lower>().transpose() * a_shift;

  ProbEstimate est;
  est.method = ProbEstimate::Method::importance;
  est.samples = samples;
  est.shift_entropy = shift_entropy(box, psi.values);
  est.psi_hash = sha256_hex(std::string_view(reinterpret_cast<const char*>(psi.values.data()),
                                             static_cast<std::size_t>(psi.values.size()) * sizeof(double)));

  std::vector<double> log_w(static_cast<std::size_t>(samples));
  std::vector<std::uint8_t> hit(static_cast<std::size_t>(samples), 0);
  for (Index first = 0; first < samples; first += kBatch) {
    const Index count = std::min(kBatch, samples - first);
    Eigen::MatrixXd z(m, count);
    for (Index k = 0; k < count; ++k) z.col(k) = sampler.noise(seed, first + k);
    Eigen::MatrixXd x = sampler.factor().triangularView<Eigen::Lower>() * z;
    x.colwise() += sampler.mean() + shift;
    const Eigen::VectorXd proj = z.transpose() * u;
    for (Index k = 0; k < count; ++k) {
      log_w[static_cast<std::size_t>(first + k)] = -proj[k] - 0.5 * quad;
      if (in_event(x.col(k), rows, wall)) hit[static_cast<std::size_t>(first + k)] = 1;
    }
  }

  const double n = static_cast<double>(samples);
  // weight normalization over all draws
  {
    const double top = *std::max_element(log_w.begin(), log_w.end());
    double s = 0.0, s2 = 0.0;
    for (double lw : log_w) {
      const double w = std::exp(lw - top);
      s += w;
      s2 += w * w;
    }
    const double mean = s / n;
    const double var = std::max(0.0, (s2 - n * mean * mean) / (n - 1.0));
    est.weight_mean = std::exp(top) * mean;
    est.weight_mean_se = std::exp(top) * std::sqrt(var / n);
  }

  double top = -std::numeric_limits<double>::infinity();
  for (Index k = 0; k < samples; ++k) {
    if (hit[static_cast<std::size_t>(k)]) {
      ++est.hits;
      top = std::max(top, log_w[static_cast<std::size_t>(k)]);
    }
  }
  est.tilted_hit_fraction = static_cast<double>(est.hits) / n;
  if (est.hits == 0) {
    est.flagged = true;
    est.one_sided = true;
    est.log_prob = -std::numeric_limits<double>::infinity();
    est.log_se = std::numeric_limits<double>::infinity();
    est.note = "no tilted draw reached the event";
    return est;
  }
  double s = 0.0, s2 = 0.0;
  for (Index k = 0; k < samples; ++k) {
    if (!hit[static_cast<std::size_t>(k)]) continue;
    const double w = std::exp(log_w[static_cast<std::size_t>(k)] - top);
    s += w;
    s2 += w * w;
  }
  const double mean = s / n;
  const double var = std::max(0.0, (s2 - n * mean * mean) / (n - 1.0));
  est.ess = s * s / s2;
  est.log_prob = top + std::log(mean);
  est.prob = std::exp(est.log_prob);
  est.se = std::exp(top) * std::sqrt(var / n);
  est.log_se = std::sqrt(var / n) / mean;
  if (est.ess < 0.01 * n) {
    est.flagged = true;
    est.note = "effective sample size below 1% of the draws";
  }
  return est;
}

Field default_shift_profile(const LatticeDomain& domain, double height, int ramp) {
  require(ramp >= 0, "shift profile: ramp must be >= 0");
  const BoxGeometry& box = domain.box();
  Field psi{box, Eigen::VectorXd::Zero(box.size())};
  std::vector<int> dist(static_cast<std::size_t>(box.size()), -1);
  std::deque<Index> queue;
  for (Index f : domain.flat_indices()) {
    dist[static_cast<std::size_t>(f)] = 0;
    queue.push_back(f);
  }
  const auto& offsets = box.neighbor_offsets();
  while (!queue.empty()) {
    const Index f = queue.front();
    queue.pop_front();
    if (dist[static_cast<std::size_t>(f)] >= ramp) continue;
    for (Index off : offsets) {
      const Index g = f + off;
      if (!box.interior(g) || dist[static_cast<std::size_t>(g)] >= 0) continue;
      dist[static_cast<std::size_t>(g)] = dist[static_cast<std::size_t>(f)] + 1;
      queue.push_back(g);
    }
  }
  for (Index f = 0; f < box.size(); ++f) {
    const int k = dist[static_cast<std::size_t>(f)];
    if (k < 0 || !box.interior(f)) continue;
    psi.values[f] = height * 0.5 * (1.0 + std::cos(std::numbers::pi * k / (ramp + 1.0)));
  }
  return psi;
}

}  // namespace hwall
