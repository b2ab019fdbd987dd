#include "hwall/observables.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace hwall {

Interval Interval::half_open(double a, double b) {
  require(a < b, "interval: a must be < b");
  return {Kind::bounded, a, b};
}

Interval Interval::at_most(double b) { return {Kind::below, 0.0, b}; }

Interval Interval::greater_than(double a) { return {Kind::above, a, 0.0}; }

bool Interval::contains(double v) const {
  switch (kind) {
    case Kind::bounded:
      return v > a && v <= b;
    case Kind::below:
      return v <= b;
    case Kind::above:
      return v > a;
  }
  return false;
}

std::string interval_label(const Interval& I) {
  char buf[96];
  switch (I.kind) {
    case Interval::Kind::bounded:
      std::snprintf(buf, sizeof buf, "(%g,%g]", I.a, I.b);
      break;
    case Interval::Kind::below:
      std::snprintf(buf, sizeof buf, "(-inf,%g]", I.b);
      break;
    case Interval::Kind::above:
      std::snprintf(buf, sizeof buf, "(%g,inf)", I.a);
      break;
  }
  return buf;
}

double empirical_measure(const Eigen::VectorXd& values, std::span<const Index> A,
                         const Interval& I) {
  require(!A.empty(), "empirical_measure: A must be nonempty");
  Index hits = 0;
  for (Index i : A) {
    require(i >= 0 && i < values.size(), "empirical_measure: index outside the domain");
    if (I.contains(values[i])) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(A.size());
}

std::vector<Index> block_sites(const LatticeDomain& domain, const ShapeSpec& lambda) {
  const int N = domain.scale();
  const int d = domain.dim();
  require(lambda.dimension() == d, "block: shape dimension does not match the domain");
  auto [lo, hi] = lambda.bounding_box();
  std::vector<int> ilo(d), ihi(d);
  for (int i = 0; i < d; ++i) {
    ilo[i] = static_cast<int>(std::floor(lo[i] * N)) - 1;
    ihi[i] = static_cast<int>(std::ceil(hi[i] * N)) + 1;
  }
  std::vector<Index> out;
  const BoxGeometry scan(ilo, ihi);
  Eigen::VectorXd r(d);
  for (Index f = 0; f < scan.size(); ++f) {
    const Site x = scan.site(f);
    for (int i = 0; i < d; ++i) r[i] = static_cast<double>(x[i]) / N;
    if (!lambda.contains(r)) continue;
    const auto idx = domain.index_of(x);
    if (!idx) throw InvalidArgument("block: Lambda_N is not contained in D_N");
    out.push_back(*idx);
  }
  if (out.empty()) throw InvalidArgument("block: Lambda_N is empty");
  std::sort(out.begin(), out.end());
  return out;
}

double block_mean(const Eigen::VectorXd& site_values, const LatticeDomain& domain,
                  const ShapeSpec& lambda) {
  require(site_values.size() == domain.size(), "block_mean: values do not match the domain");
  const std::vector<Index> sites = block_sites(domain, lambda);
  double s = 0.0;
  for (Index i : sites) s += site_values[i];
  return s / static_cast<double>(sites.size());
}

double block_mean(const Field& field, const LatticeDomain& domain, const ShapeSpec& lambda) {
  return block_mean(site_values(field, domain), domain, lambda);
}

double eps_count(const Eigen::VectorXd& site_values, int N, double eps, const RegimeSpec& regime) {
  require(N >= 3, "eps_count: N must be >= 3");
  require(eps > 0, "eps_count: eps must be > 0");
  require(site_values.size() > 0, "eps_count: empty field");
  const double target = predict_height(regime, N);
  Index hits = 0;
  for (Index i = 0; i < site_values.size(); ++i) {
    if (std::abs(site_values[i] / target - 1.0) >= eps) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(site_values.size());
}

double harmonic_average(const Field& field, const Site& y, const HittingTable& hitting) {
  require(std::ssize(y) == field.box.dim(), "harmonic_average: site dimension mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < hitting.shell.size(); ++k) {
    Site z = hitting.shell[k];
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += y[i];
    if (!field.box.contains(z)) {
      throw InvalidArgument("harmonic_average: shell leaves the field's box");
    }
    s += hitting.prob[static_cast<Index>(k)] * field.values[field.box.flat(z)];
  }
  return s;
}

Summary iid_summary(std::span<const double> series) {
  Summary out;
  out.count = static_cast<Index>(series.size());
  if (series.empty()) return out;
  for (double v : series) out.mean += v;
  out.mean /= static_cast<double>(series.size());
  if (series.size() < 2) return out;
  double ss = 0.0;
  for (double v : series) ss += (v - out.mean) * (v - out.mean);
  out.se = std::sqrt(ss / static_cast<double>(series.size() - 1) /
                     static_cast<double>(series.size()));
  return out;
}

Summary batch_summary(std::span<const double> series, int batches) {
  const auto n = static_cast<Index>(series.size());
  const Index len = batches > 0 ? n / batches : 0;
  if (batches < 2 || len < 2) return iid_summary(series);
  std::vector<double> means;
  for (int b = 0; b < batches; ++b) {
    double m = 0.0;
    for (Index i = 0; i < len; ++i) m += series[static_cast<std::size_t>(b * len + i)];
    means.push_back(m / static_cast<double>(len));
  }
  Summary out = iid_summary(series);
  out.se = iid_summary(means).se;
  return out;
}

void Histogram::add(double v) {
  if (counts.empty() || !(hi > lo)) return;
  const double t = (v - lo) / (hi - lo);
  const auto bins = static_cast<Index>(counts.size());
  const Index k = std::clamp<Index>(static_cast<Index>(std::floor(t * bins)), 0, bins - 1);
  ++counts[static_cast<std::size_t>(k)];
}

ObservableReport::ObservableReport(std::vector<Interval> intervals, std::vector<double> eps,
                                   RegimeSpec regime, int N, Histogram histogram)
    : intervals_(std::move(intervals)),
      eps_(std::move(eps)),
      regime_(regime),
      N_(N),
      histogram_(std::move(histogram)) {}

std::vector<double>& ObservableReport::slot(const std::string& name) {
  for (auto& [key, values] : series_) {
    if (key == name) return values;
  }
  series_.emplace_back(name, std::vector<double>{});
  return series_.back().second;
}

void ObservableReport::add(const Eigen::VectorXd& site_values) {
  require(site_values.size() > 0, "observables: empty sample");
  std::vector<Index> all(static_cast<std::size_t>(site_values.size()));
  for (Index i = 0; i < site_values.size(); ++i) all[static_cast<std::size_t>(i)] = i;
  slot("block_mean").push_back(site_values.mean());
  slot("min").push_back(site_values.minCoeff());
  slot("max").push_back(site_values.maxCoeff());
  for (const Interval& I : intervals_) {
    slot("L" + interval_label(I)).push_back(empirical_measure(site_values, all, I));
  }
  for (double e : eps_) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "eps_fraction(%g)", e);
    slot(buf).push_back(eps_count(site_values, N_, e, regime_));
  }
  for (Index i = 0; i < site_values.size(); ++i) histogram_.add(site_values[i]);
  ++samples_;
}

std::vector<std::pair<std::string, Summary>> ObservableReport::aggregate(int batches) const {
  std::vector<std::pair<std::string, Summary>> out;
  for (const auto& [name, values] : series_) out.emplace_back(name, batch_summary(values, batches));
  return out;
}

}  // namespace hwall
