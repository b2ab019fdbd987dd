#include "hwall/green.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <numbers>
#include <map>
#include <mutex>
#include <unordered_map>

namespace hwall {

template <typename Scalar>
Matrix<Scalar> killed_walk_generator(const BoxGeometry& box, const std::vector<Index>& region) {
  const Index n = static_cast<Index>(region.size());
  std::unordered_map<Index, Index> row_of;
  row_of.reserve(region.size());
  for (Index i = 0; i < n; ++i) row_of.emplace(region[i], i);

  const Scalar hop = Scalar(1) / Scalar(2 * box.dim());
  Matrix<Scalar> a = Matrix<Scalar>::Identity(n, n);
  for (Index i = 0; i < n; ++i) {
    const Site x = box.site(region[i]);
    for (int axis = 0; axis < box.dim(); ++axis) {
      for (int sign : {+1, -1}) {
        Site y = x;
        y[axis] += sign;
        if (!box.contains(y)) continue;
        auto it = row_of.find(box.flat(y));
        if (it != row_of.end()) a(i, it->second) = -hop;
      }
    }
  }
  return a;
}

template Matrix<float> killed_walk_generator<float>(const BoxGeometry&, const std::vector<Index>&);
template Matrix<double> killed_walk_generator<double>(const BoxGeometry&,
                                                      const std::vector<Index>&);
template Matrix<long double> killed_walk_generator<long double>(const BoxGeometry&,
                                                                const std::vector<Index>&);

GreenTable green_region(const BoxGeometry& box, std::vector<Index> region, bool with_factor,
                        Index guard) {
  require(!region.empty(), "green: region must be nonempty");
  const Index n = static_cast<Index>(region.size());
  if (n > guard) {
    throw SizeGuardExceeded("green: region of " + std::to_string(n) +
                            " sites exceeds the dense guard of " + std::to_string(guard));
  }
  const Eigen::MatrixXd generator = killed_walk_generator<double>(box, region);
  Eigen::LLT<Eigen::MatrixXd> llt(generator);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("green: killed-walk generator is not positive definite");
  }
  GreenTable table;
  table.box = box;
  table.region = std::move(region);
  table.values = llt.solve(Eigen::MatrixXd::Identity(n, n));
  // exact symmetry
  table.values = (0.5 * (table.values + table.values.transpose())).eval();
  if (with_factor) {
    Eigen::LLT<Eigen::MatrixXd> cov(table.values);
    if (cov.info() != Eigen::Success) throw NumericalError("green: covariance factorization failed");
    table.factor = cov.matrixL();
  }
  return table;
}

GreenTable green_finite(const LatticeDomain& domain, bool with_factor, Index guard) {
  const auto flats = domain.flat_indices();
  return green_region(domain.box(), std::vector<Index>(flats.begin(), flats.end()), with_factor,
                      guard);
}

GreenTable green_field_region(const LatticeDomain& domain, bool with_factor, Index guard) {
  return green_region(domain.box(), domain.box().interior_indices(), with_factor, guard);
}

// ---------------------------------------------------------------------------
// Diagonal series

namespace {

constexpr Index kCalibrationLow = 1000;
constexpr Index kCalibrationHigh = 10000;
constexpr Index kMaxTerms = 80000;

// sum_{n >= m} n^{-s} by Euler-Maclaurin; m >= 1000 keeps it at double precision.
double zeta_tail(double s, double m) {
  const double f = std::pow(m, -s);
  return m * f / (s - 1.0) + 0.5 * f + s * f / (12.0 * m) -
         s * (s + 1.0) * (s + 2.0) * f / (720.0 * m * m * m);
}

}  // namespace

std::vector<double> return_probabilities(int d, Index terms) {
  require(d >= 1, "return_probabilities: d >= 1");
  require(terms >= 0, "return_probabilities: terms >= 0");
  const auto m = static_cast<std::size_t>(terms) + 1;
  // collision[n]: probability that two independent multinomial(n, uniform on
  // k cells) vectors coincide; the k-axis walk returns when every axis has
  // an equal number of forward and backward steps.
  std::vector<double> collision(m, 1.0), next(m);
  for (int k = 2; k <= d; ++k) {
    const double p = 1.0 / k;
    const double q = 1.0 - p;
    for (std::size_t n = 0; n < m; ++n) {
      const auto nn = static_cast<double>(n);
      const auto mode = static_cast<Index>(std::floor((nn + 1.0) * p));
      const double log_mode = std::lgamma(nn + 1.0) - std::lgamma(mode + 1.0) -
                              std::lgamma(nn - mode + 1.0) + mode * std::log(p) +
                              (nn - mode) * std::log(q);
      const double b_mode = std::exp(log_mode);
      const auto reach = static_cast<Index>(12.0 * std::sqrt(nn * p * q) + 4.0);
      double sum = b_mode * b_mode * collision[n - static_cast<std::size_t>(mode)];
      double b = b_mode;
      for (Index j = mode + 1; j <= std::min<Index>(static_cast<Index>(n), mode + reach); ++j) {
        b *= (nn - (j - 1)) / j * (p / q);
        sum += b * b * collision[n - static_cast<std::size_t>(j)];
      }
      b = b_mode;
      for (Index j = mode - 1; j >= std::max<Index>(0, mode - reach); --j) {
        b *= (j + 1.0) / (nn - j) * (q / p);
        sum += b * b * collision[n - static_cast<std::size_t>(j)];
      }
      next[n] = sum;
    }
    std::swap(collision, next);
  }
  // p_{2n}(0,0) = C(2n,n) 4^{-n} * collision_d(n)
  std::vector<double> out(m);
  double central = 1.0;
  for (std::size_t n = 0; n < m; ++n) {
    if (n > 0) central *= (2.0 * n - 1.0) / (2.0 * n);
    out[n] = central * collision[n];
  }
  return out;
}

DiagonalSeries green_infinite_diag_at(int d, Index terms) {
  require(d >= 3, "green_infinite_diag: d >= 3 required");
  require(terms >= kCalibrationHigh, "green_infinite_diag: truncation level must be >= 10^4");
  const std::vector<double> p = return_probabilities(d, terms);
  const double half = 0.5 * d;
  const double lead = 2.0 * std::pow(d / (4.0 * std::numbers::pi), half);

  DiagonalSeries out;
  out.d = d;
  out.terms = terms;
  // sum small terms last
  for (auto it = p.rbegin(); it != p.rend(); ++it) out.partial_sum += *it;
  for (Index n = kCalibrationLow; n <= kCalibrationHigh; ++n) {
    const double nd = static_cast<double>(n);
    const double pn = p[static_cast<std::size_t>(n)];
    out.lclt_constant = std::max(out.lclt_constant, 2.0 * std::pow(nd, half) * pn);
    out.remainder_constant =
        std::max(out.remainder_constant,
                 2.0 * std::pow(nd, half + 1.0) * std::abs(pn - lead * std::pow(nd, -half)));
  }
  const double m = static_cast<double>(terms) + 1.0;
  out.tail_estimate = lead * zeta_tail(half, m);
  out.lclt_tail_bound = out.lclt_constant * zeta_tail(half, m);
  out.error_bound = out.remainder_constant * zeta_tail(half + 1.0, m);
  out.value = out.partial_sum + out.tail_estimate;
  return out;
}

DiagonalSeries green_infinite_diag(int d, double tol) {
  require(tol > 0, "green_infinite_diag: tol must be > 0");
  Index terms = kCalibrationHigh;
  while (true) {
    DiagonalSeries s = green_infinite_diag_at(d, terms);
    if (s.error_bound <= tol) return s;
    if (terms * 2 > kMaxTerms) {
      throw BudgetError("green_infinite_diag: tolerance " + std::to_string(tol) +
                        " unreachable; achieved bound " + std::to_string(s.error_bound) +
                        " at M = " + std::to_string(terms));
    }
    terms *= 2;
  }
}

double green_diag_value(int d) {
  static std::mutex lock;
  static std::map<int, double> cache;
  std::lock_guard<std::mutex> guard(lock);
  auto it = cache.find(d);
  if (it == cache.end()) it = cache.emplace(d, green_infinite_diag(d, 1e-7).value).first;
  return it->second;
}

double conditional_variance_box(int L, int d, Index guard) {
  require(L >= 2 && L % 2 == 0, "conditional_variance_box: L must be even and >= 2");
  require(d >= 3, "conditional_variance_box: d >= 3 required");
  const BoxGeometry box(std::vector<int>(d, -L / 2), std::vector<int>(d, L / 2));
  const std::vector<Index> region = box.interior_indices();
  if (static_cast<Index>(region.size()) > guard) {
    throw SizeGuardExceeded("conditional_variance_box: " + std::to_string(region.size()) +
                            " sites exceed the dense guard");
  }
  const Eigen::MatrixXd generator = killed_walk_generator<double>(box, region);
  Eigen::LLT<Eigen::MatrixXd> llt(generator);
  if (llt.info() != Eigen::Success) throw NumericalError("conditional_variance_box: LLT failed");
  const Index center =
      std::lower_bound(region.begin(), region.end(), box.flat(Site(d, 0))) - region.begin();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Index>(region.size()));
  rhs[center] = 1.0;
  return llt.solve(rhs)[center];
}

// ---------------------------------------------------------------------------
// Infinite-volume Green function

namespace {

constexpr double kDirectLimit = 700.0;  // std::cyl_bessel_i overflows beyond ~710
constexpr double kLogSMin = -27.0;      // s ~ 2e-12
constexpr double kLogSMax = 18.5;       // s ~ 1e8
constexpr double kPanel = 0.5;

// Hankel expansion of e^{-s} I_n(s), valid for s >> n^2.
double scaled_bessel_hankel(int n, double s) {
  const double mu = 4.0 * n * n;
  double term = 1.0, sum = 1.0;
  for (int k = 1; k < 60; ++k) {
    const double odd = 2.0 * k - 1.0;
    const double next = -term * (mu - odd * odd) / (k * 8.0 * s);
    if (std::abs(next) >= std::abs(term) && k > 1) break;
    term = next;
    sum += term;
    if (std::abs(term) < 1e-18 * std::abs(sum)) break;
  }
  return sum / std::sqrt(2.0 * std::numbers::pi * s);
}

}  // namespace

std::vector<double> scaled_bessel_i(int max_order, double s) {
  require(max_order >= 0 && s > 0, "scaled_bessel_i: bad arguments");
  std::vector<double> out(static_cast<std::size_t>(max_order) + 1);
  if (s <= kDirectLimit) {
    const double damp = std::exp(-s);
    for (int n = 0; n <= max_order; ++n) {
      out[n] = std::cyl_bessel_i(static_cast<double>(n), s) * damp;
    }
    return out;
  }
  if (s >= 20.0 * max_order * max_order + kDirectLimit) {
    for (int n = 0; n <= max_order; ++n) out[n] = scaled_bessel_hankel(n, s);
    return out;
  }
  // Backward recurrence for I_k / I_{k-1}, anchored on the Hankel value of I_0.
  const int start = max_order + 60 + static_cast<int>(8.0 * std::sqrt(s));
  std::vector<double> ratio(static_cast<std::size_t>(max_order) + 1, 0.0);
  double r = 0.0;
  for (int k = start; k >= 1; --k) {
    r = 1.0 / (2.0 * k / s + r);
    if (k <= max_order) ratio[k] = r;
  }
  out[0] = scaled_bessel_hankel(0, s);
  for (int n = 1; n <= max_order; ++n) out[n] = out[n - 1] * ratio[n];
  return out;
}

InfiniteGreen::InfiniteGreen(int d, int max_coordinate) : d_(d), max_coord_(max_coordinate) {
  require(d >= 3, "InfiniteGreen: d >= 3 required");
  require(max_coordinate >= 0, "InfiniteGreen: max_coordinate >= 0");
  using Rule = boost::math::quadrature::gauss<double, 20>;
  const auto& abscissa = Rule::abscissa();
  const auto& weight = Rule::weights();
  std::vector<double> nodes;
  for (double left = kLogSMin; left < kLogSMax - 1e-12; left += kPanel) {
    const double mid = left + 0.5 * kPanel;
    const double half = 0.5 * kPanel;
    for (std::size_t k = 0; k < abscissa.size(); ++k) {
      for (int sign : {-1, +1}) {
        if (abscissa[k] == 0.0 && sign > 0) continue;
        const double u = mid + sign * half * abscissa[k];
        const double s = std::exp(u);
        nodes.push_back(s);
        weights_.push_back(half * weight[k] * s);
      }
    }
  }
  tail_cut_ = std::exp(kLogSMax);
  scaled_bessel_.resize(static_cast<Index>(nodes.size()), max_coordinate + 1);
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    const std::vector<double> row = scaled_bessel_i(max_coordinate, nodes[j]);
    for (int n = 0; n <= max_coordinate; ++n) scaled_bessel_(static_cast<Index>(j), n) = row[n];
  }
}

double InfiniteGreen::operator()(const Site& x) const {
  require(std::ssize(x) == d_, "InfiniteGreen: site dimension mismatch");
  std::vector<int> order(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    order[i] = std::abs(x[i]);
    require(order[i] <= max_coord_, "InfiniteGreen: coordinate exceeds table range");
  }
  double sum = 0.0;
  for (Index j = 0; j < scaled_bessel_.rows(); ++j) {
    double prod = weights_[static_cast<std::size_t>(j)];
    for (int n : order) prod *= scaled_bessel_(j, n);
    sum += prod;
  }
  // int_S^inf (2 pi s)^{-d/2} (1 - c/s) ds with c = sum_i (4 n_i^2 - 1) / 8
  double c = 0.0;
  for (int n : order) c += (4.0 * n * n - 1.0) / 8.0;
  const double half = 0.5 * d_;
  const double tail = std::pow(2.0 * std::numbers::pi, -half) *
                      (std::pow(tail_cut_, 1.0 - half) / (half - 1.0) -
                       c * std::pow(tail_cut_, -half) / half);
  return d_ * (sum + tail);
}

double rd_asymptotic(int d) {
  require(d >= 3, "rd_asymptotic: d >= 3 required");
  return 0.5 * d * std::tgamma(0.5 * d - 1.0) * std::pow(std::numbers::pi, -0.5 * d);
}

TailConstants fit_Rd(int d, double r_min, double r_max, double diag_tol) {
  require(d >= 3, "fit_Rd: d >= 3 required");
  require(r_min >= 10.0, "fit_Rd: r_min must be >= 10");
  require(r_max > r_min, "fit_Rd: r_max must exceed r_min");
  const int reach = static_cast<int>(std::floor(r_max));
  const InfiniteGreen green(d, reach);

  // Representatives 0 <= x_0 <= x_1 <= ... <= x_{d-1}, weighted by orbit size.
  std::vector<double> values, weights;
  Site x(d, 0);
  const double fact_d = std::tgamma(d + 1.0);
  auto visit = [&](auto&& self, int axis, int floor_value, double norm2) -> void {
    if (axis == d) {
      const double r = std::sqrt(norm2);
      if (r < r_min || r > r_max) return;
      double orbit = fact_d;
      int run = 1;
      for (int i = 1; i <= d; ++i) {
        if (i < d && x[i] == x[i - 1]) {
          ++run;
        } else {
          orbit /= std::tgamma(run + 1.0);
          run = 1;
        }
      }
      for (int v : x) {
        if (v != 0) orbit *= 2.0;
      }
      values.push_back(std::pow(r, d - 2.0) * green(x));
      weights.push_back(orbit);
      return;
    }
    for (int v = floor_value; v <= reach; ++v) {
      // remaining coordinates are >= v
      if (norm2 + static_cast<double>(d - axis) * v * v > r_max * r_max) break;
      x[axis] = v;
      self(self, axis + 1, v, norm2 + static_cast<double>(v) * v);
    }
  };
  visit(visit, 0, 0, 0.0);

  double total_weight = 0.0;
  for (double w : weights) total_weight += w;
  if (total_weight < 20.0) throw InvalidArgument("fit_Rd: window holds fewer than 20 points");

  TailConstants out;
  out.d = d;
  out.r_min = r_min;
  out.r_max = r_max;
  out.points = static_cast<Index>(total_weight);
  double mean = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) mean += weights[i] * values[i];
  mean /= total_weight;
  double ss = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    ss += weights[i] * (values[i] - mean) * (values[i] - mean);
  }
  out.R_d = mean;
  out.residual_rms = std::sqrt(ss / total_weight);
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  out.plateau_ratio = *hi / *lo;
  const DiagonalSeries diag = green_infinite_diag(d, diag_tol);
  out.G_diag = diag.value;
  out.G_diag_error = diag.error_bound;
  return out;
}

}  // namespace hwall
