#include "hwall/capacity.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <map>
#include <mutex>

#include "hwall/green.hpp"
#include "hwall/rng.hpp"
#include "hwall/stencil.hpp"

namespace hwall {

std::string method_name(CapacityEstimate::Method method) {
  switch (method) {
    case CapacityEstimate::Method::primal:
      return "primal";
    case CapacityEstimate::Method::dual:
      return "dual";
    case CapacityEstimate::Method::discrete:
      return "discrete";
  }
  return "?";
}

namespace {

bool gaps_shrink(const std::vector<std::pair<double, double>>& history) {
  for (std::size_t i = 2; i < history.size(); ++i) {
    const double prev = std::abs(history[i - 1].second - history[i - 2].second);
    const double gap = std::abs(history[i].second - history[i - 1].second);
    if (gap > prev) return false;
  }
  return true;
}

double circumradius(const ShapeSpec& shape) {
  auto [lo, hi] = shape.bounding_box();
  return std::max((lo - shape.center).cwiseAbs().maxCoeff(),
                  (hi - shape.center).cwiseAbs().maxCoeff()) *
         std::sqrt(static_cast<double>(shape.dimension()));
}

}  // namespace

// ---------------------------------------------------------------------------
// Primal

CapacityEstimate capacity_primal(const ShapeSpec& shape, double box_radius, double h) {
  shape.validate();
  require(h > 0 && box_radius > 0, "capacity_primal: h and box_radius must be > 0");
  const int d = shape.dimension();
  const double ratio = box_radius / h;
  const int K = static_cast<int>(std::lround(ratio));
  require(std::abs(ratio - K) < 1e-9 * std::max(1.0, ratio), "capacity_primal: h must divide the box radius");
  auto [lo, hi] = shape.bounding_box();
  const double extent = std::max((lo - shape.center).cwiseAbs().maxCoeff(),
                                 (hi - shape.center).cwiseAbs().maxCoeff());
  if (extent >= box_radius - h) throw InvalidArgument("capacity_primal: shape touches the outer box");

  CapacityEstimate est;
  est.shape = shape;
  est.method = CapacityEstimate::Method::primal;
  est.mesh = h;
  est.box_radius = box_radius;
  if (box_radius - extent < 2.0 * shape.diameter()) {
    est.notes.push_back("outer box margin below twice the shape diameter");
  }

  const BoxGeometry box(std::vector<int>(d, -K), std::vector<int>(d, K));
  std::vector<std::uint8_t> in_shape(static_cast<std::size_t>(box.size()), 0);
  std::vector<std::uint8_t> is_free(static_cast<std::size_t>(box.size()), 0);
  Eigen::VectorXd r(d);
  Index shape_nodes = 0;
  for (Index f = 0; f < box.size(); ++f) {
    const Site k = box.site(f);
    // closed membership: nodes on the boundary of D carry f = 1
    for (int i = 0; i < d; ++i) r[i] = shape.center[i] + h * k[i] * (1.0 - 1e-9);
    if (shape.contains(r)) {
      in_shape[static_cast<std::size_t>(f)] = 1;
      ++shape_nodes;
    } else if (box.interior(f)) {
      is_free[static_cast<std::size_t>(f)] = 1;
    }
  }
  if (shape_nodes == 0) {
    est.value = 0.0;
    est.refinement_history.emplace_back(h, 0.0);
    return est;
  }
  const auto& offsets = box.neighbor_offsets();
  const double hop = 1.0 / static_cast<double>(offsets.size());
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(box.size());
  for (Index f = 0; f < box.size(); ++f) {
    if (!is_free[static_cast<std::size_t>(f)]) continue;
    for (Index off : offsets) {
      if (in_shape[static_cast<std::size_t>(f + off)]) rhs[f] += hop;
    }
  }
  const CgResult cg = solve_killed_walk(box, is_free, rhs, 1e-10, 200000);
  est.cg_iterations = cg.iterations;
  if (!cg.converged) est.notes.push_back("primal solve did not reach its tolerance");
  Eigen::VectorXd u = cg.x;
  for (Index f = 0; f < box.size(); ++f) {
    if (in_shape[static_cast<std::size_t>(f)]) u[f] = 1.0;
  }
  // each undirected edge once through its +e_i direction
  double energy = 0.0;
  for (Index f = 0; f < box.size(); ++f) {
    const Site k = box.site(f);
    for (int i = 0; i < d; ++i) {
      if (k[i] == K) continue;
      const double diff = u[f] - u[f + box.strides()[i]];
      energy += diff * diff;
    }
  }
  est.value = energy * std::pow(h, d - 2) / (2.0 * d);
  est.refinement_history.emplace_back(h, est.value);
  return est;
}

CapacityEstimate capacity_primal_study(const ShapeSpec& shape, double box_radius,
                                       const std::vector<double>& meshes) {
  require(!meshes.empty(), "capacity_primal_study: meshes must be nonempty");
  CapacityEstimate coarse_far = capacity_primal(shape, 2.0 * box_radius, meshes.front());
  CapacityEstimate out;
  double a = 0.0;
  for (std::size_t i = 0; i < meshes.size(); ++i) {
    CapacityEstimate e = capacity_primal(shape, box_radius, meshes[i]);
    if (i == 0 && e.value > 0 && coarse_far.value > 0) {
      a = (1.0 / coarse_far.value - 1.0 / e.value) / (1.0 / box_radius - 1.0 / (2.0 * box_radius));
    }
    const double corrected = e.value > 0 ? 1.0 / (1.0 / e.value + a / box_radius) : 0.0;
    out.refinement_history.emplace_back(meshes[i], corrected);
    out.notes.insert(out.notes.end(), e.notes.begin(), e.notes.end());
    out.cg_iterations = e.cg_iterations;
  }
  out.shape = shape;
  out.method = CapacityEstimate::Method::primal;
  out.mesh = meshes.back();
  out.box_radius = box_radius;
  out.box_coefficient = a;
  out.value = out.refinement_history.back().second;
  out.converged = gaps_shrink(out.refinement_history);
  if (meshes.size() >= 2) {
    // first-order mesh extrapolation from the two finest solves
    const auto [h1, c1] = out.refinement_history[meshes.size() - 2];
    const auto [h2, c2] = out.refinement_history.back();
    out.unextrapolated = c2;
    out.value = c2 + (c2 - c1) * h2 / (h1 - h2);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dual

namespace {

using Gauss16 = boost::math::quadrature::gauss<double, 16>;

// Full node list of the 16-point rule on [0, 1].
const std::vector<std::pair<double, double>>& unit_rule() {
  static const std::vector<std::pair<double, double>> rule = [] {
    std::vector<std::pair<double, double>> out;
    const auto& x = Gauss16::abscissa();
    const auto& w = Gauss16::weights();
    for (std::size_t k = 0; k < x.size(); ++k) {
      out.emplace_back(0.5 + 0.5 * x[k], 0.5 * w[k]);
      out.emplace_back(0.5 - 0.5 * x[k], 0.5 * w[k]);
    }
    return out;
  }();
  return rule;
}

// int over v in [0,1]^d of F(v), F singular only at v = 0 like |v|^{2-d},
// by splitting into pyramids {v_j = max} and substituting v = t (s, 1 at j).
template <typename F>
double duffy_integral(int d, const F& f) {
  const auto& rule = unit_rule();
  const auto q = static_cast<Index>(rule.size());
  Index total = 1;
  for (int i = 0; i < d; ++i) total *= q;
  std::vector<double> v(static_cast<std::size_t>(d));
  double sum = 0.0;
  for (int j = 0; j < d; ++j) {
    for (Index idx = 0; idx < total; ++idx) {
      // digit 0 is t, the rest fill the non-j coordinates of s
      Index rest = idx;
      const auto [t, wt] = rule[static_cast<std::size_t>(rest % q)];
      rest /= q;
      double w = wt * std::pow(t, d - 1);
      for (int i = 0; i < d; ++i) {
        if (i == j) {
          v[static_cast<std::size_t>(i)] = t;
          continue;
        }
        const auto [s, ws] = rule[static_cast<std::size_t>(rest % q)];
        rest /= q;
        v[static_cast<std::size_t>(i)] = t * s;
        w *= ws;
      }
      sum += w * f(v);
    }
  }
  return sum;
}

template <typename F>
double tensor_integral(int d, const F& f) {
  const auto& rule = unit_rule();
  const auto q = static_cast<Index>(rule.size());
  Index total = 1;
  for (int i = 0; i < d; ++i) total *= q;
  std::vector<double> v(static_cast<std::size_t>(d));
  double sum = 0.0;
  for (Index idx = 0; idx < total; ++idx) {
    Index rest = idx;
    double w = 1.0;
    for (int i = 0; i < d; ++i) {
      const auto [s, ws] = rule[static_cast<std::size_t>(rest % q)];
      rest /= q;
      v[static_cast<std::size_t>(i)] = s;
      w *= ws;
    }
    sum += w * f(v);
  }
  return sum;
}

constexpr int kNearOffset = 6;

double cell_interaction_quadrature(const std::vector<int>& k) {
  const int d = static_cast<int>(k.size());
  const double power = 2.0 - d;
  // the product weight has kinks on the coordinate planes: integrate per
  // orthant, each a unit cube with corner at 0
  double total = 0.0;
  for (int orthant = 0; orthant < (1 << d); ++orthant) {
    std::vector<int> sign(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) sign[static_cast<std::size_t>(i)] = (orthant >> i) & 1 ? -1 : 1;
    // the singular point u = -k is a vertex of this orthant when it lies in it
    bool vertex = true;
    std::vector<int> corner(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
      const int p = -k[static_cast<std::size_t>(i)];
      const int s = sign[static_cast<std::size_t>(i)];
      if (p == 0) {
        corner[static_cast<std::size_t>(i)] = 0;
      } else if (p == s) {
        corner[static_cast<std::size_t>(i)] = s;
      } else {
        vertex = false;
      }
    }
    if (vertex) {
      // v measured from the singular corner into the orthant
      auto f = [&](const std::vector<double>& v) {
        double w = 1.0, r2 = 0.0;
        for (int i = 0; i < d; ++i) {
          const auto ii = static_cast<std::size_t>(i);
          const double dir = corner[ii] == 0 ? sign[ii] : -corner[ii];
          const double u = corner[ii] + dir * v[ii];
          w *= 1.0 - std::abs(u);
          r2 += v[ii] * v[ii];
        }
        return w * std::pow(r2, 0.5 * power);
      };
      total += duffy_integral(d, f);
    } else {
      auto f = [&](const std::vector<double>& v) {
        double w = 1.0, r2 = 0.0;
        for (int i = 0; i < d; ++i) {
          const auto ii = static_cast<std::size_t>(i);
          const double u = sign[ii] * v[ii];
          w *= 1.0 - v[ii];
          const double y = u + k[ii];
          r2 += y * y;
        }
        return w * std::pow(r2, 0.5 * power);
      };
      total += tensor_integral(d, f);
    }
  }
  return total;
}

struct InteractionTable {
  int d = 0;
  std::vector<double> values;  // canonical sorted offsets 0..kNearOffset per axis

  double lookup(std::vector<int> k) const {
    for (int& v : k) v = std::abs(v);
    int m = 0;
    for (int v : k) m = std::max(m, v);
    if (m > kNearOffset) {
      double r2 = 0.0;
      for (int v : k) r2 += static_cast<double>(v) * v;
      return std::pow(r2, 0.5 * (2.0 - d));
    }
    std::sort(k.begin(), k.end());
    Index idx = 0;
    for (int v : k) idx = idx * (kNearOffset + 1) + v;
    return values[static_cast<std::size_t>(idx)];
  }
};

const InteractionTable& interaction_table(int d) {
  static std::mutex lock;
  static std::map<int, InteractionTable> cache;
  std::lock_guard<std::mutex> guard(lock);
  auto it = cache.find(d);
  if (it != cache.end()) return it->second;
  InteractionTable t;
  t.d = d;
  Index size = 1;
  for (int i = 0; i < d; ++i) size *= kNearOffset + 1;
  t.values.assign(static_cast<std::size_t>(size), 0.0);
  std::vector<int> k(static_cast<std::size_t>(d));
  for (Index idx = 0; idx < size; ++idx) {
    Index rest = idx;
    for (int i = d - 1; i >= 0; --i) {
      k[static_cast<std::size_t>(i)] = static_cast<int>(rest % (kNearOffset + 1));
      rest /= kNearOffset + 1;
    }
    if (std::is_sorted(k.begin(), k.end())) {
      t.values[static_cast<std::size_t>(idx)] = cell_interaction_quadrature(k);
    }
  }
  return cache.emplace(d, std::move(t)).first->second;
}

}  // namespace

double cell_interaction(const std::vector<int>& k) {
  require(k.size() >= 3, "cell_interaction: d >= 3 required");
  return interaction_table(static_cast<int>(k.size())).lookup(k);
}

CapacityEstimate capacity_dual(const ShapeSpec& shape, double mesh, double R_d) {
  shape.validate();
  require(mesh > 0, "capacity_dual: mesh must be > 0");
  require(R_d > 0, "capacity_dual: R_d must be > 0");
  const int d = shape.dimension();
  require(d >= 3, "capacity_dual: d >= 3 required");
  CapacityEstimate est;
  est.shape = shape;
  est.method = CapacityEstimate::Method::dual;
  est.mesh = mesh;

  auto [lo, hi] = shape.bounding_box();
  std::vector<int> count(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) {
    count[static_cast<std::size_t>(i)] =
        std::max(1, static_cast<int>(std::ceil((hi[i] - lo[i]) / mesh - 1e-9)));
  }
  // cells tile a box centered on the shape's bounding box
  std::vector<std::vector<int>> cells;
  const BoxGeometry grid(std::vector<int>(static_cast<std::size_t>(d), 0),
                         [&] {
                           std::vector<int> u(count);
                           for (int& v : u) v -= 1;
                           return u;
                         }());
  Eigen::VectorXd r(d);
  for (Index f = 0; f < grid.size(); ++f) {
    const Site k = grid.site(f);
    for (int i = 0; i < d; ++i) {
      const double origin = 0.5 * (lo[i] + hi[i]) - 0.5 * count[static_cast<std::size_t>(i)] * mesh;
      r[i] = origin + (k[i] + 0.5) * mesh;
    }
    if (shape.contains(r)) cells.push_back(k);
  }
  if (cells.empty()) {
    est.value = 0.0;
    est.refinement_history.emplace_back(mesh, 0.0);
    return est;
  }
  const auto n = static_cast<Index>(cells.size());
  if (n > 4 * kDenseSiteGuard / 3) {
    throw SizeGuardExceeded("capacity_dual: " + std::to_string(n) + " cells exceed the dense guard");
  }
  const InteractionTable& table = interaction_table(d);
  Eigen::MatrixXd K(n, n);
  std::vector<int> off(static_cast<std::size_t>(d));
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j <= i; ++j) {
      for (int a = 0; a < d; ++a) {
        off[static_cast<std::size_t>(a)] = cells[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)] -
                                           cells[static_cast<std::size_t>(j)][static_cast<std::size_t>(a)];
      }
      K(i, j) = K(j, i) = table.lookup(off);
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(K);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("capacity_dual: cell kernel is not positive definite at mesh " +
                         std::to_string(mesh));
  }
  const Eigen::VectorXd w = llt.solve(Eigen::VectorXd::Ones(n));
  // cells of side a: int f = a^d sum w, energy = R_d a^{d+2} w'Kw
  est.value = std::pow(mesh, d - 2) * w.sum() / R_d;
  est.refinement_history.emplace_back(mesh, est.value);
  return est;
}

CapacityEstimate capacity_dual_study(const ShapeSpec& shape, const std::vector<double>& meshes,
                                     double R_d) {
  require(!meshes.empty(), "capacity_dual_study: meshes must be nonempty");
  CapacityEstimate out;
  for (double m : meshes) {
    CapacityEstimate e = capacity_dual(shape, m, R_d);
    out.refinement_history.emplace_back(m, e.value);
  }
  out.shape = shape;
  out.method = CapacityEstimate::Method::dual;
  out.mesh = meshes.back();
  out.value = out.refinement_history.back().second;
  out.converged = gaps_shrink(out.refinement_history);
  return out;
}

// ---------------------------------------------------------------------------
// Discrete

std::vector<Site> outer_layer(const LatticeDomain& domain) {
  std::vector<Site> out;
  for (const Site& x : domain.sites()) {
    bool outer = false;
    for (std::size_t i = 0; i < x.size() && !outer; ++i) {
      for (int sign : {+1, -1}) {
        Site y = x;
        y[i] += sign;
        if (!domain.contains(y)) outer = true;
      }
    }
    if (outer) out.push_back(x);
  }
  return out;
}

CapacityEstimate capacity_discrete(const ShapeSpec& shape, int N, int d, Index walkers,
                                   std::uint64_t seed, double calibration, double kill_factor) {
  require(walkers >= 1, "capacity_discrete: walkers must be >= 1");
  require(kill_factor > 1.0, "capacity_discrete: kill_factor must exceed 1");
  const LatticeDomain domain = build_domain(shape, N, d, 1);
  const std::vector<Site> layer = outer_layer(domain);
  const auto m = static_cast<Index>(layer.size());

  CapacityEstimate est;
  est.shape = shape;
  est.method = CapacityEstimate::Method::discrete;
  est.mesh = N;
  est.walkers = walkers;
  est.boundary_sites = m;
  est.calibration = calibration;
  // lattice center of the shape
  std::vector<double> c(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) c[static_cast<std::size_t>(i)] = shape.center[i] * N;
  const double kill = kill_factor * std::max(1.0, circumradius(shape) * N);
  est.kill_radius = kill;
  if (walkers < m) est.notes.push_back("fewer walkers than outer-layer sites");

  std::vector<std::uint8_t> escaped(static_cast<std::size_t>(walkers), 0);
  const Index max_steps = 10'000'000;
  Index censored = 0;
#pragma omp parallel for schedule(dynamic, 64) reduction(+ : censored)
  for (Index w = 0; w < walkers; ++w) {
    const Site& start = layer[static_cast<std::size_t>((w * m) / walkers)];
    CounterRng rng(seed, StreamTag::walker, static_cast<std::uint32_t>(w),
                   static_cast<std::uint32_t>(static_cast<std::uint64_t>(w) >> 32));
    Site y = start;
    bool done = false;
    for (Index step = 0; step < max_steps && !done; ++step) {
      const std::uint32_t move = rng.below(static_cast<std::uint32_t>(2 * d));
      y[move / 2] += (move % 2 == 0) ? 1 : -1;
      if (domain.contains(y)) {
        done = true;
        break;
      }
      double r2 = 0.0;
      for (int i = 0; i < d; ++i) {
        const double u = y[static_cast<std::size_t>(i)] - c[static_cast<std::size_t>(i)];
        r2 += u * u;
      }
      if (r2 >= kill * kill) {
        escaped[static_cast<std::size_t>(w)] = 1;
        done = true;
      }
    }
    if (!done) ++censored;
  }
  if (censored > 0) est.notes.push_back(std::to_string(censored) + " walkers censored");
  Index hits = 0;
  for (auto e : escaped) hits += e;
  const double p = static_cast<double>(hits) / static_cast<double>(walkers);
  est.raw_sum = static_cast<double>(m) * p;
  est.raw_sum_se = static_cast<double>(m) * std::sqrt(p * (1.0 - p) / static_cast<double>(walkers));
  const double h = rd_asymptotic(d) * std::pow(kill, 2.0 - d);
  const double corrected = est.raw_sum / (1.0 + h * est.raw_sum);
  est.return_correction = 1.0 - corrected / std::max(est.raw_sum, 1e-300);
  const double scale = calibration * std::pow(static_cast<double>(N), 2.0 - d);
  est.value = scale * corrected;
  est.se = scale * est.raw_sum_se / ((1.0 + h * est.raw_sum) * (1.0 + h * est.raw_sum));
  est.refinement_history.emplace_back(N, est.value);
  return est;
}

}  // namespace hwall
