#include "hwall/walk.hpp"

#include <algorithm>
#include <cmath>

#include "hwall/green.hpp"
#include "hwall/rng.hpp"
#include "hwall/stencil.hpp"

namespace hwall {

ShellGeometry ShellGeometry::sphere(int d, int n) {
  require(d >= 3, "sphere geometry: d >= 3 required");
  require(n >= 1, "sphere geometry: n must be >= 1");
  return {Kind::sphere, d, n};
}

ShellGeometry ShellGeometry::box(int d, int L) {
  require(d >= 3, "box geometry: d >= 3 required");
  require(L >= 2 && L % 2 == 0, "box geometry: L must be even and >= 2");
  return {Kind::box, d, L};
}

bool ShellGeometry::inside(const Site& x) const {
  if (kind == Kind::sphere) {
    long long r2 = 0;
    for (int v : x) r2 += static_cast<long long>(v) * v;
    return r2 < static_cast<long long>(n) * n;
  }
  for (int v : x) {
    if (2 * std::abs(v) >= n) return false;
  }
  return true;
}

double ShellGeometry::radius() const { return kind == Kind::sphere ? n : 0.5 * n; }

namespace {

int reach(const ShellGeometry& g) { return g.kind == ShellGeometry::Kind::sphere ? g.n : g.n / 2; }

BoxGeometry enclosing_box(const ShellGeometry& g) {
  const int r = reach(g) + 2;
  return BoxGeometry(std::vector<int>(g.d, -r), std::vector<int>(g.d, r));
}

}  // namespace

std::vector<Site> ShellGeometry::shell() const {
  const BoxGeometry box = enclosing_box(*this);
  std::vector<Site> out;
  for (Index f = 0; f < box.size(); ++f) {
    const Site y = box.site(f);
    if (inside(y)) continue;
    if (kind == Kind::box) {
      int m = 0;
      for (int v : y) m = std::max(m, std::abs(v));
      if (2 * m == n) out.push_back(y);
      continue;
    }
    bool touches = false;
    for (int axis = 0; axis < d && !touches; ++axis) {
      for (int sign : {+1, -1}) {
        Site z = y;
        z[axis] += sign;
        if (inside(z)) touches = true;
      }
    }
    if (touches) out.push_back(y);
  }
  std::sort(out.begin(), out.end());
  return out;
}

HittingMethod HittingMethod::monte_carlo(Index walkers, std::uint64_t seed) {
  require(walkers >= 1, "hitting: walkers must be >= 1");
  HittingMethod m;
  m.kind = Kind::monte_carlo;
  m.walkers = walkers;
  m.seed = seed;
  return m;
}

double HittingTable::operator()(const Site& y) const {
  auto it = std::lower_bound(shell.begin(), shell.end(), y);
  if (it == shell.end() || *it != y) return 0.0;
  return prob[it - shell.begin()];
}

HittingTable hitting_distribution(const Site& x, const ShellGeometry& geometry,
                                  const HittingMethod& method) {
  require(std::ssize(x) == geometry.d, "hitting: start site dimension mismatch");
  require(geometry.inside(x), "hitting: start site must lie strictly inside the shell");
  HittingTable t;
  t.geometry = geometry;
  t.method = method;
  t.start = x;
  t.shell = geometry.shell();
  const auto m = static_cast<Index>(t.shell.size());
  t.prob = Eigen::VectorXd::Zero(m);
  t.se = Eigen::VectorXd::Zero(m);

  const BoxGeometry box = enclosing_box(geometry);
  std::vector<Index> shell_of(static_cast<std::size_t>(box.size()), -1);
  for (Index i = 0; i < m; ++i) shell_of[static_cast<std::size_t>(box.flat(t.shell[i]))] = i;

  if (method.kind == HittingMethod::Kind::exact) {
    std::vector<std::uint8_t> is_free(static_cast<std::size_t>(box.size()), 0);
    for (Index f = 0; f < box.size(); ++f) {
      is_free[static_cast<std::size_t>(f)] = geometry.inside(box.site(f)) ? 1 : 0;
    }
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(box.size());
    rhs[box.flat(x)] = 1.0;
    const CgResult cg = solve_killed_walk(box, is_free, rhs, 1e-15, 100000);
    t.residual = cg.relative_residual;
    if (cg.relative_residual > 1e-12) {
      throw NumericalError("hitting: linear solve stalled at relative residual " +
                           std::to_string(cg.relative_residual));
    }
    const auto& offsets = box.neighbor_offsets();
    const double hop = 1.0 / static_cast<double>(offsets.size());
    for (Index f = 0; f < box.size(); ++f) {
      if (!is_free[static_cast<std::size_t>(f)]) continue;
      for (Index off : offsets) {
        const Index s = shell_of[static_cast<std::size_t>(f + off)];
        if (s >= 0) t.prob[s] += hop * cg.x[f];
      }
    }
    return t;
  }

  std::vector<Index> landing(static_cast<std::size_t>(method.walkers), -1);
#pragma omp parallel for schedule(dynamic, 64)
  for (Index w = 0; w < method.walkers; ++w) {
    CounterRng rng(method.seed, StreamTag::walker, static_cast<std::uint32_t>(w),
                   static_cast<std::uint32_t>(static_cast<std::uint64_t>(w) >> 32));
    Site y = x;
    for (Index step = 0; step < method.max_steps; ++step) {
      const std::uint32_t move = rng.below(static_cast<std::uint32_t>(2 * geometry.d));
      y[move / 2] += (move % 2 == 0) ? 1 : -1;
      if (!geometry.inside(y)) {
        landing[static_cast<std::size_t>(w)] = shell_of[static_cast<std::size_t>(box.flat(y))];
        break;
      }
    }
  }
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(m);
  for (Index s : landing) {
    if (s < 0) {
      ++t.censored;
    } else {
      counts[s] += 1.0;
    }
  }
  const double n = static_cast<double>(method.walkers - t.censored);
  if (n <= 0) throw BudgetError("hitting: every walker was censored");
  t.prob = counts / n;
  t.se = (t.prob.array() * (1.0 - t.prob.array()) / n).sqrt();
  return t;
}

double lipschitz_defect(const Site& x, const Site& x_prime, const ShellGeometry& geometry) {
  const double quarter = geometry.radius() / 4.0;
  for (const Site* s : {&x, &x_prime}) {
    for (int v : *s) require(std::abs(v) <= quarter, "lipschitz_defect: |x|_inf must be <= n/4");
  }
  if (x == x_prime) return 0.0;
  const HittingTable a = hitting_distribution(x, geometry);
  const HittingTable b = hitting_distribution(x_prime, geometry);
  return (a.prob - b.prob).cwiseAbs().maxCoeff() * std::pow(geometry.radius(), geometry.d - 1);
}

EscapeEstimate escape_probability(const Site& x, std::span<const Site> trap, double kill_radius,
                                  Index walkers, std::uint64_t seed, Index max_steps) {
  const int d = static_cast<int>(x.size());
  require(d >= 3, "escape_probability: d >= 3 required");
  require(walkers >= 1, "escape_probability: walkers must be >= 1");
  require(kill_radius > 0, "escape_probability: kill radius must be > 0");
  EscapeEstimate e;
  e.walkers = walkers;
  if (std::find(trap.begin(), trap.end(), x) != trap.end()) return e;
  if (trap.empty()) {
    e.raw = e.corrected = 1.0;
    return e;
  }
  double x2 = 0.0;
  for (int v : x) x2 += static_cast<double>(v) * v;
  require(x2 < kill_radius * kill_radius, "escape_probability: start outside the kill ball");

  std::vector<int> lo(trap.front()), hi(trap.front());
  for (const Site& t : trap) {
    require(std::ssize(t) == d, "escape_probability: trap site dimension mismatch");
    for (int i = 0; i < d; ++i) {
      lo[i] = std::min(lo[i], t[i]);
      hi[i] = std::max(hi[i], t[i]);
    }
  }
  const BoxGeometry trap_box(lo, hi);
  std::vector<std::uint8_t> in_trap(static_cast<std::size_t>(trap_box.size()), 0);
  for (const Site& t : trap) in_trap[static_cast<std::size_t>(trap_box.flat(t))] = 1;

  const double r2 = kill_radius * kill_radius;
  std::vector<std::int8_t> outcome(static_cast<std::size_t>(walkers), -1);
#pragma omp parallel for schedule(dynamic, 64)
  for (Index w = 0; w < walkers; ++w) {
    CounterRng rng(seed, StreamTag::walker, static_cast<std::uint32_t>(w),
                   static_cast<std::uint32_t>(static_cast<std::uint64_t>(w) >> 32));
    Site y = x;
    for (Index step = 0; step < max_steps; ++step) {
      const std::uint32_t move = rng.below(static_cast<std::uint32_t>(2 * d));
      y[move / 2] += (move % 2 == 0) ? 1 : -1;
      if (trap_box.contains(y) && in_trap[static_cast<std::size_t>(trap_box.flat(y))]) {
        outcome[static_cast<std::size_t>(w)] = 0;
        break;
      }
      double s = 0.0;
      for (int v : y) s += static_cast<double>(v) * v;
      if (s >= r2) {
        outcome[static_cast<std::size_t>(w)] = 1;
        break;
      }
    }
  }
  Index escaped = 0;
  for (auto o : outcome) {
    if (o < 0) ++e.censored;
    if (o == 1) ++escaped;
  }
  const double n = static_cast<double>(walkers - e.censored);
  if (n <= 0) throw BudgetError("escape_probability: every walker was censored");
  e.raw = static_cast<double>(escaped) / n;
  e.raw_se = std::sqrt(e.raw * (1.0 - e.raw) / n);
  e.return_bound = std::min(1.0, rd_asymptotic(d) * std::pow(kill_radius, 2.0 - d) *
                                     static_cast<double>(trap.size()) / green_diag_value(d));
  e.corrected = e.raw * (1.0 - e.return_bound);
  e.corrected_se = e.raw_se * (1.0 - e.return_bound);
  return e;
}

}  // namespace hwall
