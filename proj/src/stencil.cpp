#include "hwall/stencil.hpp"

#include <cmath>

namespace hwall {

namespace {
constexpr Index kChunk = 8192;
}

double stable_dot(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Index n = a.size();
  const Index chunks = (n + kChunk - 1) / kChunk;
  std::vector<double> partial(static_cast<std::size_t>(chunks));
#pragma omp parallel for schedule(static)
  for (Index c = 0; c < chunks; ++c) {
    const Index begin = c * kChunk;
    const Index len = std::min(kChunk, n - begin);
    partial[static_cast<std::size_t>(c)] = a.segment(begin, len).dot(b.segment(begin, len));
  }
  double sum = 0.0;
  for (double p : partial) sum += p;
  return sum;
}

void apply_killed_walk(const BoxGeometry& box, const std::vector<Index>& free_sites,
                       const std::vector<std::uint8_t>& is_free, const Eigen::VectorXd& x,
                       Eigen::VectorXd& y) {
  const auto& offsets = box.neighbor_offsets();
  const double hop = 1.0 / static_cast<double>(offsets.size());
  const Index n = static_cast<Index>(free_sites.size());
#pragma omp parallel for schedule(static)
  for (Index k = 0; k < n; ++k) {
    const Index f = free_sites[static_cast<std::size_t>(k)];
    double s = 0.0;
    for (Index off : offsets) {
      if (is_free[static_cast<std::size_t>(f + off)]) s += x[f + off];
    }
    y[f] = x[f] - hop * s;
  }
}

CgResult solve_killed_walk(const BoxGeometry& box, const std::vector<std::uint8_t>& is_free,
                           const Eigen::VectorXd& rhs, double rel_tol, int max_iterations) {
  require(static_cast<Index>(is_free.size()) == box.size() && rhs.size() == box.size(),
          "solve_killed_walk: vectors must span the box");
  std::vector<Index> free_sites;
  for (Index f = 0; f < box.size(); ++f) {
    if (is_free[static_cast<std::size_t>(f)]) {
      require(box.interior(f), "solve_killed_walk: free site on the box face");
      free_sites.push_back(f);
    }
  }
  CgResult out;
  out.x = Eigen::VectorXd::Zero(box.size());
  Eigen::VectorXd r = Eigen::VectorXd::Zero(box.size());
  for (Index f : free_sites) r[f] = rhs[f];
  const double b_norm = std::sqrt(stable_dot(r, r));
  if (b_norm == 0.0) {
    out.converged = true;
    return out;
  }
  Eigen::VectorXd p = r, ap = Eigen::VectorXd::Zero(box.size());
  double rr = b_norm * b_norm;
  for (int it = 1; it <= max_iterations; ++it) {
    apply_killed_walk(box, free_sites, is_free, p, ap);
    const double alpha = rr / stable_dot(p, ap);
    out.x += alpha * p;
    r -= alpha * ap;
    const double rr_new = stable_dot(r, r);
    out.iterations = it;
    out.relative_residual = std::sqrt(rr_new) / b_norm;
    if (out.relative_residual <= rel_tol) {
      out.converged = true;
      break;
    }
    p = r + (rr_new / rr) * p;
    rr = rr_new;
  }
  // true residual
  apply_killed_walk(box, free_sites, is_free, out.x, ap);
  Eigen::VectorXd res = Eigen::VectorXd::Zero(box.size());
  for (Index f : free_sites) res[f] = rhs[f] - ap[f];
  out.relative_residual = std::sqrt(stable_dot(res, res)) / b_norm;
  return out;
}

}  // namespace hwall
