#include "hwall/wall.hpp"

#include <cmath>
#include <limits>

#include "hwall/rng.hpp"

namespace hwall {

WallSpec WallSpec::gaussian(double Q, std::uint64_t seed) {
  WallSpec s;
  s.family = Family::gaussian;
  s.Q = Q;
  s.seed = seed;
  s.validate();
  return s;
}

WallSpec WallSpec::half_gaussian(double Q, std::uint64_t seed) {
  WallSpec s = gaussian(Q, seed);
  s.family = Family::half_gaussian;
  return s;
}

WallSpec WallSpec::bounded(double lo, double hi, std::uint64_t seed) {
  WallSpec s;
  s.family = Family::bounded;
  s.lo = lo;
  s.hi = hi;
  s.seed = seed;
  s.validate();
  return s;
}

WallSpec WallSpec::stretched(double beta, double Q, std::uint64_t seed) {
  WallSpec s;
  s.family = Family::stretched;
  s.beta = beta;
  s.Q = Q;
  s.seed = seed;
  s.validate();
  return s;
}

WallSpec WallSpec::flat(double c) {
  WallSpec s;
  s.family = Family::flat;
  s.c = c;
  s.validate();
  return s;
}

void WallSpec::validate() const {
  switch (family) {
    case Family::gaussian:
    case Family::half_gaussian:
      require(Q > 0 && std::isfinite(Q), "wall.Q: must be > 0");
      break;
    case Family::bounded:
      require(std::isfinite(lo) && std::isfinite(hi), "wall.lo/hi: must be finite");
      require(lo <= hi, "wall.lo: must be <= wall.hi");
      break;
    case Family::stretched:
      require(Q > 0 && std::isfinite(Q), "wall.Q: must be > 0");
      require(beta > 0 && beta < 1, "wall.beta: must lie in (0, 1)");
      break;
    case Family::flat:
      require(std::isfinite(c), "wall.c: must be finite");
      break;
  }
}

bool WallSpec::has_tail_scale() const {
  return family == Family::gaussian || family == Family::half_gaussian ||
         family == Family::stretched;
}

std::string family_name(WallSpec::Family family) {
  switch (family) {
    case WallSpec::Family::gaussian:
      return "gaussian";
    case WallSpec::Family::half_gaussian:
      return "half_gaussian";
    case WallSpec::Family::bounded:
      return "bounded";
    case WallSpec::Family::stretched:
      return "stretched";
    case WallSpec::Family::flat:
      return "flat";
  }
  return "?";
}

WallSpec::Family parse_family(const std::string& name) {
  for (auto f : {WallSpec::Family::gaussian, WallSpec::Family::half_gaussian,
                 WallSpec::Family::bounded, WallSpec::Family::stretched,
                 WallSpec::Family::flat}) {
    if (family_name(f) == name) return f;
  }
  throw InvalidArgument("wall.family: unknown family '" + name + "'");
}

namespace {

// Coordinates to the two free counter words. Up to four coordinates in
// [-32768, 32767] pack injectively; otherwise a mixing hash.
std::pair<std::uint32_t, std::uint32_t> site_key(const Site& x) {
  bool packable = x.size() <= 4;
  for (int v : x) packable = packable && v >= -32768 && v <= 32767;
  if (packable) {
    std::uint64_t key = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      key |= static_cast<std::uint64_t>(static_cast<std::uint16_t>(x[i] + 32768)) << (16 * i);
    }
    return {static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)};
  }
  std::uint64_t h = 0x9E3779B97F4A7C15ull ^ x.size();
  for (int v : x) {
    h ^= static_cast<std::uint32_t>(v);
    h *= 0xBF58476D1CE4E5B9ull;
    h ^= h >> 31;
  }
  return {static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32) | 0x80000000u};
}

}  // namespace

double wall_value(const WallSpec& spec, const Site& x) {
  if (spec.family == WallSpec::Family::flat) return spec.c;
  const auto [a, b] = site_key(x);
  CounterRng rng(spec.seed, StreamTag::wall, a, b);
  switch (spec.family) {
    case WallSpec::Family::gaussian:
      return std::sqrt(spec.Q) * rng.normal();
    case WallSpec::Family::half_gaussian:
      return std::sqrt(spec.Q) * std::abs(rng.normal());
    case WallSpec::Family::bounded:
      return spec.lo + (spec.hi - spec.lo) * rng.uniform();
    case WallSpec::Family::stretched: {
      const bool upper = rng.uniform() < 0.5;
      if (upper) return std::pow(2.0 * spec.Q * rng.exponential(), 0.5 / spec.beta);
      return -std::abs(rng.normal());
    }
    case WallSpec::Family::flat:
      break;
  }
  return spec.c;
}

WallField sample_wall(const WallSpec& spec, const LatticeDomain& domain) {
  spec.validate();
  WallField w;
  w.spec = spec;
  w.values.resize(domain.size());
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < domain.size(); ++i) w.values[i] = wall_value(spec, domain.site(i));
  return w;
}

double level_width(int kbar, double Q) {
  require(kbar >= 2, "kbar must be >= 2");
  require(Q > 0, "Q must be > 0");
  return std::sqrt(4.0 * Q) * (1.0 + 1.0 / (2.0 * kbar)) / kbar;
}

int top_level(int kbar, double Q, int d) {
  return static_cast<int>(std::floor(std::sqrt(2.0 * (d + 2) * Q) / level_width(kbar, Q)));
}

Index LevelDecomposition::count(int k) const {
  if (k == kInfinity) return static_cast<Index>(infinity_set.size());
  auto it = level_sets.find(k);
  return it == level_sets.end() ? 0 : static_cast<Index>(it->second.size());
}

LevelDecomposition discretize_wall(const WallField& wall, const LatticeDomain& domain, int kbar,
                                   double Q) {
  require(domain.scale() >= 3, "discretize_wall: N must be >= 3");
  require(wall.size() == domain.size(), "discretize_wall: wall does not match the domain");
  LevelDecomposition out;
  out.kbar = kbar;
  out.theta0 = level_width(kbar, Q);
  out.ktilde = top_level(kbar, Q, domain.dim());
  out.N = domain.scale();
  out.d = domain.dim();
  out.width = out.theta0 * std::sqrt(std::log(static_cast<double>(out.N)));
  out.level.resize(static_cast<std::size_t>(wall.size()));
  out.sigma_tilde.resize(wall.size());
  for (int k = 1; k <= kbar; ++k) out.level_sets[k];
  out.level_sets[out.ktilde];
  for (Index i = 0; i < wall.size(); ++i) {
    const double h = wall.values[i];
    int k;
    if (h <= out.width) {
      k = 1;
    } else if (h <= kbar * out.width) {
      k = static_cast<int>(std::ceil(h / out.width));
      // guard against rounding at the interval endpoints
      if (h > k * out.width) ++k;
      if (h <= (k - 1) * out.width) --k;
    } else if (h <= out.ktilde * out.width) {
      k = out.ktilde;
    } else {
      k = LevelDecomposition::kInfinity;
    }
    out.level[static_cast<std::size_t>(i)] = k;
    if (k == LevelDecomposition::kInfinity) {
      out.sigma_tilde[i] = std::numeric_limits<double>::infinity();
      out.infinity_set.push_back(i);
    } else {
      out.sigma_tilde[i] = k * out.width;
      out.level_sets[k].push_back(i);
    }
  }
  return out;
}

double predicted_level_count(int k, int N, int d, double theta0, double Q, int kbar, int ktilde) {
  require(N >= 1 && Q > 0, "predicted_level_count: bad N or Q");
  int m;
  if (k >= 2 && k <= kbar) {
    m = k - 1;
  } else if (k == ktilde) {
    m = kbar;
  } else {
    throw InvalidArgument("predicted_level_count: level " + std::to_string(k) +
                          " out of range [2, kbar] or ktilde");
  }
  return std::pow(static_cast<double>(N), d - m * m * theta0 * theta0 / (2.0 * Q));
}

}  // namespace hwall
