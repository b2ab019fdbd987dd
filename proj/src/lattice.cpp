#include "hwall/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace hwall {

ShapeSpec ShapeSpec::box(const Eigen::VectorXd& sides, const Eigen::VectorXd& center) {
  ShapeSpec s;
  s.kind = Kind::box;
  s.sides = sides;
  s.center = center;
  s.validate();
  return s;
}

ShapeSpec ShapeSpec::cube(int d, double side) {
  return box(Eigen::VectorXd::Constant(d, side), Eigen::VectorXd::Zero(d));
}

ShapeSpec ShapeSpec::ball(int d, double radius, const Eigen::VectorXd& center) {
  require(center.size() == d, "ball: center length must equal d");
  ShapeSpec s;
  s.kind = Kind::ball;
  s.radius = radius;
  s.center = center;
  s.validate();
  return s;
}

ShapeSpec ShapeSpec::ball(int d, double radius) {
  return ball(d, radius, Eigen::VectorXd::Zero(d));
}

ShapeSpec ShapeSpec::custom(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                            std::vector<int> resolution, std::vector<std::uint8_t> mask,
                            const Eigen::VectorXd& center) {
  ShapeSpec s;
  s.kind = Kind::custom;
  s.lower = lower;
  s.upper = upper;
  s.resolution = std::move(resolution);
  s.mask = std::move(mask);
  s.center = center;
  s.validate();
  return s;
}

void ShapeSpec::validate() const {
  const int d = dimension();
  require(d >= 1, "shape: center must be set");
  require(center.allFinite(), "shape: center must be finite");
  switch (kind) {
    case Kind::box:
      require(sides.size() == d, "shape.sides: length must equal d");
      require((sides.array() > 0).all() && sides.allFinite(), "shape.sides: must be > 0");
      break;
    case Kind::ball:
      require(radius > 0 && std::isfinite(radius), "shape.radius: must be > 0");
      break;
    case Kind::custom: {
      require(lower.size() == d && upper.size() == d && std::ssize(resolution) == d,
              "shape.custom: bounds and resolution must have length d");
      require(lower.allFinite() && upper.allFinite() && (upper.array() > lower.array()).all(),
              "shape.custom: upper must exceed lower");
      std::size_t cells = 1;
      for (int r : resolution) {
        require(r >= 1, "shape.custom.resolution: must be >= 1");
        cells *= static_cast<std::size_t>(r);
      }
      require(mask.size() == cells, "shape.custom.mask: size must equal product of resolution");
      break;
    }
  }
}

bool ShapeSpec::contains(const Eigen::Ref<const Eigen::VectorXd>& r) const {
  const Eigen::VectorXd u = r - center;
  switch (kind) {
    case Kind::box:
      return ((2.0 * u.array().abs()) < sides.array()).all();
    case Kind::ball:
      return u.squaredNorm() < radius * radius;
    case Kind::custom: {
      // lower/upper are relative to center
      std::size_t cell = 0;
      for (int i = 0; i < dimension(); ++i) {
        if (!(u[i] >= lower[i] && u[i] < upper[i])) return false;
        const double t = (u[i] - lower[i]) / (upper[i] - lower[i]);
        const int k = std::min(resolution[i] - 1, static_cast<int>(t * resolution[i]));
        cell = cell * static_cast<std::size_t>(resolution[i]) + static_cast<std::size_t>(k);
      }
      return mask[cell] != 0;
    }
  }
  return false;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> ShapeSpec::bounding_box() const {
  switch (kind) {
    case Kind::box:
      return {center - 0.5 * sides, center + 0.5 * sides};
    case Kind::ball: {
      const Eigen::VectorXd r = Eigen::VectorXd::Constant(dimension(), radius);
      return {center - r, center + r};
    }
    case Kind::custom:
      return {center + lower, center + upper};
  }
  return {};
}

double ShapeSpec::diameter() const {
  switch (kind) {
    case Kind::box:
      return sides.norm();
    case Kind::ball:
      return 2.0 * radius;
    case Kind::custom:
      return (upper - lower).norm();
  }
  return 0.0;
}

double ShapeSpec::volume() const {
  const int d = dimension();
  switch (kind) {
    case Kind::box:
      return sides.prod();
    case Kind::ball:
      return std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d + 1.0) *
             std::pow(radius, d);
    case Kind::custom: {
      const double cell = ((upper - lower).array() /
                           Eigen::Map<const Eigen::VectorXi>(resolution.data(), d)
                               .cast<double>()
                               .array())
                              .prod();
      return cell * static_cast<double>(std::count_if(mask.begin(), mask.end(),
                                                       [](std::uint8_t m) { return m != 0; }));
    }
  }
  return 0.0;
}

ShapeSpec ShapeSpec::scaled(double factor) const {
  require(factor > 0, "shape scale factor must be > 0");
  ShapeSpec s = *this;
  s.sides *= factor;
  s.radius *= factor;
  s.lower *= factor;
  s.upper *= factor;
  return s;
}

ShapeSpec ShapeSpec::translated(const Eigen::VectorXd& shift) const {
  ShapeSpec s = *this;
  s.center += shift;
  return s;
}

BoxGeometry::BoxGeometry(std::vector<int> lower, std::vector<int> upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  require(lower_.size() == upper_.size() && !lower_.empty(), "box: bad bounds");
  const int d = dim();
  extent_.resize(d);
  strides_.resize(d);
  size_ = 1;
  for (int i = d - 1; i >= 0; --i) {
    require(upper_[i] >= lower_[i], "box: upper < lower");
    extent_[i] = upper_[i] - lower_[i] + 1;
    strides_[i] = size_;
    size_ *= extent_[i];
  }
  for (int i = 0; i < d; ++i) {
    offsets_.push_back(strides_[i]);
    offsets_.push_back(-strides_[i]);
  }
}

bool BoxGeometry::contains(const Site& x) const {
  if (std::ssize(x) != dim()) return false;
  for (int i = 0; i < dim(); ++i) {
    if (x[i] < lower_[i] || x[i] > upper_[i]) return false;
  }
  return true;
}

Index BoxGeometry::flat(const Site& x) const {
  Index f = 0;
  for (int i = 0; i < dim(); ++i) f += (x[i] - lower_[i]) * strides_[i];
  return f;
}

Site BoxGeometry::site(Index flat) const {
  Site x(dim());
  for (int i = 0; i < dim(); ++i) {
    x[i] = lower_[i] + static_cast<int>(flat / strides_[i]);
    flat %= strides_[i];
  }
  return x;
}

bool BoxGeometry::on_face(Index flat) const {
  for (int i = 0; i < dim(); ++i) {
    const Index k = flat / strides_[i];
    if (k == 0 || k == extent_[i] - 1) return true;
    flat %= strides_[i];
  }
  return false;
}

int BoxGeometry::parity(Index flat) const {
  int sum = 0;
  for (int i = 0; i < dim(); ++i) {
    sum += lower_[i] + static_cast<int>(flat / strides_[i]);
    flat %= strides_[i];
  }
  return ((sum % 2) + 2) % 2;
}

std::vector<Index> BoxGeometry::interior_indices() const {
  std::vector<Index> out;
  for (Index f = 0; f < size_; ++f) {
    if (!on_face(f)) out.push_back(f);
  }
  return out;
}

std::optional<Index> LatticeDomain::index_of(const Site& x) const {
  if (!box_.contains(x)) return std::nullopt;
  const Index s = box_to_site_[static_cast<std::size_t>(box_.flat(x))];
  if (s < 0) return std::nullopt;
  return s;
}

void LatticeDomain::index_sites() {
  flat_.resize(sites_.size());
  box_to_site_.assign(static_cast<std::size_t>(box_.size()), -1);
  for (std::size_t i = 0; i < sites_.size(); ++i) {
    flat_[i] = box_.flat(sites_[i]);
    box_to_site_[static_cast<std::size_t>(flat_[i])] = static_cast<Index>(i);
  }
}

int default_padding(int N) { return std::max(N, 8); }

namespace {

BoxGeometry padded_bounding_box(const std::vector<Site>& sites, int d, int padding) {
  std::vector<int> lo(sites.front()), hi(sites.front());
  for (const Site& x : sites) {
    for (int i = 0; i < d; ++i) {
      lo[i] = std::min(lo[i], x[i]);
      hi[i] = std::max(hi[i], x[i]);
    }
  }
  for (int i = 0; i < d; ++i) {
    lo[i] -= padding;
    hi[i] += padding;
  }
  return BoxGeometry(lo, hi);
}

}  // namespace

LatticeDomain build_domain(const ShapeSpec& shape, int N, int d, std::optional<int> padding) {
  if (d < 3) {
    throw InvalidArgument("dimension d >= 3 required: the infinite-volume field does not exist "
                          "for d <= 2 (got d = " + std::to_string(d) + ")");
  }
  require(N >= 1, "scale N must be >= 1");
  require(shape.dimension() == d, "shape dimension does not match d");
  shape.validate();
  require(shape.contains(Eigen::VectorXd::Zero(d)), "shape must contain the origin");
  const int pad = padding.value_or(default_padding(N));
  require(pad >= 1, "padding must be >= 1");

  auto [lo, hi] = shape.bounding_box();
  std::vector<int> ilo(d), ihi(d);
  for (int i = 0; i < d; ++i) {
    ilo[i] = static_cast<int>(std::floor(lo[i] * N)) - 1;
    ihi[i] = static_cast<int>(std::ceil(hi[i] * N)) + 1;
  }
  // Enumerate the integer points of the bounding box lexicographically.
  LatticeDomain dom;
  Site x = ilo;
  Eigen::VectorXd r(d);
  while (true) {
    for (int i = 0; i < d; ++i) r[i] = static_cast<double>(x[i]) / N;
    if (shape.contains(r)) dom.sites_.push_back(x);
    int axis = d - 1;
    while (axis >= 0 && x[axis] == ihi[axis]) {
      x[axis] = ilo[axis];
      --axis;
    }
    if (axis < 0) break;
    ++x[axis];
  }
  if (dom.sites_.empty()) throw InvalidArgument("D_N is empty for this shape and N");
  dom.scale_ = N;
  dom.padding_ = pad;
  dom.shape_ = shape;
  dom.box_ = padded_bounding_box(dom.sites_, d, pad);
  dom.index_sites();
  return dom;
}

LatticeDomain domain_from_sites(int d, std::vector<Site> sites, int N, int padding) {
  if (d < 3) {
    throw InvalidArgument("dimension d >= 3 required (got d = " + std::to_string(d) + ")");
  }
  require(!sites.empty(), "site list must be nonempty");
  require(padding >= 1, "padding must be >= 1");
  for (const Site& x : sites) require(std::ssize(x) == d, "site dimension does not match d");
  std::sort(sites.begin(), sites.end());
  sites.erase(std::unique(sites.begin(), sites.end()), sites.end());
  LatticeDomain dom;
  dom.sites_ = std::move(sites);
  dom.scale_ = N;
  dom.padding_ = padding;
  dom.box_ = padded_bounding_box(dom.sites_, d, padding);
  dom.index_sites();
  return dom;
}

std::vector<Neighbor> neighbors(const Site& x, const LatticeDomain& domain) {
  const BoxGeometry& box = domain.box();
  if (!box.contains(x)) throw InvalidArgument("neighbors: site outside the embedding box");
  std::vector<Neighbor> out;
  out.reserve(2 * static_cast<std::size_t>(box.dim()));
  for (int i = 0; i < box.dim(); ++i) {
    for (int sign : {+1, -1}) {
      Site y = x;
      y[i] += sign;
      const bool inner = box.contains(y) && box.interior(box.flat(y));
      out.push_back({std::move(y), inner ? Neighbor::Kind::interior : Neighbor::Kind::boundary});
    }
  }
  return out;
}

}  // namespace hwall
