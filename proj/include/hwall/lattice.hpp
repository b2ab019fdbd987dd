#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "hwall/common.hpp"

namespace hwall {

/// Bounded continuum shape D in R^d. Membership is open (strict inequalities).
struct ShapeSpec {
  enum class Kind { box, ball, custom };

  Kind kind = Kind::box;
  Eigen::VectorXd center;
  Eigen::VectorXd sides;  // box
  double radius = 0.0;    // ball
  // custom: indicator sampled on a regular grid over [lower, upper)
  Eigen::VectorXd lower, upper;
  std::vector<int> resolution;
  std::vector<std::uint8_t> mask;

  static ShapeSpec box(const Eigen::VectorXd& sides, const Eigen::VectorXd& center);
  /// Open cube of side `side` centered at the origin.
  static ShapeSpec cube(int d, double side = 1.0);
  static ShapeSpec ball(int d, double radius, const Eigen::VectorXd& center);
  static ShapeSpec ball(int d, double radius);
  static ShapeSpec custom(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                          std::vector<int> resolution, std::vector<std::uint8_t> mask,
                          const Eigen::VectorXd& center);

  int dimension() const { return static_cast<int>(center.size()); }
  bool contains(const Eigen::Ref<const Eigen::VectorXd>& r) const;
  /// Closed axis-aligned box enclosing the shape.
  std::pair<Eigen::VectorXd, Eigen::VectorXd> bounding_box() const;
  double diameter() const;
  /// Continuum volume (exact for box and ball, cell count for custom).
  double volume() const;
  /// Same shape scaled by `factor` about its center.
  ShapeSpec scaled(double factor) const;
  ShapeSpec translated(const Eigen::VectorXd& shift) const;

  /// Bounded, positive extents, consistent dimensions.
  void validate() const;
};

/// Closed integer box [lower, upper] with lexicographic (row-major) flat
/// indexing. The faces carry boundary values; the strict interior is free.
class BoxGeometry {
 public:
  BoxGeometry() = default;
  BoxGeometry(std::vector<int> lower, std::vector<int> upper);

  int dim() const { return static_cast<int>(lower_.size()); }
  Index size() const { return size_; }
  const std::vector<int>& lower() const { return lower_; }
  const std::vector<int>& upper() const { return upper_; }
  const std::vector<Index>& strides() const { return strides_; }

  bool contains(const Site& x) const;
  Index flat(const Site& x) const;
  Site site(Index flat) const;
  bool on_face(Index flat) const;
  bool interior(Index flat) const { return !on_face(flat); }
  int parity(Index flat) const;
  /// Flat index offsets of the 2d neighbors in axis order (+e0, -e0, +e1, ...).
  /// Only valid for interior sites.
  const std::vector<Index>& neighbor_offsets() const { return offsets_; }
  /// Strict-interior flat indices, ascending.
  std::vector<Index> interior_indices() const;

  bool operator==(const BoxGeometry& other) const {
    return lower_ == other.lower_ && upper_ == other.upper_;
  }

 private:
  std::vector<int> lower_, upper_;
  std::vector<Index> extent_, strides_, offsets_;
  Index size_ = 0;
};

/// D_N = N D ∩ Z^d together with its padded embedding box.
class LatticeDomain {
 public:
  int dim() const { return box_.dim(); }
  int scale() const { return scale_; }
  int padding() const { return padding_; }
  Index size() const { return static_cast<Index>(sites_.size()); }
  const std::vector<Site>& sites() const { return sites_; }
  const Site& site(Index i) const { return sites_[static_cast<std::size_t>(i)]; }
  const BoxGeometry& box() const { return box_; }
  const std::optional<ShapeSpec>& shape() const { return shape_; }

  /// Site index of x, or nullopt when x is not in D_N.
  std::optional<Index> index_of(const Site& x) const;
  bool contains(const Site& x) const { return index_of(x).has_value(); }
  /// Box flat index of site i.
  Index flat_of(Index i) const { return flat_[static_cast<std::size_t>(i)]; }
  std::span<const Index> flat_indices() const { return flat_; }
  /// Site index for a box flat index, -1 outside D_N.
  Index site_of_flat(Index flat) const { return box_to_site_[static_cast<std::size_t>(flat)]; }

  friend LatticeDomain build_domain(const ShapeSpec&, int, int, std::optional<int>);
  friend LatticeDomain domain_from_sites(int, std::vector<Site>, int, int);

 private:
  void index_sites();

  int scale_ = 1;
  int padding_ = 1;
  std::optional<ShapeSpec> shape_;
  std::vector<Site> sites_;
  std::vector<Index> flat_;
  std::vector<Index> box_to_site_;
  BoxGeometry box_;
};

int default_padding(int N);

/// All x in Z^d with x/N inside the shape. The embedding box is the tight
/// bounding box of D_N inflated by `padding` sites per axis
/// (default max(N, 8)).
LatticeDomain build_domain(const ShapeSpec& shape, int N, int d,
                           std::optional<int> padding = std::nullopt);

/// Domain from an explicit site list (deduplicated and sorted
/// lexicographically), scale N, with the given padding.
LatticeDomain domain_from_sites(int d, std::vector<Site> sites, int N = 1, int padding = 1);

struct Neighbor {
  enum class Kind { interior, boundary };
  Site site;
  Kind kind;
};

/// The 2d nearest neighbors of x in axis order. A neighbor is `boundary`
/// when it lies on a face of, or outside, the embedding box.
std::vector<Neighbor> neighbors(const Site& x, const LatticeDomain& domain);

}  // namespace hwall
