#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <initializer_list>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace nspomdp::geom {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double eps_num = 1e-9;
inline constexpr double eps_vol = 1e-9;
inline constexpr double eps_det = 1e-12;

class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Closed convex polyhedron {x : normals * x <= offsets}. Rows are scaled to
// unit normals on construction.
class Polytope {
 public:
  explicit Polytope(int dim = 0);
  Polytope(const Matrix& normals, const Vector& offsets);

  static Polytope box(const Vector& lo, const Vector& hi);
  static Polytope box(std::initializer_list<double> lo, std::initializer_list<double> hi);

  int dim() const { return dim_; }
  std::size_t num_halfspaces() const { return static_cast<std::size_t>(normals_.rows()); }
  const Matrix& normals() const { return normals_; }
  const Vector& offsets() const { return offsets_; }

  bool contains(const Vector& x, double tol = eps_num) const;
  // Smallest slack offsets - normals*x; +inf for the whole space.
  double min_slack(const Vector& x) const;

 private:
  int dim_;
  Matrix normals_;
  Vector offsets_;
};

class AffineMap {
 public:
  AffineMap(Matrix matrix, Vector offset);
  static AffineMap identity(int dim);
  static AffineMap translation(const Vector& shift);

  int dim() const { return static_cast<int>(offset_.size()); }
  const Matrix& matrix() const { return matrix_; }
  const Vector& offset() const { return offset_; }
  double determinant() const { return det_; }
  bool invertible() const { return invertible_; }
  const Matrix& inverse() const;

  Vector apply(const Vector& x) const { return matrix_ * x + offset_; }
  Vector apply_inverse(const Vector& y) const { return inverse() * (y - offset_); }

 private:
  Matrix matrix_;
  Vector offset_;
  Matrix inverse_;
  double det_ = 0.0;
  bool invertible_ = false;
};

struct Ball {
  Vector center;
  double radius = 0.0;
};

Polytope intersect(const Polytope& p, const Polytope& q);
Polytope affine_image(const Polytope& p, const AffineMap& f);
Polytope affine_preimage(const Polytope& p, const AffineMap& f);

bool is_empty(const Polytope& p);
bool is_bounded(const Polytope& p);
// Largest inscribed ball; nullopt when empty. Radius is capped for unbounded input.
std::optional<Ball> chebyshev_ball(const Polytope& p);
bool is_full_dimensional(const Polytope& p, double min_radius = eps_num);

std::vector<Vector> vertices(const Polytope& p);
double volume(const Polytope& p);
Vector interior_point(const Polytope& p);

// Drops half-spaces not supporting a facet (bounded, full-dimensional, dim <= 3);
// returns the input otherwise.
Polytope simplify(const Polytope& p);

// Closed convex pieces covering p \ q, with disjoint interiors.
std::vector<Polytope> difference(const Polytope& p, const Polytope& q);

// Vertices in counter-clockwise order (2-D only).
std::vector<Vector> ccw_vertices(const Polytope& p);

std::string format_number(double v);
std::string polygon_dump_line(std::string_view label, const Polytope& p, double value);

template <class Payload>
struct Region {
  Polytope polytope;
  Payload payload;
};

template <class Payload>
class Fcp {
 public:
  Fcp() = default;
  explicit Fcp(std::vector<Region<Payload>> regions) : regions_(std::move(regions)) {}

  const std::vector<Region<Payload>>& regions() const { return regions_; }
  std::size_t size() const { return regions_.size(); }
  bool empty() const { return regions_.empty(); }
  const Region<Payload>& operator[](std::size_t i) const { return regions_[i]; }
  void add(Polytope polytope, Payload payload) {
    regions_.push_back({std::move(polytope), std::move(payload)});
  }

  // First region in list order containing x.
  std::optional<std::size_t> locate(const Vector& x, double tol = eps_num) const {
    for (std::size_t i = 0; i < regions_.size(); ++i) {
      if (regions_[i].polytope.contains(x, tol)) return i;
    }
    return std::nullopt;
  }

 private:
  std::vector<Region<Payload>> regions_;
};

// Pairwise full-dimensional intersections, payloads paired.
template <class A, class B>
Fcp<std::pair<A, B>> product_fcp(const Fcp<A>& a, const Fcp<B>& b) {
  Fcp<std::pair<A, B>> out;
  for (const auto& ra : a.regions()) {
    for (const auto& rb : b.regions()) {
      Polytope cut = intersect(ra.polytope, rb.polytope);
      if (!is_full_dimensional(cut)) continue;
      out.add(simplify(cut), std::pair<A, B>{ra.payload, rb.payload});
    }
  }
  return out;
}

}  // namespace nspomdp::geom
