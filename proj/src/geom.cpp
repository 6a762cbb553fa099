#include "nspomdp/geom.hpp"

#include "nspomdp/lp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

namespace nspomdp::geom {
namespace {

constexpr double radius_cap = 1e6;
constexpr double tight_tol = 1e-8;
constexpr double same_point_tol = 1e-8;

void require_same_dim(int a, int b, const char* what) {
  if (a != b) {
    throw GeometryError(std::string(what) + ": dimension mismatch " + std::to_string(a) + " vs " +
                        std::to_string(b));
  }
}

std::vector<lp::Constraint> as_constraints(const Polytope& p) {
  std::vector<lp::Constraint> rows;
  rows.reserve(p.num_halfspaces());
  for (Eigen::Index i = 0; i < p.normals().rows(); ++i) {
    lp::Constraint c;
    c.coeffs.resize(static_cast<std::size_t>(p.dim()));
    for (int j = 0; j < p.dim(); ++j) c.coeffs[static_cast<std::size_t>(j)] = p.normals()(i, j);
    c.relation = lp::Relation::less_equal;
    c.rhs = p.offsets()(i);
    rows.push_back(std::move(c));
  }
  return rows;
}

bool near(const Vector& a, const Vector& b) {
  const double scale = std::max({1.0, a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff()});
  return (a - b).cwiseAbs().maxCoeff() <= same_point_tol * scale;
}

// Null direction of a (dim-1) x dim row block, dim <= 3.
std::optional<Vector> null_direction(const Matrix& rows) {
  const auto d = rows.cols();
  Vector r(d);
  if (d == 2) {
    r << -rows(0, 1), rows(0, 0);
  } else if (d == 3) {
    const Eigen::Vector3d a = rows.row(0).transpose();
    const Eigen::Vector3d b = rows.row(1).transpose();
    r = a.cross(b);
  } else {
    return std::nullopt;
  }
  const double n = r.norm();
  if (n < 1e-10) return std::nullopt;
  return r / n;
}

std::vector<Vector> order_in_plane(const std::vector<Vector>& pts, const Vector& u, const Vector& w) {
  Vector centroid = Vector::Zero(pts.front().size());
  for (const auto& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  std::vector<std::pair<double, std::size_t>> keyed;
  keyed.reserve(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Vector d = pts[i] - centroid;
    keyed.emplace_back(std::atan2(d.dot(w), d.dot(u)), i);
  }
  std::sort(keyed.begin(), keyed.end());
  std::vector<Vector> out;
  out.reserve(pts.size());
  for (const auto& k : keyed) out.push_back(pts[k.second]);
  return out;
}

double planar_area(const std::vector<Vector>& ordered, const Vector& u, const Vector& w) {
  double twice = 0.0;
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    const Vector& a = ordered[i];
    const Vector& b = ordered[(i + 1) % ordered.size()];
    twice += a.dot(u) * b.dot(w) - b.dot(u) * a.dot(w);
  }
  return 0.5 * std::abs(twice);
}

std::vector<std::size_t> tight_rows(const Polytope& p, const Vector& v) {
  std::vector<std::size_t> rows;
  for (Eigen::Index i = 0; i < p.normals().rows(); ++i) {
    if (p.normals().row(i).squaredNorm() == 0.0) continue;
    const double scale = std::max(1.0, std::abs(p.offsets()(i)));
    if (std::abs(p.normals().row(i).dot(v) - p.offsets()(i)) <= tight_tol * scale) {
      rows.push_back(static_cast<std::size_t>(i));
    }
  }
  return rows;
}

// Indices of rows after removing exact duplicates.
std::vector<std::size_t> distinct_rows(const Polytope& p) {
  std::vector<std::size_t> keep;
  for (Eigen::Index i = 0; i < p.normals().rows(); ++i) {
    bool dup = false;
    for (std::size_t k : keep) {
      const auto j = static_cast<Eigen::Index>(k);
      if ((p.normals().row(i) - p.normals().row(j)).cwiseAbs().maxCoeff() <= 1e-12 &&
          std::abs(p.offsets()(i) - p.offsets()(j)) <= 1e-12 * std::max(1.0, std::abs(p.offsets()(j)))) {
        dup = true;
        break;
      }
    }
    if (!dup) keep.push_back(static_cast<std::size_t>(i));
  }
  return keep;
}

}  // namespace

Polytope::Polytope(int dim) : dim_(dim), normals_(0, dim), offsets_(0) {
  if (dim < 0) throw GeometryError("negative dimension");
}

Polytope::Polytope(const Matrix& normals, const Vector& offsets)
    : dim_(static_cast<int>(normals.cols())) {
  if (normals.rows() != offsets.size()) {
    throw GeometryError("half-space count mismatch between normals and offsets");
  }
  std::vector<Eigen::Index> rows;
  bool infeasible = false;
  Vector scale(normals.rows());
  for (Eigen::Index i = 0; i < normals.rows(); ++i) {
    if (!normals.row(i).allFinite() || !std::isfinite(offsets(i))) {
      throw GeometryError("non-finite half-space coefficient");
    }
    const double n = normals.row(i).norm();
    scale(i) = n;
    if (n < 1e-14) {
      if (offsets(i) < -eps_num) infeasible = true;
      continue;
    }
    rows.push_back(i);
  }
  const auto m = static_cast<Eigen::Index>(rows.size()) + (infeasible ? 1 : 0);
  normals_ = Matrix::Zero(m, dim_);
  offsets_ = Vector::Zero(m);
  for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(rows.size()); ++k) {
    const auto i = rows[static_cast<std::size_t>(k)];
    normals_.row(k) = normals.row(i) / scale(i);
    offsets_(k) = offsets(i) / scale(i);
  }
  if (infeasible) offsets_(m - 1) = -1.0;
}

Polytope Polytope::box(const Vector& lo, const Vector& hi) {
  if (lo.size() != hi.size()) throw GeometryError("box bounds differ in dimension");
  const auto d = lo.size();
  Matrix a = Matrix::Zero(2 * d, d);
  Vector b(2 * d);
  for (Eigen::Index i = 0; i < d; ++i) {
    a(2 * i, i) = -1.0;
    b(2 * i) = -lo(i);
    a(2 * i + 1, i) = 1.0;
    b(2 * i + 1) = hi(i);
  }
  return Polytope(a, b);
}

Polytope Polytope::box(std::initializer_list<double> lo, std::initializer_list<double> hi) {
  return box(Eigen::Map<const Vector>(lo.begin(), static_cast<Eigen::Index>(lo.size())),
             Eigen::Map<const Vector>(hi.begin(), static_cast<Eigen::Index>(hi.size())));
}

bool Polytope::contains(const Vector& x, double tol) const {
  if (x.size() != dim_) throw GeometryError("contains: point dimension mismatch");
  for (Eigen::Index i = 0; i < normals_.rows(); ++i) {
    if (normals_.row(i).dot(x) > offsets_(i) + tol) return false;
  }
  return true;
}

double Polytope::min_slack(const Vector& x) const {
  double s = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < normals_.rows(); ++i) {
    s = std::min(s, offsets_(i) - normals_.row(i).dot(x));
  }
  return s;
}

AffineMap::AffineMap(Matrix matrix, Vector offset) : matrix_(std::move(matrix)), offset_(std::move(offset)) {
  if (matrix_.rows() != matrix_.cols() || matrix_.rows() != offset_.size()) {
    throw GeometryError("affine map must be square with matching offset");
  }
  det_ = matrix_.size() == 0 ? 1.0 : matrix_.determinant();
  invertible_ = std::abs(det_) > eps_det;
  if (invertible_) inverse_ = matrix_.inverse();
}

AffineMap AffineMap::identity(int dim) { return AffineMap(Matrix::Identity(dim, dim), Vector::Zero(dim)); }

AffineMap AffineMap::translation(const Vector& shift) {
  const auto d = shift.size();
  return AffineMap(Matrix::Identity(d, d), shift);
}

const Matrix& AffineMap::inverse() const {
  if (!invertible_) throw GeometryError("affine map is not invertible (|det| <= 1e-12)");
  return inverse_;
}

Polytope intersect(const Polytope& p, const Polytope& q) {
  require_same_dim(p.dim(), q.dim(), "intersect");
  Matrix a(p.normals().rows() + q.normals().rows(), p.dim());
  Vector b(a.rows());
  a << p.normals(), q.normals();
  b << p.offsets(), q.offsets();
  Polytope joined(a, b);
  const auto keep = distinct_rows(joined);
  if (keep.size() == static_cast<std::size_t>(joined.normals().rows())) return joined;
  Matrix a2(static_cast<Eigen::Index>(keep.size()), p.dim());
  Vector b2(a2.rows());
  for (std::size_t k = 0; k < keep.size(); ++k) {
    a2.row(static_cast<Eigen::Index>(k)) = joined.normals().row(static_cast<Eigen::Index>(keep[k]));
    b2(static_cast<Eigen::Index>(k)) = joined.offsets()(static_cast<Eigen::Index>(keep[k]));
  }
  return Polytope(a2, b2);
}

Polytope affine_image(const Polytope& p, const AffineMap& f) {
  require_same_dim(p.dim(), f.dim(), "affine_image");
  if (!f.invertible()) throw GeometryError("affine_image: map is not invertible");
  const Matrix a = p.normals() * f.inverse();
  const Vector b = p.offsets() + a * f.offset();
  return Polytope(a, b);
}

Polytope affine_preimage(const Polytope& p, const AffineMap& f) {
  require_same_dim(p.dim(), f.dim(), "affine_preimage");
  const Matrix a = p.normals() * f.matrix();
  const Vector b = p.offsets() - p.normals() * f.offset();
  return Polytope(a, b);
}

bool is_empty(const Polytope& p) {
  if (p.dim() == 0) return false;
  return !lp::feasible(static_cast<std::size_t>(p.dim()), as_constraints(p));
}

std::optional<Ball> chebyshev_ball(const Polytope& p) {
  const auto d = static_cast<std::size_t>(p.dim());
  lp::LinearProgram prog;
  prog.objective.assign(d + 1, 0.0);
  prog.objective[d] = 1.0;
  prog.sense = lp::Sense::maximize;
  prog.bounds.assign(d + 1, lp::VarBounds{});
  prog.bounds[d] = lp::VarBounds{0.0, radius_cap};
  for (Eigen::Index i = 0; i < p.normals().rows(); ++i) {
    lp::Constraint c;
    c.coeffs.resize(d + 1);
    for (std::size_t j = 0; j < d; ++j) c.coeffs[j] = p.normals()(i, static_cast<Eigen::Index>(j));
    c.coeffs[d] = p.normals().row(i).squaredNorm() > 0.0 ? 1.0 : 0.0;
    c.rhs = p.offsets()(i);
    prog.constraints.push_back(std::move(c));
  }
  const auto out = lp::solve(prog);
  if (out.status != lp::Status::optimal) return std::nullopt;
  Ball ball;
  ball.center = Vector(static_cast<Eigen::Index>(d));
  for (std::size_t j = 0; j < d; ++j) ball.center(static_cast<Eigen::Index>(j)) = out.assignment[j];
  ball.radius = out.assignment[d];
  return ball;
}

bool is_full_dimensional(const Polytope& p, double min_radius) {
  const auto ball = chebyshev_ball(p);
  return ball && ball->radius > min_radius;
}

bool is_bounded(const Polytope& p) {
  const int d = p.dim();
  if (d == 0) return true;
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < p.normals().rows(); ++i) {
    if (p.normals().row(i).squaredNorm() > 0.0) rows.push_back(i);
  }
  if (rows.empty()) return false;
  auto in_cone = [&](const Vector& r) {
    for (auto i : rows) {
      if (p.normals().row(i).dot(r) > 1e-12) return false;
    }
    return true;
  };
  if (d == 1) {
    Vector r(1);
    r(0) = 1.0;
    if (in_cone(r)) return false;
    r(0) = -1.0;
    return !in_cone(r);
  }
  Matrix all(static_cast<Eigen::Index>(rows.size()), d);
  for (std::size_t k = 0; k < rows.size(); ++k) all.row(static_cast<Eigen::Index>(k)) = p.normals().row(rows[k]);
  Eigen::FullPivLU<Matrix> lu(all);
  lu.setThreshold(1e-10);
  if (lu.rank() < d) return false;
  if (d <= 3) {
    const std::size_t m = rows.size();
    // Enumerate (d-1)-subsets of rows.
    std::vector<bool> pick(m, false);
    std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(d - 1), true);
    do {
      Matrix sub(d - 1, d);
      Eigen::Index r = 0;
      for (std::size_t k = 0; k < m; ++k) {
        if (pick[k]) sub.row(r++) = all.row(static_cast<Eigen::Index>(k));
      }
      const auto dir = null_direction(sub);
      if (!dir) continue;
      if (in_cone(*dir) || in_cone(-*dir)) return false;
    } while (std::prev_permutation(pick.begin(), pick.end()));
    return true;
  }
  for (int k = 0; k < d; ++k) {
    for (double sgn : {1.0, -1.0}) {
      lp::LinearProgram prog;
      prog.objective.assign(static_cast<std::size_t>(d), 0.0);
      prog.objective[static_cast<std::size_t>(k)] = sgn;
      prog.sense = lp::Sense::maximize;
      prog.bounds.assign(static_cast<std::size_t>(d), lp::VarBounds{-1.0, 1.0});
      for (auto i : rows) {
        lp::Constraint c;
        c.coeffs.resize(static_cast<std::size_t>(d));
        for (int j = 0; j < d; ++j) c.coeffs[static_cast<std::size_t>(j)] = p.normals()(i, j);
        c.rhs = 0.0;
        prog.constraints.push_back(std::move(c));
      }
      const auto out = lp::solve(prog);
      if (out.status == lp::Status::optimal && out.value > 1e-9) return false;
    }
  }
  return true;
}

std::vector<Vector> vertices(const Polytope& p) {
  const int d = p.dim();
  if (d < 1 || d > 3) throw GeometryError("vertices: only dimensions 1 to 3 are supported");
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < p.normals().rows(); ++i) {
    if (p.normals().row(i).squaredNorm() > 0.0) {
      rows.push_back(i);
    } else if (p.offsets()(i) < 0.0) {
      return {};
    }
  }
  std::vector<Vector> found;
  const std::size_t m = rows.size();
  if (m >= static_cast<std::size_t>(d)) {
    std::vector<bool> pick(m, false);
    std::fill(pick.begin(), pick.begin() + d, true);
    Matrix sys(d, d);
    Vector rhs(d);
    do {
      Eigen::Index r = 0;
      for (std::size_t k = 0; k < m; ++k) {
        if (!pick[k]) continue;
        sys.row(r) = p.normals().row(rows[k]);
        rhs(r) = p.offsets()(rows[k]);
        ++r;
      }
      if (std::abs(sys.determinant()) < 1e-10) continue;
      const Vector x = sys.partialPivLu().solve(rhs);
      const double scale = std::max(1.0, x.cwiseAbs().maxCoeff());
      if (!p.contains(x, tight_tol * scale)) continue;
      bool dup = false;
      for (const auto& v : found) {
        if (near(v, x)) {
          dup = true;
          break;
        }
      }
      if (!dup) found.push_back(x);
    } while (std::prev_permutation(pick.begin(), pick.end()));
  }
  if (found.empty()) {
    if (!is_bounded(p) && !is_empty(p)) throw GeometryError("vertices: polytope is unbounded");
    return {};
  }
  if (!is_bounded(p)) throw GeometryError("vertices: polytope is unbounded");
  return found;
}

double volume(const Polytope& p) {
  const int d = p.dim();
  const auto verts = vertices(p);
  if (verts.size() < static_cast<std::size_t>(d + 1)) return 0.0;
  if (d == 1) {
    double lo = verts.front()(0);
    double hi = lo;
    for (const auto& v : verts) {
      lo = std::min(lo, v(0));
      hi = std::max(hi, v(0));
    }
    return hi - lo;
  }
  if (d == 2) {
    Vector u(2), w(2);
    u << 1.0, 0.0;
    w << 0.0, 1.0;
    return planar_area(order_in_plane(verts, u, w), u, w);
  }
  Vector ref = Vector::Zero(3);
  for (const auto& v : verts) ref += v;
  ref /= static_cast<double>(verts.size());
  double total = 0.0;
  for (std::size_t k : distinct_rows(p)) {
    const auto i = static_cast<Eigen::Index>(k);
    const Vector n = p.normals().row(i).transpose();
    if (n.squaredNorm() == 0.0) continue;
    std::vector<Vector> face;
    const double scale = std::max(1.0, std::abs(p.offsets()(i)));
    for (const auto& v : verts) {
      if (std::abs(n.dot(v) - p.offsets()(i)) <= tight_tol * scale) face.push_back(v);
    }
    if (face.size() < 3) continue;
    Vector u = (face[1] - face[0]);
    u -= n * n.dot(u);
    if (u.norm() < 1e-14) continue;
    u.normalize();
    const Eigen::Vector3d n3 = n;
    const Eigen::Vector3d u3 = u;
    const Vector w = n3.cross(u3);
    const double area = planar_area(order_in_plane(face, u, w), u, w);
    const double height = p.offsets()(i) - n.dot(ref);
    total += area * height / 3.0;
  }
  return std::max(0.0, total);
}

Vector interior_point(const Polytope& p) {
  const auto ball = chebyshev_ball(p);
  if (!ball) throw GeometryError("interior_point: polytope is empty");
  if (ball->radius <= eps_num && p.dim() >= 1 && p.dim() <= 3 && is_bounded(p)) {
    const auto verts = vertices(p);
    if (!verts.empty()) {
      Vector c = Vector::Zero(p.dim());
      for (const auto& v : verts) c += v;
      return c / static_cast<double>(verts.size());
    }
  }
  return ball->center;
}

Polytope simplify(const Polytope& p) {
  const int d = p.dim();
  if (d < 1 || d > 3) return p;
  if (!is_bounded(p)) return p;
  const auto verts = vertices(p);
  if (verts.size() < static_cast<std::size_t>(d + 1)) return p;
  std::vector<std::size_t> count(p.num_halfspaces(), 0);
  for (const auto& v : verts) {
    for (std::size_t r : tight_rows(p, v)) ++count[r];
  }
  std::vector<std::size_t> keep;
  for (std::size_t r : distinct_rows(p)) {
    if (count[r] >= static_cast<std::size_t>(d)) keep.push_back(r);
  }
  if (keep.size() == p.num_halfspaces()) return p;
  Matrix a(static_cast<Eigen::Index>(keep.size()), d);
  Vector b(a.rows());
  for (std::size_t k = 0; k < keep.size(); ++k) {
    a.row(static_cast<Eigen::Index>(k)) = p.normals().row(static_cast<Eigen::Index>(keep[k]));
    b(static_cast<Eigen::Index>(k)) = p.offsets()(static_cast<Eigen::Index>(keep[k]));
  }
  return Polytope(a, b);
}

std::vector<Polytope> difference(const Polytope& p, const Polytope& q) {
  require_same_dim(p.dim(), q.dim(), "difference");
  std::vector<Polytope> pieces;
  if (!is_full_dimensional(p)) return pieces;
  Polytope rest = p;
  for (Eigen::Index i = 0; i < q.normals().rows(); ++i) {
    Matrix flip = -q.normals().row(i);
    Vector off(1);
    off(0) = -q.offsets()(i);
    const Polytope outside = intersect(rest, Polytope(flip, off));
    if (is_full_dimensional(outside)) pieces.push_back(simplify(outside));
    Matrix keep = q.normals().row(i);
    Vector koff(1);
    koff(0) = q.offsets()(i);
    rest = intersect(rest, Polytope(keep, koff));
    if (!is_full_dimensional(rest)) break;
  }
  return pieces;
}

std::vector<Vector> ccw_vertices(const Polytope& p) {
  if (p.dim() != 2) throw GeometryError("ccw_vertices: polygon dumps are 2-D only");
  const auto verts = vertices(p);
  if (verts.size() < 3) return verts;
  Vector u(2), w(2);
  u << 1.0, 0.0;
  w << 0.0, 1.0;
  return order_in_plane(verts, u, w);
}

std::string format_number(double v) {
  if (v == 0.0) v = 0.0;  // folds -0
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string polygon_dump_line(std::string_view label, const Polytope& p, double value) {
  std::string line(label);
  for (const auto& v : ccw_vertices(p)) {
    line += ';';
    line += format_number(v(0));
    line += ',';
    line += format_number(v(1));
  }
  line += ';';
  line += format_number(value);
  return line;
}

}  // namespace nspomdp::geom
