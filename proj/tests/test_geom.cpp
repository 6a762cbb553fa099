#include "nspomdp/geom.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace nspomdp::geom;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

Polytope halfspaces(std::initializer_list<std::initializer_list<double>> rows) {
  const auto m = static_cast<Eigen::Index>(rows.size());
  const auto d = static_cast<Eigen::Index>(rows.begin()->size()) - 1;
  Matrix a(m, d);
  Vector b(m);
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double x : r) {
      if (j < d) {
        a(i, j) = x;
      } else {
        b(i) = x;
      }
      ++j;
    }
    ++i;
  }
  return Polytope(a, b);
}

Polytope unit_square() { return Polytope::box({0.0, 0.0}, {1.0, 1.0}); }

// Fraction-of-box Monte-Carlo area estimate.
double monte_carlo_volume(const Polytope& p, const Vector& lo, const Vector& hi, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int hits = 0;
  Vector x(lo.size());
  for (int s = 0; s < samples; ++s) {
    for (Eigen::Index j = 0; j < lo.size(); ++j) x(j) = lo(j) + (hi(j) - lo(j)) * u(rng);
    if (p.contains(x, 0.0)) ++hits;
  }
  return (hi - lo).prod() * hits / samples;
}

Polytope random_polytope(std::mt19937_64& rng, int dim, int cuts) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Polytope p = Polytope::box(Vector::Constant(dim, -1.0), Vector::Constant(dim, 1.0));
  for (int k = 0; k < cuts; ++k) {
    Vector n(dim);
    for (int j = 0; j < dim; ++j) n(j) = u(rng);
    Matrix a = n.transpose();
    Vector b(1);
    b(0) = 0.3 + 0.5 * std::abs(u(rng));
    p = intersect(p, Polytope(a, b));
  }
  return p;
}

bool same_vertex_set(std::vector<Vector> a, std::vector<Vector> b) {
  if (a.size() != b.size()) return false;
  for (const auto& v : a) {
    bool hit = false;
    for (const auto& w : b) hit = hit || (v - w).norm() < 1e-9;
    if (!hit) return false;
  }
  return true;
}

}  // namespace

TEST(Geom, BoxOverlap) {
  const auto r = intersect(unit_square(), Polytope::box({0.5, 0.5}, {1.5, 1.5}));
  EXPECT_NEAR(volume(r), 0.25, 1e-12);
  EXPECT_TRUE(same_vertex_set(vertices(r), {vec({0.5, 0.5}), vec({1, 0.5}), vec({1, 1}), vec({0.5, 1})}));
}

TEST(Geom, DisjointBoxesEmpty) {
  EXPECT_TRUE(is_empty(intersect(unit_square(), Polytope::box({2.0, 2.0}, {3.0, 3.0}))));
}

TEST(Geom, TriangleBoxIntersectionMatchesMonteCarlo) {
  const auto tri = halfspaces({{-1, 0, 0}, {0, -1, 0}, {1, 1, 2}});
  const auto r = intersect(tri, Polytope::box({1.0, 0.0}, {3.0, 3.0}));
  const double mc = monte_carlo_volume(r, vec({0, 0}), vec({3, 3}), 1000000, 3);
  EXPECT_NEAR(volume(r), 0.5, 1e-12);
  EXPECT_NEAR(mc, 0.5, 1e-2);
}

TEST(Geom, ImageUnderTranslationAndScaling) {
  const auto t = affine_image(unit_square(), AffineMap::translation(vec({1, 0})));
  EXPECT_TRUE(same_vertex_set(vertices(t), {vec({1, 0}), vec({2, 0}), vec({2, 1}), vec({1, 1})}));
  const auto s = affine_image(unit_square(), AffineMap(2.0 * Matrix::Identity(2, 2), Vector::Zero(2)));
  EXPECT_NEAR(volume(s), 4.0, 1e-12);
  EXPECT_TRUE(s.contains(vec({2, 2})));
}

TEST(Geom, RotationByQuarterTurn) {
  Matrix rot(2, 2);
  rot << 0, -1, 1, 0;
  const AffineMap f(rot, Vector::Zero(2));
  const auto img = affine_image(unit_square(), f);
  std::vector<Vector> expected;
  for (const auto& v : vertices(unit_square())) expected.push_back(rot * v);
  EXPECT_TRUE(same_vertex_set(vertices(img), expected));
  EXPECT_NEAR(volume(img), 1.0, 1e-12);
}

TEST(Geom, NonInvertibleImageRejected) {
  Matrix m(2, 2);
  m << 1, 0, 0, 0;
  EXPECT_THROW(affine_image(unit_square(), AffineMap(m, Vector::Zero(2))), GeometryError);
}

TEST(Geom, PreimageExamples) {
  const auto f = AffineMap::translation(vec({1, 0}));
  const auto pre = affine_preimage(Polytope::box({1.0, 0.0}, {2.0, 1.0}), f);
  EXPECT_TRUE(same_vertex_set(vertices(pre), vertices(unit_square())));
  EXPECT_TRUE(is_empty(affine_preimage(halfspaces({{1, 0, 0}, {-1, 0, -1}, {0, 1, 1}, {0, -1, 0}}), f)));
  EXPECT_THROW(affine_preimage(unit_square(), AffineMap::translation(vec({1, 0, 0}))), GeometryError);
}

TEST(Geom, ImageRoundTripPreservesScaledVolume) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    const int d = 2 + t % 2;
    const auto p = random_polytope(rng, d, 4);
    Matrix m(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) m(i, j) = u(rng) + (i == j ? 2.0 : 0.0);
    Vector c(d);
    for (int j = 0; j < d; ++j) c(j) = u(rng);
    const AffineMap f(m, c);
    const auto img = affine_image(p, f);
    const double v = volume(p);
    EXPECT_NEAR(volume(img), std::abs(f.determinant()) * v, 1e-6 * std::max(1.0, v));
    const auto back = affine_preimage(img, f);
    EXPECT_NEAR(volume(back), v, 1e-9);
    for (const auto& x : vertices(p)) EXPECT_TRUE(back.contains(x, 1e-9));
  }
}

TEST(Geom, EmptinessExamples) {
  EXPECT_TRUE(is_empty(halfspaces({{1, 0}, {-1, -1}})));
  EXPECT_FALSE(is_empty(unit_square()));
  EXPECT_TRUE(is_empty(halfspaces({{1, 1, 1}, {-1, 0, -1}, {0, -1, -1}})));
}

TEST(Geom, VerticesExamples) {
  EXPECT_EQ(vertices(unit_square()).size(), 4u);
  EXPECT_THROW(vertices(halfspaces({{-1, 0, 0}})), GeometryError);
  EXPECT_EQ(vertices(halfspaces({{-1, 0, 0}, {0, -1, 0}, {1, 1, 1}})).size(), 3u);
  EXPECT_TRUE(vertices(halfspaces({{1, 0, 0}, {-1, 0, -1}})).empty());
}

TEST(Geom, VolumeExamples) {
  EXPECT_DOUBLE_EQ(volume(unit_square()), 1.0);
  EXPECT_NEAR(volume(halfspaces({{-1, 0, 0}, {0, -1, 0}, {1, 1, 1}})), 0.5, 1e-12);
  EXPECT_NEAR(volume(Polytope::box({2.0}, {4.5})), 2.5, 1e-12);
  EXPECT_NEAR(volume(Polytope::box({0.0, 0.0, 0.0}, {1.0, 2.0, 3.0})), 6.0, 1e-12);
  EXPECT_NEAR(volume(halfspaces({{-1, 0, 0, 0}, {0, -1, 0, 0}, {0, 0, -1, 0}, {1, 1, 1, 1}})), 1.0 / 6.0, 1e-12);
  EXPECT_EQ(volume(intersect(unit_square(), Polytope::box({2.0, 2.0}, {3.0, 3.0}))), 0.0);
}

TEST(Geom, RandomPolytopesAgreeWithMonteCarlo) {
  std::mt19937_64 rng(21);
  int checked = 0;
  for (int t = 0; t < 100; ++t) {
    const int d = t < 80 ? 2 : 3;
    const auto p = random_polytope(rng, d, 5);
    const auto verts = vertices(p);
    ASSERT_GE(verts.size(), static_cast<std::size_t>(d + 1));
    Vector lo = verts.front(), hi = verts.front();
    for (const auto& v : verts) {
      lo = lo.cwiseMin(v);
      hi = hi.cwiseMax(v);
    }
    const double v = volume(p);
    const double mc = monte_carlo_volume(p, lo, hi, 400000, 100 + t);
    EXPECT_NEAR(v, mc, 1e-2 * std::max(v, 0.05)) << "polytope " << t;
    ++checked;
  }
  EXPECT_EQ(checked, 100);
}

TEST(Geom, ContainsExamples) {
  EXPECT_TRUE(unit_square().contains(vec({0.5, 0.5})));
  EXPECT_FALSE(unit_square().contains(vec({2, 0})));
  EXPECT_TRUE(unit_square().contains(vec({1, 0.5})));
}

TEST(Geom, InteriorPointExamples) {
  const auto c = interior_point(unit_square());
  EXPECT_NEAR(c(0), 0.5, 1e-9);
  EXPECT_NEAR(c(1), 0.5, 1e-9);
  EXPECT_NEAR(interior_point(Polytope::box({2.0}, {4.0}))(0), 3.0, 1e-9);
  // Segment from (0,0) to (2,0) written as an equality pair.
  const auto seg = halfspaces({{0, 1, 0}, {0, -1, 0}, {1, 0, 2}, {-1, 0, 0}});
  const auto m = interior_point(seg);
  EXPECT_NEAR(m(0), 1.0, 1e-9);
  EXPECT_NEAR(m(1), 0.0, 1e-9);
  EXPECT_THROW(interior_point(halfspaces({{1, 0}, {-1, -1}})), GeometryError);
}

TEST(Geom, ProductOfHalves) {
  Fcp<int> lr, bt;
  lr.add(Polytope::box({0.0, 0.0}, {0.5, 1.0}), 0);
  lr.add(Polytope::box({0.5, 0.0}, {1.0, 1.0}), 1);
  bt.add(Polytope::box({0.0, 0.0}, {1.0, 0.5}), 0);
  bt.add(Polytope::box({0.0, 0.5}, {1.0, 1.0}), 1);
  const auto q = product_fcp(lr, bt);
  ASSERT_EQ(q.size(), 4u);
  for (const auto& r : q.regions()) EXPECT_NEAR(volume(r.polytope), 0.25, 1e-12);
  Fcp<int> one;
  one.add(unit_square(), 7);
  const auto same = product_fcp(lr, one);
  ASSERT_EQ(same.size(), 2u);
  EXPECT_NEAR(volume(same[0].polytope), 0.5, 1e-12);
}

TEST(Geom, GridTimesSlantedPartitionKeepsArea) {
  Fcp<int> grid;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) grid.add(Polytope::box({double(i), double(j)}, {i + 1.0, j + 1.0}), 4 * j + i);
  // Slanted stripes x + 0.7y in [k, k+1), clipped to the domain.
  Fcp<int> stripes;
  const auto domain = Polytope::box({0.0, 0.0}, {4.0, 4.0});
  for (int k = -1; k < 8; ++k) {
    const auto s = intersect(domain, halfspaces({{1, 0.7, k + 1.0}, {-1, -0.7, -double(k)}}));
    if (is_full_dimensional(s)) stripes.add(s, k);
  }
  const auto q = product_fcp(grid, stripes);
  EXPECT_LE(q.size(), grid.size() * stripes.size());
  double area = 0.0;
  for (const auto& r : q.regions()) area += volume(r.polytope);
  EXPECT_NEAR(area, 16.0, 16e-6);

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 4.0);
  for (int s = 0; s < 10000; ++s) {
    const Vector x = vec({u(rng), u(rng)});
    int strict = 0;
    bool covered = false;
    for (const auto& r : q.regions()) {
      covered = covered || r.polytope.contains(x);
      if (r.polytope.min_slack(x) > 1e-9) ++strict;
    }
    EXPECT_TRUE(covered);
    EXPECT_LE(strict, 1);
  }
}

TEST(Geom, DifferencePiecesTileTheRemainder) {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 30; ++t) {
    const auto p = random_polytope(rng, 2, 3);
    const auto q = random_polytope(rng, 2, 3);
    const auto pieces = difference(p, q);
    double total = 0.0;
    for (const auto& piece : pieces) total += volume(piece);
    EXPECT_NEAR(total, volume(p) - volume(intersect(p, q)), 1e-9);
    for (std::size_t i = 0; i < pieces.size(); ++i) {
      EXPECT_LE(volume(intersect(pieces[i], q)), 1e-9);
      for (std::size_t j = i + 1; j < pieces.size(); ++j) EXPECT_LE(volume(intersect(pieces[i], pieces[j])), 1e-9);
    }
  }
}

TEST(Geom, SimplifyKeepsVertexSet) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 30; ++t) {
    const auto p = random_polytope(rng, 2 + t % 2, 6);
    const auto s = simplify(p);
    EXPECT_LE(s.num_halfspaces(), p.num_halfspaces());
    EXPECT_TRUE(same_vertex_set(vertices(p), vertices(s)));
  }
}

TEST(Geom, PolygonDumpIsCounterClockwise) {
  const auto line = polygon_dump_line("a", halfspaces({{-1, 0, 0}, {0, -1, 0}, {1, 1, 1}}), 2.5);
  EXPECT_EQ(line, "a;0,0;1,0;0,1;2.5");
}
