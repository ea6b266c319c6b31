#include <cmath>

#include <gtest/gtest.h>

#include "casimir/errors.hpp"
#include "casimir/geometry.hpp"

using namespace casimir;

namespace {
const double kPi = 3.14159265358979323846;
}

TEST(Geometry, SceneDimensions) {
  const auto sc = make_scene(Circle{1}, Circle{1}, 0.0955, 0.25, 0.3, 0);
  const double s = 2 * 0.0955 * 0.25 / 0.75;
  EXPECT_NEAR(sc.s(), s, 1e-15);
  EXPECT_NEAR(sc.D(), 4 * s, 1e-15);
  EXPECT_NEAR(sc.a(), 0.0955, 1e-15);
  EXPECT_NEAR(sc.centroid().x(), 0.3 * 0.0955, 1e-15);
  EXPECT_FALSE(sc.in_contact());
  EXPECT_TRUE(make_scene(Circle{1}, Circle{1}, 1.0, 0.25, 1.0, 0).in_contact());
  EXPECT_THROW(make_scene(Circle{1}, Circle{1}, -1.0, 0.25, 0, 0), DomainError);
  EXPECT_THROW(make_scene(Circle{1}, Circle{1}, 1.0, 1.0, 0, 0), DomainError);
}

TEST(Geometry, ContainsIsInclusive) {
  const Square sq{2.0};
  EXPECT_TRUE(contains(sq, {}, Vec2(1.0, 0.3)));
  EXPECT_FALSE(contains(sq, {}, Vec2(1.0 + 1e-12, 0.3)));
  const Pose rot{Vec2::Zero(), kPi / 4};
  EXPECT_TRUE(contains(sq, rot, Vec2(std::sqrt(2.0) - 1e-12, 0)));
  EXPECT_FALSE(contains(sq, rot, Vec2(1.0, 1.0)));
  EXPECT_TRUE(contains(Circle{2.0}, {}, Vec2(0.6, 0.8)));
  EXPECT_EQ(circumradius(sq), std::sqrt(2.0));
}

TEST(Geometry, BoundaryClosure) {
  for (const Shape& sh : {Shape(Circle{1.3}), Shape(Square{0.7}),
                          Shape(Polygon{{Vec2(1, 0), Vec2(0, 1), Vec2(-1, 0), Vec2(0, -1.5)}})}) {
    for (double ang : {0.0, 0.3, 1.1}) {
      const auto b = discretize_boundary(sh, 64, Pose{Vec2(0.1, -0.2), ang});
      Vec2 closure = Vec2::Zero();
      double len = 0;
      for (const auto& s : b) {
        closure += s.weight * s.normal;
        len += s.weight;
        EXPECT_NEAR(s.normal.norm(), 1.0, 1e-14);
      }
      EXPECT_LT(closure.norm(), 1e-13);
      EXPECT_GT(len, 0);
    }
  }
  const auto sq = discretize_boundary(Square{0.7}, 64);
  double per = 0;
  for (const auto& s : sq) per += s.weight;
  EXPECT_NEAR(per, 2.8, 1e-14);
  EXPECT_THROW(discretize_boundary(Square{1}, 4), DomainError);
}

TEST(Geometry, NormalsPointOutward) {
  const Pose pose{Vec2(0.2, 0.1), 0.4};
  for (const auto& s : discretize_boundary(Square{1.0}, 40, pose)) {
    EXPECT_FALSE(contains(Square{1.0}, pose, s.point + 1e-6 * s.normal));
    EXPECT_TRUE(contains(Square{1.0}, pose, s.point - 1e-6 * s.normal));
  }
}

TEST(Geometry, RayToOuter) {
  Scene2D sc = make_scene(Circle{1}, Circle{1}, 1.0, 0.25, 0, 0);
  const double R = 0.5 * sc.D();
  EXPECT_NEAR(ray_to_outer(sc, Vec2::Zero(), Vec2(0, 1)), R, 1e-14);
  EXPECT_NEAR(ray_to_outer(sc, Vec2(0.3, 0), Vec2(1, 0)), R - 0.3, 1e-14);
  EXPECT_NEAR(ray_to_outer(sc, Vec2(0.3, 0), Vec2(-1, 0)), R + 0.3, 1e-14);
  Scene2D sq = make_scene(Square{1}, Square{1}, 1.0, 0.25, 0, 0);
  const double h = 0.5 * sq.D();
  EXPECT_NEAR(ray_to_outer(sq, Vec2::Zero(), Vec2(1, 0)), h, 1e-14);
  const Vec2 diag = Vec2(1, 1).normalized();
  EXPECT_NEAR(ray_to_outer(sq, Vec2::Zero(), diag), std::sqrt(2.0) * h, 1e-13);
  EXPECT_THROW(ray_to_outer(sq, Vec2(h, 0), Vec2(1, 0)), GeometryError);
  EXPECT_THROW(ray_to_outer(sc, Vec2(2 * R, 0), Vec2(1, 0)), GeometryError);
}

TEST(Geometry, PoseRotatesThenTranslates) {
  const Pose p{Vec2(1, 2), kPi / 2};
  const Vec2 q = p.apply(Vec2(1, 0));
  EXPECT_NEAR(q.x(), 1, 1e-15);
  EXPECT_NEAR(q.y(), 3, 1e-15);
}
