#pragma once

#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace casimir {

using Vec2 = Eigen::Vector2d;

struct Circle {
  double diameter;
};

struct Square {
  double side;
};

/// Convex polygon, vertices counter-clockwise about the origin.
struct Polygon {
  std::vector<Vec2> vertices;
};

using Shape = std::variant<Circle, Square, Polygon>;

/// Rigid placement: rotate about the shape origin by `angle` (radians, CCW),
/// then translate by `offset`.
struct Pose {
  Vec2 offset = Vec2::Zero();
  double angle = 0;

  Vec2 apply(const Vec2& p) const { return offset + Eigen::Rotation2Dd(angle) * p; }
  Vec2 rotate(const Vec2& v) const { return Eigen::Rotation2Dd(angle) * v; }
};

/// Characteristic size: diameter, side, or x-extent of an unrotated polygon.
double shape_size(const Shape& shape);

/// Largest distance from the shape origin to its boundary.
double circumradius(const Shape& shape);

/// Point-in-shape test, boundary included.
bool contains(const Shape& shape, const Pose& pose, const Vec2& p);

/// Vertices of a square or polygon (counter-clockwise); empty for a circle.
std::vector<Vec2> polygon_vertices(const Shape& shape);

/// Two-dimensional cross-section: an inner body displaced by d along x and
/// rotated by theta, inside an outer circle or square centred at the
/// origin. Torques are taken about the inner centroid.
struct Scene2D {
  Shape inner = Circle{0.0637};
  Shape outer = Circle{0.2547};
  double displacement = 0;  // um
  double theta_deg = 0;
  std::string inner_material = "sio2";
  std::string fluid_material = "ethanol";
  std::string outer_material = "pec";

  double s() const { return shape_size(inner); }
  double D() const { return shape_size(outer); }
  /// a = (D - s)/2
  double a() const { return 0.5 * (D() - s()); }
  Pose inner_pose() const;
  Vec2 centroid() const { return Vec2(displacement, 0); }
  /// True when the inner body touches or crosses the outer boundary.
  bool in_contact() const;
};

/// Builds the standard concentric-family scene: inner of size s and outer of
/// size D with s/D fixed and a = (D - s)/2. Displacement given in units of a.
Scene2D make_scene(const Shape& inner_kind, const Shape& outer_kind, double a, double s_over_D,
                   double d_over_a, double theta_deg);

struct BoundarySample {
  Vec2 point;
  Vec2 normal;  // outward unit normal
  double weight;  // arc length, um
};

/// Midpoint samples along the boundary. Polygon edges get a share of the N
/// samples proportional to their length and vertices are never sampled.
/// Requires N >= 8.
std::vector<BoundarySample> discretize_boundary(const Shape& shape, int n, const Pose& pose = {});

/// Distance from origin along the unit direction to the outer boundary.
/// The origin must lie strictly inside the outer shape.
double ray_to_outer(const Scene2D& scene, const Vec2& origin, const Vec2& direction);

}  // namespace casimir
