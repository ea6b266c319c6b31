#include "casimir/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "casimir/errors.hpp"
#include "casimir/units.hpp"

namespace casimir {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

}  // namespace

std::vector<Vec2> polygon_vertices(const Shape& shape) {
  return std::visit(overloaded{
                        [](const Circle&) { return std::vector<Vec2>{}; },
                        [](const Square& sq) {
                          const double h = 0.5 * sq.side;
                          return std::vector<Vec2>{{h, -h}, {h, h}, {-h, h}, {-h, -h}};
                        },
                        [](const Polygon& p) { return p.vertices; },
                    },
                    shape);
}

double shape_size(const Shape& shape) {
  return std::visit(overloaded{
                        [](const Circle& c) { return c.diameter; },
                        [](const Square& s) { return s.side; },
                        [](const Polygon& p) {
                          double lo = std::numeric_limits<double>::infinity(), hi = -lo;
                          for (const auto& v : p.vertices) {
                            lo = std::min(lo, v.x());
                            hi = std::max(hi, v.x());
                          }
                          return hi - lo;
                        },
                    },
                    shape);
}

double circumradius(const Shape& shape) {
  if (const auto* c = std::get_if<Circle>(&shape)) return 0.5 * c->diameter;
  double r = 0;
  for (const auto& v : polygon_vertices(shape)) r = std::max(r, v.norm());
  return r;
}

bool contains(const Shape& shape, const Pose& pose, const Vec2& p) {
  const Vec2 local = Eigen::Rotation2Dd(-pose.angle) * (p - pose.offset);
  if (const auto* c = std::get_if<Circle>(&shape)) return local.norm() <= 0.5 * c->diameter;
  if (const auto* s = std::get_if<Square>(&shape))
    return std::abs(local.x()) <= 0.5 * s->side && std::abs(local.y()) <= 0.5 * s->side;
  const auto verts = polygon_vertices(shape);
  for (std::size_t i = 0; i < verts.size(); ++i) {
    const Vec2& a = verts[i];
    const Vec2& b = verts[(i + 1) % verts.size()];
    if (cross(b - a, local - a) < 0) return false;
  }
  return true;
}

Pose Scene2D::inner_pose() const { return Pose{centroid(), theta_deg * units::pi / 180.0}; }

bool Scene2D::in_contact() const {
  const Pose pose = inner_pose();
  // strict interior test against the outer shape; touching within rounding counts as contact
  const double half = 0.5 * shape_size(outer) * (1 - 1e-12);
  auto strictly_inside = [&](const Vec2& p) {
    if (std::holds_alternative<Circle>(outer)) return p.norm() < half;
    return std::abs(p.x()) < half && std::abs(p.y()) < half;
  };
  if (const auto* c = std::get_if<Circle>(&inner)) {
    const double r = 0.5 * c->diameter;
    const Vec2 ctr = centroid();
    if (std::holds_alternative<Circle>(outer)) return !(ctr.norm() + r < half);
    return !(std::abs(ctr.x()) + r < half && std::abs(ctr.y()) + r < half);
  }
  for (const auto& v : polygon_vertices(inner))
    if (!strictly_inside(pose.apply(v))) return true;
  return false;
}

Scene2D make_scene(const Shape& inner_kind, const Shape& outer_kind, double a, double s_over_D,
                   double d_over_a, double theta_deg) {
  if (!(a > 0)) throw DomainError("lengthscale a must be positive");
  if (!(s_over_D > 0 && s_over_D < 1)) throw DomainError("s/D must lie in (0, 1)");
  const double s = 2 * a * s_over_D / (1 - s_over_D);
  const double D = s / s_over_D;
  auto sized = [](const Shape& kind, double size) -> Shape {
    if (std::holds_alternative<Circle>(kind)) return Circle{size};
    if (std::holds_alternative<Square>(kind)) return Square{size};
    const auto& p = std::get<Polygon>(kind);
    const double scale = size / shape_size(kind);
    Polygon out;
    for (const auto& v : p.vertices) out.vertices.push_back(scale * v);
    return out;
  };
  Scene2D scene;
  scene.inner = sized(inner_kind, s);
  if (std::holds_alternative<Polygon>(outer_kind)) throw DomainError("outer boundary must be a circle or square");
  scene.outer = sized(outer_kind, D);
  scene.displacement = d_over_a * a;
  scene.theta_deg = theta_deg;
  return scene;
}

std::vector<BoundarySample> discretize_boundary(const Shape& shape, int n, const Pose& pose) {
  if (n < 8) throw DomainError("boundary discretization needs N >= 8");
  std::vector<BoundarySample> out;
  if (const auto* c = std::get_if<Circle>(&shape)) {
    const double r = 0.5 * c->diameter;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
      const double phi = 2 * units::pi * (i + 0.5) / n;
      const Vec2 nrm(std::cos(phi), std::sin(phi));
      out.push_back({pose.apply(r * nrm), pose.rotate(nrm), 2 * units::pi * r / n});
    }
    return out;
  }
  const auto verts = polygon_vertices(shape);
  double perimeter = 0;
  for (std::size_t i = 0; i < verts.size(); ++i) perimeter += (verts[(i + 1) % verts.size()] - verts[i]).norm();
  for (std::size_t i = 0; i < verts.size(); ++i) {
    const Vec2& a = verts[i];
    const Vec2& b = verts[(i + 1) % verts.size()];
    const double len = (b - a).norm();
    const int ne = std::max(1, int(std::lround(n * len / perimeter)));
    const Vec2 t = (b - a) / len;
    const Vec2 nrm(t.y(), -t.x());  // outward for CCW ordering
    for (int k = 0; k < ne; ++k) {
      const Vec2 p = a + (k + 0.5) / ne * (b - a);
      out.push_back({pose.apply(p), pose.rotate(nrm), len / ne});
    }
  }
  return out;
}

double ray_to_outer(const Scene2D& scene, const Vec2& o, const Vec2& dir) {
  if (const auto* c = std::get_if<Circle>(&scene.outer)) {
    const double r = 0.5 * c->diameter;
    const double b = o.dot(dir);
    const double q = o.squaredNorm() - r * r;
    if (!(q < 0)) throw GeometryError("ray origin not strictly inside the outer circle");
    return -b + std::sqrt(b * b - q);
  }
  const double h = 0.5 * shape_size(scene.outer);
  if (!(std::abs(o.x()) < h && std::abs(o.y()) < h))
    throw GeometryError("ray origin not strictly inside the outer square");
  double t = std::numeric_limits<double>::infinity();
  for (int axis = 0; axis < 2; ++axis) {
    if (dir[axis] > 0) t = std::min(t, (h - o[axis]) / dir[axis]);
    if (dir[axis] < 0) t = std::min(t, (-h - o[axis]) / dir[axis]);
  }
  if (!std::isfinite(t)) throw GeometryError("ray does not meet the outer boundary");
  return t;
}

}  // namespace casimir
