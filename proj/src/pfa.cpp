#include "casimir/pfa.hpp"

#include <cmath>

#include "casimir/errors.hpp"
#include "casimir/roots.hpp"
#include "casimir/units.hpp"

namespace casimir {

PressureProfile::PressureProfile(DielectricModel inner, DielectricModel fluid, DielectricModel outer,
                                 double h_min, double h_max, Options opt)
    : inner_(std::move(inner)), fluid_(std::move(fluid)), outer_(std::move(outer)), opt_(opt), h_min_(h_min),
      h_max_(h_max) {
  if (!(h_min > 0) || !(h_max > h_min)) throw DomainError("pressure profile needs 0 < h_min < h_max");
  if (opt.points < 4) throw DomainError("pressure profile needs at least 4 points");
  std::vector<double> lx(opt.points), gy(opt.points);
  for (int i = 0; i < opt.points; ++i) {
    lx[i] = std::log(h_min) + (std::log(h_max) - std::log(h_min)) * i / (opt.points - 1);
    const double h = std::exp(lx[i]);
    gy[i] = direct(h) * h * h * h * h;
  }
  scaled_ = MonotoneCubic<double>(lx, gy);
}

PressureProfile PressureProfile::for_lengthscale(const DielectricModel& inner, const DielectricModel& fluid,
                                                 const DielectricModel& outer, double a, Options opt) {
  return PressureProfile(inner, fluid, outer, 1e-3 * a, 1e2 * a, opt);
}

double PressureProfile::direct(double h) const {
  return gap_pressure(HalfStack::half_space(inner_), HalfStack::half_space(outer_), fluid_, h, opt_.n_xi,
                      opt_.n_k)
      .value;
}

double PressureProfile::operator()(double h) const {
  if (!(h > 0)) throw DomainError("pressure profile queried at nonpositive separation");
  if (h < h_min_ || h > h_max_) return direct(h);
  const double h2 = h * h;
  return scaled_(std::log(h)) / (h2 * h2);
}

namespace {

struct Elements {
  std::vector<BoundarySample> samples;
  std::vector<double> pressure;
};

Elements evaluate(const Scene2D& scene, const PressureProfile& profile, int n) {
  if (scene.in_contact()) throw ContactError("inner body touches the outer boundary");
  Elements e;
  e.samples = discretize_boundary(scene.inner, n, scene.inner_pose());
  e.pressure.reserve(e.samples.size());
  for (const auto& s : e.samples) e.pressure.push_back(profile(ray_to_outer(scene, s.point, s.normal)));
  return e;
}

}  // namespace

Vec2 pfa_force(const Scene2D& scene, const PressureProfile& profile, int n) {
  const auto e = evaluate(scene, profile, n);
  Vec2 f = Vec2::Zero();
  for (std::size_t i = 0; i < e.samples.size(); ++i) f += e.pressure[i] * e.samples[i].weight * e.samples[i].normal;
  return f;
}

double pfa_torque(const Scene2D& scene, const PressureProfile& profile, int n) {
  const auto e = evaluate(scene, profile, n);
  const Vec2 c = scene.centroid();
  double tau = 0;
  for (std::size_t i = 0; i < e.samples.size(); ++i) {
    const Vec2 r = e.samples[i].point - c;
    const Vec2 df = e.pressure[i] * e.samples[i].weight * e.samples[i].normal;
    tau += r.x() * df.y() - r.y() * df.x();
  }
  return tau;
}

TorqueStiffness torque_stiffness(const Scene2D& scene, const PressureProfile& profile, int n, double dtheta_deg) {
  if (!(dtheta_deg > 0)) throw DomainError("stiffness step must be positive");
  Scene2D plus = scene, minus = scene;
  plus.theta_deg += dtheta_deg;
  minus.theta_deg -= dtheta_deg;
  TorqueStiffness out;
  out.tau_plus = pfa_torque(plus, profile, n);
  out.tau_minus = pfa_torque(minus, profile, n);
  const double dtheta = dtheta_deg * units::pi / 180.0;
  const double a = scene.a();
  out.dimensionless = (out.tau_plus - out.tau_minus) / (2 * dtheta) * a * a;
  return out;
}

Scene2D SquarePfaSetup::scene(double a, double theta_deg) const {
  return make_scene(Square{1}, Square{1}, a, s_over_D, 0.0, theta_deg);
}

PressureProfile SquarePfaSetup::profile_for(double a) const {
  return PressureProfile::for_lengthscale(inner, fluid, outer, a, profile);
}

TorqueStiffness SquarePfaSetup::stiffness_at(double a) const {
  return torque_stiffness(scene(a), profile_for(a), samples, dtheta_deg);
}

std::optional<OrientationTransition> find_orientation_transition(const SquarePfaSetup& setup, double a_lo,
                                                                 double a_hi, double rel_tol) {
  if (!(a_lo > 0) || !(a_hi > a_lo)) throw DomainError("transition scan needs 0 < a_lo < a_hi");
  auto f = [&](double a) { return setup.stiffness_at(a).dimensionless; };
  Bracket b{a_lo, a_hi, f(a_lo), f(a_hi)};
  if (sign_of(b.f_lo) * sign_of(b.f_hi) >= 0) return std::nullopt;
  b = bisect(f, b, rel_tol, 0.0, true);
  return OrientationTransition{b.lo, b.hi, b.f_lo, b.f_hi};
}

}  // namespace casimir
