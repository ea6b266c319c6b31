#pragma once

#include <optional>

#include "casimir/geometry.hpp"
#include "casimir/interp.hpp"
#include "casimir/lifshitz.hpp"

namespace casimir {

/// Planar half-space pressure P(h) for inner | fluid | outer, memoized on a
/// log-spaced grid and interpolated monotonically in (log h, P h^4).
/// Outside the tabulated range it falls back to direct evaluation.
struct PressureProfileOptions {
  int points = 200;
  int n_xi = 64;
  int n_k = 64;
};

class PressureProfile {
 public:
  using Options = PressureProfileOptions;

  PressureProfile(DielectricModel inner, DielectricModel fluid, DielectricModel outer, double h_min,
                  double h_max, Options opt = {});

  /// Default range [1e-3 a, 1e2 a].
  static PressureProfile for_lengthscale(const DielectricModel& inner, const DielectricModel& fluid,
                                         const DielectricModel& outer, double a, Options opt = {});

  /// hbar*c/um^4, positive = attractive.
  double operator()(double h) const;
  double direct(double h) const;
  double h_min() const { return h_min_; }
  double h_max() const { return h_max_; }

 private:
  DielectricModel inner_, fluid_, outer_;
  Options opt_;
  double h_min_, h_max_;
  MonotoneCubic<double> scaled_;  // log h -> P h^4
};

/// PFA force per unit z-length on the inner body (hbar*c/um^3). Each
/// boundary element feels P(h) along its outward normal, h measured along
/// that normal to the outer wall; attraction pulls the element outward.
Vec2 pfa_force(const Scene2D& scene, const PressureProfile& profile, int n);

/// PFA torque per unit z-length about the inner centroid (hbar*c/um^2).
double pfa_torque(const Scene2D& scene, const PressureProfile& profile, int n);

struct TorqueStiffness {
  double tau_plus;   // hbar*c/um^2 at theta + dtheta
  double tau_minus;  // at theta - dtheta
  /// d tau / d theta per radian, in units of hbar*c/a^2. Positive means the
  /// base orientation is unstable.
  double dimensionless;
};

/// Central difference [tau(theta+dt) - tau(theta-dt)] / (2 dt) around the
/// scene's theta.
TorqueStiffness torque_stiffness(const Scene2D& scene, const PressureProfile& profile, int n,
                                 double dtheta_deg = 1.0);

/// Square-in-square family for orientation studies.
struct SquarePfaSetup {
  DielectricModel inner;
  DielectricModel fluid;
  DielectricModel outer;
  double s_over_D = 0.25;
  int samples = 400;
  double dtheta_deg = 1.0;
  PressureProfile::Options profile{};

  Scene2D scene(double a, double theta_deg = 0) const;
  PressureProfile profile_for(double a) const;
  TorqueStiffness stiffness_at(double a) const;
};

struct OrientationTransition {
  double a_lo, a_hi;  // final bracket, um
  double stiffness_lo, stiffness_hi;
  double a_c() const { return std::sqrt(a_lo * a_hi); }
};

/// Bisection (geometric, 1% in a) on the sign of the theta = 0 stiffness.
/// Empty when the stiffness has the same sign at both ends.
std::optional<OrientationTransition> find_orientation_transition(const SquarePfaSetup& setup, double a_lo,
                                                                 double a_hi, double rel_tol = 0.01);

}  // namespace casimir
