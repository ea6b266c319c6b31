#pragma once

#include <optional>
#include <vector>

#include "casimir/materials.hpp"
#include "casimir/spectral.hpp"

namespace casimir {

/// Imaginary-frequency reflection amplitudes for one interface or stack.
struct FresnelPair {
  double te;
  double tm;
};

/// Fresnel coefficients for light in medium 1 hitting medium 2, with xi in
/// c/um and k the in-plane wavenumber in 1/um. A perfect metal as medium 2
/// yields exactly (-1, +1).
FresnelPair fresnel(Permittivity eps1, Permittivity eps2, double xi, double k);

struct Layer {
  DielectricModel material;
  double thickness;  // um
};

/// One side of a gap, listed from the gap outward and terminated by a
/// semi-infinite medium.
struct HalfStack {
  std::vector<Layer> layers;
  DielectricModel backing;

  static HalfStack half_space(DielectricModel m) { return {{}, std::move(m)}; }
};

/// Planar multilayer: semi-infinite ends with finite interior layers.
class LayerStack {
 public:
  LayerStack(DielectricModel left, std::vector<Layer> interior, DielectricModel right);

  std::size_t interior_count() const { return interior_.size(); }
  const Layer& interior(std::size_t i) const { return interior_.at(i); }

  /// Everything left of interior layer i, seen from inside layer i.
  HalfStack left_of(std::size_t i) const;
  /// Everything right of interior layer i, seen from inside layer i.
  HalfStack right_of(std::size_t i) const;

 private:
  DielectricModel left_, right_;
  std::vector<Layer> interior_;
};

/// Effective reflection of a half stack seen from `medium`, composed
/// recursively from the far end inward.
FresnelPair stack_reflection(const DielectricModel& medium, const HalfStack& side, double xi, double k);

/// Lifshitz pressure across a gap of width h (um) filled with `fluid`,
/// in hbar*c/um^4. Positive means attractive.
Estimate<double> gap_pressure(const HalfStack& left, const HalfStack& right, const DielectricModel& fluid,
                              double h, const SpectralGrid& grid, const IntegrateOptions& opt = {});

/// Same, on a grid scaled to h with the given node counts.
Estimate<double> gap_pressure(const HalfStack& left, const HalfStack& right, const DielectricModel& fluid,
                              double h, int n_xi = 64, int n_k = 64);

/// Pressure in interior layer `gap` of a full stack, using the exact
/// reflections of everything on each side.
Estimate<double> gap_pressure(const LayerStack& stack, std::size_t gap, int n_xi = 64, int n_k = 64);

enum class SlabCoupling {
  /// Each gap sees the finite slab backed by fluid and the near wall.
  independent,
  /// Each gap sees the full remaining stack (slab, far gap, far wall).
  full_stack,
};

/// wall | fluid | slab | fluid | wall with walls a distance D apart and a slab
/// of thickness s centred when d = 0; a = (D - s)/2.
struct SlabSetup {
  DielectricModel wall;
  DielectricModel fluid;
  DielectricModel slab;
  double s_over_D = 0.25;
  double a = 0.0955;  // um
  SlabCoupling coupling = SlabCoupling::independent;
  int n_xi = 64;
  int n_k = 64;

  double slab_thickness() const { return 2 * a * s_over_D / (1 - s_over_D); }
};

/// Force per area on the slab along +x (hbar*c/um^4) at displacement d
/// (fraction of a). The gaps are a(1-d) on the right and a(1+d) on the left.
/// Antisymmetric in d by construction. Throws ContactError for |d| >= 1.
Estimate<double> slab_force(const SlabSetup& setup, double d);

/// First d in (0, 1 - delta) where slab_force changes sign, refined by
/// bisection to 1e-6; none when the sign never changes.
std::optional<double> find_critical_displacement(const SlabSetup& setup, double delta = 1e-3);

/// Sample points in (delta, 1 - delta) used for sign scans in d: linear
/// spacing plus geometric refinement towards contact.
std::vector<double> displacement_scan_points(double delta, int n = 48);

}  // namespace casimir
