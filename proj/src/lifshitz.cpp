#include "casimir/lifshitz.hpp"

#include <algorithm>
#include <cmath>

#include "casimir/errors.hpp"
#include "casimir/roots.hpp"
#include "casimir/units.hpp"

namespace casimir {

namespace {

double kappa(double eps, double xi, double k) { return std::sqrt(eps * xi * xi + k * k); }

Permittivity eps_at(const DielectricModel& m, double xi) { return eval_eps(m, ImagFreq::natural(xi)); }

}  // namespace

FresnelPair fresnel(Permittivity eps1, Permittivity eps2, double xi, double k) {
  if (!(xi > 0) || k < 0) throw DomainError("fresnel needs xi > 0 and k >= 0");
  if (eps1.is_perfect_metal()) throw DomainError("incident medium cannot be a perfect metal");
  if (eps2.is_perfect_metal()) return {-1.0, 1.0};
  const double e1 = eps1.value(), e2 = eps2.value();
  const double k1 = kappa(e1, xi, k), k2 = kappa(e2, xi, k);
  return {(k1 - k2) / (k1 + k2), (e2 * k1 - e1 * k2) / (e2 * k1 + e1 * k2)};
}

LayerStack::LayerStack(DielectricModel left, std::vector<Layer> interior, DielectricModel right)
    : left_(std::move(left)), right_(std::move(right)), interior_(std::move(interior)) {
  for (const auto& l : interior_)
    if (!(l.thickness > 0) || !std::isfinite(l.thickness))
      throw DomainError("interior layer thickness must be positive and finite");
}

HalfStack LayerStack::left_of(std::size_t i) const {
  if (i >= interior_.size()) throw DomainError("layer index out of range");
  HalfStack side{{}, left_};
  for (std::size_t j = i; j-- > 0;) side.layers.push_back(interior_[j]);
  return side;
}

HalfStack LayerStack::right_of(std::size_t i) const {
  if (i >= interior_.size()) throw DomainError("layer index out of range");
  HalfStack side{{}, right_};
  for (std::size_t j = i + 1; j < interior_.size(); ++j) side.layers.push_back(interior_[j]);
  return side;
}

FresnelPair stack_reflection(const DielectricModel& medium, const HalfStack& side_in, double xi, double k) {
  // nothing behind a perfect-metal layer is visible: it becomes the backing
  HalfStack side;
  side.backing = side_in.backing;
  for (const auto& l : side_in.layers) {
    if (std::holds_alternative<PerfectMetal>(l.material)) {
      side.backing = PerfectMetal{};
      break;
    }
    side.layers.push_back(l);
  }
  // innermost-out: start at the backing interface and walk toward the gap
  const std::size_t n = side.layers.size();
  auto medium_before = [&](std::size_t i) { return i == 0 ? eps_at(medium, xi) : eps_at(side.layers[i - 1].material, xi); };

  if (n == 0) return fresnel(eps_at(medium, xi), eps_at(side.backing, xi), xi, k);

  FresnelPair r = fresnel(eps_at(side.layers[n - 1].material, xi), eps_at(side.backing, xi), xi, k);
  for (std::size_t i = n; i-- > 0;) {
    const Permittivity inside = eps_at(side.layers[i].material, xi);
    const FresnelPair r12 = fresnel(medium_before(i), inside, xi, k);
    const double damp = std::exp(-2 * kappa(inside.value(), xi, k) * side.layers[i].thickness);
    r.te = (r12.te + r.te * damp) / (1 + r12.te * r.te * damp);
    r.tm = (r12.tm + r.tm * damp) / (1 + r12.tm * r.tm * damp);
  }
  return r;
}

Estimate<double> gap_pressure(const HalfStack& left, const HalfStack& right, const DielectricModel& fluid,
                              double h, const SpectralGrid& grid, const IntegrateOptions& opt) {
  if (!(h > 0)) throw DomainError("gap width must be positive");
  if (eval_eps(fluid, ImagFreq::natural(1.0)).is_perfect_metal())
    throw DomainError("gap medium cannot be a perfect metal");
  auto integrand = [&](double xi, double k) {
    const double ef = eps_at(fluid, xi).value();
    const double kf = kappa(ef, xi, k);
    const double damp = std::exp(-2 * kf * h);
    const FresnelPair r1 = stack_reflection(fluid, left, xi, k);
    const FresnelPair r2 = stack_reflection(fluid, right, xi, k);
    double sum = 0;
    for (const double rr : {r1.te * r2.te, r1.tm * r2.tm}) {
      const double x = rr * damp;
      if (x >= 1) throw ConsistencyError("round-trip gain r1*r2*exp(-2 kappa h) >= 1");
      sum += x / (1 - x);
    }
    return k * kf * sum;
  };
  auto est = integrate(grid, integrand, opt);
  const double pref = 1.0 / (2 * units::pi * units::pi);
  return {pref * est.value, pref * est.error};
}

Estimate<double> gap_pressure(const HalfStack& left, const HalfStack& right, const DielectricModel& fluid,
                              double h, int n_xi, int n_k) {
  if (!(h > 0)) throw DomainError("gap width must be positive");
  return gap_pressure(left, right, fluid, h, make_grid(h, n_xi, n_k));
}

Estimate<double> gap_pressure(const LayerStack& stack, std::size_t gap, int n_xi, int n_k) {
  const Layer& g = stack.interior(gap);
  return gap_pressure(stack.left_of(gap), stack.right_of(gap), g.material, g.thickness, n_xi, n_k);
}

namespace {

// Attractive pressure in the gap of width `near` as seen by the slab, with
// the opposite gap `far` wide.
Estimate<double> side_pressure(const SlabSetup& s, double near, double far) {
  const double t = s.slab_thickness();
  HalfStack slab_side;
  if (s.coupling == SlabCoupling::independent)
    slab_side = HalfStack{{Layer{s.slab, t}}, s.fluid};
  else
    slab_side = HalfStack{{Layer{s.slab, t}, Layer{s.fluid, far}}, s.wall};
  return gap_pressure(slab_side, HalfStack::half_space(s.wall), s.fluid, near, s.n_xi, s.n_k);
}

}  // namespace

Estimate<double> slab_force(const SlabSetup& setup, double d) {
  if (!(std::abs(d) < 1)) throw ContactError("slab touches a wall (|d| >= 1)");
  if (!(setup.a > 0)) throw DomainError("lengthscale a must be positive");
  if (!(setup.s_over_D > 0 && setup.s_over_D < 1)) throw DomainError("s/D must lie in (0, 1)");
  if (d == 0) return {0.0, 0.0};
  const double right = setup.a * (1 - d), left = setup.a * (1 + d);
  const auto pr = side_pressure(setup, right, left);
  const auto pl = side_pressure(setup, left, right);
  return {pr.value - pl.value, pr.error + pl.error};
}

std::vector<double> displacement_scan_points(double delta, int n) {
  std::vector<double> xs;
  for (int i = 0; i <= n; ++i) xs.push_back(delta + (1 - 2 * delta) * double(i) / n);
  // geometric in the remaining gap 1 - d, from 1/2 down to delta
  for (int i = 0; i <= n; ++i) xs.push_back(1 - 0.5 * std::pow(2 * delta, double(i) / n));
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  return xs;
}

std::optional<double> find_critical_displacement(const SlabSetup& setup, double delta) {
  auto f = [&](double d) { return slab_force(setup, d).value; };
  const auto br = first_sign_change_on(f, displacement_scan_points(delta));
  if (!br) return std::nullopt;
  const auto root = bisect(f, *br, 0.0, 1e-6);
  return 0.5 * (root.lo + root.hi);
}

}  // namespace casimir
