#include <cmath>

#include <gtest/gtest.h>

#include "casimir/errors.hpp"
#include "casimir/lifshitz.hpp"

using namespace casimir;

namespace {

const double kPi = 3.14159265358979323846;

double ideal(double h) { return kPi * kPi / (240 * std::pow(h, 4)); }

double eps_nat(const DielectricModel& m, double xi) { return eval_eps(m, ImagFreq::natural(xi)).value(); }

// Independent oracle: trapezoid rule in (log xi, log k) with hand-written
// Fresnel factors for dielectric | fluid | perfect metal.
double trapezoid_pressure(const DielectricModel& left, const DielectricModel& fluid, double h, int n) {
  const double u0 = std::log(1e-9 / h), u1 = std::log(80 / h);
  const double du = (u1 - u0) / n;
  double total = 0;
  for (int i = 0; i <= n; ++i) {
    const double xi = std::exp(u0 + i * du);
    const double e1 = eps_nat(left, xi), ef = eps_nat(fluid, xi);
    for (int j = 0; j <= n; ++j) {
      const double k = std::exp(u0 + j * du);
      const double kf = std::sqrt(ef * xi * xi + k * k), k1 = std::sqrt(e1 * xi * xi + k * k);
      const double rte = (kf - k1) / (kf + k1), rtm = (e1 * kf - ef * k1) / (e1 * kf + ef * k1);
      const double e = std::exp(-2 * kf * h);
      // PEC on the right: r_TE = -1, r_TM = +1
      const double a = -rte * e, b = rtm * e;
      double f = kf * (a / (1 - a) + b / (1 - b)) * k;
      double w = du * du * xi * k;
      if (i == 0 || i == n) w *= 0.5;
      if (j == 0 || j == n) w *= 0.5;
      total += w * f;
    }
  }
  return total / (2 * kPi * kPi);
}

const auto pec = HalfStack::half_space(PerfectMetal{});

}  // namespace

TEST(Lifshitz, FresnelLimits) {
  const auto p = fresnel(Permittivity::finite(2.0), Permittivity::perfect_metal(), 1.0, 0.5);
  EXPECT_EQ(p.te, -1.0);
  EXPECT_EQ(p.tm, 1.0);
  const auto same = fresnel(Permittivity::finite(3.0), Permittivity::finite(3.0), 1.0, 0.5);
  EXPECT_EQ(same.te, 0.0);
  EXPECT_EQ(same.tm, 0.0);
  // normal incidence: TE and TM magnitudes agree
  const auto n = fresnel(Permittivity::finite(1.0), Permittivity::finite(4.0), 1.0, 0.0);
  EXPECT_NEAR(n.te, -n.tm, 1e-15);
  EXPECT_NEAR(n.te, (1.0 - 2.0) / (1.0 + 2.0), 1e-15);
}

TEST(Lifshitz, IdealMetalLimit) {
  for (double h : {0.1, 1.0, 3.0}) {
    const auto p = gap_pressure(pec, pec, Constant{1.0}, h);
    EXPECT_NEAR(p.value, ideal(h), 1e-6 * ideal(h)) << "h=" << h;
  }
  // a nondispersive fluid only rescales frequencies: P = P_vac / sqrt(eps)
  const auto p = gap_pressure(pec, pec, Constant{4.0}, 1.0);
  EXPECT_NEAR(p.value, ideal(1.0) / 2, 1e-6 * ideal(1.0));
}

TEST(Lifshitz, AgreesWithTrapezoidOracle) {
  for (double h : {0.05, 1.0}) {
    const double ref = trapezoid_pressure(Constant{2.0}, Constant{5.0}, h, 1200);
    const auto p = gap_pressure(HalfStack::half_space(Constant{2.0}), pec, Constant{5.0}, h);
    EXPECT_NEAR(p.value, ref, 1e-4 * std::abs(ref)) << "h=" << h;
  }
  const auto eth = materials::ethanol(), sio = materials::silica();
  for (double h : {0.01, 0.05, 0.3}) {
    const double ref = trapezoid_pressure(sio, eth, h, 1200);
    const auto p = gap_pressure(HalfStack::half_space(sio), pec, eth, h);
    EXPECT_NEAR(p.value, ref, 1e-4 * std::abs(ref)) << "h=" << h;
  }
}

TEST(Lifshitz, DielectricOrderingSetsTheSign) {
  const auto eth = materials::ethanol(), sio = materials::silica();
  // eps_sio2 < eps_ethanol < eps_pec at low xi: repulsive at large gaps
  EXPECT_LT(gap_pressure(HalfStack::half_space(sio), pec, eth, 0.1).value, 0);
  EXPECT_LT(gap_pressure(HalfStack::half_space(sio), pec, eth, 1.0).value, 0);
  // the high-frequency ordering takes over at small gaps
  EXPECT_GT(gap_pressure(HalfStack::half_space(sio), pec, eth, 0.008).value, 0);
  // identical half spaces always attract
  EXPECT_GT(gap_pressure(HalfStack::half_space(sio), HalfStack::half_space(sio), eth, 0.1).value, 0);
}

TEST(Lifshitz, StackLimits) {
  const auto eth = materials::ethanol(), sio = materials::silica();
  const double h = 0.05;
  const double half = gap_pressure(HalfStack::half_space(sio), pec, eth, h).value;
  // a thick layer looks like a half space
  const HalfStack thick{{{sio, 50.0}}, eth};
  EXPECT_NEAR(gap_pressure(thick, pec, eth, h).value, half, 1e-9 * std::abs(half));
  // a layer of the fluid itself just widens the gap
  const HalfStack ghost{{{eth, 0.03}}, sio};
  const double wide = gap_pressure(HalfStack::half_space(sio), pec, eth, h + 0.03).value;
  EXPECT_NEAR(gap_pressure(ghost, pec, eth, h, 128, 128).value, wide, 1e-6 * std::abs(wide));
  // anything behind a perfect-metal layer is hidden
  const HalfStack hidden{{{PerfectMetal{}, 0.1}, {sio, 0.2}}, eth};
  EXPECT_EQ(gap_pressure(hidden, pec, eth, h).value, gap_pressure(pec, pec, eth, h).value);
  // a thin film in front of a perfect metal approaches the bare metal
  const HalfStack film{{{sio, 1e-7}}, PerfectMetal{}};
  const double bare = gap_pressure(pec, pec, eth, h).value;
  EXPECT_NEAR(gap_pressure(film, pec, eth, h).value, bare, 1e-4 * bare);
  // full stack bookkeeping
  const LayerStack st(PerfectMetal{}, {{eth, 0.1}, {sio, 0.04}, {eth, 0.2}}, PerfectMetal{});
  EXPECT_EQ(st.left_of(2).layers.size(), 2u);
  EXPECT_EQ(st.right_of(0).layers.size(), 2u);
  EXPECT_THROW(LayerStack(PerfectMetal{}, {{eth, 0.0}}, PerfectMetal{}), DomainError);
  EXPECT_THROW(st.left_of(3), DomainError);
}

TEST(Lifshitz, SlabForceSymmetry) {
  SlabSetup s{PerfectMetal{}, materials::ethanol(), materials::silica()};
  EXPECT_EQ(slab_force(s, 0.0).value, 0.0);
  for (double d : {0.1, 0.5, 0.9}) {
    EXPECT_EQ(slab_force(s, d).value, -slab_force(s, -d).value);
  }
  EXPECT_THROW(slab_force(s, 1.0), ContactError);
  EXPECT_THROW(slab_force(s, -1.2), ContactError);
  EXPECT_NEAR(s.slab_thickness(), 2 * 0.0955 * 0.25 / 0.75, 1e-15);
}

TEST(Lifshitz, SlabCouplingsAgreeForThickGaps) {
  // with perfect-metal walls and a wide far gap the coupling model barely matters
  SlabSetup s{PerfectMetal{}, Constant{1.0}, PerfectMetal{}};
  s.a = 1.0;
  const double indep = slab_force(s, 0.5).value;
  s.coupling = SlabCoupling::full_stack;
  const double full = slab_force(s, 0.5).value;
  EXPECT_NEAR(indep, full, 1e-9 * std::abs(full));
  EXPECT_NEAR(full, ideal(0.5) - ideal(1.5), 1e-6 * ideal(0.5));
}

TEST(Lifshitz, ScanPointsAreSortedAndInside) {
  const auto pts = displacement_scan_points(1e-3);
  ASSERT_FALSE(pts.empty());
  for (std::size_t i = 1; i < pts.size(); ++i) EXPECT_LT(pts[i - 1], pts[i]);
  EXPECT_GE(pts.front(), 1e-3);
  EXPECT_LE(pts.back(), 1 - 1e-3);
}

TEST(Lifshitz, RejectsNonPositiveGap) {
  EXPECT_THROW(gap_pressure(pec, pec, Constant{1.0}, 0.0), DomainError);
  EXPECT_THROW(gap_pressure(pec, pec, PerfectMetal{}, 1.0), DomainError);
}
