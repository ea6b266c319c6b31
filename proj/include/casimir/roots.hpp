#pragma once

#include <cmath>
#include <optional>
#include <vector>

namespace casimir {

/// Bracket [lo, hi] with f(lo), f(hi) of opposite sign.
struct Bracket {
  double lo;
  double hi;
  double f_lo;
  double f_hi;
};

inline int sign_of(double v) { return (v > 0) - (v < 0); }

/// Plain bisection. Stops when hi - lo <= abs_tol + rel_tol*|mid|. In
/// log_scale mode the midpoint is geometric, which suits frequencies and
/// lengths spanning decades.
template <typename F>
Bracket bisect(F&& f, Bracket b, double rel_tol, double abs_tol = 0.0, bool log_scale = false,
               int max_iter = 300) {
  for (int it = 0; it < max_iter; ++it) {
    const double mid = log_scale ? std::sqrt(b.lo * b.hi) : 0.5 * (b.lo + b.hi);
    if (b.hi - b.lo <= abs_tol + rel_tol * std::abs(mid)) break;
    const double fm = f(mid);
    if (fm == 0.0) return {mid, mid, fm, fm};
    if (sign_of(fm) == sign_of(b.f_lo)) {
      b.lo = mid;
      b.f_lo = fm;
    } else {
      b.hi = mid;
      b.f_hi = fm;
    }
  }
  return b;
}

/// Scans n+1 points between lo and hi (linear or geometric) and returns the
/// first sub-interval across which f changes sign.
template <typename F>
std::optional<Bracket> first_sign_change(F&& f, double lo, double hi, int n, bool log_scale) {
  auto at = [&](int i) {
    const double t = double(i) / n;
    return log_scale ? lo * std::pow(hi / lo, t) : lo + (hi - lo) * t;
  };
  double x0 = lo, f0 = f(lo);
  for (int i = 1; i <= n; ++i) {
    const double x1 = i == n ? hi : at(i);
    const double f1 = f(x1);
    if (f0 == 0.0) return Bracket{x0, x0, f0, f0};
    if (sign_of(f0) * sign_of(f1) < 0) return Bracket{x0, x1, f0, f1};
    x0 = x1;
    f0 = f1;
  }
  if (f0 == 0.0) return Bracket{x0, x0, f0, f0};
  return std::nullopt;
}

/// As first_sign_change, over an explicit increasing list of points.
template <typename F>
std::optional<Bracket> first_sign_change_on(F&& f, const std::vector<double>& xs) {
  if (xs.empty()) return std::nullopt;
  double x0 = xs[0], f0 = f(x0);
  for (std::size_t i = 1; i < xs.size(); ++i) {
    const double f1 = f(xs[i]);
    if (f0 == 0.0) return Bracket{x0, x0, f0, f0};
    if (sign_of(f0) * sign_of(f1) < 0) return Bracket{x0, xs[i], f0, f1};
    x0 = xs[i];
    f0 = f1;
  }
  return std::nullopt;
}

}  // namespace casimir
