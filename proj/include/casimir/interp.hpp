#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace casimir {

/// Monotone piecewise-cubic Hermite interpolant (Fritsch-Carlson slopes).
/// Never overshoots the data between samples, so monotone data stays
/// monotone and positive data stays positive.
template <typename Scalar = double>
class MonotoneCubic {
 public:
  MonotoneCubic() = default;

  MonotoneCubic(std::span<const Scalar> x, std::span<const Scalar> y)
      : x_(x.begin(), x.end()), y_(y.begin(), y.end()) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n)
      throw std::invalid_argument("MonotoneCubic: need >= 2 matching samples");
    for (std::size_t i = 1; i < n; ++i)
      if (!(x_[i] > x_[i - 1]))
        throw std::invalid_argument("MonotoneCubic: abscissae must strictly increase");

    std::vector<Scalar> h(n - 1), delta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      h[i] = x_[i + 1] - x_[i];
      delta[i] = (y_[i + 1] - y_[i]) / h[i];
    }
    slope_.assign(n, Scalar(0));
    if (n == 2) {
      slope_[0] = slope_[1] = delta[0];
      return;
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
      if (delta[i - 1] * delta[i] <= 0) continue;
      // weighted harmonic mean
      const Scalar w1 = 2 * h[i] + h[i - 1];
      const Scalar w2 = h[i] + 2 * h[i - 1];
      slope_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
    }
    slope_[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    slope_[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
  }

  Scalar front() const { return x_.front(); }
  Scalar back() const { return x_.back(); }
  bool contains(Scalar x) const { return x >= x_.front() && x <= x_.back(); }

  Scalar operator()(Scalar x) const {
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    std::size_t i = it == x_.begin() ? 0 : std::size_t(it - x_.begin()) - 1;
    i = std::min(i, x_.size() - 2);
    const Scalar h = x_[i + 1] - x_[i];
    const Scalar t = (x - x_[i]) / h;
    const Scalar t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * y_[i] + (t3 - 2 * t2 + t) * h * slope_[i] +
           (-2 * t3 + 3 * t2) * y_[i + 1] + (t3 - t2) * h * slope_[i + 1];
  }

 private:
  // three-point end formula, limited to preserve shape
  static Scalar end_slope(Scalar h0, Scalar h1, Scalar d0, Scalar d1) {
    Scalar d = ((2 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (d * d0 <= 0) return 0;
    if (d0 * d1 <= 0 && std::abs(d) > std::abs(3 * d0)) return 3 * d0;
    return d;
  }

  std::vector<Scalar> x_, y_, slope_;
};

}  // namespace casimir
