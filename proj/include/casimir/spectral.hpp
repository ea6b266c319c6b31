#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Core>

#include "casimir/errors.hpp"
#include "casimir/parallel.hpp"

namespace casimir {

/// Nodes and weights of a one-dimensional rule, nodes strictly increasing.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
};

/// n-point Gauss-Legendre rule on (0, 1).
QuadratureRule gauss_legendre(int n);

/// Gauss-Legendre rule mapped onto (0, inf) by x = scale * t / (1 - t).
QuadratureRule semi_infinite_rule(double scale, int n);

/// Tensor grid over imaginary frequency xi (c/um) and a transverse
/// wavenumber k (1/um), plus the embedded half-resolution companion used
/// for error estimates. Immutable once built.
struct SpectralGrid {
  double length_scale = 0;  // um
  QuadratureRule xi, k;
  QuadratureRule xi_half, k_half;

  int n_xi() const { return int(xi.size()); }
  int n_k() const { return int(k.size()); }
  std::string mapping() const;
};

/// Grid whose compactification scale 1/a tracks the exp(-2 kappa a) cutoff.
/// Requires a > 0 and n_xi, n_k >= 4.
SpectralGrid make_grid(double length_scale, int n_xi, int n_k);

template <typename T>
struct Estimate {
  T value;
  T error;
};

namespace detail {

template <typename T>
constexpr bool is_scalar_v = std::is_arithmetic_v<T>;

template <typename T>
T zero_like(const T& x) {
  if constexpr (is_scalar_v<T>)
    return T(0);
  else
    return T::Zero(x.rows(), x.cols());
}

template <typename T>
bool all_finite(const T& x) {
  if constexpr (is_scalar_v<T>)
    return std::isfinite(x);
  else
    return x.allFinite();
}

template <typename T>
T abs_of(const T& x) {
  if constexpr (is_scalar_v<T>)
    return std::abs(x);
  else
    return x.cwiseAbs();
}

}  // namespace detail

/// Neumaier-compensated running sum for scalars and Eigen arrays.
template <typename T>
class CompensatedSum {
 public:
  explicit CompensatedSum(const T& shape) : sum_(detail::zero_like(shape)), comp_(detail::zero_like(shape)) {}

  void add(const T& x) {
    if constexpr (detail::is_scalar_v<T>) {
      add_one(sum_, comp_, x);
    } else {
      for (Eigen::Index i = 0; i < x.size(); ++i) add_one(sum_.data()[i], comp_.data()[i], x.data()[i]);
    }
  }
  T value() const { return sum_ + comp_; }

 private:
  template <typename S>
  static void add_one(S& sum, S& comp, S x) {
    const S t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      comp += (sum - t) + x;
    else
      comp += (x - t) + sum;
    sum = t;
  }
  T sum_, comp_;
};

struct IntegrateOptions {
  int workers = 1;
  bool error_estimate = true;
};

namespace detail {

template <typename F>
auto tensor_sum(const QuadratureRule& xi, const QuadratureRule& k, F& f, int workers) {
  using T = std::decay_t<decltype(f(xi.nodes[0], k.nodes[0]))>;
  const std::size_t nk = k.size();
  std::vector<T> vals(xi.size() * nk);
  parallel_for(vals.size(), workers, [&](std::size_t idx) {
    const double x = xi.nodes[idx / nk], q = k.nodes[idx % nk];
    T v = f(x, q);
    if (!all_finite(v)) {
      std::ostringstream os;
      os << "integrand not finite at xi = " << x << ", k = " << q;
      throw IntegrandError(os.str(), x, q);
    }
    vals[idx] = std::move(v);
  });
  CompensatedSum<T> acc(vals.front());
  for (std::size_t idx = 0; idx < vals.size(); ++idx) {
    const double w = xi.weights[idx / nk] * k.weights[idx % nk];
    acc.add(T(w * vals[idx]));
  }
  return acc.value();
}

}  // namespace detail

/// Double integral of f(xi, k) over the grid. Summation runs in a fixed
/// node order regardless of worker count. The error estimate is the
/// difference to the half-resolution companion grid.
template <typename F>
auto integrate(const SpectralGrid& grid, F&& f, const IntegrateOptions& opt = {}) {
  auto value = detail::tensor_sum(grid.xi, grid.k, f, opt.workers);
  using T = decltype(value);
  if (!opt.error_estimate) return Estimate<T>{value, detail::zero_like(value)};
  auto half = detail::tensor_sum(grid.xi_half, grid.k_half, f, opt.workers);
  return Estimate<T>{value, T(detail::abs_of(T(value - half)))};
}

/// Single integral of f(xi) over the xi rule of the grid.
template <typename F>
auto integrate_xi(const SpectralGrid& grid, F&& f, const IntegrateOptions& opt = {}) {
  QuadratureRule unit{{0.0}, {1.0}};
  auto g = [&](double x, double) { return f(x); };
  auto value = detail::tensor_sum(grid.xi, unit, g, opt.workers);
  using T = decltype(value);
  if (!opt.error_estimate) return Estimate<T>{value, detail::zero_like(value)};
  auto half = detail::tensor_sum(grid.xi_half, unit, g, opt.workers);
  return Estimate<T>{value, T(detail::abs_of(T(value - half)))};
}

}  // namespace casimir
