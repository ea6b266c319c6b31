#include "casimir/spectral.hpp"

#include <cmath>

#include "casimir/units.hpp"

namespace casimir {

QuadratureRule gauss_legendre(int n) {
  if (n < 1) throw DomainError("Gauss-Legendre rule needs n >= 1");
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  // Newton on P_n with the usual asymptotic starting guess; roots on [-1,1]
  // are produced in decreasing order, so fill from the back.
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(units::pi * (i + 0.75) / (n + 0.5));
    double dp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1, p1 = 0;
      for (int j = 1; j <= n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2 * j - 1) * z * p1 - (j - 1) * p2) / j;
      }
      dp = n * (z * p0 - p1) / (z * z - 1);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    // recompute derivative at the converged root
    double p0 = 1, p1 = 0;
    for (int j = 1; j <= n; ++j) {
      const double p2 = p1;
      p1 = p0;
      p0 = ((2 * j - 1) * z * p1 - (j - 1) * p2) / j;
    }
    dp = n * (z * p0 - p1) / (z * z - 1);
    const double w = 2 / ((1 - z * z) * dp * dp);
    // map [-1,1] -> (0,1)
    rule.nodes[n - 1 - i] = 0.5 * (1 + z);
    rule.nodes[i] = 0.5 * (1 - z);
    rule.weights[n - 1 - i] = 0.5 * w;
    rule.weights[i] = 0.5 * w;
  }
  return rule;
}

QuadratureRule semi_infinite_rule(double scale, int n) {
  QuadratureRule rule = gauss_legendre(n);
  for (int i = 0; i < n; ++i) {
    const double t = rule.nodes[i];
    rule.nodes[i] = scale * t / (1 - t);
    rule.weights[i] *= scale / ((1 - t) * (1 - t));
  }
  return rule;
}

SpectralGrid make_grid(double length_scale, int n_xi, int n_k) {
  if (!(length_scale > 0)) throw DomainError("spectral grid length scale must be positive");
  if (n_xi < 4 || n_k < 4) throw DomainError("spectral grid needs at least 4 nodes per axis");
  const double scale = 1.0 / length_scale;
  SpectralGrid g;
  g.length_scale = length_scale;
  g.xi = semi_infinite_rule(scale, n_xi);
  g.k = semi_infinite_rule(scale, n_k);
  g.xi_half = semi_infinite_rule(scale, n_xi / 2);
  g.k_half = semi_infinite_rule(scale, n_k / 2);
  return g;
}

std::string SpectralGrid::mapping() const {
  std::ostringstream os;
  os << "gauss-legendre t in (0,1), x = t/(1-t)/a, a = " << length_scale << " um";
  return os.str();
}

}  // namespace casimir
