#pragma once

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "casimir/geometry.hpp"
#include "casimir/materials.hpp"
#include "casimir/spectral.hpp"

namespace casimir::fdfd {

using SparseMatrix = Eigen::SparseMatrix<double>;

enum class Component { x = 0, y = 1, z = 2 };

/// Two-dimensional Yee lattice. Nodes (i, j) sit at origin + (i, j) * spacing
/// for i in [0, nx], j in [0, ny] (j in [0, ny) when periodic in y). E_x lives
/// at (i+1/2, j), E_y at (i, j+1/2), E_z at (i, j); H_x at (i, j+1/2), H_y at
/// (i+1/2, j), H_z at (i+1/2, j+1/2).
struct YeeGrid {
  double spacing = 0;
  int nx = 0, ny = 0;
  Vec2 origin = Vec2::Zero();
  bool periodic_y = false;

  int ny_nodes() const { return periodic_y ? ny : ny + 1; }
  int wrap(int j) const { return periodic_y ? ((j % ny) + ny) % ny : j; }

  int e_count(Component c) const;
  int e_offset(Component c) const;
  int e_size() const { return e_offset(Component::z) + e_count(Component::z); }
  /// E index; (i, j) are the integer parts of the staggered position.
  int e_index(Component c, int i, int j) const;
  Vec2 e_position(Component c, int i, int j) const;

  int h_count(Component c) const;
  int h_offset(Component c) const;
  int h_size() const { return h_offset(Component::z) + h_count(Component::z); }
  int h_index(Component c, int i, int j) const;

  Vec2 node(int i, int j) const { return at(Vec2(i, j)); }
  /// Position of fractional lattice coordinates. When the origin is a whole
  /// number of cells the product is formed in cell units, so mirror-image
  /// points get exactly opposite coordinates and boundary ties break
  /// symmetrically.
  Vec2 at(const Vec2& cells) const;
  /// Component/lattice triple of every E unknown, in index order.
  void for_each_e(const std::function<void(Component, int, int, int)>& fn) const;
};

/// Discrete curl E -> H split as C = C0 + k_z C1, with E_z, H_x, H_y carried
/// with a factor i removed so both pieces are real.
struct CurlPieces {
  SparseMatrix c0;
  SparseMatrix c1;
};
CurlPieces curl_pieces(const YeeGrid& grid);

/// Integration measure for the transverse wavenumber.
enum class Measure {
  /// z-invariant cross-section: integrate k_z over [0, inf), force per unit length.
  cylinder,
  /// planar proxy, k is |k_parallel|: integrate k dk / 2pi, force per unit area.
  planar,
};

struct ContourPoint {
  int i, j;
  Vec2 normal;
  double weight;
};

struct GridOptions {
  double resolution = 16;  // cells per a
  bool averaging = false;
  int supersample = 4;
  std::optional<int> contour_offset;  // half-width in cells, auto when empty
};

/// Rasterized scene: Yee grid, PEC mask, inner-body fill fractions, stress
/// contour. The dielectric map is re-evaluated at each xi.
class GridScene {
 public:
  static GridScene from_scene(const Scene2D& scene, const MaterialLibrary& lib, const GridOptions& opt);

  /// PEC wall | fluid gap | slab | fluid gap | PEC wall along x, invariant in y.
  /// A missing slab material means a perfect-metal slab. Gaps and thickness
  /// must be integer multiples of the spacing.
  static GridScene plate_proxy(const DielectricModel& fluid, const std::optional<DielectricModel>& slab,
                               double left_gap, double thickness, double right_gap, double spacing,
                               bool averaging = true);

  /// Homogeneous-fluid counterpart on the identical grid and contour.
  GridScene reference() const;
  /// Same scene with a square contour of the given half-width (cells).
  GridScene with_contour(int half_width) const;
  /// Valid contour half-widths [lo, hi]; lo > hi when none fits.
  std::pair<int, int> contour_range() const;

  const YeeGrid& grid() const { return grid_; }
  const std::vector<ContourPoint>& contour() const { return contour_; }
  Measure measure() const { return measure_; }
  Vec2 torque_origin() const { return torque_origin_; }
  double length_scale() const { return length_scale_; }
  bool averaged() const { return averaged_; }
  int contour_half_width() const { return contour_half_width_; }
  int active_count() const { return int(active_dofs_.size()); }
  const std::vector<int>& active_dofs() const { return active_dofs_; }
  /// Full E index -> active index, -1 for eliminated (PEC) unknowns.
  const std::vector<int>& active_index() const { return active_index_; }
  /// Source normalization: cell area (2D) or cell length (planar proxy).
  double cell_measure() const;
  const DielectricModel& fluid() const { return fluid_; }

  /// eps(i xi) at each active unknown.
  Eigen::VectorXd eps_map(double xi) const;
  /// Short fingerprint of the rasterization, for manifests.
  std::string hash() const;

 private:
  GridScene() = default;
  void finalize_active(const std::vector<char>& pec);
  void build_contour(int half_width);
  bool clear_cell(int i, int j) const;

  YeeGrid grid_;
  std::vector<char> pec_;
  std::vector<double> fill_;  // inner-body fraction per E unknown
  std::vector<int> active_dofs_, active_index_;
  DielectricModel fluid_ = Constant{1.0};
  std::optional<DielectricModel> inner_;  // empty when absent or PEC
  bool has_inner_ = false;
  std::vector<ContourPoint> contour_;
  int center_i_ = 0, center_j_ = 0;
  int contour_half_width_ = 0;
  Measure measure_ = Measure::cylinder;
  Vec2 torque_origin_ = Vec2::Zero();
  double length_scale_ = 1;
  bool averaged_ = false;
  // predicates kept for contour clearance checks
  std::function<bool(const Vec2&)> in_inner_, in_pec_;
};

/// Real symmetric positive-definite operator C^T C + xi^2 eps on the
/// active unknowns, plus the curl restricted to them.
struct Operator {
  SparseMatrix matrix;
  SparseMatrix curl;  // H <- active E
  double xi = 0, kz = 0;
};

/// Throws AssemblyError when any of `probes` random vectors has a
/// nonpositive Rayleigh quotient.
void check_positive_definite(const SparseMatrix& a, int probes = 10, unsigned seed = 12345);

Operator assemble_operator(const GridScene& scene, double xi, double kz, bool probe = false);

enum class SolverKind { cholesky, conjugate_gradient };

struct SolverOptions {
  SolverKind kind = SolverKind::cholesky;
  double tolerance = 1e-8;
  int max_iterations = 20000;
};

/// Factorized (or preconditioned) SPD solve with a residual guarantee.
class SpdSolver {
 public:
  SpdSolver(const SparseMatrix& a, SolverOptions opt);
  ~SpdSolver();
  SpdSolver(SpdSolver&&) noexcept;
  SpdSolver& operator=(SpdSolver&&) noexcept;

  /// Solves A X = B column by column; throws SolverError when a column misses
  /// normwise backward error tolerance.
  Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const;
  /// Y with Y^T Y = B^T A^-1 B (Y = L^-1 P B), Cholesky only.
  std::optional<Eigen::MatrixXd> whiten(const Eigen::MatrixXd& b) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// E field (all unknowns, zeros on PEC) radiated by a unit point source at
/// the E unknown nearest `position` with orientation `c`: a column of the
/// discrete Green's function A^{-1} / cell_measure.
Eigen::VectorXd green_column(const GridScene& scene, const Operator& op, const SpdSolver& solver, Component c,
                             const Vec2& position);

/// Vacuum-subtracted stress density at one spectral node: (F_x, F_y, tau_z)
/// such that the total is the plain double integral of this over xi and k.
/// Includes the fluctuation-dissipation prefactor and the sign of the Wick
/// rotation.
Eigen::Vector3d stress_flux(const GridScene& scene, const GridScene& reference, double xi, double kz,
                            const SolverOptions& opt = {});

/// Unsubtracted contour flux (same normalization) of one scene.
Eigen::Vector3d raw_flux(const GridScene& scene, double xi, double kz, const SolverOptions& opt = {});

struct ForceTorque {
  /// (F_x, F_y, tau_z) in hbar*c/um^3, hbar*c/um^3, hbar*c/um^2 (per unit
  /// length), or per unit area for the planar proxy.
  Eigen::Vector3d value = Eigen::Vector3d::Zero();
  Eigen::Vector3d spectral_error = Eigen::Vector3d::Zero();
  /// |value(spacing) - value(2*spacing)|, when requested.
  std::optional<Eigen::Vector3d> resolution_error;

  Eigen::Vector3d error() const {
    return spectral_error + resolution_error.value_or(Eigen::Vector3d::Zero());
  }
};

struct ExactOptions {
  int n_xi = 16;
  int n_kz = 16;
  SolverOptions solver{};
  int workers = 1;
  bool spectral_error = true;
};

/// Force and torque by double quadrature of stress_flux over (xi, k).
ForceTorque casimir_force_torque(const GridScene& scene, const ExactOptions& opt);

/// As above, plus the resolution estimate from a second run at twice the
/// spacing (Scene2D-based scenes only).
ForceTorque casimir_force_torque(const Scene2D& scene, const MaterialLibrary& lib, const GridOptions& grid,
                                 const ExactOptions& opt, bool resolution_error = true);

/// Cross-check path for a nondispersive fluid with perfect-metal bodies:
/// the integrand over the (sqrt(eps) xi, k_z) quarter plane is
/// A(rho) cos^2(phi) + B(rho) sin^2(phi), so the angular integral needs only
/// two angles per radius. Throws DomainError for other scenes.
ForceTorque casimir_force_torque_absorbed(const GridScene& scene, int n_rho, const SolverOptions& solver = {},
                                          int workers = 1);

}  // namespace casimir::fdfd
