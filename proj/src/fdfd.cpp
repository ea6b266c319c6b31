#include "casimir/fdfd.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include "casimir/errors.hpp"
#include "casimir/units.hpp"

namespace casimir::fdfd {

using Triplet = Eigen::Triplet<double>;

// ---------------------------------------------------------------- lattice

int YeeGrid::e_count(Component c) const {
  switch (c) {
    case Component::x: return nx * ny_nodes();
    case Component::y: return (nx + 1) * ny;
    case Component::z: return (nx + 1) * ny_nodes();
  }
  return 0;
}

int YeeGrid::e_offset(Component c) const {
  switch (c) {
    case Component::x: return 0;
    case Component::y: return e_count(Component::x);
    case Component::z: return e_count(Component::x) + e_count(Component::y);
  }
  return 0;
}

int YeeGrid::e_index(Component c, int i, int j) const {
  switch (c) {
    case Component::x: return e_offset(c) + i * ny_nodes() + wrap(j);
    case Component::y: return e_offset(c) + i * ny + wrap(j);
    case Component::z: return e_offset(c) + i * ny_nodes() + wrap(j);
  }
  return -1;
}

Vec2 YeeGrid::at(const Vec2& cells) const {
  Vec2 o = origin / spacing;
  const Vec2 r = o.array().round().matrix();
  if ((o - r).cwiseAbs().maxCoeff() < 1e-9) return spacing * (cells + r);
  return origin + spacing * cells;
}

Vec2 YeeGrid::e_position(Component c, int i, int j) const {
  switch (c) {
    case Component::x: return at(Vec2(i + 0.5, j));
    case Component::y: return at(Vec2(i, j + 0.5));
    case Component::z: return at(Vec2(i, j));
  }
  return origin;
}

int YeeGrid::h_count(Component c) const {
  switch (c) {
    case Component::x: return (nx + 1) * ny;
    case Component::y: return nx * ny_nodes();
    case Component::z: return nx * ny;
  }
  return 0;
}

int YeeGrid::h_offset(Component c) const {
  switch (c) {
    case Component::x: return 0;
    case Component::y: return h_count(Component::x);
    case Component::z: return h_count(Component::x) + h_count(Component::y);
  }
  return 0;
}

int YeeGrid::h_index(Component c, int i, int j) const {
  switch (c) {
    case Component::x: return h_offset(c) + i * ny + wrap(j);
    case Component::y: return h_offset(c) + i * ny_nodes() + wrap(j);
    case Component::z: return h_offset(c) + i * ny + wrap(j);
  }
  return -1;
}

void YeeGrid::for_each_e(const std::function<void(Component, int, int, int)>& fn) const {
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny_nodes(); ++j) fn(Component::x, i, j, e_index(Component::x, i, j));
  for (int i = 0; i <= nx; ++i)
    for (int j = 0; j < ny; ++j) fn(Component::y, i, j, e_index(Component::y, i, j));
  for (int i = 0; i <= nx; ++i)
    for (int j = 0; j < ny_nodes(); ++j) fn(Component::z, i, j, e_index(Component::z, i, j));
}

CurlPieces curl_pieces(const YeeGrid& g) {
  const double inv = 1.0 / g.spacing;
  std::vector<Triplet> t0, t1;
  using C = Component;
  // H~x = dEz~/dy - kz Ey
  for (int i = 0; i <= g.nx; ++i)
    for (int j = 0; j < g.ny; ++j) {
      const int r = g.h_index(C::x, i, j);
      t0.emplace_back(r, g.e_index(C::z, i, j + 1), inv);
      t0.emplace_back(r, g.e_index(C::z, i, j), -inv);
      t1.emplace_back(r, g.e_index(C::y, i, j), -1.0);
    }
  // H~y = kz Ex - dEz~/dx
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny_nodes(); ++j) {
      const int r = g.h_index(C::y, i, j);
      t1.emplace_back(r, g.e_index(C::x, i, j), 1.0);
      t0.emplace_back(r, g.e_index(C::z, i + 1, j), -inv);
      t0.emplace_back(r, g.e_index(C::z, i, j), inv);
    }
  // Hz = dEy/dx - dEx/dy
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j) {
      const int r = g.h_index(C::z, i, j);
      t0.emplace_back(r, g.e_index(C::y, i + 1, j), inv);
      t0.emplace_back(r, g.e_index(C::y, i, j), -inv);
      t0.emplace_back(r, g.e_index(C::x, i, j + 1), -inv);
      t0.emplace_back(r, g.e_index(C::x, i, j), inv);
    }
  CurlPieces out;
  out.c0.resize(g.h_size(), g.e_size());
  out.c1.resize(g.h_size(), g.e_size());
  out.c0.setFromTriplets(t0.begin(), t0.end());
  out.c1.setFromTriplets(t1.begin(), t1.end());
  return out;
}

// ---------------------------------------------------------------- scenes

namespace {

double fill_fraction(const std::function<bool(const Vec2&)>& inside, const Vec2& p, double h, int m) {
  if (m <= 1) return inside(p) ? 1.0 : 0.0;
  int count = 0;
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      const Vec2 q = p + h * Vec2((a + 0.5) / m - 0.5, (b + 0.5) / m - 0.5);
      count += inside(q) ? 1 : 0;
    }
  return double(count) / (m * m);
}

bool is_perfect_metal(const DielectricModel& m) { return std::holds_alternative<PerfectMetal>(m); }

}  // namespace

void GridScene::finalize_active(const std::vector<char>& pec) {
  pec_ = pec;
  active_dofs_.clear();
  active_index_.assign(pec_.size(), -1);
  for (std::size_t n = 0; n < pec_.size(); ++n)
    if (!pec_[n]) {
      active_index_[n] = int(active_dofs_.size());
      active_dofs_.push_back(int(n));
    }
}

GridScene GridScene::from_scene(const Scene2D& scene, const MaterialLibrary& lib, const GridOptions& opt) {
  if (scene.in_contact()) throw ContactError("inner body touches the outer boundary");
  if (!(opt.resolution > 0)) throw DomainError("resolution must be positive");
  const auto& outer = lib.at(scene.outer_material);
  if (!is_perfect_metal(outer))
    throw DomainError("the finite-difference engine requires a perfect-metal outer boundary");
  const auto& fluid = lib.at(scene.fluid_material);
  if (is_perfect_metal(fluid)) throw DomainError("fluid cannot be a perfect metal");
  const auto& inner = lib.at(scene.inner_material);

  GridScene gs;
  const double a = scene.a();
  const double h = a / opt.resolution;
  const double r_outer = 0.5 * scene.D();
  const int n_half = int(std::ceil(r_outer / h)) + 2;
  gs.grid_ = YeeGrid{h, 2 * n_half, 2 * n_half, Vec2(-n_half * h, -n_half * h), false};
  gs.fluid_ = fluid;
  gs.has_inner_ = true;
  if (!is_perfect_metal(inner)) gs.inner_ = inner;
  gs.averaged_ = opt.averaging;
  gs.length_scale_ = a;
  gs.torque_origin_ = scene.centroid();
  gs.measure_ = Measure::cylinder;

  const Shape outer_shape = scene.outer;
  gs.in_pec_ = [outer_shape, r_outer](const Vec2& p) {
    if (std::holds_alternative<Circle>(outer_shape)) return p.norm() >= r_outer;
    return std::max(std::abs(p.x()), std::abs(p.y())) >= r_outer;
  };
  const Shape inner_shape = scene.inner;
  const Pose pose = scene.inner_pose();
  gs.in_inner_ = [inner_shape, pose](const Vec2& p) { return contains(inner_shape, pose, p); };

  const YeeGrid& g = gs.grid_;
  std::vector<char> pec(g.e_size(), 0);
  gs.fill_.assign(g.e_size(), 0.0);
  g.for_each_e([&](Component c, int i, int j, int idx) {
    const Vec2 p = g.e_position(c, i, j);
    bool on_box = false;
    if (c == Component::x) on_box = j == 0 || j == g.ny;
    if (c == Component::y) on_box = i == 0 || i == g.nx;
    if (c == Component::z) on_box = i == 0 || i == g.nx || j == 0 || j == g.ny;
    if (on_box || gs.in_pec_(p)) {
      pec[idx] = 1;
      return;
    }
    if (!gs.inner_) {
      if (gs.in_inner_(p)) pec[idx] = 1;
      return;
    }
    gs.fill_[idx] = fill_fraction(gs.in_inner_, p, h, opt.averaging ? opt.supersample : 1);
  });
  gs.finalize_active(pec);

  const Vec2 c = (scene.centroid() - g.origin) / h;
  gs.center_i_ = int(std::lround(c.x()));
  gs.center_j_ = int(std::lround(c.y()));
  int w;
  if (opt.contour_offset) {
    w = *opt.contour_offset;
  } else {
    const auto [lo, hi] = gs.contour_range();
    if (lo > hi) throw GeometryError("no stress contour fits between the inner body and the outer wall");
    w = (lo + hi) / 2;
  }
  gs.build_contour(w);
  return gs;
}

GridScene GridScene::plate_proxy(const DielectricModel& fluid, const std::optional<DielectricModel>& slab,
                                 double left_gap, double thickness, double right_gap, double spacing,
                                 bool averaging) {
  if (!(left_gap > 0 && thickness > 0 && right_gap > 0 && spacing > 0))
    throw DomainError("plate proxy needs positive gaps, thickness and spacing");
  auto cells = [&](double len) {
    const double n = len / spacing;
    if (std::abs(n - std::round(n)) > 1e-6 * std::max(1.0, n))
      throw DomainError("plate proxy lengths must be integer multiples of the spacing");
    return int(std::lround(n));
  };
  const int n1 = cells(left_gap), nt = cells(thickness), n2 = cells(right_gap);
  if (n1 < 6 || n2 < 6) throw DomainError("plate proxy gaps need at least 6 cells");

  GridScene gs;
  gs.grid_ = YeeGrid{spacing, n1 + nt + n2, 1, Vec2::Zero(), true};
  gs.fluid_ = fluid;
  gs.has_inner_ = true;
  gs.inner_ = slab;
  if (slab && is_perfect_metal(*slab)) gs.inner_.reset();
  gs.averaged_ = averaging;
  gs.measure_ = Measure::planar;
  gs.length_scale_ = std::min(left_gap, right_gap);
  gs.torque_origin_ = Vec2(left_gap + 0.5 * thickness, 0);

  const double x0 = left_gap, x1 = left_gap + thickness, eps_len = 1e-9 * spacing;
  const double length = (n1 + nt + n2) * spacing;
  gs.in_inner_ = [x0, x1, eps_len](const Vec2& p) { return p.x() >= x0 - eps_len && p.x() <= x1 + eps_len; };
  gs.in_pec_ = [length, eps_len](const Vec2& p) { return p.x() <= eps_len || p.x() >= length - eps_len; };
  // averaging only needs to resolve x; interfaces sit on lattice lines
  auto inside_open = [x0, x1](const Vec2& p) { return p.x() > x0 && p.x() < x1; };

  const YeeGrid& g = gs.grid_;
  std::vector<char> pec(g.e_size(), 0);
  gs.fill_.assign(g.e_size(), 0.0);
  g.for_each_e([&](Component c, int i, int j, int idx) {
    const Vec2 p = g.e_position(c, i, j);
    if (c != Component::x && (i == 0 || i == g.nx)) {
      pec[idx] = 1;
      return;
    }
    if (!gs.inner_) {
      if (gs.in_inner_(p)) pec[idx] = 1;
      return;
    }
    gs.fill_[idx] = averaging ? fill_fraction(inside_open, p, spacing, 4) : (gs.in_inner_(p) ? 1.0 : 0.0);
  });
  gs.finalize_active(pec);

  const int il = int(std::lround(0.5 * left_gap / spacing));
  const int ir = n1 + nt + int(std::lround(0.5 * right_gap / spacing));
  gs.contour_ = {ContourPoint{il, 0, Vec2(-1, 0), 1.0}, ContourPoint{ir, 0, Vec2(1, 0), 1.0}};
  gs.contour_half_width_ = 0;
  return gs;
}

GridScene GridScene::reference() const {
  GridScene ref = *this;
  ref.inner_.reset();
  ref.has_inner_ = false;
  ref.fill_.assign(fill_.size(), 0.0);
  std::vector<char> pec(pec_.size(), 0);
  grid_.for_each_e([&](Component c, int i, int j, int idx) {
    const Vec2 p = grid_.e_position(c, i, j);
    bool on_box = false;
    if (c == Component::x) on_box = !grid_.periodic_y && (j == 0 || j == grid_.ny);
    if (c == Component::y) on_box = i == 0 || i == grid_.nx;
    if (c == Component::z) on_box = i == 0 || i == grid_.nx || (!grid_.periodic_y && (j == 0 || j == grid_.ny));
    pec[idx] = on_box || in_pec_(p);
  });
  ref.finalize_active(pec);
  return ref;
}

bool GridScene::clear_cell(int i, int j) const {
  const YeeGrid& g = grid_;
  if (i < 1 || j < 1 || i >= g.nx || j >= g.ny) return false;
  const std::array<std::pair<Component, std::array<int, 2>>, 5> around{{{Component::z, {i, j}},
                                                                        {Component::x, {i - 1, j}},
                                                                        {Component::x, {i, j}},
                                                                        {Component::y, {i, j - 1}},
                                                                        {Component::y, {i, j}}}};
  for (const auto& [c, ij] : around) {
    const int idx = g.e_index(c, ij[0], ij[1]);
    if (pec_[idx]) return false;
    if (has_inner_ && in_inner_(g.e_position(c, ij[0], ij[1]))) return false;
    if (fill_[idx] > 0) return false;
  }
  return true;
}

std::pair<int, int> GridScene::contour_range() const {
  if (measure_ == Measure::planar) return {0, 0};
  const int wmax = std::max(grid_.nx, grid_.ny);
  auto ring_clear = [&](int w) {
    if (w < 0) return true;
    for (int k = -w; k <= w; ++k)
      for (const auto& [i, j] : std::array<std::array<int, 2>, 4>{{{center_i_ + w, center_j_ + k},
                                                                     {center_i_ - w, center_j_ + k},
                                                                     {center_i_ + k, center_j_ + w},
                                                                     {center_i_ + k, center_j_ - w}}})
        if (!clear_cell(i, j)) return false;
    return true;
  };
  // two cells of clearance: obstacles no closer than ring w +- 2
  auto valid = [&](int w) {
    for (int b = w - 1; b <= w + 1; ++b)
      if (!ring_clear(b)) return false;
    return true;
  };
  int lo = -1;
  for (int w = 3; w < wmax; ++w)
    if (valid(w)) {
      lo = w;
      break;
    }
  if (lo < 0) return {1, 0};
  int hi = lo;
  while (hi + 1 < wmax && valid(hi + 1)) ++hi;
  return {lo, hi};
}

void GridScene::build_contour(int w) {
  if (measure_ == Measure::planar) return;
  const auto [lo, hi] = contour_range();
  if (w < lo || w > hi) {
    std::ostringstream os;
    os << "contour half-width " << w << " cells outside the valid range [" << lo << ", " << hi << "]";
    throw GeometryError(os.str());
  }
  contour_.clear();
  contour_half_width_ = w;
  const double h = grid_.spacing;
  const int i0 = center_i_ - w, i1 = center_i_ + w, j0 = center_j_ - w, j1 = center_j_ + w;
  for (int j = j0; j <= j1; ++j) {
    const double wt = (j == j0 || j == j1) ? 0.5 * h : h;
    contour_.push_back({i1, j, Vec2(1, 0), wt});
    contour_.push_back({i0, j, Vec2(-1, 0), wt});
  }
  for (int i = i0; i <= i1; ++i) {
    const double wt = (i == i0 || i == i1) ? 0.5 * h : h;
    contour_.push_back({i, j1, Vec2(0, 1), wt});
    contour_.push_back({i, j0, Vec2(0, -1), wt});
  }
}

GridScene GridScene::with_contour(int w) const {
  GridScene out = *this;
  out.build_contour(w);
  return out;
}

double GridScene::cell_measure() const {
  return measure_ == Measure::planar ? grid_.spacing : grid_.spacing * grid_.spacing;
}

Eigen::VectorXd GridScene::eps_map(double xi) const {
  const double ef = eval_eps(fluid_, ImagFreq::natural(xi)).value();
  const double ei = inner_ ? eval_eps(*inner_, ImagFreq::natural(xi)).value() : ef;
  Eigen::VectorXd eps(active_dofs_.size());
  for (std::size_t n = 0; n < active_dofs_.size(); ++n) {
    const double f = fill_[active_dofs_[n]];
    eps[n] = ef + f * (ei - ef);
  }
  return eps;
}

std::string GridScene::hash() const {
  std::uint64_t hsh = 1469598103934665603ull;
  auto mix = [&](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      hsh ^= p[i];
      hsh *= 1099511628211ull;
    }
  };
  mix(&grid_.spacing, sizeof(double));
  mix(&grid_.nx, sizeof(int));
  mix(&grid_.ny, sizeof(int));
  mix(pec_.data(), pec_.size());
  mix(fill_.data(), fill_.size() * sizeof(double));
  for (const auto& p : contour_) {
    mix(&p.i, sizeof(int));
    mix(&p.j, sizeof(int));
  }
  std::ostringstream os;
  os << std::hex << hsh;
  return os.str();
}

// ---------------------------------------------------------------- operator

namespace {

SparseMatrix active_selector(const GridScene& s) {
  std::vector<Triplet> t;
  const auto& act = s.active_dofs();
  t.reserve(act.size());
  for (std::size_t n = 0; n < act.size(); ++n) t.emplace_back(act[n], int(n), 1.0);
  SparseMatrix sel(s.grid().e_size(), int(act.size()));
  sel.setFromTriplets(t.begin(), t.end());
  return sel;
}

/// Per-scene precomputation shared read-only by the spectral workers.
struct Assembler {
  const GridScene* scene = nullptr;
  SparseMatrix c0, c1;        // H x active
  SparseMatrix p00, p01, p11;  // pieces of C^T C
  // contour probes: columns 3n+c for node n
  SparseMatrix e_probe;             // active x 3N
  SparseMatrix h_probe0, h_probe1;  // active x 3N, h = h0 + kz h1
  std::vector<std::array<int, 2>> nodes;
  std::vector<int> point_node;

  explicit Assembler(const GridScene& s) : scene(&s) {
    const CurlPieces cp = curl_pieces(s.grid());
    const SparseMatrix sel = active_selector(s);
    c0 = cp.c0 * sel;
    c1 = cp.c1 * sel;
    p00 = SparseMatrix(c0.transpose()) * c0;
    p01 = SparseMatrix(c0.transpose()) * c1;
    p01 = SparseMatrix(p01 + SparseMatrix(p01.transpose()));
    p11 = SparseMatrix(c1.transpose()) * c1;
    build_probes();
  }

  SparseMatrix matrix(double xi, double kz) const {
    const Eigen::VectorXd eps = scene->eps_map(xi);
    SparseMatrix diag(eps.size(), eps.size());
    diag.reserve(Eigen::VectorXi::Constant(eps.size(), 1));
    for (Eigen::Index n = 0; n < eps.size(); ++n) diag.insert(n, n) = xi * xi * eps[n];
    SparseMatrix a = p00 + kz * p01 + (kz * kz) * p11 + diag;
    a.makeCompressed();
    return a;
  }

  void build_probes() {
    const YeeGrid& g = scene->grid();
    const auto& amap = scene->active_index();
    for (const auto& p : scene->contour()) {
      std::array<int, 2> ij{p.i, p.j};
      auto it = std::find(nodes.begin(), nodes.end(), ij);
      if (it == nodes.end()) {
        nodes.push_back(ij);
        point_node.push_back(int(nodes.size()) - 1);
      } else {
        point_node.push_back(int(it - nodes.begin()));
      }
    }
    const int nn = int(nodes.size());
    std::vector<Triplet> te, th;
    auto add_e = [&](int col, Component c, int i, int j, double w) {
      const int a = amap[g.e_index(c, i, j)];
      if (a >= 0) te.emplace_back(a, col, w);
    };
    for (int n = 0; n < nn; ++n) {
      const int i = nodes[n][0], j = nodes[n][1];
      add_e(3 * n + 0, Component::x, i - 1, j, 0.5);
      add_e(3 * n + 0, Component::x, i, j, 0.5);
      add_e(3 * n + 1, Component::y, i, j - 1, 0.5);
      add_e(3 * n + 1, Component::y, i, j, 0.5);
      add_e(3 * n + 2, Component::z, i, j, 1.0);
      th.emplace_back(g.h_index(Component::x, i, j - 1), 3 * n + 0, 0.5);
      th.emplace_back(g.h_index(Component::x, i, j), 3 * n + 0, 0.5);
      th.emplace_back(g.h_index(Component::y, i - 1, j), 3 * n + 1, 0.5);
      th.emplace_back(g.h_index(Component::y, i, j), 3 * n + 1, 0.5);
      for (int di = -1; di <= 0; ++di)
        for (int dj = -1; dj <= 0; ++dj) th.emplace_back(g.h_index(Component::z, i + di, j + dj), 3 * n + 2, 0.25);
    }
    e_probe.resize(scene->active_count(), 3 * nn);
    e_probe.setFromTriplets(te.begin(), te.end());
    SparseMatrix v(g.h_size(), 3 * nn);
    v.setFromTriplets(th.begin(), th.end());
    h_probe0 = SparseMatrix(c0.transpose()) * v;
    h_probe1 = SparseMatrix(c1.transpose()) * v;
  }
};

}  // namespace

void check_positive_definite(const SparseMatrix& a, int probes, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  for (int p = 0; p < probes; ++p) {
    Eigen::VectorXd x(a.cols());
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = gauss(rng);
    const double q = x.dot(a * x);
    if (!(q > 0)) {
      std::ostringstream os;
      os << "operator not positive definite: Rayleigh quotient " << q / x.squaredNorm() << " on probe " << p;
      throw AssemblyError(os.str());
    }
  }
}

Operator assemble_operator(const GridScene& scene, double xi, double kz, bool probe) {
  if (!(xi > 0)) throw DomainError("operator assembly needs xi > 0");
  Assembler as(scene);
  Operator op;
  op.matrix = as.matrix(xi, kz);
  op.curl = as.c0 + kz * as.c1;
  op.xi = xi;
  op.kz = kz;
  if (probe) check_positive_definite(op.matrix);
  return op;
}

// ---------------------------------------------------------------- solver

struct SpdSolver::Impl {
  SolverOptions opt;
  SparseMatrix a;
  double norm_inf = 0;
  Eigen::SimplicialLLT<SparseMatrix> llt;
  Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper, Eigen::IncompleteCholesky<double>> cg;
};

SpdSolver::SpdSolver(const SparseMatrix& a, SolverOptions opt) : impl_(std::make_unique<Impl>()) {
  impl_->opt = opt;
  impl_->a = a;
  for (int k = 0; k < a.outerSize(); ++k) {
    double row = 0;
    for (SparseMatrix::InnerIterator it(a, k); it; ++it) row += std::abs(it.value());
    impl_->norm_inf = std::max(impl_->norm_inf, row);
  }
  if (opt.kind == SolverKind::cholesky) {
    impl_->llt.compute(a);
    if (impl_->llt.info() != Eigen::Success)
      throw AssemblyError("Cholesky factorization failed: operator is not positive definite");
    // one probe solve guards the factor used by whiten()
    solve(Eigen::VectorXd::Ones(a.rows()));
  } else {
    impl_->cg.setTolerance(0.1 * opt.tolerance);
    impl_->cg.setMaxIterations(opt.max_iterations);
    impl_->cg.compute(a);
    if (impl_->cg.info() != Eigen::Success) throw AssemblyError("preconditioner construction failed");
  }
}

SpdSolver::~SpdSolver() = default;
SpdSolver::SpdSolver(SpdSolver&&) noexcept = default;
SpdSolver& SpdSolver::operator=(SpdSolver&&) noexcept = default;

Eigen::MatrixXd SpdSolver::solve(const Eigen::MatrixXd& b) const {
  const auto& opt = impl_->opt;
  Eigen::MatrixXd x(b.rows(), b.cols());
  if (opt.kind == SolverKind::cholesky) {
    x = impl_->llt.solve(b);
  } else {
    for (Eigen::Index c = 0; c < b.cols(); ++c) x.col(c) = impl_->cg.solve(b.col(c));
  }
  // normwise backward error |r| / (|A| |x| + |b|), with up to two refinement sweeps
  std::vector<double> history;
  for (int sweep = 0;; ++sweep) {
    const Eigen::MatrixXd r = b - impl_->a * x;
    double worst = 0;
    for (Eigen::Index c = 0; c < b.cols(); ++c) {
      const double scale = impl_->norm_inf * x.col(c).lpNorm<Eigen::Infinity>() + b.col(c).lpNorm<Eigen::Infinity>();
      if (scale > 0) worst = std::max(worst, r.col(c).lpNorm<Eigen::Infinity>() / scale);
    }
    history.push_back(worst);
    if (worst <= opt.tolerance) return x;
    if (sweep == 2) {
      std::ostringstream os;
      os << "linear solve missed tolerance " << opt.tolerance << " (relative residual " << worst << ")";
      throw SolverError(os.str(), history);
    }
    if (opt.kind == SolverKind::cholesky) {
      x += impl_->llt.solve(r);
    } else {
      for (Eigen::Index c = 0; c < b.cols(); ++c) x.col(c) += impl_->cg.solve(r.col(c));
    }
  }
}

std::optional<Eigen::MatrixXd> SpdSolver::whiten(const Eigen::MatrixXd& b) const {
  if (impl_->opt.kind != SolverKind::cholesky) return std::nullopt;
  const Eigen::MatrixXd pb = impl_->llt.permutationP() * b;
  return Eigen::MatrixXd(impl_->llt.matrixL().solve(pb));
}

Eigen::VectorXd green_column(const GridScene& scene, const Operator& op, const SpdSolver& solver, Component c,
                             const Vec2& position) {
  const YeeGrid& g = scene.grid();
  // nearest unknown of this component
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  g.for_each_e([&](Component cc, int i, int j, int idx) {
    if (cc != c || scene.active_index()[idx] < 0) return;
    const double d = (g.e_position(cc, i, j) - position).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = idx;
    }
  });
  if (best < 0) throw GeometryError("no active unknown for the requested source");
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(op.matrix.rows(), 1);
  rhs(scene.active_index()[best], 0) = 1.0 / scene.cell_measure();
  const Eigen::MatrixXd sol = solver.solve(rhs);
  Eigen::VectorXd full = Eigen::VectorXd::Zero(g.e_size());
  for (int n = 0; n < scene.active_count(); ++n) full[scene.active_dofs()[n]] = sol(n, 0);
  return full;
}

// ---------------------------------------------------------------- stress

namespace {

// Contour flux sum_k w_k (T n, r x T n) of one scene at one spectral node,
// with <EE> = xi^2 G and <HH> = -C G C^T (no prefactors).
Eigen::Vector3d contour_flux(const Assembler& as, double xi, double kz, const SolverOptions& opt) {
  const GridScene& s = *as.scene;
  const SparseMatrix a = as.matrix(xi, kz);
  const SpdSolver solver(a, opt);
  const double ef = eval_eps(s.fluid(), ImagFreq::natural(xi)).value();
  const double inv_cell = 1.0 / s.cell_measure();
  const int nn = int(as.nodes.size());
  const SparseMatrix h_probe = as.h_probe0 + kz * as.h_probe1;

  std::vector<Eigen::Matrix3d> ee(nn), hh(nn);
  const int block = 32;
  for (int n0 = 0; n0 < nn; n0 += block) {
    const int nb = std::min(block, nn - n0);
    Eigen::MatrixXd rhs(s.active_count(), 6 * nb);
    rhs.leftCols(3 * nb) = Eigen::MatrixXd(as.e_probe.middleCols(3 * n0, 3 * nb));
    rhs.rightCols(3 * nb) = Eigen::MatrixXd(h_probe.middleCols(3 * n0, 3 * nb));
    // B^T A^-1 B from either the whitened probes or a full solve
    const auto white = solver.whiten(rhs);
    const Eigen::MatrixXd& left = white ? *white : rhs;
    const Eigen::MatrixXd right = white ? *white : solver.solve(rhs);
    for (int m = 0; m < nb; ++m) {
      Eigen::Matrix3d e, h;
      for (int p = 0; p < 3; ++p)
        for (int q = 0; q < 3; ++q) {
          e(p, q) = left.col(3 * m + p).dot(right.col(3 * m + q));
          h(p, q) = -left.col(3 * nb + 3 * m + p).dot(right.col(3 * nb + 3 * m + q));
        }
      ee[n0 + m] = 0.5 * (e + e.transpose()) * (xi * xi * inv_cell);
      hh[n0 + m] = 0.5 * (h + h.transpose()) * inv_cell;
    }
  }

  const YeeGrid& g = s.grid();
  Eigen::Vector3d out = Eigen::Vector3d::Zero();
  const auto& pts = s.contour();
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const auto& e = ee[as.point_node[k]];
    const auto& h = hh[as.point_node[k]];
    const double tre = e.trace(), trh = h.trace();
    Eigen::Matrix2d t;
    for (int p = 0; p < 2; ++p)
      for (int q = 0; q < 2; ++q)
        t(p, q) = ef * (e(p, q) - (p == q ? 0.5 * tre : 0.0)) + (h(p, q) - (p == q ? 0.5 * trh : 0.0));
    const Eigen::Vector2d tn = t * pts[k].normal;
    const Vec2 r = g.node(pts[k].i, pts[k].j) - s.torque_origin();
    out[0] += pts[k].weight * tn.x();
    out[1] += pts[k].weight * tn.y();
    out[2] += pts[k].weight * (r.x() * tn.y() - r.y() * tn.x());
  }
  return out;
}

double measure_prefactor(Measure m, double k) {
  const double pi2 = units::pi * units::pi;
  // minus sign: Wick rotation of the fluctuation-dissipation integral
  return m == Measure::cylinder ? -1.0 / pi2 : -k / (2 * pi2);
}

}  // namespace

Eigen::Vector3d raw_flux(const GridScene& scene, double xi, double kz, const SolverOptions& opt) {
  if (!(xi > 0)) throw DomainError("stress flux needs xi > 0");
  const Assembler as(scene);
  return measure_prefactor(scene.measure(), kz) * contour_flux(as, xi, kz, opt);
}

Eigen::Vector3d stress_flux(const GridScene& scene, const GridScene& reference, double xi, double kz,
                            const SolverOptions& opt) {
  return raw_flux(scene, xi, kz, opt) - raw_flux(reference, xi, kz, opt);
}

ForceTorque casimir_force_torque(const GridScene& scene, const ExactOptions& opt) {
  const GridScene ref = scene.reference();
  const Assembler as_scene(scene), as_ref(ref);
  const SpectralGrid grid = make_grid(scene.length_scale(), opt.n_xi, opt.n_kz);
  auto density = [&](double xi, double k) -> Eigen::Vector3d {
    const Eigen::Vector3d f = contour_flux(as_scene, xi, k, opt.solver) - contour_flux(as_ref, xi, k, opt.solver);
    return measure_prefactor(scene.measure(), k) * f;
  };
  const auto est = integrate(grid, density, IntegrateOptions{opt.workers, opt.spectral_error});
  ForceTorque out;
  out.value = est.value;
  out.spectral_error = est.error;
  return out;
}

ForceTorque casimir_force_torque(const Scene2D& scene, const MaterialLibrary& lib, const GridOptions& grid,
                                 const ExactOptions& opt, bool resolution_error) {
  ForceTorque fine = casimir_force_torque(GridScene::from_scene(scene, lib, grid), opt);
  if (resolution_error) {
    GridOptions coarse = grid;
    coarse.resolution = 0.5 * grid.resolution;
    if (coarse.contour_offset) *coarse.contour_offset = std::max(3, *coarse.contour_offset / 2);
    ExactOptions copt = opt;
    copt.spectral_error = false;
    const ForceTorque c = casimir_force_torque(GridScene::from_scene(scene, lib, coarse), copt);
    fine.resolution_error = (fine.value - c.value).cwiseAbs();
  }
  return fine;
}

ForceTorque casimir_force_torque_absorbed(const GridScene& scene, int n_rho, const SolverOptions& solver,
                                          int workers) {
  const auto* c = std::get_if<Constant>(&scene.fluid());
  if (!c) throw DomainError("absorbed-k_z path needs a constant-permittivity fluid");
  // the inner body must not carry its own dielectric
  const Eigen::VectorXd probe_eps = scene.eps_map(1.0);
  if ((probe_eps.array() != c->value).any())
    throw DomainError("absorbed-k_z path needs perfect-metal bodies in a uniform fluid");
  if (scene.measure() != Measure::cylinder) throw DomainError("absorbed-k_z path applies to cylinder scenes");

  const GridScene ref = scene.reference();
  const Assembler as_scene(scene), as_ref(ref);
  const double root_eps = std::sqrt(c->value);
  const double phi1 = units::pi / 6, phi2 = units::pi / 3;
  auto density = [&](double xi, double k) -> Eigen::Vector3d {
    return measure_prefactor(Measure::cylinder, k) *
           (contour_flux(as_scene, xi, k, solver) - contour_flux(as_ref, xi, k, solver));
  };
  auto radial = [&](double rho) -> Eigen::Vector3d {
    const Eigen::Vector3d f1 = density(rho * std::cos(phi1) / root_eps, rho * std::sin(phi1));
    const Eigen::Vector3d f2 = density(rho * std::cos(phi2) / root_eps, rho * std::sin(phi2));
    return (units::pi / 4) * rho / root_eps * (f1 + f2);
  };
  const SpectralGrid grid = make_grid(scene.length_scale(), std::max(n_rho, 4), 4);
  const auto est = integrate_xi(grid, radial, IntegrateOptions{workers, true});
  ForceTorque out;
  out.value = est.value;
  out.spectral_error = est.error;
  return out;
}

}  // namespace casimir::fdfd
