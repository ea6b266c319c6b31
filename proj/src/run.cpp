#include "casimir/run.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "casimir/errors.hpp"
#include "casimir/parallel.hpp"
#include "casimir/pfa.hpp"
#include "casimir/roots.hpp"

namespace casimir::run {

using nlohmann::json;

namespace {

template <typename E>
struct Names {
  std::vector<std::pair<E, const char*>> items;

  const char* name(E e) const {
    for (const auto& [v, n] : items)
      if (v == e) return n;
    return "?";
  }
  std::optional<E> parse(const std::string& s) const {
    for (const auto& [v, n] : items)
      if (s == n) return v;
    return std::nullopt;
  }
  std::string choices() const {
    std::string out;
    for (const auto& [v, n] : items) out += (out.empty() ? "" : "|") + std::string(n);
    return out;
  }
};

const Names<Engine> kEngines{{{Engine::lifshitz, "lifshitz"}, {Engine::pfa, "pfa"}, {Engine::exact, "exact"}}};
const Names<Variable> kVariables{
    {{Variable::d, "d"}, {Variable::theta, "theta"}, {Variable::a, "a"}, {Variable::h, "h"}}};
const Names<UnitSystem> kUnits{
    {{UnitSystem::natural, "natural"}, {UnitSystem::dimensionless, "dimensionless"}, {UnitSystem::si, "si"}}};
const Names<SlabCoupling> kCouplings{
    {{SlabCoupling::independent, "independent"}, {SlabCoupling::full_stack, "full_stack"}}};
const Names<fdfd::SolverKind> kSolvers{
    {{fdfd::SolverKind::cholesky, "cholesky"}, {fdfd::SolverKind::conjugate_gradient, "cg"}}};

// Reads members of one JSON object, recording type errors and unknown keys.
class Reader {
 public:
  Reader(const json& obj, std::string where, std::vector<std::string>& problems)
      : obj_(obj), where_(std::move(where)), problems_(problems) {
    if (!obj_.is_object()) problems_.push_back(where_ + " must be an object");
  }
  ~Reader() {
    if (!obj_.is_object()) return;
    for (const auto& [k, v] : obj_.items())
      if (!seen_.count(k)) problems_.push_back(where_ + ": unknown key '" + k + "'");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_[key] = true;
    if (!obj_.is_object() || !obj_.contains(key)) return;
    try {
      out = obj_.at(key).get<T>();
    } catch (const json::exception&) {
      problems_.push_back(where_ + "." + key + " has the wrong type");
    }
  }

  template <typename E>
  void get_enum(const char* key, E& out, const Names<E>& names) {
    std::string s;
    seen_[key] = true;
    if (!obj_.is_object() || !obj_.contains(key)) return;
    if (!obj_.at(key).is_string()) {
      problems_.push_back(where_ + "." + key + " must be a string");
      return;
    }
    s = obj_.at(key).get<std::string>();
    if (auto v = names.parse(s))
      out = *v;
    else
      problems_.push_back(where_ + "." + key + " = '" + s + "', expected " + names.choices());
  }

  const json* child(const char* key) {
    seen_[key] = true;
    if (!obj_.is_object() || !obj_.contains(key)) return nullptr;
    return &obj_.at(key);
  }

 private:
  const json& obj_;
  std::string where_;
  std::vector<std::string>& problems_;
  std::map<std::string, bool> seen_;
};

std::string fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

std::string format_number(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else {
      out.back() += c;
    }
  }
  return out;
}

Shape shape_kind(const std::string& s) {
  if (s == "square") return Square{1};
  return Circle{1};
}

Scene2D build_scene(const SceneSpec& sp, double a, double d, double theta) {
  Scene2D sc = make_scene(shape_kind(sp.inner_shape), shape_kind(sp.outer_shape), a, sp.s_over_D, d, theta);
  sc.inner_material = sp.inner;
  sc.fluid_material = sp.fluid;
  sc.outer_material = sp.outer;
  return sc;
}

// Observable layout per engine and sweep variable: names, the power of
// length in hbar*c/um^k (0 = already dimensionless), and the primary column.
struct Layout {
  std::vector<std::string> columns;
  std::vector<int> powers;
  std::size_t primary = 0;
};

Layout layout_for(Engine e, Variable v) {
  switch (e) {
    case Engine::lifshitz:
      if (v == Variable::h) return {{"pressure", "pressure_err"}, {4, 4}, 0};
      return {{"force", "force_err"}, {4, 4}, 0};
    case Engine::pfa:
      if (v == Variable::a) return {{"stiffness", "tau_plus", "tau_minus"}, {0, 2, 2}, 0};
      return {{"force_x", "force_y", "torque"}, {3, 3, 2}, std::size_t(v == Variable::theta ? 2 : 0)};
    case Engine::exact:
      return {{"force_x", "force_y", "torque", "force_x_err", "force_y_err", "torque_err"},
              {3, 3, 2, 3, 3, 2},
              std::size_t(v == Variable::theta ? 2 : 0)};
  }
  return {};
}

double unit_factor(UnitSystem u, int power, double a) {
  if (power == 0) return 1;
  switch (u) {
    case UnitSystem::natural: return 1;
    case UnitSystem::dimensionless: return std::pow(a, power);
    case UnitSystem::si:
      if (power == 4) return units::pressure_to_pa;
      if (power == 3) return units::force_per_length_to_n_per_m;
      return units::torque_per_length_to_n;
  }
  return 1;
}

const char* unit_label(UnitSystem u, int power) {
  if (power == 0) return "1";
  switch (u) {
    case UnitSystem::natural: return power == 4 ? "hbar*c/um^4" : power == 3 ? "hbar*c/um^3" : "hbar*c/um^2";
    case UnitSystem::dimensionless: return power == 4 ? "hbar*c/a^4" : power == 3 ? "hbar*c/a^3" : "hbar*c/a^2";
    case UnitSystem::si: return power == 4 ? "Pa" : power == 3 ? "N/m" : "N";
  }
  return "?";
}

SlabSetup slab_setup(const RunConfig& c, const MaterialLibrary& lib, double a) {
  SlabSetup s{lib.at(c.scene.outer), lib.at(c.scene.fluid), lib.at(c.scene.inner)};
  s.s_over_D = c.scene.s_over_D;
  s.a = a;
  s.coupling = c.scene.coupling;
  s.n_xi = c.numerics.n_xi;
  s.n_k = c.numerics.n_k;
  return s;
}

PressureProfile::Options profile_options(const Numerics& n) {
  PressureProfile::Options o;
  o.n_xi = n.n_xi;
  o.n_k = n.n_k;
  return o;
}

}  // namespace

// ---------------------------------------------------------------- config

std::vector<double> SweepSpec::values() const {
  std::vector<double> out;
  if (steps < 1) return out;
  if (steps == 1) return {start};
  for (int i = 0; i < steps; ++i) {
    const double t = double(i) / (steps - 1);
    out.push_back(log_spacing ? start * std::pow(stop / start, t) : start + (stop - start) * t);
  }
  out.back() = stop;
  std::sort(out.begin(), out.end());
  return out;
}

RunConfig config_from_json(const json& doc) {
  const json& j = doc.is_object() && doc.contains("config") && doc.contains("hash") ? doc.at("config") : doc;
  std::vector<std::string> problems;
  RunConfig c;
  {
    Reader r(j, "config", problems);
    r.get("version", c.version);
    r.get("name", c.name);
    r.get_enum("engine", c.engine, kEngines);
    r.get_enum("units", c.units, kUnits);
    if (const json* m = r.child("materials")) {
      if (m->is_object())
        c.materials = *m;
      else
        problems.push_back("config.materials must be an object");
    }
    if (const json* s = r.child("scene")) {
      Reader rs(*s, "scene", problems);
      rs.get("inner_shape", c.scene.inner_shape);
      rs.get("outer_shape", c.scene.outer_shape);
      rs.get("a", c.scene.a);
      rs.get("s_over_D", c.scene.s_over_D);
      rs.get("d", c.scene.d);
      rs.get("theta", c.scene.theta);
      rs.get("inner", c.scene.inner);
      rs.get("fluid", c.scene.fluid);
      rs.get("outer", c.scene.outer);
      rs.get_enum("coupling", c.scene.coupling, kCouplings);
    }
    if (const json* s = r.child("sweep")) {
      Reader rs(*s, "sweep", problems);
      rs.get_enum("variable", c.sweep.variable, kVariables);
      rs.get("start", c.sweep.start);
      rs.get("stop", c.sweep.stop);
      rs.get("steps", c.sweep.steps);
      std::string spacing = c.sweep.log_spacing ? "log" : "linear";
      rs.get("spacing", spacing);
      if (spacing == "log")
        c.sweep.log_spacing = true;
      else if (spacing == "linear")
        c.sweep.log_spacing = false;
      else
        problems.push_back("sweep.spacing = '" + spacing + "', expected linear|log");
    }
    if (const json* s = r.child("numerics")) {
      Reader rn(*s, "numerics", problems);
      auto& n = c.numerics;
      rn.get("boundary_samples", n.boundary_samples);
      rn.get("n_xi", n.n_xi);
      rn.get("n_k", n.n_k);
      rn.get("exact_n_xi", n.exact_n_xi);
      rn.get("n_kz", n.n_kz);
      rn.get("resolution", n.resolution);
      rn.get("tolerance", n.tolerance);
      rn.get("averaging", n.averaging);
      rn.get("resolution_error", n.resolution_error);
      rn.get("workers", n.workers);
      rn.get_enum("solver", n.solver, kSolvers);
      if (const json* ct = rn.child("contour")) {
        if (ct->is_string() && ct->get<std::string>() == "auto")
          n.contour.reset();
        else if (ct->is_number_integer())
          n.contour = ct->get<int>();
        else
          problems.push_back("numerics.contour must be \"auto\" or an integer half-width");
      }
    }
  }
  if (!problems.empty()) throw ValidationError(problems);
  return c;
}

json config_to_json(const RunConfig& c) {
  const auto& n = c.numerics;
  json j;
  j["version"] = c.version;
  j["name"] = c.name;
  j["engine"] = kEngines.name(c.engine);
  j["units"] = kUnits.name(c.units);
  j["materials"] = c.materials;
  j["scene"] = {{"inner_shape", c.scene.inner_shape}, {"outer_shape", c.scene.outer_shape},
                {"a", c.scene.a},
                {"s_over_D", c.scene.s_over_D},
                {"d", c.scene.d},
                {"theta", c.scene.theta},
                {"inner", c.scene.inner},
                {"fluid", c.scene.fluid},
                {"outer", c.scene.outer},
                {"coupling", kCouplings.name(c.scene.coupling)}};
  j["sweep"] = {{"variable", kVariables.name(c.sweep.variable)},
                {"start", c.sweep.start},
                {"stop", c.sweep.stop},
                {"steps", c.sweep.steps},
                {"spacing", c.sweep.log_spacing ? "log" : "linear"}};
  j["numerics"] = {{"boundary_samples", n.boundary_samples},
                   {"n_xi", n.n_xi},
                   {"n_k", n.n_k},
                   {"exact_n_xi", n.exact_n_xi},
                   {"n_kz", n.n_kz},
                   {"resolution", n.resolution},
                   {"tolerance", n.tolerance},
                   {"averaging", n.averaging},
                   {"resolution_error", n.resolution_error},
                   {"workers", n.workers},
                   {"solver", kSolvers.name(n.solver)}};
  if (n.contour)
    j["numerics"]["contour"] = *n.contour;
  else
    j["numerics"]["contour"] = "auto";
  return j;
}

RunConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ValidationError({"cannot read config file " + file.string()});
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError({file.string() + ": " + e.what()});
  }
  return config_from_json(j);
}

std::vector<std::string> violations(const RunConfig& c) {
  std::vector<std::string> p;
  const auto& sc = c.scene;
  const auto& sw = c.sweep;
  const auto& n = c.numerics;
  if (c.version != 1) p.push_back("version must be 1");
  if (c.name.empty() || c.name.find_first_of("/\\") != std::string::npos)
    p.push_back("name must be a non-empty file stem");
  for (const auto& s : {sc.inner_shape, sc.outer_shape})
    if (s != "circle" && s != "square") p.push_back("shape '" + s + "' must be circle or square");
  if (!(sc.a > 0)) p.push_back("scene.a must be positive");
  if (!(sc.s_over_D > 0 && sc.s_over_D < 1)) p.push_back("scene.s_over_D must lie in (0, 1)");
  if (!(std::abs(sc.d) < 1)) p.push_back("scene.d must satisfy |d| < 1");

  MaterialLibrary lib = MaterialLibrary::builtin();
  bool lib_ok = true;
  try {
    lib.apply_overrides({{"version", 1}, {"materials", c.materials}});
  } catch (const Error& e) {
    p.push_back(std::string("materials: ") + e.what());
    lib_ok = false;
  }
  if (lib_ok) {
    for (const auto& m : {sc.inner, sc.fluid, sc.outer})
      if (!lib.contains(m)) p.push_back("unknown material '" + m + "'");
    if (lib.contains(sc.fluid) && std::holds_alternative<PerfectMetal>(lib.at(sc.fluid)))
      p.push_back("fluid cannot be a perfect metal");
    if (c.engine == Engine::exact && lib.contains(sc.outer) &&
        !std::holds_alternative<PerfectMetal>(lib.at(sc.outer)))
      p.push_back("exact engine requires a perfect-metal outer material");
  }

  if (sw.steps < 1) p.push_back("sweep.steps must be at least 1");
  if (sw.steps > 1 && !(sw.stop > sw.start)) p.push_back("sweep range is empty (need stop > start)");
  if (sw.log_spacing && !(sw.start > 0)) p.push_back("log spacing needs a positive start");
  switch (sw.variable) {
    case Variable::d:
      if (!(sw.start > -1 && sw.stop < 1)) p.push_back("sweep over d must stay inside (-1, 1)");
      break;
    case Variable::a:
    case Variable::h:
      if (!(sw.start > 0)) p.push_back("sweep over a or h needs positive values");
      break;
    case Variable::theta: break;
  }
  if (c.engine == Engine::lifshitz && sw.variable == Variable::theta)
    p.push_back("lifshitz engine cannot sweep theta");
  if (c.engine != Engine::lifshitz && sw.variable == Variable::h)
    p.push_back("only the lifshitz engine sweeps the gap h");

  if (n.n_xi < 4 || n.n_k < 4 || n.exact_n_xi < 4 || n.n_kz < 4) p.push_back("quadrature orders must be >= 4");
  if (n.boundary_samples < 8) p.push_back("numerics.boundary_samples must be >= 8");
  if (!(n.resolution >= 4)) p.push_back("numerics.resolution must be >= 4 cells per a");
  if (!(n.tolerance > 0 && n.tolerance < 1)) p.push_back("numerics.tolerance must lie in (0, 1)");
  if (n.contour && *n.contour < 3) p.push_back("numerics.contour must be >= 3 cells");
  if (n.workers < 1) p.push_back("numerics.workers must be >= 1");
  return p;
}

void validate(const RunConfig& c) {
  auto p = violations(c);
  if (!p.empty()) throw ValidationError(std::move(p));
}

std::vector<std::string> preset_names() { return {"fig1", "fig2", "fig3", "fig4"}; }

RunConfig preset(const std::string& name) {
  RunConfig c;
  c.name = name;
  c.scene.a = 0.0955;
  c.scene.s_over_D = 0.25;
  if (name == "fig1") {
    // eccentric circles, exact force versus displacement
    c.engine = Engine::exact;
    c.sweep = {Variable::d, 0.0, 0.45, 4, false};
  } else if (name == "fig2") {
    // concentric squares, exact torque versus angle
    c.engine = Engine::exact;
    c.scene.inner_shape = c.scene.outer_shape = "square";
    c.sweep = {Variable::theta, 0.0, 45.0, 4, false};
  } else if (name == "fig3") {
    // PFA orientation stiffness versus lengthscale
    c.engine = Engine::pfa;
    c.scene.inner_shape = c.scene.outer_shape = "square";
    c.sweep = {Variable::a, 0.01, 10.0, 31, true};
  } else if (name == "fig4") {
    // planar slab force versus displacement
    c.engine = Engine::lifshitz;
    c.sweep = {Variable::d, 0.0, 0.99, 100, false};
  } else {
    throw ValidationError({"unknown preset '" + name + "' (fig1, fig2, fig3, fig4)"});
  }
  return c;
}

std::string config_hash(const RunConfig& c) {
  json j = config_to_json(c);
  j["numerics"].erase("workers");
  return fnv1a(j.dump());
}

MaterialLibrary library_for(const RunConfig& c) {
  auto lib = MaterialLibrary::builtin();
  lib.apply_overrides({{"version", 1}, {"materials", c.materials}});
  return lib;
}

// ---------------------------------------------------------------- results

std::string SweepResult::csv() const {
  std::ostringstream os;
  os << csv_field(variable);
  for (const auto& c : columns) os << ',' << csv_field(c);
  os << ",sign_change,status\r\n";
  for (const auto& r : rows) {
    os << format_number(r.x);
    for (std::size_t i = 0; i < columns.size(); ++i) {
      os << ',';
      if (!r.values.empty()) os << format_number(r.values[i]);
    }
    os << ',' << (r.sign_change ? 1 : 0) << ',' << csv_field(r.status) << "\r\n";
  }
  return os.str();
}

namespace {

SweepResult parse_csv(const std::string& text) {
  SweepResult out;
  std::istringstream in(text);
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() < 3) throw ValidationError({"cached CSV is malformed"});
    if (header) {
      out.variable = f[0];
      out.columns.assign(f.begin() + 1, f.end() - 2);
      header = false;
      continue;
    }
    Row r;
    r.x = std::stod(f[0]);
    r.status = f.back();
    r.sign_change = f[f.size() - 2] == "1";
    if (r.status == "ok")
      for (std::size_t i = 1; i + 2 < f.size(); ++i) r.values.push_back(std::stod(f[i]));
    out.rows.push_back(std::move(r));
  }
  return out;
}

}  // namespace

SweepResult evaluate(const RunConfig& c) {
  validate(c);
  const auto t0 = std::chrono::steady_clock::now();
  const MaterialLibrary lib = library_for(c);
  const Layout lay = layout_for(c.engine, c.sweep.variable);
  const auto xs = c.sweep.values();
  const auto& n = c.numerics;

  SweepResult res;
  res.variable = kVariables.name(c.sweep.variable);
  res.columns = lay.columns;
  res.rows.resize(xs.size());
  std::vector<json> point_meta(xs.size(), json::object());

  auto lengthscale = [&](double x) { return c.sweep.variable == Variable::a ? x : c.scene.a; };
  auto scene_at = [&](double x) {
    double a = c.scene.a, d = c.scene.d, th = c.scene.theta;
    if (c.sweep.variable == Variable::a) a = x;
    if (c.sweep.variable == Variable::d) d = x;
    if (c.sweep.variable == Variable::theta) th = x;
    return build_scene(c.scene, a, d, th);
  };

  std::optional<PressureProfile> shared_profile;
  if (c.engine == Engine::pfa && c.sweep.variable != Variable::a)
    shared_profile.emplace(PressureProfile::for_lengthscale(lib.at(c.scene.inner), lib.at(c.scene.fluid),
                                                            lib.at(c.scene.outer), c.scene.a, profile_options(n)));

  auto compute = [&](std::size_t i, int spectral_workers) -> std::vector<double> {
    const double x = xs[i];
    switch (c.engine) {
      case Engine::lifshitz: {
        if (c.sweep.variable == Variable::h) {
          const auto p = gap_pressure(HalfStack::half_space(lib.at(c.scene.inner)),
                                      HalfStack::half_space(lib.at(c.scene.outer)), lib.at(c.scene.fluid), x,
                                      n.n_xi, n.n_k);
          return {p.value, p.error};
        }
        const double d = c.sweep.variable == Variable::d ? x : c.scene.d;
        const auto f = slab_force(slab_setup(c, lib, lengthscale(x)), d);
        return {f.value, f.error};
      }
      case Engine::pfa: {
        const Scene2D sc = scene_at(x);
        if (c.sweep.variable == Variable::a) {
          const auto prof = PressureProfile::for_lengthscale(lib.at(c.scene.inner), lib.at(c.scene.fluid),
                                                             lib.at(c.scene.outer), x, profile_options(n));
          const auto st = torque_stiffness(sc, prof, n.boundary_samples);
          return {st.dimensionless, st.tau_plus, st.tau_minus};
        }
        const Vec2 f = pfa_force(sc, *shared_profile, n.boundary_samples);
        return {f.x(), f.y(), pfa_torque(sc, *shared_profile, n.boundary_samples)};
      }
      case Engine::exact: {
        const Scene2D sc = scene_at(x);
        fdfd::GridOptions go;
        go.resolution = n.resolution;
        go.averaging = n.averaging;
        go.contour_offset = n.contour;
        fdfd::ExactOptions eo;
        eo.n_xi = n.exact_n_xi;
        eo.n_kz = n.n_kz;
        eo.solver = {n.solver, n.tolerance, 20000};
        eo.workers = spectral_workers;
        const auto gs = fdfd::GridScene::from_scene(sc, lib, go);
        const auto r = fdfd::casimir_force_torque(sc, lib, go, eo, n.resolution_error);
        point_meta[i] = {{"grid_hash", gs.hash()},
                         {"contour_half_width", gs.contour_half_width()},
                         {"unknowns", gs.active_count()}};
        if (r.resolution_error)
          point_meta[i]["resolution_delta"] = {(*r.resolution_error)[0], (*r.resolution_error)[1],
                                               (*r.resolution_error)[2]};
        const Eigen::Vector3d e = r.error();
        return {r.value[0], r.value[1], r.value[2], e[0], e[1], e[2]};
      }
    }
    return {};
  };

  auto one = [&](std::size_t i, int spectral_workers) {
    Row& row = res.rows[i];
    row.x = xs[i];
    try {
      auto v = compute(i, spectral_workers);
      const double a = lengthscale(xs[i]);
      for (std::size_t k = 0; k < v.size(); ++k) v[k] *= unit_factor(c.units, lay.powers[k], a);
      row.values = std::move(v);
    } catch (const Error& e) {
      row.values.clear();
      row.status = std::string("error: ") + e.what();
    }
  };

  if (c.engine == Engine::exact) {
    for (std::size_t i = 0; i < xs.size(); ++i) one(i, n.workers);
  } else {
    parallel_for(xs.size(), n.workers, [&](std::size_t i) { one(i, 1); });
  }

  // sign-change flags against the last nonzero primary value
  int last_sign = 0;
  double last_x = 0;
  json brackets = json::array();
  for (auto& r : res.rows) {
    if (r.values.empty()) continue;
    const int s = sign_of(r.values[lay.primary]);
    if (s == 0) continue;
    if (last_sign != 0 && s != last_sign) {
      r.sign_change = true;
      brackets.push_back({last_x, r.x});
    }
    last_sign = s;
    last_x = r.x;
  }

  json units_meta = json::object();
  for (std::size_t k = 0; k < lay.columns.size(); ++k) units_meta[lay.columns[k]] = unit_label(c.units, lay.powers[k]);
  std::size_t failures = 0;
  for (const auto& r : res.rows) failures += r.values.empty();
  res.metadata = {{"engine", kEngines.name(c.engine)},
                  {"variable", res.variable},
                  {"config_hash", config_hash(c)},
                  {"units", units_meta},
                  {"sign_change_brackets", brackets},
                  {"error_rows", failures},
                  {"workers", n.workers},
                  {"wall_time_s", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()}};
  if (c.engine == Engine::exact) {
    res.metadata["points"] = point_meta;
    res.metadata["torque_origin"] = "inner centroid";
    res.metadata["dielectric_averaging"] = n.averaging;
  }
  if (c.engine != Engine::exact) {
    res.metadata["spectral_grid"] = make_grid(c.scene.a, n.n_xi, n.n_k).mapping();
  }
  return res;
}

SweepResult run(const RunConfig& c, const std::filesystem::path& out_dir, bool force) {
  validate(c);
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const fs::path csv_path = out_dir / (c.name + ".csv");
  const fs::path manifest_path = out_dir / (c.name + ".manifest.json");
  const std::string hash = config_hash(c);

  if (!force && fs::exists(csv_path) && fs::exists(manifest_path)) {
    try {
      std::ifstream mf(manifest_path);
      const json m = json::parse(mf);
      if (m.value("hash", "") == hash) {
        std::ifstream cf(csv_path, std::ios::binary);
        std::stringstream ss;
        ss << cf.rdbuf();
        SweepResult r = parse_csv(ss.str());
        r.metadata = m.value("metadata", json::object());
        r.cached = true;
        return r;
      }
    } catch (const std::exception&) {
      // unreadable cache entries are simply recomputed
    }
  }

  SweepResult r = evaluate(c);
  {
    std::ofstream out(csv_path, std::ios::binary);
    out << r.csv();
  }
  json manifest = {{"manifest_version", 1},
                   {"hash", hash},
                   {"config", config_to_json(c)},
                   {"metadata", r.metadata},
                   {"outputs", {{"csv", csv_path.filename().string()}}}};
  std::ofstream out(manifest_path);
  out << manifest.dump(2) << '\n';
  return r;
}

// ---------------------------------------------------------------- transitions

json TransitionResult::to_json() const {
  static const char* names[] = {"positional", "orientational", "gap_sign"};
  json j = {{"kind", names[int(kind)]}, {"found", found}, {"message", message}};
  if (found) {
    j["bracket"] = {lo, hi};
    j["root"] = root;
    j["error"] = error;
  }
  return j;
}

TransitionResult scan_transition(const RunConfig& c, TransitionKind kind) {
  validate(c);
  const MaterialLibrary lib = library_for(c);
  TransitionResult out;
  out.kind = kind;
  switch (kind) {
    case TransitionKind::positional: {
      const auto setup = slab_setup(c, lib, c.scene.a);
      auto f = [&](double d) { return slab_force(setup, d).value; };
      const auto br = first_sign_change_on(f, displacement_scan_points(1e-3));
      if (br) {
        const auto b = bisect(f, *br, 0.0, 1e-6);
        out = {kind, true, b.lo, b.hi, 0.5 * (b.lo + b.hi), 0.5 * (b.hi - b.lo), "critical displacement d_c (units of a)"};
      }
      break;
    }
    case TransitionKind::orientational: {
      if (c.sweep.variable != Variable::a)
        throw ValidationError({"orientational scan needs a sweep over a for its range"});
      SquarePfaSetup setup{lib.at(c.scene.inner), lib.at(c.scene.fluid), lib.at(c.scene.outer)};
      setup.s_over_D = c.scene.s_over_D;
      setup.samples = c.numerics.boundary_samples;
      setup.profile = profile_options(c.numerics);
      const auto t = find_orientation_transition(setup, c.sweep.start, c.sweep.stop, 0.01);
      if (t) out = {kind, true, t->a_lo, t->a_hi, t->a_c(), 0.5 * (t->a_hi - t->a_lo), "PFA orientation transition a_c (um)"};
      break;
    }
    case TransitionKind::gap_sign: {
      if (c.sweep.variable != Variable::h) throw ValidationError({"gap-sign scan needs a sweep over h for its range"});
      auto f = [&](double h) {
        return gap_pressure(HalfStack::half_space(lib.at(c.scene.inner)), HalfStack::half_space(lib.at(c.scene.outer)),
                            lib.at(c.scene.fluid), h, c.numerics.n_xi, c.numerics.n_k)
            .value;
      };
      const auto br = first_sign_change(f, c.sweep.start, c.sweep.stop, 64, true);
      if (br) {
        const auto b = bisect(f, *br, 1e-6, 0.0, true);
        out = {kind, true, b.lo, b.hi, std::sqrt(b.lo * b.hi), 0.5 * (b.hi - b.lo), "gap-pressure sign change h_c (um)"};
      }
      break;
    }
  }
  if (!out.found) out.message = "no transition found";
  return out;
}

}  // namespace casimir::run
