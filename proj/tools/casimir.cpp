// casimir: command-line driver for the Lifshitz, PFA and finite-difference engines.

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "casimir/errors.hpp"
#include "casimir/materials.hpp"
#include "casimir/run.hpp"

using namespace casimir;
using nlohmann::json;

namespace {

struct Common {
  std::string preset;
  std::string config_file;
  std::string materials_file;
  std::string out = "results";
  std::string units;
  std::string sweep;
  std::string contour;
  std::string solver;
  int workers = 0;
  int n_xi = 0, n_k = 0, n_kz = 0, samples = 0;
  double resolution = 0, tol = 0;
  bool force = false;
  bool averaging = false;
  bool no_resolution_error = false;
};

void add_common(CLI::App* app, Common& o, bool with_out = true) {
  app->add_option("preset", o.preset, "Built-in preset: fig1, fig2, fig3, fig4");
  app->add_option("--config", o.config_file, "JSON run config (a run manifest also works)");
  app->add_option("--materials", o.materials_file, "JSON material override file");
  if (with_out) app->add_option("--out", o.out, "Output directory")->capture_default_str();
  app->add_option("--units", o.units, "natural | dimensionless | si");
  app->add_option("--sweep", o.sweep, "variable:start:stop:steps[:log], variable in d, theta, a, h");
  app->add_option("--workers", o.workers, "Worker threads");
  app->add_option("--nxi", o.n_xi, "Quadrature nodes in xi");
  app->add_option("--nk", o.n_k, "Quadrature nodes in k (Lifshitz and PFA)");
  app->add_option("--nkz", o.n_kz, "Quadrature nodes in k_z (exact)");
  app->add_option("--samples", o.samples, "Boundary samples (PFA)");
  app->add_option("--resolution", o.resolution, "Grid cells per a (exact)");
  app->add_option("--tol", o.tol, "Linear solver tolerance (exact)");
  app->add_option("--contour", o.contour, "auto or offset=N (half-width in cells)");
  app->add_option("--solver", o.solver, "cholesky | cg");
  app->add_flag("--averaging", o.averaging, "Dielectric averaging on boundary cells (exact)");
  app->add_flag("--no-resolution-error", o.no_resolution_error, "Skip the coarse-grid rerun (exact)");
  app->add_flag("--force", o.force, "Recompute even when a cached result matches");
}

run::RunConfig resolve(const Common& o, std::optional<run::Engine> engine) {
  if (o.preset.empty() == o.config_file.empty())
    throw ValidationError({"give exactly one of a preset name or --config"});
  run::RunConfig c = o.preset.empty() ? run::load_config(o.config_file) : run::preset(o.preset);
  if (engine && c.engine != *engine) {
    c.engine = *engine;
    c.name += std::string("_") + (*engine == run::Engine::lifshitz ? "lifshitz" : *engine == run::Engine::pfa ? "pfa" : "exact");
  }
  if (!o.materials_file.empty()) {
    std::ifstream in(o.materials_file);
    if (!in) throw ValidationError({"cannot read " + o.materials_file});
    const json doc = json::parse(in);
    if (!doc.contains("materials")) throw ValidationError({o.materials_file + ": missing 'materials'"});
    for (const auto& [k, v] : doc.at("materials").items()) c.materials[k] = v;
  }
  // round-trip through JSON so flag overrides get the same checks as files
  json j = run::config_to_json(c);
  if (!o.units.empty()) j["units"] = o.units;
  auto& n = j["numerics"];
  if (o.workers) n["workers"] = o.workers;
  if (o.n_xi) n[c.engine == run::Engine::exact ? "exact_n_xi" : "n_xi"] = o.n_xi;
  if (o.n_k) n["n_k"] = o.n_k;
  if (o.n_kz) n["n_kz"] = o.n_kz;
  if (o.samples) n["boundary_samples"] = o.samples;
  if (o.resolution) n["resolution"] = o.resolution;
  if (o.tol) n["tolerance"] = o.tol;
  if (o.averaging) n["averaging"] = true;
  if (o.no_resolution_error) n["resolution_error"] = false;
  if (!o.solver.empty()) n["solver"] = o.solver;
  if (!o.contour.empty()) {
    if (o.contour == "auto")
      n["contour"] = "auto";
    else if (o.contour.rfind("offset=", 0) == 0)
      n["contour"] = std::stoi(o.contour.substr(7));
    else
      throw ValidationError({"--contour must be auto or offset=N"});
  }
  if (!o.sweep.empty()) {
    std::vector<std::string> parts;
    std::stringstream ss(o.sweep);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (parts.size() < 4 || parts.size() > 5) throw ValidationError({"--sweep expects variable:start:stop:steps[:log]"});
    j["sweep"] = {{"variable", parts[0]},
                  {"start", std::stod(parts[1])},
                  {"stop", std::stod(parts[2])},
                  {"steps", std::stoi(parts[3])},
                  {"spacing", parts.size() == 5 ? parts[4] : "linear"}};
  }
  return run::config_from_json(j);
}

int run_engine(const Common& o, run::Engine engine) {
  const auto c = resolve(o, engine);
  const auto r = run::run(c, o.out, o.force);
  std::cout << (r.cached ? "cached " : "wrote ") << (std::filesystem::path(o.out) / (c.name + ".csv")).string()
            << " (" << r.rows.size() << " rows, hash " << run::config_hash(c) << ")\n";
  std::size_t errors = 0;
  for (const auto& row : r.rows) errors += row.values.empty();
  if (errors) std::cout << errors << " error rows\n";
  if (r.metadata.contains("sign_change_brackets"))
    for (const auto& b : r.metadata["sign_change_brackets"])
      std::cout << "sign change in [" << b[0].get<double>() << ", " << b[1].get<double>() << "]\n";
  return 0;
}

int run_scan(const Common& o, const std::string& kind_name) {
  auto c = resolve(o, std::nullopt);
  run::TransitionKind kind;
  if (kind_name == "positional" || kind_name == "d") {
    kind = run::TransitionKind::positional;
  } else if (kind_name == "orientational" || kind_name == "a") {
    kind = run::TransitionKind::orientational;
  } else if (kind_name == "gap_sign" || kind_name == "h") {
    kind = run::TransitionKind::gap_sign;
  } else {
    throw ValidationError({"--kind must be positional, orientational or gap_sign"});
  }
  const auto t = run::scan_transition(c, kind);
  json out = t.to_json();
  out["config_hash"] = run::config_hash(c);
  out["config"] = run::config_to_json(c);
  std::filesystem::create_directories(o.out);
  const auto path = std::filesystem::path(o.out) / (c.name + "." + out["kind"].get<std::string>() + ".json");
  std::ofstream(path) << out.dump(2) << '\n';
  std::cout << t.to_json().dump() << '\n';
  return 0;
}

int run_materials(const std::vector<std::string>& names_in, double xi_min, double xi_max, int points,
                  const std::string& crossing, const std::string& overrides, const std::string& out_dir,
                  bool list) {
  auto lib = MaterialLibrary::builtin();
  if (!overrides.empty()) lib.load_overrides(overrides);
  if (list) {
    for (const auto& n : lib.names()) std::cout << n << ": " << describe(lib.at(n)) << '\n';
    return 0;
  }
  std::vector<std::string> names = names_in;
  if (names.empty())
    for (const auto& n : lib.names())
      if (!std::holds_alternative<PerfectMetal>(lib.at(n))) names.push_back(n);
  if (!(xi_min > 0 && xi_max > xi_min) || points < 2)
    throw ValidationError({"need 0 < --xi-min < --xi-max and --points >= 2"});

  std::ostringstream csv;
  csv << "xi_rad_s,xi_c_per_um";
  for (const auto& n : names) csv << ",eps_" << n;
  csv << "\r\n" << std::setprecision(17);
  for (int i = 0; i < points; ++i) {
    const double xi = xi_min * std::pow(xi_max / xi_min, double(i) / (points - 1));
    const auto f = ImagFreq::rad_per_s(xi);
    csv << xi << ',' << f.natural();
    for (const auto& n : names) {
      csv << ',';
      const auto e = eval_eps(lib.at(n), f);
      if (!e.is_perfect_metal()) csv << e.value();
    }
    csv << "\r\n";
  }
  if (out_dir.empty()) {
    std::cout << csv.str();
  } else {
    std::filesystem::create_directories(out_dir);
    std::ofstream(std::filesystem::path(out_dir) / "materials.csv", std::ios::binary) << csv.str();
    std::cout << "wrote " << (std::filesystem::path(out_dir) / "materials.csv").string() << '\n';
  }
  if (!crossing.empty()) {
    const auto comma = crossing.find(',');
    if (comma == std::string::npos) throw ValidationError({"--crossing expects two names, e.g. sio2,ethanol"});
    const std::string a = crossing.substr(0, comma), b = crossing.substr(comma + 1);
    json j = {{"materials", {a, b}}};
    try {
      const auto x = find_crossing(lib.at(a), lib.at(b), ImagFreq::rad_per_s(xi_min), ImagFreq::rad_per_s(xi_max));
      j["xi_c_rad_s"] = x.rad_per_s();
      j["xi_c_c_per_um"] = x.natural();
      j["xi_c_2pi_c_per_um"] = x.natural() / (2 * units::pi);
    } catch (const NoCrossingError& e) {
      j["crossing"] = nullptr;
      j["message"] = e.what();
    }
    std::cout << j.dump() << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Casimir forces and torques between fluid-separated bodies"};
  app.require_subcommand(1);

  std::vector<std::string> names;
  double xi_min = 1e12, xi_max = 1e18;
  int points = 61;
  std::string crossing, overrides, mat_out;
  bool list = false;
  auto* mat = app.add_subcommand("materials", "Tabulate eps(i xi) and locate crossings");
  mat->add_option("--names", names, "Materials to tabulate (default: all finite ones)")->delimiter(',');
  mat->add_option("--xi-min", xi_min, "Lowest xi, rad/s")->capture_default_str();
  mat->add_option("--xi-max", xi_max, "Highest xi, rad/s")->capture_default_str();
  mat->add_option("--points", points, "Log-spaced samples")->capture_default_str();
  mat->add_option("--crossing", crossing, "Two names: report where their eps(i xi) cross");
  mat->add_option("--materials", overrides, "JSON material override file");
  mat->add_option("--out", mat_out, "Write materials.csv here instead of stdout");
  mat->add_flag("--list", list, "List the material library");

  Common lif, pfa, exact, scan;
  add_common(app.add_subcommand("lifshitz", "Planar pressures and slab forces"), lif);
  add_common(app.add_subcommand("pfa", "Proximity-force forces, torques and stiffness"), pfa);
  add_common(app.add_subcommand("exact", "Finite-difference stress-tensor forces and torques"), exact);
  auto* sc = app.add_subcommand("scan", "Locate a transition: positional d_c, orientational a_c, gap h_c");
  add_common(sc, scan);
  std::string kind = "positional";
  sc->add_option("--kind", kind, "positional | orientational | gap_sign")->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  try {
    if (mat->parsed()) return run_materials(names, xi_min, xi_max, points, crossing, overrides, mat_out, list);
    if (app.got_subcommand("lifshitz")) return run_engine(lif, run::Engine::lifshitz);
    if (app.got_subcommand("pfa")) return run_engine(pfa, run::Engine::pfa);
    if (app.got_subcommand("exact")) return run_engine(exact, run::Engine::exact);
    if (sc->parsed()) return run_scan(scan, kind);
  } catch (const ValidationError& e) {
    std::cerr << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
