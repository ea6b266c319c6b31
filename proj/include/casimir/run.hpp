#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "casimir/fdfd.hpp"
#include "casimir/lifshitz.hpp"
#include "casimir/materials.hpp"

namespace casimir::run {

enum class Engine { lifshitz, pfa, exact };
enum class Variable { d, theta, a, h };
/// natural: hbar*c/um^k; dimensionless: hbar*c/a^k; si: Pa, N/m, N.
enum class UnitSystem { natural, dimensionless, si };

struct SceneSpec {
  std::string inner_shape = "circle";  // circle | square
  std::string outer_shape = "circle";  // circle | square
  double a = 0.0955;                   // um
  double s_over_D = 0.25;
  double d = 0;      // units of a
  double theta = 0;  // degrees
  std::string inner = "sio2";
  std::string fluid = "ethanol";
  std::string outer = "pec";
  SlabCoupling coupling = SlabCoupling::independent;
};

struct SweepSpec {
  Variable variable = Variable::d;
  double start = 0;
  double stop = 0;
  int steps = 1;
  bool log_spacing = false;

  /// Sorted sample values.
  std::vector<double> values() const;
};

struct Numerics {
  int boundary_samples = 400;  // PFA
  int n_xi = 64;               // Lifshitz and PFA profile
  int n_k = 64;
  int exact_n_xi = 16;  // FDFD
  int n_kz = 16;
  double resolution = 16;  // cells per a
  double tolerance = 1e-8;
  std::optional<int> contour;  // half-width in cells, auto when empty
  bool averaging = false;
  fdfd::SolverKind solver = fdfd::SolverKind::cholesky;
  bool resolution_error = true;
  int workers = 1;
};

/// Everything a run needs. Serialized form (version 1):
///   {"version": 1, "name": ..., "engine": "lifshitz|pfa|exact",
///    "scene": {...}, "sweep": {...}, "numerics": {...},
///    "units": "natural|dimensionless|si", "materials": {name: model, ...}}
struct RunConfig {
  int version = 1;
  std::string name = "run";
  Engine engine = Engine::lifshitz;
  SceneSpec scene;
  SweepSpec sweep;
  Numerics numerics;
  UnitSystem units = UnitSystem::natural;
  nlohmann::json materials = nlohmann::json::object();
};

/// Parses a config document. Accepts a run manifest too (its "config"
/// member). Unknown keys are violations; missing keys take defaults.
RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& c);
RunConfig load_config(const std::filesystem::path& file);

/// Every violated constraint, empty when the config is runnable.
std::vector<std::string> violations(const RunConfig& c);
/// Throws ValidationError listing every violation.
void validate(const RunConfig& c);

/// fig1 ... fig4.
std::vector<std::string> preset_names();
RunConfig preset(const std::string& name);

/// Content hash of the resolved config (worker count excluded).
std::string config_hash(const RunConfig& c);

/// Library with the config's material overrides applied.
MaterialLibrary library_for(const RunConfig& c);

struct Row {
  double x = 0;
  std::vector<double> values;  // empty for an error row
  std::string status = "ok";
  bool sign_change = false;  // primary observable changed sign since the last ok row
};

struct SweepResult {
  std::string variable;
  std::vector<std::string> columns;  // observable names, same order as Row::values
  std::vector<Row> rows;             // sorted by x
  nlohmann::json metadata;
  bool cached = false;

  /// RFC 4180 CSV with a header row; error rows leave numeric fields empty.
  std::string csv() const;
};

/// Evaluates the sweep without touching the filesystem.
SweepResult evaluate(const RunConfig& c);

/// Evaluates (or reuses) the sweep and writes <out>/<name>.csv and
/// <out>/<name>.manifest.json. A manifest whose hash matches is reused
/// unless `force` is set.
SweepResult run(const RunConfig& c, const std::filesystem::path& out_dir, bool force = false);

enum class TransitionKind { positional, orientational, gap_sign };

struct TransitionResult {
  TransitionKind kind;
  bool found = false;
  double lo = 0, hi = 0;  // final bracket
  double root = 0;
  double error = 0;  // half bracket width
  std::string message;

  nlohmann::json to_json() const;
};

/// Coarse scan plus bisection. positional: d_c of the slab force (sweep
/// start/stop ignored); orientational: PFA a_c over [start, stop];
/// gap_sign: h_c of the half-space gap pressure over [start, stop].
TransitionResult scan_transition(const RunConfig& c, TransitionKind kind);

}  // namespace casimir::run
