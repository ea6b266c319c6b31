#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "casimir/interp.hpp"
#include "casimir/units.hpp"

namespace casimir {

using units::ImagFreq;

/// Value of eps(i*xi). A perfect conductor is represented by an explicit
/// flag, never by a large finite number.
class Permittivity {
 public:
  static Permittivity finite(double v) { return Permittivity(v); }
  static Permittivity perfect_metal() { return Permittivity(); }

  bool is_perfect_metal() const { return !value_.has_value(); }
  /// Throws DomainError for a perfect metal.
  double value() const;

 private:
  Permittivity() = default;
  explicit Permittivity(double v) : value_(v) {}
  std::optional<double> value_;
};

/// eps(i xi) = 1 + sum_n C_n / (1 + (xi/w_n)^2)
struct Oscillator {
  std::vector<double> strengths;
  std::vector<double> resonances;  // rad/s
};

/// eps(i xi) = 1 + w_p^2 / (xi (xi + gamma))
struct Drude {
  double plasma;   // rad/s
  double damping;  // rad/s
};

struct PerfectMetal {};

struct Constant {
  double value;
};

/// Sampled eps(i xi), interpolated monotonically in (log xi, log(eps - 1)).
class Tabulated {
 public:
  /// xi in rad/s, strictly increasing; every eps > 1.
  Tabulated(std::vector<double> xi, std::vector<double> eps, bool clamp_ends);

  double eval(double xi_rad_s) const;
  const std::vector<double>& xi() const { return xi_; }
  const std::vector<double>& eps() const { return eps_; }
  bool clamp_ends() const { return clamp_ends_; }

 private:
  std::vector<double> xi_, eps_;
  bool clamp_ends_;
  MonotoneCubic<double> curve_;
};

using DielectricModel = std::variant<Oscillator, Drude, PerfectMetal, Constant, Tabulated>;

/// eps(i xi). Errors: DomainError for xi < 0, SingularInputError for Drude at
/// xi = 0, ExtrapolationError for a tabulated query out of range.
Permittivity eval_eps(const DielectricModel& model, ImagFreq xi);

/// Lowest root of eps_a(i xi) - eps_b(i xi) in [lo, hi], relative tolerance
/// 1e-9. Throws NoCrossingError when the difference keeps one sign.
ImagFreq find_crossing(const DielectricModel& a, const DielectricModel& b, ImagFreq lo, ImagFreq hi);

/// Nondispersive xi -> 0 counterpart: Constant(eps(0)) for oscillator and
/// constant models, PerfectMetal for Drude and perfect metals. Tabulated
/// models use their lowest sample.
DielectricModel static_limit(const DielectricModel& model);

std::string describe(const DielectricModel& model);

/// Reads a two-column CSV (xi in rad/s, eps). Lines starting with '#' and a
/// non-numeric header line are skipped.
Tabulated read_tabulated_csv(const std::filesystem::path& path, bool clamp_ends);

/// Named dielectric models. Ships the fitted ethanol, SiO2 and gold models
/// plus vacuum and a perfect metal.
class MaterialLibrary {
 public:
  static MaterialLibrary builtin();

  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  const DielectricModel& at(const std::string& name) const;
  void set(const std::string& name, DielectricModel model);
  std::vector<std::string> names() const;

  /// Applies an override document:
  ///   {"version": 1, "materials": {"name": {"type": ..., ...}, ...}}
  /// Relative CSV paths resolve against base_dir.
  void apply_overrides(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
  void load_overrides(const std::filesystem::path& file);

 private:
  std::map<std::string, DielectricModel> entries_;
};

DielectricModel model_from_json(const nlohmann::json& j, const MaterialLibrary& lib,
                                const std::filesystem::path& base_dir = {});
nlohmann::json model_to_json(const DielectricModel& model);

namespace materials {
DielectricModel ethanol();
DielectricModel silica();
/// Gold, Drude fit. plasma_scale multiplies the plasma frequency.
DielectricModel gold(double plasma_scale = 1.0);
}  // namespace materials

}  // namespace casimir
