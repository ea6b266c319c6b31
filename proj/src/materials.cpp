#include "casimir/materials.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "casimir/errors.hpp"
#include "casimir/roots.hpp"

namespace casimir {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

double Permittivity::value() const {
  if (!value_) throw DomainError("permittivity of a perfect metal has no finite value");
  return *value_;
}

Tabulated::Tabulated(std::vector<double> xi, std::vector<double> eps, bool clamp_ends)
    : xi_(std::move(xi)), eps_(std::move(eps)), clamp_ends_(clamp_ends) {
  if (xi_.size() < 2 || xi_.size() != eps_.size())
    throw DomainError("tabulated permittivity needs at least two (xi, eps) rows");
  std::vector<double> lx(xi_.size()), ly(xi_.size());
  for (std::size_t i = 0; i < xi_.size(); ++i) {
    if (!(xi_[i] > 0)) throw DomainError("tabulated xi must be positive");
    if (i > 0 && !(xi_[i] > xi_[i - 1])) throw DomainError("tabulated xi must strictly increase");
    if (!(eps_[i] > 1)) throw DomainError("tabulated eps must exceed 1 (log(eps-1) interpolation)");
    lx[i] = std::log(xi_[i]);
    ly[i] = std::log(eps_[i] - 1);
  }
  curve_ = MonotoneCubic<double>(lx, ly);
}

double Tabulated::eval(double xi) const {
  if (xi < xi_.front() || xi > xi_.back()) {
    if (!clamp_ends_) {
      std::ostringstream os;
      os << "xi = " << xi << " rad/s outside tabulated range [" << xi_.front() << ", "
         << xi_.back() << "]";
      throw ExtrapolationError(os.str());
    }
    return xi < xi_.front() ? eps_.front() : eps_.back();
  }
  return 1 + std::exp(curve_(std::log(xi)));
}

Permittivity eval_eps(const DielectricModel& model, ImagFreq freq) {
  const double xi = freq.rad_per_s();
  if (xi < 0 || std::isnan(xi)) throw DomainError("imaginary frequency must be >= 0");
  return std::visit(
      overloaded{
          [&](const Oscillator& m) {
            double eps = 1;
            for (std::size_t n = 0; n < m.strengths.size(); ++n) {
              const double r = xi / m.resonances[n];
              eps += m.strengths[n] / (1 + r * r);
            }
            return Permittivity::finite(eps);
          },
          [&](const Drude& m) {
            if (xi == 0) throw SingularInputError("Drude permittivity diverges at xi = 0");
            return Permittivity::finite(1 + m.plasma * m.plasma / (xi * (xi + m.damping)));
          },
          [](const PerfectMetal&) { return Permittivity::perfect_metal(); },
          [](const Constant& m) { return Permittivity::finite(m.value); },
          [&](const Tabulated& m) { return Permittivity::finite(m.eval(xi)); },
      },
      model);
}

ImagFreq find_crossing(const DielectricModel& a, const DielectricModel& b, ImagFreq lo, ImagFreq hi) {
  if (!(lo.rad_per_s() > 0) || !(hi.rad_per_s() > lo.rad_per_s()))
    throw DomainError("find_crossing needs 0 < lo < hi");
  auto diff = [&](double xi) {
    const auto ea = eval_eps(a, ImagFreq::rad_per_s(xi));
    const auto eb = eval_eps(b, ImagFreq::rad_per_s(xi));
    if (ea.is_perfect_metal() || eb.is_perfect_metal())
      throw NoCrossingError("a perfect metal never crosses a finite permittivity");
    return ea.value() - eb.value();
  };
  // Dense geometric scan so that the lowest root is the one refined.
  const int per_decade = 64;
  const int n = std::max(8, int(std::ceil(per_decade * std::log10(hi.rad_per_s() / lo.rad_per_s()))));
  const auto br = first_sign_change(diff, lo.rad_per_s(), hi.rad_per_s(), n, true);
  if (!br) throw NoCrossingError("permittivities do not cross in the given bracket");
  const auto root = bisect(diff, *br, 1e-10, 0.0, true);
  return ImagFreq::rad_per_s(0.5 * (root.lo + root.hi));
}

DielectricModel static_limit(const DielectricModel& model) {
  return std::visit(overloaded{
                        [&](const Oscillator&) -> DielectricModel {
                          return Constant{eval_eps(model, ImagFreq::rad_per_s(0)).value()};
                        },
                        [](const Drude&) -> DielectricModel { return PerfectMetal{}; },
                        [](const PerfectMetal&) -> DielectricModel { return PerfectMetal{}; },
                        [](const Constant& c) -> DielectricModel { return c; },
                        [](const Tabulated& t) -> DielectricModel { return Constant{t.eps().front()}; },
                    },
                    model);
}

std::string describe(const DielectricModel& model) {
  return std::visit(overloaded{
                        [](const Oscillator& m) {
                          return "oscillator(N=" + std::to_string(m.strengths.size()) + ")";
                        },
                        [](const Drude&) { return std::string("drude"); },
                        [](const PerfectMetal&) { return std::string("perfect_metal"); },
                        [](const Constant& c) {
                          std::ostringstream os;
                          os << "constant(" << c.value << ")";
                          return os.str();
                        },
                        [](const Tabulated& t) {
                          return "tabulated(" + std::to_string(t.xi().size()) + " rows)";
                        },
                    },
                    model);
}

Tabulated read_tabulated_csv(const std::filesystem::path& path, bool clamp_ends) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open tabulated permittivity file " + path.string());
  std::vector<double> xi, eps;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    for (char& ch : line)
      if (ch == ',' || ch == ';' || ch == '\t') ch = ' ';
    std::istringstream ls(line);
    double x, e;
    if (!(ls >> x >> e)) {
      if (xi.empty()) continue;  // header row
      throw DomainError(path.string() + ":" + std::to_string(lineno) + ": expected two numbers");
    }
    xi.push_back(x);
    eps.push_back(e);
  }
  return Tabulated(std::move(xi), std::move(eps), clamp_ends);
}

namespace materials {

DielectricModel ethanol() { return Oscillator{{23.84, 0.852}, {6.6e14, 114e14}}; }

DielectricModel silica() { return Oscillator{{0.829, 0.095, 1.098}, {0.867e14, 1.508e14, 203.4e14}}; }

// The printed plasma frequency sits two decades below tabulated values for
// gold; plasma_scale = 100 gives the conventional 1.367e16 rad/s.
DielectricModel gold(double plasma_scale) { return Drude{1.367e14 * plasma_scale, 5.320e13}; }

}  // namespace materials

MaterialLibrary MaterialLibrary::builtin() {
  MaterialLibrary lib;
  lib.set("ethanol", materials::ethanol());
  lib.set("sio2", materials::silica());
  lib.set("au", materials::gold());
  lib.set("au_x100", materials::gold(100.0));
  lib.set("vacuum", Constant{1.0});
  lib.set("pec", PerfectMetal{});
  return lib;
}

const DielectricModel& MaterialLibrary::at(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw DomainError("unknown material '" + name + "'");
  return it->second;
}

void MaterialLibrary::set(const std::string& name, DielectricModel model) {
  entries_.insert_or_assign(name, std::move(model));
}

std::vector<std::string> MaterialLibrary::names() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : entries_) out.push_back(k);
  return out;
}

DielectricModel model_from_json(const nlohmann::json& j, const MaterialLibrary& lib,
                                const std::filesystem::path& base_dir) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "oscillator") {
    Oscillator m{j.at("C").get<std::vector<double>>(), j.at("omega").get<std::vector<double>>()};
    if (m.strengths.size() != m.resonances.size() || m.strengths.empty())
      throw DomainError("oscillator model needs equal-length nonempty C and omega");
    for (std::size_t i = 0; i < m.strengths.size(); ++i)
      if (m.strengths[i] < 0 || !(m.resonances[i] > 0))
        throw DomainError("oscillator strengths must be >= 0 and resonances > 0");
    return m;
  }
  if (type == "drude") {
    Drude m{j.at("omega_p").get<double>(), j.at("gamma").get<double>()};
    if (!(m.plasma > 0) || m.damping < 0) throw DomainError("drude needs omega_p > 0, gamma >= 0");
    return m;
  }
  if (type == "perfect_metal") return PerfectMetal{};
  if (type == "constant") {
    const double v = j.at("eps").get<double>();
    if (!(v >= 1)) throw DomainError("constant permittivity must be >= 1");
    return Constant{v};
  }
  if (type == "static_limit") return static_limit(lib.at(j.at("of").get<std::string>()));
  if (type == "tabulated") {
    const bool clamp = j.value("clamp_ends", false);
    if (j.contains("csv")) {
      std::filesystem::path p = j.at("csv").get<std::string>();
      if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
      return read_tabulated_csv(p, clamp);
    }
    return Tabulated(j.at("xi").get<std::vector<double>>(), j.at("eps").get<std::vector<double>>(), clamp);
  }
  throw DomainError("unknown material type '" + type + "'");
}

nlohmann::json model_to_json(const DielectricModel& model) {
  return std::visit(overloaded{
                        [](const Oscillator& m) {
                          return nlohmann::json{{"type", "oscillator"}, {"C", m.strengths}, {"omega", m.resonances}};
                        },
                        [](const Drude& m) {
                          return nlohmann::json{{"type", "drude"}, {"omega_p", m.plasma}, {"gamma", m.damping}};
                        },
                        [](const PerfectMetal&) { return nlohmann::json{{"type", "perfect_metal"}}; },
                        [](const Constant& c) { return nlohmann::json{{"type", "constant"}, {"eps", c.value}}; },
                        [](const Tabulated& t) {
                          return nlohmann::json{{"type", "tabulated"},
                                                {"xi", t.xi()},
                                                {"eps", t.eps()},
                                                {"clamp_ends", t.clamp_ends()}};
                        },
                    },
                    model);
}

void MaterialLibrary::apply_overrides(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
  if (doc.value("version", 1) != 1) throw DomainError("unsupported material file version");
  const auto& mats = doc.contains("materials") ? doc.at("materials") : doc;
  for (const auto& [name, spec] : mats.items()) {
    if (name == "version") continue;
    set(name, model_from_json(spec, *this, base_dir));
  }
}

void MaterialLibrary::load_overrides(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw DomainError("cannot open material file " + file.string());
  apply_overrides(nlohmann::json::parse(in), file.parent_path());
}

}  // namespace casimir
