#pragma once

// Run configuration: flat INI-style sections with typed scalars and unit
// suffixes. Every key is declared in a registry that fixes its type, unit
// family, default and the commands it applies to; parsing rejects unknown
// keys, missing required keys and unit mismatches with the offending line.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "guidewave/error.hpp"
#include "guidewave/units.hpp"

namespace guidewave::io {

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> c{"eigen", "split", "interfere", "channels", "thermal", "check-adiabatic"};
  return c;
}

enum class Kind { real, integer, boolean, text };

enum class Family { none, length, time, angular_frequency, temperature, mass, energy, wavenumber, angle };

struct KeySpec {
  std::string section;
  std::string name;
  Kind kind = Kind::real;
  Family family = Family::none;
  /// Bare numbers are accepted and read in natural units.
  bool natural = false;
  /// Default as config text; empty means derived or required.
  std::string fallback;
  /// Commands that require the key to be given (mandatory); others use the default.
  std::set<std::string> required_by;
  std::string help;

  std::string id() const { return section + "." + name; }
};

// clang-format off
inline const std::vector<KeySpec>& registry() {
  static const std::set<std::string> thermal{"thermal"};
  static const std::vector<KeySpec> keys{
      {"physical", "isotope", Kind::text, Family::none, false, "Li-7", {}, "atom species (Li-7, Li-6, Na-23, Rb-87)"},
      {"physical", "mass", Kind::real, Family::mass, false, "", thermal, "atom mass; defaults to the isotope mass"},
      {"physical", "omega", Kind::real, Family::angular_frequency, false, "1e5 /s", thermal, "input guide angular frequency"},
      {"physical", "omega_arm", Kind::real, Family::angular_frequency, false, "", {}, "arm angular frequency; defaults to 2 omega"},
      {"physical", "temperature", Kind::real, Family::temperature, false, "200 uK", thermal, "source temperature"},
      {"physical", "source_length", Kind::real, Family::length, false, "100 um", thermal, "box source width"},
      {"physical", "delta_l", Kind::real, Family::length, false, "2 um", thermal, "arm path-length difference"},
      {"physical", "device_length", Kind::real, Family::length, false, "1 mm", {}, "interferometer length"},
      {"physical", "detection_time", Kind::real, Family::time, false, "20 ms", thermal, "time since release"},

      {"geometry", "z_split_start", Kind::real, Family::length, true, "40", {}, "start of the first splitter"},
      {"geometry", "z_split_end", Kind::real, Family::length, true, "240", {}, "end of the first splitter"},
      {"geometry", "z_merge_start", Kind::real, Family::length, true, "320", {}, "start of the recombiner"},
      {"geometry", "z_merge_end", Kind::real, Family::length, true, "520", {}, "end of the recombiner"},
      {"geometry", "d_max", Kind::real, Family::length, true, "10", {}, "arm separation on the plateau"},
      {"geometry", "ramp", Kind::text, Family::none, false, "smoothstep", {}, "linear | smoothstep"},
      {"geometry", "shape", Kind::text, Family::none, false, "piecewise_quadratic", {}, "piecewise_quadratic | quartic"},
      {"geometry", "omega_arm", Kind::real, Family::none, true, "", {}, "arm frequency in units of omega; defaults to the physical ratio"},
      {"geometry", "e_kin", Kind::real, Family::energy, true, "", {}, "kinetic energy for check-adiabatic; defaults to k0^2/2"},

      {"packet", "n_in", Kind::integer, Family::none, true, "0", {}, "input transverse level"},
      {"packet", "k0", Kind::real, Family::wavenumber, true, "", {}, "mean longitudinal wavenumber (default 10)"},
      {"packet", "e_kin", Kind::real, Family::energy, true, "", {}, "mean longitudinal kinetic energy (alternative to k0)"},
      {"packet", "sigma_z", Kind::real, Family::length, true, "10", {}, "rms width of |psi|^2 along z"},
      {"packet", "z0", Kind::real, Family::length, true, "0", {}, "initial packet centre"},

      {"phase", "delta_phi", Kind::real, Family::angle, true, "0", {}, "phase difference at the mean momentum"},
      {"phase", "kind", Kind::text, Family::none, false, "potential_integral", {}, "path_length | potential_integral"},
      {"phase", "delta_l", Kind::real, Family::length, true, "", {}, "explicit path-length difference (channels)"},
      {"phase", "width", Kind::real, Family::length, true, "60", {}, "length of the arm potential region (interfere)"},
      {"phase", "both_arms", Kind::boolean, Family::none, false, "false", {}, "apply the arm potential on both arms"},

      {"numerics", "nx", Kind::integer, Family::none, true, "64", {}, "transverse grid points (TDSE)"},
      {"numerics", "x_half_width", Kind::real, Family::length, true, "12", {}, "transverse grid half-width"},
      {"numerics", "eigen_nx", Kind::integer, Family::none, true, "1024", {}, "transverse grid points (eigen)"},
      {"numerics", "n_max", Kind::integer, Family::none, true, "10", {}, "highest transverse level solved (eigen)"},
      {"numerics", "stencil", Kind::text, Family::none, false, "five_point", {}, "three_point | five_point"},
      {"numerics", "z_samples", Kind::integer, Family::none, true, "105", {}, "stations in the correlation diagram"},
      {"numerics", "nz", Kind::integer, Family::none, true, "4096", {}, "longitudinal grid points (TDSE)"},
      {"numerics", "z_window", Kind::real, Family::length, true, "256", {}, "longitudinal window extent (TDSE)"},
      {"numerics", "dt", Kind::real, Family::time, true, "0.01", {}, "time step"},
      {"numerics", "duration", Kind::real, Family::time, true, "0", {}, "propagation time; 0 = until the packet has left"},
      {"numerics", "post_time", Kind::real, Family::time, true, "0", {}, "extra propagation after the exit"},
      {"numerics", "exit_margin", Kind::real, Family::length, true, "60", {}, "distance past the exit before stopping"},
      {"numerics", "absorber_cells", Kind::integer, Family::none, true, "0", {}, "cosine absorber width (0 = off)"},
      {"numerics", "track_window", Kind::boolean, Family::none, false, "true", {}, "scroll the z window with the packet"},
      {"numerics", "planner", Kind::text, Family::none, false, "estimate", {}, "estimate | measure"},
      {"numerics", "snapshot_stride", Kind::integer, Family::none, true, "0", {}, "steps between snapshots (0 = final only)"},
      {"numerics", "n_project", Kind::integer, Family::none, true, "5", {}, "highest output level projected"},
      {"numerics", "k_points", Kind::integer, Family::none, true, "4096", {}, "momentum grid points (channels)"},
      {"numerics", "z_points", Kind::integer, Family::none, true, "4096", {}, "output z grid points (channels)"},
      {"numerics", "time", Kind::real, Family::time, true, "0", {}, "evaluation time (channels)"},
      {"numerics", "t_max", Kind::real, Family::time, true, "0", {}, "end of the rephasing scan (channels; 0 = off)"},
      {"numerics", "t_samples", Kind::integer, Family::none, true, "64", {}, "samples in the rephasing scan"},

      {"source", "n_long_max", Kind::integer, Family::none, true, "0", {}, "longitudinal truncation (0 = automatic)"},
      {"source", "n_trans_max", Kind::integer, Family::none, true, "0", {}, "transverse truncation (0 = automatic)"},
      {"source", "fixed_transverse", Kind::boolean, Family::none, false, "false", {}, "keep exactly levels 0..n_trans_max"},
      {"source", "weight_epsilon", Kind::real, Family::none, true, "1e-6", {}, "allowed discarded Boltzmann mass"},
      {"source", "k_points", Kind::integer, Family::none, true, "1024", {}, "momentum points per packet"},
      {"source", "z_max", Kind::real, Family::length, false, "4 mm", {}, "far end of the detection grid"},
      {"source", "z_points", Kind::integer, Family::none, true, "4096", {}, "detection grid points"},
      {"source", "window_min", Kind::real, Family::length, false, "1.4 mm", {}, "fringe analysis window start"},
      {"source", "window_max", Kind::real, Family::length, false, "3.4 mm", {}, "fringe analysis window end"},
  };
  return keys;
}
// clang-format on

inline const KeySpec* find_key(std::string_view section, std::string_view name) {
  for (const auto& k : registry())
    if (k.section == section && k.name == name) return &k;
  return nullptr;
}

/// A parsed number: SI value, or natural value when `natural` is set.
struct Scalar {
  double value = 0.0;
  bool natural = false;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

struct UnitEntry {
  std::string_view suffix;
  double factor;
  bool natural;
};

inline const std::vector<UnitEntry>& units_for(Family f) {
  static const std::vector<UnitEntry> length{{"m", 1.0, false}, {"mm", 1e-3, false}, {"um", 1e-6, false},
                                             {"nm", 1e-9, false}, {"a0", 1.0, true}};
  static const std::vector<UnitEntry> time{{"s", 1.0, false}, {"ms", 1e-3, false}, {"us", 1e-6, false},
                                           {"ns", 1e-9, false}, {"tau", 1.0, true}};
  static const std::vector<UnitEntry> freq{{"/s", 1.0, false}, {"rad/s", 1.0, false}, {"1/s", 1.0, false},
                                           {"omega", 1.0, true}};
  static const std::vector<UnitEntry> temp{{"K", 1.0, false}, {"mK", 1e-3, false}, {"uK", 1e-6, false},
                                           {"nK", 1e-9, false}};
  static const std::vector<UnitEntry> mass{{"kg", 1.0, false}, {"u", units::constants::atomic_mass_unit, false}};
  static const std::vector<UnitEntry> energy{{"J", 1.0, false}, {"hbar_omega", 1.0, true}};
  static const std::vector<UnitEntry> wavenumber{{"1/m", 1.0, false}, {"/m", 1.0, false}, {"1/a0", 1.0, true}};
  static const std::vector<UnitEntry> angle{{"rad", 1.0, true}, {"pi", std::numbers::pi, true},
                                            {"deg", std::numbers::pi / 180.0, true}};
  static const std::vector<UnitEntry> none{};
  switch (f) {
    case Family::length: return length;
    case Family::time: return time;
    case Family::angular_frequency: return freq;
    case Family::temperature: return temp;
    case Family::mass: return mass;
    case Family::energy: return energy;
    case Family::wavenumber: return wavenumber;
    case Family::angle: return angle;
    case Family::none: return none;
  }
  return none;
}

inline std::string_view family_name(Family f) {
  switch (f) {
    case Family::length: return "length (m, mm, um, nm, a0)";
    case Family::time: return "time (s, ms, us, ns, tau)";
    case Family::angular_frequency: return "angular frequency (/s, rad/s)";
    case Family::temperature: return "temperature (K, mK, uK, nK)";
    case Family::mass: return "mass (kg, u)";
    case Family::energy: return "energy (J, hbar_omega)";
    case Family::wavenumber: return "wavenumber (1/m, 1/a0)";
    case Family::angle: return "angle (rad, pi, deg)";
    case Family::none: return "dimensionless number";
  }
  return "";
}

inline std::string natural_suffix(Family f) {
  switch (f) {
    case Family::length: return " a0";
    case Family::time: return " tau";
    case Family::angular_frequency: return " omega";
    case Family::energy: return " hbar_omega";
    case Family::wavenumber: return " 1/a0";
    case Family::angle: return " rad";
    default: return "";
  }
}

inline std::string si_suffix(Family f) {
  switch (f) {
    case Family::length: return " m";
    case Family::time: return " s";
    case Family::angular_frequency: return " /s";
    case Family::temperature: return " K";
    case Family::mass: return " kg";
    case Family::energy: return " J";
    case Family::wavenumber: return " 1/m";
    default: return "";
  }
}

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// Parses "<number> [unit]" for the given key; throws config errors without line info.
inline Scalar parse_scalar(const KeySpec& key, std::string_view text) {
  const std::string t = detail::trim(text);
  double v = 0.0;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || !std::isfinite(v))
    throw Error(ErrorCode::config, "key '" + key.id() + "': '" + t + "' is not a number");
  const std::string unit = detail::trim(std::string_view(res.ptr, std::size_t(last - res.ptr)));
  if (unit.empty()) {
    if (key.family == Family::none || key.natural) return {v, key.natural || key.family == Family::none};
    throw Error(ErrorCode::config, "key '" + key.id() + "' needs a unit suffix: expected " +
                                       std::string(detail::family_name(key.family)));
  }
  if (key.family == Family::angular_frequency && (unit == "Hz" || unit == "kHz" || unit == "MHz"))
    throw Error(ErrorCode::config, "key '" + key.id() + "': '" + unit +
                                       "' is a cycle frequency; an angular frequency is required (/s or rad/s)");
  for (const auto& u : detail::units_for(key.family))
    if (u.suffix == unit) return {v * u.factor, u.natural};
  throw Error(ErrorCode::config, "key '" + key.id() + "': unit '" + unit + "' does not match " +
                                     std::string(detail::family_name(key.family)));
}

inline bool parse_bool(const KeySpec& key, std::string_view text) {
  const std::string t = detail::trim(text);
  if (t == "true" || t == "yes" || t == "on" || t == "1") return true;
  if (t == "false" || t == "no" || t == "off" || t == "0") return false;
  throw Error(ErrorCode::config, "key '" + key.id() + "': '" + t + "' is not a boolean");
}

inline long long parse_integer(const KeySpec& key, std::string_view text) {
  const std::string t = detail::trim(text);
  long long v = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc{} || res.ptr != t.data() + t.size() || v < 0)
    throw Error(ErrorCode::config, "key '" + key.id() + "': '" + t + "' is not a non-negative integer");
  return v;
}

struct RawEntry {
  std::string text;
  int line = 0;
};

/// Parsed file before unit resolution: section.key -> text and source line.
struct RawConfig {
  std::map<std::string, RawEntry> entries;
  std::map<std::string, int> sections;
  std::optional<RawEntry> command;
};

inline RawConfig parse_raw(std::string_view text, std::string_view origin = "config") {
  RawConfig raw;
  std::string section;
  int line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  auto fail = [&](const std::string& msg) {
    throw Error(ErrorCode::config, std::string(origin) + ":" + std::to_string(line_no) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find_first_of("#;");
    const std::string s = detail::trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') fail("malformed section header '" + s + "'");
      section = detail::trim(std::string_view(s).substr(1, s.size() - 2));
      bool known = section == "run";
      for (const auto& k : registry()) known = known || k.section == section;
      if (!known) fail("unknown section [" + section + "]");
      if (raw.sections.count(section)) fail("section [" + section + "] appears twice");
      raw.sections[section] = line_no;
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) fail("expected 'key = value', got '" + s + "'");
    const std::string key = detail::trim(std::string_view(s).substr(0, eq));
    const std::string value = detail::trim(std::string_view(s).substr(eq + 1));
    if (section.empty()) fail("key '" + key + "' appears before any section header");
    if (value.empty()) fail("key '" + key + "' has no value");
    if (section == "run") {
      if (key != "command") fail("unknown key '" + key + "' in section [run]");
      if (std::find(commands().begin(), commands().end(), value) == commands().end())
        fail("unknown command '" + value + "'");
      raw.command = RawEntry{value, line_no};
      continue;
    }
    const KeySpec* spec = find_key(section, key);
    if (!spec) fail("unknown key '" + key + "' in section [" + section + "]");
    const std::string id = section + "." + key;
    if (raw.entries.count(id)) fail("key '" + key + "' given twice in section [" + section + "]");
    // Type and unit check now so errors carry the line.
    try {
      switch (spec->kind) {
        case Kind::real:
          if (value != "nan") parse_scalar(*spec, value);
          break;
        case Kind::integer: parse_integer(*spec, value); break;
        case Kind::boolean: parse_bool(*spec, value); break;
        case Kind::text: break;
      }
    } catch (const Error& e) {
      fail(e.what());
    }
    raw.entries[id] = RawEntry{value, line_no};
  }
  return raw;
}

/// Fully resolved configuration. Physical values are SI; everything else is in
/// natural units (hbar = m = omega = 1).
class RunConfig {
 public:
  std::string command;
  units::PhysicalParams physical;
  std::string isotope;
  units::NaturalUnits natural;

  double real(const std::string& id) const { return at(reals_, id); }
  long long integer(const std::string& id) const { return at(integers_, id); }
  bool boolean(const std::string& id) const { return at(booleans_, id); }
  const std::string& text(const std::string& id) const { return at(texts_, id); }
  /// True when the user gave the key explicitly.
  bool given(const std::string& id) const { return given_.count(id) > 0; }

  /// Canonical text with every default made explicit; parsing it reproduces
  /// this configuration exactly.
  std::string resolved_text() const {
    std::ostringstream out;
    out << "[run]\ncommand = " << command << "\n";
    std::string section;
    for (const auto& k : registry()) {
      if (k.section != section) {
        section = k.section;
        out << "\n[" << section << "]\n";
      }
      out << k.name << " = " << canonical_.at(k.id()) << "\n";
    }
    return out.str();
  }

  std::vector<std::string> defaulted() const {
    std::vector<std::string> d;
    for (const auto& k : registry())
      if (!given(k.id())) d.push_back(k.id());
    return d;
  }

 private:
  template <class M>
  static const typename M::mapped_type& at(const M& m, const std::string& id) {
    const auto it = m.find(id);
    if (it == m.end()) throw Error(ErrorCode::config, "internal: key '" + id + "' is not registered");
    return it->second;
  }

  friend RunConfig parse_config(std::string_view, const std::string&, std::string_view);

  std::map<std::string, double> reals_;
  std::map<std::string, long long> integers_;
  std::map<std::string, bool> booleans_;
  std::map<std::string, std::string> texts_;
  std::map<std::string, std::string> canonical_;
  std::set<std::string> given_;
};

/// Parses and validates a config for `command` (empty: take it from [run]).
inline RunConfig parse_config(std::string_view text, const std::string& command = {},
                              std::string_view origin = "config") {
  const RawConfig raw = parse_raw(text, origin);
  RunConfig cfg;
  cfg.command = command;
  if (raw.command) {
    if (!command.empty() && command != raw.command->text)
      throw Error(ErrorCode::config, std::string(origin) + ":" + std::to_string(raw.command->line) +
                                         ": config is for command '" + raw.command->text + "', not '" + command +
                                         "'");
    cfg.command = raw.command->text;
  }
  if (cfg.command.empty()) throw Error(ErrorCode::config, std::string(origin) + ": no command given");
  if (std::find(commands().begin(), commands().end(), cfg.command) == commands().end())
    throw Error(ErrorCode::config, "unknown command '" + cfg.command + "'");

  auto line_of = [&](const std::string& id) {
    const auto it = raw.entries.find(id);
    return it == raw.entries.end() ? 0 : it->second.line;
  };
  auto fail_at = [&](const std::string& id, const std::string& msg) -> Error {
    const int line = line_of(id);
    return Error(ErrorCode::config,
                 std::string(origin) + (line ? ":" + std::to_string(line) : std::string()) + ": " + msg);
  };

  for (const auto& k : registry())
    if (k.required_by.count(cfg.command) && !raw.entries.count(k.id())) {
      bool alt = k.id() == "physical.mass" && raw.entries.count("physical.isotope");
      if (!alt) {
        const auto sec = raw.sections.find(k.section);
        throw Error(ErrorCode::config,
                    std::string(origin) + (sec != raw.sections.end() ? ":" + std::to_string(sec->second) : "") +
                        ": command '" + cfg.command + "' requires key '" + k.name + "' in section [" + k.section +
                        "]");
      }
    }

  auto text_of = [&](const KeySpec& k) -> std::optional<std::string> {
    const auto it = raw.entries.find(k.id());
    if (it != raw.entries.end()) {
      cfg.given_.insert(k.id());
      return it->second.text;
    }
    if (!k.fallback.empty()) return k.fallback;
    return std::nullopt;
  };

  // Physical block first: it fixes the natural units used by everything else.
  cfg.isotope = *text_of(*find_key("physical", "isotope"));
  {
    const KeySpec& mk = *find_key("physical", "mass");
    if (auto t = text_of(mk)) {
      cfg.physical.mass = parse_scalar(mk, *t).value;
    } else {
      const auto m = units::isotope_mass(cfg.isotope);
      if (!m) throw fail_at("physical.isotope", "unknown isotope '" + cfg.isotope + "'");
      cfg.physical.mass = *m;
    }
  }
  auto si = [&](const char* name) {
    const KeySpec& k = *find_key("physical", name);
    const auto t = text_of(k);
    const Scalar s = parse_scalar(k, *t);
    if (s.natural) throw fail_at(k.id(), "key '" + k.id() + "' must be given in SI units");
    if (!(s.value > 0.0)) throw fail_at(k.id(), "key '" + k.id() + "' must be strictly positive");
    return s.value;
  };
  cfg.physical.omega_in = si("omega");
  {
    const KeySpec& k = *find_key("physical", "omega_arm");
    if (auto t = text_of(k)) {
      const Scalar s = parse_scalar(k, *t);
      cfg.physical.omega_arm = s.natural ? s.value * cfg.physical.omega_in : s.value;
      if (!(cfg.physical.omega_arm > 0.0)) throw fail_at(k.id(), "omega_arm must be strictly positive");
    } else {
      cfg.physical.omega_arm = 2.0 * cfg.physical.omega_in;
    }
  }
  cfg.physical.temperature = si("temperature");
  cfg.physical.source_length = si("source_length");
  cfg.physical.delta_l = si("delta_l");
  {
    const auto it = raw.entries.find("physical.device_length");
    if (it == raw.entries.end() || it->second.text != "nan") cfg.physical.device_length = si("device_length");
  }
  cfg.physical.detection_time = si("detection_time");
  try {
    cfg.physical.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::config, std::string(origin) + ": " + e.what());
  }
  cfg.natural = units::natural_units(cfg.physical);

  auto dim_of = [](Family f) -> std::optional<units::Dimension> {
    switch (f) {
      case Family::length: return units::Dimension::length;
      case Family::time: return units::Dimension::time;
      case Family::energy: return units::Dimension::energy;
      case Family::wavenumber: return units::Dimension::momentum;
      case Family::angular_frequency: return units::Dimension::frequency;
      default: return std::nullopt;
    }
  };

  for (const auto& k : registry()) {
    const std::string id = k.id();
    if (k.section == "physical") {
      switch (k.kind) {
        case Kind::text: cfg.texts_[id] = cfg.isotope; cfg.canonical_[id] = cfg.isotope; break;
        default: break;
      }
      continue;
    }
    const auto t = text_of(k);
    try {
      switch (k.kind) {
        case Kind::text:
          cfg.texts_[id] = *t;
          cfg.canonical_[id] = *t;
          break;
        case Kind::boolean:
          cfg.booleans_[id] = parse_bool(k, *t);
          cfg.canonical_[id] = cfg.booleans_[id] ? "true" : "false";
          break;
        case Kind::integer:
          cfg.integers_[id] = parse_integer(k, *t);
          cfg.canonical_[id] = std::to_string(cfg.integers_[id]);
          break;
        case Kind::real: {
          if (!t) {
            cfg.reals_[id] = std::nan("");
            cfg.canonical_[id] = "nan";
            break;
          }
          if (*t == "nan") {
            cfg.reals_[id] = std::nan("");
            cfg.canonical_[id] = "nan";
            break;
          }
          const Scalar s = parse_scalar(k, *t);
          double v = s.value;
          // Natural keys are stored in natural units; SI input is converted.
          if (k.natural || !dim_of(k.family)) {
            if (!s.natural) {
              if (const auto d = dim_of(k.family)) v = cfg.natural.to_natural(v, *d);
            }
            cfg.reals_[id] = v;
            cfg.canonical_[id] = detail::format_number(v) + detail::natural_suffix(k.family);
          } else {
            if (s.natural) {
              if (const auto d = dim_of(k.family)) v = cfg.natural.to_si(v, *d);
            }
            // SI-default keys are also exposed in natural units through natural.to_natural.
            cfg.reals_[id] = v;
            cfg.canonical_[id] = detail::format_number(v) + detail::si_suffix(k.family);
          }
          break;
        }
      }
    } catch (const Error& e) {
      throw fail_at(id, e.what());
    }
  }

  // Physical canonical entries are written in SI.
  cfg.canonical_["physical.mass"] = detail::format_number(cfg.physical.mass) + " kg";
  cfg.canonical_["physical.omega"] = detail::format_number(cfg.physical.omega_in) + " /s";
  cfg.canonical_["physical.omega_arm"] = detail::format_number(cfg.physical.omega_arm) + " /s";
  cfg.canonical_["physical.temperature"] = detail::format_number(cfg.physical.temperature) + " K";
  cfg.canonical_["physical.source_length"] = detail::format_number(cfg.physical.source_length) + " m";
  cfg.canonical_["physical.delta_l"] = detail::format_number(cfg.physical.delta_l) + " m";
  cfg.canonical_["physical.device_length"] =
      cfg.given("physical.device_length") ? detail::format_number(cfg.physical.device_length) + " m" : "nan";
  cfg.canonical_["physical.detection_time"] = detail::format_number(cfg.physical.detection_time) + " s";

  // Derived defaults, made explicit.
  if (std::isnan(cfg.reals_["geometry.omega_arm"])) {
    cfg.reals_["geometry.omega_arm"] = cfg.physical.omega_arm / cfg.physical.omega_in;
    cfg.canonical_["geometry.omega_arm"] = detail::format_number(cfg.reals_["geometry.omega_arm"]);
  }
  const bool has_k = !std::isnan(cfg.reals_["packet.k0"]), has_e = !std::isnan(cfg.reals_["packet.e_kin"]);
  if (has_k && has_e) throw fail_at("packet.e_kin", "give either packet.k0 or packet.e_kin, not both");
  if (has_e) {
    const double e = cfg.reals_["packet.e_kin"];
    if (!(e > 0.0)) throw fail_at("packet.e_kin", "packet.e_kin must be positive");
    cfg.reals_["packet.k0"] = std::sqrt(2.0 * e);
  } else {
    if (!has_k) {
      cfg.reals_["packet.k0"] = 10.0;
      cfg.canonical_["packet.k0"] = "10 1/a0";
    }
    cfg.reals_["packet.e_kin"] = 0.5 * cfg.reals_["packet.k0"] * cfg.reals_["packet.k0"];
  }
  if (std::isnan(cfg.reals_["geometry.e_kin"])) cfg.reals_["geometry.e_kin"] = cfg.reals_["packet.e_kin"];
  return cfg;
}

}  // namespace guidewave::io
