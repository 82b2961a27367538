// SPDX-License-Identifier: Apache-2.0
//
// Scenario files: a flat, sectioned key-value format.
//
//   # comment            (also after a value)
//   [section]
//   key = value
//
// Numeric values are products/quotients of numbers with optional powers
// ("2^-33", "1/500", "0.1*1e7") followed by an optional unit ("800 nm",
// "6 pW/sqrtHz"). Bare numbers are SI. Only `curve` may repeat.

#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cvqkd/format.hpp"
#include "cvqkd/pipeline.hpp"

namespace cvqkd {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace config {

struct Entry {
  std::string section;
  std::string key;
  std::string value;
  int line = 0;
};

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<Entry> parse_ini(std::string_view text) {
  std::vector<Entry> out;
  std::string section;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    const auto where = "line " + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "unterminated section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (section.empty()) throw ConfigError(where + "empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    if (section.empty()) throw ConfigError(where + "key outside of any section");
    Entry e{section, trim(std::string_view(line).substr(0, eq)), trim(std::string_view(line).substr(eq + 1)), line_no};
    if (e.key.empty()) throw ConfigError(where + "empty key");
    if (e.value.empty()) throw ConfigError(where + "empty value for '" + e.key + "'");
    out.push_back(std::move(e));
  }
  return out;
}

enum class Dim { none, length, frequency, time, power, nep, angle, solid_angle, temperature, radiance, loss };

inline const char* to_string(Dim d) {
  switch (d) {
    case Dim::none: return "dimensionless";
    case Dim::length: return "length";
    case Dim::frequency: return "frequency";
    case Dim::time: return "time";
    case Dim::power: return "power";
    case Dim::nep: return "noise-equivalent power";
    case Dim::angle: return "angle";
    case Dim::solid_angle: return "solid angle";
    case Dim::temperature: return "temperature";
    case Dim::radiance: return "spectral radiance";
    case Dim::loss: return "loss";
  }
  return "?";
}

inline std::optional<std::pair<Dim, double>> unit(std::string_view u) {
  constexpr double deg = constants::pi / 180.0;
  static const std::map<std::string, std::pair<Dim, double>, std::less<>> table = {
      {"m", {Dim::length, 1.0}},         {"km", {Dim::length, 1e3}},       {"cm", {Dim::length, 1e-2}},
      {"mm", {Dim::length, 1e-3}},       {"um", {Dim::length, 1e-6}},      {"nm", {Dim::length, 1e-9}},
      {"pm", {Dim::length, 1e-12}},      {"Hz", {Dim::frequency, 1.0}},    {"kHz", {Dim::frequency, 1e3}},
      {"KHz", {Dim::frequency, 1e3}},    {"MHz", {Dim::frequency, 1e6}},   {"GHz", {Dim::frequency, 1e9}},
      {"s", {Dim::time, 1.0}},           {"ms", {Dim::time, 1e-3}},        {"us", {Dim::time, 1e-6}},
      {"ns", {Dim::time, 1e-9}},         {"ps", {Dim::time, 1e-12}},       {"W", {Dim::power, 1.0}},
      {"mW", {Dim::power, 1e-3}},        {"uW", {Dim::power, 1e-6}},       {"nW", {Dim::power, 1e-9}},
      {"pW", {Dim::power, 1e-12}},       {"W/sqrtHz", {Dim::nep, 1.0}},    {"nW/sqrtHz", {Dim::nep, 1e-9}},
      {"pW/sqrtHz", {Dim::nep, 1e-12}},  {"fW/sqrtHz", {Dim::nep, 1e-15}}, {"rad", {Dim::angle, 1.0}},
      {"mrad", {Dim::angle, 1e-3}},      {"urad", {Dim::angle, 1e-6}},     {"deg", {Dim::angle, deg}},
      {"sr", {Dim::solid_angle, 1.0}},   {"msr", {Dim::solid_angle, 1e-3}}, {"deg2", {Dim::solid_angle, deg * deg}},
      {"K", {Dim::temperature, 1.0}},    {"W/m2/nm/sr", {Dim::radiance, 1.0}}, {"dB", {Dim::loss, 1.0}},
  };
  const auto it = table.find(u);
  if (it == table.end()) return std::nullopt;
  return it->second;
}

namespace detail {

struct Cursor {
  std::string_view s;
  std::size_t i = 0;
  void skip() {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
  }
  bool eat(char c) {
    skip();
    if (i < s.size() && s[i] == c) {
      ++i;
      return true;
    }
    return false;
  }
  double number() {
    skip();
    if (s.substr(i, 3) == "inf") {
      i += 3;
      return INFINITY;
    }
    std::size_t j = i;
    if (j < s.size() && (s[j] == '+' || s[j] == '-')) ++j;
    while (j < s.size() && (std::isdigit(static_cast<unsigned char>(s[j])) || s[j] == '.')) ++j;
    if (j < s.size() && (s[j] == 'e' || s[j] == 'E')) {
      std::size_t k = j + 1;
      if (k < s.size() && (s[k] == '+' || s[k] == '-')) ++k;
      if (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) {
        j = k;
        while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      }
    }
    auto tok = s.substr(i, j - i);
    if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
    double v = 0.0;
    try {
      v = parse_double(tok);
    } catch (const std::invalid_argument&) {
      throw ConfigError("expected a number at '" + std::string(s.substr(i)) + "'");
    }
    i = j;
    return v;
  }
  double factor() {
    double v = number();
    if (eat('^')) v = std::pow(v, number());
    return v;
  }
};

}  // namespace detail

/// Parses "<expr> [unit]" into SI units of the expected dimension.
inline double parse_quantity(std::string_view text, Dim expected) {
  detail::Cursor c{text};
  double v = c.factor();
  for (;;) {
    if (c.eat('*')) {
      v *= c.factor();
    } else if (c.eat('/')) {
      const auto save = c.i;
      c.skip();
      if (c.i < text.size() && std::isalpha(static_cast<unsigned char>(text[c.i]))) {
        c.i = save - 1;  // a unit such as W/sqrtHz
        break;
      }
      v /= c.factor();
    } else {
      break;
    }
  }
  c.skip();
  const auto rest = trim(text.substr(c.i));
  if (rest.empty()) return v;
  const auto u = unit(rest);
  if (!u) throw ConfigError("unknown unit '" + rest + "'");
  if (u->first != expected) {
    throw ConfigError("unit '" + rest + "' is a " + to_string(u->first) + ", expected " + to_string(expected));
  }
  // Divide by exact powers of ten so that "800 nm" parses to 8e-07.
  const double inv = 1.0 / u->second;
  if (u->second < 1.0 && std::abs(inv - std::round(inv)) < 1e-6) return v / std::round(inv);
  return v * u->second;
}

inline std::int64_t parse_count(std::string_view text) {
  const double v = parse_quantity(text, Dim::none);
  if (!(std::abs(v) < 9.0e15) || v != std::floor(v)) throw ConfigError("expected an integer, got '" + std::string(text) + "'");
  return static_cast<std::int64_t>(v);
}

inline bool parse_bool(std::string_view text) {
  if (text == "true" || text == "on" || text == "yes") return true;
  if (text == "false" || text == "off" || text == "no") return false;
  throw ConfigError("expected a boolean, got '" + std::string(text) + "'");
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace config

struct SweepSpec {
  bool present = false;
  std::string variable;  // loss_db | distance | z_max
  double from = 0.0;
  double to = 0.0;
  int points = 0;

  std::vector<double> abscissae() const {
    std::vector<double> xs(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) {
      xs[static_cast<std::size_t>(i)] = points == 1 ? from : from + (to - from) * i / (points - 1);
    }
    return xs;
  }
};

struct SimulateSpec {
  bool present = false;
  bool fading = false;
  double tau = 0.5;
  double nbar = 0.01;
  double z = 5.0;
  std::int64_t pulses = 1'000'000;
  double pilot_fraction = 0.0;
  double pilot_noise = 0.0;
  bool defade = true;
};

struct CoverageSpec {
  bool present = false;
  double tau = 0.3;
  double nbar = 0.05;
  std::int64_t m_p = 100'000;
  int rounds = 2000;
  double eps_pe = 0.01;
};

struct OutputSpec {
  std::string format = "csv";
  bool clamp = true;
};

struct Scenario {
  std::string name;
  LinkConfig link;
  ProtocolParams protocol;
  ProtocolParams general;
  std::vector<Curve> curves;
  SweepSpec sweep;
  SimulateSpec simulate;
  CoverageSpec coverage;
  OutputSpec output;
  std::uint64_t seed = 1;
  std::vector<std::pair<std::string, double>> derived;
  std::string canonical;  // resolved values, one "section.key = value" per line
  std::uint64_t hash = 0;

  const ProtocolParams& params_for(const Curve& c) const {
    return c.attack == AttackModel::general ? general : protocol;
  }

  std::string hash_hex() const {
    char buf[19];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
    return buf;
  }

  double derived_value(std::string_view key) const {
    for (const auto& [k, v] : derived) {
      if (k == key) return v;
    }
    throw std::out_of_range("no derived value '" + std::string(key) + "'");
  }
};

namespace config {

enum Family : unsigned { kFixed = 1, kOptical = 2, kMobile = 4, kMicrowave = 8 };
inline constexpr unsigned kAll = kFixed | kOptical | kMobile | kMicrowave;
inline constexpr unsigned kOpticalAny = kFixed | kOptical | kMobile;
inline constexpr unsigned kFreeSpace = kOptical | kMobile;

struct KeySpec {
  const char* section;
  const char* key;
  unsigned families;
  bool repeatable = false;
};

inline const std::vector<KeySpec>& key_table() {
  static const std::vector<KeySpec> t = {
      {"scenario", "name", kAll},
      {"scenario", "family", kAll},
      {"scenario", "detection", kAll},
      {"scenario", "lo", kOpticalAny},
      {"scenario", "curve", kAll, true},
      {"scenario", "seed", kAll},
      {"physics", "wavelength", kOpticalAny},
      {"physics", "detector_bandwidth", kOpticalAny},
      {"physics", "nep", kOpticalAny},
      {"physics", "lo_pulse_duration", kOpticalAny},
      {"physics", "lo_power", kOpticalAny},
      {"physics", "linewidth", kOpticalAny},
      {"physics", "clock", kOpticalAny},
      {"physics", "n_other", kOpticalAny},
      {"physics", "n_tlo_phase", kOpticalAny},
      {"physics", "eta_eff", kAll},
      {"physics", "n_b", kOpticalAny},
      {"physics", "sky_radiance", kFreeSpace},
      {"physics", "field_of_view", kFreeSpace},
      {"physics", "spectral_filter", kFreeSpace},
      {"physics", "loss_mode", kFixed},
      {"physics", "aperture", kFreeSpace | kMicrowave},
      {"physics", "waist", kFreeSpace},
      {"physics", "curvature", kFreeSpace},
      {"physics", "focused", kFreeSpace},
      {"physics", "eta_atm", kFreeSpace},
      {"physics", "angular_error", kMobile},
      {"physics", "f_th", kMobile},
      {"physics", "bins", kMobile},
      {"physics", "min_p_delta", kMobile},
      {"physics", "gain", kMicrowave},
      {"physics", "temperature", kMicrowave},
      {"physics", "carrier_frequency", kMicrowave},
      {"physics", "receiver_fov", kMicrowave},
      {"physics", "n_th", kMicrowave},
      {"sweep", "from", kAll},
      {"sweep", "to", kAll},
      {"sweep", "points", kAll},
      {"simulate", "mode", kAll},
      {"simulate", "tau", kAll},
      {"simulate", "nbar", kAll},
      {"simulate", "z", kMobile},
      {"simulate", "pulses", kAll},
      {"simulate", "pilot_fraction", kAll},
      {"simulate", "pilot_noise", kAll},
      {"simulate", "defade", kAll},
      {"coverage", "tau", kAll},
      {"coverage", "nbar", kAll},
      {"coverage", "m_p", kAll},
      {"coverage", "rounds", kAll},
      {"coverage", "eps_pe", kAll},
      {"output", "format", kAll},
      {"output", "clamp", kAll},
  };
  return t;
}

inline const std::vector<std::string>& protocol_keys() {
  static const std::vector<std::string> k = {"N",    "m",    "m_fraction", "m_pl",   "m_pl_fraction", "f_et", "d",
                                             "beta", "p_ec", "eps",        "eps_pe", "eps_s",         "eps_h", "eps_cor"};
  return k;
}

class Reader {
 public:
  explicit Reader(std::vector<Entry> entries) : entries_(std::move(entries)) {}

  const Entry* find(std::string_view section, std::string_view key) const {
    for (const auto& e : entries_) {
      if (e.section == section && e.key == key) return &e;
    }
    return nullptr;
  }
  bool has(std::string_view section, std::string_view key) const { return find(section, key) != nullptr; }
  bool has_section(std::string_view section) const {
    return std::any_of(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.section == section; });
  }

  template <typename Fn>
  auto with(const Entry& e, Fn&& fn) const {
    try {
      return fn(e.value);
    } catch (const ConfigError& err) {
      throw ConfigError("line " + std::to_string(e.line) + ": [" + e.section + "] " + e.key + ": " + err.what());
    }
  }

  double number(std::string_view section, std::string_view key, Dim dim, double fallback) const {
    const auto* e = find(section, key);
    if (!e) return fallback;
    return with(*e, [dim](const std::string& v) { return parse_quantity(v, dim); });
  }
  std::int64_t count(std::string_view section, std::string_view key, std::int64_t fallback) const {
    const auto* e = find(section, key);
    if (!e) return fallback;
    return with(*e, [](const std::string& v) { return parse_count(v); });
  }
  bool flag(std::string_view section, std::string_view key, bool fallback) const {
    const auto* e = find(section, key);
    if (!e) return fallback;
    return with(*e, [](const std::string& v) { return parse_bool(v); });
  }
  std::string word(std::string_view section, std::string_view key, std::string fallback,
                   std::initializer_list<const char*> allowed) const {
    const auto* e = find(section, key);
    if (!e) return fallback;
    for (const char* a : allowed) {
      if (e->value == a) return e->value;
    }
    std::string list;
    for (const char* a : allowed) list += std::string(list.empty() ? "" : "|") + a;
    throw ConfigError("line " + std::to_string(e->line) + ": [" + e->section + "] " + e->key + ": expected " + list +
                      ", got '" + e->value + "'");
  }
  std::vector<const Entry*> all(std::string_view section, std::string_view key) const {
    std::vector<const Entry*> out;
    for (const auto& e : entries_) {
      if (e.section == section && e.key == key) out.push_back(&e);
    }
    return out;
  }
  const std::vector<Entry>& entries() const { return entries_; }

 private:
  std::vector<Entry> entries_;
};

inline unsigned family_bit(ChannelFamily f) {
  switch (f) {
    case ChannelFamily::fixed_loss: return kFixed;
    case ChannelFamily::optical_fixed: return kOptical;
    case ChannelFamily::optical_mobile: return kMobile;
    case ChannelFamily::microwave: return kMicrowave;
  }
  return 0;
}

inline ChannelFamily parse_family(const std::string& s) {
  if (s == "fixed-loss") return ChannelFamily::fixed_loss;
  if (s == "optical-fixed") return ChannelFamily::optical_fixed;
  if (s == "optical-mobile") return ChannelFamily::optical_mobile;
  if (s == "microwave") return ChannelFamily::microwave;
  throw ConfigError("[scenario] family: expected fixed-loss|optical-fixed|optical-mobile|microwave, got '" + s + "'");
}

inline Curve parse_curve(const Entry& e) {
  std::istringstream in(e.value);
  std::string t, s, a, extra;
  in >> t >> s >> a >> extra;
  const auto where = "line " + std::to_string(e.line) + ": [scenario] curve: ";
  if (t.empty() || s.empty() || a.empty() || !extra.empty()) {
    throw ConfigError(where + "expected '<eve1|eve2|eve3> <standard|los> <collective|general>'");
  }
  Curve c;
  if (t == "eve1") c.trust = TrustLevel::loss_and_noise_trusted;
  else if (t == "eve2") c.trust = TrustLevel::noise_trusted;
  else if (t == "eve3") c.trust = TrustLevel::untrusted;
  else throw ConfigError(where + "unknown trust level '" + t + "'");
  if (s == "standard") c.security = SecurityType::standard;
  else if (s == "los") c.security = SecurityType::line_of_sight;
  else throw ConfigError(where + "unknown security type '" + s + "'");
  if (a == "collective") c.attack = AttackModel::collective;
  else if (a == "general") c.attack = AttackModel::general;
  else throw ConfigError(where + "unknown attack model '" + a + "'");
  return c;
}

inline std::string curve_spelling(const Curve& c) {
  const char* t = c.trust == TrustLevel::loss_and_noise_trusted ? "eve1"
                  : c.trust == TrustLevel::noise_trusted        ? "eve2"
                                                                : "eve3";
  return std::string(t) + " " + (c.security == SecurityType::standard ? "standard" : "los") + " " +
         to_string(c.attack);
}

inline void read_protocol(const Reader& r, std::string_view section, ProtocolParams& p) {
  const std::string sec(section);
  p.total = r.count(sec, "N", p.total);
  if (r.has(sec, "m") && r.has(sec, "m_fraction")) throw ConfigError("[" + sec + "] give m or m_fraction, not both");
  if (r.has(sec, "m_fraction")) {
    p.pe = static_cast<std::int64_t>(std::llround(r.number(sec, "m_fraction", Dim::none, 0.0) * p.total));
  } else if (!r.has(sec, "m") && r.has(sec, "N")) {
    p.pe = p.total / 10;
  }
  p.pe = r.count(sec, "m", p.pe);
  if (r.has(sec, "m_pl") && r.has(sec, "m_pl_fraction")) {
    throw ConfigError("[" + sec + "] give m_pl or m_pl_fraction, not both");
  }
  if (r.has(sec, "m_pl_fraction")) {
    p.pilots = static_cast<std::int64_t>(std::llround(r.number(sec, "m_pl_fraction", Dim::none, 0.0) * p.total));
  }
  p.pilots = r.count(sec, "m_pl", p.pilots);
  p.f_et = r.number(sec, "f_et", Dim::none, p.f_et);
  p.d = static_cast<int>(r.count(sec, "d", p.d));
  p.beta = r.number(sec, "beta", Dim::none, p.beta);
  p.p_ec = r.number(sec, "p_ec", Dim::none, p.p_ec);
  if (r.has(sec, "eps")) {
    const double e = r.number(sec, "eps", Dim::none, 0.0);
    p.eps_pe = p.eps_s = p.eps_h = p.eps_cor = e;
  }
  p.eps_pe = r.number(sec, "eps_pe", Dim::none, p.eps_pe);
  p.eps_s = r.number(sec, "eps_s", Dim::none, p.eps_s);
  p.eps_h = r.number(sec, "eps_h", Dim::none, p.eps_h);
  p.eps_cor = r.number(sec, "eps_cor", Dim::none, p.eps_cor);
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("[" + sec + "] " + e.what());
  }
}

inline void check_keys(const Reader& r, ChannelFamily family) {
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& e : r.entries()) {
    const auto where = "line " + std::to_string(e.line) + ": ";
    const bool protocol_section = e.section == "protocol" || e.section == "general";
    if (protocol_section) {
      const auto& keys = protocol_keys();
      const bool known = std::find(keys.begin(), keys.end(), e.key) != keys.end() ||
                         (e.section == "protocol" && e.key == "mu") || (e.section == "general" && e.key == "c_et");
      if (!known) throw ConfigError(where + "unknown key '" + e.key + "' in [" + e.section + "]");
    } else {
      const auto& table = key_table();
      const auto it = std::find_if(table.begin(), table.end(), [&](const KeySpec& k) {
        return e.section == k.section && e.key == k.key;
      });
      if (it == table.end()) {
        const bool section_known = std::any_of(table.begin(), table.end(), [&](const KeySpec& k) {
          return e.section == k.section;
        });
        if (!section_known) throw ConfigError(where + "unknown section [" + e.section + "]");
        throw ConfigError(where + "unknown key '" + e.key + "' in [" + e.section + "]");
      }
      if ((it->families & family_bit(family)) == 0) {
        throw ConfigError(where + "rule family-keys: [" + e.section + "] " + e.key + " does not apply to family " +
                          to_string(family));
      }
      if (it->repeatable) continue;
    }
    if (!seen.emplace(e.section, e.key).second) {
      throw ConfigError(where + "duplicate key '" + e.key + "' in [" + e.section + "]");
    }
  }
}

inline std::string sweep_variable(ChannelFamily f) {
  switch (f) {
    case ChannelFamily::fixed_loss: return "loss_db";
    case ChannelFamily::optical_fixed: return "distance_m";
    case ChannelFamily::optical_mobile: return "z_max_m";
    case ChannelFamily::microwave: return "distance_m";
  }
  return "x";
}

inline Dim sweep_dim(ChannelFamily f) { return f == ChannelFamily::fixed_loss ? Dim::loss : Dim::length; }

}  // namespace config

/// Resolves a scenario file into library inputs, applying the cross-field
/// rules and echoing derived quantities. Throws ConfigError.
inline Scenario resolve_scenario(std::string_view text) {
  using namespace config;
  const Reader r(parse_ini(text));
  if (!r.has("scenario", "family")) throw ConfigError("[scenario] family is required");
  Scenario sc;
  sc.link.family = parse_family(r.find("scenario", "family")->value);
  check_keys(r, sc.link.family);
  const auto fam = sc.link.family;
  auto& link = sc.link;
  auto& setup = link.setup;

  sc.name = r.has("scenario", "name") ? r.find("scenario", "name")->value : std::string("unnamed");
  link.detection = r.word("scenario", "detection", "heterodyne", {"heterodyne", "homodyne"}) == "heterodyne"
                       ? Detection::heterodyne
                       : Detection::homodyne;
  setup.lo_kind = r.word("scenario", "lo", "LLO", {"LLO", "TLO"}) == "LLO" ? LoKind::local : LoKind::transmitted;
  if (r.has("scenario", "seed")) {
    sc.seed = r.with(*r.find("scenario", "seed"), [](const std::string& v) {
      std::uint64_t s = 0;
      const auto res = std::from_chars(v.data(), v.data() + v.size(), s);
      if (res.ec != std::errc() || res.ptr != v.data() + v.size()) throw ConfigError("expected an unsigned integer");
      return s;
    });
  }

  // Protocol blocks.
  sc.protocol.mu = r.number("protocol", "mu", Dim::none, sc.protocol.mu);
  read_protocol(r, "protocol", sc.protocol);
  sc.general = sc.protocol;
  sc.general.f_et = 0.2;
  read_protocol(r, "general", sc.general);
  if (r.has("general", "c_et")) link.c_et = r.number("general", "c_et", Dim::none, 0.0);

  // Physics.
  setup.nu_det = nu_det(link.detection);
  setup.modulation = sc.protocol.mu - 1.0;
  setup.wavelength = r.number("physics", "wavelength", Dim::length, setup.wavelength);
  setup.detector_bandwidth = r.number("physics", "detector_bandwidth", Dim::frequency, setup.detector_bandwidth);
  setup.nep = r.number("physics", "nep", Dim::nep, setup.nep);
  setup.lo_pulse_duration = r.number("physics", "lo_pulse_duration", Dim::time, setup.lo_pulse_duration);
  setup.lo_power = r.number("physics", "lo_power", Dim::power, setup.lo_power);
  setup.linewidth = r.number("physics", "linewidth", Dim::frequency, setup.linewidth);
  setup.clock = r.number("physics", "clock", Dim::frequency, setup.clock);
  setup.n_other = r.number("physics", "n_other", Dim::none, setup.n_other);
  setup.n_tlo_phase = r.number("physics", "n_tlo_phase", Dim::none, setup.n_tlo_phase);
  link.eta_eff = r.number("physics", "eta_eff", Dim::none, link.eta_eff);
  link.beam.wavelength = setup.wavelength;
  link.beam.waist = r.number("physics", "waist", Dim::length, link.beam.waist);
  link.beam.curvature = r.number("physics", "curvature", Dim::length, link.beam.curvature);
  link.beam.focused = r.flag("physics", "focused", link.beam.focused);
  link.aperture = r.number("physics", "aperture", Dim::length, link.aperture);
  link.eta_atm = r.number("physics", "eta_atm", Dim::none, link.eta_atm);
  link.loss_mode = r.word("physics", "loss_mode", "channel", {"channel", "total"}) == "channel" ? LossMode::channel
                                                                                              : LossMode::total;
  link.angular_error = r.number("physics", "angular_error", Dim::angle, link.angular_error);
  link.f_th = r.number("physics", "f_th", Dim::none, link.f_th);
  link.bins = static_cast<int>(r.count("physics", "bins", link.bins));
  link.min_p_delta = r.number("physics", "min_p_delta", Dim::none, link.min_p_delta);
  link.gain = r.number("physics", "gain", Dim::none, link.gain);

  if (!(link.eta_eff > 0.0 && link.eta_eff <= 1.0)) throw ConfigError("[physics] eta_eff must lie in (0, 1]");
  if (fam != ChannelFamily::microwave) {
    try {
      setup.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("[physics] ") + e.what());
    }
  }

  auto& derived = sc.derived;
  if (fam != ChannelFamily::microwave) {
    derived.emplace_back("theta_el", theta_el(setup));
    derived.emplace_back("theta_ph", theta_ph(setup));
    derived.emplace_back("xi_llo", 2.0 * theta_ph(setup));
    derived.emplace_back("n_ex_at_unit_tau", setup_noise(setup, 1.0));
    const bool sky = r.has("physics", "sky_radiance");
    if (sky && r.has("physics", "n_b")) {
      throw ConfigError("rule background-source: give either [physics] n_b or sky_radiance, not both");
    }
    if (sky) {
      ReceiverOptics optics;
      optics.aperture_radius = link.aperture;
      optics.field_of_view = r.number("physics", "field_of_view", Dim::solid_angle, optics.field_of_view);
      optics.spectral_filter = r.number("physics", "spectral_filter", Dim::length, optics.spectral_filter);
      optics.quantum_efficiency = link.eta_eff;
      const double radiance = r.number("physics", "sky_radiance", Dim::radiance, 0.0);
      try {
        link.n_b = sky_background_photons(optics, setup.wavelength, setup.detector_bandwidth, radiance);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("[physics] ") + e.what());
      }
      derived.emplace_back("gamma_r", photon_collection(optics, setup.detector_bandwidth));
    } else {
      if (r.has("physics", "field_of_view") || r.has("physics", "spectral_filter")) {
        throw ConfigError("rule background-source: field_of_view and spectral_filter need sky_radiance");
      }
      link.n_b = r.number("physics", "n_b", Dim::none, link.n_b);
    }
    if (!(link.n_b >= 0.0)) throw ConfigError("[physics] n_b must be non-negative");
    derived.emplace_back("n_b", link.n_b);
  } else {
    const double freq = r.number("physics", "carrier_frequency", Dim::frequency, 1e9);
    const double temp = r.number("physics", "temperature", Dim::temperature, 290.0);
    const double fov = r.number("physics", "receiver_fov", Dim::solid_angle, std::pow(constants::pi / 180.0, 2));
    if (!(freq > 0.0)) throw ConfigError("[physics] carrier_frequency must be positive");
    const double lambda = constants::speed_of_light / freq;
    MicrowaveNoise mw;
    try {
      mw = microwave_thermal_photons(lambda, temp, fov, link.aperture);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("[physics] ") + e.what());
    }
    const bool override_nth = r.has("physics", "n_th");
    if (override_nth && (r.has("physics", "temperature") || r.has("physics", "receiver_fov"))) {
      throw ConfigError("rule thermal-source: give either [physics] n_th or temperature/receiver_fov, not both");
    }
    link.n_th = override_nth ? r.number("physics", "n_th", Dim::none, 0.0) : mw.n_th;
    if (!(link.n_th >= 0.0)) throw ConfigError("[physics] n_th must be non-negative");
    if (!(link.gain > 0.0) || !(link.aperture > 0.0)) throw ConfigError("[physics] gain and aperture must be positive");
    derived.emplace_back("wavelength", lambda);
    derived.emplace_back("gamma_r", mw.gamma_r);
    derived.emplace_back("n_th", link.n_th);
    derived.emplace_back("z_best", std::sqrt(link.gain / constants::pi) * link.aperture / 2.0);
  }

  // Curves and cross-field rules.
  const auto curve_entries = r.all("scenario", "curve");
  if (curve_entries.empty() && r.has_section("sweep")) {
    throw ConfigError("[scenario] a sweep needs at least one curve");
  }
  for (const auto* e : curve_entries) {
    const auto c = parse_curve(*e);
    try {
      check_curve(link, c);
    } catch (const std::invalid_argument& err) {
      throw ConfigError("line " + std::to_string(e->line) + ": " + err.what());
    }
    sc.curves.push_back(c);
  }
  if (fam == ChannelFamily::optical_mobile) {
    if (!r.has("physics", "angular_error")) {
      throw ConfigError("rule mobile-requires-fading: optical-mobile needs [physics] angular_error");
    }
    if (!(link.angular_error > 0.0)) throw ConfigError("rule mobile-requires-fading: angular_error must be positive");
    if (!(link.f_th > 0.0 && link.f_th < 1.0)) throw ConfigError("[physics] f_th must lie in (0, 1)");
    if (link.bins < 1) throw ConfigError("[physics] bins must be at least 1");
  }
  if (fam == ChannelFamily::optical_fixed || fam == ChannelFamily::optical_mobile) {
    if (!(link.aperture > 0.0) || !(link.beam.waist > 0.0)) {
      throw ConfigError("[physics] aperture and waist must be positive");
    }
    if (!(link.eta_atm > 0.0 && link.eta_atm <= 1.0)) throw ConfigError("[physics] eta_atm must lie in (0, 1]");
  }

  derived.emplace_back("w", confidence_w(sc.protocol.eps_pe));
  derived.emplace_back("epsilon", total_epsilon(sc.protocol));
  derived.emplace_back("key_signals", static_cast<double>(sc.protocol.key_signals()));
  const bool any_general = std::any_of(sc.curves.begin(), sc.curves.end(),
                                       [](const Curve& c) { return c.attack == AttackModel::general; });
  if (any_general) {
    try {
      const auto g = general_attack_extension(sc.general, link.detection, (sc.protocol.mu - 1.0) / 2.0,
                                              total_epsilon(sc.general), link.c_et);
      derived.emplace_back("w_general", confidence_w(sc.general.eps_pe));
      derived.emplace_back("key_signals_general", g.n);
      derived.emplace_back("k_n", g.k_n);
      derived.emplace_back("phi_n", g.phi);
      derived.emplace_back("epsilon_general", g.eps_prime);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("[general] ") + e.what());
    }
  }

  // Sweep.
  if (r.has_section("sweep")) {
    auto& sw = sc.sweep;
    sw.present = true;
    sw.variable = sweep_variable(fam);
    if (!r.has("sweep", "from") || !r.has("sweep", "to") || !r.has("sweep", "points")) {
      throw ConfigError("[sweep] needs from, to and points");
    }
    sw.from = r.number("sweep", "from", sweep_dim(fam), 0.0);
    sw.to = r.number("sweep", "to", sweep_dim(fam), 0.0);
    sw.points = static_cast<int>(r.count("sweep", "points", 0));
    if (sw.points < 1) throw ConfigError("[sweep] points must be at least 1");
    if (!(sw.to >= sw.from)) throw ConfigError("[sweep] to must not be below from");
    if (!(sw.from >= 0.0)) throw ConfigError("[sweep] from must be non-negative");
  }

  // Simulator.
  if (r.has_section("simulate")) {
    auto& sm = sc.simulate;
    sm.present = true;
    sm.fading = r.word("simulate", "mode", fam == ChannelFamily::optical_mobile ? "fading" : "fixed",
                       {"fixed", "fading"}) == "fading";
    if (sm.fading && fam != ChannelFamily::optical_mobile) {
      throw ConfigError("rule fading-needs-mobile: [simulate] mode = fading needs family optical-mobile");
    }
    sm.tau = r.number("simulate", "tau", Dim::none, sm.tau);
    sm.nbar = r.number("simulate", "nbar", Dim::none, sm.nbar);
    sm.z = r.number("simulate", "z", Dim::length, sm.z);
    sm.pulses = r.count("simulate", "pulses", sm.pulses);
    sm.pilot_fraction = r.number("simulate", "pilot_fraction", Dim::none, sm.pilot_fraction);
    sm.pilot_noise = r.number("simulate", "pilot_noise", Dim::none, sm.pilot_noise);
    sm.defade = r.flag("simulate", "defade", sm.defade);
    if (sm.pulses < 1) throw ConfigError("[simulate] pulses must be at least 1");
    if (!(sm.tau > 0.0 && sm.tau <= 1.0)) throw ConfigError("[simulate] tau must lie in (0, 1]");
    if (!(sm.nbar >= 0.0)) throw ConfigError("[simulate] nbar must be non-negative");
    if (!(sm.pilot_fraction >= 0.0 && sm.pilot_fraction < 1.0)) {
      throw ConfigError("[simulate] pilot_fraction must lie in [0, 1)");
    }
    if (!(sm.pilot_noise >= 0.0)) throw ConfigError("[simulate] pilot_noise must be non-negative");
    if (!(sm.z > 0.0)) throw ConfigError("[simulate] z must be positive");
  }

  if (r.has_section("coverage")) {
    auto& cv = sc.coverage;
    cv.present = true;
    cv.tau = r.number("coverage", "tau", Dim::none, cv.tau);
    cv.nbar = r.number("coverage", "nbar", Dim::none, cv.nbar);
    cv.m_p = r.count("coverage", "m_p", cv.m_p);
    cv.rounds = static_cast<int>(r.count("coverage", "rounds", cv.rounds));
    cv.eps_pe = r.number("coverage", "eps_pe", Dim::none, cv.eps_pe);
    if (cv.rounds < 100) throw ConfigError("[coverage] rounds must be at least 100");
    if (cv.m_p < 2 || cv.m_p % setup.nu_det != 0) {
      throw ConfigError("[coverage] m_p must be a positive multiple of the detector's nu_det");
    }
    if (!(cv.eps_pe > 0.0 && cv.eps_pe < 0.5)) throw ConfigError("[coverage] eps_pe must lie in (0, 0.5)");
    if (!(cv.tau > 0.0 && cv.tau <= 1.0)) throw ConfigError("[coverage] tau must lie in (0, 1]");
    if (!(cv.nbar >= 0.0)) throw ConfigError("[coverage] nbar must be non-negative");
  }

  sc.output.format = r.word("output", "format", "csv", {"csv", "json"});
  sc.output.clamp = r.flag("output", "clamp", true);

  // Canonical echo of the resolved inputs; the hash identifies the physics,
  // not the spelling of the file.
  std::ostringstream os;
  auto put = [&os](const char* key, const std::string& v) { os << key << " = " << v << '\n'; };
  auto num = [&put](const char* key, double v) { put(key, format_double(v)); };
  put("scenario.name", sc.name);
  put("scenario.family", to_string(fam));
  put("scenario.detection", link.detection == Detection::heterodyne ? "heterodyne" : "homodyne");
  put("scenario.lo", to_string(setup.lo_kind));
  for (const auto& c : sc.curves) put("scenario.curve", curve_spelling(c));
  if (fam != ChannelFamily::microwave) {
    num("physics.wavelength", setup.wavelength);
    num("physics.detector_bandwidth", setup.detector_bandwidth);
    num("physics.nep", setup.nep);
    num("physics.lo_pulse_duration", setup.lo_pulse_duration);
    num("physics.lo_power", setup.lo_power);
    num("physics.linewidth", setup.linewidth);
    num("physics.clock", setup.clock);
    num("physics.n_other", setup.n_other);
    num("physics.n_tlo_phase", setup.n_tlo_phase);
    num("physics.n_b", link.n_b);
  }
  num("physics.eta_eff", link.eta_eff);
  if (fam == ChannelFamily::fixed_loss) put("physics.loss_mode", link.loss_mode == LossMode::channel ? "channel" : "total");
  if (fam == ChannelFamily::optical_fixed || fam == ChannelFamily::optical_mobile) {
    num("physics.aperture", link.aperture);
    num("physics.waist", link.beam.waist);
    num("physics.curvature", link.beam.curvature);
    put("physics.focused", link.beam.focused ? "true" : "false");
    num("physics.eta_atm", link.eta_atm);
  }
  if (fam == ChannelFamily::optical_mobile) {
    num("physics.angular_error", link.angular_error);
    num("physics.f_th", link.f_th);
    num("physics.bins", link.bins);
    num("physics.min_p_delta", link.min_p_delta);
  }
  if (fam == ChannelFamily::microwave) {
    num("physics.aperture", link.aperture);
    num("physics.gain", link.gain);
    num("physics.n_th", link.n_th);
  }
  auto proto = [&](const char* sec, const ProtocolParams& p) {
    const std::string s(sec);
    num((s + ".N").c_str(), static_cast<double>(p.total));
    num((s + ".m").c_str(), static_cast<double>(p.pe));
    num((s + ".m_pl").c_str(), static_cast<double>(p.pilots));
    num((s + ".f_et").c_str(), p.f_et);
    num((s + ".d").c_str(), p.d);
    num((s + ".beta").c_str(), p.beta);
    num((s + ".p_ec").c_str(), p.p_ec);
    num((s + ".eps_pe").c_str(), p.eps_pe);
    num((s + ".eps_s").c_str(), p.eps_s);
    num((s + ".eps_h").c_str(), p.eps_h);
    num((s + ".eps_cor").c_str(), p.eps_cor);
    num((s + ".mu").c_str(), p.mu);
  };
  proto("protocol", sc.protocol);
  if (any_general) {
    proto("general", sc.general);
    if (link.c_et) num("general.c_et", *link.c_et);
  }
  if (sc.sweep.present) {
    put("sweep.variable", sc.sweep.variable);
    num("sweep.from", sc.sweep.from);
    num("sweep.to", sc.sweep.to);
    num("sweep.points", sc.sweep.points);
  }
  if (sc.simulate.present) {
    const auto& sm = sc.simulate;
    put("simulate.mode", sm.fading ? "fading" : "fixed");
    num("simulate.tau", sm.tau);
    num("simulate.nbar", sm.nbar);
    num("simulate.z", sm.z);
    num("simulate.pulses", static_cast<double>(sm.pulses));
    num("simulate.pilot_fraction", sm.pilot_fraction);
    num("simulate.pilot_noise", sm.pilot_noise);
    put("simulate.defade", sm.defade ? "true" : "false");
  }
  if (sc.coverage.present) {
    const auto& cv = sc.coverage;
    num("coverage.tau", cv.tau);
    num("coverage.nbar", cv.nbar);
    num("coverage.m_p", static_cast<double>(cv.m_p));
    num("coverage.rounds", cv.rounds);
    num("coverage.eps_pe", cv.eps_pe);
  }
  sc.canonical = os.str();
  sc.hash = fnv1a(sc.canonical);
  return sc;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path + ": cannot open scenario file");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return resolve_scenario(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace cvqkd
