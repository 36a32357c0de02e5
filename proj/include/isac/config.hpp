#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "isac/channels.hpp"
#include "isac/errors.hpp"
#include "isac/geometry.hpp"
#include "isac/transmit.hpp"

namespace isac {

enum class LayoutMode { Random, Fixed };

/// Resolved experiment configuration. The file-facing keys are the flat
/// lower_snake_case set listed in kConfigKeys; remaining members are
/// programmatic knobs with fixed defaults.
struct ExperimentConfig {
  // file-facing keys
  double area_m = 1000.0;
  int k_ues = 16;
  int m_cf = 32;
  int na_cf = 4;
  int m_tx = 24;
  int m_rx = 8;
  int n_subcarriers = 12;
  double scs_hz = 30e3;
  double cp_s = 2.34e-6;
  int n_symbols = 14;
  double carrier_hz = 3e9;
  double p_per_tap_w = 1.0;
  double rcs_dbsm = 10.0;
  double noise_dbm_hz = -174.0;
  double noise_figure_db = 9.0;
  double k_factor_db = 10.0;
  double pathloss_intercept_db = -30.5;
  double pathloss_exponent = 36.7;  // dB per decade of distance
  double shadow_sigma_db = 4.0;
  double target_speed_mps = 10.0;
  int trials = 1000;
  std::uint64_t seed = 1;
  CsiMode csi_mode = CsiMode::Mmse;
  SteeringNorm steering_norm = SteeringNorm::Unit;
  LayoutMode layout = LayoutMode::Random;

  // programmatic knobs
  double ap_height_m = 10.0;
  double bs_height_m = 10.0;
  double ue_height_m = 1.65;
  double target_z_min_m = 20.0;
  double target_z_max_m = 100.0;
  int sensing_zones = 4;
  ZoneScope zone_scope = ZoneScope::FullNetwork;
  ServingMode serving_mode = ServingMode::AllTransmitters;
  int serving_nearest_q = 8;
  double pilot_power_w = 0.1;
  SymbolAlphabet alphabet = SymbolAlphabet::UniformPhase;
  bool sensing_beam_enabled = true;

  double wavelength_m() const { return kSpeedOfLight / carrier_hz; }
  double bandwidth_hz() const { return n_subcarriers * scs_hz; }
  double rcs_variance_m2() const { return db_to_linear(rcs_dbsm); }

  /// Per-antenna noise variance in watts over the configured occupied
  /// bandwidth: sigma_z^2(dBm) = N0 + NF + 10 log10(B). Fixed at parse time;
  /// subcarrier sweeps do not rescale it.
  double noise_variance_w() const {
    const double dbm = noise_dbm_hz + noise_figure_db + 10.0 * std::log10(bandwidth_hz());
    return std::pow(10.0, (dbm - 30.0) / 10.0);
  }

  OfdmNumerology numerology() const {
    return {n_subcarriers, n_symbols, scs_hz, cp_s};
  }

  CfSizes cf_sizes() const { return {m_cf, na_cf, m_tx, m_rx, p_per_tap_w}; }
};

inline const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "area_m",        "k_ues",          "m_cf",
      "na_cf",         "m_tx",           "m_rx",
      "n_subcarriers", "scs_hz",         "cp_s",
      "n_symbols",     "carrier_hz",     "p_per_tap_w",
      "rcs_dbsm",      "noise_dbm_hz",   "noise_figure_db",
      "k_factor_db",   "pathloss_intercept_db", "pathloss_exponent",
      "shadow_sigma_db", "target_speed_mps", "trials",
      "seed",          "csi_mode",       "steering_norm",
      "layout"};
  return keys;
}

inline void validate(const ExperimentConfig& c) {
  auto bad = [](const std::string& key, const std::string& what) -> ConfigError {
    return ConfigError("config key '" + key + "': " + what);
  };
  if (!(c.area_m > 0.0)) throw bad("area_m", "must be > 0");
  if (c.k_ues < 0) throw bad("k_ues", "must be >= 0");
  if (c.m_cf < 2) throw bad("m_cf", "must be >= 2");
  if (c.na_cf < 1) throw bad("na_cf", "must be >= 1");
  if (c.m_tx < 1) throw bad("m_tx", "must be >= 1 (at least one transmit AP)");
  if (c.m_rx < 1) throw bad("m_rx", "must be >= 1 (at least one receive AP)");
  if (c.m_tx + c.m_rx != c.m_cf)
    throw bad("m_tx", "m_tx + m_rx must equal m_cf");
  if (c.n_subcarriers < 1) throw bad("n_subcarriers", "must be >= 1");
  if (!(c.scs_hz > 0.0)) throw bad("scs_hz", "must be > 0");
  if (c.cp_s < 0.0) throw bad("cp_s", "must be >= 0");
  if (c.n_symbols < 1) throw bad("n_symbols", "must be >= 1");
  if (!(c.carrier_hz > 0.0)) throw bad("carrier_hz", "must be > 0");
  if (!(c.p_per_tap_w > 0.0)) throw bad("p_per_tap_w", "must be > 0");
  if (c.noise_figure_db < 0.0) throw bad("noise_figure_db", "must be >= 0 dB");
  if (c.shadow_sigma_db < 0.0) throw bad("shadow_sigma_db", "must be >= 0 dB");
  if (!(c.pathloss_exponent > 0.0)) throw bad("pathloss_exponent", "must be > 0");
  if (c.target_speed_mps < 0.0) throw bad("target_speed_mps", "must be >= 0");
  if (c.trials < 1) throw bad("trials", "must be >= 1");
  if (c.k_factor_db < -300.0) throw bad("k_factor_db", "out of range");
  // Narrowband radar processing assumes the worst-case Doppler shift stays
  // far below the subcarrier spacing.
  const double fd_max = 2.0 * c.target_speed_mps / c.wavelength_m();
  if (!(fd_max < 0.01 * c.scs_hz))
    throw bad("target_speed_mps",
              "maximum Doppler must stay below 1% of the subcarrier spacing");
  tiling_dims(c.sensing_zones);  // throws for unsupported zone counts
}

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': not a number: '" + v + "'");
  }
}

inline long long parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long x = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': not an integer: '" + v + "'");
  }
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const unsigned long long x = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': not an unsigned integer: '" + v + "'");
  }
}

inline std::string fmt_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace detail

/// Parses the flat key=value configuration text. '#' starts a comment,
/// blank lines are ignored, unknown keys are hard errors; absent keys keep
/// their defaults.
inline ExperimentConfig parse_config_string(const std::string& text) {
  ExperimentConfig c;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = detail::trim(line);
    if (stripped.empty()) continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected key = value");
    const std::string key = detail::trim(stripped.substr(0, eq));
    const std::string val = detail::trim(stripped.substr(eq + 1));

    if (key == "area_m") c.area_m = detail::parse_double(key, val);
    else if (key == "k_ues") c.k_ues = static_cast<int>(detail::parse_int(key, val));
    else if (key == "m_cf") c.m_cf = static_cast<int>(detail::parse_int(key, val));
    else if (key == "na_cf") c.na_cf = static_cast<int>(detail::parse_int(key, val));
    else if (key == "m_tx") c.m_tx = static_cast<int>(detail::parse_int(key, val));
    else if (key == "m_rx") c.m_rx = static_cast<int>(detail::parse_int(key, val));
    else if (key == "n_subcarriers") c.n_subcarriers = static_cast<int>(detail::parse_int(key, val));
    else if (key == "scs_hz") c.scs_hz = detail::parse_double(key, val);
    else if (key == "cp_s") c.cp_s = detail::parse_double(key, val);
    else if (key == "n_symbols") c.n_symbols = static_cast<int>(detail::parse_int(key, val));
    else if (key == "carrier_hz") c.carrier_hz = detail::parse_double(key, val);
    else if (key == "p_per_tap_w") c.p_per_tap_w = detail::parse_double(key, val);
    else if (key == "rcs_dbsm") c.rcs_dbsm = detail::parse_double(key, val);
    else if (key == "noise_dbm_hz") c.noise_dbm_hz = detail::parse_double(key, val);
    else if (key == "noise_figure_db") c.noise_figure_db = detail::parse_double(key, val);
    else if (key == "k_factor_db") c.k_factor_db = detail::parse_double(key, val);
    else if (key == "pathloss_intercept_db") c.pathloss_intercept_db = detail::parse_double(key, val);
    else if (key == "pathloss_exponent") c.pathloss_exponent = detail::parse_double(key, val);
    else if (key == "shadow_sigma_db") c.shadow_sigma_db = detail::parse_double(key, val);
    else if (key == "target_speed_mps") c.target_speed_mps = detail::parse_double(key, val);
    else if (key == "trials") c.trials = static_cast<int>(detail::parse_int(key, val));
    else if (key == "seed") c.seed = detail::parse_u64(key, val);
    else if (key == "csi_mode") {
      if (val == "perfect") c.csi_mode = CsiMode::Perfect;
      else if (val == "mmse") c.csi_mode = CsiMode::Mmse;
      else throw ConfigError("config key 'csi_mode': expected perfect|mmse, got '" + val + "'");
    } else if (key == "steering_norm") {
      if (val == "unit") c.steering_norm = SteeringNorm::Unit;
      else if (val == "literal") c.steering_norm = SteeringNorm::Literal;
      else throw ConfigError("config key 'steering_norm': expected unit|literal, got '" + val + "'");
    } else if (key == "layout") {
      if (val == "random") c.layout = LayoutMode::Random;
      else if (val == "fixed") c.layout = LayoutMode::Fixed;
      else throw ConfigError("config key 'layout': expected random|fixed, got '" + val + "'");
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  validate(c);
  return c;
}

inline ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_string(buf.str());
}

/// Canonical text form; parse(serialize(c)) == c.
inline std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream out;
  out << "area_m = " << detail::fmt_double(c.area_m) << '\n';
  out << "k_ues = " << c.k_ues << '\n';
  out << "m_cf = " << c.m_cf << '\n';
  out << "na_cf = " << c.na_cf << '\n';
  out << "m_tx = " << c.m_tx << '\n';
  out << "m_rx = " << c.m_rx << '\n';
  out << "n_subcarriers = " << c.n_subcarriers << '\n';
  out << "scs_hz = " << detail::fmt_double(c.scs_hz) << '\n';
  out << "cp_s = " << detail::fmt_double(c.cp_s) << '\n';
  out << "n_symbols = " << c.n_symbols << '\n';
  out << "carrier_hz = " << detail::fmt_double(c.carrier_hz) << '\n';
  out << "p_per_tap_w = " << detail::fmt_double(c.p_per_tap_w) << '\n';
  out << "rcs_dbsm = " << detail::fmt_double(c.rcs_dbsm) << '\n';
  out << "noise_dbm_hz = " << detail::fmt_double(c.noise_dbm_hz) << '\n';
  out << "noise_figure_db = " << detail::fmt_double(c.noise_figure_db) << '\n';
  out << "k_factor_db = " << detail::fmt_double(c.k_factor_db) << '\n';
  out << "pathloss_intercept_db = " << detail::fmt_double(c.pathloss_intercept_db) << '\n';
  out << "pathloss_exponent = " << detail::fmt_double(c.pathloss_exponent) << '\n';
  out << "shadow_sigma_db = " << detail::fmt_double(c.shadow_sigma_db) << '\n';
  out << "target_speed_mps = " << detail::fmt_double(c.target_speed_mps) << '\n';
  out << "trials = " << c.trials << '\n';
  out << "seed = " << c.seed << '\n';
  out << "csi_mode = " << (c.csi_mode == CsiMode::Perfect ? "perfect" : "mmse") << '\n';
  out << "steering_norm = "
      << (c.steering_norm == SteeringNorm::Unit ? "unit" : "literal") << '\n';
  out << "layout = " << (c.layout == LayoutMode::Random ? "random" : "fixed") << '\n';
  return out.str();
}

}  // namespace isac
