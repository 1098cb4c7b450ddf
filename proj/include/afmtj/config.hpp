#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "bitline.hpp"
#include "dynamics.hpp"
#include "errors.hpp"
#include "experiments.hpp"
#include "montecarlo.hpp"
#include "peripherals.hpp"
#include "read_path.hpp"

namespace afmtj {

/// Bundled defaults; config/defaults.json carries the same document.
inline constexpr const char* kDefaultConfig = R"json({
  "master_seed": 20240917,
  "workers": 1,
  "output_dir": "afmtj_out",
  "device": {
    "afmtj": {
      "gamma": 1.7595e11,
      "alpha": 0.1,
      "Ms": 1.0e6,
      "J_AF": -13.6119e6,
      "Hk": 3.81044e-3,
      "sot_efficiency": 1.25224e-2,
      "field_like_ratio": 1.0,
      "Rp": 3341.3,
      "TMR": 0.8,
      "initial_tilt": 0.02,
      "readout": "neel"
    },
    "mtj": {
      "gamma": 1.7595e11,
      "alpha": 0.01,
      "Ms": 1.0e6,
      "J_AF": 0.0,
      "Hk": 1.02066,
      "sot_efficiency": 3.34177e-2,
      "field_like_ratio": 1.0,
      "Rp": 4589.5,
      "TMR": 1.5,
      "initial_tilt": 0.02,
      "readout": "neel"
    }
  },
  "array": {
    "n_segments": 16,
    "tsv_hops": 2,
    "c_wire": 10e-15,
    "r_bl": 200.0,
    "c_bit": 22.5e-15,
    "c_tsv": 15e-15,
    "thermal": {
      "n_tiers": 3,
      "t_bottom": 373.15,
      "delta_t_total": -75.0
    },
    "tile": {
      "tiers": 3,
      "banks_total": 32,
      "bank_capacity_mb": 8.0,
      "bitline_cells": 256,
      "wordline_cells": 2048,
      "cell_area_f2": 80.0,
      "feature_nm": 45.0,
      "tile_area_mm2": 15.94,
      "tsv_hops_min": 1,
      "tsv_hops_max": 3,
      "replication_min": 2,
      "replication_max": 3
    }
  },
  "read": {
    "v_read": 0.9,
    "t_sa": 60e-12,
    "dt": 0.5e-12,
    "rp_tempco": -2e-4,
    "tmr_tempco": -1e-3,
    "vdd_nominal": 0.9,
    "offset_vdd_exponent": 1.0
  },
  "precharge": {
    "variant": "pd_eq_plus",
    "drive_resistance": 1000.0,
    "drive_temp_exponent": 1.5,
    "r_bl_tempco": 3.9e-3,
    "k": 5.0,
    "beta": 0.4,
    "r_path_median": 0.0,
    "pd_window": 0.0,
    "dv0": 0.1,
    "residual_limit": 1e-3
  },
  "sense": {
    "variant": "plus",
    "v_ref": 0.7,
    "sigma_offset": 2e-3,
    "t_decision": 50e-12,
    "gm_thermal_coeff": 2e-3
  },
  "corners": {
    "baseline": [
      {"name": "SS", "vdd": 0.81, "temp_c": -40.0, "t_read_ns": 0.6, "e_read_fj": 0.0505},
      {"name": "TT", "vdd": 0.90, "temp_c": 25.0, "t_read_ns": 0.8, "e_read_fj": 0.0733},
      {"name": "FF", "vdd": 0.99, "temp_c": 85.0, "t_read_ns": 0.9, "e_read_fj": 0.111}
    ],
    "plus": [
      {"name": "SS", "vdd": 0.81, "temp_c": -40.0, "t_read_ns": 0.6, "e_read_fj": 0.0123},
      {"name": "TT", "vdd": 0.90, "temp_c": 25.0, "t_read_ns": 0.8, "e_read_fj": 0.0128},
      {"name": "FF", "vdd": 0.99, "temp_c": 85.0, "t_read_ns": 0.9, "e_read_fj": 0.0140}
    ]
  },
  "driver": {
    "variant": "wd_write",
    "amplitude_w0": 0.7,
    "amplitude_w1": 0.7,
    "pulse_width": 0.5e-9,
    "t_rise": 16e-12,
    "t_fall": 16e-12,
    "thermal_comp_coeff": 1e-3,
    "c_out": 1e-15,
    "r_out": 100.0
  },
  "write": {
    "disturb_fraction": 0.25,
    "eff_tempco": -1e-3,
    "hk_tempco": -2e-3,
    "settle": 20e-12
  },
  "variation": {
    "vdd": [0.8, 1.2],
    "temperature": [300.0, 475.0],
    "r_bl": [100.0, 300.0],
    "c_bit": [15e-15, 30e-15],
    "c_tsv": [10e-15, 20e-15],
    "sigma_rp": 0.02,
    "sigma_tmr": 0.03,
    "sigma_hk": 0.03,
    "sigma_eff": 0.02,
    "v_write_sweep": [0.5, 1.2],
    "pulse_width_sweep": [0.1e-9, 1.5e-9]
  },
  "montecarlo": {
    "n_trials": 3150000,
    "full_read_trials": 30000,
    "full_write_trials": 300,
    "calibration_trials": 1000,
    "validation_trials": 1000,
    "read_v_spread": 0.12,
    "read_t_spread": 0.4,
    "write_v_lo": 0.3,
    "write_v_hi": 1.3,
    "max_misclassification": 5e-3
  },
  "margins": {
    "target": 1e-3,
    "confidence": 0.95,
    "n_trials": 30000,
    "temperatures_c": [25.0, 85.0],
    "delta_max": 0.9,
    "grid_step": 0.02,
    "bisect_iterations": 12
  },
  "sweep": {
    "voltages": [0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.1, 1.2],
    "t_rise": 16e-12,
    "t_max": 10e-9,
    "settle": 100e-12,
    "verify_vdd": 0.9,
    "verify_temp_c": 25.0,
    "energy_reference_v": 0.7
  },
  "calibration": {
    "afmtj_tolerance": 0.05,
    "mtj_tolerance": 0.15,
    "max_evaluations": 300,
    "initial_step": 0.15,
    "afmtj_energy_fj": 37.58,
    "mtj_energy_fj": 201.3
  },
  "waveforms": {
    "n_trials": 16,
    "t_start": 0.1e-9,
    "t_end": 1.2e-9,
    "points": 1201
  },
  "simulate": {
    "device": "afmtj",
    "voltage": 0.7,
    "t_end": 1.0e-9,
    "sample_every": 10
  }
}
)json";

inline nlohmann::json default_config_json() { return nlohmann::json::parse(kDefaultConfig); }

/// Merges `patch` onto `base`. Every key of the patch must exist in the base
/// with a compatible type; nested objects merge recursively.
inline void merge_checked(nlohmann::json& base, const nlohmann::json& patch, const std::string& path = "") {
  if (!patch.is_object()) throw ConfigInvalid("configuration root must be an object");
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    const std::string key = path.empty() ? it.key() : path + "." + it.key();
    if (!base.contains(it.key())) throw ConfigInvalid("unknown key '" + key + "'");
    nlohmann::json& slot = base[it.key()];
    const nlohmann::json& v = it.value();
    if (slot.is_object()) {
      if (!v.is_object()) throw ConfigInvalid("'" + key + "' must be an object");
      merge_checked(slot, v, key);
    } else if (slot.is_number()) {
      if (!v.is_number()) throw ConfigInvalid("'" + key + "' must be a number");
      if (slot.is_number_integer() && !v.is_number_integer()) throw ConfigInvalid("'" + key + "' must be an integer");
      slot = v;
    } else if (slot.is_string()) {
      if (!v.is_string()) throw ConfigInvalid("'" + key + "' must be a string");
      slot = v;
    } else if (slot.is_boolean()) {
      if (!v.is_boolean()) throw ConfigInvalid("'" + key + "' must be a boolean");
      slot = v;
    } else if (slot.is_array()) {
      if (!v.is_array()) throw ConfigInvalid("'" + key + "' must be an array");
      slot = v;
    } else {
      slot = v;
    }
  }
}

/// Turns "a.b.c=value" into a nested patch. The value parses as JSON when it
/// can and is taken as a string otherwise.
inline nlohmann::json override_patch(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigInvalid("override '" + assignment + "' is not of the form key=value");
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  nlohmann::json value = nlohmann::json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  nlohmann::json patch = value;
  std::size_t end = path.size();
  while (true) {
    const auto dot = path.rfind('.', end - 1);
    const std::string key = path.substr(dot == std::string::npos ? 0 : dot + 1,
                                        end - (dot == std::string::npos ? 0 : dot + 1));
    if (key.empty()) throw ConfigInvalid("override '" + assignment + "' has an empty key");
    patch = nlohmann::json{{key, patch}};
    if (dot == std::string::npos) break;
    end = dot;
  }
  return patch;
}

/// Defaults, then the config file (if any), then dotted overrides.
inline nlohmann::json load_config_json(const std::optional<std::string>& path, const std::vector<std::string>& overrides) {
  nlohmann::json cfg = default_config_json();
  if (path) {
    std::ifstream in(*path);
    if (!in) throw ConfigInvalid("cannot read config file '" + *path + "'");
    nlohmann::json user = nlohmann::json::parse(in, nullptr, false);
    if (user.is_discarded()) throw ConfigInvalid("config file '" + *path + "' is not valid JSON");
    merge_checked(cfg, user);
  }
  for (const auto& o : overrides) merge_checked(cfg, override_patch(o));
  return cfg;
}

/// FNV-1a 64 over the canonical dump, ignoring keys that do not change results.
inline std::uint64_t config_hash(const nlohmann::json& cfg) {
  nlohmann::json c = cfg;
  c.erase("workers");
  c.erase("output_dir");
  const std::string s = c.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// Typed configuration

struct RunConfig {
  std::uint64_t master_seed = 0;
  unsigned workers = 1;
  std::string output_dir;
  std::string hash;

  DeviceParams afmtj;
  DeviceParams mtj;

  ArrayConfig array;
  double r_bl = 0.0, c_bit = 0.0, c_tsv = 0.0;
  TierThermalModel thermal;
  TileGeometry tile;

  ReadConfig read;
  PrechargeEqModel precharge;
  double precharge_dv0 = 0.1;
  double precharge_limit = 1e-3;
  SenseAmpModel sense;
  ReadCornerTable corners;
  WriteDriverModel driver;
  WriteSetup write;

  VariationSpec variation;  // bulk spec: write bias and pulse width at the driver's nominal values
  std::array<double, 2> v_write_sweep{};
  std::array<double, 2> pulse_width_sweep{};

  std::uint64_t mc_trials = 0, mc_full_read = 0, mc_full_write = 0;
  SurrogateOptions surrogate;
  double max_misclassification = 5e-3;

  MarginSearchOptions margin;
  std::uint64_t margin_trials = 0;
  std::vector<double> margin_temps_c;

  std::vector<double> sweep_voltages;
  StepDrive sweep_drive;
  Corner verify_corner;
  double energy_reference_v = 0.7;

  double afmtj_tolerance = 0.05, mtj_tolerance = 0.15;
  int calibration_evaluations = 300;
  double calibration_step = 0.15;
  double afmtj_energy_target = 0.0, mtj_energy_target = 0.0;  // J

  std::uint64_t waveform_trials = 1;
  double waveform_t_start = 0.0, waveform_t_end = 0.0;
  std::size_t waveform_points = 2;

  std::string simulate_device;
  double simulate_voltage = 0.7, simulate_t_end = 1e-9;
  std::size_t simulate_sample_every = 1;

  std::string header_line() const { return "config_hash=" + hash + " master_seed=" + std::to_string(master_seed); }

  ReadSetup read_setup() const {
    ReadSetup s;
    s.rp = afmtj.Rp;
    s.tmr = afmtj.TMR;
    s.array = array;
    s.read = read;
    s.precharge = precharge;
    s.sense = sense;
    return s;
  }

  /// Bulk spec with the write bias and pulse width spread over their sweep ranges.
  VariationSpec write_validation_spec() const {
    VariationSpec w = variation;
    w[Param::v_write] = Distribution::uniform(v_write_sweep[0], v_write_sweep[1]);
    w[Param::pulse_width] = Distribution::uniform(pulse_width_sweep[0], pulse_width_sweep[1]);
    return w;
  }

  BitlineNetwork nominal_bitline() const {
    return build_bitline(r_bl, c_bit, c_tsv, array.n_segments, array.tsv_hops, array.c_wire);
  }
};

namespace detail {

inline double num(const nlohmann::json& j, const char* key, const std::string& where) {
  const auto& v = j.at(key);
  if (!v.is_number()) throw ConfigInvalid(where + "." + key + " must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigInvalid(where + "." + key + " must be finite");
  return x;
}

inline double positive(const nlohmann::json& j, const char* key, const std::string& where) {
  const double x = num(j, key, where);
  if (!(x > 0.0)) throw ConfigInvalid(where + "." + key + " must be positive");
  return x;
}

inline double non_negative(const nlohmann::json& j, const char* key, const std::string& where) {
  const double x = num(j, key, where);
  if (!(x >= 0.0)) throw ConfigInvalid(where + "." + key + " must be non-negative");
  return x;
}

inline std::uint64_t count(const nlohmann::json& j, const char* key, const std::string& where, std::uint64_t min = 1) {
  const auto& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < static_cast<long long>(min)) {
    throw ConfigInvalid(where + "." + key + " must be an integer >= " + std::to_string(min));
  }
  return v.get<std::uint64_t>();
}

inline std::array<double, 2> range(const nlohmann::json& j, const char* key, const std::string& where) {
  const auto& v = j.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    throw ConfigInvalid(where + "." + key + " must be a [lo, hi] pair");
  }
  const std::array<double, 2> r{v[0].get<double>(), v[1].get<double>()};
  if (!(r[0] < r[1]) || !std::isfinite(r[0]) || !std::isfinite(r[1])) {
    throw ConfigInvalid(where + "." + key + " needs finite lo < hi");
  }
  return r;
}

inline std::vector<double> number_list(const nlohmann::json& j, const char* key, const std::string& where) {
  const auto& v = j.at(key);
  if (!v.is_array() || v.empty()) throw ConfigInvalid(where + "." + key + " must be a non-empty list");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) throw ConfigInvalid(where + "." + key + " must hold numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

template <class E>
E choice(const nlohmann::json& j, const char* key, const std::string& where,
         std::initializer_list<std::pair<const char*, E>> options) {
  const auto& v = j.at(key);
  if (v.is_string()) {
    for (const auto& [name, value] : options)
      if (v.get<std::string>() == name) return value;
  }
  std::string allowed;
  for (const auto& [name, value] : options) allowed += std::string(allowed.empty() ? "" : ", ") + name;
  throw ConfigInvalid(where + "." + key + " must be one of: " + allowed);
}

inline DeviceParams device_from(const nlohmann::json& j, DeviceKind kind, const std::string& where) {
  DeviceParams p;
  p.kind = kind;
  p.gamma = positive(j, "gamma", where);
  p.alpha = positive(j, "alpha", where);
  p.Ms = positive(j, "Ms", where);
  p.J_AF = num(j, "J_AF", where);
  p.Hk = non_negative(j, "Hk", where);
  p.sot_efficiency = positive(j, "sot_efficiency", where);
  p.field_like_ratio = num(j, "field_like_ratio", where);
  p.Rp = positive(j, "Rp", where);
  p.TMR = non_negative(j, "TMR", where);
  p.initial_tilt = non_negative(j, "initial_tilt", where);
  p.readout = choice<Readout>(j, "readout", where, {{"neel", Readout::neel}, {"sublattice1", Readout::sublattice1}});
  try {
    p.validate();
  } catch (const InvalidParams& e) {
    throw ConfigInvalid(where + ": " + e.what());
  }
  return p;
}

}  // namespace detail

/// Builds and validates the typed configuration. Throws ConfigInvalid.
inline RunConfig parse_run_config(const nlohmann::json& j) {
  using namespace detail;
  RunConfig c;
  try {
    if (!j.at("master_seed").is_number_integer() || j.at("master_seed").get<long long>() < 0) {
      throw ConfigInvalid("master_seed must be a non-negative integer");
    }
    c.master_seed = j.at("master_seed").get<std::uint64_t>();
    c.workers = static_cast<unsigned>(count(j, "workers", "root"));
    if (!j.at("output_dir").is_string()) throw ConfigInvalid("output_dir must be a string");
    c.output_dir = j.at("output_dir").get<std::string>();
    c.hash = hash_hex(config_hash(j));

    c.afmtj = device_from(j.at("device").at("afmtj"), DeviceKind::afmtj, "device.afmtj");
    c.mtj = device_from(j.at("device").at("mtj"), DeviceKind::mtj, "device.mtj");
    if (!(c.afmtj.J_AF < 0.0)) throw ConfigInvalid("device.afmtj.J_AF must be negative (antiferromagnetic coupling)");

    const auto& a = j.at("array");
    c.array.n_segments = count(a, "n_segments", "array");
    c.array.tsv_hops = count(a, "tsv_hops", "array", 0);
    c.array.c_wire = non_negative(a, "c_wire", "array");
    c.r_bl = non_negative(a, "r_bl", "array");
    c.c_bit = non_negative(a, "c_bit", "array");
    c.c_tsv = non_negative(a, "c_tsv", "array");
    const auto& th = a.at("thermal");
    c.thermal.n_tiers = count(th, "n_tiers", "array.thermal");
    c.thermal.t_bottom = positive(th, "t_bottom", "array.thermal");
    c.thermal.delta_t_total = num(th, "delta_t_total", "array.thermal");
    const auto& tl = a.at("tile");
    c.tile.tiers = static_cast<int>(count(tl, "tiers", "array.tile"));
    c.tile.banks_total = static_cast<int>(count(tl, "banks_total", "array.tile"));
    c.tile.bank_capacity_mb = positive(tl, "bank_capacity_mb", "array.tile");
    c.tile.bitline_cells = static_cast<int>(count(tl, "bitline_cells", "array.tile"));
    c.tile.wordline_cells = static_cast<int>(count(tl, "wordline_cells", "array.tile"));
    c.tile.cell_area_f2 = positive(tl, "cell_area_f2", "array.tile");
    c.tile.feature_nm = positive(tl, "feature_nm", "array.tile");
    c.tile.tile_area_mm2 = positive(tl, "tile_area_mm2", "array.tile");
    c.tile.tsv_hops_min = static_cast<int>(count(tl, "tsv_hops_min", "array.tile", 0));
    c.tile.tsv_hops_max = static_cast<int>(count(tl, "tsv_hops_max", "array.tile", 0));
    c.tile.replication_min = static_cast<int>(count(tl, "replication_min", "array.tile"));
    c.tile.replication_max = static_cast<int>(count(tl, "replication_max", "array.tile"));
    try {
      (void)c.nominal_bitline();
      (void)c.thermal.tier_temperature(0);
    } catch (const Error& e) {
      throw ConfigInvalid(std::string("array: ") + e.what());
    }

    const auto& r = j.at("read");
    c.read.v_read = positive(r, "v_read", "read");
    c.read.t_sa = positive(r, "t_sa", "read");
    c.read.dt = positive(r, "dt", "read");
    c.read.rp_tempco = num(r, "rp_tempco", "read");
    c.read.tmr_tempco = num(r, "tmr_tempco", "read");
    c.read.vdd_nominal = positive(r, "vdd_nominal", "read");
    c.read.offset_vdd_exponent = num(r, "offset_vdd_exponent", "read");

    const auto& pc = j.at("precharge");
    c.precharge.variant = choice<PrechargeVariant>(pc, "variant", "precharge",
                                                   {{"pd", PrechargeVariant::pd},
                                                    {"pd_eq", PrechargeVariant::pd_eq},
                                                    {"pd_eq_plus", PrechargeVariant::pd_eq_plus}});
    c.precharge.v_precharge = c.read.v_read;
    c.precharge.drive_resistance = positive(pc, "drive_resistance", "precharge");
    c.precharge.drive_temp_exponent = num(pc, "drive_temp_exponent", "precharge");
    c.precharge.r_bl_tempco = num(pc, "r_bl_tempco", "precharge");
    c.precharge.k = positive(pc, "k", "precharge");
    c.precharge.beta = num(pc, "beta", "precharge");
    c.precharge.r_path_median = non_negative(pc, "r_path_median", "precharge");
    c.precharge.pd_window = non_negative(pc, "pd_window", "precharge");
    c.precharge_dv0 = positive(pc, "dv0", "precharge");
    c.precharge_limit = positive(pc, "residual_limit", "precharge");

    const auto& sa = j.at("sense");
    c.sense.variant = choice<SenseVariant>(sa, "variant", "sense",
                                           {{"baseline", SenseVariant::baseline}, {"plus", SenseVariant::plus}});
    c.sense.v_ref = num(sa, "v_ref", "sense");
    c.sense.sigma_offset = non_negative(sa, "sigma_offset", "sense");
    c.sense.t_decision_nominal = positive(sa, "t_decision", "sense");
    c.sense.gm_thermal_coeff = num(sa, "gm_thermal_coeff", "sense");

    const auto& co = j.at("corners");
    for (const char* which : {"baseline", "plus"}) {
      const auto& rows = co.at(which);
      if (!rows.is_array() || rows.size() != 3) throw ConfigInvalid(std::string("corners.") + which + " needs 3 rows");
      auto& dst = std::string(which) == "plus" ? c.corners.plus : c.corners.baseline;
      for (std::size_t i = 0; i < 3; ++i) {
        const std::string where = std::string("corners.") + which + "[" + std::to_string(i) + "]";
        const auto& row = rows[i];
        if (!row.is_object() || !row.contains("name") || !row.at("name").is_string()) {
          throw ConfigInvalid(where + " needs name, vdd, temp_c, t_read_ns, e_read_fj");
        }
        for (auto it = row.begin(); it != row.end(); ++it) {
          const std::string k = it.key();
          if (k != "name" && k != "vdd" && k != "temp_c" && k != "t_read_ns" && k != "e_read_fj") {
            throw ConfigInvalid("unknown key '" + where + "." + k + "'");
          }
        }
        dst[i] = CornerRow{row.at("name").get<std::string>(), positive(row, "vdd", where), num(row, "temp_c", where),
                           positive(row, "t_read_ns", where), positive(row, "e_read_fj", where)};
      }
      if (!(dst[0].vdd < dst[1].vdd && dst[1].vdd < dst[2].vdd && dst[0].temp_c < dst[1].temp_c &&
            dst[1].temp_c < dst[2].temp_c)) {
        throw ConfigInvalid(std::string("corners.") + which + " must be ordered SS, TT, FF in VDD and temperature");
      }
    }
    for (std::size_t i = 0; i < 3; ++i) {
      if (c.corners.plus[i].vdd != c.corners.baseline[i].vdd || c.corners.plus[i].temp_c != c.corners.baseline[i].temp_c) {
        throw ConfigInvalid("corners: both sense variants must share corner definitions");
      }
    }

    const auto& d = j.at("driver");
    c.driver.variant = choice<DriverVariant>(d, "variant", "driver",
                                             {{"fixed", DriverVariant::fixed}, {"wd_write", DriverVariant::wd_write}});
    c.driver.amplitude_w0 = positive(d, "amplitude_w0", "driver");
    c.driver.amplitude_w1 = positive(d, "amplitude_w1", "driver");
    c.driver.pulse_width = positive(d, "pulse_width", "driver");
    c.driver.t_rise = positive(d, "t_rise", "driver");
    c.driver.t_fall = positive(d, "t_fall", "driver");
    c.driver.thermal_comp_coeff = num(d, "thermal_comp_coeff", "driver");
    c.driver.c_out = non_negative(d, "c_out", "driver");
    c.driver.r_out = non_negative(d, "r_out", "driver");

    const auto& w = j.at("write");
    c.write.device = c.afmtj;
    c.write.driver = c.driver;
    c.write.array = c.array;
    c.write.r_bl_tempco = c.precharge.r_bl_tempco;
    c.write.disturb_fraction = non_negative(w, "disturb_fraction", "write");
    if (c.write.disturb_fraction >= 1.0) throw ConfigInvalid("write.disturb_fraction must be below 1");
    c.write.eff_tempco = num(w, "eff_tempco", "write");
    c.write.hk_tempco = num(w, "hk_tempco", "write");
    c.write.settle = positive(w, "settle", "write");

    const auto& v = j.at("variation");
    const auto vdd = range(v, "vdd", "variation");
    const auto temp = range(v, "temperature", "variation");
    const auto rbl = range(v, "r_bl", "variation");
    const auto cbit = range(v, "c_bit", "variation");
    const auto ctsv = range(v, "c_tsv", "variation");
    if (!(vdd[0] > 0.0) || !(temp[0] > 0.0) || !(rbl[0] >= 0.0) || !(cbit[0] >= 0.0) || !(ctsv[0] >= 0.0)) {
      throw ConfigInvalid("variation ranges must be physical (positive supply and temperature, non-negative parasitics)");
    }
    c.variation = VariationSpec::tile_defaults(non_negative(v, "sigma_rp", "variation"),
                                               non_negative(v, "sigma_tmr", "variation"),
                                               non_negative(v, "sigma_hk", "variation"),
                                               non_negative(v, "sigma_eff", "variation"), c.sense.sigma_offset);
    c.variation[Param::vdd] = Distribution::uniform(vdd[0], vdd[1]);
    c.variation[Param::temperature] = Distribution::uniform(temp[0], temp[1]);
    c.variation[Param::r_bl] = Distribution::uniform(rbl[0], rbl[1]);
    c.variation[Param::c_bit] = Distribution::uniform(cbit[0], cbit[1]);
    c.variation[Param::c_tsv] = Distribution::uniform(ctsv[0], ctsv[1]);
    c.v_write_sweep = range(v, "v_write_sweep", "variation");
    c.pulse_width_sweep = range(v, "pulse_width_sweep", "variation");
    c.variation[Param::v_write] = Distribution::point(c.driver.amplitude_w1);
    c.variation[Param::pulse_width] = Distribution::point(c.driver.pulse_width);

    const auto& mc = j.at("montecarlo");
    c.mc_trials = count(mc, "n_trials", "montecarlo");
    c.mc_full_read = count(mc, "full_read_trials", "montecarlo", 0);
    c.mc_full_write = count(mc, "full_write_trials", "montecarlo", 0);
    c.surrogate.calibration_trials = count(mc, "calibration_trials", "montecarlo", 20);
    c.surrogate.validation_trials = count(mc, "validation_trials", "montecarlo");
    c.surrogate.read_v_spread = non_negative(mc, "read_v_spread", "montecarlo");
    c.surrogate.read_t_spread = non_negative(mc, "read_t_spread", "montecarlo");
    c.surrogate.write_v_lo = positive(mc, "write_v_lo", "montecarlo");
    c.surrogate.write_v_hi = positive(mc, "write_v_hi", "montecarlo");
    if (!(c.surrogate.write_v_lo < c.surrogate.write_v_hi)) throw ConfigInvalid("montecarlo.write_v_lo must be below write_v_hi");
    if (c.surrogate.read_t_spread >= 1.0 || c.surrogate.read_v_spread >= 1.0) {
      throw ConfigInvalid("montecarlo read spreads must lie below 1");
    }
    c.max_misclassification = positive(mc, "max_misclassification", "montecarlo");

    const auto& mg = j.at("margins");
    c.margin.target = positive(mg, "target", "margins");
    c.margin.confidence = positive(mg, "confidence", "margins");
    if (c.margin.target > 1.0 || c.margin.confidence >= 1.0) throw ConfigInvalid("margins.target <= 1 and confidence < 1 required");
    c.margin_trials = count(mg, "n_trials", "margins");
    c.margin_temps_c = number_list(mg, "temperatures_c", "margins");
    c.margin.delta_max = positive(mg, "delta_max", "margins");
    c.margin.grid_step = positive(mg, "grid_step", "margins");
    if (c.margin.delta_max >= 1.0 || c.margin.grid_step > c.margin.delta_max) {
      throw ConfigInvalid("margins.delta_max must lie below 1 and exceed grid_step");
    }
    c.margin.bisect_iterations = static_cast<int>(count(mg, "bisect_iterations", "margins", 0));

    const auto& sw = j.at("sweep");
    c.sweep_voltages = number_list(sw, "voltages", "sweep");
    for (std::size_t i = 0; i < c.sweep_voltages.size(); ++i) {
      if (!(c.sweep_voltages[i] > 0.0) || (i > 0 && !(c.sweep_voltages[i] > c.sweep_voltages[i - 1]))) {
        throw ConfigInvalid("sweep.voltages must be positive and increasing");
      }
    }
    c.sweep_drive.t_rise = positive(sw, "t_rise", "sweep");
    c.sweep_drive.t_max = positive(sw, "t_max", "sweep");
    c.sweep_drive.settle = positive(sw, "settle", "sweep");
    c.verify_corner = Corner{positive(sw, "verify_vdd", "sweep"), num(sw, "verify_temp_c", "sweep")};
    try {
      (void)corner_coordinate(c.corners, c.verify_corner);
    } catch (const UnknownCorner& e) {
      throw ConfigInvalid(std::string("sweep verify corner: ") + e.what());
    }
    c.energy_reference_v = positive(sw, "energy_reference_v", "sweep");

    const auto& cal = j.at("calibration");
    c.afmtj_tolerance = positive(cal, "afmtj_tolerance", "calibration");
    c.mtj_tolerance = positive(cal, "mtj_tolerance", "calibration");
    c.calibration_evaluations = static_cast<int>(count(cal, "max_evaluations", "calibration"));
    c.calibration_step = positive(cal, "initial_step", "calibration");
    c.afmtj_energy_target = positive(cal, "afmtj_energy_fj", "calibration") * 1e-15;
    c.mtj_energy_target = positive(cal, "mtj_energy_fj", "calibration") * 1e-15;

    const auto& wf = j.at("waveforms");
    c.waveform_trials = count(wf, "n_trials", "waveforms");
    c.waveform_t_start = non_negative(wf, "t_start", "waveforms");
    c.waveform_t_end = positive(wf, "t_end", "waveforms");
    c.waveform_points = count(wf, "points", "waveforms", 2);

    const auto& sim = j.at("simulate");
    c.simulate_device = choice<std::string>(sim, "device", "simulate", {{"afmtj", "afmtj"}, {"mtj", "mtj"}});
    c.simulate_voltage = num(sim, "voltage", "simulate");
    c.simulate_t_end = positive(sim, "t_end", "simulate");
    c.simulate_sample_every = count(sim, "sample_every", "simulate");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigInvalid(std::string("malformed configuration: ") + e.what());
  }
  return c;
}

}  // namespace afmtj
