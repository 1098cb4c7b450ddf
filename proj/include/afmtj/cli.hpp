#pragma once

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "config.hpp"
#include "experiments.hpp"
#include "montecarlo.hpp"
#include "stats.hpp"

namespace afmtj {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitSimulation = 3;

/// Files produced by one subcommand, written only after it succeeds.
struct Artifacts {
  std::vector<std::pair<std::string, std::string>> files;  // name, content
  std::string digest;

  void add(std::string name, std::string content) { files.emplace_back(std::move(name), std::move(content)); }
};

namespace cli_detail {

using nlohmann::json;

inline std::string csv_num(double x, int precision = 6) { return fmt(x, precision); }

class CsvWriter {
 public:
  CsvWriter(const RunConfig& c, const std::string& columns) { s_ << "# " << c.header_line() << "\n" << columns << "\n"; }
  template <class... T>
  void row(const T&... cells) {
    bool first = true;
    ((s_ << (first ? "" : ",") << cells, first = false), ...);
    s_ << "\n";
  }
  std::string str() const { return s_.str(); }

 private:
  std::ostringstream s_;
};

inline std::string summary_text(const RunConfig& c, json body) {
  body["header"] = c.header_line();
  return body.dump(2) + "\n";
}

inline json estimate_json(const RateEstimate& r) {
  return {{"n_trials", r.n_trials},
          {"n_failures", r.n_failures},
          {"point", r.point},
          {"cp_lower_95", r.cp_lower_95},
          {"cp_upper_95", r.cp_upper_95}};
}

inline json validation_json(const ValidationReport& v, double limit) {
  return {{"n", v.n},
          {"mismatches", v.mismatches},
          {"full_failures", v.full_failures},
          {"misclassification", v.misclassification()},
          {"limit", limit},
          {"acceptable", v.acceptable(limit)}};
}

inline json device_json(const DeviceParams& p) {
  return {{"alpha", p.alpha},   {"J_AF", p.J_AF}, {"Hk", p.Hk},           {"sot_efficiency", p.sot_efficiency},
          {"Rp", p.Rp},         {"TMR", p.TMR},   {"exchange_field_T", p.exchange_ratio()}};
}

inline std::string pct(double x, int precision = 3) { return fmt(100.0 * x, precision) + "%"; }

// ---------------------------------------------------------------------------
// Subcommands

inline Artifacts cmd_simulate(const RunConfig& c) {
  const DeviceParams p = c.simulate_device == "mtj" ? c.mtj : c.afmtj;
  const double v = c.simulate_voltage;
  StepDrive d = c.sweep_drive;
  d.t_max = c.simulate_t_end;
  const Trapezoid pulse = step_pulse(v, d);
  const double dt = default_dt(p, std::abs(v));
  CsvWriter csv(c, "time_ps,m1x,m1y,m1z,m2x,m2y,m2z,projection,R_ohm");
  auto emit = [&](const SublatticeState& s) {
    const Vec3 a = s.m1.vec();
    const Vec3 b = s.m2.vec();
    csv.row(csv_num(s.t * 1e12, 8), csv_num(a.x), csv_num(a.y), csv_num(a.z), csv_num(b.x), csv_num(b.y), csv_num(b.z),
            csv_num(readout_projection(p, s)), csv_num(resistance_of_state(p, s), 7));
  };
  const SublatticeState s0 = settled_state(p, v >= 0.0 ? 1 : -1);
  emit(s0);
  std::size_t k = 0;
  const SublatticeState last = evolve(p, s0, [pulse](double t) { return pulse(t); }, c.simulate_t_end, dt,
                                      [&](const SublatticeState& s) {
                                        if (++k % c.simulate_sample_every == 0) emit(s);
                                        return true;
                                      });
  if (k % c.simulate_sample_every != 0) emit(last);
  Artifacts a;
  const std::string name = "trajectory_" + c.simulate_device + ".csv";
  a.add(name, csv.str());
  a.digest = "simulate: " + c.simulate_device + " at " + fmt(v, 3) + " V for " + fmt(c.simulate_t_end * 1e12, 5) +
             " ps, final projection " + fmt(readout_projection(p, last), 4) + " -> " + name;
  return a;
}

inline double sweep_error(const std::vector<SweepRow>& rows, const std::vector<CurvePoint>& targets) {
  double e = 0.0;
  for (const auto& t : targets) {
    const auto it = std::find_if(rows.begin(), rows.end(), [&](const SweepRow& r) { return std::abs(r.v - t.v) < 1e-9; });
    if (it == rows.end()) continue;
    e = std::max(e, it->switched ? std::abs(it->latency / t.value - 1.0) : std::numeric_limits<double>::infinity());
  }
  return e;
}

inline const SweepRow* row_at(const std::vector<SweepRow>& rows, double v) {
  for (const auto& r : rows)
    if (std::abs(r.v - v) < 1e-9) return &r;
  return nullptr;
}

inline Artifacts cmd_sweep_write(const RunConfig& c) {
  SweepOptions o;
  o.drive = c.sweep_drive;
  o.c_out = c.driver.c_out;
  o.verify_corner = c.verify_corner;
  o.verify_variant = c.sense.variant;
  o.workers = c.workers;
  const auto afmtj_rows = sweep_write(c.afmtj, c.sweep_voltages, c.corners, o);
  const auto mtj_rows = sweep_write(c.mtj, c.sweep_voltages, c.corners, o);

  Artifacts a;
  std::vector<PlotSeries> lat, en;
  for (const auto& [name, rows] : {std::pair{std::string("afmtj"), &afmtj_rows}, std::pair{std::string("mtj"), &mtj_rows}}) {
    CsvWriter csv(c, "V,latency_ps,energy_fJ");
    PlotSeries pl{name == "afmtj" ? "AFMTJ" : "MTJ", {}, {}};
    PlotSeries pe = pl;
    for (const auto& r : *rows) {
      if (r.switched) {
        csv.row(csv_num(r.v, 4), csv_num(r.latency * 1e12), csv_num(r.total_energy() * 1e15));
        pl.x.push_back(r.v);
        pl.y.push_back(r.latency * 1e12);
        pe.x.push_back(r.v);
        pe.y.push_back(r.total_energy() * 1e15);
      } else {
        csv.row(csv_num(r.v, 4), "NoSwitch", "NoSwitch");
      }
    }
    a.add("sweep_write_" + name + ".csv", csv.str());
    lat.push_back(pl);
    en.push_back(pe);
  }
  const std::string svg_header = c.header_line();
  a.add("sweep_write_latency.svg", svg_line_plot("Write latency", "V (V)", "latency (ps)", lat, svg_header));
  a.add("sweep_write_energy.svg", svg_line_plot("Write energy", "V (V)", "energy (fJ)", en, svg_header));

  // Reference-voltage figures, monotonicity and dominance.
  const SweepRow* ra = row_at(afmtj_rows, c.energy_reference_v);
  const SweepRow* rm = row_at(mtj_rows, c.energy_reference_v);
  bool all_switched = true, latency_decreasing = true, energy_increasing = true, dominant = true;
  for (std::size_t i = 0; i < afmtj_rows.size(); ++i) {
    const auto& x = afmtj_rows[i];
    const auto& y = mtj_rows[i];
    all_switched = all_switched && x.switched && y.switched;
    if (!x.switched || !y.switched) continue;
    dominant = dominant && x.latency < y.latency && x.total_energy() < y.total_energy();
    if (i > 0 && afmtj_rows[i - 1].switched) {
      latency_decreasing = latency_decreasing && x.latency < afmtj_rows[i - 1].latency;
      energy_increasing = energy_increasing && x.total_energy() > afmtj_rows[i - 1].total_energy();
    }
  }
  const double err_a = sweep_error(afmtj_rows, afmtj_latency_targets());
  const double err_m = sweep_error(mtj_rows, mtj_latency_targets());
  const bool shape = all_switched && latency_decreasing && energy_increasing && dominant;
  std::string level = "not met";
  if (shape && err_a <= 0.05 && err_m <= 0.05) {
    level = "5%";
  } else if (shape && err_a <= 0.15 && err_m <= 0.15) {
    level = "15%";
  }

  json rows_json = json::object();
  for (const auto& [name, rows] : {std::pair{std::string("afmtj"), &afmtj_rows}, std::pair{std::string("mtj"), &mtj_rows}}) {
    json arr = json::array();
    for (const auto& r : *rows) {
      json j = {{"V", r.v}, {"switched", r.switched}};
      if (r.switched) {
        j["latency_ps"] = r.latency * 1e12;
        j["delivered_fJ"] = r.delivered_energy * 1e15;
        j["driver_fJ"] = r.driver_energy * 1e15;
        j["verify_read_fJ"] = r.verify_energy * 1e15;
        j["energy_fJ"] = r.total_energy() * 1e15;
      }
      arr.push_back(j);
    }
    rows_json[name] = arr;
  }
  json s = {{"rows", rows_json},
            {"afmtj_max_latency_error", err_a},
            {"mtj_max_latency_error", err_m},
            {"afmtj_latency_decreasing", latency_decreasing},
            {"afmtj_energy_increasing", energy_increasing},
            {"afmtj_dominates_mtj", dominant},
            {"calibration_level", level},
            {"verify_read_note",
             "each write energy includes one verify read at VDD " + fmt(c.verify_corner.vdd, 3) + " V, " +
                 fmt(c.verify_corner.temp_c, 3) + " C from the " + to_string(c.sense.variant) +
                 " read table; write latency excludes the read"}};
  double overhead = std::numeric_limits<double>::quiet_NaN();
  if (ra && rm && ra->switched && rm->switched) {
    overhead = ra->driver_energy / ra->total_energy();
    s["reference_V"] = c.energy_reference_v;
    s["driver_energy_fJ"] = ra->driver_energy * 1e15;
    s["driver_overhead_fraction"] = overhead;
    s["speedup"] = rm->latency / ra->latency;
  }
  a.add("sweep_write_summary.json", summary_text(c, s));
  a.digest = "sweep-write: " + std::to_string(afmtj_rows.size()) + " points per device, calibration level " + level;
  if (ra && rm && ra->switched && rm->switched) {
    a.digest += ", speedup " + fmt(rm->latency / ra->latency, 3) + "x at " + fmt(c.energy_reference_v, 2) +
                " V, driver " + fmt(ra->driver_energy * 1e15, 3) + " fJ (" + pct(overhead) + " of write energy)";
  }
  return a;
}

inline Artifacts cmd_pvt_table(const RunConfig& c) {
  const auto rows = pvt_read_table(c.corners);
  CsvWriter csv(c, "corner,sense_amp,vdd,temp_c,t_read_ns,e_read_fJ,energy_ratio");
  json table = json::array();
  for (const auto& r : rows) {
    const Corner k{r.vdd, r.temp_c};
    const double ratio = read_energy_fj(c.corners, SenseVariant::baseline, k) / read_energy_fj(c.corners, SenseVariant::plus, k);
    csv.row(r.corner, to_string(r.variant), csv_num(r.vdd, 4), csv_num(r.temp_c, 4), csv_num(r.t_read_ns, 6),
            csv_num(r.e_read_fj, 6), csv_num(ratio, 3));
    table.push_back({{"corner", r.corner},
                     {"sense_amp", to_string(r.variant)},
                     {"vdd", r.vdd},
                     {"temp_c", r.temp_c},
                     {"t_read_ns", r.t_read_ns},
                     {"e_read_fJ", r.e_read_fj},
                     {"energy_ratio", ratio}});
  }

  const BitlineNetwork net = c.nominal_bitline();
  PrechargeEqModel eq = c.precharge;
  eq.variant = PrechargeVariant::pd_eq;
  PrechargeEqModel eq_plus = c.precharge;
  eq_plus.variant = PrechargeVariant::pd_eq_plus;
  const double w_eq = disturbance_free_window(eq, net, c.thermal, c.precharge_dv0, c.precharge_limit);
  const double w_plus = disturbance_free_window(eq_plus, net, c.thermal, c.precharge_dv0, c.precharge_limit);
  const double ratio = w_eq > 0.0 ? w_plus / w_eq : std::numeric_limits<double>::infinity();

  json s = {{"table", table},
            {"precharge",
             {{"pd_eq_window", w_eq},
              {"pd_eq_plus_window", w_plus},
              {"window_ratio", w_eq > 0.0 ? json(ratio) : json("inf")},
              {"gradient_K", std::abs(c.thermal.delta_t_total)}}}};
  Artifacts a;
  a.add("pvt_table.csv", csv.str());
  a.add("pvt_summary.json", summary_text(c, s));
  a.digest = "pvt-table: 6 rows, PD_EQ+ / PD_EQ disturbance-free window ratio " + fmt(ratio, 4);
  return a;
}

struct Engines {
  ReadEngine read;
  WriteEngine write;
};

inline Engines build_engines(const RunConfig& c) {
  Engines e;
  e.read.setup = c.read_setup();
  e.write.setup = c.write;
  c.variation.validate();
  e.read.surrogate = fit_read_surrogate(e.read.setup, c.variation, c.master_seed, c.surrogate, c.workers);
  e.write.surrogate = fit_write_surrogate(e.write.setup, c.variation, c.master_seed, c.surrogate, c.workers);
  return e;
}

inline Artifacts cmd_margins(const RunConfig& c) {
  const Engines e = build_engines(c);
  const auto rows = margin_table(e.read, e.write, c.variation, c.margin_temps_c, c.master_seed, c.margin_trials,
                                 c.margin, TrialMode::surrogate, c.workers);
  CsvWriter csv(c, "temp_c,axis,margin_pct");
  json table = json::array();
  for (const auto& r : rows) {
    csv.row(csv_num(r.temp_c, 4), to_string(r.axis), csv_num(100.0 * r.margin, 5));
    table.push_back({{"temp_c", r.temp_c}, {"axis", to_string(r.axis)}, {"margin", r.margin}});
  }
  bool positive = true, ordered = true;
  for (std::size_t i = 0; i + 3 < rows.size(); i += 4) {
    for (std::size_t k = 0; k < 4; ++k) positive = positive && rows[i + k].margin > 0.0;
    ordered = ordered && rows[i + 1].margin > rows[i].margin && rows[i + 3].margin > rows[i + 2].margin;
  }
  json s = {{"table", table},
            {"target", c.margin.target},
            {"confidence", c.margin.confidence},
            {"n_trials", c.margin_trials},
            {"all_positive", positive},
            {"orderings_hold", ordered}};
  Artifacts a;
  a.add("margins.csv", csv.str());
  a.add("margins_summary.json", summary_text(c, s));
  a.digest = "margins: " + std::to_string(rows.size()) + " searches at target " + fmt(c.margin.target, 3) +
             (positive ? ", all positive" : ", some non-positive") + (ordered ? ", orderings hold" : ", orderings broken");
  return a;
}

inline Artifacts cmd_montecarlo(const RunConfig& c) {
  const Engines e = build_engines(c);
  const auto rv = validate_read_surrogate(e.read.setup, e.read.surrogate, c.variation, c.master_seed, c.surrogate, c.workers);
  const auto wv = validate_write_surrogate(e.write.setup, e.write.surrogate, c.write_validation_spec(), c.master_seed,
                                           c.surrogate, c.workers);
  if (!rv.acceptable(c.max_misclassification) || !wv.acceptable(c.max_misclassification)) {
    throw CalibrationFailed("surrogate misclassification above " + fmt(c.max_misclassification, 3) + " (read " +
                            fmt(rv.misclassification(), 3) + ", write " + fmt(wv.misclassification(), 3) + ")");
  }
  const auto ber = run_read_trials(e.read, c.variation, c.master_seed, c.mc_trials, TrialMode::surrogate, {}, c.workers);
  const auto wer = run_write_trials(e.write, c.variation, c.master_seed, c.mc_trials, TrialMode::surrogate, {}, c.workers);
  json s = {{"target_rate", 1e-6},
            {"read",
             {{"surrogate", estimate_json(ber)}, {"validation", validation_json(rv, c.max_misclassification)}}},
            {"write",
             {{"surrogate", estimate_json(wer)}, {"validation", validation_json(wv, c.max_misclassification)}}}};
  if (c.mc_full_read > 0) {
    s["read"]["full"] = estimate_json(run_read_trials(e.read, c.variation, c.master_seed, c.mc_full_read, TrialMode::full, {}, c.workers));
  }
  if (c.mc_full_write > 0) {
    s["write"]["full"] =
        estimate_json(run_write_trials(e.write, c.variation, c.master_seed, c.mc_full_write, TrialMode::full, {}, c.workers));
  }
  s["read"]["below_target"] = ber.cp_upper_95 <= 1e-6;
  s["write"]["below_target"] = wer.cp_upper_95 <= 1e-6;
  Artifacts a;
  a.add("montecarlo_summary.json", summary_text(c, s));
  a.digest = "montecarlo: BER " + std::to_string(ber.n_failures) + "/" + std::to_string(ber.n_trials) + " (CP95 upper " +
             fmt(ber.cp_upper_95, 3) + "), WER " + std::to_string(wer.n_failures) + "/" + std::to_string(wer.n_trials) +
             " (CP95 upper " + fmt(wer.cp_upper_95, 3) + ")";
  return a;
}

inline Artifacts cmd_waveforms(const RunConfig& c, const std::string& path) {
  const bool read = path == "read";
  const WaveformAverage w =
      read ? mc_waveform_average_read(c.read_setup(), c.variation, c.master_seed, c.waveform_trials, c.waveform_t_end,
                                      c.waveform_points, c.workers)
           : mc_waveform_average_write(c.write, c.variation, c.master_seed, c.waveform_trials, c.waveform_t_start,
                                       c.waveform_t_end, c.waveform_points, c.workers);
  CsvWriter csv(c, read ? "Time,Average_vout" : "Time,Average_Mz");
  PlotSeries ps{read ? "Average v_out" : "Average M_z", {}, {}};
  for (std::size_t k = 0; k < w.t.size(); ++k) {
    csv.row(csv_num(w.t[k] * 1e9, 8), csv_num(w.value[k], 8));
    ps.x.push_back(w.t[k] * 1e9);
    ps.y.push_back(w.value[k]);
  }
  const std::string stem = "mc_transient_waveforms_" + path;
  Artifacts a;
  a.add(stem + ".csv", csv.str());
  a.add(stem + ".svg", svg_line_plot(read ? "Monte Carlo read transient" : "Monte Carlo write transient", "Time (ns)",
                                     read ? "v_out (V)" : "M_z", {ps}, c.header_line()));
  const auto [lo, hi] = std::minmax_element(w.value.begin(), w.value.end());
  a.digest = "waveforms: " + path + " average of " + std::to_string(c.waveform_trials) + " trials, range [" +
             fmt(*lo, 4) + ", " + fmt(*hi, 4) + "] -> " + stem + ".csv";
  return a;
}

inline Artifacts cmd_calibrate(const RunConfig& c) {
  CalibrationOptions o;
  o.max_evaluations = c.calibration_evaluations;
  o.initial_step = c.calibration_step;
  o.drive = c.sweep_drive;
  o.workers = c.workers;
  o.tolerance = c.afmtj_tolerance;
  CalibrationReport ra = calibrate_device(c.afmtj, afmtj_latency_targets(), o);
  o.tolerance = c.mtj_tolerance;
  CalibrationReport rm = calibrate_device(c.mtj, mtj_latency_targets(), o);

  SweepOptions so;
  so.drive = c.sweep_drive;
  so.c_out = c.driver.c_out;
  so.verify_corner = c.verify_corner;
  so.verify_variant = c.sense.variant;
  ra.params.Rp = calibrate_rp_for_energy(ra.params, c.energy_reference_v, c.afmtj_energy_target, c.corners, so);
  rm.params.Rp = calibrate_rp_for_energy(rm.params, c.energy_reference_v, c.mtj_energy_target, c.corners, so);

  CsvWriter csv(c, "device,V,target_ps,model_ps,rel_error");
  json s = json::object();
  for (const auto& [name, r] : {std::pair{std::string("afmtj"), &ra}, std::pair{std::string("mtj"), &rm}}) {
    for (std::size_t i = 0; i < r->targets.size(); ++i) {
      csv.row(name, csv_num(r->targets[i].v, 4), csv_num(r->targets[i].value * 1e12), csv_num(r->latencies[i] * 1e12),
              csv_num(r->latencies[i] / r->targets[i].value - 1.0, 4));
    }
    s[name] = {{"params", device_json(r->params)},
               {"max_rel_error", r->max_rel_error},
               {"evaluations", r->evaluations},
               {"tolerance", name == "afmtj" ? c.afmtj_tolerance : c.mtj_tolerance},
               {"energy_reference_V", c.energy_reference_v},
               {"energy_target_fJ", (name == "afmtj" ? c.afmtj_energy_target : c.mtj_energy_target) * 1e15}};
  }
  Artifacts a;
  a.add("calibration.csv", csv.str());
  a.add("calibration_summary.json", summary_text(c, s));
  a.digest = "calibrate: AFMTJ max error " + pct(ra.max_rel_error) + ", MTJ max error " + pct(rm.max_rel_error) +
             ", Rp " + fmt(ra.params.Rp, 5) + " / " + fmt(rm.params.Rp, 5) + " Ohm";
  return a;
}

inline void write_artifacts(const std::filesystem::path& dir, const Artifacts& a) {
  std::filesystem::create_directories(dir);
  for (const auto& [name, content] : a.files) {
    std::ofstream f(dir / name, std::ios::binary);
    f << content;
    if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
  }
}

}  // namespace cli_detail

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name. Returns 0, 2 (configuration error) or 3 (simulation error).
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"AFMTJ memory simulator"};
  app.require_subcommand(1);
  app.fallthrough();
  std::optional<std::string> config_path;
  std::vector<std::string> overrides;
  std::optional<std::string> out_dir;
  app.add_option("-c,--config", config_path, "JSON config merged onto the bundled defaults");
  app.add_option("-s,--set", overrides, "override a config key, e.g. --set montecarlo.n_trials=1000");
  app.add_option("-o,--out", out_dir, "output directory (else AFMTJ_OUT_DIR, else output_dir)");

  std::string wave_path = "read";
  auto* sim = app.add_subcommand("simulate", "single-device LLG trajectory under a step drive");
  auto* sweep = app.add_subcommand("sweep-write", "write latency and energy versus voltage for both devices");
  auto* pvt = app.add_subcommand("pvt-table", "read latency/energy at the PVT corners");
  auto* margins = app.add_subcommand("margins", "symmetric margins on V_r, t_SA, V_w and tau_w");
  auto* mc = app.add_subcommand("montecarlo", "BER and WER with Clopper-Pearson bounds");
  auto* wave = app.add_subcommand("waveforms", "Monte Carlo averaged read or write transient");
  wave->add_option("--path", wave_path, "read or write")->check(CLI::IsMember({"read", "write"}));
  auto* cal = app.add_subcommand("calibrate", "fit device parameters to the latency curves");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "ConfigInvalid: " << e.what() << "\n";
    return kExitConfig;
  }

  RunConfig cfg;
  try {
    cfg = parse_run_config(load_config_json(config_path, overrides));
  } catch (const ConfigInvalid& e) {
    err << e.what() << "\n";
    return kExitConfig;
  }
  std::string dir = cfg.output_dir;
  if (const char* env = std::getenv("AFMTJ_OUT_DIR"); env && *env) dir = env;
  if (out_dir) dir = *out_dir;

  try {
    Artifacts a;
    if (sim->parsed()) a = cli_detail::cmd_simulate(cfg);
    else if (sweep->parsed()) a = cli_detail::cmd_sweep_write(cfg);
    else if (pvt->parsed()) a = cli_detail::cmd_pvt_table(cfg);
    else if (margins->parsed()) a = cli_detail::cmd_margins(cfg);
    else if (mc->parsed()) a = cli_detail::cmd_montecarlo(cfg);
    else if (wave->parsed()) a = cli_detail::cmd_waveforms(cfg, wave_path);
    else if (cal->parsed()) a = cli_detail::cmd_calibrate(cfg);
    cli_detail::write_artifacts(dir, a);
    out << a.digest << " [" << cfg.header_line() << "]\n";
    return kExitOk;
  } catch (const ConfigInvalid& e) {
    err << e.what() << "\n";
    return kExitConfig;
  } catch (const Error& e) {
    err << "SimulationError: " << e.what() << "\n";
    return kExitSimulation;
  } catch (const std::exception& e) {
    err << "SimulationError: Internal: " << e.what() << "\n";
    return kExitSimulation;
  }
}

}  // namespace afmtj
