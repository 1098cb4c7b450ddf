#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include "bitline.hpp"
#include "dynamics.hpp"
#include "errors.hpp"
#include "montecarlo.hpp"
#include "peripherals.hpp"
#include "read_path.hpp"

namespace afmtj {

// ---------------------------------------------------------------------------
// Reference curves

struct CurvePoint {
  double v;      // V
  double value;  // latency in s or energy in J
};

inline std::vector<CurvePoint> afmtj_latency_targets() {
  const double t[8] = {491.2, 357.4, 283.2, 238.0, 204.1, 179.6, 160.7, 146.7};
  std::vector<CurvePoint> out;
  for (int i = 0; i < 8; ++i) out.push_back({0.5 + 0.1 * i, t[i] * 1e-12});
  return out;
}

inline std::vector<CurvePoint> mtj_latency_targets() {
  const double t[8] = {4067, 2517, 1963, 1631, 1432, 1332, 1174, 1089};
  std::vector<CurvePoint> out;
  for (int i = 0; i < 8; ++i) out.push_back({0.5 + 0.1 * i, t[i] * 1e-12});
  return out;
}

inline std::vector<CurvePoint> afmtj_energy_targets() {
  const double e[8] = {30.02, 32.35, 37.58, 44.91, 53.88, 55.98, 62.11, 67.26};
  std::vector<CurvePoint> out;
  for (int i = 0; i < 8; ++i) out.push_back({0.5 + 0.1 * i, e[i] * 1e-15});
  return out;
}

inline std::vector<CurvePoint> mtj_energy_targets() {
  const double e[8] = {67.0, 133.4, 201.3, 290.8, 427.3, 507.3, 493.2, 500.7};
  std::vector<CurvePoint> out;
  for (int i = 0; i < 8; ++i) out.push_back({0.5 + 0.1 * i, e[i] * 1e-15});
  return out;
}

inline std::vector<double> sweep_voltages() {
  std::vector<double> v;
  for (int i = 0; i < 8; ++i) v.push_back(0.5 + 0.1 * i);
  return v;
}

// ---------------------------------------------------------------------------
// Write latency under a step drive

struct StepDrive {
  double t_rise = 16e-12;  // s
  double t_max = 10e-9;    // s, give up after this long
  double settle = 100e-12; // s, stop once switched for this long
};

inline Trapezoid step_pulse(double v, const StepDrive& d) { return Trapezoid{v, d.t_rise, d.t_max, d.t_rise, 0.0}; }

/// Latency of a write toward the opposite state under a step of amplitude v.
inline std::optional<double> write_latency(const DeviceParams& p, double v, const StepDrive& d = {}) {
  const Trapezoid pulse = step_pulse(v, d);
  LatencyOptions o;
  o.v_peak = std::abs(v);
  o.settle = d.settle;
  return switching_latency(p, settled_state(p, v >= 0.0 ? 1 : -1), [pulse](double t) { return pulse(t); }, d.t_max, o);
}

// ---------------------------------------------------------------------------
// Device calibration

struct CalibrationOptions {
  double tolerance = 0.05;     // maximum relative latency error accepted
  int max_evaluations = 300;
  double initial_step = 0.15;  // simplex size in log-parameter space
  double size_tolerance = 1e-5;
  StepDrive drive;
  unsigned workers = 1;
};

struct CalibrationReport {
  DeviceParams params;
  std::vector<CurvePoint> targets;
  std::vector<double> latencies;  // s, NaN where the device did not switch
  double max_rel_error = std::numeric_limits<double>::infinity();
  int evaluations = 0;
  bool within_tolerance = false;
};

namespace detail {

/// Free parameters in log space: |J_AF| (coupled pairs only), Hk, sot_efficiency.
inline std::vector<double> pack(const DeviceParams& p) {
  std::vector<double> x;
  if (p.kind == DeviceKind::afmtj) x.push_back(std::log(std::abs(p.J_AF)));
  x.push_back(std::log(p.Hk));
  x.push_back(std::log(p.sot_efficiency));
  return x;
}

inline DeviceParams unpack(const DeviceParams& base, const double* x) {
  DeviceParams p = base;
  std::size_t k = 0;
  if (p.kind == DeviceKind::afmtj) {
    const double sign = base.J_AF < 0.0 ? -1.0 : 1.0;
    p.J_AF = sign * std::exp(x[k++]);
  }
  p.Hk = std::exp(x[k++]);
  p.sot_efficiency = std::exp(x[k++]);
  return p;
}

inline std::vector<double> latencies_at(const DeviceParams& p, const std::vector<CurvePoint>& targets,
                                        const StepDrive& d, unsigned workers) {
  return parallel_map<double>(targets.size(), workers, [&](std::uint64_t i) {
    const auto t = write_latency(p, targets[i].v, d);
    return t ? *t : std::numeric_limits<double>::quiet_NaN();
  });
}

inline double max_rel_error(const std::vector<double>& lat, const std::vector<CurvePoint>& targets) {
  double e = 0.0;
  for (std::size_t i = 0; i < lat.size(); ++i) {
    if (!std::isfinite(lat[i])) return 10.0;
    e = std::max(e, std::abs(lat[i] / targets[i].value - 1.0));
  }
  return e;
}

struct FitContext {
  const DeviceParams* base;
  const std::vector<CurvePoint>* targets;
  const CalibrationOptions* opt;
  CalibrationReport* best;
};

inline double fit_objective(const gsl_vector* x, void* data) {
  auto* c = static_cast<FitContext*>(data);
  DeviceParams p;
  try {
    p = unpack(*c->base, x->data);
    p.validate();
  } catch (const Error&) {
    return 10.0;
  }
  std::vector<double> lat;
  try {
    lat = latencies_at(p, *c->targets, c->opt->drive, c->opt->workers);
  } catch (const Error&) {
    return 10.0;
  }
  const double err = max_rel_error(lat, *c->targets);
  c->best->evaluations += 1;
  if (err < c->best->max_rel_error) {
    c->best->max_rel_error = err;
    c->best->params = p;
    c->best->latencies = lat;
  }
  return err;
}

}  // namespace detail

/// Nelder-Mead fit of the free device parameters minimizing the largest
/// relative latency error over the targets. Returns the best point found.
inline CalibrationReport fit_device(const DeviceParams& initial, const std::vector<CurvePoint>& targets,
                                    const CalibrationOptions& opt = {}) {
  if (targets.size() < 1) throw InvalidParams("calibration needs at least one target");
  for (std::size_t i = 1; i < targets.size(); ++i) {
    if (!(targets[i].v > targets[i - 1].v) || !(targets[i].value < targets[i - 1].value)) {
      throw InvalidParams("calibration targets must have rising voltage and falling latency");
    }
  }
  initial.validate();
  CalibrationReport best;
  best.targets = targets;
  best.params = initial;
  detail::FitContext ctx{&initial, &targets, &opt, &best};

  const std::vector<double> x0 = detail::pack(initial);
  const std::size_t n = x0.size();
  gsl_vector* x = gsl_vector_alloc(n);
  gsl_vector* step = gsl_vector_alloc(n);
  for (std::size_t i = 0; i < n; ++i) {
    gsl_vector_set(x, i, x0[i]);
    gsl_vector_set(step, i, opt.initial_step);
  }
  gsl_multimin_function f{&detail::fit_objective, n, &ctx};
  gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n);
  gsl_multimin_fminimizer_set(s, &f, x, step);
  while (best.evaluations < opt.max_evaluations) {
    if (gsl_multimin_fminimizer_iterate(s) != GSL_SUCCESS) break;
    if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(s), opt.size_tolerance) == GSL_SUCCESS) break;
  }
  gsl_multimin_fminimizer_free(s);
  gsl_vector_free(step);
  gsl_vector_free(x);
  best.within_tolerance = best.max_rel_error <= opt.tolerance;
  return best;
}

/// As fit_device, but a fit whose error floor exceeds the tolerance is an error.
inline CalibrationReport calibrate_device(const DeviceParams& initial, const std::vector<CurvePoint>& targets,
                                          const CalibrationOptions& opt = {}) {
  CalibrationReport r = fit_device(initial, targets, opt);
  if (!r.within_tolerance) {
    throw CalibrationFailed("best fit leaves a " + std::to_string(100.0 * r.max_rel_error) +
                            "% latency error, above the " + std::to_string(100.0 * opt.tolerance) + "% tolerance");
  }
  return r;
}

// ---------------------------------------------------------------------------
// Write sweep

struct SweepOptions {
  StepDrive drive;
  double c_out = 1e-15;  // F, driver output stage
  Corner verify_corner{0.90, 25.0};
  SenseVariant verify_variant = SenseVariant::plus;
  unsigned workers = 1;
};

struct SweepRow {
  double v = 0.0;
  bool switched = false;
  double latency = std::numeric_limits<double>::quiet_NaN();  // s
  double delivered_energy = 0.0;  // J, integral of v^2/R up to the switch
  double driver_energy = 0.0;     // J
  double verify_energy = 0.0;     // J, one read after the write
  double total_energy() const { return delivered_energy + driver_energy + verify_energy; }
};

/// Energy delivered into the junction, integral of v(t)^2 / R(t) from 0 to t_end.
inline double delivered_energy(const DeviceParams& p, const Trapezoid& pulse, double t_end, double dt = 0.0) {
  const double h = dt > 0.0 ? dt : default_dt(p, std::abs(pulse.amplitude));
  const auto traj = integrate(p, settled_state(p, pulse.amplitude >= 0.0 ? 1 : -1),
                              [pulse](double t) { return pulse(t); }, t_end, h)
                        .trajectory.samples;
  double e = 0.0;
  for (std::size_t k = 1; k < traj.size(); ++k) {
    const double v0 = pulse(traj[k - 1].t);
    const double v1 = pulse(traj[k].t);
    e += 0.5 * (v0 * v0 / traj[k - 1].R + v1 * v1 / traj[k].R) * (traj[k].t - traj[k - 1].t);
  }
  return e;
}

inline SweepRow sweep_point(const DeviceParams& p, double v, const ReadCornerTable& table, const SweepOptions& o) {
  SweepRow r;
  r.v = v;
  WriteDriverModel wd;
  wd.c_out = o.c_out;
  wd.t_rise = o.drive.t_rise;
  const Trapezoid pulse = step_pulse(v, o.drive);
  r.driver_energy = driver_energy(wd, pulse);
  r.verify_energy = read_energy(table, o.verify_variant, o.verify_corner);
  const auto t = write_latency(p, v, o.drive);
  if (!t) return r;
  r.switched = true;
  r.latency = *t;
  r.delivered_energy = delivered_energy(p, pulse, *t);
  return r;
}

inline std::vector<SweepRow> sweep_write(const DeviceParams& p, const std::vector<double>& voltages,
                                         const ReadCornerTable& table, const SweepOptions& o = {}) {
  return parallel_map<SweepRow>(voltages.size(), o.workers,
                                [&](std::uint64_t i) { return sweep_point(p, voltages[i], table, o); });
}

/// Junction resistance that makes the total write energy at v equal target.
/// Delivered energy scales as 1 / Rp at fixed TMR and latency.
inline double calibrate_rp_for_energy(const DeviceParams& p, double v, double target, const ReadCornerTable& table,
                                      const SweepOptions& o = {}) {
  const SweepRow r = sweep_point(p, v, table, o);
  if (!r.switched) throw CalibrationFailed("device does not switch at the energy calibration voltage");
  const double delivered_target = target - r.driver_energy - r.verify_energy;
  if (!(delivered_target > 0.0)) throw CalibrationFailed("energy target lies below the fixed overheads");
  return p.Rp * r.delivered_energy / delivered_target;
}

// ---------------------------------------------------------------------------
// Exchange sweep

/// Latency of the coupled pair for each exchange field (tesla, AF sign
/// applied internally), read out on sublattice 1.
inline std::vector<std::optional<double>> exchange_sweep(const DeviceParams& base, const std::vector<double>& j_fields,
                                                         double v, const StepDrive& d = {}, unsigned workers = 1) {
  return parallel_map<std::optional<double>>(j_fields.size(), workers, [&](std::uint64_t i) {
    DeviceParams p = base;
    p.kind = DeviceKind::afmtj;
    p.readout = Readout::sublattice1;
    p.J_AF = -std::abs(j_fields[i]) * p.Ms;
    return write_latency(p, v, d);
  });
}

/// Single-spin latency with the same torques and anisotropy.
inline std::optional<double> single_spin_latency(const DeviceParams& base, double v, const StepDrive& d = {}) {
  DeviceParams p = base;
  p.kind = DeviceKind::mtj;
  p.J_AF = 0.0;
  return write_latency(p, v, d);
}

// ---------------------------------------------------------------------------
// PVT read table

struct PvtRow {
  std::string corner;
  SenseVariant variant;
  double vdd;
  double temp_c;
  double t_read_ns;
  double e_read_fj;
};

inline std::vector<PvtRow> pvt_read_table(const ReadCornerTable& table) {
  std::vector<PvtRow> rows;
  for (SenseVariant v : {SenseVariant::baseline, SenseVariant::plus}) {
    for (const auto& r : table.rows(v)) {
      const Corner c{r.vdd, r.temp_c};
      rows.push_back({r.name, v, r.vdd, r.temp_c, read_latency_ns(table, v, c), read_energy_fj(table, v, c)});
    }
  }
  return rows;
}

inline std::string to_string(SenseVariant v) { return v == SenseVariant::plus ? "STSA+" : "STSA"; }

// ---------------------------------------------------------------------------
// Margin table

struct MarginRow {
  double temp_c;
  MarginAxis axis;
  double margin;  // relative
};

/// Four margin searches per operating temperature; the temperature
/// distribution collapses to the operating point.
inline std::vector<MarginRow> margin_table(const ReadEngine& re, const WriteEngine& we, const VariationSpec& spec,
                                           const std::vector<double>& temps_c, std::uint64_t seed, std::uint64_t n,
                                           const MarginSearchOptions& o, TrialMode mode = TrialMode::surrogate,
                                           unsigned workers = 1) {
  std::vector<MarginRow> rows;
  for (double tc : temps_c) {
    VariationSpec s = spec;
    s[Param::temperature] = Distribution::point(tc + kKelvinOffset);
    for (MarginAxis a : {MarginAxis::v_read, MarginAxis::t_sa, MarginAxis::v_write, MarginAxis::pulse_width}) {
      const FailureCounter fc = axis_failure_counter(re, we, s, seed, n, a, mode, workers);
      rows.push_back({tc, a, margin_search(fc, n, o)});
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Monte Carlo waveform averages

struct WaveformAverage {
  std::vector<double> t;      // s
  std::vector<double> value;  // V (read) or readout projection (write)
};

inline std::vector<double> uniform_grid(double t_end, std::size_t points) {
  std::vector<double> g(points);
  for (std::size_t k = 0; k < points; ++k) g[k] = t_end * static_cast<double>(k) / static_cast<double>(points - 1);
  return g;
}

inline WaveformAverage average_on_grid(const std::vector<double>& grid, const std::vector<std::vector<double>>& runs) {
  WaveformAverage a;
  a.t = grid;
  a.value.assign(grid.size(), 0.0);
  for (const auto& r : runs)
    for (std::size_t k = 0; k < grid.size(); ++k) a.value[k] += r[k];
  for (double& v : a.value) v /= static_cast<double>(runs.size());
  return a;
}

/// Average sense-node voltage of n full read transients; even trials store
/// P and odd trials store AP.
inline WaveformAverage mc_waveform_average_read(const ReadSetup& s, const VariationSpec& spec, std::uint64_t seed,
                                                std::uint64_t n, double t_end = 1.2e-9, std::size_t points = 1201,
                                                unsigned workers = 1) {
  if (n < 1) throw InvalidParams("at least one trial is required");
  const auto grid = uniform_grid(t_end, points);
  const auto runs = parallel_map<std::vector<double>>(n, workers, [&](std::uint64_t i) {
    const ReadTrialContext c = read_context(s, sample(spec, seed, i, Stream::waveform), {});
    const double r = (i % 2 == 0) ? c.cell.r_p : c.cell.r_ap;
    const auto res = read_path_simulate(c.net, r, s.precharge, c.temperature, s.read, c.v_read, c.t_sa, t_end);
    const auto head = res.waveforms.node(0);
    std::vector<double> out(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) out[k] = sample_at(res.waveforms.t, head, grid[k]);
    return out;
  });
  return average_on_grid(grid, runs);
}

/// Average readout projection of n co-simulated writes toward AP through the
/// bitline; the pulse starts at t_start.
inline WaveformAverage mc_waveform_average_write(const WriteSetup& s, const VariationSpec& spec, std::uint64_t seed,
                                                 std::uint64_t n, double t_start = 0.1e-9, double t_end = 1.2e-9,
                                                 std::size_t points = 1201, unsigned workers = 1) {
  if (n < 1) throw InvalidParams("at least one trial is required");
  const auto grid = uniform_grid(t_end, points);
  const auto runs = parallel_map<std::vector<double>>(n, workers, [&](std::uint64_t i) {
    const ParamVector v = sample(spec, seed, i, Stream::waveform);
    const DeviceParams p = trial_device(s, v);
    const double T = get(v, Param::temperature);
    WriteDriverModel d = s.driver;
    d.amplitude_w0 = d.amplitude_w1 = get(v, Param::v_write);
    d.pulse_width = get(v, Param::pulse_width);
    Trapezoid pulse = write_pulse(d, 1, T);
    pulse.t_start = t_start;
    const BitlineNetwork net = bitline_at(
        build_bitline(get(v, Param::r_bl), get(v, Param::c_bit), get(v, Param::c_tsv), s.array.n_segments,
                      s.array.tsv_hops, s.array.c_wire),
        s.r_bl_tempco, T);
    const Drive drive{[pulse](double t) { return pulse(t); }, s.driver.r_out};
    const double dt = default_dt(p, std::abs(pulse.amplitude));
    const CosimResult r = cosimulate(net, p, settled_state(p, 1), drive, t_end, dt);
    std::vector<double> out(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) out[k] = sample_at(r.circuit.t, r.projection, grid[k]);
    return out;
  });
  return average_on_grid(grid, runs);
}

// ---------------------------------------------------------------------------
// SVG line plots

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

inline std::string svg_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string fmt(double x, int precision = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, x);
  return buf;
}

/// Minimal line plot with linear axes. `header` lands in an XML comment.
inline std::string svg_line_plot(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                                 const std::vector<PlotSeries>& series, const std::string& header = "") {
  const double W = 640, H = 420, L = 70, R = 20, T = 40, B = 55;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  if (!(x1 > x0)) x1 = x0 + 1.0;
  if (!(y1 > y0)) y1 = y0 + 1.0;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
  static const char* colors[] = {"#1b7f3a", "#c0392b", "#2c6fbb", "#8e44ad"};

  std::ostringstream o;
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  if (!header.empty()) o << "<!-- " << svg_escape(header) << " -->\n";
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << svg_escape(title)
    << "</text>\n";
  o << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
    << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double xv = x0 + (x1 - x0) * k / 5.0;
    const double yv = y0 + (y1 - y0) * k / 5.0;
    o << "<text x=\"" << fmt(px(xv), 5) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\" font-size=\"11\">"
      << fmt(xv, 3) << "</text>\n";
    o << "<text x=\"" << L - 6 << "\" y=\"" << fmt(py(yv) + 4, 5) << "\" text-anchor=\"end\" font-size=\"11\">"
      << fmt(yv, 3) << "</text>\n";
  }
  o << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-size=\"13\">"
    << svg_escape(xlabel) << "</text>\n";
  o << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 16 "
    << (T + H - B) / 2 << ")\">" << svg_escape(ylabel) << "</text>\n";
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* c = colors[si % 4];
    o << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      o << fmt(px(s.x[i]), 6) << "," << fmt(py(s.y[i]), 6) << " ";
    }
    o << "\"/>\n";
    o << "<text x=\"" << W - R - 150 << "\" y=\"" << T + 16 * (si + 1) << "\" font-size=\"12\" fill=\"" << c << "\">"
      << svg_escape(s.name) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace afmtj
