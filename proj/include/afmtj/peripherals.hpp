#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "bitline.hpp"
#include "errors.hpp"

namespace afmtj {

inline constexpr double kReferenceTemperature = 300.0;  // K
inline constexpr double kKelvinOffset = 273.15;

// ---------------------------------------------------------------------------
// Sense amplifier

enum class SenseVariant { baseline, plus };

struct SenseAmpModel {
  SenseVariant variant = SenseVariant::baseline;
  double v_ref = 0.5;               // V
  double v_off_programmed = 0.0;    // V, plus variant only
  double sigma_offset = 5e-3;       // V, input-referred offset std
  double t_decision_nominal = 50e-12;  // s
  double gm_thermal_coeff = 2e-3;   // fractional latency change per K

  /// Effective trip point for one sampled offset.
  double trip(double sampled_offset) const {
    const double voff = variant == SenseVariant::plus ? v_off_programmed : 0.0;
    return v_ref + voff + sampled_offset;
  }
};

struct SenseResult {
  int bit = 0;
  double latency = 0.0;
};

/// bit = 1 iff v_in lies strictly above the trip point; ties read as 0.
inline SenseResult sense_decision(const SenseAmpModel& sa, double v_in, double sampled_offset, double temperature) {
  SenseResult r;
  r.bit = v_in > sa.trip(sampled_offset) ? 1 : 0;
  r.latency = sa.t_decision_nominal * (1.0 + sa.gm_thermal_coeff * (temperature - kReferenceTemperature));
  return r;
}

// ---------------------------------------------------------------------------
// PVT read table

struct Corner {
  double vdd = 0.90;
  double temp_c = 25.0;
};

struct CornerRow {
  std::string name;
  double vdd;
  double temp_c;
  double t_read_ns;
  double e_read_fj;
};

/// Read latency/energy at the SS, TT and FF corners for both sense variants.
struct ReadCornerTable {
  std::array<CornerRow, 3> baseline{{{"SS", 0.81, -40.0, 0.6, 0.0505},
                                     {"TT", 0.90, 25.0, 0.8, 0.0733},
                                     {"FF", 0.99, 85.0, 0.9, 0.111}}};
  std::array<CornerRow, 3> plus{{{"SS", 0.81, -40.0, 0.6, 0.0123},
                                 {"TT", 0.90, 25.0, 0.8, 0.0128},
                                 {"FF", 0.99, 85.0, 0.9, 0.0140}}};

  const std::array<CornerRow, 3>& rows(SenseVariant v) const { return v == SenseVariant::plus ? plus : baseline; }
};

namespace detail {

/// Position of x along the three-point chain a-b-c mapped to [0, 2].
inline double chain_coordinate(double x, double a, double b, double c) {
  if (x <= b) return (x - a) / (b - a);
  return 1.0 + (x - b) / (c - b);
}

inline double chain_value(double s, double a, double b, double c) {
  if (s <= 1.0) return (1.0 - s) * a + s * b;
  const double w = s - 1.0;
  return (1.0 - w) * b + w * c;
}

}  // namespace detail

/// Scalar position of a (VDD, T) query along SS -> TT -> FF: the mean of the
/// piecewise-linear positions of VDD and of temperature.
inline double corner_coordinate(const ReadCornerTable& tab, const Corner& c) {
  const auto& r = tab.baseline;
  const double eps = 1e-12;
  if (c.vdd < r[0].vdd - eps || c.vdd > r[2].vdd + eps || c.temp_c < r[0].temp_c - eps ||
      c.temp_c > r[2].temp_c + eps) {
    throw UnknownCorner("VDD " + std::to_string(c.vdd) + " V / " + std::to_string(c.temp_c) +
                        " C lies outside the characterized envelope");
  }
  const double sv = detail::chain_coordinate(c.vdd, r[0].vdd, r[1].vdd, r[2].vdd);
  const double st = detail::chain_coordinate(c.temp_c, r[0].temp_c, r[1].temp_c, r[2].temp_c);
  return std::clamp(0.5 * (sv + st), 0.0, 2.0);
}

/// Read energy in fJ, exact at the tabulated corners.
inline double read_energy_fj(const ReadCornerTable& tab, SenseVariant v, const Corner& c) {
  const auto& r = tab.rows(v);
  const double s = corner_coordinate(tab, c);
  return detail::chain_value(s, r[0].e_read_fj, r[1].e_read_fj, r[2].e_read_fj);
}

/// Read latency in ns, exact at the tabulated corners.
inline double read_latency_ns(const ReadCornerTable& tab, SenseVariant v, const Corner& c) {
  const auto& r = tab.rows(v);
  const double s = corner_coordinate(tab, c);
  return detail::chain_value(s, r[0].t_read_ns, r[1].t_read_ns, r[2].t_read_ns);
}

/// Read energy in joules.
inline double read_energy(const ReadCornerTable& tab, SenseVariant v, const Corner& c) {
  return read_energy_fj(tab, v, c) * 1e-15;
}

/// Read latency in seconds.
inline double read_latency(const ReadCornerTable& tab, SenseVariant v, const Corner& c) {
  return read_latency_ns(tab, v, c) * 1e-9;
}

// ---------------------------------------------------------------------------
// Precharge / equalization

enum class PrechargeVariant { pd, pd_eq, pd_eq_plus };

struct PrechargeEqModel {
  PrechargeVariant variant = PrechargeVariant::pd_eq;
  double v_precharge = 0.9;          // V
  double drive_resistance = 1000.0;  // Ohm at the reference temperature
  double drive_temp_exponent = 1.5;  // R_drive ~ (T / T_ref)^exponent
  double r_bl_tempco = 3.9e-3;       // 1/K, bitline wire resistance
  double k = 5.0;                    // window in units of the median path time constant
  double beta = 0.4;                 // window stretch per (T - T_ref) / T_ref
  double r_path_median = 0.0;        // Ohm; 0 derives drive_resistance + R_BL/2
  double pd_window = 0.0;            // s; 0 uses the equalized window for pd as well
};

/// Source voltage, series resistance and window handed to transient_solve.
struct PrechargeDrive {
  double v_source = 0.0;
  double r_source = 0.0;
  double window = 0.0;
};

/// Copy of `net` with the wire resistance scaled to temperature T.
inline BitlineNetwork bitline_at(const BitlineNetwork& net, double r_bl_tempco, double temperature) {
  BitlineNetwork hot = net;
  hot.r_segment = net.r_segment * (1.0 + r_bl_tempco * (temperature - kReferenceTemperature));
  return hot;
}

inline double median_path_resistance(const PrechargeEqModel& pd, const BitlineNetwork& net) {
  return pd.r_path_median > 0.0 ? pd.r_path_median : pd.drive_resistance + 0.5 * net.r_total();
}

/// Equalization window and drive for a tier at `temperature`. `net` is the
/// bitline at the reference temperature.
inline PrechargeDrive precharge_waveform(const PrechargeEqModel& pd, const BitlineNetwork& net, double temperature) {
  PrechargeDrive d;
  d.v_source = pd.v_precharge;
  const double tau_median = median_path_resistance(pd, net) * net.c_total();
  const double dt_rel = (temperature - kReferenceTemperature) / kReferenceTemperature;
  const double r_device_hot = pd.drive_resistance * std::pow(temperature / kReferenceTemperature, pd.drive_temp_exponent);
  switch (pd.variant) {
    case PrechargeVariant::pd:
      d.r_source = r_device_hot;
      d.window = pd.pd_window > 0.0 ? pd.pd_window : pd.k * tau_median;
      break;
    case PrechargeVariant::pd_eq:
      d.r_source = r_device_hot;
      d.window = pd.k * tau_median;
      break;
    case PrechargeVariant::pd_eq_plus: {
      // Drive upsized so drive + half the (temperature-scaled) bitline stays at its reference value.
      const double r_bl_ref = net.r_total();
      const double r_bl_hot = r_bl_ref * (1.0 + pd.r_bl_tempco * (temperature - kReferenceTemperature));
      d.r_source = std::max(pd.drive_resistance + 0.5 * (r_bl_ref - r_bl_hot), 1.0);
      d.window = pd.k * tau_median * (1.0 + pd.beta * dt_rel);
      break;
    }
  }
  return d;
}

inline PrechargeDrive precharge_waveform(const PrechargeEqModel& pd, const BitlineNetwork& net,
                                         const TierThermalModel& thermal, std::size_t tier) {
  return precharge_waveform(pd, net, thermal.tier_temperature(tier));
}

/// Residual |v_head - v_precharge| after equalizing for window * window_scale,
/// starting from every node at v_precharge - dv0.
inline double eq_residual(const PrechargeEqModel& pd, const BitlineNetwork& net, double temperature, double dv0,
                          double window_scale = 1.0, double dt = 0.5e-12) {
  const PrechargeDrive d = precharge_waveform(pd, net, temperature);
  const double w = d.window * window_scale;
  if (!(w > 0.0)) return std::abs(dv0);
  const BitlineNetwork hot = bitline_at(net, pd.r_bl_tempco, temperature);
  Drive drive{[v = d.v_source](double) { return v; }, d.r_source};
  const std::vector<double> v0(hot.n_nodes(), d.v_source - dv0);
  const auto wf = transient_solve(hot, [](double) { return 0.0; }, drive, w, std::min(dt, w), v0);
  return std::abs(wf.v.back()[0] - d.v_source);
}

/// Time for the bitline head to settle within `fraction` of the precharge
/// level, starting from a fully discharged line.
inline double settling_time(const PrechargeEqModel& pd, const BitlineNetwork& net, double temperature,
                            double fraction = 0.01, double dt = 0.25e-12) {
  const PrechargeDrive d = precharge_waveform(pd, net, temperature);
  const BitlineNetwork hot = bitline_at(net, pd.r_bl_tempco, temperature);
  const double tau = (d.r_source + hot.r_total()) * hot.c_total();
  Drive drive{[v = d.v_source](double) { return v; }, d.r_source};
  const auto wf = transient_solve(hot, [](double) { return 0.0; }, drive, 12.0 * tau, dt);
  const auto head = wf.node(0);
  // last time the head lies outside the settling band
  for (std::size_t k = head.size(); k-- > 0;) {
    if (std::abs(head[k] - d.v_source) > fraction * d.v_source) {
      if (k + 1 >= head.size()) return wf.t.back();
      const double a = std::abs(head[k] - d.v_source) - fraction * d.v_source;
      const double b = std::abs(head[k + 1] - d.v_source) - fraction * d.v_source;
      return wf.t[k] + (wf.t[k + 1] - wf.t[k]) * a / (a - b);
    }
  }
  return 0.0;
}

/// Disturbance-free operating window: area of the region of (relative
/// window shortening e in [0, 1], gradient fraction x in [0, 1]) in which every
/// tier equalizes below `limit`. The tiers sit at T_top + x (T_tier - T_top).
inline double disturbance_free_window(const PrechargeEqModel& pd, const BitlineNetwork& net,
                                      const TierThermalModel& thermal, double dv0, double limit = 1e-3,
                                      std::size_t x_points = 16) {
  const double t_top = thermal.tier_temperature(thermal.n_tiers - 1);
  std::vector<double> e_max(x_points + 1, 0.0);
  for (std::size_t ix = 0; ix <= x_points; ++ix) {
    const double x = static_cast<double>(ix) / static_cast<double>(x_points);
    double worst = 1.0;
    for (std::size_t tier = 0; tier < thermal.n_tiers; ++tier) {
      const double T = t_top + x * (thermal.tier_temperature(tier) - t_top);
      auto ok = [&](double e) { return eq_residual(pd, net, T, dv0, 1.0 - e) < limit; };
      double tol = 0.0;
      if (ok(0.0)) {
        double lo = 0.0, hi = 1.0;
        for (int it = 0; it < 30; ++it) {
          const double mid = 0.5 * (lo + hi);
          (ok(mid) ? lo : hi) = mid;
        }
        tol = lo;
      }
      worst = std::min(worst, tol);
    }
    e_max[ix] = worst;
  }
  double area = 0.0;
  for (std::size_t ix = 1; ix <= x_points; ++ix) area += 0.5 * (e_max[ix - 1] + e_max[ix]);
  return area / static_cast<double>(x_points);
}

// ---------------------------------------------------------------------------
// Write driver

enum class DriverVariant { fixed, wd_write };

struct WriteDriverModel {
  DriverVariant variant = DriverVariant::wd_write;
  double amplitude_w0 = 0.7;  // V, write-0 (toward P)
  double amplitude_w1 = 0.7;  // V, write-1 (toward AP)
  double pulse_width = 0.5e-9;  // s, plateau
  double t_rise = 16e-12;
  double t_fall = 16e-12;
  double thermal_comp_coeff = 1e-3;  // 1/K
  double c_out = 1e-15;   // F, output stage capacitance
  double r_out = 100.0;   // Ohm, series output resistance in array writes
};

/// Trapezoid 0 -> amplitude over t_rise, hold for width, -> 0 over t_fall.
struct Trapezoid {
  double amplitude = 0.0;
  double t_rise = 0.0;
  double width = 0.0;
  double t_fall = 0.0;
  double t_start = 0.0;

  double operator()(double t) const {
    const double x = t - t_start;
    if (x <= 0.0) return 0.0;
    if (x < t_rise) return amplitude * x / t_rise;
    if (x <= t_rise + width) return amplitude;
    if (x < t_rise + width + t_fall) return amplitude * (1.0 - (x - t_rise - width) / t_fall);
    return 0.0;
  }
  double plateau_end() const { return t_start + t_rise + width; }
  double end() const { return plateau_end() + t_fall; }
  double area() const { return amplitude * (width + 0.5 * (t_rise + t_fall)); }
};

inline double thermal_compensation(const WriteDriverModel& wd, double temperature) {
  if (wd.variant == DriverVariant::fixed) return 1.0;
  return 1.0 + wd.thermal_comp_coeff * (temperature - kReferenceTemperature);
}

/// Signed pulse: positive toward AP (bit 1), negative toward P (bit 0).
inline Trapezoid write_pulse(const WriteDriverModel& wd, int bit, double temperature) {
  const double a = wd.variant == DriverVariant::fixed ? wd.amplitude_w1 : (bit ? wd.amplitude_w1 : wd.amplitude_w0);
  const double sign = bit ? 1.0 : -1.0;
  return Trapezoid{sign * a * thermal_compensation(wd, temperature), wd.t_rise, wd.pulse_width, wd.t_fall, 0.0};
}

/// Energy the driver spends charging its own output stage, integral of
/// v C_out dv/dt over the rising edge.
inline double driver_energy(const WriteDriverModel& wd, const Trapezoid& pulse) {
  const int n = 256;
  double e = 0.0;
  for (int i = 0; i < n; ++i) {
    const double t0 = pulse.t_start + pulse.t_rise * i / n;
    const double t1 = pulse.t_start + pulse.t_rise * (i + 1) / n;
    const double v0 = pulse(t0);
    const double v1 = pulse(t1);
    e += wd.c_out * 0.5 * (v0 + v1) * (v1 - v0);
  }
  return std::abs(e);
}

}  // namespace afmtj
