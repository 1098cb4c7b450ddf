#pragma once

#include <cmath>
#include <vector>

#include "bitline.hpp"
#include "peripherals.hpp"

namespace afmtj {

/// Read timing and the temperature dependence of the junction resistance.
struct ReadConfig {
  double v_read = 0.9;       // V, precharge level V_r
  double t_sa = 60e-12;      // s, sense instant after the cell is connected
  double dt = 0.5e-12;       // s, circuit time step
  double rp_tempco = -2e-4;  // 1/K, relative change of Rp
  double tmr_tempco = -1e-3; // 1/K, relative change of TMR
  double vdd_nominal = 0.9;  // V
  double offset_vdd_exponent = 1.0;  // sigma_offset ~ (vdd_nominal / VDD)^exponent
};

/// Sense-amplifier offset spread at supply VDD.
inline double offset_sigma_at(const ReadConfig& rc, double sigma_nominal, double vdd) {
  return sigma_nominal * std::pow(rc.vdd_nominal / vdd, rc.offset_vdd_exponent);
}

/// Junction resistances at temperature T for given process multipliers.
struct ReadResistances {
  double r_p = 0.0;
  double r_ap = 0.0;
  double tmr = 0.0;
};

inline ReadResistances read_resistances(double rp, double tmr, const ReadConfig& rc, double temperature,
                                        double rp_scale = 1.0, double tmr_scale = 1.0) {
  ReadResistances r;
  r.r_p = rp * rp_scale * (1.0 + rc.rp_tempco * (temperature - kReferenceTemperature));
  r.tmr = tmr * tmr_scale * (1.0 + rc.tmr_tempco * (temperature - kReferenceTemperature));
  r.r_ap = r.r_p * (1.0 + r.tmr);
  return r;
}

struct ReadPathResult {
  Waveforms waveforms;
  double t_connect = 0.0;  // end of precharge, cell connected
  double t_sense = 0.0;    // decision instant
  double v_sense = 0.0;    // head voltage at t_sense
};

/// Precharge the bitline from 0 V for the equalization window, then discharge
/// it through the cell at the far node. The sense amplifier sits at node 0.
/// `net` is the bitline at the reference temperature; `t_end` <= 0 stops at t_sense.
inline ReadPathResult read_path_simulate(const BitlineNetwork& net, double r_device, const PrechargeEqModel& pd,
                                         double temperature, const ReadConfig& rc, double v_read,
                                         double t_sa, double t_end = 0.0) {
  PrechargeEqModel pdv = pd;
  pdv.v_precharge = v_read;
  const PrechargeDrive d = precharge_waveform(pdv, net, temperature);
  const BitlineNetwork hot = bitline_at(net, pd.r_bl_tempco, temperature);
  ReadPathResult r;
  r.t_connect = d.window;
  r.t_sense = d.window + t_sa;
  Drive drive{[v = d.v_source](double) { return v; }, d.r_source, 0.0, d.window};
  const double g = 1.0 / r_device;
  const double t_conn = d.window;
  auto g_dev = [g, t_conn](double t) { return t > t_conn ? g : 0.0; };
  const double stop = t_end > 0.0 ? std::max(t_end, r.t_sense) : r.t_sense;
  r.waveforms = transient_solve(hot, g_dev, drive, stop, rc.dt);
  r.v_sense = sample_at(r.waveforms.t, r.waveforms.node(0), r.t_sense);
  return r;
}

/// Head voltage at the decision instant of the same read, without storing waveforms.
inline double read_sense_voltage(const BitlineNetwork& net, double r_device, const PrechargeEqModel& pd,
                                 double temperature, const ReadConfig& rc, double v_read, double t_sa) {
  PrechargeEqModel pdv = pd;
  pdv.v_precharge = v_read;
  const PrechargeDrive d = precharge_waveform(pdv, net, temperature);
  const BitlineNetwork hot = bitline_at(net, pd.r_bl_tempco, temperature);
  const double t_sense = d.window + t_sa;
  LadderStepper st(hot, Drive{[v = d.v_source](double) { return v; }, d.r_source, 0.0, d.window});
  const double g = 1.0 / r_device;
  const auto n = static_cast<std::size_t>(std::ceil(t_sense / rc.dt * (1.0 - 1e-12)));
  for (std::size_t k = 1; k <= n; ++k) {
    const double t1 = std::min(t_sense, static_cast<double>(k) * rc.dt);
    st.step(t1 - st.t(), t1 > d.window ? g : 0.0);
  }
  return st.voltages()[0];
}

/// Sense-node voltages of both stored states at the decision instant.
struct ReadPair {
  double v_p = 0.0;
  double v_ap = 0.0;
  double differential() const { return v_ap - v_p; }
};

inline ReadPair read_pair(const BitlineNetwork& net, const ReadResistances& rr, const PrechargeEqModel& pd,
                          double temperature, const ReadConfig& rc, double v_read, double t_sa) {
  ReadPair p;
  p.v_p = read_sense_voltage(net, rr.r_p, pd, temperature, rc, v_read, t_sa);
  p.v_ap = read_sense_voltage(net, rr.r_ap, pd, temperature, rc, v_read, t_sa);
  return p;
}

/// Trip point that leaves equal relative margin to both states.
inline double balanced_trip(const ReadPair& p) { return 2.0 * p.v_p * p.v_ap / (p.v_p + p.v_ap); }

}  // namespace afmtj
