#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "dynamics.hpp"
#include "errors.hpp"

namespace afmtj {

/// Distributed RC ladder. Node 0 is the bitline head (driver and sense
/// amplifier), node n_segments is the far end carrying the bitcell.
/// Segment k joins node k-1 and node k; each segment's wire capacitance is
/// split half-and-half onto its two end nodes.
struct BitlineNetwork {
  std::size_t n_segments = 1;
  double r_segment = 0.0;  // Ohm
  double c_segment = 0.0;  // F, wire capacitance per segment
  double c_tsv = 0.0;      // F, per TSV crossing
  std::vector<std::size_t> tsv_nodes;
  double c_bit = 0.0;      // F, at the far node

  std::size_t n_nodes() const { return n_segments + 1; }
  std::size_t far_node() const { return n_segments; }
  double r_total() const { return r_segment * static_cast<double>(n_segments); }
  double c_total() const {
    return c_segment * static_cast<double>(n_segments) + c_tsv * static_cast<double>(tsv_nodes.size()) + c_bit;
  }

  std::vector<double> node_capacitance() const {
    std::vector<double> c(n_nodes(), 0.0);
    for (std::size_t k = 1; k <= n_segments; ++k) {
      c[k - 1] += 0.5 * c_segment;
      c[k] += 0.5 * c_segment;
    }
    for (std::size_t n : tsv_nodes) c[n] += c_tsv;
    c[far_node()] += c_bit;
    return c;
  }
};

/// Even R/C split; one TSV capacitor per hop at evenly spaced interior nodes.
inline BitlineNetwork build_bitline(double r_bl, double c_bit, double c_tsv, std::size_t n_segments,
                                    std::size_t tsv_hops, double c_wire = 0.0) {
  if (n_segments < 1) throw InvalidGeometry("n_segments must be at least 1");
  if (tsv_hops > n_segments) throw InvalidGeometry("tsv_hops cannot exceed n_segments");
  if (tsv_hops > 0 && n_segments < 2) throw InvalidGeometry("TSV hops need at least one interior node");
  if (!(r_bl >= 0.0) || !(c_bit >= 0.0) || !(c_tsv >= 0.0) || !(c_wire >= 0.0) || !std::isfinite(r_bl) ||
      !std::isfinite(c_bit) || !std::isfinite(c_tsv) || !std::isfinite(c_wire)) {
    throw InvalidGeometry("resistances and capacitances must be finite and non-negative");
  }
  BitlineNetwork net;
  net.n_segments = n_segments;
  net.r_segment = r_bl / static_cast<double>(n_segments);
  net.c_segment = c_wire / static_cast<double>(n_segments);
  net.c_tsv = c_tsv;
  net.c_bit = c_bit;
  for (std::size_t h = 1; h <= tsv_hops; ++h) {
    auto node = static_cast<std::size_t>(std::llround(static_cast<double>(h * n_segments) /
                                                      static_cast<double>(tsv_hops + 1)));
    node = std::clamp<std::size_t>(node, 1, n_segments - 1);
    net.tsv_nodes.push_back(node);
  }
  return net;
}

/// Linear temperature profile across stacked tiers. A negative delta makes
/// upper tiers cooler than the bottom (logic) tier.
struct TierThermalModel {
  std::size_t n_tiers = 3;
  double t_bottom = 373.15;      // K
  double delta_t_total = -75.0;  // K, top minus bottom

  double tier_temperature(std::size_t tier) const {
    if (tier >= n_tiers) throw InvalidGeometry("tier index out of range");
    if (tier == 0 || n_tiers == 1) return t_bottom;
    if (tier == n_tiers - 1) return t_bottom + delta_t_total;
    return t_bottom + delta_t_total * static_cast<double>(tier) / static_cast<double>(n_tiers - 1);
  }
};

/// 3D-3T tile parameters.
struct TileGeometry {
  int tiers = 3;
  int banks_total = 32;
  double bank_capacity_mb = 8.0;
  int bitline_cells = 256;
  int wordline_cells = 2048;
  double cell_area_f2 = 80.0;
  double feature_nm = 45.0;
  double tile_area_mm2 = 15.94;
  int tsv_hops_min = 1;
  int tsv_hops_max = 3;
  int replication_min = 2;
  int replication_max = 3;
};

/// Voltage source at node 0 through a series resistance, connected for
/// t_on <= t < t_off. r_series = 0 pins node 0 to the source.
struct Drive {
  Waveform v = [](double) { return 0.0; };
  double r_series = 0.0;
  double t_on = 0.0;
  double t_off = std::numeric_limits<double>::infinity();

  bool connected(double t) const { return t >= t_on && t < t_off; }
};

/// Conductance to ground at the far node (0 = disconnected), as a function of time.
using ConductanceFn = std::function<double(double)>;

inline ConductanceFn constant_resistance(double R) {
  return [g = 1.0 / R](double) { return g; };
}

/// Piecewise-linear device conductance following a recorded trajectory.
inline ConductanceFn conductance_from(const ResistanceTrajectory& traj) {
  return [s = traj.samples](double t) {
    if (s.empty()) return 0.0;
    if (t <= s.front().t) return 1.0 / s.front().R;
    if (t >= s.back().t) return 1.0 / s.back().R;
    auto it = std::upper_bound(s.begin(), s.end(), t, [](double x, const ResistanceSample& a) { return x < a.t; });
    const auto& b = *it;
    const auto& a = *(it - 1);
    const double w = (t - a.t) / (b.t - a.t);
    return 1.0 / (a.R + w * (b.R - a.R));
  };
}

struct Waveforms {
  std::vector<double> t;
  std::vector<std::vector<double>> v;  // v[k][node]

  std::vector<double> node(std::size_t i) const {
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& row : v) out.push_back(row[i]);
    return out;
  }
};

namespace detail {

inline constexpr double kMinSegmentResistance = 1e-6;  // Ohm, stands in for an ideal short

/// Thomas algorithm, in place on diag and rhs; lower[i] couples i to i-1,
/// upper[i] couples i to i+1.
inline void solve_tridiagonal(const std::vector<double>& lower, std::vector<double>& diag,
                              const std::vector<double>& upper, std::vector<double>& rhs) {
  const std::size_t n = diag.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) {
      const double w = lower[i] / diag[i - 1];
      diag[i] -= w * upper[i - 1];
      rhs[i] -= w * rhs[i - 1];
    }
    if (!(std::abs(diag[i]) > 1e-300) || !std::isfinite(diag[i])) {
      throw SingularNetwork("the nodal matrix is singular (a node has no capacitance and no conductance path)");
    }
  }
  rhs[n - 1] /= diag[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
}

}  // namespace detail

/// Backward-Euler stepper for the ladder. Each call advances one step with the
/// device conductance given for the end of the step.
class LadderStepper {
 public:
  LadderStepper(const BitlineNetwork& net, Drive drive, std::vector<double> v0 = {})
      : net_(net), drive_(std::move(drive)), c_(net.node_capacitance()) {
    v_ = v0.empty() ? std::vector<double>(net.n_nodes(), 0.0) : std::move(v0);
    if (v_.size() != net.n_nodes()) throw InvalidGeometry("initial voltage vector has the wrong length");
    g_seg_ = 1.0 / std::max(net.r_segment, detail::kMinSegmentResistance);
  }

  const std::vector<double>& voltages() const { return v_; }
  double t() const { return t_; }

  void step(double dt, double g_device) {
    const std::size_t n = net_.n_nodes();
    const double t1 = t_ + dt;
    lo_.assign(n, 0.0);
    di_.assign(n, 0.0);
    up_.assign(n, 0.0);
    rhs_.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      di_[i] = c_[i] / dt;
      rhs_[i] = c_[i] / dt * v_[i];
    }
    for (std::size_t k = 1; k <= net_.n_segments; ++k) {
      di_[k - 1] += g_seg_;
      di_[k] += g_seg_;
      up_[k - 1] -= g_seg_;
      lo_[k] -= g_seg_;
    }
    di_[net_.far_node()] += g_device;
    if (drive_.connected(t1)) {
      const double vs = drive_.v(t1);
      if (drive_.r_series > 0.0) {
        di_[0] += 1.0 / drive_.r_series;
        rhs_[0] += vs / drive_.r_series;
      } else {
        di_[0] = 1.0;
        up_[0] = 0.0;
        rhs_[0] = vs;
      }
    }
    detail::solve_tridiagonal(lo_, di_, up_, rhs_);
    v_.swap(rhs_);
    t_ = t1;
  }

 private:
  BitlineNetwork net_;
  Drive drive_;
  std::vector<double> c_;
  std::vector<double> v_;
  std::vector<double> lo_, di_, up_, rhs_;
  double g_seg_ = 0.0;
  double t_ = 0.0;
};

/// Backward-Euler nodal transient of the ladder with a time-varying device
/// conductance at the far node; waveforms sampled every dt from t = 0.
inline Waveforms transient_solve(const BitlineNetwork& net, const ConductanceFn& g_device, const Drive& drive,
                                 double t_end, double dt, std::vector<double> v0 = {}) {
  if (!(dt > 0.0) || !(t_end > 0.0)) throw InvalidGeometry("dt and t_end must be positive");
  LadderStepper st(net, drive, std::move(v0));
  Waveforms w;
  const auto n = static_cast<std::size_t>(std::ceil(t_end / dt * (1.0 - 1e-12)));
  w.t.reserve(n + 1);
  w.v.reserve(n + 1);
  w.t.push_back(0.0);
  w.v.push_back(st.voltages());
  for (std::size_t k = 1; k <= n; ++k) {
    const double t1 = std::min(t_end, static_cast<double>(k) * dt);
    st.step(t1 - st.t(), g_device(t1));
    w.t.push_back(t1);
    w.v.push_back(st.voltages());
  }
  return w;
}

/// First time a sampled waveform crosses `level` (linear interpolation).
inline std::optional<double> crossing_time(const std::vector<double>& t, const std::vector<double>& v,
                                           double level) {
  for (std::size_t k = 1; k < v.size(); ++k) {
    const double a = v[k - 1] - level;
    const double b = v[k] - level;
    if (a == 0.0) return t[k - 1];
    if ((a < 0.0) != (b < 0.0) || b == 0.0) return t[k - 1] + (t[k] - t[k - 1]) * a / (a - b);
  }
  return std::nullopt;
}

/// Elmore time constant seen at `node` for a source at node 0 through r_source.
inline double elmore_delay(const BitlineNetwork& net, double r_source, std::size_t node) {
  const auto c = net.node_capacitance();
  double tau = 0.0;
  for (std::size_t k = 0; k < c.size(); ++k) {
    const std::size_t common = std::min(k, node);
    tau += (r_source + net.r_segment * static_cast<double>(common)) * c[k];
  }
  return tau;
}

/// Linear interpolation of a sampled waveform at time t (clamped to the ends).
inline double sample_at(const std::vector<double>& t, const std::vector<double>& v, double x) {
  if (x <= t.front()) return v.front();
  if (x >= t.back()) return v.back();
  auto it = std::upper_bound(t.begin(), t.end(), x);
  const std::size_t k = static_cast<std::size_t>(it - t.begin());
  const double w = (x - t[k - 1]) / (t[k] - t[k - 1]);
  return v[k - 1] + w * (v[k] - v[k - 1]);
}

struct CosimResult {
  Waveforms circuit;
  std::vector<double> projection;  // readout projection at every circuit sample
  SublatticeState final_state;
};

/// Device-circuit co-simulation by operator splitting: each step solves the
/// ladder with the device resistance frozen from the previous magnetic state,
/// then advances the magnetics with the new far-node voltage.
inline CosimResult cosimulate(const BitlineNetwork& net, const DeviceParams& p, const SublatticeState& initial,
                              const Drive& drive, double t_end, double dt) {
  LadderStepper st(net, drive);
  CosimResult r;
  SublatticeState s = initial;
  r.circuit.t.push_back(0.0);
  r.circuit.v.push_back(st.voltages());
  r.projection.push_back(readout_projection(p, s));
  const auto n = static_cast<std::size_t>(std::ceil(t_end / dt * (1.0 - 1e-12)));
  for (std::size_t k = 1; k <= n; ++k) {
    const double t1 = std::min(t_end, static_cast<double>(k) * dt);
    const double h = t1 - st.t();
    st.step(h, 1.0 / resistance_of_state(p, s));
    const double v_dev = st.voltages()[net.far_node()];
    s = step(p, s, [v_dev](double) { return v_dev; }, h);
    s.t = t1;
    r.circuit.t.push_back(t1);
    r.circuit.v.push_back(st.voltages());
    r.projection.push_back(readout_projection(p, s));
  }
  r.final_state = s;
  return r;
}

}  // namespace afmtj
