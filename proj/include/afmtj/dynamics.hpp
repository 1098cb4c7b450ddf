#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "vec3.hpp"

namespace afmtj {

/// Voltage waveform v(t) in volts, t in seconds.
using Waveform = std::function<double(double)>;

enum class DeviceKind { afmtj, mtj };

/// Which projection defines the stored bit and the resistance.
enum class Readout { neel, sublattice1 };

inline std::string to_string(DeviceKind k) { return k == DeviceKind::afmtj ? "afmtj" : "mtj"; }
inline std::string to_string(Readout r) { return r == Readout::neel ? "neel" : "sublattice1"; }

/// Physical constants of one junction. Only the ratio J_AF/Ms enters the
/// dynamics, as an exchange field in tesla. Antiparallel (antiferromagnetic)
/// coupling corresponds to J_AF < 0 with the field convention H = (J_AF/Ms) m_other.
struct DeviceParams {
  DeviceKind kind = DeviceKind::afmtj;
  double gamma = 1.7595e11;        // rad s^-1 T^-1
  double alpha = 0.01;             // Gilbert damping
  double Ms = 1.0e6;               // A/m
  double J_AF = 0.0;               // J/m^3, signed; J_AF/Ms is the exchange field in tesla
  double Hk = 0.0;                 // uniaxial anisotropy field along z, T
  double sot_efficiency = 0.0;     // damping-like SOT field per volt, T/V
  double field_like_ratio = 0.0;   // field-like / damping-like SOT ratio
  UnitVector3 sigma_hat = UnitVector3{0.0, 0.0, -1.0};
  std::array<double, 2> sot_sign{1.0, -1.0};  // per-sublattice SOT sign
  double Rp = 1.0e3;               // Ohm
  double TMR = 0.0;                // R_AP = Rp (1 + TMR)
  double temperature = 300.0;      // K
  double initial_tilt = 0.02;      // rad, tilt of the settled state off the easy axis
  Readout readout = Readout::neel;
  UnitVector3 readout_axis = UnitVector3{0.0, 0.0, 1.0};

  double exchange_ratio() const { return J_AF / Ms; }
  double T_AF() const { return gamma * J_AF / Ms; }
  double R_ap() const { return Rp * (1.0 + TMR); }

  void validate() const {
    auto bad = [](const char* what) { throw InvalidParams(what); };
    if (!(gamma > 0.0) || !std::isfinite(gamma)) bad("gamma must be positive");
    if (!(alpha > 0.0) || !std::isfinite(alpha)) bad("alpha must be positive");
    if (!(Ms > 0.0) || !std::isfinite(Ms)) bad("Ms must be positive");
    if (!std::isfinite(J_AF)) bad("J_AF must be finite");
    if (!(Hk >= 0.0) || !std::isfinite(Hk)) bad("Hk must be non-negative");
    if (!std::isfinite(sot_efficiency) || !std::isfinite(field_like_ratio)) bad("SOT parameters must be finite");
    if (!(Rp > 0.0) || !std::isfinite(Rp)) bad("Rp must be positive");
    if (!(TMR >= 0.0) || !std::isfinite(TMR)) bad("TMR must be non-negative");
    if (!(temperature > 0.0)) bad("temperature must be positive");
    if (!(initial_tilt >= 0.0 && initial_tilt < std::numbers::pi / 2)) bad("initial_tilt must lie in [0, pi/2)");
  }
};

struct SublatticeState {
  UnitVector3 m1 = UnitVector3::z_hat();
  UnitVector3 m2 = -UnitVector3::z_hat();
  double t = 0.0;

  Vec3 neel_vector() const { return m1.vec() - m2.vec(); }
};

/// Settled state tilted by `initial_tilt` in the xz plane. `sign` = +1 puts
/// the Neel vector along +z (parallel state for the default readout axis).
inline SublatticeState settled_state(const DeviceParams& p, int sign) {
  const double s = sign >= 0 ? 1.0 : -1.0;
  const UnitVector3 m1{std::sin(p.initial_tilt), 0.0, s * std::cos(p.initial_tilt)};
  return SublatticeState{m1, -m1, 0.0};
}

struct ResistanceSample {
  double t;
  double R;
};

struct ResistanceTrajectory {
  std::vector<ResistanceSample> samples;
};

// ---------------------------------------------------------------------------
// Fields and torques

inline Vec3 exchange_field(const DeviceParams& p, const Vec3& other_m) {
  return p.exchange_ratio() * other_m;
}

inline Vec3 exchange_torque(const DeviceParams& p, const Vec3& m_self, const Vec3& m_other) {
  return -p.T_AF() * cross(m_self, m_other);
}

inline Vec3 anisotropy_field(const DeviceParams& p, const Vec3& m) { return Vec3{0.0, 0.0, p.Hk * m.z}; }

inline Vec3 effective_field(const DeviceParams& p, const Vec3& m_self, const Vec3& m_other,
                            const Vec3& applied) {
  return exchange_field(p, m_other) + anisotropy_field(p, m_self) + applied;
}

/// Damping-like SOT, -gamma * eff * v * m x (m x sign*sigma_hat).
inline Vec3 sot_torque(const DeviceParams& p, const Vec3& m, double v_applied, double sign = 1.0) {
  const Vec3 s = sign * p.sigma_hat.vec();
  return (-p.gamma * p.sot_efficiency * v_applied) * cross(m, cross(m, s));
}

/// Field-like SOT component, entered as an extra field on each sublattice.
inline Vec3 sot_field(const DeviceParams& p, double v_applied, double sign = 1.0) {
  return (p.field_like_ratio * p.sot_efficiency * v_applied * sign) * p.sigma_hat.vec();
}

/// Explicit Landau-Lifshitz form of the Gilbert precession + damping terms.
inline Vec3 landau_lifshitz(const DeviceParams& p, const Vec3& m, const Vec3& H) {
  const Vec3 mxH = cross(m, H);
  return (-p.gamma / (1.0 + p.alpha * p.alpha)) * (mxH + p.alpha * cross(m, mxH));
}

using PairVec = std::array<Vec3, 2>;

inline PairVec llg_rhs(const DeviceParams& p, const PairVec& m, double v_applied, const Vec3& applied = {}) {
  PairVec d;
  for (int i = 0; i < 2; ++i) {
    const Vec3& self = m[i];
    const Vec3& other = m[1 - i];
    const double s = p.sot_sign[i];
    const Vec3 H = effective_field(p, self, other, applied + sot_field(p, v_applied, s));
    d[i] = landau_lifshitz(p, self, H) + sot_torque(p, self, v_applied, s) + exchange_torque(p, self, other);
  }
  return d;
}

inline PairVec llg_rhs(const DeviceParams& p, const SublatticeState& state, double v_applied,
                       const Vec3& applied = {}) {
  return llg_rhs(p, PairVec{state.m1.vec(), state.m2.vec()}, v_applied, applied);
}

/// Single macrospin: same torques as sublattice 1 of the pair without exchange.
inline Vec3 mtj_llg_rhs(const DeviceParams& p, const Vec3& m, double v_applied, const Vec3& applied = {}) {
  const double s = p.sot_sign[0];
  const Vec3 H = anisotropy_field(p, m) + applied + sot_field(p, v_applied, s);
  return landau_lifshitz(p, m, H) + sot_torque(p, m, v_applied, s);
}

/// Magnetic energy per unit moment (tesla). Its time derivative is
/// non-positive under pure Gilbert relaxation.
inline double magnetic_energy(const DeviceParams& p, const SublatticeState& s, const Vec3& applied = {}) {
  const Vec3 m1 = s.m1.vec();
  const Vec3 m2 = s.m2.vec();
  if (p.kind == DeviceKind::mtj) return -0.5 * p.Hk * m1.z * m1.z - dot(m1, applied);
  return -p.exchange_ratio() * dot(m1, m2) - 0.5 * p.Hk * (m1.z * m1.z + m2.z * m2.z) -
         dot(m1 + m2, applied);
}

// ---------------------------------------------------------------------------
// Integration

/// Classical fourth-order Runge-Kutta step for y' = f(t, y) over N vectors.
template <std::size_t N, class F>
std::array<Vec3, N> rk4_step(F&& f, double t, const std::array<Vec3, N>& y, double dt) {
  auto axpy = [](const std::array<Vec3, N>& a, double h, const std::array<Vec3, N>& k) {
    std::array<Vec3, N> r;
    for (std::size_t i = 0; i < N; ++i) r[i] = a[i] + h * k[i];
    return r;
  };
  const auto k1 = f(t, y);
  const auto k2 = f(t + 0.5 * dt, axpy(y, 0.5 * dt, k1));
  const auto k3 = f(t + 0.5 * dt, axpy(y, 0.5 * dt, k2));
  const auto k4 = f(t + dt, axpy(y, dt, k3));
  std::array<Vec3, N> out;
  for (std::size_t i = 0; i < N; ++i) out[i] = y[i] + (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return out;
}

inline constexpr double kMaxStepRotation = 0.5;   // rad, StepTooLarge threshold
inline constexpr double kStepRotationTarget = 0.1;  // rad, used by default_dt
inline constexpr double kMaxDefaultDt = 10e-15;     // s

/// Step size resolving the fastest precession for drive amplitudes up to |v_max|.
inline double default_dt(const DeviceParams& p, double v_max, double applied_max = 0.0) {
  const double a = std::abs(p.sot_efficiency * v_max);
  const double h_max = 2.0 * std::abs(p.exchange_ratio()) + p.Hk + a * (1.0 + std::abs(p.field_like_ratio)) +
                       std::abs(applied_max) + 1e-3;
  return std::min(kMaxDefaultDt, kStepRotationTarget / (p.gamma * h_max));
}

namespace detail {

inline void check_rotation(const Vec3& before, const Vec3& after, double t) {
  static const double cos_limit = std::cos(kMaxStepRotation);
  if (dot(before, after) < cos_limit) {
    throw StepTooLarge("a single step rotated a sublattice by more than 0.5 rad at t = " + std::to_string(t) +
                       " s; reduce dt");
  }
}

}  // namespace detail

/// Advances one fixed step and renormalizes. MTJ devices carry m2 = -m1.
inline SublatticeState step(const DeviceParams& p, const SublatticeState& s, const Waveform& v, double dt,
                            const Vec3& applied = {}) {
  if (p.kind == DeviceKind::mtj) {
    auto f = [&](double t, const std::array<Vec3, 1>& y) {
      return std::array<Vec3, 1>{mtj_llg_rhs(p, y[0], v(t), applied)};
    };
    const auto y = rk4_step(f, s.t, std::array<Vec3, 1>{s.m1.vec()}, dt);
    const UnitVector3 m1(y[0]);
    detail::check_rotation(s.m1, m1, s.t);
    return SublatticeState{m1, -m1, s.t + dt};
  }
  auto f = [&](double t, const PairVec& y) { return llg_rhs(p, y, v(t), applied); };
  const auto y = rk4_step(f, s.t, PairVec{s.m1.vec(), s.m2.vec()}, dt);
  const UnitVector3 m1(y[0]);
  const UnitVector3 m2(y[1]);
  detail::check_rotation(s.m1, m1, s.t);
  detail::check_rotation(s.m2, m2, s.t);
  return SublatticeState{m1, m2, s.t + dt};
}

/// Fixed-step integration from initial.t to t_end. `observe(state)` is called
/// after every step and may return false to stop early. Returns the last state.
template <class Observer>
SublatticeState evolve(const DeviceParams& p, const SublatticeState& initial, const Waveform& v, double t_end,
                       double dt, Observer&& observe, const Vec3& applied = {}) {
  if (!(dt > 0.0)) throw InvalidParams("dt must be positive");
  const double span = t_end - initial.t;
  if (!(span > 0.0)) throw InvalidParams("t_end must exceed the initial time");
  const auto n = static_cast<long long>(std::ceil(span / dt * (1.0 - 1e-12)));
  SublatticeState s = initial;
  for (long long k = 1; k <= n; ++k) {
    const double t_next = (k == n) ? t_end : initial.t + static_cast<double>(k) * dt;
    s = step(p, s, v, t_next - s.t, applied);
    s.t = t_next;
    if (!observe(s)) break;
  }
  return s;
}

/// Projection of the stored order on the readout axis, in [-1, 1].
inline double readout_projection(const DeviceParams& p, const SublatticeState& s) {
  if (p.readout == Readout::sublattice1) return dot(s.m1.vec(), p.readout_axis.vec());
  const Vec3 L = s.neel_vector();
  const double n = norm(L);
  if (n < 1e-6) throw DegenerateNeel("|m1 - m2| < 1e-6; the sublattices have collapsed");
  return dot(L, p.readout_axis.vec()) / n;
}

inline double resistance_of_state(const DeviceParams& p, const SublatticeState& s, const UnitVector3& axis) {
  double cos_theta;
  if (p.readout == Readout::sublattice1) {
    cos_theta = dot(s.m1.vec(), axis.vec());
  } else {
    const Vec3 L = s.neel_vector();
    const double n = norm(L);
    if (n < 1e-6) throw DegenerateNeel("|m1 - m2| < 1e-6; the sublattices have collapsed");
    cos_theta = dot(L, axis.vec()) / n;
  }
  cos_theta = std::clamp(cos_theta, -1.0, 1.0);
  const double gp = 1.0 / p.Rp;
  const double gap = 1.0 / p.R_ap();
  const double g = 0.5 * (gp + gap) + 0.5 * (gp - gap) * cos_theta;
  return std::clamp(1.0 / g, p.Rp, p.R_ap());
}

inline double resistance_of_state(const DeviceParams& p, const SublatticeState& s) {
  return resistance_of_state(p, s, p.readout_axis);
}

struct IntegrationResult {
  SublatticeState final_state;
  ResistanceTrajectory trajectory;
};

inline IntegrationResult integrate(const DeviceParams& p, const SublatticeState& initial, const Waveform& v,
                                   double t_end, double dt, const Vec3& applied = {}) {
  IntegrationResult r;
  const auto n = static_cast<std::size_t>(std::ceil((t_end - initial.t) / dt)) + 1;
  r.trajectory.samples.reserve(n);
  r.trajectory.samples.push_back({initial.t, resistance_of_state(p, initial)});
  r.final_state = evolve(
      p, initial, v, t_end, dt,
      [&](const SublatticeState& s) {
        r.trajectory.samples.push_back({s.t, resistance_of_state(p, s)});
        return true;
      },
      applied);
  return r;
}

struct LatencyOptions {
  double threshold = 0.9;
  double dt = 0.0;  // 0 selects default_dt for the waveform's peak amplitude
  double v_peak = 0.0;  // amplitude used by default_dt when dt = 0
  double settle = std::numeric_limits<double>::infinity();  // stop once switched for this long
};

/// First time the readout projection passes the sign-flipped threshold and
/// stays beyond it until t_end (or for `settle` seconds). nullopt if it never does.
inline std::optional<double> switching_latency(const DeviceParams& p, const SublatticeState& initial,
                                               const Waveform& v, double t_end, const LatencyOptions& o = {}) {
  if (!(o.threshold > 0.0 && o.threshold <= 1.0)) throw InvalidParams("success_threshold must lie in (0, 1]");
  const double dt = o.dt > 0.0 ? o.dt : default_dt(p, o.v_peak);
  const double s0 = readout_projection(p, initial) >= 0.0 ? 1.0 : -1.0;
  double t_cross = -1.0;
  evolve(p, initial, v, t_end, dt, [&](const SublatticeState& s) {
    if (s0 * readout_projection(p, s) < -o.threshold) {
      if (t_cross < 0.0) t_cross = s.t;
      else if (s.t - t_cross >= o.settle) return false;
    } else {
      t_cross = -1.0;
    }
    return true;
  });
  if (t_cross < 0.0) return std::nullopt;
  return t_cross;
}

}  // namespace afmtj
