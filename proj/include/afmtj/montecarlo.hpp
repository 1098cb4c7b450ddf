#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "bitline.hpp"
#include "dynamics.hpp"
#include "errors.hpp"
#include "peripherals.hpp"
#include "read_path.hpp"
#include "stats.hpp"

namespace afmtj {

// ---------------------------------------------------------------------------
// Variation model

enum class Param : std::uint64_t {
  vdd,
  temperature,
  r_bl,
  c_bit,
  c_tsv,
  rp_rel,
  tmr_rel,
  hk_rel,
  eff_rel,
  sa_offset,
  v_write,
  pulse_width,
};
inline constexpr std::size_t kParamCount = 12;

inline std::string to_string(Param p) {
  static const char* names[kParamCount] = {"vdd",    "temperature", "r_bl",    "c_bit",     "c_tsv",   "rp_rel",
                                           "tmr_rel", "hk_rel",     "eff_rel", "sa_offset", "v_write", "pulse_width"};
  return names[static_cast<std::size_t>(p)];
}

struct Distribution {
  enum class Kind { point, uniform, normal };
  Kind kind = Kind::point;
  double a = 0.0;  // point value, lower bound or mean
  double b = 0.0;  // upper bound or sigma

  static Distribution point(double x) { return {Kind::point, x, x}; }
  static Distribution uniform(double lo, double hi) { return {Kind::uniform, lo, hi}; }
  static Distribution normal(double mean, double sigma) { return {Kind::normal, mean, sigma}; }

  double draw(CounterRng& rng) const {
    switch (kind) {
      case Kind::point:
        return a;
      case Kind::uniform:
        return a + (b - a) * rng.uniform01();
      case Kind::normal:
        return b > 0.0 ? a + b * rng.standard_normal() : a;
    }
    return a;
  }
  double nominal() const { return kind == Kind::uniform ? 0.5 * (a + b) : a; }
};

using ParamVector = std::array<double, kParamCount>;

struct VariationSpec {
  std::array<Distribution, kParamCount> dist{};

  Distribution& operator[](Param p) { return dist[static_cast<std::size_t>(p)]; }
  const Distribution& operator[](Param p) const { return dist[static_cast<std::size_t>(p)]; }

  /// Supply, temperature and parasitic ranges of the 3D tile; device and
  /// sense-amplifier spreads as given.
  static VariationSpec tile_defaults(double sigma_rp = 0.02, double sigma_tmr = 0.03, double sigma_hk = 0.03,
                                     double sigma_eff = 0.02, double sigma_offset = 2e-3) {
    VariationSpec s;
    s[Param::vdd] = Distribution::uniform(0.8, 1.2);
    s[Param::temperature] = Distribution::uniform(300.0, 475.0);
    s[Param::r_bl] = Distribution::uniform(100.0, 300.0);
    s[Param::c_bit] = Distribution::uniform(15e-15, 30e-15);
    s[Param::c_tsv] = Distribution::uniform(10e-15, 20e-15);
    s[Param::rp_rel] = Distribution::normal(1.0, sigma_rp);
    s[Param::tmr_rel] = Distribution::normal(1.0, sigma_tmr);
    s[Param::hk_rel] = Distribution::normal(1.0, sigma_hk);
    s[Param::eff_rel] = Distribution::normal(1.0, sigma_eff);
    s[Param::sa_offset] = Distribution::normal(0.0, sigma_offset);
    s[Param::v_write] = Distribution::uniform(0.5, 1.2);
    s[Param::pulse_width] = Distribution::uniform(0.1e-9, 1.5e-9);
    return s;
  }

  void validate() const {
    for (std::size_t k = 0; k < kParamCount; ++k) {
      const auto& d = dist[k];
      const std::string name = to_string(static_cast<Param>(k));
      if (!std::isfinite(d.a) || !std::isfinite(d.b)) throw InvalidParams(name + ": distribution bounds must be finite");
      if (d.kind == Distribution::Kind::uniform && !(d.a < d.b)) throw InvalidParams(name + ": uniform needs lo < hi");
      if (d.kind == Distribution::Kind::normal && !(d.b >= 0.0)) throw InvalidParams(name + ": sigma must be >= 0");
    }
  }
};

/// Random streams. Each purpose draws from its own stream so calibration,
/// validation and bulk trials never share samples.
enum class Stream : std::uint64_t { bulk = 1, read_calibration, write_calibration, validation, synthetic, waveform };

/// Parameter vector of one trial; a pure function of (seed, stream, trial_id).
inline ParamVector sample(const VariationSpec& spec, std::uint64_t master_seed, std::uint64_t trial_id,
                          Stream stream = Stream::bulk) {
  ParamVector v{};
  for (std::size_t k = 0; k < kParamCount; ++k) {
    CounterRng rng(master_seed, static_cast<std::uint64_t>(stream), trial_id, k);
    v[k] = spec.dist[k].draw(rng);
  }
  return v;
}

inline double get(const ParamVector& v, Param p) { return v[static_cast<std::size_t>(p)]; }

struct TrialOutcome {
  std::uint64_t trial_id = 0;
  ParamVector params{};
  bool pass = false;
  double metric = 0.0;  // read: worst decision margin (V); write: slowest latency (s)
};

// ---------------------------------------------------------------------------
// Deterministic parallel execution

/// Evaluates fn(i) for i in [0, n) on `workers` threads; result i lands in slot i.
template <class R, class Fn>
std::vector<R> parallel_map(std::uint64_t n, unsigned workers, Fn&& fn) {
  std::vector<R> out(n);
  workers = std::max(1u, workers);
  if (workers == 1 || n < 2) {
    for (std::uint64_t i = 0; i < n; ++i) out[i] = fn(i);
    return out;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  const std::uint64_t chunk = (n + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const std::uint64_t lo = w * chunk;
    const std::uint64_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] {
      try {
        for (std::uint64_t i = lo; i < hi; ++i) out[i] = fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return out;
}

/// Number of i in [0, n) with failed(i) true; identical for any worker count.
template <class Fn>
std::uint64_t parallel_count(std::uint64_t n, unsigned workers, Fn&& failed) {
  workers = std::max(1u, workers);
  const std::uint64_t chunks = std::min<std::uint64_t>(n, static_cast<std::uint64_t>(workers) * 4);
  if (chunks == 0) return 0;
  const auto partial = parallel_map<std::uint64_t>(chunks, workers, [&](std::uint64_t c) {
    const std::uint64_t lo = n * c / chunks;
    const std::uint64_t hi = n * (c + 1) / chunks;
    std::uint64_t f = 0;
    for (std::uint64_t i = lo; i < hi; ++i) f += failed(i) ? 1 : 0;
    return f;
  });
  std::uint64_t total = 0;
  for (auto f : partial) total += f;
  return total;
}

// ---------------------------------------------------------------------------
// Read trials

struct ArrayConfig {
  std::size_t n_segments = 16;
  std::size_t tsv_hops = 2;
  double c_wire = 10e-15;  // F, total wire capacitance of the bitline
};

struct ReadSetup {
  double rp = 3300.0;  // Ohm
  double tmr = 1.0;
  ArrayConfig array;
  ReadConfig read;
  PrechargeEqModel precharge;
  SenseAmpModel sense;
};

/// Relative scale factors on the read bias and the sense instant.
struct ReadPerturbation {
  double v_read = 1.0;
  double t_sa = 1.0;
};

/// Everything a read decision needs apart from the junction voltages.
struct ReadTrialContext {
  BitlineNetwork net;
  double temperature = 0.0;
  ReadResistances cell;     // sampled cell
  ReadResistances nominal;  // nominal cell on the same tile
  double offset = 0.0;      // V, sampled sense offset at this supply
  double v_read = 0.0;
  double t_sa = 0.0;
};

inline ReadTrialContext read_context(const ReadSetup& s, const ParamVector& v, const ReadPerturbation& pert) {
  ReadTrialContext c;
  c.net = build_bitline(get(v, Param::r_bl), get(v, Param::c_bit), get(v, Param::c_tsv), s.array.n_segments,
                        s.array.tsv_hops, s.array.c_wire);
  c.temperature = get(v, Param::temperature);
  c.cell = read_resistances(s.rp, s.tmr, s.read, c.temperature, get(v, Param::rp_rel), get(v, Param::tmr_rel));
  c.nominal = read_resistances(s.rp, s.tmr, s.read, c.temperature);
  c.offset = get(v, Param::sa_offset) * std::pow(s.read.vdd_nominal / get(v, Param::vdd), s.read.offset_vdd_exponent);
  c.v_read = s.read.v_read * pert.v_read;
  c.t_sa = s.read.t_sa * pert.t_sa;
  return c;
}

/// Sense-node voltage as a function of (cell resistance, bias, sense time).
using SenseVoltageFn = std::function<double(double r_device, double v_read, double t_sa)>;

/// Decision for both stored states. The plus variant trims its offset to the
/// balanced trip point of the nominal cell on this tile at the nominal bias
/// and sense time; the baseline keeps its fixed reference.
inline TrialOutcome read_decision(const ReadSetup& s, const ReadTrialContext& c, const SenseVoltageFn& v_of) {
  TrialOutcome o;
  if (!(c.cell.tmr > 0.0)) return o;  // no signal
  SenseAmpModel sa = s.sense;
  if (sa.variant == SenseVariant::plus) {
    const ReadPair nominal{v_of(c.nominal.r_p, s.read.v_read, s.read.t_sa), v_of(c.nominal.r_ap, s.read.v_read, s.read.t_sa)};
    sa.v_off_programmed = balanced_trip(nominal) - sa.v_ref;
  }
  const double v_p = v_of(c.cell.r_p, c.v_read, c.t_sa);
  const double v_ap = v_of(c.cell.r_ap, c.v_read, c.t_sa);
  const int bit_p = sense_decision(sa, v_p, c.offset, c.temperature).bit;
  const int bit_ap = sense_decision(sa, v_ap, c.offset, c.temperature).bit;
  const double trip = sa.trip(c.offset);
  o.pass = bit_p == 0 && bit_ap == 1;
  o.metric = std::min(trip - v_p, v_ap - trip);
  return o;
}

inline TrialOutcome read_trial_full(const ReadSetup& s, const ParamVector& v, const ReadPerturbation& pert = {}) {
  const ReadTrialContext c = read_context(s, v, pert);
  const SenseVoltageFn v_of = [&](double r, double vr, double t) {
    return read_sense_voltage(c.net, r, s.precharge, c.temperature, s.read, vr, t);
  };
  TrialOutcome o = read_decision(s, c, v_of);
  o.params = v;
  return o;
}

/// Response surface for the sense-node voltage:
/// v = V_r exp(-exp(beta . phi)), phi quadratic in log-scaled circuit features.
class ReadSurrogate {
 public:
  static constexpr int kBase = 5;
  static constexpr int kFeatures = 1 + kBase + kBase * (kBase + 1) / 2;

  ReadSurrogate() = default;
  explicit ReadSurrogate(Eigen::VectorXd coef, double r_ref, double t_ref)
      : coef_(std::move(coef)), r_ref_(r_ref), t_ref_(t_ref) {}

  /// Tile-dependent inputs computed once per trial.
  struct Tile {
    double c_total = 0.0;
    double r_bl_hot = 0.0;
    double precharge_deficit = 0.0;
  };

  static Tile tile(const PrechargeEqModel& pd, const BitlineNetwork& net, double temperature) {
    const PrechargeDrive d = precharge_waveform(pd, net, temperature);
    Tile t;
    t.c_total = net.c_total();
    t.r_bl_hot = net.r_total() * (1.0 + pd.r_bl_tempco * (temperature - kReferenceTemperature));
    t.precharge_deficit = std::exp(-d.window / ((d.r_source + 0.5 * t.r_bl_hot) * t.c_total));
    return t;
  }

  Eigen::Matrix<double, kFeatures, 1> features(const Tile& tile, double r_device, double t_sa) const {
    const double z[kBase] = {std::log(t_sa / t_ref_), std::log(r_device / r_ref_), std::log(tile.c_total / 60e-15),
                             std::log1p(tile.r_bl_hot / r_device), 100.0 * tile.precharge_deficit};
    Eigen::Matrix<double, kFeatures, 1> f;
    int k = 0;
    f(k++) = 1.0;
    for (double x : z) f(k++) = x;
    for (int i = 0; i < kBase; ++i)
      for (int j = i; j < kBase; ++j) f(k++) = z[i] * z[j];
    return f;
  }

  static double target(double v_over_vr) { return std::log(-std::log(v_over_vr)); }

  double predict(const Tile& tile, double r_device, double v_read, double t_sa) const {
    return v_read * std::exp(-std::exp(features(tile, r_device, t_sa).dot(coef_)));
  }

  bool fitted() const { return coef_.size() == kFeatures; }
  const Eigen::VectorXd& coefficients() const { return coef_; }
  double r_ref() const { return r_ref_; }
  double t_ref() const { return t_ref_; }

 private:
  Eigen::VectorXd coef_;
  double r_ref_ = 1.0;
  double t_ref_ = 1.0;
};

inline TrialOutcome read_trial_surrogate(const ReadSetup& s, const ReadSurrogate& sur, const ParamVector& v,
                                         const ReadPerturbation& pert = {}) {
  const ReadTrialContext c = read_context(s, v, pert);
  const ReadSurrogate::Tile tile = ReadSurrogate::tile(s.precharge, c.net, c.temperature);
  const SenseVoltageFn v_of = [&](double r, double vr, double t) { return sur.predict(tile, r, vr, t); };
  TrialOutcome o = read_decision(s, c, v_of);
  o.params = v;
  return o;
}

/// Spec used for surrogate calibration and validation: device spreads
/// widened to uniform +/- `sigmas` standard deviations so the fit covers the
/// tails reached by millions of bulk trials.
inline VariationSpec widened(const VariationSpec& spec, double sigmas = 5.0) {
  VariationSpec w = spec;
  for (Param p : {Param::rp_rel, Param::tmr_rel, Param::hk_rel, Param::eff_rel}) {
    const auto& d = spec[p];
    if (d.kind == Distribution::Kind::normal && d.b > 0.0) {
      w[p] = Distribution::uniform(d.a - sigmas * d.b, d.a + sigmas * d.b);
    }
  }
  return w;
}

/// Perturbation drawn uniformly within +/- spread of nominal for one trial.
inline double perturbation_draw(std::uint64_t seed, Stream stream, std::uint64_t trial, std::uint64_t axis,
                                double spread) {
  CounterRng rng(seed, static_cast<std::uint64_t>(stream), trial, kParamCount + axis);
  return 1.0 + spread * (2.0 * rng.uniform01() - 1.0);
}

struct SurrogateOptions {
  std::uint64_t calibration_trials = 1000;
  std::uint64_t validation_trials = 1000;
  double read_v_spread = 0.12;   // +/- relative spread of the read bias in calibration/validation
  double read_t_spread = 0.4;    // +/- relative spread of the sense instant
  double write_v_lo = 0.3;       // V, calibration range of the write bias
  double write_v_hi = 1.3;
};

/// Least-squares fit of the read surrogate to full transients of both states.
inline ReadSurrogate fit_read_surrogate(const ReadSetup& s, const VariationSpec& spec, std::uint64_t seed,
                                        const SurrogateOptions& opt, unsigned workers = 1) {
  const VariationSpec w = widened(spec);
  const ReadSurrogate shape(Eigen::VectorXd::Zero(ReadSurrogate::kFeatures), s.rp, s.read.t_sa);
  using Row = std::array<std::pair<Eigen::Matrix<double, ReadSurrogate::kFeatures, 1>, double>, 2>;
  const auto rows = parallel_map<Row>(opt.calibration_trials, workers, [&](std::uint64_t i) {
    const ParamVector v = sample(w, seed, i, Stream::read_calibration);
    const double ts = perturbation_draw(seed, Stream::read_calibration, i, 1, opt.read_t_spread);
    const ReadTrialContext c = read_context(s, v, {1.0, ts});
    const ReadSurrogate::Tile tile = ReadSurrogate::tile(s.precharge, c.net, c.temperature);
    Row r;
    int k = 0;
    for (double R : {c.cell.r_p, c.cell.r_ap}) {
      const double vs = read_sense_voltage(c.net, R, s.precharge, c.temperature, s.read, 1.0, c.t_sa);
      r[k++] = {shape.features(tile, R, c.t_sa), ReadSurrogate::target(vs)};
    }
    return r;
  });
  Eigen::MatrixXd A(2 * rows.size(), ReadSurrogate::kFeatures);
  Eigen::VectorXd b(2 * rows.size());
  Eigen::Index k = 0;
  for (const auto& r : rows) {
    for (const auto& [f, y] : r) {
      A.row(k) = f.transpose();
      b(k++) = y;
    }
  }
  return ReadSurrogate(A.colPivHouseholderQr().solve(b), s.rp, s.read.t_sa);
}

// ---------------------------------------------------------------------------
// Write trials

struct WriteSetup {
  DeviceParams device;
  WriteDriverModel driver;
  ArrayConfig array;
  double r_bl_tempco = 3.9e-3;    // 1/K
  double disturb_fraction = 0.25; // share of the pulse seen by a half-selected neighbor
  double eff_tempco = -1e-3;      // 1/K, relative change of the SOT efficiency
  double hk_tempco = -2e-3;       // 1/K, relative change of the anisotropy field
  double settle = 20e-12;         // s, time beyond threshold that confirms a switch
};

struct WritePerturbation {
  double v_write = 1.0;
  double pulse_width = 1.0;
};

/// Device of one trial at its sampled temperature and process point.
inline DeviceParams trial_device(const WriteSetup& s, const ParamVector& v) {
  DeviceParams p = s.device;
  const double dT = get(v, Param::temperature) - kReferenceTemperature;
  p.temperature = get(v, Param::temperature);
  p.Hk *= get(v, Param::hk_rel) * (1.0 + s.hk_tempco * dT);
  p.sot_efficiency *= get(v, Param::eff_rel) * (1.0 + s.eff_tempco * dT);
  p.Rp *= get(v, Param::rp_rel);
  p.TMR *= get(v, Param::tmr_rel);
  return p;
}

/// One write direction: device parameters, pulse and starting state.
struct WriteCase {
  DeviceParams device;
  Trapezoid pulse;
  SublatticeState initial;
};

/// Cell voltage follows the driver through the resistive divider formed by
/// the output stage, the bitline and the cell in its starting state.
inline WriteCase write_case(const WriteSetup& s, const ParamVector& v, const WritePerturbation& pert, int bit,
                            double amplitude_scale = 1.0) {
  WriteCase w;
  w.device = trial_device(s, v);
  const double T = get(v, Param::temperature);
  WriteDriverModel d = s.driver;
  d.amplitude_w0 = d.amplitude_w1 = get(v, Param::v_write) * pert.v_write;
  d.pulse_width = get(v, Param::pulse_width) * pert.pulse_width;
  w.pulse = write_pulse(d, bit, T);
  w.initial = settled_state(w.device, bit ? 1 : -1);
  const double r0 = resistance_of_state(w.device, w.initial);
  const double r_bl = get(v, Param::r_bl) * (1.0 + s.r_bl_tempco * (T - kReferenceTemperature));
  w.pulse.amplitude *= amplitude_scale * r0 / (r0 + s.driver.r_out + r_bl);
  return w;
}

/// Switching latency within the pulse plateau, or nullopt.
inline std::optional<double> write_case_latency(const WriteSetup& s, const WriteCase& w) {
  if (w.pulse.amplitude == 0.0 || !(w.pulse.width > 0.0)) return std::nullopt;
  LatencyOptions o;
  o.v_peak = std::abs(w.pulse.amplitude);
  o.settle = s.settle;
  const Trapezoid pulse = w.pulse;
  return switching_latency(w.device, w.initial, [pulse](double t) { return pulse(t); }, pulse.plateau_end(), o);
}

/// Both write directions must switch within the plateau and a half-selected
/// neighbor must not.
inline TrialOutcome write_trial_full(const WriteSetup& s, const ParamVector& v, const WritePerturbation& pert = {}) {
  TrialOutcome o;
  o.params = v;
  double slowest = 0.0;
  bool ok = true;
  for (int bit : {1, 0}) {
    const auto t = write_case_latency(s, write_case(s, v, pert, bit));
    if (!t) {
      ok = false;
      slowest = std::numeric_limits<double>::infinity();
      break;
    }
    slowest = std::max(slowest, *t);
  }
  if (ok && s.disturb_fraction > 0.0) ok = !write_case_latency(s, write_case(s, v, pert, 1, s.disturb_fraction));
  o.pass = ok;
  o.metric = slowest;
  return o;
}

/// Response surface for the switching rate 1/latency as a quadratic in the
/// damping-like drive a = eff * V_cell and the anisotropy field.
class WriteSurrogate {
 public:
  static constexpr int kFeatures = 6;

  WriteSurrogate() = default;
  WriteSurrogate(Eigen::VectorXd coef, double a_min, double a_ref, double hk_ref)
      : coef_(std::move(coef)), a_min_(a_min), a_ref_(a_ref), hk_ref_(hk_ref) {}

  static double drive(const WriteCase& w) { return std::abs(w.pulse.amplitude) * w.device.sot_efficiency; }

  Eigen::Matrix<double, kFeatures, 1> features(double a, double hk) const {
    const double x = a / a_ref_;
    const double h = hk / hk_ref_;
    Eigen::Matrix<double, kFeatures, 1> f;
    f << 1.0, x, x * x, h, x * h, x * x * x;
    return f;
  }

  /// Predicted latency under an unbounded pulse; nullopt below the fitted drive range.
  std::optional<double> latency(const WriteCase& w) const {
    const double a = drive(w);
    if (a < a_min_) return std::nullopt;
    const double rate = features(a, w.device.Hk).dot(coef_);
    if (!(rate > 0.0)) return std::nullopt;
    return 1e-9 / rate;
  }

  bool switches(const WriteCase& w) const {
    const auto t = latency(w);
    return t && *t <= w.pulse.plateau_end();
  }

  bool fitted() const { return coef_.size() == kFeatures; }
  double a_min() const { return a_min_; }

 private:
  Eigen::VectorXd coef_;
  double a_min_ = 0.0;
  double a_ref_ = 1.0;
  double hk_ref_ = 1.0;
};

inline TrialOutcome write_trial_surrogate(const WriteSetup& s, const WriteSurrogate& sur, const ParamVector& v,
                                          const WritePerturbation& pert = {}) {
  TrialOutcome o;
  o.params = v;
  bool ok = true;
  double slowest = 0.0;
  for (int bit : {1, 0}) {
    const WriteCase w = write_case(s, v, pert, bit);
    if (w.pulse.amplitude == 0.0 || !sur.switches(w)) {
      ok = false;
      slowest = std::numeric_limits<double>::infinity();
      break;
    }
    slowest = std::max(slowest, *sur.latency(w));
  }
  if (ok && s.disturb_fraction > 0.0) ok = !sur.switches(write_case(s, v, pert, 1, s.disturb_fraction));
  o.pass = ok;
  o.metric = slowest;
  return o;
}

/// Fits the switching-rate surface to full LLG latencies under long pulses.
inline WriteSurrogate fit_write_surrogate(const WriteSetup& s, const VariationSpec& spec, std::uint64_t seed,
                                          const SurrogateOptions& opt, unsigned workers = 1) {
  VariationSpec w = widened(spec);
  w[Param::v_write] = Distribution::uniform(opt.write_v_lo, opt.write_v_hi);
  w[Param::pulse_width] = Distribution::point(3e-9);
  const double a_ref = std::abs(s.device.sot_efficiency * s.driver.amplitude_w1);
  const double hk_ref = s.device.Hk > 0.0 ? s.device.Hk : 1.0;
  const WriteSurrogate shape(Eigen::VectorXd::Zero(WriteSurrogate::kFeatures), 0.0, a_ref, hk_ref);
  struct Point {
    double a = 0.0, hk = 0.0, latency = 0.0;
    bool switched = false;
  };
  const auto pts = parallel_map<Point>(opt.calibration_trials, workers, [&](std::uint64_t i) {
    const ParamVector v = sample(w, seed, i, Stream::write_calibration);
    const WriteCase c = write_case(s, v, {}, static_cast<int>(i % 2));
    Point p;
    p.a = WriteSurrogate::drive(c);
    p.hk = c.device.Hk;
    if (const auto t = write_case_latency(s, c)) {
      p.latency = *t;
      p.switched = true;
    }
    return p;
  });
  std::vector<const Point*> used;
  double a_min = std::numeric_limits<double>::infinity();
  for (const auto& p : pts) {
    if (p.switched) {
      used.push_back(&p);
      a_min = std::min(a_min, p.a);
    }
  }
  if (used.size() < static_cast<std::size_t>(2 * WriteSurrogate::kFeatures)) {
    throw CalibrationFailed("too few switching trials to fit the write response surface");
  }
  Eigen::MatrixXd A(used.size(), WriteSurrogate::kFeatures);
  Eigen::VectorXd b(used.size());
  for (std::size_t k = 0; k < used.size(); ++k) {
    A.row(static_cast<Eigen::Index>(k)) = shape.features(used[k]->a, used[k]->hk).transpose();
    b(static_cast<Eigen::Index>(k)) = 1e-9 / used[k]->latency;
  }
  return WriteSurrogate(A.colPivHouseholderQr().solve(b), a_min, a_ref, hk_ref);
}

// ---------------------------------------------------------------------------
// Surrogate validation against held-out full transients

struct ValidationReport {
  std::uint64_t n = 0;
  std::uint64_t mismatches = 0;
  std::uint64_t full_failures = 0;
  double misclassification() const { return n ? static_cast<double>(mismatches) / static_cast<double>(n) : 0.0; }
  bool acceptable(double limit = 5e-3) const { return misclassification() < limit; }
};

/// Held-out read trials with the bias and sense instant spread around
/// nominal so that decisions on both sides of the trip point are exercised.
inline ValidationReport validate_read_surrogate(const ReadSetup& s, const ReadSurrogate& sur,
                                                const VariationSpec& spec, std::uint64_t seed,
                                                const SurrogateOptions& opt, unsigned workers = 1) {
  const auto res = parallel_map<std::pair<bool, bool>>(opt.validation_trials, workers, [&](std::uint64_t i) {
    const ParamVector v = sample(spec, seed, i, Stream::validation);
    const ReadPerturbation pert{perturbation_draw(seed, Stream::validation, i, 0, opt.read_v_spread),
                                perturbation_draw(seed, Stream::validation, i, 1, opt.read_t_spread)};
    return std::pair{read_trial_full(s, v, pert).pass, read_trial_surrogate(s, sur, v, pert).pass};
  });
  ValidationReport r;
  r.n = res.size();
  for (const auto& [full, fast] : res) {
    r.mismatches += full != fast;
    r.full_failures += !full;
  }
  return r;
}

/// Held-out write trials. `spec` should spread the bias and pulse width over
/// their sweep ranges so that both outcomes occur.
inline ValidationReport validate_write_surrogate(const WriteSetup& s, const WriteSurrogate& sur,
                                                 const VariationSpec& w, std::uint64_t seed,
                                                 const SurrogateOptions& opt, unsigned workers = 1) {
  const auto res = parallel_map<std::pair<bool, bool>>(opt.validation_trials, workers, [&](std::uint64_t i) {
    const ParamVector v = sample(w, seed, i, Stream::validation);
    return std::pair{write_trial_full(s, v).pass, write_trial_surrogate(s, sur, v).pass};
  });
  ValidationReport r;
  r.n = res.size();
  for (const auto& [full, fast] : res) {
    r.mismatches += full != fast;
    r.full_failures += !full;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Rate estimation

enum class TrialMode { full, surrogate };

struct ReadEngine {
  ReadSetup setup;
  ReadSurrogate surrogate;

  TrialOutcome trial(TrialMode mode, const ParamVector& v, const ReadPerturbation& pert) const {
    return mode == TrialMode::full ? read_trial_full(setup, v, pert) : read_trial_surrogate(setup, surrogate, v, pert);
  }
};

struct WriteEngine {
  WriteSetup setup;
  WriteSurrogate surrogate;

  TrialOutcome trial(TrialMode mode, const ParamVector& v, const WritePerturbation& pert) const {
    return mode == TrialMode::full ? write_trial_full(setup, v, pert)
                                   : write_trial_surrogate(setup, surrogate, v, pert);
  }
};

inline RateEstimate run_read_trials(const ReadEngine& e, const VariationSpec& spec, std::uint64_t seed,
                                    std::uint64_t n, TrialMode mode, const ReadPerturbation& pert = {},
                                    unsigned workers = 1) {
  if (n < 1) throw InvalidParams("at least one trial is required");
  const auto f = parallel_count(n, workers, [&](std::uint64_t i) {
    return !e.trial(mode, sample(spec, seed, i), pert).pass;
  });
  return make_estimate(n, f);
}

inline RateEstimate run_write_trials(const WriteEngine& e, const VariationSpec& spec, std::uint64_t seed,
                                     std::uint64_t n, TrialMode mode, const WritePerturbation& pert = {},
                                     unsigned workers = 1) {
  if (n < 1) throw InvalidParams("at least one trial is required");
  const auto f = parallel_count(n, workers, [&](std::uint64_t i) {
    return !e.trial(mode, sample(spec, seed, i), pert).pass;
  });
  return make_estimate(n, f);
}

/// Synthetic read whose decision variable is a standard normal draw z: the
/// trial fails iff z exceeds margin_sigma.
inline bool synthetic_read_fails(std::uint64_t seed, std::uint64_t trial, double margin_sigma) {
  CounterRng rng(seed, static_cast<std::uint64_t>(Stream::synthetic), trial, 0);
  return rng.standard_normal() > margin_sigma;
}

inline RateEstimate run_synthetic_read_trials(double margin_sigma, std::uint64_t seed, std::uint64_t n,
                                              unsigned workers = 1) {
  if (n < 1) throw InvalidParams("at least one trial is required");
  const auto f = parallel_count(n, workers, [&](std::uint64_t i) { return synthetic_read_fails(seed, i, margin_sigma); });
  return make_estimate(n, f);
}

// ---------------------------------------------------------------------------
// Margin search

enum class MarginAxis { v_read, t_sa, v_write, pulse_width };

inline std::string to_string(MarginAxis a) {
  switch (a) {
    case MarginAxis::v_read: return "V_r";
    case MarginAxis::t_sa: return "t_SA";
    case MarginAxis::v_write: return "V_w";
    case MarginAxis::pulse_width: return "tau_w";
  }
  return "?";
}

struct MarginSearchOptions {
  double target = 1e-3;
  double confidence = 0.95;
  double delta_max = 0.9;     // search range, relative
  double grid_step = 0.02;    // coarse scan before bisection
  int bisect_iterations = 12;
};

/// Failure count over a fixed trial set for a signed relative perturbation.
using FailureCounter = std::function<std::uint64_t(double signed_delta)>;

/// Largest symmetric perturbation whose Clopper-Pearson upper bound stays at
/// or below the target for both signs. The range is scanned on a coarse grid
/// and the first failing cell is bisected.
inline double margin_search(const FailureCounter& failures, std::uint64_t n, const MarginSearchOptions& o) {
  auto ok_sign = [&](double d) { return cp_upper_bound(n, failures(d), o.confidence) <= o.target; };
  if (!ok_sign(0.0)) throw NominalFails("the unperturbed point already violates the target rate");
  auto ok = [&](double d) { return ok_sign(d) && ok_sign(-d); };
  double lo = 0.0;
  double hi = -1.0;
  for (double d = o.grid_step; d <= o.delta_max + 1e-12; d += o.grid_step) {
    const double x = std::min(d, o.delta_max);
    if (ok(x)) {
      lo = x;
    } else {
      hi = x;
      break;
    }
  }
  if (hi < 0.0) return o.delta_max;
  for (int it = 0; it < o.bisect_iterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    (ok(mid) ? lo : hi) = mid;
  }
  return lo;
}

/// Failure counter for one margin axis over trials 0..n-1 of `spec`.
inline FailureCounter axis_failure_counter(const ReadEngine& re, const WriteEngine& we, const VariationSpec& spec,
                                           std::uint64_t seed, std::uint64_t n, MarginAxis axis, TrialMode mode,
                                           unsigned workers) {
  return [&re, &we, spec, seed, n, axis, mode, workers](double d) {
    return parallel_count(n, workers, [&](std::uint64_t i) {
      const ParamVector v = sample(spec, seed, i);
      switch (axis) {
        case MarginAxis::v_read: return !re.trial(mode, v, {1.0 + d, 1.0}).pass;
        case MarginAxis::t_sa: return !re.trial(mode, v, {1.0, 1.0 + d}).pass;
        case MarginAxis::v_write: return !we.trial(mode, v, {1.0 + d, 1.0}).pass;
        case MarginAxis::pulse_width: return !we.trial(mode, v, {1.0, 1.0 + d}).pass;
      }
      return true;
    });
  };
}

/// Synthetic Gaussian oracle: the decision margin shrinks linearly with the
/// perturbation, m(d) = m0 - slope |d| (in units of sigma).
inline FailureCounter synthetic_failure_counter(double m0_sigma, double slope_sigma, std::uint64_t seed,
                                                std::uint64_t n, unsigned workers) {
  return [=](double d) {
    const double m = m0_sigma - slope_sigma * std::abs(d);
    return parallel_count(n, workers, [&](std::uint64_t i) { return synthetic_read_fails(seed, i, m); });
  };
}

}  // namespace afmtj
