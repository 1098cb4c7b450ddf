#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "afmtj/dynamics.hpp"
#include "afmtj/experiments.hpp"

using namespace afmtj;

namespace {

DeviceParams calibrated_afmtj() {
  DeviceParams p;
  p.kind = DeviceKind::afmtj;
  p.alpha = 0.1;
  p.J_AF = -13.6119e6;
  p.Hk = 3.81044e-3;
  p.sot_efficiency = 1.25224e-2;
  p.field_like_ratio = 1.0;
  p.Rp = 3341.3;
  p.TMR = 0.8;
  return p;
}

DeviceParams bare_macrospin(double alpha) {
  DeviceParams p;
  p.kind = DeviceKind::mtj;
  p.alpha = alpha;
  p.Hk = 0.0;
  p.sot_efficiency = 0.0;
  return p;
}

Waveform constant(double v) {
  return [v](double) { return v; };
}

}  // namespace

TEST(Dynamics, NormStaysUnitOverTenThousandSteps) {
  const DeviceParams p = calibrated_afmtj();
  SublatticeState s = settled_state(p, 1);
  const double dt = default_dt(p, 0.7);
  double worst = 0.0;
  for (int k = 0; k < 10000; ++k) {
    s = step(p, s, constant(0.7), dt);
    worst = std::max({worst, std::abs(norm(s.m1.vec()) - 1.0), std::abs(norm(s.m2.vec()) - 1.0)});
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(Dynamics, ExchangeTorqueIsExactlyAntisymmetric) {
  const DeviceParams p = calibrated_afmtj();
  const Vec3 a = UnitVector3{0.3, -0.2, 0.93}.vec();
  const Vec3 b = UnitVector3{-0.1, 0.5, -0.86}.vec();
  const Vec3 ab = exchange_torque(p, a, b);
  const Vec3 ba = exchange_torque(p, b, a);
  EXPECT_EQ(ab.x, -ba.x);
  EXPECT_EQ(ab.y, -ba.y);
  EXPECT_EQ(ab.z, -ba.z);
}

TEST(Dynamics, ExchangeFieldIsCouplingOverMs) {
  DeviceParams p = calibrated_afmtj();
  const Vec3 m{0.0, 0.0, 1.0};
  EXPECT_DOUBLE_EQ(exchange_field(p, m).z, p.J_AF / p.Ms);
  EXPECT_NEAR(exchange_field(p, m).z, -13.6119, 1e-12);
}

TEST(Dynamics, DampedMacrospinEnergyNeverIncreases) {
  DeviceParams p = bare_macrospin(0.05);
  p.Hk = 0.2;
  const Vec3 applied{0.05, 0.0, -0.08};  // oblique field, no drive
  SublatticeState s{UnitVector3{0.6, 0.1, 0.79}, UnitVector3{-0.6, -0.1, -0.79}, 0.0};
  double e = magnetic_energy(p, s, applied);
  for (int k = 0; k < 20000; ++k) {
    s = step(p, s, constant(0.0), 1e-13, applied);
    const double e1 = magnetic_energy(p, s, applied);
    ASSERT_LE(e1, e + 1e-13) << "step " << k;
    e = e1;
  }
}

TEST(Dynamics, DampedExchangePairEnergyNeverIncreases) {
  DeviceParams p = calibrated_afmtj();
  p.Hk = 0.0;
  p.sot_efficiency = 0.0;
  p.J_AF = -1.0e6;  // 1 T exchange field keeps the step well resolved
  SublatticeState s{UnitVector3{0.5, 0.2, 0.84}, UnitVector3{0.3, -0.4, -0.87}, 0.0};
  double e = magnetic_energy(p, s);
  for (int k = 0; k < 20000; ++k) {
    s = step(p, s, constant(0.0), 2e-14);
    const double e1 = magnetic_energy(p, s);
    ASSERT_LE(e1, e + 1e-13) << "step " << k;
    e = e1;
  }
  EXPECT_LT(e, magnetic_energy(p, SublatticeState{UnitVector3{0.5, 0.2, 0.84}, UnitVector3{0.3, -0.4, -0.87}, 0.0}));
}

TEST(Dynamics, LarmorFrequencyMatchesGammaH) {
  const DeviceParams p = bare_macrospin(1e-4);
  const double H = 0.1;
  const Vec3 applied{0.0, 0.0, H};
  SublatticeState s{UnitVector3{1.0, 0.0, 0.2}, UnitVector3{-1.0, 0.0, -0.2}, 0.0};
  const double dt = 1e-13;
  std::vector<double> crossings;
  double prev_y = s.m1.y();
  double prev_t = 0.0;
  while (crossings.size() < 41) {
    s = step(p, s, constant(0.0), dt, applied);
    const double y = s.m1.y();
    if ((prev_y < 0.0) != (y < 0.0) && prev_y != 0.0) crossings.push_back(prev_t + dt * prev_y / (prev_y - y));
    prev_y = y;
    prev_t = s.t;
  }
  // 40 half periods between the first and last zero crossing of m_y
  const double f = 20.0 / (crossings.back() - crossings.front());
  const double f_expected = p.gamma * H / (2.0 * std::numbers::pi);
  EXPECT_NEAR(f / f_expected, 1.0, 1e-3);
}

TEST(Dynamics, RungeKuttaIsFourthOrder) {
  DeviceParams p = bare_macrospin(0.1);
  p.Hk = 0.5;
  const Vec3 applied{0.2, 0.0, 0.0};
  const SublatticeState s0{UnitVector3{0.3, 0.4, 0.866}, UnitVector3{-0.3, -0.4, -0.866}, 0.0};
  const double t_end = 50e-12;
  auto run = [&](double dt) {
    return evolve(p, s0, constant(0.0), t_end, dt, [](const SublatticeState&) { return true; }, applied).m1.vec();
  };
  const Vec3 ref = run(1e-15);
  const double e1 = norm(run(1.6e-13) - ref);
  const double e2 = norm(run(0.8e-13) - ref);
  const double order = std::log2(e1 / e2);
  EXPECT_GT(order, 3.6);
  EXPECT_LT(order, 4.4);
}

TEST(Dynamics, OversizedStepIsRejected) {
  const DeviceParams p = calibrated_afmtj();
  const SublatticeState s{UnitVector3{0.7, 0.0, 0.714}, UnitVector3{0.0, 0.7, -0.714}, 0.0};
  EXPECT_THROW(step(p, s, constant(1.0), 1e-12), StepTooLarge);
}

TEST(Dynamics, CollapsedSublatticesHaveNoNeelDirection) {
  const DeviceParams p = calibrated_afmtj();
  const SublatticeState s{UnitVector3{0.0, 0.0, 1.0}, UnitVector3{0.0, 0.0, 1.0}, 0.0};
  EXPECT_THROW(readout_projection(p, s), DegenerateNeel);
}

TEST(Dynamics, InvalidParametersAreRejected) {
  DeviceParams p = calibrated_afmtj();
  p.alpha = 0.0;
  EXPECT_THROW(p.validate(), InvalidParams);
  p = calibrated_afmtj();
  p.Rp = -1.0;
  EXPECT_THROW(p.validate(), InvalidParams);
  EXPECT_THROW(evolve(calibrated_afmtj(), SublatticeState{}, constant(0.0), 1e-12, -1.0,
                      [](const SublatticeState&) { return true; }),
               InvalidParams);
}

TEST(Dynamics, SettledStatesReadAsParallelAndAntiparallel) {
  const DeviceParams p = calibrated_afmtj();
  EXPECT_NEAR(readout_projection(p, settled_state(p, 1)), std::cos(p.initial_tilt), 1e-12);
  EXPECT_NEAR(readout_projection(p, settled_state(p, -1)), -std::cos(p.initial_tilt), 1e-12);
  EXPECT_NEAR(resistance_of_state(p, settled_state(p, 1)), p.Rp, 1e-3 * p.Rp);
  EXPECT_NEAR(resistance_of_state(p, settled_state(p, -1)), p.R_ap(), 1e-3 * p.R_ap());
}

TEST(Dynamics, ResistanceStaysWithinParallelAndAntiparallelBounds) {
  const DeviceParams p = calibrated_afmtj();
  const auto traj = integrate(p, settled_state(p, 1), constant(0.7), 400e-12, default_dt(p, 0.7));
  for (const auto& s : traj.trajectory.samples) {
    ASSERT_GE(s.R, p.Rp);
    ASSERT_LE(s.R, p.R_ap());
  }
  EXPECT_GT(traj.trajectory.samples.back().R, 0.99 * p.R_ap());
}

TEST(Dynamics, PositivePulseSwitchesAndZeroPulseDoesNot) {
  const DeviceParams p = calibrated_afmtj();
  LatencyOptions o;
  o.v_peak = 0.7;
  o.settle = 20e-12;
  const auto t = switching_latency(p, settled_state(p, 1), constant(0.7), 2e-9, o);
  ASSERT_TRUE(t.has_value());
  EXPECT_GT(*t, 100e-12);
  EXPECT_LT(*t, 600e-12);
  EXPECT_FALSE(switching_latency(p, settled_state(p, 1), constant(0.0), 1e-9, o).has_value());
}

TEST(Dynamics, CalibratedPairLatencyAtSevenHundredMillivolts) {
  const auto t = write_latency(calibrated_afmtj(), 0.7);
  ASSERT_TRUE(t.has_value());
  EXPECT_NEAR(*t / 283.2e-12, 1.0, 0.05);
}

TEST(Dynamics, EvolveHitsEndTimeExactly) {
  const DeviceParams p = calibrated_afmtj();
  const auto s = evolve(p, settled_state(p, 1), constant(0.0), 1.234567e-12, 1e-14,
                        [](const SublatticeState&) { return true; });
  EXPECT_EQ(s.t, 1.234567e-12);
}
