#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "afmtj/peripherals.hpp"
#include "afmtj/read_path.hpp"

using namespace afmtj;

namespace {

BitlineNetwork default_bitline() { return build_bitline(200.0, 22.5e-15, 15e-15, 16, 2, 10e-15); }

PrechargeEqModel model(PrechargeVariant v) {
  PrechargeEqModel m;
  m.variant = v;
  return m;
}

}  // namespace

TEST(SenseAmp, DecisionIsStrictlyAboveTrip) {
  SenseAmpModel sa;
  sa.v_ref = 0.5;
  EXPECT_EQ(sense_decision(sa, 0.5, 0.0, 300.0).bit, 0);
  EXPECT_EQ(sense_decision(sa, 0.5000001, 0.0, 300.0).bit, 1);
  EXPECT_EQ(sense_decision(sa, 0.51, 0.02, 300.0).bit, 0);
}

TEST(SenseAmp, ProgrammedOffsetOnlyAppliesToPlusVariant) {
  SenseAmpModel sa;
  sa.v_ref = 0.5;
  sa.v_off_programmed = 0.1;
  EXPECT_DOUBLE_EQ(sa.trip(0.0), 0.5);
  sa.variant = SenseVariant::plus;
  EXPECT_DOUBLE_EQ(sa.trip(0.0), 0.6);
}

TEST(SenseAmp, DecisionLatencyGrowsWithTemperature) {
  const SenseAmpModel sa;
  EXPECT_DOUBLE_EQ(sense_decision(sa, 0.0, 0.0, 300.0).latency, sa.t_decision_nominal);
  EXPECT_GT(sense_decision(sa, 0.0, 0.0, 400.0).latency, sa.t_decision_nominal);
}

TEST(ReadTable, CornersReproduceTheBundledValues) {
  const ReadCornerTable tab;
  const double t[3] = {0.6, 0.8, 0.9};
  const double e_base[3] = {0.0505, 0.0733, 0.111};
  const double e_plus[3] = {0.0123, 0.0128, 0.0140};
  for (int i = 0; i < 3; ++i) {
    const Corner c{tab.baseline[i].vdd, tab.baseline[i].temp_c};
    EXPECT_EQ(read_latency_ns(tab, SenseVariant::baseline, c), t[i]);
    EXPECT_EQ(read_latency_ns(tab, SenseVariant::plus, c), t[i]);
    EXPECT_EQ(read_energy_fj(tab, SenseVariant::baseline, c), e_base[i]);
    EXPECT_EQ(read_energy_fj(tab, SenseVariant::plus, c), e_plus[i]);
  }
}

TEST(ReadTable, EnergyRatiosAtCorners) {
  const ReadCornerTable tab;
  const double expected[3] = {0.0505 / 0.0123, 0.0733 / 0.0128, 0.111 / 0.0140};
  for (int i = 0; i < 3; ++i) {
    const Corner c{tab.baseline[i].vdd, tab.baseline[i].temp_c};
    const double r = read_energy_fj(tab, SenseVariant::baseline, c) / read_energy_fj(tab, SenseVariant::plus, c);
    EXPECT_NEAR(r, expected[i], 1e-12);
  }
  EXPECT_NEAR(expected[0], 4.1, 0.05);
  EXPECT_NEAR(expected[1], 5.7, 0.05);
  EXPECT_NEAR(expected[2], 7.9, 0.05);
}

TEST(ReadTable, OffCornerQueryIsBracketedBySlowAndTypical) {
  const ReadCornerTable tab;
  const Corner q{0.85, 0.0};
  for (SenseVariant v : {SenseVariant::baseline, SenseVariant::plus}) {
    const auto& r = tab.rows(v);
    const double e = read_energy_fj(tab, v, q);
    const double t = read_latency_ns(tab, v, q);
    EXPECT_GT(e, std::min(r[0].e_read_fj, r[1].e_read_fj));
    EXPECT_LT(e, std::max(r[0].e_read_fj, r[1].e_read_fj));
    EXPECT_GT(t, std::min(r[0].t_read_ns, r[1].t_read_ns));
    EXPECT_LT(t, std::max(r[0].t_read_ns, r[1].t_read_ns));
  }
}

TEST(ReadTable, QueriesOutsideTheEnvelopeAreRejected) {
  const ReadCornerTable tab;
  EXPECT_THROW(read_energy(tab, SenseVariant::plus, Corner{1.2, 25.0}), UnknownCorner);
  EXPECT_THROW(read_latency(tab, SenseVariant::plus, Corner{0.9, 120.0}), UnknownCorner);
}

TEST(Precharge, EqualizedWindowBeatsTheFixedDrive) {
  const auto net = default_bitline();
  const TierThermalModel th;
  const double w_eq = disturbance_free_window(model(PrechargeVariant::pd_eq), net, th, 0.1);
  const double w_plus = disturbance_free_window(model(PrechargeVariant::pd_eq_plus), net, th, 0.1);
  EXPECT_GT(w_eq, 0.0);
  EXPECT_GE(w_plus / w_eq, 2.0);
  EXPECT_LE(w_plus, 1.0);
}

TEST(Precharge, CompensatedDriveNarrowsTheSettlingSpreadAcrossTiers) {
  const auto net = default_bitline();
  const TierThermalModel th;
  auto spread = [&](PrechargeVariant v) {
    std::vector<double> t;
    for (std::size_t k = 0; k < th.n_tiers; ++k) t.push_back(settling_time(model(v), net, th.tier_temperature(k)));
    const auto [lo, hi] = std::minmax_element(t.begin(), t.end());
    return *hi - *lo;
  };
  EXPECT_LT(spread(PrechargeVariant::pd_eq_plus), spread(PrechargeVariant::pd_eq));
}

TEST(Precharge, ResidualShrinksWithLongerWindows) {
  const auto net = default_bitline();
  const auto m = model(PrechargeVariant::pd_eq);
  const double r_short = eq_residual(m, net, 350.0, 0.1, 0.5);
  const double r_long = eq_residual(m, net, 350.0, 0.1, 1.0);
  EXPECT_LT(r_long, r_short);
  EXPECT_LT(r_short, 0.1);
  EXPECT_DOUBLE_EQ(eq_residual(m, net, 350.0, 0.1, 0.0), 0.1);
}

TEST(Precharge, WindowStretchesWithTemperatureOnlyForPlus) {
  const auto net = default_bitline();
  const auto eq = model(PrechargeVariant::pd_eq);
  const auto plus = model(PrechargeVariant::pd_eq_plus);
  EXPECT_DOUBLE_EQ(precharge_waveform(eq, net, 300.0).window, precharge_waveform(eq, net, 400.0).window);
  EXPECT_GT(precharge_waveform(plus, net, 400.0).window, precharge_waveform(plus, net, 300.0).window);
  EXPECT_DOUBLE_EQ(precharge_waveform(plus, net, 300.0).window, precharge_waveform(eq, net, 300.0).window);
}

TEST(WriteDriver, SelfEnergyIsHalfCVSquared) {
  WriteDriverModel wd;
  wd.c_out = 1e-15;
  const Trapezoid pulse{0.7, 16e-12, 1e-9, 16e-12, 0.0};
  EXPECT_NEAR(driver_energy(wd, pulse), 0.245e-15, 1e-21);
  const Trapezoid neg{-0.7, 16e-12, 1e-9, 16e-12, 0.0};
  EXPECT_NEAR(driver_energy(wd, neg), 0.245e-15, 1e-21);
}

TEST(WriteDriver, PulseSignAndCompensation) {
  WriteDriverModel wd;
  wd.amplitude_w0 = 0.6;
  wd.amplitude_w1 = 0.7;
  EXPECT_DOUBLE_EQ(write_pulse(wd, 1, 300.0).amplitude, 0.7);
  EXPECT_DOUBLE_EQ(write_pulse(wd, 0, 300.0).amplitude, -0.6);
  EXPECT_NEAR(write_pulse(wd, 1, 400.0).amplitude, 0.7 * 1.1, 1e-12);
  wd.variant = DriverVariant::fixed;
  EXPECT_DOUBLE_EQ(write_pulse(wd, 1, 400.0).amplitude, 0.7);
  EXPECT_DOUBLE_EQ(write_pulse(wd, 0, 400.0).amplitude, -0.7);
}

TEST(Trapezoid, ShapeAndArea) {
  const Trapezoid p{1.0, 10.0, 20.0, 10.0, 5.0};
  EXPECT_DOUBLE_EQ(p(5.0), 0.0);
  EXPECT_DOUBLE_EQ(p(10.0), 0.5);
  EXPECT_DOUBLE_EQ(p(25.0), 1.0);
  EXPECT_DOUBLE_EQ(p(40.0), 0.5);
  EXPECT_DOUBLE_EQ(p(50.0), 0.0);
  EXPECT_DOUBLE_EQ(p.area(), 30.0);
}

TEST(ReadPath, ApStateHoldsMoreChargeAtTheSenseInstant) {
  const auto net = default_bitline();
  const ReadConfig rc;
  const auto rr = read_resistances(3341.3, 0.8, rc, 300.0);
  const ReadPair pair = read_pair(net, rr, model(PrechargeVariant::pd_eq_plus), 300.0, rc, rc.v_read, rc.t_sa);
  EXPECT_GT(pair.differential(), 0.0);
  EXPECT_GT(pair.v_p, 0.0);
  EXPECT_LT(pair.v_ap, rc.v_read);
  const double trip = balanced_trip(pair);
  EXPECT_GT(trip, pair.v_p);
  EXPECT_LT(trip, pair.v_ap);
}

TEST(ReadPath, StreamingSenseVoltageMatchesStoredTransient) {
  const auto net = default_bitline();
  const ReadConfig rc;
  const auto pd = model(PrechargeVariant::pd_eq_plus);
  const auto full = read_path_simulate(net, 4000.0, pd, 350.0, rc, rc.v_read, rc.t_sa);
  EXPECT_NEAR(read_sense_voltage(net, 4000.0, pd, 350.0, rc, rc.v_read, rc.t_sa), full.v_sense, 1e-12);
}

TEST(ReadPath, OffsetSpreadScalesInverselyWithSupply) {
  const ReadConfig rc;
  EXPECT_DOUBLE_EQ(offset_sigma_at(rc, 2e-3, 0.9), 2e-3);
  EXPECT_NEAR(offset_sigma_at(rc, 2e-3, 0.8), 2e-3 * 0.9 / 0.8, 1e-15);
}
