#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "afmtj/bitline.hpp"
#include "afmtj/peripherals.hpp"

using namespace afmtj;

namespace {

double stored_charge(const BitlineNetwork& net, const std::vector<double>& v) {
  const auto c = net.node_capacitance();
  return std::inner_product(c.begin(), c.end(), v.begin(), 0.0);
}

double stored_energy(const BitlineNetwork& net, const std::vector<double>& v) {
  const auto c = net.node_capacitance();
  double e = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) e += 0.5 * c[i] * v[i] * v[i];
  return e;
}

Drive step_source(double v, double r) {
  return Drive{[v](double) { return v; }, r};
}

const ConductanceFn kOpen = [](double) { return 0.0; };

}  // namespace

TEST(Bitline, CapacitanceIsConservedAcrossTheLadder) {
  const auto net = build_bitline(200.0, 22.5e-15, 15e-15, 16, 2, 10e-15);
  const auto c = net.node_capacitance();
  EXPECT_NEAR(std::accumulate(c.begin(), c.end(), 0.0), 22.5e-15 + 2 * 15e-15 + 10e-15, 1e-27);
  EXPECT_NEAR(net.r_total(), 200.0, 1e-12);
  EXPECT_EQ(net.tsv_nodes.size(), 2u);
}

TEST(Bitline, LumpedRcFollowsTheExponential) {
  const double R = 1000.0, C = 50e-15;
  const auto net = build_bitline(0.0, C, 0.0, 1, 0);
  const double tau = R * C;
  const auto w = transient_solve(net, kOpen, step_source(1.0, R), 5 * tau, tau / 2000);
  const auto far = w.node(net.far_node());
  for (std::size_t k = 0; k < w.t.size(); k += 500) {
    EXPECT_NEAR(far[k], 1.0 - std::exp(-w.t[k] / tau), 1e-3);
  }
}

TEST(Bitline, HalfSwingDelayMatchesElmoreTimesLn2WhenDriverDominates) {
  const auto net = build_bitline(100.0, 20e-15, 5e-15, 16, 2, 10e-15);
  const double r_src = 5000.0;
  const double tau = elmore_delay(net, r_src, net.far_node());
  const auto w = transient_solve(net, kOpen, step_source(1.0, r_src), 6 * tau, tau / 2000);
  const auto t50 = crossing_time(w.t, w.node(net.far_node()), 0.5);
  ASSERT_TRUE(t50.has_value());
  EXPECT_NEAR(*t50 / (std::log(2.0) * tau), 1.0, 0.05);
}

TEST(Bitline, SegmentRefinementConverges) {
  auto t50 = [](std::size_t n) {
    const auto net = build_bitline(2000.0, 20e-15, 0.0, n, 0, 40e-15);
    const double tau = elmore_delay(net, 100.0, net.far_node());
    const auto w = transient_solve(net, kOpen, step_source(1.0, 100.0), 6 * tau, tau / 4000);
    return *crossing_time(w.t, w.node(net.far_node()), 0.5);
  };
  EXPECT_NEAR(t50(16) / t50(64), 1.0, 0.02);
}

TEST(Bitline, FloatingNetworkConservesCharge) {
  const auto net = build_bitline(300.0, 20e-15, 15e-15, 8, 2, 10e-15);
  std::vector<double> v0(net.n_nodes());
  for (std::size_t i = 0; i < v0.size(); ++i) v0[i] = 0.1 * static_cast<double>(i % 3) + 0.05 * static_cast<double>(i);
  Drive none;
  none.t_off = 0.0;
  const auto w = transient_solve(net, kOpen, none, 200e-12, 0.5e-12, v0);
  const double q0 = stored_charge(net, v0);
  EXPECT_NEAR(stored_charge(net, w.v.back()) / q0, 1.0, 1e-12);
  // equalized to the charge-weighted mean
  for (double v : w.v.back()) EXPECT_NEAR(v, q0 / net.c_total(), 1e-6);
}

TEST(Bitline, DischargeThroughDeviceIsPassive) {
  const auto net = build_bitline(200.0, 22.5e-15, 15e-15, 16, 2, 10e-15);
  const std::vector<double> v0(net.n_nodes(), 0.9);
  Drive none;
  none.t_off = 0.0;
  const auto w = transient_solve(net, constant_resistance(5000.0), none, 500e-12, 0.5e-12, v0);
  double e = stored_energy(net, v0);
  for (const auto& row : w.v) {
    const double e1 = stored_energy(net, row);
    ASSERT_LE(e1, e * (1.0 + 1e-12));
    e = e1;
  }
  EXPECT_LT(e, 0.5 * stored_energy(net, v0));
}

TEST(Bitline, GeometryErrorsAreReported) {
  EXPECT_THROW(build_bitline(100.0, 1e-15, 1e-15, 0, 0), InvalidGeometry);
  EXPECT_THROW(build_bitline(100.0, 1e-15, 1e-15, 4, 5), InvalidGeometry);
  EXPECT_THROW(build_bitline(-1.0, 1e-15, 1e-15, 4, 1), InvalidGeometry);
}

TEST(Bitline, NetworkWithoutCapacitanceOrPathIsSingular) {
  const auto net = build_bitline(100.0, 0.0, 0.0, 4, 0, 0.0);
  Drive none;
  none.t_off = 0.0;
  EXPECT_THROW(transient_solve(net, kOpen, none, 1e-12, 1e-13), SingularNetwork);
}

TEST(Bitline, TierTemperaturesFollowTheGradient) {
  const TierThermalModel th;
  EXPECT_DOUBLE_EQ(th.tier_temperature(0), 373.15);
  EXPECT_DOUBLE_EQ(th.tier_temperature(2), 298.15);
  EXPECT_DOUBLE_EQ(th.tier_temperature(1), 335.65);
  EXPECT_THROW(th.tier_temperature(3), InvalidGeometry);
}

TEST(Bitline, SampledWaveformInterpolation) {
  const std::vector<double> t{0.0, 1.0, 2.0}, v{0.0, 1.0, 0.0};
  EXPECT_DOUBLE_EQ(sample_at(t, v, 0.25), 0.25);
  EXPECT_DOUBLE_EQ(sample_at(t, v, 1.5), 0.5);
  EXPECT_DOUBLE_EQ(sample_at(t, v, 5.0), 0.0);
  EXPECT_DOUBLE_EQ(*crossing_time(t, v, 0.5), 0.5);
}

TEST(Bitline, CosimulatedWriteSwitchesThroughTheLine) {
  DeviceParams p;
  p.kind = DeviceKind::afmtj;
  p.alpha = 0.1;
  p.J_AF = -13.6119e6;
  p.Hk = 3.81044e-3;
  p.sot_efficiency = 1.25224e-2;
  p.field_like_ratio = 1.0;
  p.Rp = 3341.3;
  p.TMR = 0.8;
  const auto net = build_bitline(200.0, 22.5e-15, 15e-15, 16, 2, 10e-15);
  const Trapezoid pulse{0.8, 16e-12, 1e-9, 16e-12, 0.0};
  const Drive d{[pulse](double t) { return pulse(t); }, 100.0};
  const auto r = cosimulate(net, p, settled_state(p, 1), d, 1e-9, default_dt(p, 0.8));
  EXPECT_GT(r.projection.front(), 0.99);
  EXPECT_LT(r.projection.back(), -0.9);
  const double v_far = r.circuit.v.back()[net.far_node()];
  EXPECT_LT(v_far, 0.8);
  EXPECT_GT(v_far, 0.7);
}
