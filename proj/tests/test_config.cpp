#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "afmtj/config.hpp"

using namespace afmtj;

TEST(Config, BundledDefaultsMatchTheShippedFile) {
  std::ifstream f(std::string(AFMTJ_SOURCE_DIR) + "/config/defaults.json");
  ASSERT_TRUE(f.good());
  EXPECT_EQ(nlohmann::json::parse(f), default_config_json());
}

TEST(Config, DefaultsParseIntoTheCalibratedModel) {
  const RunConfig c = parse_run_config(default_config_json());
  EXPECT_EQ(c.master_seed, 20240917u);
  EXPECT_DOUBLE_EQ(c.afmtj.J_AF / c.afmtj.Ms, -13.6119);
  EXPECT_EQ(c.afmtj.kind, DeviceKind::afmtj);
  EXPECT_EQ(c.mtj.kind, DeviceKind::mtj);
  EXPECT_EQ(c.sweep_voltages.size(), 8u);
  EXPECT_EQ(c.mc_trials, 3150000u);
  EXPECT_EQ(c.precharge.variant, PrechargeVariant::pd_eq_plus);
  EXPECT_EQ(c.sense.variant, SenseVariant::plus);
  const ReadCornerTable builtin;
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(c.corners.baseline[i].e_read_fj, builtin.baseline[i].e_read_fj);
    EXPECT_EQ(c.corners.plus[i].e_read_fj, builtin.plus[i].e_read_fj);
    EXPECT_EQ(c.corners.plus[i].t_read_ns, builtin.plus[i].t_read_ns);
  }
  EXPECT_EQ(c.variation[Param::vdd].a, 0.8);
  EXPECT_EQ(c.variation[Param::temperature].b, 475.0);
}

TEST(Config, UnknownKeysAreRejected) {
  auto j = default_config_json();
  EXPECT_THROW(merge_checked(j, nlohmann::json::parse(R"({"device": {"afmtj": {"colour": 1}}})")), ConfigInvalid);
  EXPECT_THROW(merge_checked(j, nlohmann::json::parse(R"({"nonsense": true})")), ConfigInvalid);
}

TEST(Config, TypeMismatchesAreRejected) {
  auto j = default_config_json();
  EXPECT_THROW(merge_checked(j, nlohmann::json::parse(R"({"workers": "many"})")), ConfigInvalid);
  EXPECT_THROW(merge_checked(j, nlohmann::json::parse(R"({"workers": 1.5})")), ConfigInvalid);
  EXPECT_THROW(merge_checked(j, nlohmann::json::parse(R"({"device": 3})")), ConfigInvalid);
}

TEST(Config, DottedOverridesParseValues) {
  EXPECT_EQ(override_patch("device.afmtj.alpha=0.2"), nlohmann::json::parse(R"({"device":{"afmtj":{"alpha":0.2}}})"));
  EXPECT_EQ(override_patch("sense.variant=baseline"), nlohmann::json::parse(R"({"sense":{"variant":"baseline"}})"));
  EXPECT_EQ(override_patch("margins.temperatures_c=[25,100]"),
            nlohmann::json::parse(R"({"margins":{"temperatures_c":[25,100]}})"));
  EXPECT_THROW(override_patch("no_equals_sign"), ConfigInvalid);
  EXPECT_THROW(override_patch("a..b=1"), ConfigInvalid);
}

TEST(Config, OverridesApplyOnTopOfDefaults) {
  const auto j = load_config_json(std::nullopt, {"master_seed=7", "sense.variant=baseline"});
  const RunConfig c = parse_run_config(j);
  EXPECT_EQ(c.master_seed, 7u);
  EXPECT_EQ(c.sense.variant, SenseVariant::baseline);
}

TEST(Config, MissingFileIsAConfigurationError) {
  EXPECT_THROW(load_config_json(std::string("/nonexistent/afmtj.json"), {}), ConfigInvalid);
}

TEST(Config, InvalidValuesAreRejected) {
  auto bad = [](const std::string& o) { return parse_run_config(load_config_json(std::nullopt, {o})); };
  EXPECT_THROW(bad("device.afmtj.Rp=-5"), ConfigInvalid);
  EXPECT_THROW(bad("device.afmtj.J_AF=1e6"), ConfigInvalid);
  EXPECT_THROW(bad("precharge.variant=magic"), ConfigInvalid);
  EXPECT_THROW(bad("variation.vdd=[1.2,0.8]"), ConfigInvalid);
  EXPECT_THROW(bad("margins.target=2"), ConfigInvalid);
  EXPECT_THROW(bad("array.tsv_hops=40"), ConfigInvalid);
  EXPECT_THROW(bad("sweep.voltages=[0.7,0.6]"), ConfigInvalid);
  EXPECT_THROW(bad("sweep.verify_vdd=1.5"), ConfigInvalid);
}

TEST(Config, HashIgnoresWorkersAndOutputDirectory) {
  const auto base = default_config_json();
  auto a = base;
  a["workers"] = 4;
  a["output_dir"] = "elsewhere";
  EXPECT_EQ(config_hash(a), config_hash(base));
  auto b = base;
  b["master_seed"] = 1;
  EXPECT_NE(config_hash(b), config_hash(base));
  EXPECT_EQ(hash_hex(0x1234).size(), 16u);
  EXPECT_EQ(hash_hex(0x1234), "0000000000001234");
}
