// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <string>

#include <gtest/gtest.h>

#include "cvqkd/scenario.hpp"

using namespace cvqkd;
using config::Dim;
using config::parse_quantity;

namespace {

const std::string kFixed = R"(
[scenario]
name = t
family = fixed-loss
detection = heterodyne
lo = LLO
curve = eve2 standard collective

[physics]
wavelength = 800 nm
detector_bandwidth = 100 MHz
nep = 6 pW/sqrtHz
lo_pulse_duration = 10 ns
lo_power = 100 mW
linewidth = 1.6 kHz
clock = 5 MHz
eta_eff = 0.7
n_b = 1/500

[protocol]
N = 1e7
m_fraction = 0.1
beta = 0.95
p_ec = 0.9
eps = 2^-33
mu = 10

[sweep]
from = 0 dB
to = 20 dB
points = 11
)";

std::string replace(std::string text, const std::string& from, const std::string& to) {
  const auto at = text.find(from);
  if (at == std::string::npos) throw std::logic_error("fixture has no '" + from + "'");
  return text.replace(at, from.size(), to);
}

std::string error_of(const std::string& text) {
  try {
    resolve_scenario(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Quantity, ExpressionsAndUnits) {
  EXPECT_EQ(parse_quantity("2^-33", Dim::none), std::ldexp(1.0, -33));
  EXPECT_EQ(parse_quantity("1/500", Dim::none), 0.002);
  EXPECT_EQ(parse_quantity("800 nm", Dim::length), 8e-7);
  EXPECT_EQ(parse_quantity("1.6 kHz", Dim::frequency), 1600.0);
  EXPECT_EQ(parse_quantity("100 mW", Dim::power), 0.1);
  EXPECT_DOUBLE_EQ(parse_quantity("6 pW/sqrtHz", Dim::nep), 6e-12);
  EXPECT_DOUBLE_EQ(parse_quantity("0.1 deg", Dim::angle), 0.1 * M_PI / 180.0);
  EXPECT_EQ(parse_quantity("2 * 3 / 4", Dim::none), 1.5);
  EXPECT_EQ(parse_quantity("1e-43", Dim::none), 1e-43);
  EXPECT_EQ(config::parse_count("5e7"), 50'000'000);
}

TEST(Quantity, Rejections) {
  EXPECT_THROW(parse_quantity("3 furlong", Dim::length), ConfigError);
  EXPECT_THROW(parse_quantity("3 MHz", Dim::length), ConfigError);
  EXPECT_THROW(parse_quantity("abc", Dim::none), ConfigError);
  EXPECT_THROW(config::parse_count("2.5"), ConfigError);
  EXPECT_THROW(config::parse_bool("maybe"), ConfigError);
}

TEST(Scenario, ResolvesFixture) {
  const auto sc = resolve_scenario(kFixed);
  EXPECT_EQ(sc.link.family, ChannelFamily::fixed_loss);
  EXPECT_EQ(sc.protocol.pe, 1'000'000);
  EXPECT_EQ(sc.protocol.eps_pe, std::ldexp(1.0, -33));
  EXPECT_EQ(sc.link.n_b, 0.002);
  ASSERT_EQ(sc.curves.size(), 1u);
  EXPECT_EQ(sc.sweep.abscissae().size(), 11u);
  EXPECT_EQ(sc.sweep.abscissae()[10], 20.0);
}

TEST(Scenario, DerivedEcho) {
  const auto sc = resolve_scenario(kFixed);
  EXPECT_NEAR(sc.derived_value("theta_el"), 1.45e-3, 0.02 * 1.45e-3);
  EXPECT_NEAR(sc.derived_value("xi_llo"), 0.018, 0.02 * 0.018);
  EXPECT_NEAR(sc.derived_value("w"), 6.338, 1e-3);
  EXPECT_THROW(sc.derived_value("w_general"), std::out_of_range);
}

TEST(Scenario, DefaultMessageCount) {
  const auto sc = resolve_scenario(replace(kFixed, "m_fraction = 0.1\n", ""));
  EXPECT_EQ(sc.protocol.pe, 1'000'000);
}

TEST(Scenario, UnknownNamesAreErrors) {
  EXPECT_NE(error_of(replace(kFixed, "eta_eff", "eta_efff")).find("unknown key 'eta_efff'"), std::string::npos);
  EXPECT_NE(error_of(kFixed + "\n[extras]\nx = 1\n").find("unknown section [extras]"), std::string::npos);
  EXPECT_NE(error_of(replace(kFixed, "800 nm", "800 nmm")).find("unknown unit"), std::string::npos);
  EXPECT_NE(error_of(replace(kFixed, "5 MHz", "5 m")).find("expected frequency"), std::string::npos);
  EXPECT_NE(error_of(replace(kFixed, "mu = 10", "mu = 10\nmu = 11")).find("duplicate key 'mu'"), std::string::npos);
}

TEST(Scenario, ErrorsCarryLineNumbers) {
  const auto msg = error_of(replace(kFixed, "eta_eff", "eta_efff"));
  EXPECT_EQ(msg.rfind("line ", 0), 0u) << msg;
}

TEST(Scenario, CrossFieldRulesAreNamed) {
  EXPECT_NE(error_of(replace(kFixed, "eve2 standard collective", "eve3 los collective")).find("los-requires-trusted-noise"),
            std::string::npos);
  EXPECT_NE(error_of(replace(replace(kFixed, "eve2 standard collective", "eve3 standard general"), "heterodyne", "homodyne"))
                .find("general-requires-heterodyne"),
            std::string::npos);
  EXPECT_NE(error_of(replace(kFixed, "n_b = 1/500", "n_b = 1/500\nangular_error = 0.1 deg")).find("family-keys"),
            std::string::npos);
  EXPECT_NE(error_of(replace(kFixed, "n_b = 1/500", "n_b = 1/500\nsky_radiance = 0.15 W/m2/nm/sr")).find("family-keys"),
            std::string::npos);
}

TEST(Scenario, MobileRequiresAngularError) {
  const std::string mobile = R"(
[scenario]
family = optical-mobile
detection = heterodyne
curve = eve3 standard collective
[physics]
sky_radiance = 0.15 W/m2/nm/sr
[protocol]
N = 5e7
mu = 10
)";
  EXPECT_NE(error_of(mobile).find("mobile-requires-fading"), std::string::npos);
  EXPECT_NO_THROW(resolve_scenario(replace(mobile, "[protocol]", "angular_error = 0.1 deg\n[protocol]")));
}

TEST(Scenario, HashIgnoresSpellingButNotValues) {
  const auto a = resolve_scenario(kFixed);
  auto respelled = replace(kFixed, "800 nm", "8e-7 m");
  respelled = replace(respelled, "n_b = 1/500", "n_b = 0.002");
  respelled = replace(respelled, "100 MHz", "0.1 GHz");
  const auto b = resolve_scenario("# comment\n" + respelled);
  EXPECT_EQ(a.hash, b.hash);
  EXPECT_EQ(a.canonical, b.canonical);
  const auto c = resolve_scenario(replace(kFixed, "n_b = 1/500", "n_b = 1/501"));
  EXPECT_NE(a.hash, c.hash);
  EXPECT_EQ(a.hash_hex().size(), 16u);
}

TEST(Scenario, MicrowaveThermalOccupation) {
  const std::string mw = R"(
[scenario]
family = microwave
detection = heterodyne
curve = eve3 standard collective
[physics]
eta_eff = 0.8
aperture = 5 cm
gain = 10
carrier_frequency = 1 GHz
temperature = 290 K
receiver_fov = 1 deg2
[protocol]
N = 5e7
beta = 0.98
mu = 21
)";
  const auto sc = resolve_scenario(mw);
  EXPECT_NEAR(sc.derived_value("n_th"), 0.1024, 5e-4);
  EXPECT_NEAR(sc.derived_value("wavelength"), 0.29979, 1e-4);
  EXPECT_NE(error_of(replace(mw, "curve = eve3 standard collective", "curve = eve2 standard collective"))
                .find("microwave-curves"),
            std::string::npos);
  EXPECT_NE(error_of(replace(mw, "gain = 10", "gain = 10\nn_th = 0.1")).find("thermal-source"), std::string::npos);
}

TEST(Scenario, ShippedScenariosLoad) {
  for (const char* name : {"fixed_loss", "optical_fixed", "optical_mobile", "microwave", "coverage"}) {
    const auto path = std::string(CVQKD_SCENARIO_DIR) + "/" + name + ".ini";
    EXPECT_NO_THROW(load_scenario(path)) << path;
  }
  EXPECT_THROW(load_scenario(std::string(CVQKD_SCENARIO_DIR) + "/missing.ini"), ConfigError);
}
