#include <doctest.h>

#include <array>
#include <cmath>
#include <set>

#include "k4i/devices/bank.hpp"
#include "k4i/devices/display.hpp"
#include "k4i/devices/light.hpp"
#include "k4i/devices/motor.hpp"
#include "k4i/devices/signal.hpp"
#include "k4i/devices/thermal.hpp"
#include "k4i/error.hpp"

using namespace k4i;
using namespace k4i::devices;

namespace {

double closed_form(double t, double ambient, double p, double h, double c, double t0) {
  const double eq = ambient + p / h;
  return eq + (t0 - eq) * std::exp(-h * t / c);
}

ThermalState heater_on(double t0 = 25.0) {
  ThermalState s;
  s.temperature_c = t0;
  s.heater_power_w = 10.0;
  return s;
}

}  // namespace

TEST_CASE("signal values keep their variant and stay finite") {
  auto d = SignalValue::digital(true);
  CHECK(d.is_digital());
  CHECK(d.as_bool());
  CHECK_THROWS_AS((void)d.as_real(), Error);
  CHECK_THROWS_AS(d.set(1.5), Error);
  auto a = SignalValue::analog(25.0, Unit::celsius);
  CHECK_THROWS_AS(a.set(true), Error);
  CHECK_THROWS_AS(SignalValue::analog(std::nan(""), Unit::lux), Error);
  CHECK_THROWS_AS(SignalValue::analog(INFINITY, Unit::lux), Error);
  CHECK(format_signal(a) == "25.00 °C");
  CHECK(format_signal(d) == "true");
  CHECK(format_signal(SignalValue::analog(160, Unit::lux)) == "160.00 lux");
}

TEST_CASE("thermal fixed points") {
  ThermalState s;
  for (double dt : {0.001, 0.01, 0.5, 1.0}) CHECK(thermal_step(s, dt).temperature_c == 25.0);
  ThermalState eq = heater_on(45.0);
  for (double dt : {0.001, 0.01, 0.5, 1.0}) CHECK(thermal_step(eq, dt).temperature_c == doctest::Approx(45.0).epsilon(1e-12));
  CHECK(equilibrium_temperature(eq) == 45.0);
}

TEST_CASE("thermal step preconditions") {
  ThermalState s;
  CHECK_THROWS_AS(thermal_step(s, 0.0), Error);
  CHECK_THROWS_AS(thermal_step(s, -0.1), Error);
  CHECK_THROWS_AS(thermal_step(s, 1.5), Error);
  s.heat_capacity_j_per_k = 0;
  CHECK_THROWS_AS(thermal_step(s, 0.01), Error);
  ThermalState n;
  n.temperature_c = std::nan("");
  CHECK_THROWS_AS(thermal_step(n, 0.01), Error);
}

TEST_CASE("thermal integration at t=40 s against the closed form") {
  ThermalState s = heater_on();
  for (int i = 0; i < 4000; ++i) s = thermal_step(s, 0.01);
  // 25 + 20 (1 - e^-1), computed offline: 37.6424
  CHECK(std::abs(s.temperature_c - 37.6424) < 0.05);
  CHECK(std::abs(s.temperature_c - closed_form(40.0, 25, 10, 0.5, 20, 25)) < 0.05);
}

TEST_CASE("thermal error bound and monotone convergence over 600 s") {
  for (double t0 : {0.0, 25.0, 60.0, 90.0}) {
    ThermalState s = heater_on(t0);
    const double eq = equilibrium_temperature(s);
    double max_err = 0.0;
    double prev_gap = std::abs(t0 - eq);
    for (int i = 1; i <= 60000; ++i) {
      s = thermal_step(s, 0.01);
      max_err = std::max(max_err, std::abs(s.temperature_c - closed_form(i * 0.01, 25, 10, 0.5, 20, t0)));
      const double gap = std::abs(s.temperature_c - eq);
      REQUIRE(gap <= prev_gap + 1e-12);
      prev_gap = gap;
    }
    CHECK(max_err <= 0.05);
  }
}

TEST_CASE("thermometer quantization") {
  CHECK(quantize_temperature(25.0) == 25.0);
  CHECK(quantize_temperature(25.03) == 25.0);
  CHECK(quantize_temperature(25.04) == 25.0625);
  CHECK(quantize_temperature(60.03125) == 60.0625);
  CHECK(quantize_temperature(60.031) == 60.0);
}

TEST_CASE("motor kinematics examples") {
  auto at = make_motor_state(100, 100);
  CHECK(motor_step(at, 0.1).position_steps == 100);
  auto from0 = make_motor_state(0, 100);
  CHECK(motor_step(from0, 0.1).position_steps == 50);
  auto near_end = make_motor_state(3990, 5000);
  const auto end = motor_step(near_end, 0.1);
  CHECK(end.position_steps == 4000);
  CHECK(end.endstop_high);
  CHECK_FALSE(end.endstop_low);
  CHECK_THROWS_AS(motor_step(from0, 0.0), Error);
  CHECK_THROWS_AS(motor_step(from0, -1.0), Error);
}

TEST_CASE("motor position stays in travel and composes without clamping") {
  for (std::int64_t target : {-500LL, 0LL, 1234LL, 4000LL, 9000LL}) {
    auto s = make_motor_state(2000, target);
    for (int i = 0; i < 200; ++i) {
      s = motor_step(s, 0.05);
      REQUIRE(s.position_steps >= 0);
      REQUIRE(s.position_steps <= s.max_steps);
    }
  }
  // n steps of dt == one step of n*dt while far from the target.
  auto a = make_motor_state(100, 3900);
  auto b = a;
  for (int i = 0; i < 10; ++i) a = motor_step(a, 0.01);
  b = motor_step(b, 0.1);
  CHECK(a.position_steps == b.position_steps);
}

TEST_CASE("end-stop and IR flags are functions of position") {
  const std::int64_t max = 60;
  const std::array<std::int64_t, 3> centers{15, 30, 45};
  for (std::int64_t p = 0; p <= max; ++p) {
    const auto s = make_motor_state(p, p, 10.0, max, centers, 3);
    CHECK(s.endstop_low == (p == 0));
    CHECK(s.endstop_high == (p == max));
    for (std::size_t k = 0; k < 3; ++k) CHECK(s.ir_sensor(k) == (std::llabs(p - centers[k]) <= 3));
    // Moving there from elsewhere lands on the same flags.
    auto m = make_motor_state(p == 0 ? max : 0, p, 1000.0, max, centers, 3);
    m = motor_step(m, 1.0);
    CHECK(m.position_steps == p);
    CHECK(m.endstop_low == s.endstop_low);
    CHECK(m.endstop_high == s.endstop_high);
    for (std::size_t k = 0; k < 3; ++k) CHECK(m.ir_sensor(k) == s.ir_sensor(k));
  }
  auto bad = make_motor_state(10, 10);
  bad.endstop_low = true;
  CHECK_THROWS_AS(validate(bad), Error);
}

TEST_CASE("light reading examples") {
  const bool off[] = {false, false, false};
  const bool on[] = {true, true, true};
  const bool one[] = {true, false, false};
  CHECK(light_reading(off, 100, 20) == 100);
  CHECK(light_reading(on, 100, 20) == 160);
  CHECK(light_reading(one, 0, 20) == 20);
  CHECK_THROWS_AS(light_reading(off, -1, 20), Error);
  CHECK_THROWS_AS(light_reading(off, 1, -20), Error);
}

TEST_CASE("light reading is exactly linear over all 8 LED combinations") {
  for (int mask = 0; mask < 8; ++mask) {
    bool leds[3];
    int count = 0;
    for (int k = 0; k < 3; ++k) {
      leds[k] = (mask >> k) & 1;
      count += leds[k];
    }
    CHECK(light_reading(leds, 100, 20) == 100 + 20 * count);
    // Lighting one more LED never lowers the reading.
    for (int k = 0; k < 3; ++k) {
      if (leds[k]) continue;
      bool more[3] = {leds[0], leds[1], leds[2]};
      more[k] = true;
      CHECK(light_reading(more, 100, 20) >= light_reading(leds, 100, 20));
    }
  }
}

TEST_CASE("seven-segment rendering") {
  // Independent gfedcba table: segments lit per digit.
  const char* lit[10] = {"abcdef", "bc", "abdeg", "abcdg", "bcfg", "acdfg", "acdefg", "abc", "abcdefg", "abcdfg"};
  std::set<int> seen;
  for (int d = 0; d < 10; ++d) {
    int mask = 0;
    for (const char* c = lit[d]; *c; ++c) mask |= 1 << (*c - 'a');
    CHECK(seven_segment_digit(d) == mask);
    CHECK((seven_segment_digit(d) & 0x80) == 0);
    seen.insert(seven_segment_digit(d));
  }
  CHECK(seen.size() == 10);
  CHECK(render_seven_segment(88) == SegmentPair{0x7F, 0x7F});
  CHECK(render_seven_segment(42) == SegmentPair{0x66, 0x5B});
  CHECK(render_seven_segment(7) == SegmentPair{0x3F, 0x07});
  CHECK_THROWS_AS(render_seven_segment(100), Error);
  CHECK_THROWS_AS(render_seven_segment(-1), Error);
  try {
    render_seven_segment(100);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::range);
  }
}

TEST_CASE("e-paper text limit counts code points") {
  CHECK_NOTHROW(validate_epaper_text(std::string(64, 'x')));
  CHECK_THROWS_AS(validate_epaper_text(std::string(65, 'x')), Error);
  std::string deg;
  for (int i = 0; i < 64; ++i) deg += "°";
  CHECK(utf8_length(deg) == 64);
  CHECK_NOTHROW(validate_epaper_text(deg));
  CHECK_THROWS_AS(utf8_length("\xff"), Error);
}

TEST_CASE("device bank wiring") {
  std::vector<Device> devs{
      {"led1", make_device("led", {})},
      {"led2", make_device("led", {{"on", true}})},
      {"heater", make_device("heater", {})},
      {"temp1", make_device("thermometer", {})},
      {"light1", make_device("light_sensor", {})},
      {"display", make_device("seven_segment", {})},
      {"button1", make_device("button", {})},
  };
  DeviceBank bank(devs);
  CHECK(bank.read({"temp1", "temperature"}) == SignalValue::analog(25.0, Unit::celsius));
  CHECK(bank.read({"light1", "lux"}).as_real() == 120.0);
  bank.write({"led1", "on"}, SignalValue::digital(true));
  CHECK(bank.read({"light1", "lux"}).as_real() == 140.0);

  bank.write({"heater", "on"}, SignalValue::digital(true));
  for (int i = 0; i < 4000; ++i) bank.step_physics(0.01);
  CHECK(bank.read({"temp1", "temperature"}).as_real() == doctest::Approx(37.625));

  bank.write({"display", "value"}, SignalValue::analog(42.4, Unit::none));
  const auto& seg = std::get<SevenSegment>(bank.find("display")->model);
  CHECK(seg.segments == SegmentPair{0x66, 0x5B});
  bank.write({"display", "value"}, SignalValue::analog(123, Unit::none));
  CHECK(std::get<SevenSegment>(bank.find("display")->model).segments == seven_segment_overflow);

  const auto info = bank.field_info({"button1", "active"});
  REQUIRE(info);
  CHECK(info->stimulus);
  CHECK_FALSE(bank.field_info({"button1", "nope"}));
  CHECK_THROWS_AS(make_device("flux_capacitor", {}), Error);
  CHECK_THROWS_AS(DeviceBank({{"t", make_device("thermometer", {{"heater", "missing"}})}}), Error);
}
