#include "k4i/devices/motor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "k4i/error.hpp"

namespace k4i::devices {

namespace {

void refresh_flags(MotorState& s) {
  s.endstop_low = s.position_steps == 0;
  s.endstop_high = s.position_steps == s.max_steps;
}

}  // namespace

bool MotorState::ir_sensor(std::size_t k) const {
  return std::llabs(position_steps - ir_sensor_centers.at(k)) <= ir_window_steps;
}

MotorState make_motor_state(std::int64_t position, std::int64_t target, double speed, std::int64_t max_steps,
                            std::array<std::int64_t, 3> ir_centers, std::int64_t ir_window) {
  MotorState s;
  s.position_steps = position;
  s.target_steps = target;
  s.speed_steps_per_s = speed;
  s.max_steps = max_steps;
  s.ir_sensor_centers = ir_centers;
  s.ir_window_steps = ir_window;
  refresh_flags(s);
  validate(s);
  return s;
}

void validate(const MotorState& s) {
  const auto bad = [](const char* what) { throw Error(ErrorKind::validation, std::string("motor state: ") + what); };
  if (s.max_steps <= 0) bad("max_steps must be positive");
  if (s.position_steps < 0 || s.position_steps > s.max_steps) bad("position outside travel");
  if (!std::isfinite(s.speed_steps_per_s) || s.speed_steps_per_s <= 0.0) bad("speed must be positive");
  if (s.ir_window_steps <= 0) bad("IR window must be positive");
  if (s.endstop_low != (s.position_steps == 0) || s.endstop_high != (s.position_steps == s.max_steps)) {
    bad("end-stop flags inconsistent with position");
  }
}

MotorState motor_step(const MotorState& state, double dt_s) {
  if (!std::isfinite(dt_s) || dt_s <= 0.0) throw Error(ErrorKind::validation, "dt must be positive");
  validate(state);

  MotorState next = state;
  const auto budget = static_cast<std::int64_t>(std::llround(state.speed_steps_per_s * dt_s));
  const std::int64_t goal = std::clamp<std::int64_t>(state.target_steps, 0, state.max_steps);
  const std::int64_t gap = goal - state.position_steps;
  const std::int64_t move = std::min<std::int64_t>(gap < 0 ? -gap : gap, budget);
  next.position_steps = std::clamp<std::int64_t>(state.position_steps + (gap < 0 ? -move : move), 0, state.max_steps);
  refresh_flags(next);
  return next;
}

}  // namespace k4i::devices
