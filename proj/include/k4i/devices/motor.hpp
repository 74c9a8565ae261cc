#pragma once

#include <array>
#include <cstdint>

namespace k4i::devices {

/// Linear stepper carriage with two end-stops and three IR position sensors.
struct MotorState {
  std::int64_t position_steps = 0;
  std::int64_t target_steps = 0;
  double speed_steps_per_s = 500.0;
  std::int64_t max_steps = 4000;
  bool endstop_low = true;
  bool endstop_high = false;
  std::array<std::int64_t, 3> ir_sensor_centers{1000, 2000, 3000};
  std::int64_t ir_window_steps = 25;

  [[nodiscard]] bool ir_sensor(std::size_t k) const;

  friend bool operator==(const MotorState&, const MotorState&) = default;
};

/// Builds a state with end-stop flags consistent with the position.
MotorState make_motor_state(std::int64_t position, std::int64_t target, double speed_steps_per_s = 500.0,
                            std::int64_t max_steps = 4000,
                            std::array<std::int64_t, 3> ir_centers = {1000, 2000, 3000},
                            std::int64_t ir_window = 25);

/// Throws a validation Error when the flags disagree with the position or a
/// parameter is out of range.
void validate(const MotorState& state);

MotorState motor_step(const MotorState& state, double dt_s);

}  // namespace k4i::devices
