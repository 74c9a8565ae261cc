#include "k4i/devices/thermal.hpp"

#include <algorithm>
#include <cmath>

#include "k4i/error.hpp"

namespace k4i::devices {

void validate(const ThermalState& s) {
  const auto bad = [](const char* what) { throw Error(ErrorKind::validation, std::string("thermal state: ") + what); };
  if (!std::isfinite(s.temperature_c) || !std::isfinite(s.ambient_c) || !std::isfinite(s.heat_capacity_j_per_k) ||
      !std::isfinite(s.loss_coeff_w_per_k) || !std::isfinite(s.heater_power_w)) {
    bad("non-finite field");
  }
  if (s.temperature_c < absolute_zero_c || s.ambient_c < absolute_zero_c) bad("temperature below absolute zero");
  if (s.heat_capacity_j_per_k <= 0.0) bad("heat capacity must be positive");
  if (s.loss_coeff_w_per_k <= 0.0) bad("loss coefficient must be positive");
  if (s.heater_power_w < 0.0) bad("heater power must be non-negative");
}

ThermalState thermal_step(const ThermalState& state, double dt_s) {
  validate(state);
  if (!std::isfinite(dt_s) || dt_s <= 0.0) throw Error(ErrorKind::validation, "dt must be positive");
  if (dt_s > 1.0) throw Error(ErrorKind::validation, "dt must not exceed 1 s");

  ThermalState next = state;
  const double flow_w = state.heater_power_w - state.loss_coeff_w_per_k * (state.temperature_c - state.ambient_c);
  next.temperature_c = std::max(absolute_zero_c, state.temperature_c + dt_s * flow_w / state.heat_capacity_j_per_k);
  return next;
}

double equilibrium_temperature(const ThermalState& state) {
  return state.ambient_c + state.heater_power_w / state.loss_coeff_w_per_k;
}

double quantize_temperature(double temperature_c, double resolution_c) {
  if (resolution_c <= 0.0) return temperature_c;
  return std::round(temperature_c / resolution_c) * resolution_c;
}

}  // namespace k4i::devices
