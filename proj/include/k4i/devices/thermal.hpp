#pragma once

namespace k4i::devices {

inline constexpr double absolute_zero_c = -273.15;

/// Lumped heater body: dT/dt = (P - h (T - T_ambient)) / C.
struct ThermalState {
  double temperature_c = 25.0;
  double ambient_c = 25.0;
  double heat_capacity_j_per_k = 20.0;
  double loss_coeff_w_per_k = 0.5;
  double heater_power_w = 0.0;

  friend bool operator==(const ThermalState&, const ThermalState&) = default;
};

/// Throws a validation Error when a field is non-finite or out of its domain.
void validate(const ThermalState& state);

/// One explicit-Euler step. Requires 0 < dt_s <= 1.
ThermalState thermal_step(const ThermalState& state, double dt_s);

/// Temperature the body settles at for the current heater power.
double equilibrium_temperature(const ThermalState& state);

/// Thermometer reading: rounded to the nearest multiple of resolution_c.
double quantize_temperature(double temperature_c, double resolution_c = 0.0625);

}  // namespace k4i::devices
