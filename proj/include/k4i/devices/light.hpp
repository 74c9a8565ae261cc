#pragma once

#include <span>

namespace k4i::devices {

/// Light sensor illuminated by ambient light plus every lit LED next to it.
double light_reading(std::span<const bool> led_states, double ambient_lux, double per_led_lux);

}  // namespace k4i::devices
