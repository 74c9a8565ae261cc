#include "k4i/devices/light.hpp"

#include <algorithm>
#include <cmath>

#include "k4i/error.hpp"

namespace k4i::devices {

double light_reading(std::span<const bool> led_states, double ambient_lux, double per_led_lux) {
  if (!std::isfinite(ambient_lux) || !std::isfinite(per_led_lux) || ambient_lux < 0.0 || per_led_lux < 0.0) {
    throw Error(ErrorKind::validation, "light levels must be finite and non-negative");
  }
  const auto lit = std::count(led_states.begin(), led_states.end(), true);
  return ambient_lux + per_led_lux * static_cast<double>(lit);
}

}  // namespace k4i::devices
