#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace k4i::devices {

/// Segment order g f e d c b a, bit 0 = a.
using SegmentPair = std::array<std::uint8_t, 2>;

inline constexpr std::size_t epaper_max_chars = 64;

/// Bitmask for a single decimal digit. Throws a range Error outside 0..9.
std::uint8_t seven_segment_digit(int digit);

/// Tens and units digits of a 0..99 value, leading zero included.
SegmentPair render_seven_segment(int value);

/// Shown when a program drives the display outside 0..99.
inline constexpr SegmentPair seven_segment_overflow{0x40, 0x40};

struct DisplayState {
  SegmentPair seven_segment{0x3F, 0x3F};
  std::string epaper_text;

  friend bool operator==(const DisplayState&, const DisplayState&) = default;
};

/// Number of UTF-8 code points. Throws a validation Error on malformed UTF-8.
std::size_t utf8_length(std::string_view text);

/// Throws a validation Error for text longer than the e-paper buffer.
void validate_epaper_text(std::string_view text);

}  // namespace k4i::devices
