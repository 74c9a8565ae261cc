#include "k4i/devices/display.hpp"

#include "k4i/error.hpp"

namespace k4i::devices {

namespace {

constexpr std::array<std::uint8_t, 10> digit_segments{
    0x3F, 0x06, 0x5B, 0x4F, 0x66, 0x6D, 0x7D, 0x07, 0x7F, 0x6F,
};

}  // namespace

std::uint8_t seven_segment_digit(int digit) {
  if (digit < 0 || digit > 9) throw Error(ErrorKind::range, "digit out of range: " + std::to_string(digit));
  return digit_segments[static_cast<std::size_t>(digit)];
}

SegmentPair render_seven_segment(int value) {
  if (value < 0 || value > 99) throw Error(ErrorKind::range, "display value out of range: " + std::to_string(value));
  return {seven_segment_digit(value / 10), seven_segment_digit(value % 10)};
}

std::size_t utf8_length(std::string_view text) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < text.size();) {
    const auto lead = static_cast<unsigned char>(text[i]);
    std::size_t len = 0;
    if (lead < 0x80) len = 1;
    else if ((lead >> 5) == 0x6) len = 2;
    else if ((lead >> 4) == 0xE) len = 3;
    else if ((lead >> 3) == 0x1E) len = 4;
    else throw Error(ErrorKind::validation, "malformed UTF-8");
    if (i + len > text.size()) throw Error(ErrorKind::validation, "truncated UTF-8 sequence");
    for (std::size_t k = 1; k < len; ++k) {
      if ((static_cast<unsigned char>(text[i + k]) >> 6) != 0x2) throw Error(ErrorKind::validation, "malformed UTF-8");
    }
    i += len;
    ++count;
  }
  return count;
}

void validate_epaper_text(std::string_view text) {
  if (utf8_length(text) > epaper_max_chars) {
    throw Error(ErrorKind::validation, "e-paper text exceeds 64 characters");
  }
}

}  // namespace k4i::devices
