#include "k4i/digest.hpp"

#include <cstdio>

namespace k4i {

void Fnv1a::update(std::span<const std::uint8_t> bytes) noexcept {
  for (auto b : bytes) {
    hash_ ^= b;
    hash_ *= 0x100000001b3ULL;
  }
}

void Fnv1a::update(std::string_view text) noexcept {
  update(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

void Fnv1a::update_u64(std::uint64_t value) noexcept {
  std::uint8_t raw[8];
  for (int i = 0; i < 8; ++i) raw[i] = static_cast<std::uint8_t>(value >> (8 * i));
  update(raw);
}

std::string Fnv1a::hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash_));
  return buf;
}

std::string digest_hex(std::string_view text) {
  Fnv1a h;
  h.update(text);
  return h.hex();
}

}  // namespace k4i
