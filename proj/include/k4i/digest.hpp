#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace k4i {

// 64-bit FNV-1a. Stable across platforms, which is all the state digests need.
class Fnv1a {
 public:
  void update(std::span<const std::uint8_t> bytes) noexcept;
  void update(std::string_view text) noexcept;
  void update_u64(std::uint64_t value) noexcept;

  [[nodiscard]] std::uint64_t value() const noexcept { return hash_; }
  [[nodiscard]] std::string hex() const;

 private:
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

std::string digest_hex(std::string_view text);

}  // namespace k4i
