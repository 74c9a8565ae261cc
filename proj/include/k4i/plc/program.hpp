#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "k4i/plc/point.hpp"

namespace k4i::plc {

enum class Opcode { ld, ldn, and_op, or_op, not_op, st, stn, gt, lt, add, ton, ld_ton };

std::string_view mnemonic(Opcode op);

/// One instruction-list line. Unused operands stay empty/zero.
struct Instruction {
  Opcode op = Opcode::ld;
  std::string point;   // LD LDN AND OR ST STN GT LT ADD(source)
  double constant = 0.0;  // GT LT ADD
  std::string dest;    // ADD
  std::string timer;   // TON LD_TON
  std::int64_t preset_ms = 0;  // TON
  int line = 0;  // source line, not part of equality

  friend bool operator==(const Instruction& a, const Instruction& b) {
    return a.op == b.op && a.point == b.point && a.constant == b.constant && a.dest == b.dest &&
           a.timer == b.timer && a.preset_ms == b.preset_ms;
  }
};

struct ControlProgram {
  std::vector<Instruction> instructions;

  [[nodiscard]] bool empty() const noexcept { return instructions.empty(); }
  friend bool operator==(const ControlProgram&, const ControlProgram&) = default;
};

/// Parses and validates against the PLC's points. One instruction per line,
/// '#' starts a comment. Throws ParseError with the offending line and column.
ControlProgram parse_program(std::string_view text, std::span<const PointSpec> points);

/// Canonical source; parse_program(pretty_print(p)) == p.
std::string pretty_print(const ControlProgram& program);

struct TimerState {
  std::int64_t accumulated_ms = 0;
  bool done = false;

  friend bool operator==(const TimerState&, const TimerState&) = default;
};

using TimerBank = std::map<std::string, TimerState, std::less<>>;

/// Timer bank with every TON of the program at rest.
TimerBank make_timers(const ControlProgram& program);

struct ExecutionResult {
  IoImage image;
  TimerBank timers;
};

/// One pass over the program. Outputs the program does not store to keep their value.
ExecutionResult execute_program(const ControlProgram& program, IoImage image, TimerBank timers, std::int64_t dt_ms);

void execute_in_place(const ControlProgram& program, IoImage& image, TimerBank& timers, std::int64_t dt_ms);

}  // namespace k4i::plc
