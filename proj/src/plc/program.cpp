#include "k4i/plc/program.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include "k4i/error.hpp"

namespace k4i::plc {

std::string_view mnemonic(Opcode op) {
  switch (op) {
    case Opcode::ld: return "LD";
    case Opcode::ldn: return "LDN";
    case Opcode::and_op: return "AND";
    case Opcode::or_op: return "OR";
    case Opcode::not_op: return "NOT";
    case Opcode::st: return "ST";
    case Opcode::stn: return "STN";
    case Opcode::gt: return "GT";
    case Opcode::lt: return "LT";
    case Opcode::add: return "ADD";
    case Opcode::ton: return "TON";
    case Opcode::ld_ton: return "LD_TON";
  }
  return "?";
}

namespace {

struct Token {
  std::string_view text;
  int column = 0;
};

std::vector<Token> tokenize(std::string_view line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    if (line[i] == '#') break;
    if (line[i] == ' ' || line[i] == '\t' || line[i] == '\r') {
      ++i;
      continue;
    }
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r' && line[i] != '#') ++i;
    out.push_back({line.substr(start, i - start), static_cast<int>(start) + 1});
  }
  return out;
}

struct OpInfo {
  Opcode op;
  std::size_t operands;
};

std::optional<OpInfo> lookup(std::string_view m) {
  static constexpr std::pair<std::string_view, OpInfo> table[] = {
      {"LD", {Opcode::ld, 1}},      {"LDN", {Opcode::ldn, 1}}, {"AND", {Opcode::and_op, 1}},
      {"OR", {Opcode::or_op, 1}},   {"NOT", {Opcode::not_op, 0}}, {"ST", {Opcode::st, 1}},
      {"STN", {Opcode::stn, 1}},    {"GT", {Opcode::gt, 2}},   {"LT", {Opcode::lt, 2}},
      {"ADD", {Opcode::add, 3}},    {"TON", {Opcode::ton, 2}}, {"LD_TON", {Opcode::ld_ton, 1}},
  };
  for (const auto& [name, info] : table) {
    if (name == m) return info;
  }
  return std::nullopt;
}

class Parser {
 public:
  explicit Parser(std::span<const PointSpec> points) : points_(points) {}

  ControlProgram run(std::string_view text) {
    std::vector<std::pair<int, std::vector<Token>>> lines;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      const auto nl = text.find('\n', pos);
      const auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
      ++line_no;
      auto tokens = tokenize(line);
      if (!tokens.empty()) lines.emplace_back(line_no, std::move(tokens));
      if (nl == std::string_view::npos) break;
      pos = nl + 1;
    }

    // Timers may be loaded before their TON line, so collect declarations first.
    for (const auto& [no, tokens] : lines) {
      if (tokens[0].text != "TON" || tokens.size() < 2) continue;
      const std::string id(tokens[1].text);
      if (!valid_point_name(id)) throw ParseError(no, tokens[1].column, "invalid timer id '" + id + "'");
      if (!declared_.insert(id).second) throw ParseError(no, tokens[1].column, "duplicate timer '" + id + "'");
    }

    ControlProgram program;
    for (const auto& [no, tokens] : lines) program.instructions.push_back(instruction(no, tokens));
    return program;
  }

 private:
  Instruction instruction(int line, const std::vector<Token>& tokens) {
    const auto info = lookup(tokens[0].text);
    if (!info) throw ParseError(line, tokens[0].column, "unknown mnemonic '" + std::string(tokens[0].text) + "'");
    if (tokens.size() - 1 != info->operands) {
      throw ParseError(line, tokens[0].column,
                       std::string(tokens[0].text) + " expects " + std::to_string(info->operands) + " operand(s)");
    }
    Instruction ins;
    ins.op = info->op;
    ins.line = line;
    switch (info->op) {
      case Opcode::ld:
      case Opcode::ldn:
      case Opcode::and_op:
      case Opcode::or_op:
        ins.point = readable(line, tokens[1], SignalKind::digital);
        break;
      case Opcode::not_op:
        break;
      case Opcode::st:
      case Opcode::stn:
        ins.point = writable(line, tokens[1], SignalKind::digital);
        break;
      case Opcode::gt:
      case Opcode::lt:
        ins.point = readable(line, tokens[1], SignalKind::analog);
        ins.constant = number(line, tokens[2]);
        break;
      case Opcode::add:
        ins.point = readable(line, tokens[1], SignalKind::analog);
        ins.constant = number(line, tokens[2]);
        ins.dest = writable(line, tokens[3], SignalKind::analog);
        break;
      case Opcode::ton: {
        ins.timer = std::string(tokens[1].text);
        std::int64_t preset = 0;
        const auto t = tokens[2].text;
        const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), preset);
        if (ec != std::errc{} || ptr != t.data() + t.size()) {
          throw ParseError(line, tokens[2].column, "invalid preset '" + std::string(t) + "'");
        }
        if (preset <= 0) throw ParseError(line, tokens[2].column, "timer preset must be positive");
        ins.preset_ms = preset;
        break;
      }
      case Opcode::ld_ton: {
        const std::string id(tokens[1].text);
        if (!declared_.count(id)) throw ParseError(line, tokens[1].column, "undeclared timer '" + id + "'");
        ins.timer = id;
        break;
      }
    }
    return ins;
  }

  const PointSpec& point(int line, const Token& tok) const {
    for (const auto& p : points_) {
      if (p.name == tok.text) return p;
    }
    throw ParseError(line, tok.column, "unknown point '" + std::string(tok.text) + "'");
  }

  std::string readable(int line, const Token& tok, SignalKind kind) const {
    const auto& p = point(line, tok);
    if (p.kind != kind) {
      throw ParseError(line, tok.column,
                       "point '" + p.name + "' is " + (p.kind == SignalKind::digital ? "digital" : "analog"));
    }
    return p.name;
  }

  std::string writable(int line, const Token& tok, SignalKind kind) const {
    const auto& p = point(line, tok);
    if (p.direction != Direction::output) {
      throw ParseError(line, tok.column, "cannot store to input point '" + p.name + "'");
    }
    return readable(line, tok, kind);
  }

  static double number(int line, const Token& tok) {
    double value = 0.0;
    const auto t = tok.text;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc{} || ptr != t.data() + t.size() || !std::isfinite(value)) {
      throw ParseError(line, tok.column, "invalid constant '" + std::string(t) + "'");
    }
    return value;
  }

  std::span<const PointSpec> points_;
  std::set<std::string> declared_;
};

std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

ControlProgram parse_program(std::string_view text, std::span<const PointSpec> points) {
  return Parser(points).run(text);
}

std::string pretty_print(const ControlProgram& program) {
  std::string out;
  for (const auto& ins : program.instructions) {
    out += mnemonic(ins.op);
    switch (ins.op) {
      case Opcode::not_op:
        break;
      case Opcode::gt:
      case Opcode::lt:
        out += ' ' + ins.point + ' ' + format_number(ins.constant);
        break;
      case Opcode::add:
        out += ' ' + ins.point + ' ' + format_number(ins.constant) + ' ' + ins.dest;
        break;
      case Opcode::ton:
        out += ' ' + ins.timer + ' ' + std::to_string(ins.preset_ms);
        break;
      case Opcode::ld_ton:
        out += ' ' + ins.timer;
        break;
      default:
        out += ' ' + ins.point;
        break;
    }
    out += '\n';
  }
  return out;
}

TimerBank make_timers(const ControlProgram& program) {
  TimerBank timers;
  for (const auto& ins : program.instructions) {
    if (ins.op == Opcode::ton) timers.emplace(ins.timer, TimerState{});
  }
  return timers;
}

void execute_in_place(const ControlProgram& program, IoImage& image, TimerBank& timers, std::int64_t dt_ms) {
  bool acc = false;
  for (const auto& ins : program.instructions) {
    switch (ins.op) {
      case Opcode::ld: acc = image.at(ins.point).as_bool(); break;
      case Opcode::ldn: acc = !image.at(ins.point).as_bool(); break;
      case Opcode::and_op: acc = acc && image.at(ins.point).as_bool(); break;
      case Opcode::or_op: acc = acc || image.at(ins.point).as_bool(); break;
      case Opcode::not_op: acc = !acc; break;
      case Opcode::st: image.set(ins.point, SignalValue::digital(acc)); break;
      case Opcode::stn: image.set(ins.point, SignalValue::digital(!acc)); break;
      case Opcode::gt: acc = image.at(ins.point).as_real() > ins.constant; break;
      case Opcode::lt: acc = image.at(ins.point).as_real() < ins.constant; break;
      case Opcode::add: {
        const double sum = image.at(ins.point).as_real() + ins.constant;
        image.set(ins.dest, SignalValue::analog(sum, image.at(ins.dest).unit()));
        break;
      }
      case Opcode::ton: {
        auto& t = timers[ins.timer];
        t.accumulated_ms = acc ? std::min(ins.preset_ms, t.accumulated_ms + dt_ms) : 0;
        t.done = t.accumulated_ms >= ins.preset_ms;
        break;
      }
      case Opcode::ld_ton: {
        const auto it = timers.find(ins.timer);
        acc = it != timers.end() && it->second.done;
        break;
      }
    }
  }
}

ExecutionResult execute_program(const ControlProgram& program, IoImage image, TimerBank timers, std::int64_t dt_ms) {
  execute_in_place(program, image, timers, dt_ms);
  return {std::move(image), std::move(timers)};
}

}  // namespace k4i::plc
