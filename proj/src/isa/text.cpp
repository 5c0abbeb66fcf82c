#include <algorithm>
#include <cctype>
#include <charconv>

#include <fmt/format.h>

#include "opcodes.hpp"
#include "rvrop/isa.hpp"

namespace rvrop::isa {

using detail::Fmt;

namespace {

std::string reg_name(const Operand& op) {
  return std::string(op.kind == OperandKind::FReg ? fp_abi_name(static_cast<unsigned>(op.value))
                                                  : abi_name(static_cast<unsigned>(op.value)));
}

std::string rel(std::int64_t off) { return off < 0 ? fmt::format(".-{}", -off) : fmt::format(".+{}", off); }

std::string fence_set(std::int64_t v) {
  std::string s;
  if (v & 8) s += 'i';
  if (v & 4) s += 'o';
  if (v & 2) s += 'r';
  if (v & 1) s += 'w';
  return s.empty() ? "0" : s;
}

std::string join(std::string_view m, const std::vector<std::string>& parts) {
  std::string out(m);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    out += i == 0 ? " " : ",";
    out += parts[i];
  }
  return out;
}

bool is_branch(std::string_view m) {
  return m == "beq" || m == "bne" || m == "blt" || m == "bge" || m == "bltu" || m == "bgeu";
}

}  // namespace

std::string format_operand(const Operand& op) {
  if (op.kind == OperandKind::Imm) return std::to_string(op.value);
  return reg_name(op);
}

std::string format(const Instr& instr) {
  const std::string_view m = expanded_mnemonic(instr.mnemonic);
  const auto& o = instr.operands;
  auto r = [&](std::size_t i) { return reg_name(o[i]); };
  auto v = [&](std::size_t i) { return o[i].value; };

  if (m == "addi") {
    if (v(0) == 0 && v(1) == 0 && v(2) == 0) return "nop";
    if (v(1) == 0) return fmt::format("li {},{}", r(0), v(2));
    if (v(2) == 0) return fmt::format("mv {},{}", r(0), r(1));
  }
  if (m == "add" && v(1) == 0) return fmt::format("mv {},{}", r(0), r(2));
  if (m == "jalr" && v(2) == 0) {
    if (v(0) == 0) return v(1) == regs::ra ? "ret" : fmt::format("jr {}", r(1));
    if (v(0) == regs::ra) return fmt::format("jalr {}", r(1));
  }
  if (m == "jal") {
    if (v(0) == 0) return fmt::format("j {}", rel(v(1)));
    return fmt::format("jal {},{}", r(0), rel(v(1)));
  }
  if (is_branch(m)) {
    if ((m == "beq" || m == "bne") && v(1) == 0) return fmt::format("{}z {},{}", m, r(0), rel(v(2)));
    return fmt::format("{} {},{},{}", m, r(0), r(1), rel(v(2)));
  }

  const detail::OpDesc* d = detail::find_op(m);
  const Fmt f = d ? d->fmt : Fmt::R;
  switch (f) {
    case Fmt::Load:
    case Fmt::Store:
    case Fmt::Jalr:
    case Fmt::FLoad:
    case Fmt::FStore:
      return fmt::format("{} {},{}({})", m, r(0), v(2), r(1));
    case Fmt::U:
      return fmt::format("{} {},0x{:x}", m, r(0), v(1));
    case Fmt::Fence:
      return fmt::format("{} {},{}", m, fence_set(v(0)), fence_set(v(1)));
    case Fmt::Csr:
      return fmt::format("{} {},0x{:x},{}", m, r(0), v(1), r(2));
    case Fmt::CsrI:
      return fmt::format("{} {},0x{:x},{}", m, r(0), v(1), v(2));
    case Fmt::AmoLr:
      return fmt::format("{} {},({})", m, r(0), r(1));
    case Fmt::Amo:
      return fmt::format("{} {},{},({})", m, r(0), r(1), r(2));
    default: {
      std::vector<std::string> parts;
      for (const auto& op : o) parts.push_back(format_operand(op));
      return join(m, parts);
    }
  }
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::optional<std::int64_t> parse_int(std::string_view s) {
  s = trim(s);
  bool neg = false;
  if (!s.empty() && (s[0] == '-' || s[0] == '+')) {
    neg = s[0] == '-';
    s.remove_prefix(1);
  }
  int base = 10;
  if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
    base = 16;
    s.remove_prefix(2);
  }
  if (s.empty()) return std::nullopt;
  std::uint64_t u = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), u, base);
  if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
  return neg ? -static_cast<std::int64_t>(u) : static_cast<std::int64_t>(u);
}

std::optional<std::int64_t> parse_fence_set(std::string_view s) {
  if (s.empty() || s.find_first_not_of("iorw") != std::string_view::npos) return std::nullopt;
  std::int64_t v = 0;
  for (char c : s) v |= c == 'i' ? 8 : c == 'o' ? 4 : c == 'r' ? 2 : 1;
  return v;
}

Operand parse_value(std::string_view tok, std::string_view line) {
  tok = trim(tok);
  if (auto r = parse_register(tok)) return *r;
  if (tok.size() > 1 && tok[0] == '.') tok.remove_prefix(1);  // .+8 / .-12
  if (auto n = parse_int(tok)) return Operand::imm(*n);
  if (auto f = parse_fence_set(tok)) return Operand::imm(*f);
  throw ParseError(fmt::format("cannot parse operand '{}' in '{}'", tok, line));
}

// Splits on commas and unfolds "imm(reg)" into reg, imm.
std::vector<Operand> parse_operands(std::string_view text, std::string_view line) {
  std::vector<Operand> out;
  text = trim(text);
  if (text.empty()) return out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = text.find(',', pos);
    const std::string_view tok = trim(text.substr(pos, comma == std::string_view::npos ? text.npos : comma - pos));
    if (tok.empty()) throw ParseError(fmt::format("empty operand in '{}'", line));
    const std::size_t open = tok.find('(');
    if (open != std::string_view::npos) {
      if (tok.back() != ')') throw ParseError(fmt::format("unbalanced parentheses in '{}'", line));
      const auto base = parse_register(trim(tok.substr(open + 1, tok.size() - open - 2)));
      if (!base) throw ParseError(fmt::format("bad base register in '{}'", line));
      out.push_back(*base);
      const std::string_view disp = trim(tok.substr(0, open));
      if (!disp.empty()) out.push_back(parse_value(disp, line));
      else out.push_back(Operand::imm(0));
    } else {
      out.push_back(parse_value(tok, line));
    }
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::size_t expanded_arity(std::string_view base) {
  const detail::OpDesc* d = detail::find_op(base);
  if (d == nullptr) return 0;
  switch (d->fmt) {
    case Fmt::None: return 0;
    case Fmt::U:
    case Fmt::J:
    case Fmt::Fence:
    case Fmt::Sfence:
    case Fmt::AmoLr:
    case Fmt::FR2:
    case Fmt::FToInt:
    case Fmt::FFromInt:
      return 2;
    case Fmt::FR4: return 4;
    default: return 3;
  }
}

std::vector<Operand> expand_compressed(const detail::CDesc& c, std::vector<Operand> ops, std::string_view line) {
  using detail::CSyntax;
  const Operand x0 = Operand::reg(0);
  if (ops.size() == expanded_arity(c.expands_to) && c.syntax != CSyntax::Bare) return ops;
  switch (c.syntax) {
    case CSyntax::Same:
      break;
    case CSyntax::Dup:
      if (ops.size() == 2) return {ops[0], ops[0], ops[1]};
      break;
    case CSyntax::ZeroMid:
      if (ops.size() == 2) return {ops[0], x0, ops[1]};
      break;
    case CSyntax::Jump:
      if (ops.size() == 1) return {x0, ops[0]};
      break;
    case CSyntax::Jr:
      if (ops.size() == 1) return {x0, ops[0], Operand::imm(0)};
      break;
    case CSyntax::Jalr:
      if (ops.size() == 1) return {Operand::reg(regs::ra), ops[0], Operand::imm(0)};
      break;
    case CSyntax::Nop:
      if (ops.empty()) return {x0, x0, Operand::imm(0)};
      break;
    case CSyntax::Bare:
      if (ops.empty()) return ops;
      break;
  }
  throw ParseError(fmt::format("wrong operand count for {} in '{}'", c.mnemonic, line));
}

}  // namespace

InstrSpec parse_asm(std::string_view line) {
  std::string lowered(trim(line.substr(0, line.find('#'))));
  std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  const std::string_view s = lowered;
  if (s.empty()) throw ParseError("empty instruction");
  const std::size_t sp = s.find_first_of(" \t");
  const std::string m(s.substr(0, sp));
  std::vector<Operand> ops = parse_operands(sp == std::string_view::npos ? std::string_view{} : s.substr(sp), line);
  const Operand x0 = Operand::reg(0), ra = Operand::reg(regs::ra), zero = Operand::imm(0);
  auto want = [&](std::size_t n) {
    if (ops.size() != n) throw ParseError(fmt::format("{} takes {} operands: '{}'", m, n, line));
  };

  if (const auto* c = detail::find_compressed(m)) return {m, expand_compressed(*c, std::move(ops), line)};

  if (m == "nop") return want(0), InstrSpec{"addi", {x0, x0, zero}};
  if (m == "li") return want(2), InstrSpec{"addi", {ops[0], x0, ops[1]}};
  if (m == "mv") return want(2), InstrSpec{"addi", {ops[0], ops[1], zero}};
  if (m == "ret") return want(0), InstrSpec{"jalr", {x0, ra, zero}};
  if (m == "jr") return want(1), InstrSpec{"jalr", {x0, ops[0], zero}};
  if (m == "j") return want(1), InstrSpec{"jal", {x0, ops[0]}};
  if (m == "beqz" || m == "bnez") return want(2), InstrSpec{m.substr(0, 3), {ops[0], x0, ops[1]}};
  if (m == "jalr" && ops.size() == 1) return InstrSpec{"jalr", {ra, ops[0], zero}};
  if (m == "jal" && ops.size() == 1) return InstrSpec{"jal", {ra, ops[0]}};
  if (m == "fence" && ops.empty()) return InstrSpec{"fence", {Operand::imm(15), Operand::imm(15)}};

  if (detail::find_op(m) == nullptr) throw ParseError(fmt::format("unknown mnemonic '{}'", m));
  return {m, std::move(ops)};
}

std::vector<std::uint8_t> assemble(std::string_view line) { return encode(parse_asm(line)); }

std::vector<std::uint8_t> assemble_program(std::string_view text) {
  std::vector<std::uint8_t> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find_first_of("\n;", pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    line = trim(line.substr(0, line.find('#')));
    if (!line.empty()) {
      const auto bytes = assemble(line);
      out.insert(out.end(), bytes.begin(), bytes.end());
    }
    pos = end + 1;
  }
  return out;
}

}  // namespace rvrop::isa
