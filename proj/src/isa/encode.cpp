#include <fmt/format.h>

#include "opcodes.hpp"
#include "rvrop/isa.hpp"

namespace rvrop::isa {

using detail::Fmt;

namespace {

[[noreturn]] void fail(std::string_view mnemonic, std::string_view what) {
  throw EncodeError(fmt::format("{}: {}", mnemonic, what));
}

class Checker {
 public:
  Checker(std::string_view mnemonic, const std::vector<Operand>& ops, std::size_t expected)
      : mnemonic_(mnemonic), ops_(ops) {
    if (ops.size() != expected) fail(mnemonic_, fmt::format("expected {} operands, got {}", expected, ops.size()));
  }

  std::uint32_t x(std::size_t i) const { return reg(i, OperandKind::Reg); }
  std::uint32_t f(std::size_t i) const { return reg(i, OperandKind::FReg); }

  // Compressed register field: x8..x15 only.
  std::uint32_t xp(std::size_t i) const { return prime(i, OperandKind::Reg); }
  std::uint32_t fp(std::size_t i) const { return prime(i, OperandKind::FReg); }

  std::int64_t imm(std::size_t i) const {
    if (ops_[i].kind != OperandKind::Imm) fail(mnemonic_, fmt::format("operand {} must be an immediate", i));
    return ops_[i].value;
  }

  std::int64_t simm(std::size_t i, unsigned bits, unsigned align = 1) const {
    const std::int64_t v = imm(i);
    const std::int64_t lo = -(std::int64_t{1} << (bits - 1)), hi = (std::int64_t{1} << (bits - 1)) - 1;
    if (v < lo || v > hi || v % align != 0)
      fail(mnemonic_, fmt::format("immediate {} out of range [{}, {}] step {}", v, lo, hi, align));
    return v;
  }

  std::uint64_t uimm(std::size_t i, unsigned bits, unsigned align = 1) const {
    const std::int64_t v = imm(i);
    if (v < 0 || v >= (std::int64_t{1} << bits) || v % align != 0)
      fail(mnemonic_, fmt::format("immediate {} out of range [0, {}) step {}", v, std::int64_t{1} << bits, align));
    return static_cast<std::uint64_t>(v);
  }

  void require(bool ok, std::string_view what) const {
    if (!ok) fail(mnemonic_, what);
  }

 private:
  std::uint32_t reg(std::size_t i, OperandKind kind) const {
    const Operand& o = ops_[i];
    if (o.kind != kind || o.value < 0 || o.value > 31)
      fail(mnemonic_, fmt::format("operand {} must be a{} register", i, kind == OperandKind::FReg ? " floating" : "n integer"));
    return static_cast<std::uint32_t>(o.value);
  }

  std::uint32_t prime(std::size_t i, OperandKind kind) const {
    const std::uint32_t r = reg(i, kind);
    if (r < 8 || r > 15) fail(mnemonic_, fmt::format("operand {} must be one of x8..x15", i));
    return r - 8;
  }

  std::string_view mnemonic_;
  const std::vector<Operand>& ops_;
};

std::uint32_t encode32(const detail::OpDesc& d, const std::vector<Operand>& ops) {
  const std::string_view m = d.mnemonic;
  std::uint32_t w = d.match;
  auto rd = [&](std::uint32_t r) { w |= r << 7; };
  auto rs1 = [&](std::uint32_t r) { w |= r << 15; };
  auto rs2 = [&](std::uint32_t r) { w |= r << 20; };
  auto imm_i = [&](std::int64_t v) { w |= (static_cast<std::uint32_t>(v) & 0xFFF) << 20; };
  auto imm_s = [&](std::int64_t v) {
    const auto u = static_cast<std::uint32_t>(v);
    w |= ((u >> 5) & 0x7F) << 25 | (u & 0x1F) << 7;
  };

  switch (d.fmt) {
    case Fmt::R: {
      Checker c(m, ops, 3);
      rd(c.x(0)), rs1(c.x(1)), rs2(c.x(2));
      break;
    }
    case Fmt::I:
    case Fmt::Load:
    case Fmt::Jalr: {
      Checker c(m, ops, 3);
      rd(c.x(0)), rs1(c.x(1)), imm_i(c.simm(2, 12));
      break;
    }
    case Fmt::Shift64: {
      Checker c(m, ops, 3);
      rd(c.x(0)), rs1(c.x(1));
      w |= static_cast<std::uint32_t>(c.uimm(2, 6)) << 20;
      break;
    }
    case Fmt::Shift32: {
      Checker c(m, ops, 3);
      rd(c.x(0)), rs1(c.x(1));
      w |= static_cast<std::uint32_t>(c.uimm(2, 5)) << 20;
      break;
    }
    case Fmt::Store: {
      Checker c(m, ops, 3);
      rs2(c.x(0)), rs1(c.x(1)), imm_s(c.simm(2, 12));
      break;
    }
    case Fmt::Branch: {
      Checker c(m, ops, 3);
      rs1(c.x(0)), rs2(c.x(1));
      const auto u = static_cast<std::uint32_t>(c.simm(2, 13, 2));
      w |= ((u >> 12) & 1) << 31 | ((u >> 5) & 0x3F) << 25 | ((u >> 1) & 0xF) << 8 | ((u >> 11) & 1) << 7;
      break;
    }
    case Fmt::U: {
      Checker c(m, ops, 2);
      rd(c.x(0));
      w |= static_cast<std::uint32_t>(c.uimm(1, 20)) << 12;
      break;
    }
    case Fmt::J: {
      Checker c(m, ops, 2);
      rd(c.x(0));
      const auto u = static_cast<std::uint32_t>(c.simm(1, 21, 2));
      w |= ((u >> 20) & 1) << 31 | ((u >> 1) & 0x3FF) << 21 | ((u >> 11) & 1) << 20 | ((u >> 12) & 0xFF) << 12;
      break;
    }
    case Fmt::None: {
      Checker c(m, ops, 0);
      break;
    }
    case Fmt::Fence: {
      Checker c(m, ops, 2);
      w |= static_cast<std::uint32_t>(c.uimm(0, 4)) << 24 | static_cast<std::uint32_t>(c.uimm(1, 4)) << 20;
      c.require(w != 0x8330000F, "pred/succ rw,rw with fm=0 is written fence.tso");
      break;
    }
    case Fmt::Csr: {
      Checker c(m, ops, 3);
      rd(c.x(0)), rs1(c.x(2));
      w |= static_cast<std::uint32_t>(c.uimm(1, 12)) << 20;
      break;
    }
    case Fmt::CsrI: {
      Checker c(m, ops, 3);
      rd(c.x(0));
      w |= static_cast<std::uint32_t>(c.uimm(1, 12)) << 20 | static_cast<std::uint32_t>(c.uimm(2, 5)) << 15;
      break;
    }
    case Fmt::Sfence: {
      Checker c(m, ops, 2);
      rs1(c.x(0)), rs2(c.x(1));
      break;
    }
    default:
      fail(m, "not encodable (A/F/D are decoded coarsely only)");
  }
  return w;
}

std::uint16_t encode16(const detail::CDesc& d, const std::vector<Operand>& ops) {
  const std::string_view m = d.mnemonic;
  std::uint32_t h = d.match;
  auto place = [&](std::uint64_t v, unsigned from_hi, unsigned from_lo, unsigned to_lo) {
    h |= static_cast<std::uint32_t>((v >> from_lo) & ((1ULL << (from_hi - from_lo + 1)) - 1)) << to_lo;
  };

  if (m == "c.nop") {
    Checker c(m, ops, 3);
    c.require(c.x(0) == 0 && c.x(1) == 0 && c.imm(2) == 0, "expects x0, x0, 0");
  } else if (m == "c.ebreak") {
    Checker c(m, ops, 0);
  } else if (m == "c.addi4spn") {
    Checker c(m, ops, 3);
    const std::uint32_t rd = c.xp(0);
    c.require(c.x(1) == regs::sp, "base must be sp");
    const std::uint64_t v = c.uimm(2, 10, 4);
    c.require(v != 0, "immediate must be non-zero");
    place(rd, 2, 0, 2);
    place(v, 5, 4, 11), place(v, 9, 6, 7), place(v, 2, 2, 6), place(v, 3, 3, 5);
  } else if (m == "c.lw" || m == "c.sw") {
    Checker c(m, ops, 3);
    place(c.xp(0), 2, 0, 2), place(c.xp(1), 2, 0, 7);
    const std::uint64_t v = c.uimm(2, 7, 4);
    place(v, 5, 3, 10), place(v, 2, 2, 6), place(v, 6, 6, 5);
  } else if (m == "c.ld" || m == "c.sd" || m == "c.fld" || m == "c.fsd") {
    Checker c(m, ops, 3);
    place(m == "c.fld" || m == "c.fsd" ? c.fp(0) : c.xp(0), 2, 0, 2), place(c.xp(1), 2, 0, 7);
    const std::uint64_t v = c.uimm(2, 8, 8);
    place(v, 5, 3, 10), place(v, 7, 6, 5);
  } else if (m == "c.addi" || m == "c.addiw") {
    Checker c(m, ops, 3);
    const std::uint32_t rd = c.x(0);
    c.require(c.x(1) == rd, "source must equal destination");
    const std::int64_t v = c.simm(2, 6);
    if (m == "c.addiw") c.require(rd != 0, "destination must not be x0");
    else c.require(rd != 0 || v != 0, "c.addi x0,x0,0 is written c.nop");
    place(rd, 4, 0, 7), place(static_cast<std::uint64_t>(v), 5, 5, 12), place(static_cast<std::uint64_t>(v), 4, 0, 2);
  } else if (m == "c.li") {
    Checker c(m, ops, 3);
    const std::uint32_t rd = c.x(0);
    c.require(c.x(1) == 0, "source must be x0");
    const std::int64_t v = c.simm(2, 6);
    place(rd, 4, 0, 7), place(static_cast<std::uint64_t>(v), 5, 5, 12), place(static_cast<std::uint64_t>(v), 4, 0, 2);
  } else if (m == "c.addi16sp") {
    Checker c(m, ops, 3);
    c.require(c.x(0) == regs::sp && c.x(1) == regs::sp, "operands must be sp, sp");
    const std::int64_t v = c.simm(2, 10, 16);
    c.require(v != 0, "immediate must be non-zero");
    const auto u = static_cast<std::uint64_t>(v);
    place(u, 9, 9, 12), place(u, 4, 4, 6), place(u, 6, 6, 5), place(u, 8, 7, 3), place(u, 5, 5, 2);
  } else if (m == "c.lui") {
    Checker c(m, ops, 2);
    const std::uint32_t rd = c.x(0);
    c.require(rd != regs::sp, "destination sp is c.addi16sp");
    const std::uint64_t field = c.uimm(1, 20);
    const std::int64_t v = detail::sext(field, 20);
    c.require(v != 0 && v >= -32 && v <= 31, "immediate must be a non-zero sign-extended 6-bit value");
    place(rd, 4, 0, 7), place(field, 5, 5, 12), place(field, 4, 0, 2);
  } else if (m == "c.srli" || m == "c.srai" || m == "c.andi") {
    Checker c(m, ops, 3);
    const std::uint32_t rd = c.xp(0);
    c.require(c.xp(1) == rd, "source must equal destination");
    const std::uint64_t v = m == "c.andi" ? static_cast<std::uint64_t>(c.simm(2, 6)) : c.uimm(2, 6);
    place(rd, 2, 0, 7), place(v, 5, 5, 12), place(v, 4, 0, 2);
  } else if (d.syntax == detail::CSyntax::Dup && d.mask == 0xFC63) {  // c.sub .. c.addw
    Checker c(m, ops, 3);
    const std::uint32_t rd = c.xp(0);
    c.require(c.xp(1) == rd, "source must equal destination");
    place(rd, 2, 0, 7), place(c.xp(2), 2, 0, 2);
  } else if (m == "c.j") {
    Checker c(m, ops, 2);
    c.require(c.x(0) == 0, "link register must be x0");
    const auto u = static_cast<std::uint64_t>(c.simm(1, 12, 2));
    place(u, 11, 11, 12), place(u, 4, 4, 11), place(u, 9, 8, 9), place(u, 10, 10, 8), place(u, 6, 6, 7),
        place(u, 7, 7, 6), place(u, 3, 1, 3), place(u, 5, 5, 2);
  } else if (m == "c.beqz" || m == "c.bnez") {
    Checker c(m, ops, 3);
    const std::uint32_t rs1 = c.xp(0);
    c.require(c.x(1) == 0, "second source must be x0");
    const auto u = static_cast<std::uint64_t>(c.simm(2, 9, 2));
    place(rs1, 2, 0, 7);
    place(u, 8, 8, 12), place(u, 4, 3, 10), place(u, 7, 6, 5), place(u, 2, 1, 3), place(u, 5, 5, 2);
  } else if (m == "c.slli") {
    Checker c(m, ops, 3);
    const std::uint32_t rd = c.x(0);
    c.require(c.x(1) == rd, "source must equal destination");
    const std::uint64_t v = c.uimm(2, 6);
    place(rd, 4, 0, 7), place(v, 5, 5, 12), place(v, 4, 0, 2);
  } else if (m == "c.lwsp") {
    Checker c(m, ops, 3);
    const std::uint32_t rd = c.x(0);
    c.require(rd != 0, "destination must not be x0");
    c.require(c.x(1) == regs::sp, "base must be sp");
    const std::uint64_t v = c.uimm(2, 8, 4);
    place(rd, 4, 0, 7), place(v, 5, 5, 12), place(v, 4, 2, 4), place(v, 7, 6, 2);
  } else if (m == "c.ldsp" || m == "c.fldsp") {
    Checker c(m, ops, 3);
    const std::uint32_t rd = m == "c.fldsp" ? c.f(0) : c.x(0);
    if (m == "c.ldsp") c.require(rd != 0, "destination must not be x0");
    c.require(c.x(1) == regs::sp, "base must be sp");
    const std::uint64_t v = c.uimm(2, 9, 8);
    place(rd, 4, 0, 7), place(v, 5, 5, 12), place(v, 4, 3, 5), place(v, 8, 6, 2);
  } else if (m == "c.jr" || m == "c.jalr") {
    Checker c(m, ops, 3);
    c.require(c.x(0) == (m == "c.jr" ? 0U : regs::ra), m == "c.jr" ? "link must be x0" : "link must be ra");
    const std::uint32_t rs1 = c.x(1);
    c.require(rs1 != 0, "target register must not be x0");
    c.require(c.imm(2) == 0, "offset must be 0");
    place(rs1, 4, 0, 7);
  } else if (m == "c.mv") {
    Checker c(m, ops, 3);
    c.require(c.x(1) == 0, "first source must be x0");
    const std::uint32_t rs2 = c.x(2);
    c.require(rs2 != 0, "source must not be x0");
    place(c.x(0), 4, 0, 7), place(rs2, 4, 0, 2);
  } else if (m == "c.add") {
    Checker c(m, ops, 3);
    const std::uint32_t rd = c.x(0);
    c.require(c.x(1) == rd, "source must equal destination");
    const std::uint32_t rs2 = c.x(2);
    c.require(rs2 != 0, "source must not be x0");
    place(rd, 4, 0, 7), place(rs2, 4, 0, 2);
  } else if (m == "c.swsp") {
    Checker c(m, ops, 3);
    c.require(c.x(1) == regs::sp, "base must be sp");
    const std::uint64_t v = c.uimm(2, 8, 4);
    place(c.x(0), 4, 0, 2), place(v, 5, 2, 9), place(v, 7, 6, 7);
  } else if (m == "c.sdsp" || m == "c.fsdsp") {
    Checker c(m, ops, 3);
    c.require(c.x(1) == regs::sp, "base must be sp");
    const std::uint64_t v = c.uimm(2, 9, 8);
    place(m == "c.fsdsp" ? c.f(0) : c.x(0), 4, 0, 2), place(v, 5, 3, 10), place(v, 8, 6, 7);
  } else {
    fail(m, "unsupported compressed mnemonic");
  }
  return static_cast<std::uint16_t>(h);
}

}  // namespace

std::vector<std::uint8_t> encode(const InstrSpec& spec) {
  if (const auto* c = detail::find_compressed(spec.mnemonic)) {
    const std::uint16_t h = encode16(*c, spec.operands);
    return {static_cast<std::uint8_t>(h & 0xFF), static_cast<std::uint8_t>(h >> 8)};
  }
  const auto* d = detail::find_op(spec.mnemonic);
  if (d == nullptr) throw EncodeError(fmt::format("unsupported mnemonic '{}'", spec.mnemonic));
  if (!d->encodable) fail(d->mnemonic, "not encodable (A/F/D are decoded coarsely only)");
  const std::uint32_t w = encode32(*d, spec.operands);
  return {static_cast<std::uint8_t>(w), static_cast<std::uint8_t>(w >> 8), static_cast<std::uint8_t>(w >> 16),
          static_cast<std::uint8_t>(w >> 24)};
}

std::vector<std::uint8_t> encode(std::string_view mnemonic, std::vector<Operand> operands) {
  return encode(InstrSpec{std::string(mnemonic), std::move(operands)});
}

std::vector<std::string_view> encodable_mnemonics() {
  std::vector<std::string_view> out;
  for (const auto& d : detail::op_table())
    if (d.encodable) out.push_back(d.mnemonic);
  for (const auto& c : detail::compressed_table()) out.push_back(c.mnemonic);
  return out;
}

std::optional<EncodingPattern> encoding_pattern(std::string_view mnemonic) {
  if (const auto* c = detail::find_compressed(mnemonic)) return EncodingPattern{2, c->match, c->mask};
  if (const auto* d = detail::find_op(mnemonic)) return EncodingPattern{4, d->match, d->mask};
  return std::nullopt;
}

}  // namespace rvrop::isa
