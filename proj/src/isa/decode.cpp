#include "opcodes.hpp"
#include "rvrop/isa.hpp"

namespace rvrop::isa {

using detail::bits;
using detail::Fmt;
using detail::sext;

std::uint32_t Instr::word() const {
  std::uint32_t w = raw[0] | (static_cast<std::uint32_t>(raw[1]) << 8);
  if (width == 4) w |= (static_cast<std::uint32_t>(raw[2]) << 16) | (static_cast<std::uint32_t>(raw[3]) << 24);
  return w;
}

std::optional<unsigned> instr_length(std::uint16_t first_halfword) {
  if (first_halfword == 0) return std::nullopt;
  if ((first_halfword & 0x3) != 0x3) return 2U;
  if ((first_halfword & 0x1C) != 0x1C) return 4U;
  return std::nullopt;
}

namespace {

Operand X(std::uint32_t r) { return Operand::reg(r); }
Operand F(std::uint32_t r) { return Operand::freg(r); }
Operand Imm(std::int64_t v) { return Operand::imm(v); }

std::vector<Operand> operands_for(Fmt fmt, std::uint32_t w) {
  const std::uint32_t rd = bits(w, 11, 7), rs1 = bits(w, 19, 15), rs2 = bits(w, 24, 20), rs3 = bits(w, 31, 27);
  const std::int64_t imm_i = sext(w >> 20, 12);
  const std::int64_t imm_s = sext((bits(w, 31, 25) << 5) | bits(w, 11, 7), 12);
  switch (fmt) {
    case Fmt::R:
      return {X(rd), X(rs1), X(rs2)};
    case Fmt::I:
    case Fmt::Load:
    case Fmt::Jalr:
      return {X(rd), X(rs1), Imm(imm_i)};
    case Fmt::Shift64:
      return {X(rd), X(rs1), Imm(bits(w, 25, 20))};
    case Fmt::Shift32:
      return {X(rd), X(rs1), Imm(bits(w, 24, 20))};
    case Fmt::Store:
      return {X(rs2), X(rs1), Imm(imm_s)};
    case Fmt::Branch: {
      const std::uint32_t v = (bits(w, 31, 31) << 12) | (bits(w, 7, 7) << 11) | (bits(w, 30, 25) << 5) |
                              (bits(w, 11, 8) << 1);
      return {X(rs1), X(rs2), Imm(sext(v, 13))};
    }
    case Fmt::U:
      return {X(rd), Imm(w >> 12)};
    case Fmt::J: {
      const std::uint32_t v = (bits(w, 31, 31) << 20) | (bits(w, 19, 12) << 12) | (bits(w, 20, 20) << 11) |
                              (bits(w, 30, 21) << 1);
      return {X(rd), Imm(sext(v, 21))};
    }
    case Fmt::None:
      return {};
    case Fmt::Fence:
      return {Imm(bits(w, 27, 24)), Imm(bits(w, 23, 20))};
    case Fmt::Csr:
      return {X(rd), Imm(w >> 20), X(rs1)};
    case Fmt::CsrI:
      return {X(rd), Imm(w >> 20), Imm(rs1)};
    case Fmt::Sfence:
      return {X(rs1), X(rs2)};
    case Fmt::AmoLr:
      return {X(rd), X(rs1)};
    case Fmt::Amo:
      return {X(rd), X(rs2), X(rs1)};
    case Fmt::FLoad:
      return {F(rd), X(rs1), Imm(imm_i)};
    case Fmt::FStore:
      return {F(rs2), X(rs1), Imm(imm_s)};
    case Fmt::FR4:
      return {F(rd), F(rs1), F(rs2), F(rs3)};
    case Fmt::FR:
      return {F(rd), F(rs1), F(rs2)};
    case Fmt::FR2:
      return {F(rd), F(rs1)};
    case Fmt::FCmp:
      return {X(rd), F(rs1), F(rs2)};
    case Fmt::FToInt:
      return {X(rd), F(rs1)};
    case Fmt::FFromInt:
      return {F(rd), X(rs1)};
  }
  return {};
}

struct Decoded16 {
  std::string_view mnemonic;
  std::vector<Operand> operands;
};

std::optional<Decoded16> decode16(std::uint16_t h16) {
  const std::uint32_t h = h16;
  const std::uint32_t op = h & 3, funct3 = h >> 13;
  const std::uint32_t rd = bits(h, 11, 7), rs2 = bits(h, 6, 2);
  const std::uint32_t rdp = bits(h, 4, 2) + 8, rs1p = bits(h, 9, 7) + 8;
  const std::int64_t imm6 = sext((bits(h, 12, 12) << 5) | bits(h, 6, 2), 6);
  const std::uint32_t shamt = (bits(h, 12, 12) << 5) | bits(h, 6, 2);
  const std::uint32_t uimm_d = (bits(h, 12, 10) << 3) | (bits(h, 6, 5) << 6);  // c.ld / c.fld / c.sd / c.fsd
  const std::uint32_t uimm_w = (bits(h, 12, 10) << 3) | (bits(h, 6, 6) << 2) | (bits(h, 5, 5) << 6);

  if (h == 0) return std::nullopt;
  switch (op) {
    case 0:
      switch (funct3) {
        case 0: {
          const std::uint32_t nzuimm =
              (bits(h, 12, 11) << 4) | (bits(h, 10, 7) << 6) | (bits(h, 6, 6) << 2) | (bits(h, 5, 5) << 3);
          if (nzuimm == 0) return std::nullopt;
          return Decoded16{"c.addi4spn", {X(rdp), X(regs::sp), Imm(nzuimm)}};
        }
        case 1: return Decoded16{"c.fld", {F(rdp), X(rs1p), Imm(uimm_d)}};
        case 2: return Decoded16{"c.lw", {X(rdp), X(rs1p), Imm(uimm_w)}};
        case 3: return Decoded16{"c.ld", {X(rdp), X(rs1p), Imm(uimm_d)}};
        case 5: return Decoded16{"c.fsd", {F(rdp), X(rs1p), Imm(uimm_d)}};
        case 6: return Decoded16{"c.sw", {X(rdp), X(rs1p), Imm(uimm_w)}};
        case 7: return Decoded16{"c.sd", {X(rdp), X(rs1p), Imm(uimm_d)}};
        default: return std::nullopt;
      }
    case 1:
      switch (funct3) {
        case 0:
          if (rd == 0 && imm6 == 0) return Decoded16{"c.nop", {X(0), X(0), Imm(0)}};
          return Decoded16{"c.addi", {X(rd), X(rd), Imm(imm6)}};
        case 1:
          if (rd == 0) return std::nullopt;
          return Decoded16{"c.addiw", {X(rd), X(rd), Imm(imm6)}};
        case 2:
          return Decoded16{"c.li", {X(rd), X(0), Imm(imm6)}};
        case 3:
          if (rd == regs::sp) {
            const std::uint32_t v = (bits(h, 12, 12) << 9) | (bits(h, 6, 6) << 4) | (bits(h, 5, 5) << 6) |
                                    (bits(h, 4, 3) << 7) | (bits(h, 2, 2) << 5);
            if (v == 0) return std::nullopt;
            return Decoded16{"c.addi16sp", {X(regs::sp), X(regs::sp), Imm(sext(v, 10))}};
          }
          if (imm6 == 0) return std::nullopt;
          return Decoded16{"c.lui", {X(rd), Imm(static_cast<std::uint64_t>(imm6) & 0xFFFFF)}};
        case 4: {
          const std::uint32_t rdp2 = rs1p;
          switch (bits(h, 11, 10)) {
            case 0: return Decoded16{"c.srli", {X(rdp2), X(rdp2), Imm(shamt)}};
            case 1: return Decoded16{"c.srai", {X(rdp2), X(rdp2), Imm(shamt)}};
            case 2: return Decoded16{"c.andi", {X(rdp2), X(rdp2), Imm(imm6)}};
            default: {
              static constexpr std::string_view names[2][4] = {{"c.sub", "c.xor", "c.or", "c.and"},
                                                               {"c.subw", "c.addw", "", ""}};
              const std::string_view m = names[bits(h, 12, 12)][bits(h, 6, 5)];
              if (m.empty()) return std::nullopt;
              return Decoded16{m, {X(rdp2), X(rdp2), X(rdp)}};
            }
          }
        }
        case 5: {
          const std::uint32_t v = (bits(h, 12, 12) << 11) | (bits(h, 11, 11) << 4) | (bits(h, 10, 9) << 8) |
                                  (bits(h, 8, 8) << 10) | (bits(h, 7, 7) << 6) | (bits(h, 6, 6) << 7) |
                                  (bits(h, 5, 3) << 1) | (bits(h, 2, 2) << 5);
          return Decoded16{"c.j", {X(0), Imm(sext(v, 12))}};
        }
        default: {
          const std::uint32_t v = (bits(h, 12, 12) << 8) | (bits(h, 11, 10) << 3) | (bits(h, 6, 5) << 6) |
                                  (bits(h, 4, 3) << 1) | (bits(h, 2, 2) << 5);
          return Decoded16{funct3 == 6 ? "c.beqz" : "c.bnez", {X(rs1p), X(0), Imm(sext(v, 9))}};
        }
      }
    case 2:
      switch (funct3) {
        case 0: return Decoded16{"c.slli", {X(rd), X(rd), Imm(shamt)}};
        case 1:
          return Decoded16{"c.fldsp",
                           {F(rd), X(regs::sp), Imm((bits(h, 12, 12) << 5) | (bits(h, 6, 5) << 3) | (bits(h, 4, 2) << 6))}};
        case 2:
          if (rd == 0) return std::nullopt;
          return Decoded16{"c.lwsp",
                           {X(rd), X(regs::sp), Imm((bits(h, 12, 12) << 5) | (bits(h, 6, 4) << 2) | (bits(h, 3, 2) << 6))}};
        case 3:
          if (rd == 0) return std::nullopt;
          return Decoded16{"c.ldsp",
                           {X(rd), X(regs::sp), Imm((bits(h, 12, 12) << 5) | (bits(h, 6, 5) << 3) | (bits(h, 4, 2) << 6))}};
        case 4:
          if (bits(h, 12, 12) == 0) {
            if (rs2 == 0) {
              if (rd == 0) return std::nullopt;
              return Decoded16{"c.jr", {X(0), X(rd), Imm(0)}};
            }
            return Decoded16{"c.mv", {X(rd), X(0), X(rs2)}};
          }
          if (rs2 == 0) {
            if (rd == 0) return Decoded16{"c.ebreak", {}};
            return Decoded16{"c.jalr", {X(regs::ra), X(rd), Imm(0)}};
          }
          return Decoded16{"c.add", {X(rd), X(rd), X(rs2)}};
        case 5:
          return Decoded16{"c.fsdsp", {F(rs2), X(regs::sp), Imm((bits(h, 12, 10) << 3) | (bits(h, 9, 7) << 6))}};
        case 6:
          return Decoded16{"c.swsp", {X(rs2), X(regs::sp), Imm((bits(h, 12, 9) << 2) | (bits(h, 8, 7) << 6))}};
        default:
          return Decoded16{"c.sdsp", {X(rs2), X(regs::sp), Imm((bits(h, 12, 10) << 3) | (bits(h, 9, 7) << 6))}};
      }
    default:
      return std::nullopt;
  }
}

}  // namespace

std::optional<Instr> decode_halfword(std::uint16_t half, Address address) {
  if (instr_length(half) != 2U) return std::nullopt;
  auto d = decode16(half);
  if (!d) return std::nullopt;
  Instr in;
  in.address = address;
  in.width = 2;
  in.mnemonic = std::string(d->mnemonic);
  in.operands = std::move(d->operands);
  in.flow = classify_flow(in.mnemonic, in.operands);
  in.raw = {static_cast<std::uint8_t>(half & 0xFF), static_cast<std::uint8_t>(half >> 8), 0, 0};
  return in;
}

std::optional<Instr> decode_word(std::uint32_t word, Address address) {
  if (instr_length(static_cast<std::uint16_t>(word & 0xFFFF)) != 4U) return std::nullopt;
  const detail::OpDesc* d = detail::match_word(word);
  if (d == nullptr) return std::nullopt;
  if (d->has_rm) {
    const std::uint32_t rm = bits(word, 14, 12);
    if (rm == 5 || rm == 6) return std::nullopt;
  }
  Instr in;
  in.address = address;
  in.width = 4;
  in.mnemonic = std::string(d->mnemonic);
  in.operands = operands_for(d->fmt, word);
  in.flow = classify_flow(in.mnemonic, in.operands);
  for (unsigned i = 0; i < 4; ++i) in.raw[i] = static_cast<std::uint8_t>(word >> (8 * i));
  return in;
}

std::optional<Instr> decode(std::span<const std::uint8_t> bytes, Address address) {
  if (bytes.size() < 2) return std::nullopt;
  const auto half = static_cast<std::uint16_t>(bytes[0] | (bytes[1] << 8));
  const auto len = instr_length(half);
  if (!len) return std::nullopt;
  if (*len == 2) return decode_halfword(half, address);
  if (bytes.size() < 4) return std::nullopt;
  const std::uint32_t word = half | (static_cast<std::uint32_t>(bytes[2]) << 16) |
                             (static_cast<std::uint32_t>(bytes[3]) << 24);
  return decode_word(word, address);
}

}  // namespace rvrop::isa
