#pragma once

// Internal match/mask tables shared by the decoder, the encoder and the text
// layer.

#include <cstdint>
#include <span>
#include <string_view>

namespace rvrop::isa::detail {

enum class Fmt : std::uint8_t {
  R,          // rd, rs1, rs2
  I,          // rd, rs1, simm12
  Shift64,    // rd, rs1, shamt6
  Shift32,    // rd, rs1, shamt5
  Load,       // rd, rs1, simm12         lw rd,imm(rs1)
  Store,      // rs2, rs1, simm12        sd rs2,imm(rs1)
  Branch,     // rs1, rs2, offset13
  U,          // rd, imm20 (unsigned field value)
  J,          // rd, offset21
  Jalr,       // rd, rs1, simm12         jalr rd,imm(rs1)
  None,       //
  Fence,      // pred, succ
  Csr,        // rd, csr, rs1
  CsrI,       // rd, csr, uimm5
  Sfence,     // rs1, rs2
  AmoLr,      // rd, rs1
  Amo,        // rd, rs2, rs1
  FLoad,      // frd, rs1, simm12
  FStore,     // frs2, rs1, simm12
  FR4,        // frd, frs1, frs2, frs3
  FR,         // frd, frs1, frs2
  FR2,        // frd, frs1
  FCmp,       // rd, frs1, frs2
  FToInt,     // rd, frs1
  FFromInt,   // frd, rs1
};

struct OpDesc {
  std::string_view mnemonic;
  Fmt fmt;
  std::uint32_t match;
  std::uint32_t mask;
  bool encodable;
  bool has_rm;  // FP rounding-mode field in bits 14:12
};

std::span<const OpDesc> op_table();
const OpDesc* find_op(std::string_view mnemonic);
const OpDesc* match_word(std::uint32_t word);

// Compressed forms. `expands_to` is the base mnemonic; `syntax` tells the
// text layer how explicit operands map onto the expanded operand list.
enum class CSyntax : std::uint8_t {
  Same,      // explicit operands == expanded operands (memory forms, addi4spn, lui)
  Dup,       // op rd,x     -> [rd, rd, x]
  ZeroMid,   // op rd,x     -> [rd, x0, x]
  Jump,      // c.j off     -> [x0, off]
  Jr,        // c.jr rs1    -> [x0, rs1, 0]
  Jalr,      // c.jalr rs1  -> [ra, rs1, 0]
  Nop,       // c.nop       -> [x0, x0, 0]
  Bare,      // c.ebreak    -> []
};

struct CDesc {
  std::string_view mnemonic;
  std::string_view expands_to;
  CSyntax syntax;
  std::uint16_t match;
  std::uint16_t mask;
};

std::span<const CDesc> compressed_table();
const CDesc* find_compressed(std::string_view mnemonic);

inline std::int64_t sext(std::uint64_t value, unsigned bits) {
  const std::uint64_t m = 1ULL << (bits - 1);
  value &= (bits == 64) ? ~0ULL : ((1ULL << bits) - 1);
  return static_cast<std::int64_t>((value ^ m) - m);
}

inline std::uint32_t bits(std::uint32_t v, unsigned hi, unsigned lo) {
  return (v >> lo) & ((1U << (hi - lo + 1)) - 1);
}

}  // namespace rvrop::isa::detail
