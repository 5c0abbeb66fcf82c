#pragma once

// RV64GC instruction decoding, encoding and control-flow classification.
//
// Decoding is precise for RV64I, M and the full C extension. A, F and D are
// validated at opcode/funct granularity and surfaced with generic operand
// lists, which is all superset disassembly needs.
//
// A compressed instruction keeps its own mnemonic ("c.lw") but carries the
// operand list of its 32-bit expansion, so c.lw s1,0(s0) has operands
// [x9, x8, 0] exactly like lw s1,0(s0).

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rvrop::isa {

using Address = std::uint64_t;

enum class OperandKind : std::uint8_t { Reg, FReg, Imm };

struct Operand {
  OperandKind kind = OperandKind::Imm;
  std::int64_t value = 0;

  static constexpr Operand reg(unsigned r) { return {OperandKind::Reg, static_cast<std::int64_t>(r)}; }
  static constexpr Operand freg(unsigned r) { return {OperandKind::FReg, static_cast<std::int64_t>(r)}; }
  static constexpr Operand imm(std::int64_t v) { return {OperandKind::Imm, v}; }

  friend bool operator==(const Operand&, const Operand&) = default;
};

enum class Flow : std::uint8_t {
  Fallthrough,
  DirectJump,
  CondBranch,
  Call,
  IndirectJump,
  IndirectCall,
  Syscall,
  Halting,
};

/// Control-flow behaviour of an instruction. `offset` is a signed byte
/// displacement from the instruction's own address and is only meaningful for
/// DirectJump, CondBranch and Call.
struct FlowClass {
  Flow kind = Flow::Fallthrough;
  std::int64_t offset = 0;

  friend bool operator==(const FlowClass&, const FlowClass&) = default;
};

struct Instr {
  Address address = 0;
  unsigned width = 0;  // 2 or 4
  std::string mnemonic;
  std::vector<Operand> operands;
  FlowClass flow;
  std::array<std::uint8_t, 4> raw{};

  [[nodiscard]] std::span<const std::uint8_t> bytes() const { return {raw.data(), width}; }
  [[nodiscard]] bool compressed() const { return width == 2; }
  /// Little-endian value of the instruction bytes (upper half zero when compressed).
  [[nodiscard]] std::uint32_t word() const;
};

/// Mnemonic plus operands, the input of the encoder.
struct InstrSpec {
  std::string mnemonic;
  std::vector<Operand> operands;

  friend bool operator==(const InstrSpec&, const InstrSpec&) = default;
};

enum class OverlapClass : std::uint8_t { I1Candidate, I2, None };

class EncodeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ParseError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Length in bytes implied by the first halfword: 2, 4, or nullopt for the
/// all-zero halfword and the >=48-bit prefixes (bits[4:0] == 0b11111).
[[nodiscard]] std::optional<unsigned> instr_length(std::uint16_t first_halfword);

/// Decodes one instruction from the start of `bytes` (little-endian).
/// Returns nullopt for reserved encodings or when too few bytes remain.
[[nodiscard]] std::optional<Instr> decode(std::span<const std::uint8_t> bytes, Address address = 0);
[[nodiscard]] std::optional<Instr> decode_halfword(std::uint16_t half, Address address = 0);
[[nodiscard]] std::optional<Instr> decode_word(std::uint32_t word, Address address = 0);

/// Encodes a spec; throws EncodeError on unknown mnemonics, wrong operand
/// kinds and out-of-range fields.
[[nodiscard]] std::vector<std::uint8_t> encode(const InstrSpec& spec);
[[nodiscard]] std::vector<std::uint8_t> encode(std::string_view mnemonic, std::vector<Operand> operands);

/// Mnemonics accepted by encode(), in table order.
[[nodiscard]] std::vector<std::string_view> encodable_mnemonics();

/// Fixed bits of a mnemonic's encoding (width, match, mask); used to draw
/// random members of one instruction family.
struct EncodingPattern {
  unsigned width = 0;
  std::uint32_t match = 0;
  std::uint32_t mask = 0;
};
[[nodiscard]] std::optional<EncodingPattern> encoding_pattern(std::string_view mnemonic);

[[nodiscard]] FlowClass classify_flow(std::string_view mnemonic, std::span<const Operand> operands);

/// Overlap class of a 4-byte instruction; throws std::invalid_argument for a
/// compressed one.
[[nodiscard]] OverlapClass overlap_class(const Instr& instr);

/// Statically known next-pc values.
[[nodiscard]] std::vector<Address> successors(const Instr& instr);

/// True for register-indirect jumps through ra with no link (jalr x0,imm(ra)
/// and c.jr ra).
[[nodiscard]] bool is_return(const Instr& instr);

/// Base-ISA mnemonic a compressed mnemonic expands to; identity otherwise.
[[nodiscard]] std::string_view expanded_mnemonic(std::string_view mnemonic);

// Registers.
[[nodiscard]] std::string_view abi_name(unsigned reg);
[[nodiscard]] std::string_view fp_abi_name(unsigned reg);
/// Accepts x0..x31, f0..f31, ABI names and fp.
[[nodiscard]] std::optional<Operand> parse_register(std::string_view name);

namespace regs {
inline constexpr unsigned zero = 0, ra = 1, sp = 2, gp = 3, tp = 4;
inline constexpr unsigned t0 = 5, t1 = 6, t2 = 7, s0 = 8, s1 = 9;
inline constexpr unsigned a0 = 10, a1 = 11, a2 = 12, a3 = 13, a4 = 14, a5 = 15, a6 = 16, a7 = 17;
inline constexpr unsigned s2 = 18, s3 = 19, s4 = 20, s5 = 21, s6 = 22, s7 = 23, s8 = 24, s9 = 25,
                          s10 = 26, s11 = 27;
inline constexpr unsigned t3 = 28, t4 = 29, t5 = 30, t6 = 31;
}  // namespace regs

// Text. format() renders objdump-style with ABI names; compressed
// instructions print as their expansion ("lw s1,0(s0)"). Branch and jump
// targets print relative to the instruction (".+8").
[[nodiscard]] std::string format(const Instr& instr);
[[nodiscard]] std::string format_operand(const Operand& op);

/// Parses one line of assembly in the syntax format() produces, plus the
/// conventional compressed syntax ("c.ldsp ra,8(sp)", "c.j 8").
[[nodiscard]] InstrSpec parse_asm(std::string_view line);
[[nodiscard]] std::vector<std::uint8_t> assemble(std::string_view line);
/// Assembles newline- or ';'-separated lines back to back.
[[nodiscard]] std::vector<std::uint8_t> assemble_program(std::string_view text);

}  // namespace rvrop::isa
