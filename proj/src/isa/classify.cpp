#include <array>
#include <charconv>

#include "opcodes.hpp"
#include "rvrop/isa.hpp"

namespace rvrop::isa {

namespace {

constexpr std::array<std::string_view, 32> kAbi{"zero", "ra", "sp", "gp", "tp",  "t0",  "t1", "t2",
                                                "s0",   "s1", "a0", "a1", "a2",  "a3",  "a4", "a5",
                                                "a6",   "a7", "s2", "s3", "s4",  "s5",  "s6", "s7",
                                                "s8",   "s9", "s10", "s11", "t3", "t4", "t5", "t6"};
constexpr std::array<std::string_view, 32> kFpAbi{"ft0", "ft1", "ft2",  "ft3",  "ft4", "ft5", "ft6",  "ft7",
                                                  "fs0", "fs1", "fa0",  "fa1",  "fa2", "fa3", "fa4",  "fa5",
                                                  "fa6", "fa7", "fs2",  "fs3",  "fs4", "fs5", "fs6",  "fs7",
                                                  "fs8", "fs9", "fs10", "fs11", "ft8", "ft9", "ft10", "ft11"};

std::int64_t reg_at(std::span<const Operand> ops, std::size_t i) {
  return i < ops.size() ? ops[i].value : -1;
}

std::int64_t imm_at(std::span<const Operand> ops, std::size_t i) {
  return i < ops.size() ? ops[i].value : 0;
}

}  // namespace

std::string_view expanded_mnemonic(std::string_view mnemonic) {
  if (const auto* c = detail::find_compressed(mnemonic)) return c->expands_to;
  return mnemonic;
}

FlowClass classify_flow(std::string_view mnemonic, std::span<const Operand> operands) {
  const std::string_view m = expanded_mnemonic(mnemonic);
  if (m == "jal") {
    const std::int64_t off = imm_at(operands, 1);
    return reg_at(operands, 0) == 0 ? FlowClass{Flow::DirectJump, off} : FlowClass{Flow::Call, off};
  }
  if (m == "jalr") return reg_at(operands, 0) == 0 ? FlowClass{Flow::IndirectJump} : FlowClass{Flow::IndirectCall};
  if (m == "beq" || m == "bne" || m == "blt" || m == "bge" || m == "bltu" || m == "bgeu")
    return {Flow::CondBranch, imm_at(operands, 2)};
  if (m == "ecall") return {Flow::Syscall};
  if (m == "ebreak" || m == "mret" || m == "sret") return {Flow::Halting};
  return {Flow::Fallthrough};
}

OverlapClass overlap_class(const Instr& instr) {
  if (instr.width != 4) throw std::invalid_argument("overlap_class: instruction is not 4 bytes wide");
  const auto upper = static_cast<std::uint16_t>(instr.raw[2] | (instr.raw[3] << 8));
  const auto len = instr_length(upper);
  if (len == 4U) return OverlapClass::I1Candidate;
  if (len == 2U && decode_halfword(upper)) return OverlapClass::I2;
  return OverlapClass::None;
}

std::vector<Address> successors(const Instr& instr) {
  const Address next = instr.address + instr.width;
  const Address target = instr.address + static_cast<Address>(instr.flow.offset);
  switch (instr.flow.kind) {
    case Flow::Fallthrough:
    case Flow::Syscall:
      return {next};
    case Flow::DirectJump:
      return {target};
    case Flow::CondBranch:
    case Flow::Call:
      if (target == next) return {next};
      return {next, target};
    case Flow::IndirectJump:
    case Flow::IndirectCall:
    case Flow::Halting:
      return {};
  }
  return {};
}

bool is_return(const Instr& instr) {
  return instr.flow.kind == Flow::IndirectJump && instr.operands.size() >= 2 &&
         instr.operands[1].value == regs::ra;
}

std::string_view abi_name(unsigned reg) { return reg < 32 ? kAbi[reg] : std::string_view{"?"}; }
std::string_view fp_abi_name(unsigned reg) { return reg < 32 ? kFpAbi[reg] : std::string_view{"?"}; }

std::optional<Operand> parse_register(std::string_view name) {
  for (unsigned i = 0; i < 32; ++i) {
    if (kAbi[i] == name) return Operand::reg(i);
    if (kFpAbi[i] == name) return Operand::freg(i);
  }
  if (name == "fp") return Operand::reg(regs::s0);
  if (name.size() >= 2 && (name[0] == 'x' || name[0] == 'f')) {
    unsigned n = 0;
    auto [p, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), n);
    if (ec == std::errc{} && p == name.data() + name.size() && n < 32 && !(name.size() > 2 && name[1] == '0'))
      return name[0] == 'x' ? Operand::reg(n) : Operand::freg(n);
  }
  return std::nullopt;
}

}  // namespace rvrop::isa
