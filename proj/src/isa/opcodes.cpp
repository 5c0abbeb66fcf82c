#include "opcodes.hpp"

#include <algorithm>
#include <array>
#include <vector>

namespace rvrop::isa::detail {
namespace {

constexpr std::uint32_t kMaskOp = 0x0000007F;
constexpr std::uint32_t kMaskF3 = 0x0000707F;
constexpr std::uint32_t kMaskF7 = 0xFE00707F;
constexpr std::uint32_t kMaskF6 = 0xFC00707F;
constexpr std::uint32_t kMaskAll = 0xFFFFFFFF;

constexpr std::uint32_t enc(std::uint32_t op, std::uint32_t f3 = 0, std::uint32_t f7 = 0) {
  return op | (f3 << 12) | (f7 << 25);
}

std::vector<OpDesc> build_table() {
  std::vector<OpDesc> t;
  auto add = [&](std::string_view m, Fmt f, std::uint32_t match, std::uint32_t mask, bool encodable = true,
                 bool rm = false) { t.push_back({m, f, match, mask, encodable, rm}); };

  // RV64I
  add("lui", Fmt::U, 0x37, kMaskOp);
  add("auipc", Fmt::U, 0x17, kMaskOp);
  add("jal", Fmt::J, 0x6F, kMaskOp);
  add("jalr", Fmt::Jalr, enc(0x67, 0), kMaskF3);

  constexpr std::array<std::pair<std::string_view, std::uint32_t>, 6> branches{
      {{"beq", 0}, {"bne", 1}, {"blt", 4}, {"bge", 5}, {"bltu", 6}, {"bgeu", 7}}};
  for (auto [m, f3] : branches) add(m, Fmt::Branch, enc(0x63, f3), kMaskF3);

  constexpr std::array<std::pair<std::string_view, std::uint32_t>, 7> loads{
      {{"lb", 0}, {"lh", 1}, {"lw", 2}, {"ld", 3}, {"lbu", 4}, {"lhu", 5}, {"lwu", 6}}};
  for (auto [m, f3] : loads) add(m, Fmt::Load, enc(0x03, f3), kMaskF3);

  constexpr std::array<std::pair<std::string_view, std::uint32_t>, 4> stores{
      {{"sb", 0}, {"sh", 1}, {"sw", 2}, {"sd", 3}}};
  for (auto [m, f3] : stores) add(m, Fmt::Store, enc(0x23, f3), kMaskF3);

  constexpr std::array<std::pair<std::string_view, std::uint32_t>, 6> alu_imm{
      {{"addi", 0}, {"slti", 2}, {"sltiu", 3}, {"xori", 4}, {"ori", 6}, {"andi", 7}}};
  for (auto [m, f3] : alu_imm) add(m, Fmt::I, enc(0x13, f3), kMaskF3);
  add("slli", Fmt::Shift64, enc(0x13, 1), kMaskF6);
  add("srli", Fmt::Shift64, enc(0x13, 5), kMaskF6);
  add("srai", Fmt::Shift64, enc(0x13, 5) | 0x40000000, kMaskF6);

  constexpr std::array<std::tuple<std::string_view, std::uint32_t, std::uint32_t>, 10> alu{{{"add", 0, 0},
                                                                                           {"sub", 0, 0x20},
                                                                                           {"sll", 1, 0},
                                                                                           {"slt", 2, 0},
                                                                                           {"sltu", 3, 0},
                                                                                           {"xor", 4, 0},
                                                                                           {"srl", 5, 0},
                                                                                           {"sra", 5, 0x20},
                                                                                           {"or", 6, 0},
                                                                                           {"and", 7, 0}}};
  for (auto [m, f3, f7] : alu) add(m, Fmt::R, enc(0x33, f3, f7), kMaskF7);

  add("addiw", Fmt::I, enc(0x1B, 0), kMaskF3);
  add("slliw", Fmt::Shift32, enc(0x1B, 1, 0), kMaskF7);
  add("srliw", Fmt::Shift32, enc(0x1B, 5, 0), kMaskF7);
  add("sraiw", Fmt::Shift32, enc(0x1B, 5, 0x20), kMaskF7);
  add("addw", Fmt::R, enc(0x3B, 0, 0), kMaskF7);
  add("subw", Fmt::R, enc(0x3B, 0, 0x20), kMaskF7);
  add("sllw", Fmt::R, enc(0x3B, 1, 0), kMaskF7);
  add("srlw", Fmt::R, enc(0x3B, 5, 0), kMaskF7);
  add("sraw", Fmt::R, enc(0x3B, 5, 0x20), kMaskF7);

  add("fence.tso", Fmt::None, 0x8330000F, kMaskAll);
  add("fence", Fmt::Fence, 0x0000000F, 0xF00FFFFF);
  add("fence.i", Fmt::None, 0x0000100F, kMaskAll);
  add("ecall", Fmt::None, 0x00000073, kMaskAll);
  add("ebreak", Fmt::None, 0x00100073, kMaskAll);
  add("sret", Fmt::None, 0x10200073, kMaskAll);
  add("mret", Fmt::None, 0x30200073, kMaskAll);
  add("wfi", Fmt::None, 0x10500073, kMaskAll);
  add("sfence.vma", Fmt::Sfence, 0x12000073, 0xFE007FFF);
  add("csrrw", Fmt::Csr, enc(0x73, 1), kMaskF3);
  add("csrrs", Fmt::Csr, enc(0x73, 2), kMaskF3);
  add("csrrc", Fmt::Csr, enc(0x73, 3), kMaskF3);
  add("csrrwi", Fmt::CsrI, enc(0x73, 5), kMaskF3);
  add("csrrsi", Fmt::CsrI, enc(0x73, 6), kMaskF3);
  add("csrrci", Fmt::CsrI, enc(0x73, 7), kMaskF3);

  // M
  constexpr std::array<std::pair<std::string_view, std::uint32_t>, 8> mul{{{"mul", 0},
                                                                           {"mulh", 1},
                                                                           {"mulhsu", 2},
                                                                           {"mulhu", 3},
                                                                           {"div", 4},
                                                                           {"divu", 5},
                                                                           {"rem", 6},
                                                                           {"remu", 7}}};
  for (auto [m, f3] : mul) add(m, Fmt::R, enc(0x33, f3, 1), kMaskF7);
  constexpr std::array<std::pair<std::string_view, std::uint32_t>, 5> mulw{
      {{"mulw", 0}, {"divw", 4}, {"divuw", 5}, {"remw", 6}, {"remuw", 7}}};
  for (auto [m, f3] : mulw) add(m, Fmt::R, enc(0x3B, f3, 1), kMaskF7);

  // A (coarse: aq/rl ignored)
  constexpr std::array<std::pair<std::string_view, std::uint32_t>, 9> amos{{{"amoswap", 0x01},
                                                                            {"amoadd", 0x00},
                                                                            {"amoxor", 0x04},
                                                                            {"amoand", 0x0C},
                                                                            {"amoor", 0x08},
                                                                            {"amomin", 0x10},
                                                                            {"amomax", 0x14},
                                                                            {"amominu", 0x18},
                                                                            {"amomaxu", 0x1C}}};
  static const std::array<std::string_view, 22> amo_names{
      "lr.w",     "lr.d",     "sc.w",      "sc.d",      "amoswap.w", "amoswap.d", "amoadd.w",  "amoadd.d",
      "amoxor.w", "amoxor.d", "amoand.w",  "amoand.d",  "amoor.w",   "amoor.d",   "amomin.w",  "amomin.d",
      "amomax.w", "amomax.d", "amominu.w", "amominu.d", "amomaxu.w", "amomaxu.d"};
  for (std::uint32_t f3 : {2U, 3U}) {
    const std::size_t d = f3 - 2;
    add(amo_names[0 + d], Fmt::AmoLr, enc(0x2F, f3) | (0x02U << 27), 0xF9F0707F, false);
    add(amo_names[2 + d], Fmt::Amo, enc(0x2F, f3) | (0x03U << 27), 0xF800707F, false);
    for (std::size_t i = 0; i < amos.size(); ++i)
      add(amo_names[4 + 2 * i + d], Fmt::Amo, enc(0x2F, f3) | (amos[i].second << 27), 0xF800707F, false);
  }

  // F and D (coarse)
  add("flw", Fmt::FLoad, enc(0x07, 2), kMaskF3, false);
  add("fld", Fmt::FLoad, enc(0x07, 3), kMaskF3, false);
  add("fsw", Fmt::FStore, enc(0x27, 2), kMaskF3, false);
  add("fsd", Fmt::FStore, enc(0x27, 3), kMaskF3, false);

  struct FpNames {
    std::string_view madd, msub, nmsub, nmadd, add, sub, mul, div, sqrt, sgnj, sgnjn, sgnjx, min, max, cvt_other, eq,
        lt, le, cvt_w, cvt_wu, cvt_l, cvt_lu, cvt_from_w, cvt_from_wu, cvt_from_l, cvt_from_lu, mv_x, fclass, mv_from_x;
  };
  static const FpNames single{"fmadd.s",   "fmsub.s",   "fnmsub.s",  "fnmadd.s",  "fadd.s",   "fsub.s",
                              "fmul.s",    "fdiv.s",    "fsqrt.s",   "fsgnj.s",   "fsgnjn.s", "fsgnjx.s",
                              "fmin.s",    "fmax.s",    "fcvt.s.d",  "feq.s",     "flt.s",    "fle.s",
                              "fcvt.w.s",  "fcvt.wu.s", "fcvt.l.s",  "fcvt.lu.s", "fcvt.s.w", "fcvt.s.wu",
                              "fcvt.s.l",  "fcvt.s.lu", "fmv.x.w",   "fclass.s",  "fmv.w.x"};
  static const FpNames dbl{"fmadd.d",  "fmsub.d",   "fnmsub.d", "fnmadd.d",  "fadd.d",   "fsub.d",
                           "fmul.d",   "fdiv.d",    "fsqrt.d",  "fsgnj.d",   "fsgnjn.d", "fsgnjx.d",
                           "fmin.d",   "fmax.d",    "fcvt.d.s", "feq.d",     "flt.d",    "fle.d",
                           "fcvt.w.d", "fcvt.wu.d", "fcvt.l.d", "fcvt.lu.d", "fcvt.d.w", "fcvt.d.wu",
                           "fcvt.d.l", "fcvt.d.lu", "fmv.x.d",  "fclass.d",  "fmv.d.x"};
  for (std::uint32_t fmt : {0U, 1U}) {
    const FpNames& n = fmt == 0 ? single : dbl;
    const std::uint32_t fb = fmt << 25;
    add(n.madd, Fmt::FR4, 0x43 | fb, 0x0600007F, false, true);
    add(n.msub, Fmt::FR4, 0x47 | fb, 0x0600007F, false, true);
    add(n.nmsub, Fmt::FR4, 0x4B | fb, 0x0600007F, false, true);
    add(n.nmadd, Fmt::FR4, 0x4F | fb, 0x0600007F, false, true);
    auto f7 = [&](std::uint32_t f5) { return ((f5 << 2) | fmt) << 25; };
    add(n.add, Fmt::FR, 0x53 | f7(0x00), 0xFE00007F, false, true);
    add(n.sub, Fmt::FR, 0x53 | f7(0x01), 0xFE00007F, false, true);
    add(n.mul, Fmt::FR, 0x53 | f7(0x02), 0xFE00007F, false, true);
    add(n.div, Fmt::FR, 0x53 | f7(0x03), 0xFE00007F, false, true);
    add(n.sqrt, Fmt::FR2, 0x53 | f7(0x0B), 0xFFF0007F, false, true);
    add(n.sgnj, Fmt::FR, 0x53 | f7(0x04) | (0U << 12), kMaskF7, false);
    add(n.sgnjn, Fmt::FR, 0x53 | f7(0x04) | (1U << 12), kMaskF7, false);
    add(n.sgnjx, Fmt::FR, 0x53 | f7(0x04) | (2U << 12), kMaskF7, false);
    add(n.min, Fmt::FR, 0x53 | f7(0x05) | (0U << 12), kMaskF7, false);
    add(n.max, Fmt::FR, 0x53 | f7(0x05) | (1U << 12), kMaskF7, false);
    // fcvt.s.d has fmt=S and rs2=1 (source D); fcvt.d.s has fmt=D and rs2=0.
    add(n.cvt_other, Fmt::FR2, 0x53 | f7(0x08) | ((fmt == 0 ? 1U : 0U) << 20), 0xFFF0007F, false, true);
    add(n.eq, Fmt::FCmp, 0x53 | f7(0x14) | (2U << 12), kMaskF7, false);
    add(n.lt, Fmt::FCmp, 0x53 | f7(0x14) | (1U << 12), kMaskF7, false);
    add(n.le, Fmt::FCmp, 0x53 | f7(0x14) | (0U << 12), kMaskF7, false);
    add(n.cvt_w, Fmt::FToInt, 0x53 | f7(0x18) | (0U << 20), 0xFFF0007F, false, true);
    add(n.cvt_wu, Fmt::FToInt, 0x53 | f7(0x18) | (1U << 20), 0xFFF0007F, false, true);
    add(n.cvt_l, Fmt::FToInt, 0x53 | f7(0x18) | (2U << 20), 0xFFF0007F, false, true);
    add(n.cvt_lu, Fmt::FToInt, 0x53 | f7(0x18) | (3U << 20), 0xFFF0007F, false, true);
    add(n.cvt_from_w, Fmt::FFromInt, 0x53 | f7(0x1A) | (0U << 20), 0xFFF0007F, false, true);
    add(n.cvt_from_wu, Fmt::FFromInt, 0x53 | f7(0x1A) | (1U << 20), 0xFFF0007F, false, true);
    add(n.cvt_from_l, Fmt::FFromInt, 0x53 | f7(0x1A) | (2U << 20), 0xFFF0007F, false, true);
    add(n.cvt_from_lu, Fmt::FFromInt, 0x53 | f7(0x1A) | (3U << 20), 0xFFF0007F, false, true);
    add(n.mv_x, Fmt::FToInt, 0x53 | f7(0x1C), 0xFFF0707F, false);
    add(n.fclass, Fmt::FToInt, 0x53 | f7(0x1C) | (1U << 12), 0xFFF0707F, false);
    add(n.mv_from_x, Fmt::FFromInt, 0x53 | f7(0x1E), 0xFFF0707F, false);
  }
  return t;
}

const std::vector<OpDesc>& table() {
  static const std::vector<OpDesc> t = build_table();
  return t;
}

// Entries grouped by major opcode for decode.
const std::array<std::vector<const OpDesc*>, 128>& by_opcode() {
  static const auto index = [] {
    std::array<std::vector<const OpDesc*>, 128> idx;
    for (const OpDesc& d : table()) idx[d.match & 0x7F].push_back(&d);
    return idx;
  }();
  return index;
}

constexpr std::array<CDesc, 37> kCompressed{{
    {"c.addi4spn", "addi", CSyntax::Same, 0x0000, 0xE003},
    {"c.fld", "fld", CSyntax::Same, 0x2000, 0xE003},
    {"c.lw", "lw", CSyntax::Same, 0x4000, 0xE003},
    {"c.ld", "ld", CSyntax::Same, 0x6000, 0xE003},
    {"c.fsd", "fsd", CSyntax::Same, 0xA000, 0xE003},
    {"c.sw", "sw", CSyntax::Same, 0xC000, 0xE003},
    {"c.sd", "sd", CSyntax::Same, 0xE000, 0xE003},
    {"c.nop", "addi", CSyntax::Nop, 0x0001, 0xFFFF},
    {"c.addi", "addi", CSyntax::Dup, 0x0001, 0xE003},
    {"c.addiw", "addiw", CSyntax::Dup, 0x2001, 0xE003},
    {"c.li", "addi", CSyntax::ZeroMid, 0x4001, 0xE003},
    {"c.addi16sp", "addi", CSyntax::Dup, 0x6101, 0xEF83},
    {"c.lui", "lui", CSyntax::Same, 0x6001, 0xE003},
    {"c.srli", "srli", CSyntax::Dup, 0x8001, 0xEC03},
    {"c.srai", "srai", CSyntax::Dup, 0x8401, 0xEC03},
    {"c.andi", "andi", CSyntax::Dup, 0x8801, 0xEC03},
    {"c.sub", "sub", CSyntax::Dup, 0x8C01, 0xFC63},
    {"c.xor", "xor", CSyntax::Dup, 0x8C21, 0xFC63},
    {"c.or", "or", CSyntax::Dup, 0x8C41, 0xFC63},
    {"c.and", "and", CSyntax::Dup, 0x8C61, 0xFC63},
    {"c.subw", "subw", CSyntax::Dup, 0x9C01, 0xFC63},
    {"c.addw", "addw", CSyntax::Dup, 0x9C21, 0xFC63},
    {"c.j", "jal", CSyntax::Jump, 0xA001, 0xE003},
    {"c.beqz", "beq", CSyntax::ZeroMid, 0xC001, 0xE003},
    {"c.bnez", "bne", CSyntax::ZeroMid, 0xE001, 0xE003},
    {"c.slli", "slli", CSyntax::Dup, 0x0002, 0xE003},
    {"c.fldsp", "fld", CSyntax::Same, 0x2002, 0xE003},
    {"c.lwsp", "lw", CSyntax::Same, 0x4002, 0xE003},
    {"c.ldsp", "ld", CSyntax::Same, 0x6002, 0xE003},
    {"c.jr", "jalr", CSyntax::Jr, 0x8002, 0xF07F},
    {"c.mv", "add", CSyntax::ZeroMid, 0x8002, 0xF003},
    {"c.ebreak", "ebreak", CSyntax::Bare, 0x9002, 0xFFFF},
    {"c.jalr", "jalr", CSyntax::Jalr, 0x9002, 0xF07F},
    {"c.add", "add", CSyntax::Dup, 0x9002, 0xF003},
    {"c.fsdsp", "fsd", CSyntax::Same, 0xA002, 0xE003},
    {"c.swsp", "sw", CSyntax::Same, 0xC002, 0xE003},
    {"c.sdsp", "sd", CSyntax::Same, 0xE002, 0xE003},
}};

}  // namespace

std::span<const OpDesc> op_table() { return table(); }

const OpDesc* find_op(std::string_view mnemonic) {
  for (const OpDesc& d : table())
    if (d.mnemonic == mnemonic) return &d;
  return nullptr;
}

const OpDesc* match_word(std::uint32_t word) {
  for (const OpDesc* d : by_opcode()[word & 0x7F])
    if ((word & d->mask) == d->match) return d;
  return nullptr;
}

std::span<const CDesc> compressed_table() { return kCompressed; }

const CDesc* find_compressed(std::string_view mnemonic) {
  auto it = std::find_if(kCompressed.begin(), kCompressed.end(),
                         [&](const CDesc& d) { return d.mnemonic == mnemonic; });
  return it == kCompressed.end() ? nullptr : &*it;
}

}  // namespace rvrop::isa::detail
