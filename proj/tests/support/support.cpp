#include "support.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "rvrop/isa.hpp"

namespace testsupport {

namespace isa = rvrop::isa;
namespace img = rvrop::image;
namespace of = rvrop::overlapforge;

std::string fixture_path(const std::string& name) { return std::string(RVROP_FIXTURES) + "/" + name; }

std::vector<std::uint8_t> read_fixture(const std::string& name) { return img::read_file(fixture_path(name)); }

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

img::MemoryImage function15c_raw() { return img::load_raw(read_fixture("function15c.bin"), kFixtureBase); }

namespace {

template <typename T>
void put(std::vector<std::uint8_t>& b, std::size_t at, T v) {
  if (b.size() < at + sizeof(T)) b.resize(at + sizeof(T), 0);
  for (std::size_t i = 0; i < sizeof(T); ++i) b[at + i] = static_cast<std::uint8_t>(static_cast<std::uint64_t>(v) >> (8 * i));
}

void align(std::vector<std::uint8_t>& b, std::size_t a) {
  while (b.size() % a != 0) b.push_back(0);
}

}  // namespace

std::vector<std::uint8_t> make_elf(Address entry, const std::vector<ElfSegment>& segments,
                                   const std::vector<ElfSymbol>& symbols) {
  std::vector<std::uint8_t> b(64, 0);
  const std::uint8_t ident[] = {0x7F, 'E', 'L', 'F', 2, 1, 1};
  std::copy(std::begin(ident), std::end(ident), b.begin());
  put<std::uint16_t>(b, 16, 2);  // ET_EXEC
  put<std::uint16_t>(b, 18, img::kMachineRiscV);
  put<std::uint32_t>(b, 20, 1);
  put<std::uint64_t>(b, 24, entry);
  put<std::uint64_t>(b, 32, 64);
  put<std::uint16_t>(b, 52, 64);
  put<std::uint16_t>(b, 54, 56);
  put<std::uint16_t>(b, 56, static_cast<std::uint16_t>(segments.size()));

  b.resize(64 + 56 * segments.size(), 0);
  for (std::size_t i = 0; i < segments.size(); ++i) {
    align(b, 16);
    const std::size_t off = b.size();
    b.insert(b.end(), segments[i].bytes.begin(), segments[i].bytes.end());
    const std::size_t ph = 64 + 56 * i;
    put<std::uint32_t>(b, ph, 1);
    put<std::uint32_t>(b, ph + 4, segments[i].flags);
    put<std::uint64_t>(b, ph + 8, off);
    put<std::uint64_t>(b, ph + 16, segments[i].vaddr);
    put<std::uint64_t>(b, ph + 24, segments[i].vaddr);
    put<std::uint64_t>(b, ph + 32, segments[i].bytes.size());
    put<std::uint64_t>(b, ph + 40, segments[i].bytes.size() + segments[i].extra_memsz);
    put<std::uint64_t>(b, ph + 48, 16);
  }
  if (symbols.empty()) return b;

  // .symtab, .strtab, .shstrtab
  std::string strtab(1, '\0');
  std::vector<std::uint8_t> symtab(24, 0);
  for (const auto& s : symbols) {
    const std::size_t at = symtab.size();
    put<std::uint32_t>(symtab, at, static_cast<std::uint32_t>(strtab.size()));
    put<std::uint8_t>(symtab, at + 4, static_cast<std::uint8_t>((1 << 4) | (s.function ? 2 : 1)));
    put<std::uint16_t>(symtab, at + 6, 0xFFF1);
    put<std::uint64_t>(symtab, at + 8, s.value);
    put<std::uint64_t>(symtab, at + 16, s.size);
    strtab += s.name;
    strtab += '\0';
  }
  const std::string shstr = std::string("\0.symtab\0.strtab\0.shstrtab\0", 27);
  align(b, 8);
  const std::size_t symoff = b.size();
  b.insert(b.end(), symtab.begin(), symtab.end());
  const std::size_t stroff = b.size();
  b.insert(b.end(), strtab.begin(), strtab.end());
  const std::size_t shstroff = b.size();
  b.insert(b.end(), shstr.begin(), shstr.end());
  align(b, 8);
  const std::size_t shoff = b.size();
  b.resize(shoff + 64 * 4, 0);
  auto sh = [&](std::size_t i, std::uint32_t name, std::uint32_t type, std::size_t off, std::size_t size,
                std::uint32_t link, std::uint64_t entsize) {
    const std::size_t at = shoff + 64 * i;
    put<std::uint32_t>(b, at, name);
    put<std::uint32_t>(b, at + 4, type);
    put<std::uint64_t>(b, at + 24, off);
    put<std::uint64_t>(b, at + 32, size);
    put<std::uint32_t>(b, at + 40, link);
    put<std::uint64_t>(b, at + 56, entsize);
  };
  sh(1, 1, 2, symoff, symtab.size(), 2, 24);
  sh(2, 9, 3, stroff, strtab.size(), 0, 0);
  sh(3, 17, 3, shstroff, shstr.size(), 0, 0);
  put<std::uint64_t>(b, 40, shoff);
  put<std::uint16_t>(b, 58, 64);
  put<std::uint16_t>(b, 60, 4);
  put<std::uint16_t>(b, 62, 3);
  return b;
}

namespace {

std::vector<std::uint8_t> random_member(std::mt19937_64& rng, std::string_view mnemonic) {
  const auto p = *isa::encoding_pattern(mnemonic);
  for (int tries = 0; tries < 1000; ++tries) {
    const std::uint32_t w = (static_cast<std::uint32_t>(rng()) & ~p.mask) | p.match;
    const auto in = p.width == 4 ? isa::decode_word(w) : isa::decode_halfword(static_cast<std::uint16_t>(w));
    if (in && in->mnemonic == mnemonic) return {in->raw.begin(), in->raw.begin() + in->width};
  }
  throw std::runtime_error("no random member for " + std::string(mnemonic));
}

template <typename T>
const T& pick(std::mt19937_64& rng, const std::vector<T>& v) {
  return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

}  // namespace

std::vector<std::uint8_t> random_code(std::mt19937_64& rng, std::size_t max_bytes) {
  static const std::vector<std::string_view> wide{"addi", "lui", "add", "ld", "sd", "xori", "mul", "addiw", "slli", "auipc"};
  static const std::vector<std::string_view> narrow{"c.li", "c.addi", "c.mv", "c.ldsp", "c.sdsp", "c.lw", "c.add"};
  const std::size_t target = std::uniform_int_distribution<std::size_t>(1, max_bytes / 2)(rng) * 2;
  auto small_offset = [&](int lo, int hi) { return 2 * std::uniform_int_distribution<int>(lo / 2, hi / 2)(rng); };

  std::vector<std::uint8_t> out;
  while (out.size() < target) {
    const int r = std::uniform_int_distribution<int>(0, 99)(rng);
    std::vector<std::uint8_t> piece;
    if (r < 28) {
      piece = random_member(rng, pick(rng, wide));
    } else if (r < 50) {
      piece = random_member(rng, pick(rng, narrow));
    } else if (r < 60) {
      static const std::vector<std::string> rets{"c.jr ra", "jalr zero,0(ra)", "c.jalr a5", "jalr zero,0(a5)", "c.jr t1"};
      piece = isa::assemble(pick(rng, rets));
    } else if (r < 72) {
      const int kind = std::uniform_int_distribution<int>(0, 3)(rng);
      const std::int64_t off = small_offset(-24, 32);
      const std::int64_t nz = off == 0 ? 2 : off;
      using isa::Operand;
      if (kind == 0) piece = isa::encode("c.j", {Operand::reg(0), Operand::imm(nz)});
      else if (kind == 1) piece = isa::encode("c.beqz", {Operand::reg(10), Operand::reg(0), Operand::imm(nz)});
      else if (kind == 2) piece = isa::encode("bne", {Operand::reg(5), Operand::reg(6), Operand::imm(nz)});
      else piece = isa::encode("jal", {Operand::reg(0), Operand::imm(nz)});
    } else if (r < 77) {
      piece = isa::encode("jal", {isa::Operand::reg(1), isa::Operand::imm(small_offset(-16, 32))});
    } else {
      piece = {static_cast<std::uint8_t>(rng()), static_cast<std::uint8_t>(rng())};
    }
    if (out.size() + piece.size() > target) piece.resize(target - out.size());
    out.insert(out.end(), piece.begin(), piece.end());
  }
  return out;
}

std::set<Address> brute_decodable(const img::MemoryImage& image) {
  std::set<Address> out;
  for (const auto& seg : image.segments) {
    if (!seg.executable) continue;
    for (std::size_t off = (seg.base & 1); off < seg.bytes.size(); off += 2) {
      const auto bytes = std::span<const std::uint8_t>(seg.bytes).subspan(off);
      if (isa::decode(bytes, seg.base + off)) out.insert(seg.base + off);
    }
  }
  return out;
}

namespace {

bool is_poi(const isa::Instr& in) {
  return in.flow.kind == isa::Flow::IndirectJump || in.flow.kind == isa::Flow::IndirectCall;
}

std::map<Address, isa::Instr> decode_all(const img::MemoryImage& image) {
  std::map<Address, isa::Instr> out;
  for (Address a : brute_decodable(image)) out.emplace(a, *image.decode_at(a));
  return out;
}

bool taken(const isa::Instr& from, Address to) {
  if (from.flow.kind == isa::Flow::DirectJump) return true;
  if (from.flow.kind != isa::Flow::CondBranch) return false;
  return from.flow.offset != from.width && to == from.address + static_cast<Address>(from.flow.offset);
}

}  // namespace

std::set<Address> brute_coreachable(const img::MemoryImage& image) {
  const auto all = decode_all(image);
  std::set<Address> good;
  for (const auto& [a, in] : all)
    if (is_poi(in)) good.insert(a);
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& [a, in] : all) {
      if (good.count(a)) continue;
      for (Address s : isa::successors(in)) {
        if (all.count(s) && good.count(s)) {
          good.insert(a);
          changed = true;
          break;
        }
      }
    }
  }
  return good;
}

std::map<std::pair<Address, Address>, BrutePath> brute_gadgets(const img::MemoryImage& image,
                                                              rvrop::gadgets::Limits limits) {
  const auto all = decode_all(image);
  std::map<std::pair<Address, Address>, BrutePath> best;
  auto rank = [](const BrutePath& p) { return std::make_tuple(p.lcsajs, p.addrs.size(), p.addrs); };

  std::vector<Address> path;
  std::set<Address> on_path;
  std::function<void(Address, unsigned)> dfs = [&](Address v, unsigned lcsajs) {
    path.push_back(v);
    on_path.insert(v);
    const isa::Instr& in = all.at(v);
    if (is_poi(in)) {
      BrutePath p{path, lcsajs};
      auto key = std::make_pair(path.front(), v);
      auto it = best.find(key);
      if (it == best.end() || rank(p) < rank(it->second)) best[key] = p;
    } else if (path.size() < limits.max_instructions) {
      for (Address s : isa::successors(in)) {
        if (!all.count(s) || on_path.count(s)) continue;
        const unsigned next = lcsajs + (taken(in, s) ? 1U : 0U);
        if (next <= limits.max_lcsajs) dfs(s, next);
      }
    }
    on_path.erase(v);
    path.pop_back();
  };
  for (const auto& [a, in] : all) dfs(a, 1);
  return best;
}

void drop_multi_suffixes(std::map<std::pair<Address, Address>, BrutePath>& paths) {
  std::set<std::pair<Address, Address>> drop;
  for (const auto& [key, p] : paths) {
    if (p.lcsajs < 2) continue;
    for (std::size_t i = 1; i < p.addrs.size(); ++i) {
      const auto it = paths.find({p.addrs[i], key.second});
      if (it == paths.end() || it->second.lcsajs < 2) continue;
      if (std::vector<Address>(p.addrs.begin() + static_cast<std::ptrdiff_t>(i), p.addrs.end()) == it->second.addrs)
        drop.insert(it->first);
    }
  }
  for (const auto& k : drop) paths.erase(k);
}

of::HiddenSpec random_spec(std::mt19937_64& rng, std::size_t max_hidden) {
  static const std::vector<std::string> mnemonics{
      "addi", "slti", "sltiu", "xori", "ori", "andi", "addiw", "lui",  "auipc", "add", "sub",
      "xor",  "or",   "and",   "slt",  "sltu", "sll", "srl",  "sra",  "addw",  "subw", "mul",
      "mulw", "div",  "rem",   "lw",   "ld",  "lbu",  "sd",   "sw",   "slli",  "srli", "srai"};
  static const std::vector<std::string> sets{"callee-saved", "temporaries", "arguments", "any"};
  of::HiddenSpec spec;
  const std::size_t n = std::uniform_int_distribution<std::size_t>(0, max_hidden)(rng);
  for (std::size_t j = 0; j < n; ++j) {
    of::HiddenTemplate t{pick(rng, mnemonics), {}};
    const auto p = *isa::encoding_pattern(t.mnemonic);
    const auto shape = isa::decode_word(p.match);
    for (const auto& op : shape->operands) {
      const int r = std::uniform_int_distribution<int>(0, 9)(rng);
      if (op.kind == isa::OperandKind::Reg) {
        if (r < 2) t.operands.push_back(of::OperandConstraint::fix(isa::Operand::reg(rng() % 32)));
        else if (r < 6) t.operands.push_back(of::OperandConstraint::any_of(*of::register_set(pick(rng, sets))));
        else t.operands.push_back(of::OperandConstraint::free());
      } else {
        t.operands.push_back(of::OperandConstraint::free());
      }
    }
    spec.sequence.push_back(std::move(t));
  }
  const std::int64_t off = 2 * std::uniform_int_distribution<int>(1, 20)(rng);
  spec.sequence.push_back({"c.j", {of::OperandConstraint::fix(isa::Operand::imm(off))}});
  return spec;
}

std::vector<std::uint8_t> plant(const of::OverlapPlan& plan, std::int64_t escape_offset) {
  auto bytes = of::layout(plan);
  const std::size_t target = 4 * (plan.carriers.size() - 1) + 2 + static_cast<std::size_t>(escape_offset);
  if (target < bytes.size()) throw std::invalid_argument("escape target lands inside the carriers");
  while (bytes.size() < target) {
    bytes.push_back(0x01);  // c.nop
    bytes.push_back(0x00);
  }
  const auto ret = isa::assemble("c.jr ra");
  bytes.insert(bytes.end(), ret.begin(), ret.end());
  return bytes;
}

}  // namespace testsupport
