#include "rvrop/image.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iterator>

#include <fmt/format.h>

namespace rvrop::image {

const Segment* MemoryImage::segment_at(Address a) const {
  for (const auto& s : segments)
    if (s.contains(a)) return &s;
  return nullptr;
}

const Segment* MemoryImage::executable_segment_at(Address a) const {
  const Segment* s = segment_at(a);
  return s != nullptr && s->executable ? s : nullptr;
}

std::optional<std::uint8_t> MemoryImage::read_byte(Address a) const {
  const Segment* s = segment_at(a);
  if (s == nullptr) return std::nullopt;
  return s->bytes[a - s->base];
}

std::span<const std::uint8_t> MemoryImage::bytes_from(Address a) const {
  const Segment* s = segment_at(a);
  if (s == nullptr) return {};
  return std::span<const std::uint8_t>(s->bytes).subspan(a - s->base);
}

std::optional<isa::Instr> MemoryImage::decode_at(Address a) const {
  const Segment* s = executable_segment_at(a);
  if (s == nullptr) return std::nullopt;
  return isa::decode(std::span<const std::uint8_t>(s->bytes).subspan(a - s->base), a);
}

std::string_view to_string(LoadErrorKind kind) {
  switch (kind) {
    case LoadErrorKind::BadMagic: return "BadMagic";
    case LoadErrorKind::WrongClass: return "WrongClass";
    case LoadErrorKind::WrongEndianness: return "WrongEndianness";
    case LoadErrorKind::WrongMachine: return "WrongMachine";
    case LoadErrorKind::TruncatedHeader: return "TruncatedHeader";
    case LoadErrorKind::MalformedProgramHeader: return "MalformedProgramHeader";
    case LoadErrorKind::OverlappingSegments: return "OverlappingSegments";
  }
  return "?";
}

LoadError::LoadError(LoadErrorKind kind, std::uint64_t offset, const std::string& detail)
    : std::runtime_error(fmt::format("{} at offset {:#x}: {}", to_string(kind), offset, detail)),
      kind_(kind),
      offset_(offset) {}

namespace {

constexpr std::size_t kEhdrSize = 64, kPhdrSize = 56, kShdrSize = 64, kSymSize = 24;
constexpr std::uint32_t kPtLoad = 1, kPfX = 1, kShtSymtab = 2;
constexpr unsigned kSttFunc = 2, kSttSection = 3, kSttFile = 4;

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}

  [[nodiscard]] bool has(std::uint64_t off, std::uint64_t len) const {
    return off <= b_.size() && len <= b_.size() - off;
  }

  template <typename T>
  [[nodiscard]] T get(std::uint64_t off) const {
    T v{};
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(b_[off + i]) << (8 * i));
    return v;
  }

  [[nodiscard]] std::span<const std::uint8_t> slice(std::uint64_t off, std::uint64_t len) const {
    return b_.subspan(off, len);
  }

 private:
  std::span<const std::uint8_t> b_;
};

std::vector<Symbol> read_symbols(const Reader& r, std::uint64_t shoff, unsigned shentsize, unsigned shnum) {
  std::vector<Symbol> out;
  if (shoff == 0 || shnum == 0 || shentsize != kShdrSize || !r.has(shoff, std::uint64_t{shnum} * kShdrSize)) return out;
  auto sh = [&](unsigned i) { return shoff + std::uint64_t{i} * kShdrSize; };
  for (unsigned i = 0; i < shnum; ++i) {
    if (r.get<std::uint32_t>(sh(i) + 4) != kShtSymtab) continue;
    const auto off = r.get<std::uint64_t>(sh(i) + 24), size = r.get<std::uint64_t>(sh(i) + 32);
    const auto link = r.get<std::uint32_t>(sh(i) + 40);
    if (link >= shnum || !r.has(off, size)) continue;
    const auto str_off = r.get<std::uint64_t>(sh(link) + 24), str_size = r.get<std::uint64_t>(sh(link) + 32);
    if (!r.has(str_off, str_size)) continue;
    for (std::uint64_t s = off; s + kSymSize <= off + size; s += kSymSize) {
      const auto name_idx = r.get<std::uint32_t>(s);
      const unsigned type = r.get<std::uint8_t>(s + 4) & 0xF;
      const auto shndx = r.get<std::uint16_t>(s + 6);
      if (type == kSttSection || type == kSttFile || shndx == 0 || name_idx == 0 || name_idx >= str_size) continue;
      const auto* begin = reinterpret_cast<const char*>(r.slice(str_off, str_size).data());
      const std::size_t len = strnlen(begin + name_idx, str_size - name_idx);
      out.push_back(Symbol{std::string(begin + name_idx, len), r.get<std::uint64_t>(s + 8),
                           r.get<std::uint64_t>(s + 16), type == kSttFunc});
    }
  }
  return out;
}

}  // namespace

MemoryImage load_elf(std::span<const std::uint8_t> bytes) {
  const Reader r(bytes);
  if (!r.has(0, 4)) throw LoadError(LoadErrorKind::TruncatedHeader, bytes.size(), "shorter than the ELF magic");
  static constexpr std::uint8_t kMagic[4] = {0x7F, 'E', 'L', 'F'};
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw LoadError(LoadErrorKind::BadMagic, 0, "not an ELF file");
  if (!r.has(0, 6)) throw LoadError(LoadErrorKind::TruncatedHeader, bytes.size(), "identification bytes missing");
  if (bytes[4] != 2) throw LoadError(LoadErrorKind::WrongClass, 4, fmt::format("class {} is not ELF64", bytes[4]));
  if (bytes[5] != 1)
    throw LoadError(LoadErrorKind::WrongEndianness, 5, fmt::format("data encoding {} is not little-endian", bytes[5]));
  if (!r.has(0, kEhdrSize))
    throw LoadError(LoadErrorKind::TruncatedHeader, bytes.size(), "file ends inside the ELF header");
  const auto machine = r.get<std::uint16_t>(18);
  if (machine != kMachineRiscV)
    throw LoadError(LoadErrorKind::WrongMachine, 18, fmt::format("e_machine {} is not RISC-V", machine));

  const auto entry = r.get<std::uint64_t>(24), phoff = r.get<std::uint64_t>(32), shoff = r.get<std::uint64_t>(40);
  const unsigned phentsize = r.get<std::uint16_t>(54), phnum = r.get<std::uint16_t>(56);
  const unsigned shentsize = r.get<std::uint16_t>(58), shnum = r.get<std::uint16_t>(60);

  MemoryImage img;
  if (phnum > 0) {
    if (phentsize != kPhdrSize)
      throw LoadError(LoadErrorKind::MalformedProgramHeader, 54, fmt::format("e_phentsize {} != 56", phentsize));
    if (!r.has(phoff, std::uint64_t{phnum} * kPhdrSize))
      throw LoadError(LoadErrorKind::MalformedProgramHeader, phoff, "program header table beyond end of file");
  }
  for (unsigned i = 0; i < phnum; ++i) {
    const std::uint64_t ph = phoff + std::uint64_t{i} * kPhdrSize;
    if (r.get<std::uint32_t>(ph) != kPtLoad) continue;
    const auto flags = r.get<std::uint32_t>(ph + 4);
    const auto off = r.get<std::uint64_t>(ph + 8), vaddr = r.get<std::uint64_t>(ph + 16);
    const auto filesz = r.get<std::uint64_t>(ph + 32), memsz = r.get<std::uint64_t>(ph + 40);
    if (filesz > memsz) throw LoadError(LoadErrorKind::MalformedProgramHeader, ph + 32, "p_filesz exceeds p_memsz");
    if (!r.has(off, filesz))
      throw LoadError(LoadErrorKind::MalformedProgramHeader, ph + 8, "segment contents beyond end of file");
    if (vaddr + memsz < vaddr) throw LoadError(LoadErrorKind::MalformedProgramHeader, ph + 16, "segment wraps around");
    if (memsz == 0) continue;
    Segment seg{vaddr, {}, (flags & kPfX) != 0};
    const auto content = r.slice(off, filesz);
    seg.bytes.assign(content.begin(), content.end());
    seg.bytes.resize(memsz, 0);
    img.segments.push_back(std::move(seg));
  }
  std::sort(img.segments.begin(), img.segments.end(), [](const Segment& a, const Segment& b) { return a.base < b.base; });
  for (std::size_t i = 1; i < img.segments.size(); ++i)
    if (img.segments[i].base < img.segments[i - 1].end())
      throw LoadError(LoadErrorKind::OverlappingSegments, phoff,
                      fmt::format("segments at {:#x} and {:#x} overlap", img.segments[i - 1].base, img.segments[i].base));

  if (img.executable_segment_at(entry) != nullptr) img.entry = entry;
  for (auto& s : read_symbols(r, shoff, shentsize, shnum))
    if (img.segment_at(s.address) != nullptr) img.symbols.push_back(std::move(s));
  std::stable_sort(img.symbols.begin(), img.symbols.end(),
                   [](const Symbol& a, const Symbol& b) { return a.address < b.address; });
  return img;
}

MemoryImage load_raw(std::span<const std::uint8_t> bytes, Address base) {
  MemoryImage img;
  img.segments.push_back(Segment{base, {bytes.begin(), bytes.end()}, true});
  return img;
}

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(fmt::format("cannot open '{}'", path));
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace rvrop::image
