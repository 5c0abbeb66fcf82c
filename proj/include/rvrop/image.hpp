#pragma once

// Program bytes plus the little metadata the analyses need.

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rvrop/isa.hpp"

namespace rvrop::image {

using isa::Address;

struct Segment {
  Address base = 0;
  std::vector<std::uint8_t> bytes;
  bool executable = false;

  [[nodiscard]] Address end() const { return base + bytes.size(); }
  [[nodiscard]] bool contains(Address a) const { return a >= base && a < end(); }
};

struct Symbol {
  std::string name;
  Address address = 0;
  std::uint64_t size = 0;
  bool function = false;
};

struct MemoryImage {
  std::vector<Segment> segments;  // sorted by base
  std::optional<Address> entry;
  std::vector<Symbol> symbols;

  [[nodiscard]] const Segment* segment_at(Address a) const;
  [[nodiscard]] const Segment* executable_segment_at(Address a) const;
  /// nullopt outside every segment.
  [[nodiscard]] std::optional<std::uint8_t> read_byte(Address a) const;
  /// Bytes from `a` to the end of its segment (empty outside every segment).
  [[nodiscard]] std::span<const std::uint8_t> bytes_from(Address a) const;
  /// Decodes at `a` within an executable segment.
  [[nodiscard]] std::optional<isa::Instr> decode_at(Address a) const;
};

enum class LoadErrorKind {
  BadMagic,
  WrongClass,
  WrongEndianness,
  WrongMachine,
  TruncatedHeader,
  MalformedProgramHeader,
  OverlappingSegments,
};

[[nodiscard]] std::string_view to_string(LoadErrorKind kind);

class LoadError : public std::runtime_error {
 public:
  LoadError(LoadErrorKind kind, std::uint64_t offset, const std::string& detail);
  [[nodiscard]] LoadErrorKind kind() const { return kind_; }
  [[nodiscard]] std::uint64_t offset() const { return offset_; }

 private:
  LoadErrorKind kind_;
  std::uint64_t offset_;
};

inline constexpr std::uint16_t kMachineRiscV = 243;

[[nodiscard]] MemoryImage load_elf(std::span<const std::uint8_t> bytes);
[[nodiscard]] MemoryImage load_raw(std::span<const std::uint8_t> bytes, Address base);

/// Reads a whole file; throws std::runtime_error when it cannot be opened.
[[nodiscard]] std::vector<std::uint8_t> read_file(const std::string& path);

}  // namespace rvrop::image
