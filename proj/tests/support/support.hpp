#pragma once

// Shared helpers for the test binaries: fixture access, an ELF writer, a
// random code generator and brute-force oracles that only use the decoder.

#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "rvrop/gadgets.hpp"
#include "rvrop/image.hpp"
#include "rvrop/overlapforge.hpp"

namespace testsupport {

using rvrop::isa::Address;

std::string fixture_path(const std::string& name);
std::vector<std::uint8_t> read_fixture(const std::string& name);
std::string read_text(const std::string& path);

inline constexpr Address kFixtureBase = 0x10000;
rvrop::image::MemoryImage function15c_raw();

// Minimal ELF64 writer.
struct ElfSegment {
  Address vaddr = 0;
  std::vector<std::uint8_t> bytes;
  std::uint32_t flags = 5;  // R|X
  std::uint64_t extra_memsz = 0;
};
struct ElfSymbol {
  std::string name;
  Address value = 0;
  std::uint64_t size = 0;
  bool function = true;
};
std::vector<std::uint8_t> make_elf(Address entry, const std::vector<ElfSegment>& segments,
                                   const std::vector<ElfSymbol>& symbols = {});

// Random code of at most `max_bytes` bytes mixing straight-line
// instructions, jumps, branches, returns, indirect calls and noise.
std::vector<std::uint8_t> random_code(std::mt19937_64& rng, std::size_t max_bytes);

// Oracles. They decode bytes directly and never look at pathgraph output.
std::set<Address> brute_decodable(const rvrop::image::MemoryImage& img);
std::set<Address> brute_coreachable(const rvrop::image::MemoryImage& img);

struct BrutePath {
  std::vector<Address> addrs;
  unsigned lcsajs = 1;
};
// Best path per (start, terminal) by (lcsajs, length, addresses), over all
// simple paths within the limits.
std::map<std::pair<Address, Address>, BrutePath> brute_gadgets(const rvrop::image::MemoryImage& img,
                                                              rvrop::gadgets::Limits limits);
// Same multi-LCSAJ suffix rule as the default report.
void drop_multi_suffixes(std::map<std::pair<Address, Address>, BrutePath>& paths);

// A random hidden spec built from straight-line 4-byte mnemonics.
rvrop::overlapforge::HiddenSpec random_spec(std::mt19937_64& rng, std::size_t max_hidden);

// Carriers followed by compressed nops and a return at the escape target.
std::vector<std::uint8_t> plant(const rvrop::overlapforge::OverlapPlan& plan, std::int64_t escape_offset);

}  // namespace testsupport
