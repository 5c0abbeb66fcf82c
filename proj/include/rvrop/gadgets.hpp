#pragma once

// Gadget discovery over the superset graph, plus the classic backward scan
// from returns used as a baseline.

#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include "rvrop/image.hpp"
#include "rvrop/pathgraph.hpp"

namespace rvrop::gadgets {

using isa::Address;
using MepSet = std::set<Address>;

enum class Kind { StraightLine, MultiLcsaj };
[[nodiscard]] std::string_view to_string(Kind k);

struct Gadget {
  std::vector<isa::Instr> path;
  std::vector<bool> hep;  // per instruction: address outside the MEP
  unsigned lcsaj_count = 1;
  Kind kind = Kind::StraightLine;

  [[nodiscard]] Address start() const { return path.front().address; }
  [[nodiscard]] Address terminal() const { return path.back().address; }
  [[nodiscard]] unsigned width_bytes() const;
  [[nodiscard]] std::vector<Address> addresses() const;
};

/// Linear code sequences along a path: one plus every taken direct jump or
/// taken conditional branch between consecutive elements.
[[nodiscard]] unsigned count_lcsajs(const std::vector<isa::Instr>& path);

[[nodiscard]] MepSet compute_mep(const image::MemoryImage& img);

inline constexpr std::size_t kDefaultWindow = 64;

/// Backward scan from every return. `window` bounds the byte span of a
/// gadget including the return itself; it must be even and >= 2.
[[nodiscard]] std::vector<Gadget> galileo_scan(const image::MemoryImage& img, std::size_t window = kDefaultWindow);

struct Limits {
  std::size_t max_instructions = 32;
  std::size_t max_lcsajs = 4;
};

struct EnumerateOptions {
  /// Report multi-LCSAJ gadgets whose path is a suffix of a longer one.
  bool all_suffixes = false;
};

struct EnumerateResult {
  std::vector<Gadget> gadgets;  // ordered by (terminal, start)
  bool truncated = false;       // some start reaches a PoI only beyond the limits
};

/// One gadget per (start, terminal) pair connected by a path within limits.
/// The reported path minimises (lcsaj_count, length) and then address order.
[[nodiscard]] EnumerateResult enumerate_gadgets(const pathgraph::BlockGraph& bg, const MepSet& mep, Limits limits = {},
                                                EnumerateOptions options = {});

struct DiffReport {
  std::vector<Gadget> only_full;
  std::size_t baseline = 0;
  std::size_t full = 0;
  std::size_t only_full_hep = 0;    // of only_full, those with a hidden instruction
  std::size_t missed_multi = 0;     // of only_full, those spanning several LCSAJs
};

[[nodiscard]] DiffReport diff_scans(const std::vector<Gadget>& galileo, const std::vector<Gadget>& full);
[[nodiscard]] std::string diff_summary(const DiffReport& d);

enum class Format { Json, Text };
[[nodiscard]] std::string report(const std::vector<Gadget>& gadgets, Format format);

}  // namespace rvrop::gadgets
