#pragma once

// Superset disassembly graph: every decodable halfword-aligned address is a
// node, edges are static successors, and indirect transfers are the points of
// interest (PoIs) that gadgets end at.

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "rvrop/image.hpp"
#include "rvrop/isa.hpp"

namespace rvrop::pathgraph {

using isa::Address;

struct Node {
  isa::Instr instr;
  std::vector<Address> succ;      // targets that are nodes
  std::vector<Address> dangling;  // targets outside the scanned code or not decodable

  friend bool operator==(const Node& a, const Node& b) {
    return a.instr.address == b.instr.address && a.instr.width == b.instr.width && a.succ == b.succ &&
           a.dangling == b.dangling;
  }
};

struct PathGraph {
  std::map<Address, Node> nodes;
  std::set<Address> poi;

  [[nodiscard]] bool contains(Address a) const { return nodes.count(a) != 0; }
  [[nodiscard]] std::size_t edge_count() const;
  [[nodiscard]] std::map<Address, std::vector<Address>> predecessors() const;

  friend bool operator==(const PathGraph&, const PathGraph&) = default;
};

[[nodiscard]] PathGraph build(const image::MemoryImage& img);

/// Keeps exactly the nodes from which some PoI is reachable.
[[nodiscard]] PathGraph prune_coreachable(const PathGraph& g);

struct Block {
  std::vector<Address> addrs;
  std::vector<std::size_t> succ;  // indices into BlockGraph::blocks
};

struct BlockGraph {
  PathGraph graph;            // the graph the blocks were merged from
  std::vector<Block> blocks;  // ordered by leader address
  std::map<Address, std::size_t> block_of;
};

/// A block ends at a PoI, at any control transfer, before a node with several
/// predecessors and after a node with several successors.
[[nodiscard]] BlockGraph merge_blocks(const PathGraph& g);

/// Rebuilds the instruction graph from blocks alone.
[[nodiscard]] PathGraph flatten(const BlockGraph& bg);

/// Graphviz text. Blocks with no address in `mep` are filled grey.
[[nodiscard]] std::string to_dot(const BlockGraph& bg, const std::set<Address>& mep);

}  // namespace rvrop::pathgraph
