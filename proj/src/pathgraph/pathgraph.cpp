#include "rvrop/pathgraph.hpp"

#include <algorithm>
#include <deque>

#include <fmt/format.h>

namespace rvrop::pathgraph {

std::size_t PathGraph::edge_count() const {
  std::size_t n = 0;
  for (const auto& [a, node] : nodes) n += node.succ.size();
  return n;
}

std::map<Address, std::vector<Address>> PathGraph::predecessors() const {
  std::map<Address, std::vector<Address>> pred;
  for (const auto& [a, node] : nodes)
    for (Address s : node.succ) pred[s].push_back(a);
  return pred;
}

PathGraph build(const image::MemoryImage& img) {
  PathGraph g;
  for (const auto& seg : img.segments) {
    if (!seg.executable) continue;
    for (Address a = seg.base + (seg.base & 1); a < seg.end(); a += 2) {
      if (auto in = img.decode_at(a)) g.nodes.emplace(a, Node{std::move(*in), {}, {}});
    }
  }
  for (auto& [a, node] : g.nodes) {
    for (Address s : isa::successors(node.instr)) (g.contains(s) ? node.succ : node.dangling).push_back(s);
    const auto k = node.instr.flow.kind;
    if (k == isa::Flow::IndirectJump || k == isa::Flow::IndirectCall) g.poi.insert(a);
  }
  return g;
}

PathGraph prune_coreachable(const PathGraph& g) {
  const auto pred = g.predecessors();
  std::set<Address> keep(g.poi.begin(), g.poi.end());
  std::deque<Address> work(g.poi.begin(), g.poi.end());
  while (!work.empty()) {
    const Address a = work.front();
    work.pop_front();
    const auto it = pred.find(a);
    if (it == pred.end()) continue;
    for (Address p : it->second)
      if (keep.insert(p).second) work.push_back(p);
  }

  PathGraph out;
  out.poi = g.poi;
  for (const auto& [a, node] : g.nodes) {
    if (!keep.count(a)) continue;
    Node n{node.instr, {}, node.dangling};
    // Edges to pruned nodes disappear; the target was decodable, so it is
    // not dangling either.
    for (Address s : node.succ)
      if (keep.count(s)) n.succ.push_back(s);
    out.nodes.emplace(a, std::move(n));
  }
  return out;
}

BlockGraph merge_blocks(const PathGraph& g) {
  const auto pred = g.predecessors();
  auto is_leader = [&](Address a) {
    const auto it = pred.find(a);
    if (it == pred.end() || it->second.size() != 1) return true;
    const Address p = it->second.front();
    if (p == a) return true;
    const Node& pn = g.nodes.at(p);
    return pn.succ.size() != 1 || pn.instr.flow.kind != isa::Flow::Fallthrough;
  };

  BlockGraph bg;
  bg.graph = g;
  std::set<Address> placed;
  auto grow = [&](Address leader) {
    Block b;
    Address a = leader;
    while (true) {
      b.addrs.push_back(a);
      placed.insert(a);
      const Node& n = g.nodes.at(a);
      if (n.succ.size() != 1 || n.instr.flow.kind != isa::Flow::Fallthrough) break;
      const Address next = n.succ.front();
      if (placed.count(next) || is_leader(next)) break;
      a = next;
    }
    bg.blocks.push_back(std::move(b));
  };
  for (const auto& [a, node] : g.nodes)
    if (is_leader(a)) grow(a);
  // Anything left sits on a leaderless cycle; start a block at its lowest address.
  for (const auto& [a, node] : g.nodes)
    if (!placed.count(a)) grow(a);

  std::sort(bg.blocks.begin(), bg.blocks.end(),
            [](const Block& x, const Block& y) { return x.addrs.front() < y.addrs.front(); });
  for (std::size_t i = 0; i < bg.blocks.size(); ++i)
    for (Address a : bg.blocks[i].addrs) bg.block_of[a] = i;
  for (auto& b : bg.blocks) {
    for (Address s : g.nodes.at(b.addrs.back()).succ) b.succ.push_back(bg.block_of.at(s));
  }
  return bg;
}

PathGraph flatten(const BlockGraph& bg) {
  PathGraph out;
  out.poi = bg.graph.poi;
  for (const auto& b : bg.blocks) {
    for (std::size_t i = 0; i < b.addrs.size(); ++i) {
      const Node& orig = bg.graph.nodes.at(b.addrs[i]);
      Node n{orig.instr, {}, orig.dangling};
      if (i + 1 < b.addrs.size()) {
        n.succ.push_back(b.addrs[i + 1]);
      } else {
        for (std::size_t s : b.succ) n.succ.push_back(bg.blocks[s].addrs.front());
      }
      out.nodes.emplace(b.addrs[i], std::move(n));
    }
  }
  return out;
}

std::string to_dot(const BlockGraph& bg, const std::set<Address>& mep) {
  std::string out = "digraph pathgraph {\n  node [shape=box, fontname=\"monospace\"];\n";
  for (const auto& b : bg.blocks) {
    std::string label;
    bool hidden = true;
    for (Address a : b.addrs) {
      if (mep.count(a)) hidden = false;
      label += fmt::format("{:#x}  {}\\l", a, isa::format(bg.graph.nodes.at(a).instr));
    }
    out += fmt::format("  b{:x} [label=\"{}\"{}];\n", b.addrs.front(), label,
                       hidden ? ", style=filled, fillcolor=grey" : "");
  }
  for (const auto& b : bg.blocks)
    for (std::size_t s : b.succ) out += fmt::format("  b{:x} -> b{:x};\n", b.addrs.front(), bg.blocks[s].addrs.front());
  out += "}\n";
  return out;
}

}  // namespace rvrop::pathgraph
