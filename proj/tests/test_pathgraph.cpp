#include <doctest.h>

#include <random>

#include "rvrop/gadgets.hpp"
#include "rvrop/isa.hpp"
#include "rvrop/pathgraph.hpp"
#include "support.hpp"

using namespace rvrop;
using namespace rvrop::pathgraph;

namespace {

image::MemoryImage raw(const std::string& program, isa::Address base = 0x1000) {
  return image::load_raw(isa::assemble_program(program), base);
}

std::set<isa::Address> node_set(const PathGraph& g) {
  std::set<isa::Address> out;
  for (const auto& [a, n] : g.nodes) out.insert(a);
  return out;
}

}  // namespace

TEST_CASE("overlapping pair gives two nodes") {
  const auto img = image::load_raw(std::vector<std::uint8_t>{0x13, 0x4F, 0x83, 0x23, 0x0B, 0x00}, 0);
  const auto g = build(img);
  CHECK(node_set(g) == std::set<isa::Address>{0, 2});
  // Both fall through past the end of the bytes.
  CHECK(g.nodes.at(0).succ.empty());
  CHECK(g.nodes.at(0).dangling == std::vector<isa::Address>{4});
  CHECK(g.nodes.at(2).dangling == std::vector<isa::Address>{6});
  CHECK(g.poi.empty());
  CHECK(prune_coreachable(g).nodes.empty());
}

TEST_CASE("a lone return is its own PoI") {
  const auto g = build(raw("c.jr ra"));
  CHECK(g.nodes.size() == 1);
  CHECK(g.poi == std::set<isa::Address>{0x1000});
  CHECK(prune_coreachable(g) == g);
  const auto bg = merge_blocks(g);
  CHECK(bg.blocks.size() == 1);
}

TEST_CASE("empty input") {
  const auto g = build(image::load_raw(std::vector<std::uint8_t>{}, 0));
  CHECK(g.nodes.empty());
  CHECK(merge_blocks(g).blocks.empty());
  CHECK(to_dot(merge_blocks(g), {}) == "digraph pathgraph {\n  node [shape=box, fontname=\"monospace\"];\n}\n");
}

TEST_CASE("pruning drops code that cannot reach a PoI") {
  // addi; ret; then an infinite loop that never reaches a PoI.
  const auto img = raw("addi a0,a0,1; c.jr ra; c.j 0");
  const auto g = build(img);
  const auto p = prune_coreachable(g);
  CHECK(node_set(p) == testsupport::brute_coreachable(img));
  CHECK_FALSE(p.contains(0x1006));
  CHECK(p.contains(0x1000));
  CHECK(p.contains(0x1004));
  CHECK(prune_coreachable(p) == p);
}

TEST_CASE("graph agrees with the decoder oracles on random code") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 60; ++i) {
    const auto img = image::load_raw(testsupport::random_code(rng, 192), 0x4000);
    const auto g = build(img);
    CHECK(node_set(g) == testsupport::brute_decodable(img));
    const auto p = prune_coreachable(g);
    CHECK(node_set(p) == testsupport::brute_coreachable(img));
    CHECK(prune_coreachable(p) == p);
    for (const auto& [a, n] : p.nodes)
      for (auto s : n.succ) CHECK(p.contains(s));
    const auto bg = merge_blocks(p);
    CHECK(flatten(bg) == p);
    std::size_t total = 0;
    for (const auto& b : bg.blocks) total += b.addrs.size();
    CHECK(total == p.nodes.size());
  }
}

TEST_CASE("a straight chain is one block") {
  const auto p = prune_coreachable(build(raw("c.li a0,1; c.addi a0,2; c.mv a1,a0; c.jr ra")));
  const auto bg = merge_blocks(p);
  REQUIRE(bg.blocks.size() == 1);
  CHECK(bg.blocks[0].addrs == std::vector<isa::Address>{0x1000, 0x1002, 0x1004, 0x1006});
}

TEST_CASE("a hidden entry that falls into the chain splits it") {
  // At +2 the addi's upper half is c.li zero,5, which falls into the add.
  const auto p = prune_coreachable(build(raw("addi a0,a0,1; add a1,a1,a0; c.li a2,3; c.jr ra")));
  const auto bg = merge_blocks(p);
  CHECK(bg.block_of.at(0x1000) != bg.block_of.at(0x1004));
  CHECK(bg.block_of.at(0x1008) == bg.block_of.at(0x100a));
  CHECK(flatten(bg) == p);
}

TEST_CASE("a diamond splits into four blocks") {
  // 0x1000 beqz a0 -> 0x100a; 0x1002..: then-arm jumps to the join.
  const auto img = raw(
      "c.beqz a0,10\n"      // 0x1000
      "c.li a1,1\n"         // 0x1002
      "c.li a2,2\n"         // 0x1004
      "c.j 6\n"             // 0x1006 -> 0x100c
      "c.li a1,2\n"         // 0x1008 (dead, pruned? no: it falls into 0x100a)
      "c.li a1,3\n"         // 0x100a
      "c.jr ra\n");         // 0x100c
  const auto p = prune_coreachable(build(img));
  const auto bg = merge_blocks(p);
  CHECK(bg.block_of.at(0x1000) != bg.block_of.at(0x1002));
  CHECK(bg.block_of.at(0x1002) == bg.block_of.at(0x1006));
  CHECK(bg.block_of.at(0x100a) != bg.block_of.at(0x100c));
  std::set<std::size_t> distinct;
  for (auto a : {0x1000, 0x1002, 0x100a, 0x100c}) distinct.insert(bg.block_of.at(a));
  CHECK(distinct.size() == 4);
  CHECK(flatten(bg) == p);
}

TEST_CASE("DOT of the hidden-gadget fixture") {
  const auto img = testsupport::function15c_raw();
  const auto bg = merge_blocks(prune_coreachable(build(img)));
  const auto dot = to_dot(bg, gadgets::compute_mep(img));
  CHECK(dot == testsupport::read_text(testsupport::fixture_path("function15c.dot")));
  std::size_t grey = 0;
  for (auto pos = dot.find("fillcolor=grey"); pos != std::string::npos; pos = dot.find("fillcolor=grey", pos + 1)) ++grey;
  CHECK(grey == 1);
  CHECK(bg.blocks.size() == 4);
}

TEST_CASE("self loop gets its own block") {
  const auto g = build(raw("c.beqz a0,0; c.jr ra"));
  const auto bg = merge_blocks(prune_coreachable(g));
  CHECK(bg.block_of.at(0x1000) != bg.block_of.at(0x1002));
  CHECK(flatten(bg) == prune_coreachable(g));
}
