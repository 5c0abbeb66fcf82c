#include <doctest.h>

#include <algorithm>
#include <random>

#include <json.hpp>

#include "rvrop/gadgets.hpp"
#include "rvrop/isa.hpp"
#include "support.hpp"

using namespace rvrop;
using namespace rvrop::gadgets;

namespace {

EnumerateResult scan(const image::MemoryImage& img, Limits limits = {}, EnumerateOptions opts = {}) {
  const auto g = pathgraph::prune_coreachable(pathgraph::build(img));
  return enumerate_gadgets(pathgraph::merge_blocks(g), compute_mep(img), limits, opts);
}

std::vector<std::string> asm_of(const Gadget& g) {
  std::vector<std::string> out;
  for (const auto& in : g.path) out.push_back(isa::format(in));
  return out;
}

std::map<std::pair<isa::Address, isa::Address>, testsupport::BrutePath> as_map(const std::vector<Gadget>& gs) {
  std::map<std::pair<isa::Address, isa::Address>, testsupport::BrutePath> out;
  for (const auto& g : gs) out[{g.start(), g.terminal()}] = {g.addresses(), g.lcsaj_count};
  return out;
}

bool same(const std::map<std::pair<isa::Address, isa::Address>, testsupport::BrutePath>& a,
          const std::map<std::pair<isa::Address, isa::Address>, testsupport::BrutePath>& b) {
  return std::equal(a.begin(), a.end(), b.begin(), b.end(), [](const auto& x, const auto& y) {
    return x.first == y.first && x.second.addrs == y.second.addrs && x.second.lcsajs == y.second.lcsajs;
  });
}

}  // namespace

TEST_CASE("hidden gadget in the fixture") {
  const auto img = testsupport::function15c_raw();
  const auto r = scan(img);
  CHECK_FALSE(r.truncated);
  CHECK(r.gadgets.size() == 13);
  std::vector<const Gadget*> multi;
  for (const auto& g : r.gadgets)
    if (g.kind == Kind::MultiLcsaj) multi.push_back(&g);
  REQUIRE(multi.size() == 1);
  const Gadget& g = *multi[0];
  CHECK(g.start() == 0x1000a);
  CHECK(g.terminal() == 0x10020);
  CHECK(g.lcsaj_count == 2);
  CHECK(g.width_bytes() == 18);
  CHECK(asm_of(g) == std::vector<std::string>{"addi s3,a4,363", "lui t1,0x26372", "j .+8", "ld ra,8(sp)", "li a0,0",
                                              "addi sp,sp,16", "ret"});
  CHECK(g.hep == std::vector<bool>{true, true, true, false, false, false, false});

  std::set<isa::Address> starts;
  for (const auto& x : r.gadgets)
    if (x.kind == Kind::StraightLine) starts.insert(x.start());
  CHECK(starts == std::set<isa::Address>{0x10000, 0x10002, 0x10004, 0x10008, 0x1000c, 0x10010, 0x10014, 0x10016,
                                         0x1001a, 0x1001c, 0x1001e, 0x10020});
}

TEST_CASE("mep of raw and linked fixture") {
  const auto raw = compute_mep(testsupport::function15c_raw());
  const auto elf = compute_mep(image::load_elf(testsupport::read_fixture("function15c.elf")));
  for (auto a : {0x1000a, 0x1000e, 0x10012}) {
    CHECK_FALSE(raw.count(a));
    CHECK_FALSE(elf.count(a));
  }
  CHECK(elf.count(0x10000));
  CHECK(elf.count(0x10020));
  CHECK(raw.count(0x10008));
}

TEST_CASE("baseline scan on the fixture") {
  const auto img = testsupport::function15c_raw();
  const auto base = galileo_scan(img);
  std::vector<isa::Address> starts;
  for (const auto& g : base) {
    starts.push_back(g.start());
    CHECK(g.terminal() == 0x10020);
    CHECK(g.kind == Kind::StraightLine);
    for (const auto& in : g.path) CHECK(isa::format(in) != "lui t1,0x26372");
  }
  CHECK(starts == std::vector<isa::Address>{0x1001a, 0x1001c, 0x1001e, 0x10020});

  const auto d = diff_scans(base, scan(img).gadgets);
  CHECK(d.baseline == 4);
  CHECK(d.full == 13);
  CHECK(d.only_full.size() == 9);
  CHECK(d.only_full_hep == 1);
  CHECK(d.missed_multi == 1);
  CHECK(diff_summary(d) == "baseline: 4\nfull: 13\nonly-full: 9\nonly-full-hep: 1\nmissed: 1\n");
}

TEST_CASE("baseline window") {
  const auto img = image::load_raw(isa::assemble_program("c.nop; c.nop; nop; c.jr ra"), 0x100);
  CHECK(galileo_scan(img, 2).size() == 1);
  CHECK(galileo_scan(img, 6).size() == 2);
  CHECK(galileo_scan(img, 8).size() == 3);
  CHECK(galileo_scan(img).size() == 4);
  CHECK_THROWS_AS((void)galileo_scan(img, 3), std::invalid_argument);
  CHECK_THROWS_AS((void)galileo_scan(img, 0), std::invalid_argument);
  // Non-return indirect jumps do not anchor the baseline.
  CHECK(galileo_scan(image::load_raw(isa::assemble("c.jr a5"), 0)).empty());
}

TEST_CASE("limits cut paths and flag truncation") {
  const auto img = testsupport::function15c_raw();
  const auto r = scan(img, {1, 1});
  REQUIRE(r.gadgets.size() == 1);
  CHECK(r.gadgets[0].start() == 0x10020);
  CHECK(r.truncated);
  CHECK_THROWS_AS((void)scan(img, {0, 1}), std::invalid_argument);
  const auto r2 = scan(img, {32, 1});
  CHECK(std::none_of(r2.gadgets.begin(), r2.gadgets.end(), [](const Gadget& g) { return g.kind == Kind::MultiLcsaj; }));
  CHECK(r2.truncated);
}

TEST_CASE("lcsaj counting") {
  const auto img = image::load_raw(isa::assemble_program("c.beqz a0,4; c.li a1,1; c.j 2; c.jr ra"), 0);
  std::vector<isa::Instr> fall{*img.decode_at(0), *img.decode_at(2), *img.decode_at(4), *img.decode_at(6)};
  CHECK(count_lcsajs(fall) == 2);  // untaken branch, then the jump
  std::vector<isa::Instr> taken{*img.decode_at(0), *img.decode_at(4), *img.decode_at(6)};
  CHECK(count_lcsajs(taken) == 3);
  // A call's fallthrough does not start a new sequence.
  const auto call = image::load_raw(isa::assemble_program("jal ra,.+64; c.jr ra"), 0);
  CHECK(count_lcsajs({*call.decode_at(0), *call.decode_at(4)}) == 1);
}

TEST_CASE("paths are walkable and minimal") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 40; ++i) {
    const auto img = image::load_raw(testsupport::random_code(rng, 160), 0x8000);
    const Limits limits{12, 3};
    const auto r = scan(img, limits, {true});
    for (const auto& g : r.gadgets) {
      CHECK(g.path.size() <= limits.max_instructions);
      CHECK(g.lcsaj_count <= limits.max_lcsajs);
      CHECK(g.lcsaj_count == count_lcsajs(g.path));
      for (std::size_t k = 0; k + 1 < g.path.size(); ++k) {
        const auto s = isa::successors(g.path[k]);
        CHECK(std::find(s.begin(), s.end(), g.path[k + 1].address) != s.end());
      }
    }
    CHECK(same(as_map(r.gadgets), testsupport::brute_gadgets(img, limits)));
    auto pruned = testsupport::brute_gadgets(img, limits);
    testsupport::drop_multi_suffixes(pruned);
    CHECK(same(as_map(scan(img, limits).gadgets), pruned));
  }
}

TEST_CASE("suffix suppression keeps the outermost multi-LCSAJ gadget") {
  const auto img = testsupport::function15c_raw();
  const auto all = scan(img, {}, {true}).gadgets;
  const auto def = scan(img).gadgets;
  CHECK(all.size() >= def.size());
  const auto multi = std::count_if(all.begin(), all.end(), [](const Gadget& g) { return g.kind == Kind::MultiLcsaj; });
  CHECK(multi >= 2);
}

TEST_CASE("json report") {
  CHECK(report({}, Format::Json) == "[]\n");
  CHECK(report({}, Format::Text).empty());
  const auto img = testsupport::function15c_raw();
  const auto r = scan(img);
  const auto j = nlohmann::json::parse(report(r.gadgets, Format::Json));
  REQUIRE(j.size() == 13);
  const auto it = std::find_if(j.begin(), j.end(), [](const auto& o) { return o["kind"] == "MultiLcsaj"; });
  REQUIRE(it != j.end());
  CHECK((*it)["start"] == "0x1000a");
  CHECK((*it)["terminal"] == "0x10020");
  CHECK((*it)["lcsaj_count"] == 2);
  CHECK((*it)["width_bytes"] == 18);
  const auto& first = (*it)["instructions"][0];
  CHECK(first["mnemonic"] == "addi");
  CHECK(first["operands"] == nlohmann::json::array({"x19", "x14", 363}));
  CHECK(first["hep"] == true);
  CHECK((*it)["instructions"][6]["hep"] == false);
}

TEST_CASE("text report layout") {
  const auto img = image::load_raw(isa::assemble("c.jr ra"), 0x40);
  const auto r = scan(img);
  CHECK(report(r.gadgets, Format::Text) == "gadget 0x40 -> 0x40  StraightLine  lcsajs=1  bytes=2\n  0x40  mep  ret\n");
}
