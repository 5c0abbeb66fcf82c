#include "rvrop/gadgets.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <map>
#include <queue>
#include <stdexcept>

#include <fmt/format.h>
#include <json.hpp>

namespace rvrop::gadgets {

using isa::Flow;
using pathgraph::PathGraph;

std::string_view to_string(Kind k) { return k == Kind::StraightLine ? "StraightLine" : "MultiLcsaj"; }

unsigned Gadget::width_bytes() const {
  unsigned n = 0;
  for (const auto& in : path) n += in.width;
  return n;
}

std::vector<Address> Gadget::addresses() const {
  std::vector<Address> out;
  out.reserve(path.size());
  for (const auto& in : path) out.push_back(in.address);
  return out;
}

namespace {

// 1 when moving from `from` to `to` leaves the current linear sequence.
unsigned jump_cost(const isa::Instr& from, Address to) {
  const Address next = from.address + from.width;
  const Address target = from.address + static_cast<Address>(from.flow.offset);
  switch (from.flow.kind) {
    case Flow::DirectJump: return 1;
    case Flow::CondBranch: return to == target && target != next ? 1 : 0;
    default: return 0;
  }
}

Gadget make_gadget(std::vector<isa::Instr> path, const MepSet& mep) {
  Gadget g;
  g.path = std::move(path);
  for (const auto& in : g.path) g.hep.push_back(mep.count(in.address) == 0);
  g.lcsaj_count = count_lcsajs(g.path);
  g.kind = g.lcsaj_count >= 2 ? Kind::MultiLcsaj : Kind::StraightLine;
  return g;
}

}  // namespace

unsigned count_lcsajs(const std::vector<isa::Instr>& path) {
  unsigned n = 1;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) n += jump_cost(path[i], path[i + 1].address);
  return n;
}

MepSet compute_mep(const image::MemoryImage& img) {
  MepSet mep;
  std::vector<Address> work;
  if (img.entry) work.push_back(*img.entry);
  for (const auto& s : img.symbols)
    if (s.function && img.executable_segment_at(s.address)) work.push_back(s.address);

  if (work.empty()) {
    for (const auto& seg : img.segments) {
      if (!seg.executable) continue;
      Address a = seg.base;
      while (a < seg.end()) {
        if (auto in = img.decode_at(a)) {
          mep.insert(a);
          a += in->width;
        } else {
          a += 2;
        }
      }
    }
    return mep;
  }

  while (!work.empty()) {
    const Address a = work.back();
    work.pop_back();
    if (mep.count(a)) continue;
    const auto in = img.decode_at(a);
    if (!in) continue;
    mep.insert(a);
    for (Address s : isa::successors(*in))
      if (!mep.count(s)) work.push_back(s);
  }
  return mep;
}

std::vector<Gadget> galileo_scan(const image::MemoryImage& img, std::size_t window) {
  if (window < 2 || window % 2 != 0) throw std::invalid_argument("window must be even and at least 2");
  const MepSet mep = compute_mep(img);
  std::vector<Gadget> out;
  for (const auto& seg : img.segments) {
    if (!seg.executable) continue;
    for (Address r = seg.base + (seg.base & 1); r < seg.end(); r += 2) {
      const auto ret = img.decode_at(r);
      if (!ret || !isa::is_return(*ret)) continue;
      const Address end = r + ret->width;
      std::vector<Gadget> found;
      for (Address start = r; start >= seg.base && end - start <= window; start -= 2) {
        std::vector<isa::Instr> seq;
        Address a = start;
        bool ok = true;
        while (a < r) {
          auto in = img.decode_at(a);
          if (!in || in->flow.kind != Flow::Fallthrough) {
            ok = false;
            break;
          }
          a += in->width;
          seq.push_back(std::move(*in));
        }
        if (ok && a == r) {
          seq.push_back(*ret);
          found.push_back(make_gadget(std::move(seq), mep));
        }
        if (start < seg.base + 2) break;
      }
      std::reverse(found.begin(), found.end());
      for (auto& g : found) out.push_back(std::move(g));
    }
  }
  return out;
}

EnumerateResult enumerate_gadgets(const pathgraph::BlockGraph& bg, const MepSet& mep, Limits limits,
                                  EnumerateOptions options) {
  if (limits.max_instructions == 0 || limits.max_lcsajs == 0)
    throw std::invalid_argument("limits must be positive");
  const PathGraph& g = bg.graph;
  const auto pred = g.predecessors();
  constexpr std::size_t kInf = std::numeric_limits<std::size_t>::max();
  const std::size_t K = limits.max_lcsajs, L = limits.max_instructions;

  EnumerateResult result;
  for (const Address t : g.poi) {
    if (!g.contains(t)) continue;

    // dist[k][v]: fewest instructions on a path v -> t with at most k LCSAJs.
    std::vector<std::map<Address, std::size_t>> dist(K + 1);
    auto get = [&](std::size_t k, Address v) {
      const auto it = dist[k].find(v);
      return it == dist[k].end() ? kInf : it->second;
    };
    for (std::size_t k = 1; k <= K; ++k) {
      using Item = std::pair<std::size_t, Address>;
      std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
      auto offer = [&](Address v, std::size_t d) {
        if (d <= L && d < get(k, v)) {
          dist[k][v] = d;
          pq.emplace(d, v);
        }
      };
      offer(t, 1);
      if (k >= 2) {
        for (const auto& [u, du] : dist[k - 1]) {
          const auto it = pred.find(u);
          if (it == pred.end()) continue;
          for (Address p : it->second)
            if (jump_cost(g.nodes.at(p).instr, u) == 1) offer(p, du + 1);
        }
      }
      while (!pq.empty()) {
        const auto [d, x] = pq.top();
        pq.pop();
        if (d != get(k, x)) continue;
        const auto it = pred.find(x);
        if (it == pred.end()) continue;
        for (Address p : it->second)
          if (jump_cost(g.nodes.at(p).instr, x) == 0) offer(p, d + 1);
      }
    }

    // Everything that reaches t at all, to detect starts lost to the limits.
    std::set<Address> reach{t};
    std::deque<Address> work{t};
    while (!work.empty()) {
      const Address x = work.front();
      work.pop_front();
      const auto it = pred.find(x);
      if (it == pred.end()) continue;
      for (Address p : it->second)
        if (reach.insert(p).second) work.push_back(p);
    }

    std::map<Address, Gadget> by_start;
    for (const Address s : reach) {
      std::size_t k = 1;
      while (k <= K && get(k, s) == kInf) ++k;
      if (k > K) {
        result.truncated = true;
        continue;
      }
      std::size_t len = get(k, s);
      std::vector<isa::Instr> path{g.nodes.at(s).instr};
      Address v = s;
      while (v != t) {
        std::vector<Address> succ = g.nodes.at(v).succ;
        std::sort(succ.begin(), succ.end());
        const isa::Instr& cur = g.nodes.at(v).instr;
        for (Address u : succ) {
          const unsigned c = jump_cost(cur, u);
          if (k > c && get(k - c, u) == len - 1) {
            k -= c;
            --len;
            v = u;
            break;
          }
        }
        path.push_back(g.nodes.at(v).instr);
      }
      by_start.emplace(s, make_gadget(std::move(path), mep));
    }

    if (!options.all_suffixes) {
      std::set<Address> drop;
      for (const auto& [s, gad] : by_start) {
        if (gad.kind != Kind::MultiLcsaj) continue;
        const auto addrs = gad.addresses();
        for (std::size_t i = 1; i < addrs.size(); ++i) {
          const auto it = by_start.find(addrs[i]);
          if (it == by_start.end() || it->second.kind != Kind::MultiLcsaj) continue;
          const auto other = it->second.addresses();
          if (std::equal(addrs.begin() + static_cast<std::ptrdiff_t>(i), addrs.end(), other.begin(), other.end()))
            drop.insert(addrs[i]);
        }
      }
      for (Address s : drop) by_start.erase(s);
    }
    for (auto& [s, gad] : by_start) result.gadgets.push_back(std::move(gad));
  }
  return result;
}

DiffReport diff_scans(const std::vector<Gadget>& galileo, const std::vector<Gadget>& full) {
  std::set<std::pair<Address, Address>> base;
  for (const auto& g : galileo) base.emplace(g.start(), g.terminal());
  DiffReport d;
  d.baseline = galileo.size();
  d.full = full.size();
  for (const auto& g : full) {
    if (base.count({g.start(), g.terminal()})) continue;
    d.only_full.push_back(g);
    if (std::find(g.hep.begin(), g.hep.end(), true) != g.hep.end()) ++d.only_full_hep;
    if (g.kind == Kind::MultiLcsaj) ++d.missed_multi;
  }
  return d;
}

std::string diff_summary(const DiffReport& d) {
  return fmt::format("baseline: {}\nfull: {}\nonly-full: {}\nonly-full-hep: {}\nmissed: {}\n", d.baseline, d.full,
                     d.only_full.size(), d.only_full_hep, d.missed_multi);
}

namespace {

nlohmann::ordered_json operand_json(const isa::Operand& op) {
  switch (op.kind) {
    case isa::OperandKind::Reg: return fmt::format("x{}", op.value);
    case isa::OperandKind::FReg: return fmt::format("f{}", op.value);
    case isa::OperandKind::Imm: break;
  }
  return op.value;
}

}  // namespace

std::string report(const std::vector<Gadget>& gadgets, Format format) {
  if (format == Format::Json) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& g : gadgets) {
      nlohmann::ordered_json o;
      o["start"] = fmt::format("{:#x}", g.start());
      o["terminal"] = fmt::format("{:#x}", g.terminal());
      o["width_bytes"] = g.width_bytes();
      o["lcsaj_count"] = g.lcsaj_count;
      o["kind"] = to_string(g.kind);
      auto instrs = nlohmann::ordered_json::array();
      for (std::size_t i = 0; i < g.path.size(); ++i) {
        const auto& in = g.path[i];
        nlohmann::ordered_json j;
        j["address"] = fmt::format("{:#x}", in.address);
        j["mnemonic"] = in.mnemonic;
        auto ops = nlohmann::ordered_json::array();
        for (const auto& op : in.operands) ops.push_back(operand_json(op));
        j["operands"] = std::move(ops);
        j["hep"] = static_cast<bool>(g.hep[i]);
        instrs.push_back(std::move(j));
      }
      o["instructions"] = std::move(instrs);
      arr.push_back(std::move(o));
    }
    return gadgets.empty() ? "[]\n" : arr.dump(2) + "\n";
  }

  std::string out;
  for (const auto& g : gadgets) {
    if (!out.empty()) out += "\n";
    out += fmt::format("gadget {:#x} -> {:#x}  {}  lcsajs={}  bytes={}\n", g.start(), g.terminal(), to_string(g.kind),
                       g.lcsaj_count, g.width_bytes());
    for (std::size_t i = 0; i < g.path.size(); ++i)
      out += fmt::format("  {:#x}  {}  {}\n", g.path[i].address, g.hep[i] ? "hep" : "mep", isa::format(g.path[i]));
  }
  return out;
}

}  // namespace rvrop::gadgets
