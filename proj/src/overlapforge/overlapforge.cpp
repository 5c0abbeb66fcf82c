#include "rvrop/overlapforge.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>
#include <json.hpp>

namespace rvrop::overlapforge {

using isa::Operand;
using isa::OperandKind;

bool OperandConstraint::admits(const Operand& op) const {
  switch (kind) {
    case Kind::Fixed: return op == fixed;
    case Kind::AnyOf:
      return op.kind == OperandKind::Reg &&
             std::find(regs.begin(), regs.end(), static_cast<unsigned>(op.value)) != regs.end();
    case Kind::Free: return true;
  }
  return false;
}

const std::vector<std::string>& carrier_families() {
  static const std::vector<std::string> f{"lui", "auipc", "addi", "slti", "sltiu", "xori", "ori", "andi", "addiw"};
  return f;
}

std::optional<std::vector<unsigned>> register_set(std::string_view name) {
  if (name == "callee-saved") return std::vector<unsigned>{8, 9, 18, 19, 20, 21, 22, 23, 24, 25, 26, 27};
  if (name == "temporaries") return std::vector<unsigned>{5, 6, 7, 28, 29, 30, 31};
  if (name == "arguments") return std::vector<unsigned>{10, 11, 12, 13, 14, 15, 16, 17};
  if (name == "any") {
    std::vector<unsigned> all(32);
    for (unsigned i = 0; i < 32; ++i) all[i] = i;
    return all;
  }
  return std::nullopt;
}

namespace {

// Operand list of the all-zero-fields member of a 4-byte family, used to
// check template arity and operand kinds.
std::optional<std::vector<Operand>> sample_operands(std::string_view mnemonic) {
  const auto p = isa::encoding_pattern(mnemonic);
  if (!p || p->width != 4) return std::nullopt;
  const auto in = isa::decode_word(p->match);
  if (!in || in->mnemonic != mnemonic) return std::nullopt;
  return in->operands;
}

bool is_encodable(std::string_view m) {
  const auto all = isa::encodable_mnemonics();
  return std::find(all.begin(), all.end(), m) != all.end();
}

// Final template with both operands explicit.
HiddenTemplate escape_template(const HiddenTemplate& t) {
  HiddenTemplate out = t;
  if (out.operands.size() == 1) out.operands.insert(out.operands.begin(), OperandConstraint::fix(Operand::reg(0)));
  return out;
}

std::uint16_t half(const std::vector<std::uint8_t>& b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

isa::InstrSpec spec_of(const isa::Instr& in) { return {in.mnemonic, in.operands}; }

struct CarrierLow {
  std::uint16_t low;
  unsigned rd;
};

struct Candidate {
  CarrierLow next;      // low half of the following carrier
  std::uint16_t hidden_low;  // high half of the current carrier
};

}  // namespace

void validate(const HiddenSpec& spec, const CarrierPolicy& policy) {
  if (spec.sequence.empty()) throw SpecError("hidden sequence is empty");
  for (std::size_t i = 0; i < spec.sequence.size(); ++i) {
    const auto& t = spec.sequence[i];
    const bool last = i + 1 == spec.sequence.size();
    if (last) {
      if (t.mnemonic != "c.j") throw SpecError(fmt::format("element {}: the sequence must end with c.j", i));
      const auto e = escape_template(t);
      if (e.operands.size() != 2 || e.operands[0].kind != OperandConstraint::Kind::Fixed ||
          e.operands[0].fixed != Operand::reg(0))
        throw SpecError(fmt::format("element {}: c.j takes a single offset", i));
      const auto& off = e.operands[1];
      if (off.kind != OperandConstraint::Kind::Fixed || off.fixed.kind != OperandKind::Imm)
        throw SpecError(fmt::format("element {}: the escape offset must be a fixed integer", i));
      if (off.fixed.value % 2 != 0 || off.fixed.value < -2048 || off.fixed.value > 2046)
        throw SpecError(fmt::format("element {}: escape offset {} is not an even value in [-2048, 2046]", i,
                                    off.fixed.value));
      continue;
    }
    if (!is_encodable(t.mnemonic)) throw SpecError(fmt::format("element {}: unsupported mnemonic '{}'", i, t.mnemonic));
    const auto sample = sample_operands(t.mnemonic);
    if (!sample) throw SpecError(fmt::format("element {}: '{}' is not a 4-byte instruction", i, t.mnemonic));
    if (sample->size() != t.operands.size())
      throw SpecError(fmt::format("element {}: {} takes {} operands, got {}", i, t.mnemonic, sample->size(),
                                  t.operands.size()));
    for (std::size_t k = 0; k < t.operands.size(); ++k) {
      const auto& c = t.operands[k];
      const OperandKind want = (*sample)[k].kind;
      if (c.kind == OperandConstraint::Kind::Fixed && c.fixed.kind != want)
        throw SpecError(fmt::format("element {}: operand {} has the wrong kind", i, k));
      if (c.kind == OperandConstraint::Kind::AnyOf && (want != OperandKind::Reg || c.regs.empty()))
        throw SpecError(fmt::format("element {}: operand {} cannot be a register set", i, k));
    }
  }
  if (policy.carriers.empty()) throw SpecError("policy allows no carrier mnemonic");
  for (const auto& m : policy.carriers)
    if (std::find(carrier_families().begin(), carrier_families().end(), m) == carrier_families().end())
      throw SpecError(fmt::format("'{}' cannot carry an arbitrary upper halfword", m));
  if (policy.destinations.empty()) throw SpecError("policy allows no destination register");
  for (unsigned r : policy.destinations)
    if (r > 31) throw SpecError(fmt::format("destination x{} does not exist", r));
}

std::variant<OverlapPlan, Unsat> synthesize(const HiddenSpec& spec, const CarrierPolicy& policy) {
  validate(spec, policy);
  const std::size_t n = spec.sequence.size() - 1;
  const auto jb = isa::encode("c.j", {Operand::reg(0), escape_template(spec.sequence.back()).operands[1].fixed});
  const std::uint16_t jump = half(jb, 0);

  std::set<unsigned> dests(policy.destinations.begin(), policy.destinations.end());
  std::vector<CarrierLow> lows;
  for (const auto& m : policy.carriers) {
    const auto p = isa::encoding_pattern(m);
    for (unsigned rd : dests) {
      for (std::uint32_t nib = 0; nib < 16; ++nib) {
        const std::uint32_t low = (p->match & 0x7F) | rd << 7 | nib << 12;
        if ((low & p->mask & 0xFFFF) == (p->match & p->mask & 0xFFFF))
          lows.push_back({static_cast<std::uint16_t>(low), rd});
      }
    }
  }
  std::sort(lows.begin(), lows.end(),
            [](const CarrierLow& a, const CarrierLow& b) { return std::tie(a.rd, a.low) < std::tie(b.rd, b.low); });

  std::vector<std::vector<Candidate>> feasible(n);
  for (std::size_t j = 0; j < n; ++j) {
    const auto& t = spec.sequence[j];
    const auto p = *isa::encoding_pattern(t.mnemonic);
    for (const auto& cl : lows) {
      for (std::uint32_t b = 0; b < 512; ++b) {
        const std::uint32_t w = (p.match & 0x7F) | b << 7 | static_cast<std::uint32_t>(cl.low) << 16;
        if ((w & p.mask) != p.match) continue;
        const auto in = isa::decode_word(w);
        if (!in || in->mnemonic != t.mnemonic) continue;
        bool ok = true;
        for (std::size_t k = 0; k < t.operands.size() && ok; ++k) ok = t.operands[k].admits(in->operands[k]);
        if (ok) {
          feasible[j].push_back({cl, static_cast<std::uint16_t>(w & 0xFFFF)});
          break;
        }
      }
    }
    if (feasible[j].empty())
      return Unsat{j, fmt::format("no allowed carrier has a low halfword that {} can use as its upper halfword",
                                  t.mnemonic)};
  }

  // Depth-first over carrier choices in (rd, low) order.
  std::vector<const Candidate*> chosen(n, nullptr);
  std::set<std::pair<std::size_t, std::uint32_t>> dead;
  std::size_t deepest = 0;
  std::optional<CarrierLow> first;
  auto reg_bit = [&](unsigned rd) { return policy.distinct_destinations ? (1U << rd) : 0U; };
  auto dfs = [&](auto&& self, std::size_t j, std::uint32_t used) -> bool {
    deepest = std::max(deepest, j);
    if (dead.count({j, used})) return false;
    if (j == n) {
      for (const auto& cl : lows) {
        if (used & reg_bit(cl.rd)) continue;
        first = cl;
        return true;
      }
    } else {
      for (const auto& c : feasible[j]) {
        if (used & reg_bit(c.next.rd)) continue;
        chosen[j] = &c;
        if (self(self, j + 1, used | reg_bit(c.next.rd))) return true;
      }
    }
    dead.insert({j, used});
    return false;
  };
  if (!dfs(dfs, 0, 0))
    return Unsat{std::min(deepest, n), "not enough distinct destination registers for the carrier chain"};

  std::vector<std::uint32_t> words(n + 1);
  for (std::size_t j = 0; j <= n; ++j) {
    const std::uint16_t low = j == 0 ? first->low : chosen[j - 1]->next.low;
    const std::uint16_t high = j < n ? chosen[j]->hidden_low : jump;
    words[j] = low | static_cast<std::uint32_t>(high) << 16;
  }
  OverlapPlan plan;
  for (std::size_t j = 0; j <= n; ++j) plan.carriers.push_back(spec_of(*isa::decode_word(words[j], 4 * j)));
  for (std::size_t j = 0; j < n; ++j)
    plan.hidden.push_back(spec_of(*isa::decode_word((words[j] >> 16) | (words[j + 1] << 16), 4 * j + 2)));
  plan.hidden.push_back(spec_of(*isa::decode_halfword(jump, 4 * n + 2)));
  return plan;
}

std::vector<std::uint8_t> layout(const OverlapPlan& plan) {
  std::vector<std::uint8_t> out;
  for (const auto& c : plan.carriers) {
    const auto b = isa::encode(c);
    out.insert(out.end(), b.begin(), b.end());
  }
  return out;
}

VerifyResult verify(const OverlapPlan& plan) {
  auto fail = [](std::size_t pos, std::string why) { return VerifyResult{false, pos, std::move(why)}; };
  if (plan.carriers.empty()) {
    if (plan.hidden.empty()) return {};
    return fail(0, "hidden instructions without carriers");
  }
  const std::size_t n = plan.carriers.size() - 1;
  if (plan.hidden.size() != plan.carriers.size())
    return fail(std::min(plan.hidden.size(), plan.carriers.size()),
                fmt::format("{} carriers cannot hide {} instructions", plan.carriers.size(), plan.hidden.size()));

  std::vector<std::uint8_t> bytes;
  for (std::size_t j = 0; j <= n; ++j) {
    std::vector<std::uint8_t> b;
    try {
      b = isa::encode(plan.carriers[j]);
    } catch (const isa::EncodeError& e) {
      return fail(j, fmt::format("carrier does not encode: {}", e.what()));
    }
    if (b.size() != 4) return fail(j, "carrier is not a 4-byte instruction");
    bytes.insert(bytes.end(), b.begin(), b.end());
  }

  for (std::size_t j = 0; j <= n; ++j) {
    const auto span = std::span<const std::uint8_t>(bytes);
    const auto carrier = isa::decode(span.subspan(4 * j), 4 * j);
    if (!carrier || spec_of(*carrier) != plan.carriers[j]) return fail(j, "carrier does not re-decode to itself");
    const auto hidden = isa::decode(span.subspan(4 * j + 2), 4 * j + 2);
    if (!hidden) return fail(j, "nothing decodes 2 bytes into the carrier");
    if (spec_of(*hidden) != plan.hidden[j])
      return fail(j, fmt::format("2 bytes in decodes as '{}'", isa::format(*hidden)));
    const auto cls = isa::overlap_class(*carrier);
    if (j < n) {
      if (hidden->width != 4) return fail(j, "hidden instruction before the escape jump is compressed");
      if (cls != isa::OverlapClass::I1Candidate) return fail(j, "carrier cannot chain into a 4-byte instruction");
    } else {
      if (hidden->width != 2 || hidden->flow.kind != isa::Flow::DirectJump)
        return fail(j, "hidden sequence does not end in a compressed direct jump");
      if (cls != isa::OverlapClass::I2) return fail(j, "final carrier does not end in a compressed instruction");
    }
  }
  return {};
}

std::string emit_c(const OverlapPlan& plan, const std::string& function_name) {
  std::vector<std::string> args;
  std::set<unsigned> seen;
  for (std::size_t j = 0; j < plan.carriers.size(); ++j) {
    const auto& c = plan.carriers[j];
    if (c.mnemonic != "lui" || c.operands.size() != 2 || c.operands[0].kind != OperandKind::Reg)
      throw UnsupportedCarrier(fmt::format("carrier {} ({}) is not a lui", j, c.mnemonic));
    const auto rd = static_cast<unsigned>(c.operands[0].value);
    if (rd < isa::regs::a0 || rd > isa::regs::a7)
      throw UnsupportedCarrier(fmt::format("carrier {} loads {}, not an argument register", j, isa::abi_name(rd)));
    if (!seen.insert(rd).second)
      throw UnsupportedCarrier(fmt::format("carrier {} reuses {}", j, isa::abi_name(rd)));
    const std::size_t slot = rd - isa::regs::a0;
    if (args.size() <= slot) args.resize(slot + 1, "0");
    const auto value = static_cast<std::uint64_t>(c.operands[1].value) << 12;
    args[slot] = value == 0 ? "0" : fmt::format("(signed) {:#x}", value);
  }

  std::string params, call;
  for (std::size_t i = 0; i < args.size(); ++i) {
    params += i ? ", int" : "int";
    call += i ? ", " + args[i] : args[i];
  }
  if (params.empty()) params = "void";
  const std::string callee = fmt::format("dummy{}", args.size());

  std::string out;
  out += "/* Each constant must become a single lui into its argument register and\n";
  out += "   the loads must be adjacent and uncompressed, in this order:\n";
  for (const auto& c : plan.carriers) out += fmt::format("     {}\n", isa::format(*isa::decode(isa::encode(c))));
  out += "   Check the object code: the compiler is free to reorder the loads, pick\n";
  out += "   other registers or fold the constants. */\n";
  out += "extern void dummy(void);\n";
  out += fmt::format("extern void {}({});\n\n", callee, params);
  out += fmt::format("int {}(void) {{\n", function_name);
  out += "  dummy(); /* forces ra to be saved and restored */\n";
  out += fmt::format("  {}({});\n", callee, call);
  out += "  return 0;\n}\n";
  return out;
}

namespace {

using Json = nlohmann::json;

std::vector<unsigned> parse_reg_list(const Json& j, std::string_view what) {
  if (j.is_string()) {
    if (auto set = register_set(j.get<std::string>())) return *set;
    throw SpecError(fmt::format("{}: unknown register set '{}'", what, j.get<std::string>()));
  }
  if (!j.is_array()) throw SpecError(fmt::format("{}: expected a set name or a list of registers", what));
  std::vector<unsigned> out;
  for (const auto& r : j) {
    const auto op = r.is_string() ? isa::parse_register(r.get<std::string>()) : std::nullopt;
    if (!op || op->kind != OperandKind::Reg) throw SpecError(fmt::format("{}: bad register {}", what, r.dump()));
    out.push_back(static_cast<unsigned>(op->value));
  }
  return out;
}

OperandConstraint parse_constraint(const Json& j, std::string_view what) {
  if (j.is_number_integer()) return OperandConstraint::fix(Operand::imm(j.get<std::int64_t>()));
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "any" || s == "free") return OperandConstraint::free();
    if (auto r = isa::parse_register(s)) return OperandConstraint::fix(*r);
    try {
      std::size_t used = 0;
      const auto v = std::stoll(s, &used, 0);
      if (used == s.size()) return OperandConstraint::fix(Operand::imm(v));
    } catch (const std::exception&) {
    }
    throw SpecError(fmt::format("{}: cannot read operand '{}'", what, s));
  }
  if (j.is_object() && j.size() == 1 && j.contains("any_of"))
    return OperandConstraint::any_of(parse_reg_list(j["any_of"], what));
  throw SpecError(fmt::format("{}: cannot read operand {}", what, j.dump()));
}

std::string hex_bytes(const std::vector<std::uint8_t>& b) {
  std::string s;
  for (auto x : b) s += fmt::format("{:02x}", x);
  return s;
}

nlohmann::ordered_json instr_json(const isa::InstrSpec& s) {
  nlohmann::ordered_json o;
  o["mnemonic"] = s.mnemonic;
  auto ops = nlohmann::ordered_json::array();
  for (const auto& op : s.operands) {
    if (op.kind == OperandKind::Imm) ops.push_back(op.value);
    else ops.push_back(fmt::format("{}{}", op.kind == OperandKind::Reg ? 'x' : 'f', op.value));
  }
  o["operands"] = std::move(ops);
  const auto bytes = isa::encode(s);
  o["bytes-hex"] = hex_bytes(bytes);
  o["asm"] = isa::format(*isa::decode(bytes));
  return o;
}

}  // namespace

SpecFile parse_spec_json(std::string_view text) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw SpecError(fmt::format("invalid JSON: {}", e.what()));
  }
  if (!root.is_object() || !root.contains("hidden") || !root["hidden"].is_array())
    throw SpecError("spec must be an object with a \"hidden\" array");

  SpecFile f;
  std::size_t i = 0;
  for (const auto& e : root["hidden"]) {
    const std::string where = fmt::format("hidden[{}]", i++);
    if (!e.is_object() || !e.contains("mnemonic") || !e["mnemonic"].is_string())
      throw SpecError(where + ": expected {\"mnemonic\": ..., \"operands\": [...]}");
    HiddenTemplate t{e["mnemonic"].get<std::string>(), {}};
    if (e.contains("operands")) {
      if (!e["operands"].is_array()) throw SpecError(where + ": operands must be an array");
      for (const auto& op : e["operands"]) t.operands.push_back(parse_constraint(op, where));
    }
    f.spec.sequence.push_back(std::move(t));
  }
  if (root.contains("policy")) {
    const auto& p = root["policy"];
    if (!p.is_object()) throw SpecError("policy must be an object");
    if (p.contains("carriers")) {
      if (!p["carriers"].is_array()) throw SpecError("policy.carriers must be an array");
      f.policy.carriers.clear();
      for (const auto& c : p["carriers"]) {
        if (!c.is_string()) throw SpecError("policy.carriers holds mnemonics");
        f.policy.carriers.push_back(c.get<std::string>());
      }
    }
    if (p.contains("destinations")) f.policy.destinations = parse_reg_list(p["destinations"], "policy.destinations");
    if (p.contains("distinct_destinations")) {
      if (!p["distinct_destinations"].is_boolean()) throw SpecError("policy.distinct_destinations must be a boolean");
      f.policy.distinct_destinations = p["distinct_destinations"].get<bool>();
    }
  }
  validate(f.spec, f.policy);
  return f;
}

std::string plan_to_json(const OverlapPlan& plan) {
  nlohmann::ordered_json o;
  o["carriers"] = nlohmann::ordered_json::array();
  for (const auto& c : plan.carriers) o["carriers"].push_back(instr_json(c));
  o["hidden"] = nlohmann::ordered_json::array();
  for (const auto& h : plan.hidden) o["hidden"].push_back(instr_json(h));
  o["base_free"] = plan.base_free;
  return o.dump(2) + "\n";
}

}  // namespace rvrop::overlapforge
