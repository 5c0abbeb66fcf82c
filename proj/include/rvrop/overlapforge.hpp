#pragma once

// Carrier synthesis: choose ordinary 4-byte instructions whose bytes, read
// from 2 bytes in, decode to a requested hidden instruction stream ending in
// a compressed jump.
//
// With carriers c_0..c_n and hidden 4-byte elements h_0..h_{n-1}:
//   h_j = high(c_j) | low(c_{j+1}) << 16,   escape jump = high(c_n).

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "rvrop/isa.hpp"

namespace rvrop::overlapforge {

struct OperandConstraint {
  enum class Kind { Fixed, AnyOf, Free };
  Kind kind = Kind::Free;
  isa::Operand fixed;
  std::vector<unsigned> regs;  // AnyOf

  static OperandConstraint free() { return {}; }
  static OperandConstraint fix(isa::Operand op) { return {Kind::Fixed, op, {}}; }
  static OperandConstraint any_of(std::vector<unsigned> r) { return {Kind::AnyOf, {}, std::move(r)}; }

  [[nodiscard]] bool admits(const isa::Operand& op) const;
};

struct HiddenTemplate {
  std::string mnemonic;
  std::vector<OperandConstraint> operands;  // in decoded operand order
};

/// 4-byte templates followed by exactly one "c.j" with a fixed offset.
struct HiddenSpec {
  std::vector<HiddenTemplate> sequence;
};

struct CarrierPolicy {
  std::vector<std::string> carriers{"lui"};
  std::vector<unsigned> destinations{10, 11, 12, 13, 14, 15, 16, 17};
  bool distinct_destinations = true;
};

/// Mnemonics usable as carriers: their upper halfword is entirely immediate
/// (or register) bits, so any value can be placed there.
[[nodiscard]] const std::vector<std::string>& carrier_families();

/// Named register sets: callee-saved, temporaries, arguments, any.
[[nodiscard]] std::optional<std::vector<unsigned>> register_set(std::string_view name);

class SpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Throws SpecError unless the hidden sequence and policy are well formed.
void validate(const HiddenSpec& spec, const CarrierPolicy& policy);

struct OverlapPlan {
  std::vector<isa::InstrSpec> carriers;
  std::vector<isa::InstrSpec> hidden;
  bool base_free = true;  // the escape jump is pc-relative, so any base works

  friend bool operator==(const OverlapPlan&, const OverlapPlan&) = default;
};

struct Unsat {
  std::size_t position = 0;  // index into the hidden sequence
  std::string reason;
};

[[nodiscard]] std::variant<OverlapPlan, Unsat> synthesize(const HiddenSpec& spec, const CarrierPolicy& policy = {});

/// Carrier bytes laid out back to back.
[[nodiscard]] std::vector<std::uint8_t> layout(const OverlapPlan& plan);

struct VerifyResult {
  bool ok = true;
  std::size_t position = 0;
  std::string reason;
};

[[nodiscard]] VerifyResult verify(const OverlapPlan& plan);

class UnsupportedCarrier : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// C source whose compilation is meant to produce the carriers as lui
/// instructions loading call arguments.
[[nodiscard]] std::string emit_c(const OverlapPlan& plan, const std::string& function_name);

// JSON surface. Spec files look like
//   {"hidden": [{"mnemonic": "addi", "operands": [{"any_of": "callee-saved"}, "any", "free"]},
//               {"mnemonic": "c.j", "operands": [8]}],
//    "policy": {"carriers": ["lui"], "destinations": "arguments", "distinct_destinations": true}}
// Operands: register name or integer (fixed), "any"/"free", or
// {"any_of": <set name or list of register names>}.
struct SpecFile {
  HiddenSpec spec;
  CarrierPolicy policy;
};
[[nodiscard]] SpecFile parse_spec_json(std::string_view text);
[[nodiscard]] std::string plan_to_json(const OverlapPlan& plan);

}  // namespace rvrop::overlapforge
