#include "rvrop/cli.hpp"

#include <algorithm>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "rvrop/gadgets.hpp"
#include "rvrop/image.hpp"
#include "rvrop/overlapforge.hpp"
#include "rvrop/pathgraph.hpp"

namespace rvrop::cli {

namespace {

struct InputOptions {
  std::string path;
  bool raw = false;
  std::string base;
  std::string hex;  // decode only
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::uint64_t parse_base(const std::string& s) {
  std::string_view v = s;
  if (v.size() > 2 && v[0] == '0' && (v[1] == 'x' || v[1] == 'X')) v.remove_prefix(2);
  if (v.empty() || v.find_first_not_of("0123456789abcdefABCDEF") != std::string_view::npos || v.size() > 16)
    throw UsageError(fmt::format("--base expects a hexadecimal address, got '{}'", s));
  return std::stoull(std::string(v), nullptr, 16);
}

std::vector<std::uint8_t> parse_hex_bytes(const std::string& s) {
  std::string digits;
  for (char c : s)
    if (!std::isspace(static_cast<unsigned char>(c))) digits += c;
  if (digits.size() % 2 != 0 || digits.find_first_not_of("0123456789abcdefABCDEF") != std::string::npos)
    throw UsageError("--hex expects pairs of hexadecimal digits");
  std::vector<std::uint8_t> out;
  for (std::size_t i = 0; i < digits.size(); i += 2)
    out.push_back(static_cast<std::uint8_t>(std::stoul(digits.substr(i, 2), nullptr, 16)));
  return out;
}

image::MemoryImage load(const InputOptions& in) {
  if (in.raw && in.base.empty()) throw UsageError("--raw requires --base");
  if (!in.raw && !in.base.empty()) throw UsageError("--base only applies with --raw");
  std::vector<std::uint8_t> bytes;
  try {
    bytes = image::read_file(in.path);
  } catch (const std::runtime_error& e) {
    throw InputError(e.what());
  }
  if (in.raw) return image::load_raw(bytes, parse_base(in.base));
  try {
    return image::load_elf(bytes);
  } catch (const image::LoadError& e) {
    throw InputError(fmt::format("{}: {}", in.path, e.what()));
  }
}

void add_input(CLI::App* cmd, InputOptions& in, bool path_required = true) {
  auto* p = cmd->add_option("input", in.path, "ELF64 RISC-V executable, or raw bytes with --raw");
  if (path_required) p->required();
  cmd->add_flag("--raw", in.raw, "treat the input as raw code bytes");
  cmd->add_option("--base", in.base, "load address of raw input (hex)");
}

gadgets::Format text_or_json(const std::string& f, std::string_view cmd) {
  if (f == "json") return gadgets::Format::Json;
  if (f == "text") return gadgets::Format::Text;
  throw UsageError(fmt::format("{} supports --format json|text", cmd));
}

gadgets::EnumerateResult full_scan(const image::MemoryImage& img, gadgets::Limits limits,
                                   gadgets::EnumerateOptions opts) {
  const auto g = pathgraph::prune_coreachable(pathgraph::build(img));
  return gadgets::enumerate_gadgets(pathgraph::merge_blocks(g), gadgets::compute_mep(img), limits, opts);
}

void note_truncation(const gadgets::EnumerateResult& r, std::ostream& err) {
  if (r.truncated) err << "note: some starts reach a point of interest only beyond --max-insns/--max-lcsajs\n";
}

nlohmann::ordered_json listing_json(const isa::Instr& in, bool mep) {
  nlohmann::ordered_json o;
  o["address"] = fmt::format("{:#x}", in.address);
  std::string hex;
  for (auto b : in.bytes()) hex += fmt::format("{:02x}", b);
  o["bytes-hex"] = hex;
  o["mnemonic"] = in.mnemonic;
  o["asm"] = isa::format(in);
  o["mep"] = mep;
  return o;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"RISC-V superset disassembly and hidden gadget toolkit", "rvrop"};
  app.require_subcommand(1);

  InputOptions input;
  gadgets::Limits limits;
  std::string format;
  std::size_t window = gadgets::kDefaultWindow;
  bool diff = false, emit_c = false, unpruned = false, all_suffixes = false;
  std::string spec_path, function_name = "function15c";

  auto* scan = app.add_subcommand("scan", "multi-LCSAJ gadgets over the superset graph");
  auto* galileo = app.add_subcommand("galileo", "baseline backward scan from returns");
  auto* graph = app.add_subcommand("graph", "pruned block graph as Graphviz text");
  auto* synth = app.add_subcommand("synth", "carrier synthesis for a hidden instruction spec");
  auto* decode = app.add_subcommand("decode", "superset listing of every decodable halfword offset");

  for (auto* cmd : {scan, galileo}) {
    add_input(cmd, input);
    cmd->add_option("--max-insns", limits.max_instructions, "instruction limit per gadget")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--max-lcsajs", limits.max_lcsajs, "LCSAJ limit per gadget")->check(CLI::PositiveNumber);
    cmd->add_option("--format", format, "json or text (default text)");
  }
  scan->add_flag("--all-suffixes", all_suffixes, "also report multi-LCSAJ gadgets that are suffixes of others");
  galileo->add_option("--window", window, "largest gadget span in bytes, return included");
  galileo->add_flag("--diff", diff, "compare against the full scan");
  add_input(graph, input);
  graph->add_flag("--unpruned", unpruned, "keep nodes that reach no point of interest");
  graph->add_option("--format", format, "dot");
  synth->add_option("spec", spec_path, "JSON hidden-sequence spec")->required();
  synth->add_flag("--emit-c", emit_c, "also print a C stub materialising the carriers");
  synth->add_option("--function", function_name, "name of the emitted C function");
  add_input(decode, input, false);
  decode->add_option("--hex", input.hex, "decode these bytes instead of a file");
  decode->add_option("--format", format, "json or text (default text)");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << "run 'rvrop --help' for usage\n";
    return kUsage;
  }

  try {
    if (scan->parsed()) {
      const auto fmt_ = text_or_json(format.empty() ? "text" : format, "scan");
      const auto img = load(input);
      const auto r = full_scan(img, limits, {all_suffixes});
      out << gadgets::report(r.gadgets, fmt_);
      note_truncation(r, err);
      return kOk;
    }

    if (galileo->parsed()) {
      const auto fmt_ = text_or_json(format.empty() ? "text" : format, "galileo");
      if (window < 2 || window % 2 != 0) throw UsageError("--window must be even and at least 2");
      const auto img = load(input);
      const auto base = gadgets::galileo_scan(img, window);
      if (!diff) {
        out << gadgets::report(base, fmt_);
        return kOk;
      }
      const auto full = full_scan(img, limits, {});
      const auto d = gadgets::diff_scans(base, full.gadgets);
      if (fmt_ == gadgets::Format::Json) {
        nlohmann::ordered_json o;
        o["baseline"] = d.baseline;
        o["full"] = d.full;
        o["only_full"] = d.only_full.size();
        o["only_full_hep"] = d.only_full_hep;
        o["missed"] = d.missed_multi;
        o["gadgets"] = nlohmann::ordered_json::parse(gadgets::report(d.only_full, gadgets::Format::Json));
        out << o.dump(2) << "\n";
      } else {
        out << gadgets::diff_summary(d);
        if (!d.only_full.empty()) out << "\n" << gadgets::report(d.only_full, gadgets::Format::Text);
      }
      note_truncation(full, err);
      return kOk;
    }

    if (graph->parsed()) {
      if (!format.empty() && format != "dot") throw UsageError("graph supports --format dot");
      const auto img = load(input);
      auto g = pathgraph::build(img);
      if (!unpruned) g = pathgraph::prune_coreachable(g);
      out << pathgraph::to_dot(pathgraph::merge_blocks(g), gadgets::compute_mep(img));
      return kOk;
    }

    if (synth->parsed()) {
      std::vector<std::uint8_t> text;
      try {
        text = image::read_file(spec_path);
      } catch (const std::runtime_error& e) {
        throw InputError(e.what());
      }
      overlapforge::SpecFile spec;
      try {
        spec = overlapforge::parse_spec_json(std::string(text.begin(), text.end()));
      } catch (const overlapforge::SpecError& e) {
        throw InputError(fmt::format("{}: {}", spec_path, e.what()));
      }
      const auto result = overlapforge::synthesize(spec.spec, spec.policy);
      if (const auto* u = std::get_if<overlapforge::Unsat>(&result)) {
        err << fmt::format("unsat at position {}: {}\n", u->position, u->reason);
        return kUnsat;
      }
      const auto& plan = std::get<overlapforge::OverlapPlan>(result);
      out << overlapforge::plan_to_json(plan);
      if (emit_c) {
        try {
          out << "\n" << overlapforge::emit_c(plan, function_name);
        } catch (const overlapforge::UnsupportedCarrier& e) {
          err << "error: " << e.what() << "\n";
          return kUsage;
        }
      }
      return kOk;
    }

    if (decode->parsed()) {
      const auto fmt_ = text_or_json(format.empty() ? "text" : format, "decode");
      image::MemoryImage img;
      if (!input.hex.empty()) {
        if (!input.path.empty()) throw UsageError("decode takes either an input file or --hex");
        img = image::load_raw(parse_hex_bytes(input.hex), input.base.empty() ? 0 : parse_base(input.base));
      } else {
        if (input.path.empty()) throw UsageError("decode needs an input file or --hex");
        img = load(input);
      }
      const auto mep = gadgets::compute_mep(img);
      const auto g = pathgraph::build(img);
      if (fmt_ == gadgets::Format::Json) {
        auto arr = nlohmann::ordered_json::array();
        for (const auto& [a, node] : g.nodes) arr.push_back(listing_json(node.instr, mep.count(a) != 0));
        out << (arr.empty() ? "[]" : arr.dump(2)) << "\n";
      } else {
        for (const auto& [a, node] : g.nodes) {
          std::string hex;
          for (auto b : node.instr.bytes()) hex += fmt::format("{:02x} ", b);
          out << fmt::format("{:#x}  {:<12} {}  {}\n", a, hex, mep.count(a) ? "mep" : "hep", isa::format(node.instr));
        }
      }
      return kOk;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }
  return kUsage;
}

}  // namespace rvrop::cli
