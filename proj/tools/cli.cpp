#include "cli.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cbproof/algebra.hpp"
#include "cbproof/checker.hpp"
#include "cbproof/evaluator.hpp"
#include "cbproof/kernel.hpp"
#include "cbproof/nonuniform.hpp"
#include "cbproof/prooffmt.hpp"
#include "cbproof/translator.hpp"

namespace cbp::cli {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw Error(msg); }

Value parse_value(const std::string& text) {
  if (text.empty()) fail("expected a number, got an empty string");
  for (char ch : text)
    if (!std::isdigit(static_cast<unsigned char>(ch)))
      fail("'" + text + "' is not a decimal number");
  return Value(text);
}

std::vector<Value> parse_value_list(const std::string& text) {
  std::vector<Value> out;
  if (text.empty()) return out;
  std::stringstream items(text);
  std::string item;
  while (std::getline(items, item, ',')) out.push_back(parse_value(item));
  return out;
}

std::string binary_string(const Value& v) {
  if (v == 0) return "0";
  std::string s;
  for (Value t = v; t != 0; t >>= 1) s.push_back((t & 1) != 0 ? '1' : '0');
  std::reverse(s.begin(), s.end());
  return s;
}

ProofGraph load_valid(const std::filesystem::path& path) {
  ProofGraph g = load_proof(path);
  auto diags = validate_graph(g);
  if (!diags.empty()) {
    std::string msg = "'" + path.string() + "' is not a well-formed proof";
    for (const auto& d : diags) msg += "\n  " + d.node + ": " + d.message;
    fail(msg);
  }
  return g;
}

void ensure_parent(const std::filesystem::path& p) {
  auto dir = p.parent_path();
  if (!dir.empty()) std::filesystem::create_directories(dir);
}

OracleFn resolve_oracle_source(const std::string& src, const std::filesystem::path& base) {
  if (src.rfind("builtin:", 0) == 0) return builtin_oracle(src.substr(8));
  if (src.ends_with(".adv")) return advice_oracle(load_advice(base / src));
  if (src.ends_with(".cbp")) {
    auto path = base / src;
    ProofGraph sub = load_proof(path);
    OracleEnv sub_env = env_for(sub, path.parent_path());
    return subgraph_oracle(std::move(sub), std::move(sub_env));
  }
  fail("cannot resolve oracle source '" + src + "'");
}

// Finite derivations over srec have no direct reading as a recursion along a
// cycle; rewrite them first so translate and bound apply uniformly.
ProofGraph cycle_form(ProofGraph g, bool* converted) {
  bool has_srec = std::any_of(g.nodes.begin(), g.nodes.end(), [](const Node& n) {
    return n.rule.rule == Rule::SRec;
  });
  if (has_srec && classify(g).cls == Verdict::Class::BDerivation) {
    g = srec_to_cycle(g);
    if (converted) *converted = true;
  }
  return g;
}

int cmd_check(const std::string& file, std::ostream& out) {
  ProofGraph g = load_valid(file);
  Verdict v = classify(g);
  out << g.name << ": " << to_string(v.cls) << "\n";
  out << "  progressing: " << (v.progressing ? "yes" : "no") << "\n";
  out << "  safe: " << (v.safe ? "yes" : "no") << "\n";
  out << "  left-leaning: " << (v.left_leaning ? "yes" : "no") << "\n";
  for (const auto& r : v.reasons) out << "  reason: " << r << "\n";
  if (v.witness) out << "  witness: " << to_string(*v.witness) << "\n";
  return v.cls == Verdict::Class::Rejected ? 1 : 0;
}

int cmd_eval(const std::string& file, const std::string& node,
             const std::string& normal_list, const std::string& safe_list,
             long long fuel, const std::vector<std::string>& oracle_specs,
             std::ostream& out) {
  ProofGraph g = load_valid(file);
  auto base = std::filesystem::path(file).parent_path();

  OracleEnv env;
  for (const auto& spec : oracle_specs) {
    auto eq = spec.find('=');
    if (eq == std::string::npos) fail("--oracle expects NAME=SOURCE, got '" + spec + "'");
    env.bind(spec.substr(0, eq), resolve_oracle_source(spec.substr(eq + 1), base));
  }
  for (const auto& [name, d] : g.oracles) {
    if (env.find(name)) continue;
    OracleFn f = resolve_oracle_source(d.source, base);
    f.kind = d.kind;
    env.bind(name, std::move(f));
  }

  std::string at = node.empty() ? g.root().id : node;
  Value v = eval(g, at, parse_value_list(normal_list), parse_value_list(safe_list),
                 env, {fuel});
  out << "value " << v << "\n";
  out << "binary " << binary_string(v) << "\n";
  return 0;
}

int cmd_translate(const std::string& file, const std::string& out_path,
                  const std::string& report_path, std::ostream& out) {
  ProofGraph g = load_valid(file);
  bool converted = false;
  g = cycle_form(std::move(g), &converted);

  if (!report_path.empty()) {
    Verdict v = classify(g);
    StructureReport sr = structure_check(g);
    nlohmann::json j;
    j["graph"] = g.name;
    j["classification"] = to_string(v.cls);
    j["converted_srec"] = converted;
    j["cycles"] = nlohmann::json::array();
    for (const auto& p : sr.paths)
      j["cycles"].push_back({{"companion", p.companion},
                             {"bud", p.bud_node},
                             {"slot", p.bud_slot},
                             {"progress", p.progress},
                             {"safety_violations", p.safety_violations},
                             {"left_violations", p.left_violations}});
    j["all_progress"] = sr.all_progress;
    j["none_unsafe"] = sr.none_unsafe;
    j["none_right"] = sr.none_right;
    j["agrees_with_trace_checkers"] =
        sr.all_progress == v.progressing && sr.none_unsafe == v.safe &&
        sr.none_right == v.left_leaning;
    std::ofstream rf(report_path);
    if (!rf) fail("cannot write report to '" + report_path + "'");
    rf << j.dump(2) << "\n";
  }

  auto term = translate(g);
  std::string text = algebra::serialize_term(term);
  if (out_path.empty()) {
    out << text << "\n";
  } else {
    ensure_parent(out_path);
    std::ofstream f(out_path);
    if (!f) fail("cannot write '" + out_path + "'");
    f << text << "\n";
    out << "wrote " << out_path << "\n";
  }
  return 0;
}

int cmd_bound(const std::string& file, bool term_mode, std::ostream& out) {
  algebra::TermPtr term;
  if (term_mode) {
    std::ifstream f(file);
    if (!f) fail("cannot open term file '" + file + "'");
    std::stringstream buf;
    buf << f.rdbuf();
    term = algebra::parse_term(buf.str());
  } else {
    term = translate(cycle_form(load_valid(file), nullptr));
  }
  out << "p(n) = " << to_string(algebra::bound_poly(term)) << "\n";
  return 0;
}

int cmd_factor(const std::string& file, const std::string& out_path, std::ostream& out) {
  ProofGraph g = load_valid(file);
  auto pr = check_progressing(g);
  if (!pr.ok) fail("'" + g.name + "' is not progressing; refusing to factor");
  FactorResult res = factor(g);
  std::filesystem::path main_out = out_path;
  ensure_parent(main_out);
  save_proof(res.graph, main_out);
  out << "wrote " << main_out.string() << "\n";
  // Definition files sit next to the main output under the names its oracle
  // declarations reference.
  auto dir = main_out.parent_path();
  for (const auto& [name, def] : res.definitions) {
    auto p = dir / (name + ".cbp");
    save_proof(def, p);
    out << "wrote " << p.string() << "\n";
  }
  return 0;
}

int cmd_expand(const std::string& file, const std::string& oracle, int depth,
               const std::string& out_path, std::ostream& out) {
  ProofGraph g = load_valid(file);
  auto it = g.oracles.find(oracle);
  if (it == g.oracles.end())
    fail("'" + g.name + "' declares no oracle named '" + oracle + "'");
  OracleEnv env = env_for(g, std::filesystem::path(file).parent_path());
  const OracleFn* fn = env.find(oracle);
  if (!fn) fail("oracle '" + oracle + "' is unbound");
  ProofGraph ex = expand_relation(it->second, *fn, depth);
  if (out_path.empty()) {
    out << serialize_proof(ex);
  } else {
    ensure_parent(out_path);
    save_proof(ex, out_path);
    out << "wrote " << out_path << "\n";
  }
  return 0;
}

int cmd_circuit_encode(const std::string& file, const std::string& decode_bits,
                       std::ostream& out) {
  if (!decode_bits.empty()) {
    std::vector<bool> bits;
    for (char ch : decode_bits) {
      if (ch != '0' && ch != '1') fail("--decode expects a string of 0s and 1s");
      bits.push_back(ch == '1');
    }
    out << serialize_circuit(decode_circuit(bits));
    return 0;
  }
  Circuit c = load_circuit(file);
  auto bits = encode_circuit(c);
  std::string s;
  for (bool b : bits) s.push_back(b ? '1' : '0');
  out << "bits " << s << "\n";
  out << "length " << bits.size() << "\n";
  return 0;
}

int cmd_circuit_pipeline(const std::string& family, const std::string& input,
                         bool via_proof, long long fuel, std::ostream& out) {
  auto fam = find_family(family);
  if (!fam)
    fail("unknown circuit family '" + family +
         "' (available: parity, majority, constant-0, constant-1)");
  Value in = parse_value(input);
  bool bit;
  if (via_proof) {
    ProofGraph g = family_pipeline_graph(*fam);
    OracleEnv env = env_for(g);
    Value width = fam->description_bound(bit_length(in));
    if (width > 1'000'000) fail("the description width for this input is too large");
    Value v = eval(g, {repunit(width.convert_to<int>()), in}, {}, env, {fuel});
    bit = v != 0;
  } else {
    bit = pipeline_eval(*fam, in);
  }
  out << "output " << (bit ? 1 : 0) << "\n";
  return 0;
}

int cmd_circuit_compile(const std::string& family, const std::string& out_path,
                        bool pipeline, std::ostream& out) {
  auto fam = find_family(family);
  if (!fam)
    fail("unknown circuit family '" + family +
         "' (available: parity, majority, constant-0, constant-1)");
  ProofGraph g = pipeline ? family_pipeline_graph(*fam) : compile_family_to_proof(*fam);
  if (out_path.empty()) {
    out << serialize_proof(g);
  } else {
    ensure_parent(out_path);
    save_proof(g, out_path);
    out << "wrote " << out_path << "\n";
  }
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  register_family_builtins();

  CLI::App app{"checker, evaluator and compiler for cyclic safe-normal proofs", "cbproof"};
  app.require_subcommand(1);
  int code = 0;

  auto* check = app.add_subcommand("check", "validate and classify a proof graph");
  std::string check_file;
  check->add_option("file", check_file, "proof file (.cbp)")->required();
  check->callback([&] { code = cmd_check(check_file, out); });

  auto* ev = app.add_subcommand("eval", "evaluate a proof on concrete arguments");
  std::string ev_file, ev_node, ev_normals, ev_safes;
  long long ev_fuel = 10'000'000;
  std::vector<std::string> ev_oracles;
  ev->add_option("file", ev_file, "proof file (.cbp)")->required();
  ev->add_option("--node", ev_node, "evaluate the subderivation at this node");
  ev->add_option("--normal", ev_normals, "comma-separated normal arguments");
  ev->add_option("--safe", ev_safes, "comma-separated safe arguments");
  ev->add_option("--fuel", ev_fuel, "rule applications before giving up");
  ev->add_option("--oracle", ev_oracles,
                 "bind NAME=SOURCE (builtin:<name>, file.adv or file.cbp)");
  ev->callback([&] {
    code = cmd_eval(ev_file, ev_node, ev_normals, ev_safes, ev_fuel, ev_oracles, out);
  });

  auto* tr = app.add_subcommand("translate", "compile a proof into a recursion term");
  std::string tr_file, tr_out, tr_report;
  tr->add_option("file", tr_file, "proof file (.cbp)")->required();
  tr->add_option("-o,--output", tr_out, "write the term here instead of stdout");
  tr->add_option("--report", tr_report, "write a JSON cycle-structure report");
  tr->callback([&] { code = cmd_translate(tr_file, tr_out, tr_report, out); });

  auto* bd = app.add_subcommand("bound", "polynomial growth bound of a proof or term");
  std::string bd_file;
  bool bd_term = false;
  bd->add_option("file", bd_file, "proof file, or a term file with --term")->required();
  bd->add_flag("--term", bd_term, "treat the input as a serialized term");
  bd->callback([&] { code = cmd_bound(bd_file, bd_term, out); });

  auto* fc = app.add_subcommand("factor", "excise oracle-like regions into subproof files");
  std::string fc_file, fc_out;
  fc->add_option("file", fc_file, "proof file (.cbp)")->required();
  fc->add_option("-o,--output", fc_out, "main output file; definitions go next to it")
      ->required();
  fc->callback([&] { code = cmd_factor(fc_file, fc_out, out); });

  auto* ex = app.add_subcommand("expand", "unroll a length relation to a finite depth");
  std::string ex_file, ex_oracle, ex_out;
  int ex_depth = 4;
  ex->add_option("file", ex_file, "proof file declaring the oracle")->required();
  ex->add_option("oracle", ex_oracle, "oracle name to expand")->required();
  ex->add_option("--depth", ex_depth, "agree on all tuples with lengths below this")
      ->required();
  ex->add_option("-o,--output", ex_out, "write the derivation here instead of stdout");
  ex->callback([&] { code = cmd_expand(ex_file, ex_oracle, ex_depth, ex_out, out); });

  auto* ce = app.add_subcommand("circuit-encode", "encode a circuit file, or decode bits");
  std::string ce_file, ce_decode;
  ce->add_option("file", ce_file, "circuit file (.circ)");
  ce->add_option("--decode", ce_decode, "decode this 0/1 string instead");
  ce->callback([&] {
    if (ce_file.empty() == ce_decode.empty())
      throw CLI::ValidationError("circuit-encode", "give a circuit file or --decode, not both");
    code = cmd_circuit_encode(ce_file, ce_decode, out);
  });

  auto* cp = app.add_subcommand("circuit-pipeline",
                                "run a circuit family on an input via its description");
  std::string cp_family, cp_input;
  bool cp_via_proof = false;
  long long cp_fuel = 10'000'000;
  cp->add_option("--family", cp_family, "parity, majority, constant-0 or constant-1")
      ->required();
  cp->add_option("--input", cp_input, "input value (decimal)")->required();
  cp->add_flag("--via-proof", cp_via_proof,
               "evaluate through the compiled proof instead of the term");
  cp->add_option("--fuel", cp_fuel, "rule applications before giving up");
  cp->callback([&] {
    code = cmd_circuit_pipeline(cp_family, cp_input, cp_via_proof, cp_fuel, out);
  });

  auto* cc = app.add_subcommand("circuit-compile",
                                "emit the cyclic proof that streams a family's description");
  std::string cc_family, cc_out;
  bool cc_pipeline = false;
  cc->add_option("--family", cc_family, "parity, majority, constant-0 or constant-1")
      ->required();
  cc->add_option("-o,--output", cc_out, "write the proof here instead of stdout");
  cc->add_flag("--pipeline", cc_pipeline, "include the host evaluation step");
  cc->callback([&] { code = cmd_circuit_compile(cc_family, cc_out, cc_pipeline, out); });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e, out, err);
    return rc == 0 ? 0 : 2;
  } catch (const FuelExhausted& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return code;
}

}  // namespace cbp::cli
