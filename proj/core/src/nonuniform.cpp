#include "cbproof/nonuniform.hpp"

#include <pthread.h>

#include <cctype>
#include <exception>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <utility>

#include "cbproof/prooffmt.hpp"

namespace cbp {

namespace {

int operand_count(GateKind kind) {
  switch (kind) {
    case GateKind::And:
    case GateKind::Or:
      return 2;
    case GateKind::Not:
      return 1;
    case GateKind::C0:
    case GateKind::C1:
      return 0;
  }
  throw Error("unknown gate kind");
}

const char* kind_name(GateKind kind) {
  switch (kind) {
    case GateKind::And: return "and";
    case GateKind::Or: return "or";
    case GateKind::Not: return "not";
    case GateKind::C0: return "c0";
    case GateKind::C1: return "c1";
  }
  throw Error("unknown gate kind");
}

std::optional<GateKind> kind_from_name(const std::string& word) {
  if (word == "and") return GateKind::And;
  if (word == "or") return GateKind::Or;
  if (word == "not") return GateKind::Not;
  if (word == "c0") return GateKind::C0;
  if (word == "c1") return GateKind::C1;
  return std::nullopt;
}

// Width of an operand field when `space` wires are in scope.
int operand_width(int space) {
  return space <= 1 ? 0 : bit_length(Value(space - 1));
}

void gamma_append(std::vector<bool>& out, long long v) {
  int len = bit_length(Value(v));
  for (int i = 0; i < len - 1; ++i) out.push_back(false);
  for (int i = len - 1; i >= 0; --i) out.push_back(((v >> i) & 1) != 0);
}

struct BitCursor {
  const std::vector<bool>& bits;
  std::size_t at = 0;

  bool next() {
    if (at >= bits.size())
      throw DecodeError("the description ends in the middle of a field");
    return bits[at++];
  }
};

long long gamma_read(BitCursor& cur) {
  int zeros = 0;
  while (!cur.next()) {
    if (++zeros > 62) throw DecodeError("the description declares an absurd size");
  }
  long long v = 1;
  for (int i = 0; i < zeros; ++i) v = v * 2 + (cur.next() ? 1 : 0);
  return v;
}

int push_gate(Circuit& c, Gate g) {
  c.gates.push_back(g);
  return c.inputs + static_cast<int>(c.gates.size()) - 1;
}

}  // namespace

void validate_circuit(const Circuit& c) {
  if (c.inputs < 0) throw Error("a circuit cannot have a negative input count");
  if (c.gates.empty()) throw Error("a circuit needs at least one gate");
  for (std::size_t j = 0; j < c.gates.size(); ++j) {
    const Gate& g = c.gates[j];
    int want = operand_count(g.kind);
    int space = c.inputs + static_cast<int>(j);
    auto used = [&](int operand, const char* which) {
      if (operand < 0 || operand >= space)
        throw Error("gate " + std::to_string(j) + ": " + which +
                    " operand is out of range");
    };
    auto unused = [&](int operand) {
      if (operand != -1)
        throw Error("gate " + std::to_string(j) + ": '" +
                    kind_name(g.kind) + "' takes " + std::to_string(want) +
                    " operand(s)");
    };
    if (want >= 1) used(g.a, "first"); else unused(g.a);
    if (want >= 2) used(g.b, "second"); else unused(g.b);
  }
}

bool circuit_eval(const Circuit& c, const std::vector<bool>& inputs) {
  validate_circuit(c);
  if (static_cast<int>(inputs.size()) != c.inputs)
    throw Error("circuit expects " + std::to_string(c.inputs) + " inputs, got " +
                std::to_string(inputs.size()));
  std::vector<bool> wire(inputs);
  wire.reserve(inputs.size() + c.gates.size());
  for (const Gate& g : c.gates) {
    switch (g.kind) {
      case GateKind::And: wire.push_back(wire[g.a] && wire[g.b]); break;
      case GateKind::Or: wire.push_back(wire[g.a] || wire[g.b]); break;
      case GateKind::Not: wire.push_back(!wire[g.a]); break;
      case GateKind::C0: wire.push_back(false); break;
      case GateKind::C1: wire.push_back(true); break;
    }
  }
  return wire.back();
}

std::vector<bool> encode_circuit(const Circuit& c) {
  validate_circuit(c);
  std::vector<bool> out;
  gamma_append(out, c.inputs + 1);
  gamma_append(out, static_cast<long long>(c.gates.size()) + 1);
  for (std::size_t j = 0; j < c.gates.size(); ++j) {
    const Gate& g = c.gates[j];
    int kind = static_cast<int>(g.kind);
    for (int i = 2; i >= 0; --i) out.push_back(((kind >> i) & 1) != 0);
    int width = operand_width(c.inputs + static_cast<int>(j));
    auto put = [&](int operand) {
      for (int i = width - 1; i >= 0; --i) out.push_back(((operand >> i) & 1) != 0);
    };
    if (operand_count(g.kind) >= 1) put(g.a);
    if (operand_count(g.kind) >= 2) put(g.b);
  }
  return out;
}

Circuit decode_circuit(const std::vector<bool>& bits) {
  BitCursor cur{bits};
  Circuit c;
  c.inputs = static_cast<int>(gamma_read(cur) - 1);
  long long gates = gamma_read(cur) - 1;
  if (gates == 0) throw DecodeError("the description defines no gates");
  for (long long j = 0; j < gates; ++j) {
    int kind = 0;
    for (int i = 0; i < 3; ++i) kind = kind * 2 + (cur.next() ? 1 : 0);
    if (kind > 4) throw DecodeError("the description uses an unknown gate kind");
    Gate g;
    g.kind = static_cast<GateKind>(kind);
    int space = c.inputs + static_cast<int>(j);
    int width = operand_width(space);
    auto take = [&]() {
      int operand = 0;
      for (int i = 0; i < width; ++i) operand = operand * 2 + (cur.next() ? 1 : 0);
      if (operand >= space)
        throw DecodeError("the description references a wire that is not in scope");
      return operand;
    };
    if (operand_count(g.kind) >= 1) g.a = take();
    if (operand_count(g.kind) >= 2) g.b = take();
    c.gates.push_back(g);
  }
  return c;
}

namespace {

bool is_input_token(const std::string& tok) {
  if (tok.size() < 3 || tok.compare(0, 2, "in") != 0) return false;
  for (std::size_t i = 2; i < tok.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(tok[i]))) return false;
  return true;
}

}  // namespace

Circuit parse_circuit(std::istream& in) {
  Circuit c;
  std::map<std::string, int> names;
  bool have_inputs = false;
  bool have_output = false;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream words(line);
    std::string word;
    if (!(words >> word)) continue;
    if (word == "inputs") {
      if (have_inputs) throw FormatError(lineno, "duplicate inputs directive");
      if (!(words >> c.inputs) || c.inputs < 0)
        throw FormatError(lineno, "inputs expects a non-negative count");
      have_inputs = true;
    } else if (word == "gate") {
      if (!have_inputs)
        throw FormatError(lineno, "the inputs directive must come before gates");
      if (have_output)
        throw FormatError(lineno, "gates must come before the output directive");
      std::string name, kindword;
      if (!(words >> name >> kindword))
        throw FormatError(lineno, "gate expects a name and a kind");
      if (is_input_token(name))
        throw FormatError(lineno, "gate name '" + name + "' is reserved for inputs");
      if (names.count(name))
        throw FormatError(lineno, "duplicate gate '" + name + "'");
      auto kind = kind_from_name(kindword);
      if (!kind) throw FormatError(lineno, "unknown gate kind '" + kindword + "'");
      std::vector<int> ops;
      std::string tok;
      while (words >> tok) {
        if (is_input_token(tok)) {
          int idx = std::stoi(tok.substr(2));
          if (idx >= c.inputs)
            throw FormatError(lineno, "input '" + tok + "' is out of range");
          ops.push_back(idx);
        } else {
          auto it = names.find(tok);
          if (it == names.end())
            throw FormatError(lineno, "operand '" + tok + "' is not defined yet");
          ops.push_back(it->second);
        }
      }
      Gate g;
      g.kind = *kind;
      int want = operand_count(g.kind);
      if (static_cast<int>(ops.size()) != want)
        throw FormatError(lineno, "'" + kindword + "' takes " +
                                      std::to_string(want) + " operand(s)");
      if (want >= 1) g.a = ops[0];
      if (want >= 2) g.b = ops[1];
      names[name] = c.inputs + static_cast<int>(c.gates.size());
      c.gates.push_back(g);
    } else if (word == "output") {
      std::string name;
      if (!(words >> name)) throw FormatError(lineno, "output expects a gate name");
      auto it = names.find(name);
      if (it == names.end())
        throw FormatError(lineno, "output names an unknown gate '" + name + "'");
      if (it->second != c.inputs + static_cast<int>(c.gates.size()) - 1)
        throw FormatError(lineno, "output must name the last gate");
      have_output = true;
    } else {
      throw FormatError(lineno, "unknown directive '" + word + "'");
    }
  }
  if (!have_inputs) throw FormatError(lineno, "missing inputs directive");
  if (c.gates.empty()) throw FormatError(lineno, "a circuit needs at least one gate");
  if (!have_output) throw FormatError(lineno, "missing output directive");
  validate_circuit(c);
  return c;
}

Circuit parse_circuit_string(const std::string& text) {
  std::istringstream in(text);
  return parse_circuit(in);
}

Circuit load_circuit(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open circuit file '" + path.string() + "'");
  return parse_circuit(in);
}

std::string serialize_circuit(const Circuit& c) {
  validate_circuit(c);
  std::ostringstream out;
  out << "inputs " << c.inputs << "\n";
  auto token = [&](int wire) {
    return wire < c.inputs ? "in" + std::to_string(wire)
                           : "g" + std::to_string(wire - c.inputs);
  };
  for (std::size_t j = 0; j < c.gates.size(); ++j) {
    const Gate& g = c.gates[j];
    out << "gate g" << j << " " << kind_name(g.kind);
    if (operand_count(g.kind) >= 1) out << " " << token(g.a);
    if (operand_count(g.kind) >= 2) out << " " << token(g.b);
    out << "\n";
  }
  out << "output g" << c.gates.size() - 1 << "\n";
  return out.str();
}

Circuit family_member(const CircuitFamily& fam, int n) {
  if (n < 0) throw Error("circuit families are indexed by input length >= 0");
  if (fam.member_cache)
    if (auto it = fam.member_cache->find(n); it != fam.member_cache->end()) return it->second;
  Circuit c = fam.member(n);
  validate_circuit(c);
  if (c.inputs != n)
    throw Error("family '" + fam.name + "' produced a circuit with " +
                std::to_string(c.inputs) + " inputs for length " +
                std::to_string(n));
  auto bits = encode_circuit(c);
  if (Value(bits.size()) > fam.description_bound(n))
    throw Error("the description of '" + fam.name + "' member " +
                std::to_string(n) + " exceeds the declared bound");
  if (fam.member_cache) fam.member_cache->emplace(n, c);
  return c;
}

CircuitFamily parity_family() {
  CircuitFamily fam;
  fam.name = "parity";
  fam.description_bound = algebra::Poly{{64, 24, 8}};
  fam.member = [](int n) {
    Circuit c;
    c.inputs = n;
    if (n == 0) {
      push_gate(c, {GateKind::C0});
      return c;
    }
    if (n == 1) {
      push_gate(c, {GateKind::Or, 0, 0});
      return c;
    }
    int acc = 0;
    for (int i = 1; i < n; ++i) {
      int either = push_gate(c, {GateKind::Or, acc, i});
      int both = push_gate(c, {GateKind::And, acc, i});
      int not_both = push_gate(c, {GateKind::Not, both});
      acc = push_gate(c, {GateKind::And, either, not_both});
    }
    return c;
  };
  return fam;
}

CircuitFamily majority_family() {
  CircuitFamily fam;
  fam.name = "majority";
  fam.description_bound = algebra::Poly{{64, 32, 32, 8}};
  fam.member = [](int n) {
    Circuit c;
    c.inputs = n;
    if (n == 0) {
      push_gate(c, {GateKind::C0});
      return c;
    }
    int wire_false = push_gate(c, {GateKind::C0});
    int wire_true = push_gate(c, {GateKind::C1});
    int target = n / 2 + 1;
    // th[k][j]: at least j of the first k inputs are set.  The cell for
    // (n, target) is emitted last, so it is the output.
    std::vector<std::vector<int>> th(n + 1, std::vector<int>(target + 1));
    for (int j = 0; j <= target; ++j) th[0][j] = j == 0 ? wire_true : wire_false;
    for (int k = 1; k <= n; ++k) {
      th[k][0] = wire_true;
      for (int j = 1; j <= target; ++j) {
        int carry = push_gate(c, {GateKind::And, k - 1, th[k - 1][j - 1]});
        th[k][j] = push_gate(c, {GateKind::Or, th[k - 1][j], carry});
      }
    }
    return c;
  };
  return fam;
}

CircuitFamily constant_family(bool value) {
  CircuitFamily fam;
  fam.name = value ? "constant-1" : "constant-0";
  fam.description_bound = algebra::Poly{{16, 2}};
  fam.member = [value](int n) {
    Circuit c;
    c.inputs = n;
    push_gate(c, {value ? GateKind::C1 : GateKind::C0});
    return c;
  };
  return fam;
}

std::optional<CircuitFamily> find_family(const std::string& name) {
  if (name == "parity") return parity_family();
  if (name == "majority") return majority_family();
  if (name == "constant-0") return constant_family(false);
  if (name == "constant-1") return constant_family(true);
  return std::nullopt;
}

OracleFn family_oracle(const CircuitFamily& fam) {
  auto cache = std::make_shared<std::map<int, std::vector<bool>>>();
  OracleFn f;
  f.kind = "length-relation";
  f.fn = [cache, fam](const std::vector<Value>& xs, const std::vector<Value>& ys) -> Value {
    if (xs.size() != 2 || !ys.empty())
      throw Error("the description relation for '" + fam.name +
                  "' takes two normal arguments");
    int n = bit_length(xs[0]);
    int i = bit_length(xs[1]);
    auto it = cache->find(n);
    if (it == cache->end())
      it = cache->emplace(n, encode_circuit(family_member(fam, n))).first;
    const auto& bits = it->second;
    return (i < static_cast<int>(bits.size()) && bits[i]) ? 1 : 0;
  };
  return f;
}

DescriptionProgram build_description_term(const CircuitFamily& fam) {
  using namespace algebra;
  const Arity top{2, 0};
  std::string rel = "circ-" + fam.name;
  // desc(y, z ;) = 0 when z = 0, else 2 * desc(y, z/2) + bit(y, z/2): each
  // recursion level shifts the value left and appends the next description
  // bit, so bit 0 ends up on the most significant end of a |z|-wide field.
  TermPtr y = proj_n(0, top);
  TermPtr z = proj_n(1, top);
  TermPtr pz = call(pred({0, 1}), {}, {z}, top);
  TermPtr again = call(oracle_call("desc", top), {y, pz}, {}, top);
  TermPtr bit = call(initial_relation(rel, top), {y, pz}, {}, top);
  TermPtr low = comp_safe(again, succ0({2, 1}));
  TermPtr high = comp_safe(again, succ1({2, 1}));
  TermPtr inner = call(cond({0, 4}), {}, {bit, low, low, high}, top);
  TermPtr body = call(cond({0, 4}), {}, {z, zero(top), inner, inner}, top);

  DescriptionProgram out;
  out.term = rec_pp("desc", body);
  out.relation = rel;
  out.width = fam.description_bound;
  return out;
}

namespace {

struct DeepEvalCall {
  const algebra::TermPtr* term = nullptr;
  const std::vector<Value>* normals = nullptr;
  const std::vector<Value>* safes = nullptr;
  const OracleEnv* env = nullptr;
  Value result;
  std::exception_ptr error;
};

extern "C" void* deep_eval_entry(void* arg) {
  auto* call = static_cast<DeepEvalCall*>(arg);
  try {
    call->result = algebra::eval_term(*call->term, *call->normals, *call->safes, *call->env);
  } catch (...) {
    call->error = std::current_exception();
  }
  return nullptr;
}

// The description recursion descends one level per description bit, which for
// wide families outgrows the default thread stack; evaluate on a worker with
// a roomy one.
Value eval_term_deep(const algebra::TermPtr& term, const std::vector<Value>& normals,
                     const std::vector<Value>& safes, const OracleEnv& env) {
  DeepEvalCall call{&term, &normals, &safes, &env, {}, {}};
  pthread_attr_t attr;
  pthread_t tid;
  if (pthread_attr_init(&attr) != 0 ||
      pthread_attr_setstacksize(&attr, std::size_t(512) << 20) != 0 ||
      pthread_create(&tid, &attr, deep_eval_entry, &call) != 0) {
    pthread_attr_destroy(&attr);
    return algebra::eval_term(term, normals, safes, env);
  }
  pthread_join(tid, nullptr);
  pthread_attr_destroy(&attr);
  if (call.error) std::rethrow_exception(call.error);
  return call.result;
}

}  // namespace

bool pipeline_eval(const CircuitFamily& fam, const Value& input) {
  int len = bit_length(input);
  const Circuit* cached = nullptr;
  if (fam.streamed_cache)
    if (auto it = fam.streamed_cache->find(len); it != fam.streamed_cache->end())
      cached = &it->second;
  Circuit fresh;
  if (!cached) {
    DescriptionProgram prog = build_description_term(fam);
    Value width = prog.width(len);
    if (width > 1'000'000)
      throw Error("the description width for '" + fam.name + "' is too large");
    int k = width.convert_to<int>();
    OracleEnv env;
    env.bind(prog.relation, family_oracle(fam));
    std::vector<Value> normals{input, repunit(k)}, safes;
    Value streamed = eval_term_deep(prog.term, normals, safes, env);
    std::vector<bool> bits(k, false);
    for (int j = 0; j < k; ++j)
      bits[j] = boost::multiprecision::bit_test(streamed, unsigned(k - 1 - j));
    fresh = decode_circuit(bits);
    if (fam.streamed_cache)
      cached = &fam.streamed_cache->emplace(len, std::move(fresh)).first->second;
    else
      cached = &fresh;
  }
  const Circuit& c = *cached;
  std::vector<bool> wires(c.inputs, false);
  for (int i = 0; i < c.inputs && i < len; ++i)
    wires[i] = boost::multiprecision::bit_test(input, unsigned(i));
  return circuit_eval(c, wires);
}

ProofGraph compile_family_to_proof(const CircuitFamily& fam) {
  ProofGraph g;
  g.name = fam.name + "_description";
  std::string rel = "circ-" + fam.name;
  g.oracles[rel] = OracleDecl{rel, 2, 0, "length-relation", "builtin:family-" + fam.name};

  const Sequent top{2, 0, Succ::N};
  auto add = [&g](std::string id, Sequent seq, RuleApp rule,
                  std::vector<std::string> prem) {
    Node n;
    n.id = std::move(id);
    n.seq = seq;
    n.rule = std::move(rule);
    n.premises = std::move(prem);
    g.nodes.push_back(std::move(n));
  };

  // F(z, y ;) = 0 when z = 0, else 2 * F(z/2, y) + bit(y, z/2): the cyclic
  // twin of the description term, recursing through the first normal slot.
  add("loop", top, {Rule::Dis}, {"case"});
  add("case", top, {Rule::CondBox}, {"base", "b0_step", "b1_step"});
  add("base", {1, 0, Succ::N}, {Rule::WeakBox}, {"base_zero"});
  add("base_zero", {0, 0, Succ::N}, {Rule::Zero}, {});
  // The two successor branches are identical up to node names: premises may
  // not share subproofs, so each branch carries its own copy.
  for (std::string p : {std::string("b0_"), std::string("b1_")}) {
    add(p + "step", top, {Rule::CutN}, {"loop", p + "bit"});
    add(p + "bit", {2, 1, Succ::N}, {Rule::CutN}, {p + "drop", p + "split"});
    add(p + "drop", {2, 1, Succ::N}, {Rule::WeakN}, {p + "swap"});
    add(p + "swap", {2, 0, Succ::N}, {Rule::ExchBox, 0}, {p + "ask"});
    add(p + "ask", {2, 0, Succ::N}, {Rule::OracleLeaf, -1, rel}, {});
    add(p + "split", {2, 2, Succ::N}, {Rule::CondN},
        {p + "z_s0", p + "e_s0", p + "o_s1"});
    add(p + "z_s0", {2, 1, Succ::N}, {Rule::S0}, {p + "z_w1"});
    add(p + "z_w1", {2, 1, Succ::N}, {Rule::WeakBox}, {p + "z_w2"});
    add(p + "z_w2", {1, 1, Succ::N}, {Rule::WeakBox}, {p + "z_id"});
    add(p + "z_id", {0, 1, Succ::N}, {Rule::Id}, {});
    add(p + "e_s0", {2, 2, Succ::N}, {Rule::S0}, {p + "e_wn"});
    add(p + "e_wn", {2, 2, Succ::N}, {Rule::WeakN}, {p + "e_w1"});
    add(p + "e_w1", {2, 1, Succ::N}, {Rule::WeakBox}, {p + "e_w2"});
    add(p + "e_w2", {1, 1, Succ::N}, {Rule::WeakBox}, {p + "e_id"});
    add(p + "e_id", {0, 1, Succ::N}, {Rule::Id}, {});
    add(p + "o_s1", {2, 2, Succ::N}, {Rule::S1}, {p + "o_wn"});
    add(p + "o_wn", {2, 2, Succ::N}, {Rule::WeakN}, {p + "o_w1"});
    add(p + "o_w1", {2, 1, Succ::N}, {Rule::WeakBox}, {p + "o_w2"});
    add(p + "o_w2", {1, 1, Succ::N}, {Rule::WeakBox}, {p + "o_id"});
    add(p + "o_id", {0, 1, Succ::N}, {Rule::Id}, {});
  }

  auto diags = validate_graph(g);
  if (!diags.empty())
    throw Error("internal error: compiled family proof is invalid: " +
                diags.front().node + ": " + diags.front().message);
  return g;
}

ProofGraph family_pipeline_graph(const CircuitFamily& fam) {
  ProofGraph g = compile_family_to_proof(fam);
  g.name = fam.name + "_pipeline";
  g.oracles["eval-circuit"] =
      OracleDecl{"eval-circuit", 3, 0, "host", "builtin:eval-circuit"};

  // A cut on the boxed description value hands (pad, d, y ;) to the host,
  // which decodes d at width |pad| and runs the circuit on the bits of y.
  std::vector<Node> head(4);
  head[0].id = "main";
  head[0].seq = {2, 0, Succ::N};
  head[0].rule = {Rule::CutBox};
  head[0].premises = {"boxed", "swap_host"};
  head[1].id = "boxed";
  head[1].seq = {2, 0, Succ::BoxN};
  head[1].rule = {Rule::BoxR};
  head[1].premises = {"loop"};
  head[2].id = "swap_host";
  head[2].seq = {3, 0, Succ::N};
  head[2].rule = {Rule::ExchBox, 0};
  head[2].premises = {"host"};
  head[3].id = "host";
  head[3].seq = {3, 0, Succ::N};
  head[3].rule = {Rule::OracleLeaf, -1, "eval-circuit"};
  g.nodes.insert(g.nodes.begin(), head.begin(), head.end());

  auto diags = validate_graph(g);
  if (!diags.empty())
    throw Error("internal error: pipeline proof is invalid: " +
                diags.front().node + ": " + diags.front().message);
  return g;
}

void register_family_builtins() {
  for (const auto& fam : {parity_family(), majority_family(),
                          constant_family(false), constant_family(true)})
    register_builtin_oracle("family-" + fam.name, family_oracle(fam));

  OracleFn host;
  host.kind = "host";
  host.fn = [](const std::vector<Value>& xs, const std::vector<Value>& ys) -> Value {
    if (xs.size() != 3 || !ys.empty())
      throw Error("eval-circuit expects three normal arguments (pad, description, input)");
    int k = bit_length(xs[0]);
    std::vector<bool> bits(k, false);
    for (int j = 0; j < k; ++j)
      bits[j] = boost::multiprecision::bit_test(xs[1], unsigned(k - 1 - j));
    Circuit c = decode_circuit(bits);
    std::vector<bool> wires(c.inputs, false);
    int len = bit_length(xs[2]);
    for (int i = 0; i < c.inputs && i < len; ++i)
      wires[i] = boost::multiprecision::bit_test(xs[2], unsigned(i));
    return circuit_eval(c, wires) ? 1 : 0;
  };
  register_builtin_oracle("eval-circuit", host);
}

}  // namespace cbp
