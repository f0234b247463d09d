#include "cbproof/prooffmt.hpp"

#include <fstream>
#include <sstream>

namespace cbp {

namespace {

std::string strip_comment(const std::string& line) {
  auto pos = line.find('#');
  return pos == std::string::npos ? line : line.substr(0, pos);
}

int parse_int(const std::string& tok, int lineno, const char* what) {
  try {
    size_t used = 0;
    int v = std::stoi(tok, &used);
    if (used != tok.size() || v < 0) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw FormatError(lineno, std::string("expected a non-negative ") + what + ", found '" + tok + "'");
  }
}

std::string next_tok(std::istringstream& is, int lineno, const char* what) {
  std::string t;
  if (!(is >> t)) throw FormatError(lineno, std::string("missing ") + what);
  return t;
}

void expect_tok(std::istringstream& is, int lineno, const char* lit) {
  std::string t = next_tok(is, lineno, lit);
  if (t != lit) throw FormatError(lineno, std::string("expected '") + lit + "', found '" + t + "'");
}

}  // namespace

ProofGraph parse_proof(std::istream& in) {
  ProofGraph g;
  bool have_header = false;
  std::string raw;
  int lineno = 0;
  std::map<std::string, int> decl_line;

  while (std::getline(in, raw)) {
    ++lineno;
    std::istringstream is(strip_comment(raw));
    std::string kw;
    if (!(is >> kw)) continue;

    if (kw == "proof") {
      if (have_header) throw FormatError(lineno, "duplicate proof header");
      g.name = next_tok(is, lineno, "proof name");
      have_header = true;
    } else if (!have_header) {
      throw FormatError(lineno, "expected 'proof <name>' before '" + kw + "'");
    } else if (kw == "oracle") {
      OracleDecl d;
      d.name = next_tok(is, lineno, "oracle name");
      expect_tok(is, lineno, "normal");
      d.normals = parse_int(next_tok(is, lineno, "normal arity"), lineno, "normal arity");
      expect_tok(is, lineno, "safe");
      d.safes = parse_int(next_tok(is, lineno, "safe arity"), lineno, "safe arity");
      expect_tok(is, lineno, "kind");
      d.kind = next_tok(is, lineno, "oracle kind");
      if (d.kind != "length-relation" && d.kind != "subgraph" && d.kind != "host")
        throw FormatError(lineno, "unknown oracle kind '" + d.kind + "'");
      expect_tok(is, lineno, "source");
      d.source = next_tok(is, lineno, "oracle source");
      if (!g.oracles.emplace(d.name, d).second)
        throw FormatError(lineno, "duplicate oracle '" + d.name + "'");
    } else if (kw == "node") {
      Node n;
      n.id = next_tok(is, lineno, "node id");
      if (decl_line.count(n.id))
        throw FormatError(lineno, "duplicate node id '" + n.id + "'");
      expect_tok(is, lineno, "seq");
      n.seq.normals = parse_int(next_tok(is, lineno, "normal count"), lineno, "normal count");
      n.seq.safes = parse_int(next_tok(is, lineno, "safe count"), lineno, "safe count");
      std::string succ = next_tok(is, lineno, "succedent");
      if (succ == "N") n.seq.succ = Succ::N;
      else if (succ == "boxN") n.seq.succ = Succ::BoxN;
      else throw FormatError(lineno, "succedent must be N or boxN, found '" + succ + "'");
      expect_tok(is, lineno, "rule");
      std::string tag = next_tok(is, lineno, "rule tag");
      auto rule = rule_from_name(tag);
      if (!rule) throw FormatError(lineno, "unknown rule '" + tag + "'");
      n.rule.rule = *rule;
      if (n.rule.rule == Rule::ExchN || n.rule.rule == Rule::ExchBox)
        n.rule.index = parse_int(next_tok(is, lineno, "exchange position"), lineno, "exchange position");
      if (n.rule.rule == Rule::OracleLeaf)
        n.rule.oracle = next_tok(is, lineno, "oracle name");
      std::string rest;
      if (is >> rest) {
        if (rest != "prem")
          throw FormatError(lineno, "expected 'prem', found '" + rest + "'");
        std::string p;
        while (is >> p) n.premises.push_back(p);
        if (n.premises.empty()) throw FormatError(lineno, "'prem' with no premise ids");
      }
      decl_line[n.id] = lineno;
      g.nodes.push_back(std::move(n));
    } else {
      throw FormatError(lineno, "unknown directive '" + kw + "'");
    }
  }
  if (!have_header) throw FormatError(lineno, "missing 'proof <name>' header");
  if (g.nodes.empty()) throw FormatError(lineno, "proof has no nodes");

  // Premises must resolve, and any reference that closes a cycle must enter
  // a dis node. Sequent discipline is validate_graph's business, but a file
  // with a bud into a non-dis node is malformed on its own.
  std::map<std::string, const Node*> byid;
  for (const auto& n : g.nodes) byid[n.id] = &n;
  for (const auto& n : g.nodes)
    for (const auto& p : n.premises)
      if (!byid.count(p))
        throw FormatError(decl_line[n.id], "premise '" + p + "' is not declared");

  std::map<std::string, int> state;
  std::vector<std::pair<const Node*, size_t>> stack;
  state[g.nodes.front().id] = 1;
  stack.push_back({&g.nodes.front(), 0});
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next >= node->premises.size()) {
      state[node->id] = 2;
      stack.pop_back();
      continue;
    }
    const Node* tgt = byid.at(node->premises[next]);
    ++next;
    int st = state[tgt->id];
    if (st == 0) {
      state[tgt->id] = 1;
      stack.push_back({tgt, 0});
    } else if (st == 1 && tgt->rule.rule != Rule::Dis) {
      throw FormatError(decl_line[node->id],
                        "back-reference to '" + tgt->id + "', which is not a dis node");
    }
  }
  return g;
}

ProofGraph parse_proof_string(const std::string& s) {
  std::istringstream is(s);
  return parse_proof(is);
}

ProofGraph load_proof(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open proof file '" + path.string() + "'");
  return parse_proof(in);
}

std::string serialize_proof(const ProofGraph& g) {
  std::ostringstream os;
  os << "proof " << g.name << "\n";
  for (const auto& [name, d] : g.oracles)
    os << "oracle " << name << " normal " << d.normals << " safe " << d.safes
       << " kind " << d.kind << " source " << d.source << "\n";
  for (const auto& n : g.nodes) {
    os << "node " << n.id << " seq " << n.seq.normals << " " << n.seq.safes << " "
       << (n.seq.succ == Succ::N ? "N" : "boxN") << " rule " << rule_name(n.rule.rule);
    if (n.rule.rule == Rule::ExchN || n.rule.rule == Rule::ExchBox)
      os << " " << n.rule.index;
    if (n.rule.rule == Rule::OracleLeaf) os << " " << n.rule.oracle;
    if (!n.premises.empty()) {
      os << " prem";
      for (const auto& p : n.premises) os << " " << p;
    }
    os << "\n";
  }
  return os.str();
}

void save_proof(const ProofGraph& g, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write proof file '" + path.string() + "'");
  out << serialize_proof(g);
}

int AdviceTable::lookup(const std::vector<int>& lengths) const {
  auto it = rows.find(lengths);
  return it == rows.end() ? default_bit : it->second;
}

AdviceTable parse_advice(std::istream& in) {
  AdviceTable t;
  bool have_default = false;
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::istringstream is(strip_comment(raw));
    std::string tok;
    if (!(is >> tok)) continue;
    if (tok == "default") {
      if (have_default) throw FormatError(lineno, "duplicate default");
      std::string b = next_tok(is, lineno, "default bit");
      if (b != "0" && b != "1") throw FormatError(lineno, "default bit must be 0 or 1");
      t.default_bit = b == "1";
      have_default = true;
      continue;
    }
    std::vector<int> lengths;
    lengths.push_back(parse_int(tok, lineno, "length"));
    while (is >> tok && tok != "->") lengths.push_back(parse_int(tok, lineno, "length"));
    if (tok != "->") throw FormatError(lineno, "expected '->'");
    std::string b = next_tok(is, lineno, "bit");
    if (b != "0" && b != "1") throw FormatError(lineno, "bit must be 0 or 1");
    if (!t.rows.emplace(lengths, b == "1").second)
      throw FormatError(lineno, "duplicate length tuple");
  }
  return t;
}

AdviceTable parse_advice_string(const std::string& s) {
  std::istringstream is(s);
  return parse_advice(is);
}

AdviceTable load_advice(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open advice file '" + path.string() + "'");
  return parse_advice(in);
}

std::string serialize_advice(const AdviceTable& t) {
  std::ostringstream os;
  for (const auto& [lengths, bit] : t.rows) {
    for (size_t i = 0; i < lengths.size(); ++i) os << (i ? " " : "") << lengths[i];
    os << " -> " << bit << "\n";
  }
  os << "default " << t.default_bit << "\n";
  return os.str();
}

}  // namespace cbp
