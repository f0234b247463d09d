#include "cbproof/kernel.hpp"

#include <algorithm>
#include <sstream>

namespace cbp {

std::string to_string(const Sequent& s) {
  std::ostringstream os;
  os << "[]N^" << s.normals << ", N^" << s.safes << " => "
     << (s.succ == Succ::N ? "N" : "[]N");
  return os.str();
}

namespace {

struct RuleNameRow {
  Rule rule;
  const char* name;
};

constexpr RuleNameRow kRuleNames[] = {
    {Rule::Id, "id"},           {Rule::Zero, "zero"},
    {Rule::One, "one"},         {Rule::S0, "s0"},
    {Rule::S1, "s1"},           {Rule::CutN, "cut_n"},
    {Rule::CutBox, "cut_box"},  {Rule::WeakN, "w_n"},
    {Rule::WeakBox, "w_box"},   {Rule::ExchN, "e_n"},
    {Rule::ExchBox, "e_box"},   {Rule::BoxL, "box_l"},
    {Rule::BoxR, "box_r"},      {Rule::SRec, "srec"},
    {Rule::CondN, "cond_n"},    {Rule::CondBox, "cond_box"},
    {Rule::PCondN, "pcond_n"},  {Rule::PCondBox, "pcond_box"},
    {Rule::Dis, "dis"},         {Rule::OracleLeaf, "oracle"},
};

[[noreturn]] void bad_sequent(const RuleApp& app, const Sequent& c, const char* why) {
  std::ostringstream os;
  os << "rule " << rule_name(app.rule) << " cannot conclude " << to_string(c) << ": " << why;
  throw IncompatibleSequent(os.str());
}

}  // namespace

const char* rule_name(Rule r) {
  for (const auto& row : kRuleNames)
    if (row.rule == r) return row.name;
  return "?";
}

std::optional<Rule> rule_from_name(const std::string& s) {
  for (const auto& row : kRuleNames)
    if (s == row.name) return row.rule;
  return std::nullopt;
}

const Node* ProofGraph::find(const std::string& id) const {
  for (const auto& n : nodes)
    if (n.id == id) return &n;
  return nullptr;
}

const Node& ProofGraph::at(const std::string& id) const {
  const Node* n = find(id);
  if (!n) throw Error("no node named '" + id + "' in proof '" + name + "'");
  return *n;
}

const Node& ProofGraph::root() const {
  if (nodes.empty()) throw Error("proof '" + name + "' has no nodes");
  return nodes.front();
}

std::vector<Sequent> rule_signature(const RuleApp& app, const Sequent& c,
                                    const ProofGraph* ctx) {
  const int m = c.normals, n = c.safes;
  switch (app.rule) {
    case Rule::Id:
      if (c != Sequent{0, 1, Succ::N}) bad_sequent(app, c, "id concludes N, 1 => N");
      return {};
    case Rule::Zero:
    case Rule::One:
      if (c != Sequent{0, 0, Succ::N}) bad_sequent(app, c, "constant leaves conclude => N");
      return {};
    case Rule::S0:
    case Rule::S1:
      return {c};
    case Rule::CutN:
      return {{m, n, Succ::N}, {m, n + 1, c.succ}};
    case Rule::CutBox:
      return {{m, n, Succ::BoxN}, {m + 1, n, c.succ}};
    case Rule::WeakN:
      if (n < 1) bad_sequent(app, c, "w_n needs a safe formula");
      return {{m, n - 1, c.succ}};
    case Rule::WeakBox:
      if (m < 1) bad_sequent(app, c, "w_box needs a normal formula");
      return {{m - 1, n, c.succ}};
    case Rule::ExchN:
      if (n < 2) bad_sequent(app, c, "e_n needs two safe formulas");
      if (app.index < 0 || app.index > n - 2) bad_sequent(app, c, "e_n position out of range");
      return {c};
    case Rule::ExchBox:
      if (m < 2) bad_sequent(app, c, "e_box needs two normal formulas");
      if (app.index < 0 || app.index > m - 2) bad_sequent(app, c, "e_box position out of range");
      return {c};
    case Rule::BoxL:
      if (m < 1) bad_sequent(app, c, "box_l needs a normal formula");
      return {{m - 1, n + 1, c.succ}};
    case Rule::BoxR:
      if (n != 0 || c.succ != Succ::BoxN)
        bad_sequent(app, c, "box_r concludes []Gamma => []N with no safe context");
      return {{m, 0, Succ::N}};
    case Rule::SRec:
      if (m < 1 || c.succ != Succ::N) bad_sequent(app, c, "srec recurses on a leading normal, concluding N");
      return {{m - 1, n, Succ::N}, {m, n + 1, Succ::N}, {m, n + 1, Succ::N}};
    case Rule::CondN:
      if (n < 1 || c.succ != Succ::N) bad_sequent(app, c, "cond_n inspects the last safe, concluding N");
      return {{m, n - 1, Succ::N}, {m, n, Succ::N}, {m, n, Succ::N}};
    case Rule::CondBox:
      if (m < 1 || c.succ != Succ::N) bad_sequent(app, c, "cond_box inspects the first normal, concluding N");
      return {{m - 1, n, Succ::N}, {m, n, Succ::N}, {m, n, Succ::N}};
    case Rule::PCondN:
      if (n < 1 || c.succ != Succ::N) bad_sequent(app, c, "pcond_n inspects the last safe, concluding N");
      return {{m, n - 1, Succ::N}, {m, n, Succ::N}};
    case Rule::PCondBox:
      if (m < 1 || c.succ != Succ::N) bad_sequent(app, c, "pcond_box inspects the first normal, concluding N");
      return {{m - 1, n, Succ::N}, {m, n, Succ::N}};
    case Rule::Dis:
      return {c};
    case Rule::OracleLeaf: {
      if (!ctx) bad_sequent(app, c, "oracle leaf needs a declaration context");
      auto it = ctx->oracles.find(app.oracle);
      if (it == ctx->oracles.end())
        bad_sequent(app, c, "oracle is not declared");
      const OracleDecl& d = it->second;
      if (c != Sequent{d.normals, d.safes, Succ::N})
        bad_sequent(app, c, "oracle leaf must match the declared arity and conclude N");
      return {};
    }
  }
  throw Error("unknown rule tag");
}

std::vector<Diagnostic> validate_graph(const ProofGraph& g) {
  std::vector<Diagnostic> out;
  if (g.nodes.empty()) {
    out.push_back({"", "proof has no nodes"});
    return out;
  }

  std::map<std::string, const Node*> byid;
  for (const auto& n : g.nodes) {
    if (n.id.empty()) out.push_back({n.id, "empty node id"});
    if (!byid.emplace(n.id, &n).second)
      out.push_back({n.id, "duplicate node id"});
  }

  // Local checks: premise resolution and sequent discipline.
  for (const auto& n : g.nodes) {
    std::vector<Sequent> expect;
    try {
      expect = rule_signature(n.rule, n.seq, &g);
    } catch (const IncompatibleSequent& e) {
      out.push_back({n.id, e.what()});
      continue;
    }
    if (expect.size() != n.premises.size()) {
      std::ostringstream os;
      os << "rule " << rule_name(n.rule.rule) << " takes " << expect.size()
         << " premise(s), found " << n.premises.size();
      out.push_back({n.id, os.str()});
      continue;
    }
    for (size_t i = 0; i < n.premises.size(); ++i) {
      auto it = byid.find(n.premises[i]);
      if (it == byid.end()) {
        out.push_back({n.id, "premise '" + n.premises[i] + "' is not declared"});
        continue;
      }
      if (it->second->seq != expect[i]) {
        std::ostringstream os;
        os << "premise " << i << " ('" << n.premises[i] << "') has sequent "
           << to_string(it->second->seq) << ", rule needs " << to_string(expect[i]);
        out.push_back({n.id, os.str()});
      }
    }
  }
  if (!out.empty()) return out;

  // Structural pass: classify premise edges from the root. First visit makes
  // the tree edge; other edges must enter a dis node. A back edge into a
  // non-dis node would close a cycle that no dis rule can account for.
  std::map<std::string, int> state;  // 0 unseen, 1 on stack, 2 done
  std::vector<std::pair<const Node*, size_t>> stack;
  std::set<std::string> seen;
  state[g.root().id] = 1;
  seen.insert(g.root().id);
  stack.push_back({&g.root(), 0});
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
      seen.insert(tgt->id);
      stack.push_back({tgt, 0});
    } else if (tgt->rule.rule != Rule::Dis) {
      if (st == 1)
        out.push_back({node->id, "back-reference closes a cycle through '" + tgt->id +
                                     "' with no dis node"});
      else
        out.push_back({node->id, "subproof '" + tgt->id +
                                     "' is shared outside a dis node"});
    }
  }
  for (const auto& n : g.nodes)
    if (!seen.count(n.id)) out.push_back({n.id, "unreachable from the root"});
  return out;
}

bool GraphShape::is_tree_edge(const std::string& node, int slot) const {
  return !bud_edges.count({node, slot});
}

bool GraphShape::ancestor_or_self(const std::string& up, const std::string& down) const {
  auto ui = enter.find(up), di = enter.find(down);
  if (ui == enter.end() || di == enter.end()) return false;
  return ui->second <= di->second && leave.at(down) <= leave.at(up);
}

GraphShape analyze_shape(const ProofGraph& g) {
  GraphShape sh;
  std::map<std::string, const Node*> byid;
  for (const auto& n : g.nodes) byid[n.id] = &n;

  int clock = 0;
  std::vector<std::pair<const Node*, size_t>> stack;
  const Node* root = &g.root();
  sh.enter[root->id] = clock++;
  sh.depth[root->id] = 0;
  sh.preorder.push_back(root->id);
  stack.push_back({root, 0});
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next >= node->premises.size()) {
      sh.leave[node->id] = clock++;
      stack.pop_back();
      continue;
    }
    int slot = static_cast<int>(next);
    const Node* tgt = byid.at(node->premises[next]);
    ++next;
    if (!sh.enter.count(tgt->id)) {
      sh.enter[tgt->id] = clock++;
      sh.depth[tgt->id] = sh.depth[node->id] + 1;
      sh.parent[tgt->id] = node->id;
      sh.preorder.push_back(tgt->id);
      stack.push_back({tgt, 0});
    } else {
      sh.buds[tgt->id].push_back({node->id, slot});
      sh.bud_edges.insert({node->id, slot});
    }
  }
  return sh;
}

std::vector<AncestryLink> ancestry_edges(const ProofGraph& g, const std::string& id,
                                         int pi) {
  const Node& node = g.at(id);
  const auto expect = rule_signature(node.rule, node.seq, &g);
  if (pi < 0 || static_cast<size_t>(pi) >= expect.size())
    throw Error("node '" + id + "' has no premise " + std::to_string(pi));
  const int m = node.seq.normals, n = node.seq.safes;
  std::vector<AncestryLink> links;
  auto normal = [](int i) { return Pos{Zone::Normal, i}; };
  auto safe = [](int i) { return Pos{Zone::Safe, i}; };
  auto link = [&](Pos a, Pos b, bool strict = false) { links.push_back({a, b, strict}); };
  auto identity = [&](int dm, int dn) {
    for (int i = 0; i < dm; ++i) link(normal(i), normal(i));
    for (int j = 0; j < dn; ++j) link(safe(j), safe(j));
  };
  bool succ_link = true;

  switch (node.rule.rule) {
    case Rule::S0:
    case Rule::S1:
    case Rule::Dis:
      identity(m, n);
      break;
    case Rule::CutN:
      identity(m, n);
      // the cut formula (last safe of premise 1) starts a fresh thread
      succ_link = pi == 1;
      break;
    case Rule::CutBox:
      if (pi == 0) {
        identity(m, n);
        succ_link = false;
      } else {
        for (int i = 0; i < m; ++i) link(normal(i), normal(i + 1));
        for (int j = 0; j < n; ++j) link(safe(j), safe(j));
      }
      break;
    case Rule::WeakN:
      for (int i = 0; i < m; ++i) link(normal(i), normal(i));
      for (int j = 0; j < n - 1; ++j) link(safe(j), safe(j));
      break;
    case Rule::WeakBox:
      for (int i = 1; i < m; ++i) link(normal(i), normal(i - 1));
      for (int j = 0; j < n; ++j) link(safe(j), safe(j));
      break;
    case Rule::ExchN:
      for (int i = 0; i < m; ++i) link(normal(i), normal(i));
      for (int j = 0; j < n; ++j) {
        int t = j;
        if (j == node.rule.index) t = j + 1;
        else if (j == node.rule.index + 1) t = j - 1;
        link(safe(j), safe(t));
      }
      break;
    case Rule::ExchBox:
      for (int i = 0; i < m; ++i) {
        int t = i;
        if (i == node.rule.index) t = i + 1;
        else if (i == node.rule.index + 1) t = i - 1;
        link(normal(i), normal(t));
      }
      for (int j = 0; j < n; ++j) link(safe(j), safe(j));
      break;
    case Rule::BoxL:
      // the opened box moves to the last safe slot of the premise
      link(normal(0), safe(n));
      for (int i = 1; i < m; ++i) link(normal(i), normal(i - 1));
      for (int j = 0; j < n; ++j) link(safe(j), safe(j));
      break;
    case Rule::BoxR:
      identity(m, n);
      break;
    case Rule::SRec:
      if (pi == 0) {
        for (int i = 1; i < m; ++i) link(normal(i), normal(i - 1));
        for (int j = 0; j < n; ++j) link(safe(j), safe(j));
      } else {
        // recursion argument stays in place; the call value is the fresh
        // last safe of the premise. srec only occurs in acyclic graphs, so
        // the link is recorded non-strict.
        identity(m, n);
      }
      break;
    case Rule::CondN:
      if (pi == 0) {
        for (int i = 0; i < m; ++i) link(normal(i), normal(i));
        for (int j = 0; j < n - 1; ++j) link(safe(j), safe(j));
      } else {
        identity(m, n);
      }
      break;
    case Rule::PCondN:
      if (pi == 0) {
        for (int i = 0; i < m; ++i) link(normal(i), normal(i));
        for (int j = 0; j < n - 1; ++j) link(safe(j), safe(j));
      } else {
        identity(m, n);
      }
      break;
    case Rule::CondBox:
    case Rule::PCondBox:
      if (pi == 0) {
        for (int i = 1; i < m; ++i) link(normal(i), normal(i - 1));
        for (int j = 0; j < n; ++j) link(safe(j), safe(j));
      } else {
        link(normal(0), normal(0), /*strict=*/true);
        for (int i = 1; i < m; ++i) link(normal(i), normal(i));
        for (int j = 0; j < n; ++j) link(safe(j), safe(j));
      }
      break;
    case Rule::Id:
    case Rule::Zero:
    case Rule::One:
    case Rule::OracleLeaf:
      throw Error("leaf rules have no premise edges");
  }
  if (succ_link) link({Zone::Succedent, 0}, {Zone::Succedent, 0});
  return links;
}

namespace {

UnfoldTree unfold_rec(const ProofGraph& g, const Node& node, const std::string& path,
                      int depth) {
  UnfoldTree t;
  t.node = node.id;
  t.path = path;
  t.seq = node.seq;
  t.rule = node.rule;
  if (depth > 0) {
    for (size_t i = 0; i < node.premises.size(); ++i) {
      std::string child_path = path.empty() ? std::to_string(i)
                                            : path + "." + std::to_string(i);
      t.children.push_back(unfold_rec(g, g.at(node.premises[i]), child_path, depth - 1));
    }
  }
  return t;
}

}  // namespace

UnfoldTree unfold(const ProofGraph& g, const std::string& node, int depth) {
  if (depth < 0) throw Error("unfold depth must be non-negative");
  return unfold_rec(g, g.at(node), "", depth);
}

}  // namespace cbp
