#include "cbproof/checker.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

namespace cbp {

std::string to_string(const CycleWitness& w) {
  std::ostringstream os;
  for (size_t i = 0; i < w.edges.size(); ++i) {
    if (i) os << " -> ";
    os << w.edges[i].first << "." << w.edges[i].second;
  }
  return os.str();
}

namespace {

struct EdgeGraph {
  std::vector<const Node*> nodes;
  std::map<std::string, int> index;
  std::vector<std::vector<std::pair<int, int>>> out;  // (target, slot)

  explicit EdgeGraph(const ProofGraph& g) {
    for (const auto& n : g.nodes) {
      index[n.id] = static_cast<int>(nodes.size());
      nodes.push_back(&n);
    }
    out.resize(nodes.size());
    for (size_t i = 0; i < nodes.size(); ++i)
      for (size_t s = 0; s < nodes[i]->premises.size(); ++s)
        out[i].push_back({index.at(nodes[i]->premises[s]), static_cast<int>(s)});
  }
};

// Iterative Tarjan.
std::vector<int> scc_of(const EdgeGraph& eg) {
  int n = static_cast<int>(eg.nodes.size());
  std::vector<int> comp(n, -1), low(n), num(n, -1), stk;
  std::vector<bool> on(n, false);
  int clock = 0, comps = 0;
  struct Item {
    int v;
    size_t edge;
  };
  for (int s = 0; s < n; ++s) {
    if (num[s] != -1) continue;
    std::vector<Item> st{{s, 0}};
    num[s] = low[s] = clock++;
    stk.push_back(s);
    on[s] = true;
    while (!st.empty()) {
      auto& [v, e] = st.back();
      if (e < eg.out[v].size()) {
        int w = eg.out[v][e++].first;
        if (num[w] == -1) {
          num[w] = low[w] = clock++;
          stk.push_back(w);
          on[w] = true;
          st.push_back({w, 0});
        } else if (on[w]) {
          low[v] = std::min(low[v], num[w]);
        }
      } else {
        if (low[v] == num[v]) {
          for (;;) {
            int w = stk.back();
            stk.pop_back();
            on[w] = false;
            comp[w] = comps;
            if (w == v) break;
          }
          ++comps;
        }
        int vv = v;
        st.pop_back();
        if (!st.empty()) low[st.back().v] = std::min(low[st.back().v], low[vv]);
      }
    }
  }
  return comp;
}

bool on_cycle(const EdgeGraph& eg, const std::vector<int>& comp, int v) {
  for (int w = 0; w < static_cast<int>(eg.nodes.size()); ++w)
    if (w != v && comp[w] == comp[v]) return true;
  for (const auto& [t, slot] : eg.out[v])
    if (t == v) return true;
  return false;
}

// Shortest directed path from -> to staying inside one SCC, as edges.
std::vector<std::pair<std::string, int>> scc_path(const EdgeGraph& eg,
                                                  const std::vector<int>& comp, int from,
                                                  int to) {
  std::vector<int> prev_node(eg.nodes.size(), -1), prev_slot(eg.nodes.size(), -1);
  std::vector<bool> seen(eg.nodes.size(), false);
  std::vector<int> queue{from};
  seen[from] = true;
  for (size_t qi = 0; qi < queue.size(); ++qi) {
    int v = queue[qi];
    for (const auto& [w, slot] : eg.out[v]) {
      if (comp[w] != comp[from] || seen[w]) continue;
      seen[w] = true;
      prev_node[w] = v;
      prev_slot[w] = slot;
      queue.push_back(w);
      if (w == to) qi = queue.size();  // done
    }
  }
  std::vector<std::pair<std::string, int>> edges;
  if (from == to) return edges;
  if (!seen[to]) throw Error("internal: no path inside the component");
  for (int v = to; v != from; v = prev_node[v])
    edges.push_back({eg.nodes[prev_node[v]]->id, prev_slot[v]});
  std::reverse(edges.begin(), edges.end());
  return edges;
}

CycleWitness cycle_through(const EdgeGraph& eg, const std::vector<int>& comp, int v) {
  // a self-loop, or out and back within the SCC
  for (const auto& [w, slot] : eg.out[v])
    if (w == v) return {{{eg.nodes[v]->id, slot}}};
  for (const auto& [w, slot] : eg.out[v]) {
    if (comp[w] != comp[v]) continue;
    CycleWitness cw;
    cw.edges.push_back({eg.nodes[v]->id, slot});
    auto back = scc_path(eg, comp, w, v);
    cw.edges.insert(cw.edges.end(), back.begin(), back.end());
    return cw;
  }
  throw Error("internal: node is not on a cycle");
}

}  // namespace

CheckResult check_safe(const ProofGraph& g) {
  EdgeGraph eg(g);
  auto comp = scc_of(eg);
  for (int v = 0; v < static_cast<int>(eg.nodes.size()); ++v) {
    if (eg.nodes[v]->rule.rule != Rule::CutBox) continue;
    if (!on_cycle(eg, comp, v)) continue;
    CheckResult r;
    r.ok = false;
    r.witness = cycle_through(eg, comp, v);
    r.detail = "cut_box node '" + eg.nodes[v]->id + "' lies on a cycle";
    return r;
  }
  return {};
}

CheckResult check_left_leaning(const ProofGraph& g) {
  EdgeGraph eg(g);
  auto comp = scc_of(eg);
  for (int v = 0; v < static_cast<int>(eg.nodes.size()); ++v) {
    if (eg.nodes[v]->rule.rule != Rule::CutN) continue;
    for (const auto& [w, slot] : eg.out[v]) {
      if (slot != 1 || comp[w] != comp[v]) continue;
      // the edge v -> w closes a cycle with any path w -> v in the SCC
      if (w != v) {
        bool cyclic = false;
        for (int u = 0; u < static_cast<int>(eg.nodes.size()); ++u)
          if (u != v && comp[u] == comp[v]) cyclic = true;
        if (!cyclic) continue;
      }
      CheckResult r;
      r.ok = false;
      CycleWitness cw;
      cw.edges.push_back({eg.nodes[v]->id, slot});
      if (w != v) {
        auto back = scc_path(eg, comp, w, v);
        cw.edges.insert(cw.edges.end(), back.begin(), back.end());
      }
      r.witness = cw;
      r.detail = "right premise of cut_n '" + eg.nodes[v]->id + "' lies on a cycle";
      return r;
    }
  }
  return {};
}

namespace {

// Trace relation between normal positions across a path: triples
// (source position, strictly progressed, target position).
using Triple = std::tuple<int, bool, int>;
using Rel = std::set<Triple>;

Rel compose(const Rel& a, const Rel& b) {
  Rel out;
  for (const auto& [p, s1, q] : a)
    for (const auto& [q2, s2, r] : b)
      if (q == q2) {
        // keep the strongest flag per endpoint pair
        out.insert({p, s1 || s2, r});
      }
  // drop (p, false, r) when (p, true, r) is present
  for (auto it = out.begin(); it != out.end();) {
    auto [p, s, r] = *it;
    if (!s && out.count({p, true, r})) it = out.erase(it);
    else ++it;
  }
  return out;
}

bool idempotent(const Rel& r) { return compose(r, r) == r; }

bool has_strict_diagonal(const Rel& r) {
  for (const auto& [p, s, q] : r)
    if (s && p == q) return true;
  return false;
}

}  // namespace

ProgressResult check_progressing(const ProofGraph& g, ClosureBudget budget) {
  EdgeGraph eg(g);
  auto comp = scc_of(eg);
  std::vector<bool> cyclic(eg.nodes.size(), false);
  for (int v = 0; v < static_cast<int>(eg.nodes.size()); ++v)
    cyclic[v] = on_cycle(eg, comp, v);

  struct Element {
    int src, dst;
    Rel rel;
    // provenance: base edge or a pair of element indices
    int base_node = -1, base_slot = -1;
    int left = -1, right = -1;
  };
  std::vector<Element> elems;
  std::map<std::tuple<int, int, Rel>, int> seen;

  auto add = [&](Element e) -> int {
    auto key = std::make_tuple(e.src, e.dst, e.rel);
    auto it = seen.find(key);
    if (it != seen.end()) return -1;
    if (elems.size() >= budget.max_elements)
      throw ClosureOverflow("trace closure exceeded " +
                            std::to_string(budget.max_elements) + " elements");
    int idx = static_cast<int>(elems.size());
    seen.emplace(std::move(key), idx);
    elems.push_back(std::move(e));
    return idx;
  };

  // base edges: premise edges between nodes that lie on cycles and share a
  // component (an infinite branch eventually stays inside one SCC)
  for (int v = 0; v < static_cast<int>(eg.nodes.size()); ++v) {
    if (!cyclic[v]) continue;
    for (const auto& [w, slot] : eg.out[v]) {
      if (!cyclic[w] || comp[w] != comp[v]) continue;
      Rel rel;
      for (const auto& link : ancestry_edges(g, eg.nodes[v]->id, slot))
        if (link.from.zone == Zone::Normal && link.to.zone == Zone::Normal)
          rel.insert({link.from.index, link.strict, link.to.index});
      Element e;
      e.src = v;
      e.dst = w;
      e.rel = std::move(rel);
      e.base_node = v;
      e.base_slot = slot;
      add(std::move(e));
    }
  }

  // worklist sweep: once element wi is processed, all pairs among the first
  // wi+1 elements have been composed (later arrivals pick up earlier ones
  // when their own turn comes)
  auto try_compose = [&](size_t a, size_t b) {
    if (elems[a].dst != elems[b].src) return;
    Element e;
    e.src = elems[a].src;
    e.dst = elems[b].dst;
    e.rel = compose(elems[a].rel, elems[b].rel);
    e.left = static_cast<int>(a);
    e.right = static_cast<int>(b);
    add(std::move(e));
  };
  for (size_t wi = 0; wi < elems.size(); ++wi) {
    for (size_t j = 0; j <= wi && j < elems.size(); ++j) {
      try_compose(wi, j);
      if (j != wi) try_compose(j, wi);
    }
  }

  ProgressResult result;
  result.closure_size = elems.size();

  std::function<void(int, std::vector<std::pair<std::string, int>>&)> expand =
      [&](int idx, std::vector<std::pair<std::string, int>>& edges) {
        const Element& e = elems[idx];
        if (e.base_node >= 0) {
          edges.push_back({eg.nodes[e.base_node]->id, e.base_slot});
        } else {
          expand(e.left, edges);
          expand(e.right, edges);
        }
      };

  for (size_t i = 0; i < elems.size(); ++i) {
    const Element& e = elems[i];
    if (e.src != e.dst || !idempotent(e.rel)) continue;
    if (has_strict_diagonal(e.rel)) continue;
    result.ok = false;
    CycleWitness cw;
    expand(static_cast<int>(i), cw.edges);
    result.witness = std::move(cw);
    return result;
  }
  return result;
}

const RuleSet kNuBRuleSet = {Rule::CondBox, Rule::CondN, Rule::S0, Rule::S1, Rule::Id};

namespace {

// free[v] <=> no rule from the set is reachable from v
std::vector<bool> free_map(const EdgeGraph& eg, const RuleSet& rs) {
  int n = static_cast<int>(eg.nodes.size());
  std::vector<std::vector<int>> in(n);
  for (int v = 0; v < n; ++v)
    for (const auto& [w, slot] : eg.out[v]) in[w].push_back(v);
  std::vector<bool> hits(n, false);
  std::vector<int> queue;
  for (int v = 0; v < n; ++v)
    if (rs.count(eg.nodes[v]->rule.rule)) {
      hits[v] = true;
      queue.push_back(v);
    }
  for (size_t qi = 0; qi < queue.size(); ++qi)
    for (int p : in[queue[qi]])
      if (!hits[p]) {
        hits[p] = true;
        queue.push_back(p);
      }
  std::vector<bool> free(n);
  for (int v = 0; v < n; ++v) free[v] = !hits[v];
  return free;
}

}  // namespace

bool rule_free(const ProofGraph& g, const std::string& node, const RuleSet& rs) {
  EdgeGraph eg(g);
  auto free = free_map(eg, rs);
  auto it = eg.index.find(node);
  if (it == eg.index.end()) throw Error("no node named '" + node + "'");
  return free[it->second];
}

std::vector<std::string> minimal_free_nodes(const ProofGraph& g, const RuleSet& rs) {
  EdgeGraph eg(g);
  auto free = free_map(eg, rs);
  int n = static_cast<int>(eg.nodes.size());

  // reachability among free nodes; regions of free nodes are entirely free
  std::vector<std::string> out;
  for (int v = 0; v < n; ++v) {
    if (!free[v]) continue;
    // v is minimal unless some other free node reaches it without being
    // reached back (proper containment), or an equivalent earlier node was
    // already chosen (mutual reachability)
    bool minimal = true;
    for (int u = 0; u < n && minimal; ++u) {
      if (u == v || !free[u]) continue;
      // BFS u -> v and v -> u within free nodes
      auto reaches = [&](int a, int b) {
        std::vector<bool> seen(n, false);
        std::vector<int> queue{a};
        seen[a] = true;
        for (size_t qi = 0; qi < queue.size(); ++qi) {
          if (queue[qi] == b) return true;
          for (const auto& [w, slot] : eg.out[queue[qi]]) {
            if (!seen[w]) {
              seen[w] = true;
              queue.push_back(w);
            }
          }
        }
        return false;
      };
      if (reaches(u, v) && (!reaches(v, u) || u < v)) minimal = false;
    }
    if (minimal) out.push_back(eg.nodes[v]->id);
  }
  return out;
}

namespace {

ProofGraph copy_region(const ProofGraph& g, const std::string& root) {
  ProofGraph out;
  out.name = g.name + "_" + root;
  std::vector<std::string> stack{root};
  std::set<std::string> seen;
  while (!stack.empty()) {
    std::string id = stack.back();
    stack.pop_back();
    if (!seen.insert(id).second) continue;
    const Node& n = g.at(id);
    out.nodes.push_back(n);
    if (n.rule.rule == Rule::OracleLeaf) {
      auto it = g.oracles.find(n.rule.oracle);
      if (it != g.oracles.end()) out.oracles[it->first] = it->second;
    }
    for (auto it = n.premises.rbegin(); it != n.premises.rend(); ++it)
      if (!seen.count(*it)) stack.push_back(*it);
  }
  // root first
  for (size_t i = 0; i < out.nodes.size(); ++i)
    if (out.nodes[i].id == root) {
      std::rotate(out.nodes.begin(), out.nodes.begin() + i, out.nodes.begin() + i + 1);
      break;
    }
  return out;
}

}  // namespace

FactorResult factor(const ProofGraph& g) {
  auto progress = check_progressing(g);
  if (!progress.ok)
    throw NotProgressing("factor requires a progressing graph; cycle " +
                         (progress.witness ? to_string(*progress.witness) : std::string()));

  auto mins = minimal_free_nodes(g, kNuBRuleSet);

  // oracle leaves conclude N, so boxN-succedent boundaries move up to their
  // premises (still free, regions shrink strictly)
  std::vector<std::string> frontier;
  std::vector<std::string> work = mins;
  std::set<std::string> taken;
  while (!work.empty()) {
    std::string id = work.back();
    work.pop_back();
    const Node& n = g.at(id);
    if (n.seq.succ == Succ::N) {
      if (taken.insert(id).second) frontier.push_back(id);
    } else {
      for (const auto& p : n.premises) work.push_back(p);
    }
  }
  std::sort(frontier.begin(), frontier.end());

  FactorResult res;
  res.graph = g;
  res.graph.name = g.name + "_factored";
  for (const auto& id : frontier) {
    const Node& n = g.at(id);
    std::string oname = "def_" + id;
    res.definitions.emplace(oname, copy_region(g, id));
    res.graph.oracles[oname] = {oname, n.seq.normals, n.seq.safes, "subgraph", oname + ".cbp"};
    for (auto& node : res.graph.nodes)
      if (node.id == id) {
        node.rule = {Rule::OracleLeaf, -1, oname};
        node.premises.clear();
      }
  }

  // drop nodes that the excisions disconnected
  std::set<std::string> reach;
  std::vector<std::string> stack{res.graph.root().id};
  while (!stack.empty()) {
    std::string id = stack.back();
    stack.pop_back();
    if (!reach.insert(id).second) continue;
    for (const auto& p : res.graph.at(id).premises) stack.push_back(p);
  }
  std::erase_if(res.graph.nodes, [&](const Node& n) { return !reach.count(n.id); });
  return res;
}

std::string to_string(Verdict::Class c) {
  switch (c) {
    case Verdict::Class::CB: return "CB";
    case Verdict::Class::NuBPresentation: return "nuB-presentation";
    case Verdict::Class::BDerivation: return "B-derivation";
    case Verdict::Class::Rejected: return "rejected";
  }
  return "?";
}

Verdict classify(const ProofGraph& g) {
  auto diags = validate_graph(g);
  if (!diags.empty())
    throw Error("classify needs a valid graph: " + diags.front().node + ": " +
                diags.front().message);

  EdgeGraph eg(g);
  auto comp = scc_of(eg);
  bool cyclic = false;
  for (int v = 0; v < static_cast<int>(eg.nodes.size()) && !cyclic; ++v)
    cyclic = on_cycle(eg, comp, v);
  bool has_srec = false;
  for (const auto& n : g.nodes)
    if (n.rule.rule == Rule::SRec) has_srec = true;

  Verdict v;
  if (has_srec) {
    if (cyclic) {
      v.reasons.push_back("srec occurs in a cyclic graph");
      return v;
    }
    v.cls = Verdict::Class::BDerivation;
    v.progressing = v.safe = v.left_leaning = true;
    return v;
  }

  auto progress = check_progressing(g);
  auto safe = check_safe(g);
  auto left = check_left_leaning(g);
  v.progressing = progress.ok;
  v.safe = safe.ok;
  v.left_leaning = left.ok;
  if (!progress.ok) {
    v.reasons.push_back("not progressing");
    if (!v.witness) v.witness = progress.witness;
  }
  if (!safe.ok) {
    v.reasons.push_back(safe.detail);
    if (!v.witness) v.witness = safe.witness;
  }
  if (!left.ok) {
    v.reasons.push_back(left.detail);
    if (!v.witness) v.witness = left.witness;
  }
  if (!v.reasons.empty()) return v;

  if (g.oracles.empty() || std::all_of(g.nodes.begin(), g.nodes.end(), [&](const Node& n) {
        return n.rule.rule != Rule::OracleLeaf;
      })) {
    v.cls = Verdict::Class::CB;
    return v;
  }
  std::vector<std::string> bad;
  for (const auto& n : g.nodes)
    if (n.rule.rule == Rule::OracleLeaf) {
      const auto& d = g.oracles.at(n.rule.oracle);
      if (d.kind != "length-relation") bad.push_back(n.rule.oracle);
    }
  if (bad.empty()) {
    v.cls = Verdict::Class::NuBPresentation;
    return v;
  }
  std::sort(bad.begin(), bad.end());
  bad.erase(std::unique(bad.begin(), bad.end()), bad.end());
  for (const auto& name : bad)
    v.reasons.push_back("oracle '" + name + "' is not a declared length relation");
  return v;
}

}  // namespace cbp
