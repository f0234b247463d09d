#include "cbproof/translator.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

namespace cbp {

namespace {

using algebra::Arity;
using algebra::TermPtr;

void require_valid(const ProofGraph& g) {
  auto diags = validate_graph(g);
  if (!diags.empty())
    throw Error("graph '" + g.name + "' does not validate: " + diags.front().node + ": " +
                diags.front().message);
}

std::string node_label(const Node& n) {
  std::ostringstream os;
  os << to_string(n.seq) << '#' << rule_name(n.rule.rule) << '#' << n.rule.index << '#'
     << n.rule.oracle;
  return os.str();
}

}  // namespace

CycleAnalysis cycle_nf(const ProofGraph& g) {
  require_valid(g);
  CycleAnalysis an{analyze_shape(g), {}};

  for (const auto& [comp, edges] : an.shape.buds) {
    for (const auto& [node, slot] : edges) {
      if (!an.shape.ancestor_or_self(comp, node))
        throw NotCycleNormal("bud at '" + node + "' (premise " + std::to_string(slot) +
                             ") refers to '" + comp + "', which is not on its path from the root");
      for (std::string cur = node; cur != comp; cur = an.shape.parent.at(cur))
        an.open_above[cur].insert(comp);
    }
  }

  // Partition refinement: nodes that unfold to the same infinite tree end up
  // in the same class. A node sharing a class with a proper tree ancestor
  // repeats that ancestor's subproof instead of closing a cycle to it.
  std::map<std::string, int> cls;
  {
    std::map<std::string, int> by_label;
    for (const Node& n : g.nodes) {
      auto it = by_label.try_emplace(node_label(n), static_cast<int>(by_label.size())).first;
      cls[n.id] = it->second;
    }
  }
  while (true) {
    std::map<std::vector<int>, int> by_sig;
    std::map<std::string, int> next;
    for (const Node& n : g.nodes) {
      std::vector<int> sig{cls[n.id]};
      for (const auto& p : n.premises) sig.push_back(cls[p]);
      auto it = by_sig.try_emplace(sig, static_cast<int>(by_sig.size())).first;
      next[n.id] = it->second;
    }
    bool stable = true;
    {
      std::set<int> old_ids;
      for (const auto& [id, c] : cls) old_ids.insert(c);
      stable = by_sig.size() == old_ids.size();
    }
    cls = std::move(next);
    if (stable) break;
  }
  for (const Node& n : g.nodes) {
    auto pit = an.shape.parent.find(n.id);
    for (std::string a; pit != an.shape.parent.end(); pit = an.shape.parent.find(a)) {
      a = pit->second;
      if (cls.at(a) == cls.at(n.id))
        throw NotCycleNormal("'" + n.id + "' duplicates its ancestor '" + a +
                             "'; close a cycle instead of repeating the subproof");
    }
  }
  return an;
}

StructureReport structure_check(const ProofGraph& g) {
  CycleAnalysis an = cycle_nf(g);
  StructureReport rep;

  auto tree_slot = [&](const std::string& parent, const std::string& child) {
    const Node& nd = g.at(parent);
    for (int s = 0; s < static_cast<int>(nd.premises.size()); ++s)
      if (nd.premises[s] == child && an.shape.is_tree_edge(parent, s)) return s;
    throw Error("internal error: broken tree path in structure_check");
  };

  for (const auto& [comp, edges] : an.shape.buds) {
    for (const auto& [bud_node, bud_slot] : edges) {
      StructureReport::Path path;
      path.companion = comp;
      path.bud_node = bud_node;
      path.bud_slot = bud_slot;

      std::string cur = bud_node;
      int slot = bud_slot;
      while (true) {
        const Node& nd = g.at(cur);
        const Rule r = nd.rule.rule;
        const bool box_case = r == Rule::CondBox || r == Rule::PCondBox;
        if (box_case && slot >= 1) path.progress = true;
        if (r == Rule::CutBox || r == Rule::BoxL || r == Rule::WeakBox)
          path.safety_violations.push_back(std::string(rule_name(r)) + " at '" + cur + "'");
        if (box_case && slot == 0)
          path.safety_violations.push_back("case split at '" + cur +
                                           "' is left through its zero branch");
        if (r == Rule::WeakN)
          path.left_violations.push_back("w_n at '" + cur + "'");
        if ((r == Rule::CondN || r == Rule::PCondN) && slot == 0)
          path.left_violations.push_back("case split at '" + cur +
                                         "' is left through its zero branch");
        if (r == Rule::CutN && slot == 1)
          path.left_violations.push_back("cut at '" + cur + "' recurses in its right premise");
        if (cur == comp) break;
        const std::string& parent = an.shape.parent.at(cur);
        slot = tree_slot(parent, cur);
        cur = parent;
      }

      rep.all_progress = rep.all_progress && path.progress;
      rep.none_unsafe = rep.none_unsafe && path.safety_violations.empty();
      rep.none_right = rep.none_right && path.left_violations.empty();
      rep.paths.push_back(std::move(path));
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Erasing the safe context of a boxed subproof
// ---------------------------------------------------------------------------

namespace {

class StarBuilder {
 public:
  StarBuilder(const ProofGraph& g, const std::string& root) : g_(g), root_(root) {
    shape_ = analyze_shape(g);
    mark_region(root);
    out_.name = root + "_star";
  }

  ProofGraph build() {
    star(root_);
    for (const Node& n : out_.nodes)
      if (n.rule.rule == Rule::OracleLeaf) out_.oracles[n.rule.oracle] = g_.oracles.at(n.rule.oracle);
    return std::move(out_);
  }

 private:
  // The erased region: the nodes the erasure walk visits. It stops at box_r
  // and never enters the dropped left premise of a safe cut.
  void mark_region(const std::string& id) {
    if (!region_.insert(id).second) return;
    const Node& nd = g_.at(id);
    switch (nd.rule.rule) {
      case Rule::BoxR:
        return;
      case Rule::WeakN:
      case Rule::ExchN:
        mark_region(nd.premises[0]);
        return;
      case Rule::CutN:
        mark_region(nd.premises[1]);
        return;
      default:
        for (const auto& p : nd.premises) mark_region(p);
        return;
    }
  }

  std::string fresh(const std::string& base) {
    std::string id = base + "_s";
    for (int c = 2; used_.count(id); ++c) id = base + "_s" + std::to_string(c);
    used_.insert(id);
    return id;
  }

  // Emits a placeholder so in-region cycles can refer to it, then fills the
  // premises.
  size_t emit(const std::string& orig, const std::string& id, Sequent seq, RuleApp rule) {
    starred_[orig] = id;
    out_.nodes.push_back({id, seq, std::move(rule), {}});
    return out_.nodes.size() - 1;
  }

  std::string star(const std::string& id) {
    if (auto it = starred_.find(id); it != starred_.end()) return it->second;
    const Node& nd = g_.at(id);
    if (nd.seq.succ != Succ::BoxN)
      throw Error("internal error: node '" + id + "' in the erased region does not conclude boxN");
    const Sequent seq{nd.seq.normals, 0, Succ::BoxN};
    switch (nd.rule.rule) {
      case Rule::WeakN:
      case Rule::ExchN:
        return starred_[id] = star(nd.premises[0]);
      case Rule::CutN:
        return starred_[id] = star(nd.premises[1]);
      case Rule::S0:
      case Rule::S1:
      case Rule::ExchBox:
      case Rule::WeakBox:
      case Rule::CutBox:
      case Rule::Dis: {
        std::string sid = fresh(id);
        size_t at = emit(id, sid, seq, nd.rule);
        std::vector<std::string> prem;
        for (const auto& p : nd.premises) prem.push_back(star(p));
        out_.nodes[at].premises = std::move(prem);
        return sid;
      }
      case Rule::BoxL: {
        std::string sid = fresh(id);
        size_t at = emit(id, sid, seq, {Rule::WeakBox});
        out_.nodes[at].premises = {star(nd.premises[0])};
        return sid;
      }
      case Rule::BoxR: {
        std::string sid = fresh(id);
        size_t at = emit(id, sid, seq, nd.rule);
        out_.nodes[at].premises = {copy_subtree(nd.premises[0])};
        return sid;
      }
      default:
        throw Error("rule '" + std::string(rule_name(nd.rule.rule)) +
                    "' cannot conclude boxN at '" + id + "'");
    }
  }

  std::string copy_subtree(const std::string& sub_root) {
    std::map<std::string, std::string> local;
    std::function<std::string(const std::string&)> go = [&](const std::string& id) -> std::string {
      if (auto it = local.find(id); it != local.end()) return it->second;
      if (region_.count(id))
        throw Error("a cycle from the premises of a box_r re-enters the erased region at '" + id +
                    "'");
      if (!shape_.ancestor_or_self(root_, id))
        throw Error("a reference to '" + id + "' escapes the subproof being erased");
      const Node& nd = g_.at(id);
      std::string cid = fresh(id);
      local[id] = cid;
      out_.nodes.push_back({cid, nd.seq, nd.rule, {}});
      size_t at = out_.nodes.size() - 1;
      std::vector<std::string> prem;
      for (const auto& p : nd.premises) prem.push_back(go(p));
      out_.nodes[at].premises = std::move(prem);
      return cid;
    };
    return go(sub_root);
  }

  const ProofGraph& g_;
  std::string root_;
  GraphShape shape_;
  ProofGraph out_;
  std::set<std::string> region_, used_;
  std::map<std::string, std::string> starred_;
};

}  // namespace

ProofGraph cutbox_star(const ProofGraph& g, const std::string& node) {
  require_valid(g);
  const Node& nd = g.at(node);
  if (nd.seq.succ != Succ::BoxN)
    throw Error("cutbox_star expects a node concluding boxN, but '" + node + "' concludes N");
  ProgressResult pr = check_progressing(g);
  if (!pr.ok)
    throw NotProgressing("'" + node + "' sits in a derivation with an unproductive cycle" +
                         (pr.witness ? ": " + to_string(*pr.witness) : ""));
  return StarBuilder(g, node).build();
}

// ---------------------------------------------------------------------------
// Translation into the function algebra
// ---------------------------------------------------------------------------

namespace {

struct OpenRec {
  std::string oracle_name;
  bool crossed = false;
};

using OpenMap = std::map<std::string, OpenRec>;

class Translator {
 public:
  Translator(const ProofGraph& g, const TranslateOptions& opts) : g_(g), opts_(opts) {}

  TermPtr run() {
    an_ = cycle_nf(g_);
    if (opts_.verify_classification) {
      Verdict v = classify(g_);
      if (v.cls == Verdict::Class::BDerivation)
        throw Error("graph '" + g_.name + "' uses srec; rewrite it as a cycle first");
      if (v.cls != Verdict::Class::CB && v.cls != Verdict::Class::NuBPresentation) {
        std::string msg = "graph '" + g_.name + "' does not translate";
        for (const auto& r : v.reasons) msg += "; " + r;
        throw Error(msg);
      }
    }
    TermPtr t = tr(g_.root().id, {});
    algebra::well_formed(t);
    return t;
  }

 private:
  TermPtr tr(const std::string& id, OpenMap open);

  TermPtr child(const Node& nd, int slot, OpenMap open) {
    const std::string& tgt = nd.premises[slot];
    if (an_.shape.bud_edges.count({nd.id, slot})) {
      auto it = open.find(tgt);
      if (it == open.end())
        throw Error("internal error: bud to a companion that is not open at '" + nd.id + "'");
      if (!it->second.crossed)
        throw StrictnessViolation("the cycle at '" + tgt +
                                  "' is re-entered without passing a case split on a normal "
                                  "argument (bud at '" +
                                  nd.id + "')");
      const Node& comp = g_.at(tgt);
      return algebra::oracle_call(it->second.oracle_name,
                                  {comp.seq.normals, comp.seq.safes});
    }
    return tr(tgt, std::move(open));
  }

  const ProofGraph& g_;
  TranslateOptions opts_;
  CycleAnalysis an_;
};

std::vector<TermPtr> proj_normals(Arity amb, int from) {
  std::vector<TermPtr> v;
  for (int i = from; i < amb.normals; ++i) v.push_back(algebra::proj_n(i, {amb.normals, 0}));
  return v;
}

std::vector<TermPtr> proj_safes(Arity amb, int upto) {
  std::vector<TermPtr> v;
  for (int i = 0; i < upto; ++i) v.push_back(algebra::proj_s(i, amb));
  return v;
}

TermPtr cond_on(TermPtr w, TermPtr a, TermPtr b, TermPtr c, Arity amb) {
  return algebra::call(algebra::cond({0, 4}), {},
                       {std::move(w), std::move(a), std::move(b), std::move(c)}, amb);
}

TermPtr Translator::tr(const std::string& id, OpenMap open) {
  const Node& nd = g_.at(id);
  const int m = nd.seq.normals, n = nd.seq.safes;
  const Arity amb{m, n};

  switch (nd.rule.rule) {
    case Rule::Id:
      return algebra::proj_s(0, {0, 1});
    case Rule::Zero:
      return algebra::zero({0, 0});
    case Rule::One:
      return algebra::comp_safe(algebra::zero({0, 0}), algebra::succ1({0, 1}));
    case Rule::OracleLeaf:
      return algebra::initial_relation(nd.rule.oracle, amb);
    case Rule::S0:
      return algebra::comp_safe(child(nd, 0, std::move(open)), algebra::succ0({m, n + 1}));
    case Rule::S1:
      return algebra::comp_safe(child(nd, 0, std::move(open)), algebra::succ1({m, n + 1}));
    case Rule::CutN: {
      TermPtr g = child(nd, 0, open);
      return algebra::comp_safe(std::move(g), child(nd, 1, std::move(open)));
    }
    case Rule::CutBox: {
      ProofGraph starred = cutbox_star(g_, nd.premises[0]);
      TermPtr g = translate(starred, opts_);
      return algebra::comp_normal(std::move(g), child(nd, 1, std::move(open)));
    }
    case Rule::WeakN:
      return algebra::call(child(nd, 0, std::move(open)), proj_normals(amb, 0),
                           proj_safes(amb, n - 1), amb);
    case Rule::WeakBox:
      return algebra::call(child(nd, 0, std::move(open)), proj_normals(amb, 1),
                           proj_safes(amb, n), amb);
    case Rule::ExchN: {
      std::vector<TermPtr> sa = proj_safes(amb, n);
      std::swap(sa[nd.rule.index], sa[nd.rule.index + 1]);
      return algebra::call(child(nd, 0, std::move(open)), proj_normals(amb, 0), std::move(sa),
                           amb);
    }
    case Rule::ExchBox: {
      std::vector<TermPtr> na = proj_normals(amb, 0);
      std::swap(na[nd.rule.index], na[nd.rule.index + 1]);
      return algebra::call(child(nd, 0, std::move(open)), std::move(na), proj_safes(amb, n), amb);
    }
    case Rule::BoxL: {
      std::vector<TermPtr> sa = proj_safes(amb, n);
      sa.push_back(algebra::proj_n(0, amb));
      return algebra::call(child(nd, 0, std::move(open)), proj_normals(amb, 1), std::move(sa),
                           amb);
    }
    case Rule::BoxR:
      return child(nd, 0, std::move(open));
    case Rule::Dis: {
      auto it = an_.shape.buds.find(id);
      if (it == an_.shape.buds.end() || it->second.empty())
        return child(nd, 0, std::move(open));
      std::string oname = "rec_" + id;
      open[id] = {oname, false};
      TermPtr body = child(nd, 0, std::move(open));
      auto components =
          algebra::reduce_simultaneous(algebra::rec_sim({oname}, {std::move(body)}));
      return components[0];
    }
    case Rule::CondBox:
    case Rule::PCondBox: {
      OpenMap crossed = open;
      for (auto& [k, rec] : crossed) rec.crossed = true;
      TermPtr t0 = child(nd, 0, std::move(open));
      TermPtr w = algebra::proj_n(0, amb);
      TermPtr a = algebra::call(std::move(t0), proj_normals(amb, 1), proj_safes(amb, n), amb);
      TermPtr pred_first = algebra::call(algebra::pred({0, 1}), {},
                                         {algebra::proj_n(0, {m, 0})}, {m, 0});
      auto halved_args = [&]() {
        std::vector<TermPtr> na{pred_first};
        for (auto& p : proj_normals(amb, 1)) na.push_back(std::move(p));
        return na;
      };
      if (nd.rule.rule == Rule::PCondBox) {
        TermPtr t1 = child(nd, 1, std::move(crossed));
        TermPtr b = algebra::call(std::move(t1), halved_args(), proj_safes(amb, n), amb);
        return cond_on(std::move(w), std::move(a), b, b, amb);
      }
      TermPtr t1 = child(nd, 1, crossed);
      TermPtr t2 = child(nd, 2, std::move(crossed));
      TermPtr b = algebra::call(std::move(t1), halved_args(), proj_safes(amb, n), amb);
      TermPtr c = algebra::call(std::move(t2), halved_args(), proj_safes(amb, n), amb);
      return cond_on(std::move(w), std::move(a), std::move(b), std::move(c), amb);
    }
    case Rule::CondN:
    case Rule::PCondN: {
      TermPtr t0 = child(nd, 0, open);
      TermPtr w = algebra::proj_s(n - 1, amb);
      TermPtr a = algebra::call(std::move(t0), proj_normals(amb, 0), proj_safes(amb, n - 1), amb);
      TermPtr halved_last = algebra::call(algebra::pred({0, 1}), {},
                                          {algebra::proj_s(n - 1, amb)}, amb);
      auto halved_safes = [&]() {
        std::vector<TermPtr> sa = proj_safes(amb, n - 1);
        sa.push_back(halved_last);
        return sa;
      };
      if (nd.rule.rule == Rule::PCondN) {
        TermPtr t1 = child(nd, 1, std::move(open));
        TermPtr b = algebra::call(std::move(t1), proj_normals(amb, 0), halved_safes(), amb);
        return cond_on(std::move(w), std::move(a), b, b, amb);
      }
      TermPtr t1 = child(nd, 1, open);
      TermPtr t2 = child(nd, 2, std::move(open));
      TermPtr b = algebra::call(std::move(t1), proj_normals(amb, 0), halved_safes(), amb);
      TermPtr c = algebra::call(std::move(t2), proj_normals(amb, 0), halved_safes(), amb);
      return cond_on(std::move(w), std::move(a), std::move(b), std::move(c), amb);
    }
    case Rule::SRec:
      throw Error("srec at '" + id + "' has no direct translation; rewrite it as a cycle first");
  }
  throw Error("internal error: unknown rule in translation");
}

}  // namespace

algebra::TermPtr translate(const ProofGraph& g, const TranslateOptions& opts) {
  return Translator(g, opts).run();
}

// ---------------------------------------------------------------------------
// Rewriting srec as a cycle
// ---------------------------------------------------------------------------

ProofGraph srec_to_cycle(const ProofGraph& g) {
  require_valid(g);
  ProofGraph out = g;

  std::set<std::string> used;
  for (const Node& n : out.nodes) used.insert(n.id);
  auto fresh = [&](const std::string& base) {
    std::string id = base;
    for (int c = 2; used.count(id); ++c) id = base + std::to_string(c);
    used.insert(id);
    return id;
  };

  std::vector<std::string> srecs;
  for (const Node& n : out.nodes)
    if (n.rule.rule == Rule::SRec) srecs.push_back(n.id);

  for (const std::string& s : srecs) {
    size_t at = 0;
    while (out.nodes[at].id != s) ++at;
    const Node old = out.nodes[at];
    const std::string d = fresh(s + "_dis");
    const std::string c = fresh(s + "_case");
    const std::string k0 = fresh(s + "_rec0");
    const std::string k1 = fresh(s + "_rec1");

    Node dis{d, old.seq, {Rule::Dis}, {c}};
    Node split{c, old.seq, {Rule::CondBox}, {old.premises[0], k0, k1}};
    Node rec0{k0, old.seq, {Rule::CutN}, {d, old.premises[1]}};
    Node rec1{k1, old.seq, {Rule::CutN}, {d, old.premises[2]}};

    out.nodes[at] = std::move(dis);
    out.nodes.insert(out.nodes.begin() + at + 1, {std::move(split), std::move(rec0), std::move(rec1)});

    for (Node& n : out.nodes)
      for (std::string& p : n.premises)
        if (p == s) p = d;
  }

  auto diags = validate_graph(out);
  if (!diags.empty())
    throw Error("internal error: srec_to_cycle produced an invalid graph: " +
                diags.front().message);
  return out;
}

}  // namespace cbp
