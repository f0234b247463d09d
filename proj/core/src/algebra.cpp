#include "cbproof/algebra.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <tuple>

namespace cbp::algebra {

namespace {

[[noreturn]] void ill(const std::string& msg) { throw IllFormedTerm(msg); }

void need(bool ok, const std::string& msg) {
  if (!ok) ill(msg);
}

TermPtr mk(Term t) { return std::make_shared<const Term>(std::move(t)); }

void need_arity(Arity a) {
  need(a.normals >= 0 && a.safes >= 0, "arity components must be non-negative");
}

// How many trailing safe slots a basic operation consumes.
int leaf_window(TermKind k) {
  switch (k) {
    case TermKind::S0:
    case TermKind::S1:
    case TermKind::Pred:
      return 1;
    case TermKind::Cond:
      return 4;
    default:
      return 0;
  }
}

void collect_free(const Term* t, std::map<std::string, int>& bound, std::set<std::string>& out) {
  if (t->kind == TermKind::OracleCall) {
    auto it = bound.find(t->name);
    if (it == bound.end() || it->second == 0) out.insert(t->name);
    return;
  }
  if (t->kind == TermKind::RecPP || t->kind == TermKind::RecSim) {
    for (const auto& n : t->bound) ++bound[n];
    for (const auto& s : t->sub) collect_free(s.get(), bound, out);
    for (const auto& n : t->bound) --bound[n];
    return;
  }
  for (const auto& s : t->sub) collect_free(s.get(), bound, out);
}

std::set<std::string> free_oracle_names(const Term* t) {
  std::map<std::string, int> bound;
  std::set<std::string> out;
  collect_free(t, bound, out);
  return out;
}

}  // namespace

TermPtr zero(Arity a) {
  need_arity(a);
  return mk({TermKind::Zero, a});
}

TermPtr succ0(Arity a) {
  need_arity(a);
  need(a.safes >= 1, "s0 needs a safe argument");
  return mk({TermKind::S0, a});
}

TermPtr succ1(Arity a) {
  need_arity(a);
  need(a.safes >= 1, "s1 needs a safe argument");
  return mk({TermKind::S1, a});
}

TermPtr pred(Arity a) {
  need_arity(a);
  need(a.safes >= 1, "pred needs a safe argument");
  return mk({TermKind::Pred, a});
}

TermPtr cond(Arity a) {
  need_arity(a);
  need(a.safes >= 4, "cond needs four safe arguments");
  return mk({TermKind::Cond, a});
}

TermPtr proj_n(int index, Arity a) {
  need_arity(a);
  need(index >= 0 && index < a.normals, "normal projection index out of range");
  Term t{TermKind::ProjN, a};
  t.index = index;
  return mk(std::move(t));
}

TermPtr proj_s(int index, Arity a) {
  need_arity(a);
  need(index >= 0 && index < a.safes, "safe projection index out of range");
  Term t{TermKind::ProjS, a};
  t.index = index;
  return mk(std::move(t));
}

TermPtr oracle_call(std::string name, Arity a) {
  need_arity(a);
  need(!name.empty(), "oracle call needs a name");
  Term t{TermKind::OracleCall, a};
  t.name = std::move(name);
  return mk(std::move(t));
}

TermPtr initial_relation(std::string name, Arity a) {
  need_arity(a);
  need(!name.empty(), "initial relation needs a name");
  Term t{TermKind::InitialRelation, a};
  t.name = std::move(name);
  return mk(std::move(t));
}

TermPtr comp_safe(TermPtr g, TermPtr h) {
  need(g && h, "composition needs two operands");
  Arity a = g->arity;
  need(h->arity == Arity{a.normals, a.safes + 1},
       "safe composition: h must take one more safe argument than g");
  Term t{TermKind::CompSafe, a};
  t.sub = {std::move(g), std::move(h)};
  return mk(std::move(t));
}

TermPtr comp_normal(TermPtr g, TermPtr h) {
  need(g && h, "composition needs two operands");
  need(g->arity.safes == 0, "normal composition: g must take no safe arguments");
  need(free_oracle_names(g.get()).empty(),
       "normal composition: g must not call recursion oracles");
  Arity a{g->arity.normals, h->arity.safes};
  need(h->arity == Arity{a.normals + 1, a.safes},
       "normal composition: h must take one more normal argument than g");
  Term t{TermKind::CompNormal, a};
  t.sub = {std::move(g), std::move(h)};
  return mk(std::move(t));
}

TermPtr rec_pp(std::string name, TermPtr body) {
  need(body != nullptr, "recursion needs a body");
  need(!name.empty(), "recursion needs an oracle name");
  Term t{TermKind::RecPP, body->arity};
  t.bound = {std::move(name)};
  t.sub = {std::move(body)};
  return mk(std::move(t));
}

TermPtr rec_sim(std::vector<std::string> names, std::vector<TermPtr> bodies, int component) {
  need(!names.empty() && names.size() == bodies.size(),
       "simultaneous recursion needs matching name and body lists");
  need(component >= 0 && component < static_cast<int>(names.size()),
       "simultaneous recursion component out of range");
  std::set<std::string> seen;
  for (const auto& n : names) {
    need(!n.empty(), "recursion needs an oracle name");
    need(seen.insert(n).second, "simultaneous recursion names must be distinct");
  }
  for (const auto& b : bodies) {
    need(b != nullptr, "recursion needs a body");
    need(b->arity == bodies.front()->arity, "simultaneous recursion bodies must share an arity");
  }
  Term t{TermKind::RecSim, bodies.front()->arity};
  t.index = component;
  t.bound = std::move(names);
  t.sub = std::move(bodies);
  return mk(std::move(t));
}

TermPtr call(TermPtr f, std::vector<TermPtr> normal_args, std::vector<TermPtr> safe_args,
             Arity ambient) {
  need_arity(ambient);
  need(f != nullptr, "call needs a function term");
  need(f->arity == Arity{static_cast<int>(normal_args.size()), static_cast<int>(safe_args.size())},
       "call: argument lists must match the callee arity");
  for (const auto& a : normal_args) {
    need(a != nullptr, "call argument missing");
    need(a->arity == Arity{ambient.normals, 0},
         "call: normal arguments take the ambient normals only");
    need(free_oracle_names(a.get()).empty(),
         "call: normal arguments must not call recursion oracles");
  }
  for (const auto& a : safe_args) {
    need(a != nullptr, "call argument missing");
    need(a->arity == ambient, "call: safe arguments take the full ambient arity");
  }
  Term t{TermKind::Call, ambient};
  t.call_normals = static_cast<int>(normal_args.size());
  t.sub.reserve(1 + normal_args.size() + safe_args.size());
  t.sub.push_back(std::move(f));
  for (auto& a : normal_args) t.sub.push_back(std::move(a));
  for (auto& a : safe_args) t.sub.push_back(std::move(a));
  return mk(std::move(t));
}

namespace {

void wf(const Term* t, std::map<std::string, Arity>& scope) {
  need_arity(t->arity);
  const auto [m, n] = std::pair{t->arity.normals, t->arity.safes};
  switch (t->kind) {
    case TermKind::Zero:
      return;
    case TermKind::S0:
    case TermKind::S1:
    case TermKind::Pred:
      need(n >= 1, "basic successor/predecessor needs a safe argument");
      return;
    case TermKind::Cond:
      need(n >= 4, "cond needs four safe arguments");
      return;
    case TermKind::ProjN:
      need(t->index >= 0 && t->index < m, "normal projection index out of range");
      return;
    case TermKind::ProjS:
      need(t->index >= 0 && t->index < n, "safe projection index out of range");
      return;
    case TermKind::OracleCall: {
      auto it = scope.find(t->name);
      if (it != scope.end())
        need(t->arity == it->second,
             "oracle call '" + t->name + "' does not match its binder's arity");
      return;
    }
    case TermKind::InitialRelation:
      need(!t->name.empty(), "initial relation needs a name");
      return;
    case TermKind::CompSafe: {
      need(t->sub.size() == 2, "composition needs two operands");
      const Term* g = t->sub[0].get();
      const Term* h = t->sub[1].get();
      need(g->arity == t->arity, "safe composition: g arity mismatch");
      need(h->arity == Arity{m, n + 1}, "safe composition: h arity mismatch");
      wf(g, scope);
      wf(h, scope);
      return;
    }
    case TermKind::CompNormal: {
      need(t->sub.size() == 2, "composition needs two operands");
      const Term* g = t->sub[0].get();
      const Term* h = t->sub[1].get();
      need(g->arity == Arity{m, 0}, "normal composition: g arity mismatch");
      need(h->arity == Arity{m + 1, n}, "normal composition: h arity mismatch");
      need(free_oracle_names(g).empty(),
           "normal composition: g must not call recursion oracles");
      wf(g, scope);
      wf(h, scope);
      return;
    }
    case TermKind::RecPP:
    case TermKind::RecSim: {
      need(!t->bound.empty() && t->bound.size() == t->sub.size(),
           "recursion needs matching name and body lists");
      if (t->kind == TermKind::RecSim)
        need(t->index >= 0 && t->index < static_cast<int>(t->sub.size()),
             "simultaneous recursion component out of range");
      std::set<std::string> seen;
      for (const auto& nm : t->bound)
        need(!nm.empty() && seen.insert(nm).second, "recursion oracle names must be distinct");
      std::vector<std::optional<Arity>> saved;
      for (const auto& nm : t->bound) {
        auto it = scope.find(nm);
        saved.push_back(it == scope.end() ? std::nullopt : std::optional<Arity>(it->second));
        scope[nm] = t->arity;
      }
      for (const auto& b : t->sub) {
        need(b->arity == t->arity, "recursion body arity mismatch");
        wf(b.get(), scope);
      }
      for (size_t i = 0; i < t->bound.size(); ++i) {
        if (saved[i])
          scope[t->bound[i]] = *saved[i];
        else
          scope.erase(t->bound[i]);
      }
      return;
    }
    case TermKind::Call: {
      need(!t->sub.empty(), "call needs a function term");
      const int args = static_cast<int>(t->sub.size()) - 1;
      need(t->call_normals >= 0 && t->call_normals <= args, "call argument split out of range");
      const Term* f = t->sub[0].get();
      need(f->arity == Arity{t->call_normals, args - t->call_normals},
           "call: argument lists must match the callee arity");
      wf(f, scope);
      for (int i = 0; i < args; ++i) {
        const Term* a = t->sub[1 + i].get();
        if (i < t->call_normals) {
          need(a->arity == Arity{m, 0}, "call: normal arguments take the ambient normals only");
          need(free_oracle_names(a).empty(),
               "call: normal arguments must not call recursion oracles");
        } else {
          need(a->arity == t->arity, "call: safe arguments take the full ambient arity");
        }
        wf(a, scope);
      }
      return;
    }
  }
  ill("unknown term kind");
}

}  // namespace

void well_formed(const TermPtr& t) {
  need(t != nullptr, "empty term");
  std::map<std::string, Arity> scope;
  wf(t.get(), scope);
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

void write_term(std::ostream& os, const Term* t) {
  const int m = t->arity.normals, n = t->arity.safes;
  switch (t->kind) {
    case TermKind::Zero:
      os << "(zero " << m << ' ' << n << ')';
      return;
    case TermKind::S0:
      os << "(s0 " << m << ' ' << n << ')';
      return;
    case TermKind::S1:
      os << "(s1 " << m << ' ' << n << ')';
      return;
    case TermKind::Pred:
      os << "(pred " << m << ' ' << n << ')';
      return;
    case TermKind::Cond:
      os << "(cond " << m << ' ' << n << ')';
      return;
    case TermKind::ProjN:
      os << "(proj-n " << t->index << ' ' << m << ' ' << n << ')';
      return;
    case TermKind::ProjS:
      os << "(proj-s " << t->index << ' ' << m << ' ' << n << ')';
      return;
    case TermKind::OracleCall:
      os << "(oracle " << t->name << ' ' << m << ' ' << n << ')';
      return;
    case TermKind::InitialRelation:
      os << "(rel " << t->name << ' ' << m << ' ' << n << ')';
      return;
    case TermKind::CompSafe:
    case TermKind::CompNormal:
      os << (t->kind == TermKind::CompSafe ? "(comp-safe " : "(comp-normal ");
      write_term(os, t->sub[0].get());
      os << ' ';
      write_term(os, t->sub[1].get());
      os << ')';
      return;
    case TermKind::RecPP:
      os << "(rec-pp " << t->bound[0] << ' ';
      write_term(os, t->sub[0].get());
      os << ')';
      return;
    case TermKind::RecSim: {
      os << "(rec-sim " << t->index;
      for (const auto& nm : t->bound) os << ' ' << nm;
      for (const auto& b : t->sub) {
        os << ' ';
        write_term(os, b.get());
      }
      os << ')';
      return;
    }
    case TermKind::Call: {
      os << "(call " << m << ' ' << n << ' ';
      write_term(os, t->sub[0].get());
      os << " (";
      for (int i = 0; i < t->call_normals; ++i) {
        if (i) os << ' ';
        write_term(os, t->sub[1 + i].get());
      }
      os << ") (";
      for (size_t i = 1 + t->call_normals; i < t->sub.size(); ++i) {
        if (i > static_cast<size_t>(1 + t->call_normals)) os << ' ';
        write_term(os, t->sub[i].get());
      }
      os << "))";
      return;
    }
  }
  ill("unknown term kind");
}

struct Sexp {
  bool atom = false;
  std::string text;
  std::vector<Sexp> items;
};

std::vector<std::string> tokenize(const std::string& src) {
  std::vector<std::string> toks;
  std::string cur;
  for (char c : src) {
    if (c == '(' || c == ')') {
      if (!cur.empty()) toks.push_back(std::exchange(cur, {}));
      toks.push_back(std::string(1, c));
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) toks.push_back(std::exchange(cur, {}));
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) toks.push_back(cur);
  return toks;
}

Sexp read_sexp(const std::vector<std::string>& toks, size_t& pos) {
  need(pos < toks.size(), "term syntax: unexpected end of input");
  const std::string& tk = toks[pos++];
  if (tk == "(") {
    Sexp s;
    while (true) {
      need(pos < toks.size(), "term syntax: missing ')'");
      if (toks[pos] == ")") {
        ++pos;
        return s;
      }
      s.items.push_back(read_sexp(toks, pos));
    }
  }
  need(tk != ")", "term syntax: unexpected ')'");
  Sexp s;
  s.atom = true;
  s.text = tk;
  return s;
}

int want_int(const Sexp& s, const std::string& what) {
  need(s.atom, "term syntax: expected " + what);
  try {
    size_t used = 0;
    int v = std::stoi(s.text, &used);
    need(used == s.text.size(), "term syntax: bad " + what + " '" + s.text + "'");
    return v;
  } catch (const IllFormedTerm&) {
    throw;
  } catch (const std::exception&) {
    ill("term syntax: bad " + what + " '" + s.text + "'");
  }
}

const std::string& want_name(const Sexp& s) {
  need(s.atom, "term syntax: expected a name");
  return s.text;
}

TermPtr build_term(const Sexp& s) {
  need(!s.atom && !s.items.empty() && s.items[0].atom, "term syntax: expected a form");
  const std::string& tag = s.items[0].text;
  auto arity_at = [&](size_t i) {
    need(s.items.size() > i + 1, "term syntax: '" + tag + "' needs an arity");
    return Arity{want_int(s.items[i], "arity"), want_int(s.items[i + 1], "arity")};
  };
  if (tag == "zero" || tag == "s0" || tag == "s1" || tag == "pred" || tag == "cond") {
    need(s.items.size() == 3, "term syntax: '" + tag + "' takes an arity");
    Arity a = arity_at(1);
    if (tag == "zero") return zero(a);
    if (tag == "s0") return succ0(a);
    if (tag == "s1") return succ1(a);
    if (tag == "pred") return pred(a);
    return cond(a);
  }
  if (tag == "proj-n" || tag == "proj-s") {
    need(s.items.size() == 4, "term syntax: projection takes an index and an arity");
    int idx = want_int(s.items[1], "index");
    Arity a = arity_at(2);
    return tag == "proj-n" ? proj_n(idx, a) : proj_s(idx, a);
  }
  if (tag == "oracle" || tag == "rel") {
    need(s.items.size() == 4, "term syntax: '" + tag + "' takes a name and an arity");
    std::string nm = want_name(s.items[1]);
    Arity a = arity_at(2);
    return tag == "oracle" ? oracle_call(std::move(nm), a) : initial_relation(std::move(nm), a);
  }
  if (tag == "comp-safe" || tag == "comp-normal") {
    need(s.items.size() == 3, "term syntax: composition takes two terms");
    TermPtr g = build_term(s.items[1]);
    TermPtr h = build_term(s.items[2]);
    return tag == "comp-safe" ? comp_safe(std::move(g), std::move(h))
                              : comp_normal(std::move(g), std::move(h));
  }
  if (tag == "rec-pp") {
    need(s.items.size() == 3, "term syntax: rec-pp takes a name and a body");
    return rec_pp(want_name(s.items[1]), build_term(s.items[2]));
  }
  if (tag == "rec-sim") {
    need(s.items.size() >= 4, "term syntax: rec-sim takes an index, names, and bodies");
    int idx = want_int(s.items[1], "component index");
    std::vector<std::string> names;
    size_t i = 2;
    while (i < s.items.size() && s.items[i].atom) names.push_back(s.items[i++].text);
    std::vector<TermPtr> bodies;
    for (; i < s.items.size(); ++i) bodies.push_back(build_term(s.items[i]));
    need(!names.empty() && names.size() == bodies.size(),
         "term syntax: rec-sim needs as many bodies as names");
    return rec_sim(std::move(names), std::move(bodies), idx);
  }
  if (tag == "call") {
    need(s.items.size() == 6, "term syntax: call takes an arity, a callee, and two argument lists");
    Arity a = arity_at(1);
    TermPtr f = build_term(s.items[3]);
    need(!s.items[4].atom && !s.items[5].atom, "term syntax: call argument lists");
    std::vector<TermPtr> na, sa;
    for (const auto& e : s.items[4].items) na.push_back(build_term(e));
    for (const auto& e : s.items[5].items) sa.push_back(build_term(e));
    return call(std::move(f), std::move(na), std::move(sa), a);
  }
  ill("term syntax: unknown form '" + tag + "'");
}

}  // namespace

std::string serialize_term(const TermPtr& t) {
  need(t != nullptr, "empty term");
  std::ostringstream os;
  write_term(os, t.get());
  return os.str();
}

TermPtr parse_term(const std::string& src) {
  auto toks = tokenize(src);
  size_t pos = 0;
  Sexp s = read_sexp(toks, pos);
  need(pos == toks.size(), "term syntax: trailing input after the term");
  return build_term(s);
}

// ---------------------------------------------------------------------------
// The prefix order
// ---------------------------------------------------------------------------

bool is_bit_prefix(const Value& u, const Value& x) {
  const int lu = bit_length(u), lx = bit_length(x);
  if (lu > lx) return false;
  return (x >> (lx - lu)) == u;
}

namespace {

bool kuhn_augment(int i, const std::vector<std::vector<char>>& adj, std::vector<int>& match_col,
                  std::vector<char>& used, int skip_j) {
  const int k = static_cast<int>(adj.size());
  for (int j = 0; j < k; ++j) {
    if (j == skip_j || !adj[i][j] || used[j]) continue;
    used[j] = 1;
    if (match_col[j] < 0 || kuhn_augment(match_col[j], adj, match_col, used, skip_j)) {
      match_col[j] = i;
      return true;
    }
  }
  return false;
}

// Perfect matching of the rows into the columns, optionally with one row/column
// pair preassigned and removed.
bool has_perfect_matching(const std::vector<std::vector<char>>& adj, int skip_i, int skip_j) {
  const int k = static_cast<int>(adj.size());
  std::vector<int> match_col(k, -1);
  std::vector<char> used;
  for (int i = 0; i < k; ++i) {
    if (i == skip_i) continue;
    used.assign(k, 0);
    if (!kuhn_augment(i, adj, match_col, used, skip_j)) return false;
  }
  return true;
}

}  // namespace

PPOrder pp_compare(const std::vector<Value>& u, const std::vector<Value>& x) {
  if (u.size() != x.size()) return PPOrder::Incomparable;
  const int k = static_cast<int>(u.size());
  if (k == 0) return PPOrder::NonStrict;
  std::vector<std::vector<char>> adj(k, std::vector<char>(k, 0));
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) adj[i][j] = is_bit_prefix(u[i], x[j]);
  if (!has_perfect_matching(adj, -1, -1)) return PPOrder::Incomparable;
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      if (adj[i][j] && bit_length(u[i]) < bit_length(x[j]) && has_perfect_matching(adj, i, j))
        return PPOrder::Strict;
  return PPOrder::NonStrict;
}

namespace {

long long total_length(const std::vector<Value>& v) {
  long long s = 0;
  for (const auto& x : v) s += bit_length(x);
  return s;
}

std::vector<Value> prefix_pool(const std::vector<Value>& tup) {
  std::set<Value> pool;
  pool.insert(0);
  for (const auto& x : tup)
    for (int t = 0; t <= bit_length(x); ++t) pool.insert(x >> t);
  return {pool.begin(), pool.end()};
}

void product_tuples(const std::vector<Value>& pool, int slots,
                    const std::function<void(const std::vector<Value>&)>& emit) {
  std::vector<Value> cur(slots);
  std::function<void(int)> go = [&](int at) {
    if (at == slots) {
      emit(cur);
      return;
    }
    for (const auto& v : pool) {
      cur[at] = v;
      go(at + 1);
    }
  };
  go(0);
}

}  // namespace

std::vector<PPPoint> enumerate_pp(const std::vector<Value>& normals,
                                  const std::vector<Value>& safes) {
  std::vector<std::vector<Value>> ntuples, stuples;
  product_tuples(prefix_pool(normals), static_cast<int>(normals.size()),
                 [&](const std::vector<Value>& u) {
                   if (pp_compare(u, normals) == PPOrder::Strict) ntuples.push_back(u);
                 });
  product_tuples(prefix_pool(safes), static_cast<int>(safes.size()),
                 [&](const std::vector<Value>& v) {
                   if (pp_compare(v, safes) != PPOrder::Incomparable) stuples.push_back(v);
                 });
  std::vector<PPPoint> points;
  points.reserve(ntuples.size() * stuples.size());
  for (const auto& u : ntuples)
    for (const auto& v : stuples) points.push_back({u, v});
  std::sort(points.begin(), points.end(), [](const PPPoint& a, const PPPoint& b) {
    auto ka = std::tuple{total_length(a.normals), total_length(a.safes)};
    auto kb = std::tuple{total_length(b.normals), total_length(b.safes)};
    if (ka != kb) return ka < kb;
    if (a.normals != b.normals) return a.normals < b.normals;
    return a.safes < b.safes;
  });
  return points;
}

// ---------------------------------------------------------------------------
// Direct evaluation
// ---------------------------------------------------------------------------

namespace {

struct ScopeEntry {
  std::string name;
  const Term* rec;
  int body_index;
  std::vector<Value> bx, by;
  size_t parent_limit;
};

struct MemoKey {
  const Term* rec;
  int body;
  std::vector<Value> xs, ys;
  // Bindings visible at the binder; re-entries under different outer
  // invocations must not share cache entries.
  std::vector<std::tuple<const Term*, int, std::vector<Value>, std::vector<Value>>> ctx;

  bool operator<(const MemoKey& o) const {
    return std::tie(rec, body, xs, ys, ctx) < std::tie(o.rec, o.body, o.xs, o.ys, o.ctx);
  }
};

class DirectEval {
 public:
  explicit DirectEval(const OracleEnv& env) : env_(env) {}

  Value eval(const Term* t, const std::vector<Value>& xs, const std::vector<Value>& ys) {
    switch (t->kind) {
      case TermKind::Zero:
        return 0;
      case TermKind::S0:
        return ys.back() * 2;
      case TermKind::S1:
        return ys.back() * 2 + 1;
      case TermKind::Pred:
        return ys.back() >> 1;
      case TermKind::Cond: {
        const size_t n = ys.size();
        const Value& w = ys[n - 4];
        if (w == 0) return ys[n - 3];
        return (w % 2 == 0) ? ys[n - 2] : ys[n - 1];
      }
      case TermKind::ProjN:
        return xs[t->index];
      case TermKind::ProjS:
        return ys[t->index];
      case TermKind::OracleCall: {
        for (size_t i = scope_.size(); i-- > 0;) {
          if (scope_[i].name != t->name) continue;
          ScopeEntry e = scope_[i];
          if (pp_compare(xs, e.bx) == PPOrder::Strict &&
              pp_compare(ys, e.by) != PPOrder::Incomparable)
            return apply_rec(e.rec, e.body_index, xs, ys, e.parent_limit);
          return 0;
        }
        throw MissingOracle("recursion oracle '" + t->name + "' is unbound in this term");
      }
      case TermKind::InitialRelation: {
        const OracleFn* fn = env_.find(t->name);
        if (!fn || !fn->fn)
          throw MissingOracle("initial relation '" + t->name + "' is not provided");
        Value v = fn->fn(xs, ys);
        if (v < 0)
          throw UndefinedCase("initial relation '" + t->name + "' returned a negative value");
        return v;
      }
      case TermKind::CompSafe: {
        std::vector<Value> ys2 = ys;
        ys2.push_back(eval(t->sub[0].get(), xs, ys));
        return eval(t->sub[1].get(), xs, ys2);
      }
      case TermKind::CompNormal: {
        std::vector<Value> xs2;
        xs2.reserve(xs.size() + 1);
        xs2.push_back(eval(t->sub[0].get(), xs, {}));
        xs2.insert(xs2.end(), xs.begin(), xs.end());
        return eval(t->sub[1].get(), xs2, ys);
      }
      case TermKind::RecPP:
        return apply_rec(t, 0, xs, ys, scope_.size());
      case TermKind::RecSim:
        return apply_rec(t, t->index, xs, ys, scope_.size());
      case TermKind::Call: {
        std::vector<Value> nvals, svals;
        for (int i = 0; i < t->call_normals; ++i)
          nvals.push_back(eval(t->sub[1 + i].get(), xs, {}));
        for (size_t i = 1 + t->call_normals; i < t->sub.size(); ++i)
          svals.push_back(eval(t->sub[i].get(), xs, ys));
        return eval(t->sub[0].get(), nvals, svals);
      }
    }
    throw Error("internal error: unknown term kind in evaluation");
  }

 private:
  Value apply_rec(const Term* rec, int body, const std::vector<Value>& xs,
                  const std::vector<Value>& ys, size_t limit) {
    MemoKey key{rec, body, xs, ys, {}};
    key.ctx.reserve(limit);
    for (size_t i = 0; i < limit; ++i)
      key.ctx.emplace_back(scope_[i].rec, scope_[i].body_index, scope_[i].bx, scope_[i].by);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;

    std::vector<ScopeEntry> tail(scope_.begin() + limit, scope_.end());
    scope_.resize(limit);
    for (size_t j = 0; j < rec->bound.size(); ++j)
      scope_.push_back({rec->bound[j], rec, static_cast<int>(j), xs, ys, limit});
    Value v = eval(rec->sub[body].get(), xs, ys);
    scope_.resize(limit);
    scope_.insert(scope_.end(), tail.begin(), tail.end());

    memo_.emplace(std::move(key), v);
    return v;
  }

  const OracleEnv& env_;
  std::vector<ScopeEntry> scope_;
  std::map<MemoKey, Value> memo_;
};

void check_args(const TermPtr& t, const std::vector<Value>& xs, const std::vector<Value>& ys) {
  need(t != nullptr, "empty term");
  need(static_cast<int>(xs.size()) == t->arity.normals &&
           static_cast<int>(ys.size()) == t->arity.safes,
       "argument count does not match the term arity");
  for (const auto& v : xs) need(v >= 0, "arguments must be non-negative");
  for (const auto& v : ys) need(v >= 0, "arguments must be non-negative");
}

}  // namespace

Value eval_term(const TermPtr& t, const std::vector<Value>& normals,
                const std::vector<Value>& safes, const OracleEnv& env) {
  check_args(t, normals, safes);
  DirectEval ev(env);
  return ev.eval(t.get(), normals, safes);
}

// ---------------------------------------------------------------------------
// Table evaluation
// ---------------------------------------------------------------------------

namespace {

using TableKey = std::pair<std::vector<Value>, std::vector<Value>>;

struct TableScope {
  std::string name;
  int body_index;
  const std::map<TableKey, std::vector<Value>>* table;
  std::vector<Value> bx, by;
};

class TableEval {
 public:
  explicit TableEval(const OracleEnv& env) : env_(env) {}

  Value eval(const Term* t, const std::vector<Value>& xs, const std::vector<Value>& ys) {
    switch (t->kind) {
      case TermKind::Zero:
        return 0;
      case TermKind::S0:
        return ys.back() * 2;
      case TermKind::S1:
        return ys.back() * 2 + 1;
      case TermKind::Pred:
        return ys.back() >> 1;
      case TermKind::Cond: {
        const size_t n = ys.size();
        const Value& w = ys[n - 4];
        if (w == 0) return ys[n - 3];
        return (w % 2 == 0) ? ys[n - 2] : ys[n - 1];
      }
      case TermKind::ProjN:
        return xs[t->index];
      case TermKind::ProjS:
        return ys[t->index];
      case TermKind::OracleCall: {
        for (size_t i = scope_.size(); i-- > 0;) {
          if (scope_[i].name != t->name) continue;
          const TableScope& e = scope_[i];
          if (pp_compare(xs, e.bx) != PPOrder::Strict ||
              pp_compare(ys, e.by) == PPOrder::Incomparable)
            return 0;
          auto it = e.table->find({xs, ys});
          if (it == e.table->end())
            throw Error("internal error: recursion table is missing a guarded point");
          return it->second[e.body_index];
        }
        throw MissingOracle("recursion oracle '" + t->name + "' is unbound in this term");
      }
      case TermKind::InitialRelation: {
        const OracleFn* fn = env_.find(t->name);
        if (!fn || !fn->fn)
          throw MissingOracle("initial relation '" + t->name + "' is not provided");
        Value v = fn->fn(xs, ys);
        if (v < 0)
          throw UndefinedCase("initial relation '" + t->name + "' returned a negative value");
        return v;
      }
      case TermKind::CompSafe: {
        std::vector<Value> ys2 = ys;
        ys2.push_back(eval(t->sub[0].get(), xs, ys));
        return eval(t->sub[1].get(), xs, ys2);
      }
      case TermKind::CompNormal: {
        std::vector<Value> xs2;
        xs2.reserve(xs.size() + 1);
        xs2.push_back(eval(t->sub[0].get(), xs, {}));
        xs2.insert(xs2.end(), xs.begin(), xs.end());
        return eval(t->sub[1].get(), xs2, ys);
      }
      case TermKind::RecPP:
      case TermKind::RecSim: {
        const int k = static_cast<int>(t->sub.size());
        std::map<TableKey, std::vector<Value>> table;
        for (const PPPoint& p : enumerate_pp(xs, ys)) {
          push_entries(t, &table, p.normals, p.safes);
          std::vector<Value> vals(k);
          for (int j = 0; j < k; ++j) vals[j] = eval(t->sub[j].get(), p.normals, p.safes);
          pop_entries(k);
          table.emplace(TableKey{p.normals, p.safes}, std::move(vals));
        }
        push_entries(t, &table, xs, ys);
        const int idx = t->kind == TermKind::RecSim ? t->index : 0;
        Value v = eval(t->sub[idx].get(), xs, ys);
        pop_entries(k);
        return v;
      }
      case TermKind::Call: {
        std::vector<Value> nvals, svals;
        for (int i = 0; i < t->call_normals; ++i)
          nvals.push_back(eval(t->sub[1 + i].get(), xs, {}));
        for (size_t i = 1 + t->call_normals; i < t->sub.size(); ++i)
          svals.push_back(eval(t->sub[i].get(), xs, ys));
        return eval(t->sub[0].get(), nvals, svals);
      }
    }
    throw Error("internal error: unknown term kind in evaluation");
  }

 private:
  void push_entries(const Term* rec, const std::map<TableKey, std::vector<Value>>* table,
                    const std::vector<Value>& bx, const std::vector<Value>& by) {
    for (size_t j = 0; j < rec->bound.size(); ++j)
      scope_.push_back({rec->bound[j], static_cast<int>(j), table, bx, by});
  }

  void pop_entries(int k) { scope_.resize(scope_.size() - k); }

  const OracleEnv& env_;
  std::vector<TableScope> scope_;
};

}  // namespace

Value eval_term_table(const TermPtr& t, const std::vector<Value>& normals,
                      const std::vector<Value>& safes, const OracleEnv& env) {
  check_args(t, normals, safes);
  TableEval ev(env);
  return ev.eval(t.get(), normals, safes);
}

// ---------------------------------------------------------------------------
// Polynomials and the growth bound
// ---------------------------------------------------------------------------

namespace {

Poly trimmed(std::vector<Value> c) {
  while (!c.empty() && c.back() == 0) c.pop_back();
  return Poly{std::move(c)};
}

}  // namespace

Value Poly::operator()(const Value& n) const {
  Value r = 0;
  for (size_t i = c.size(); i-- > 0;) r = r * n + c[i];
  return r;
}

Poly poly_const(Value v) { return trimmed({std::move(v)}); }

Poly poly_n() { return Poly{{0, 1}}; }

Poly add(const Poly& a, const Poly& b) {
  std::vector<Value> c(std::max(a.c.size(), b.c.size()), 0);
  for (size_t i = 0; i < a.c.size(); ++i) c[i] += a.c[i];
  for (size_t i = 0; i < b.c.size(); ++i) c[i] += b.c[i];
  return trimmed(std::move(c));
}

Poly mul(const Poly& a, const Poly& b) {
  if (a.c.empty() || b.c.empty()) return {};
  std::vector<Value> c(a.c.size() + b.c.size() - 1, 0);
  for (size_t i = 0; i < a.c.size(); ++i)
    for (size_t j = 0; j < b.c.size(); ++j) c[i + j] += a.c[i] * b.c[j];
  return trimmed(std::move(c));
}

Poly compose(const Poly& outer, const Poly& inner) {
  Poly r;
  for (size_t i = outer.c.size(); i-- > 0;) r = add(mul(r, inner), poly_const(outer.c[i]));
  return r;
}

std::string to_string(const Poly& p) {
  if (p.c.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (size_t i = p.c.size(); i-- > 0;) {
    if (p.c[i] == 0) continue;
    if (!first) os << " + ";
    first = false;
    if (i == 0 || p.c[i] != 1) os << p.c[i];
    if (i >= 1) os << (p.c[i] == 1 ? "" : "*") << 'n';
    if (i >= 2) os << '^' << i;
  }
  if (first) return "0";  // nothing but zero coefficients
  return os.str();
}

namespace {

Poly bound_rec(const TermPtr& t, std::set<std::string>& bound) {
  switch (t->kind) {
    case TermKind::Zero:
    case TermKind::Pred:
    case TermKind::Cond:
    case TermKind::ProjS:
      return {};
    case TermKind::S0:
    case TermKind::S1:
    case TermKind::InitialRelation:
      return poly_const(1);
    case TermKind::ProjN:
      return poly_n();
    case TermKind::OracleCall:
      if (bound.count(t->name)) return {};
      ill("cannot bound a term with an unbound recursion oracle '" + t->name + "'");
    case TermKind::CompSafe:
      return add(bound_rec(t->sub[0], bound), bound_rec(t->sub[1], bound));
    case TermKind::CompNormal: {
      Poly pg = bound_rec(t->sub[0], bound);
      Poly ph = bound_rec(t->sub[1], bound);
      return compose(ph, add(poly_n(), pg));
    }
    case TermKind::Call: {
      Poly pf = bound_rec(t->sub[0], bound);
      Poly na, sa;
      for (int i = 0; i < t->call_normals; ++i) na = add(na, bound_rec(t->sub[1 + i], bound));
      for (size_t i = 1 + t->call_normals; i < t->sub.size(); ++i)
        sa = add(sa, bound_rec(t->sub[i], bound));
      return add(compose(pf, na), sa);
    }
    case TermKind::RecPP: {
      const bool fresh = bound.insert(t->bound[0]).second;
      Poly pb = bound_rec(t->sub[0], bound);
      if (fresh) bound.erase(t->bound[0]);
      return mul(poly_n(), pb);
    }
    case TermKind::RecSim: {
      auto components = reduce_simultaneous(t);
      return bound_rec(components[t->index], bound);
    }
  }
  ill("unknown term kind");
}

}  // namespace

Poly bound_poly(const TermPtr& t) {
  need(t != nullptr, "empty term");
  well_formed(t);
  std::set<std::string> bound;
  return bound_rec(t, bound);
}

// ---------------------------------------------------------------------------
// Reduction of simultaneous recursion
// ---------------------------------------------------------------------------

namespace {

void collect_names(const Term* t, std::set<std::string>& out) {
  if (t->kind == TermKind::OracleCall || t->kind == TermKind::InitialRelation)
    out.insert(t->name);
  for (const auto& n : t->bound) out.insert(n);
  for (const auto& s : t->sub) collect_names(s.get(), out);
}

TermPtr numeral(long long v, Arity a) {
  if (v == 0) return zero(a);
  TermPtr low = numeral(v / 2, a);
  Arity step{a.normals, a.safes + 1};
  return comp_safe(std::move(low), (v % 2) ? succ1(step) : succ0(step));
}

TermPtr cond4(TermPtr w, TermPtr x, TermPtr y, TermPtr z, Arity a) {
  return call(cond({0, 4}), {}, {std::move(w), std::move(x), std::move(y), std::move(z)}, a);
}

TermPtr one_at(Arity a) { return comp_safe(zero(a), succ1({a.normals, a.safes + 1})); }

TermPtr pred_of(TermPtr t, Arity a) { return call(pred({0, 1}), {}, {std::move(t)}, a); }

// A 0/1 term testing whether `t` equals the constant `c`, by matching bits.
TermPtr eq_const(const TermPtr& t, long long c, Arity a) {
  if (c == 0) return cond4(t, one_at(a), zero(a), zero(a), a);
  TermPtr rest = eq_const(pred_of(t, a), c / 2, a);
  if (c % 2) return cond4(t, zero(a), zero(a), std::move(rest), a);
  return cond4(t, zero(a), std::move(rest), zero(a), a);
}

TermPtr if_true(TermPtr e, TermPtr then_t, TermPtr else_t, Arity a) {
  TermPtr else_copy = else_t;
  return cond4(std::move(e), std::move(else_t), std::move(else_copy), std::move(then_t), a);
}

struct SimReducer {
  std::vector<std::string> targets;  // the bound names, in component order
  std::string rec_name;              // the single recursion oracle
  int k;
  Arity base;    // arity of the simultaneous recursion
  Arity lifted;  // base with k tag slots appended to the safes

  // Component tags: a rotation of 1..k whose head identifies the component.
  // Every tag block is a permutation of the same set, so appending it never
  // changes how the guard compares the data arguments.
  std::vector<long long> rho(int component_1based) const {
    std::vector<long long> r(k);
    for (int t = 0; t < k; ++t) r[t] = ((component_1based - 1 + t) % k) + 1;
    return r;
  }

  int component_of(const std::string& name) const {
    for (int i = 0; i < k; ++i)
      if (targets[i] == name) return i + 1;
    return 0;
  }

  // The replacement for a call to component j, in a surrounding ambient that
  // still presents the original safes first.
  TermPtr redirect_call(int j, Arity amb) const {
    std::vector<TermPtr> na, sa;
    for (int i = 0; i < base.normals; ++i) na.push_back(proj_n(i, {amb.normals, 0}));
    for (int i = 0; i < base.safes; ++i) sa.push_back(proj_s(i, amb));
    for (long long tag : rho(j)) sa.push_back(numeral(tag, amb));
    return call(oracle_call(rec_name, lifted), std::move(na), std::move(sa), amb);
  }

  // Rewrites calls to the reduced oracles without touching the ambient arity.
  TermPtr redirect_only(const TermPtr& t, std::set<std::string> shadowed) const {
    switch (t->kind) {
      case TermKind::OracleCall: {
        int j = shadowed.count(t->name) ? 0 : component_of(t->name);
        if (j == 0) return t;
        if (t->arity != base)
          throw Error("internal error: redirected oracle call has the wrong arity");
        return redirect_call(j, t->arity);
      }
      case TermKind::RecPP:
      case TermKind::RecSim: {
        for (const auto& n : t->bound) shadowed.insert(n);
        std::vector<TermPtr> bodies;
        for (const auto& b : t->sub) bodies.push_back(redirect_only(b, shadowed));
        if (t->kind == TermKind::RecPP) return rec_pp(t->bound[0], std::move(bodies[0]));
        return rec_sim(t->bound, std::move(bodies), t->index);
      }
      case TermKind::CompSafe:
        return comp_safe(redirect_only(t->sub[0], shadowed), redirect_only(t->sub[1], shadowed));
      case TermKind::CompNormal:
        return comp_normal(t->sub[0], redirect_only(t->sub[1], shadowed));
      case TermKind::Call: {
        std::vector<TermPtr> na, sa;
        for (int i = 0; i < t->call_normals; ++i) na.push_back(t->sub[1 + i]);
        for (size_t i = 1 + t->call_normals; i < t->sub.size(); ++i)
          sa.push_back(redirect_only(t->sub[i], shadowed));
        return call(redirect_only(t->sub[0], shadowed), std::move(na), std::move(sa), t->arity);
      }
      default:
        return t;
    }
  }

  // Inserts the k tag slots at safe position base.safes of the ambient,
  // rewriting component calls to dispatch through the single oracle.
  TermPtr lift(const TermPtr& t) const {
    const int m = t->arity.normals;
    const int q = t->arity.safes;
    const int at = base.safes;
    if (q < at) throw Error("internal error: lifting below the tag boundary");
    const Arity out{m, q + k};
    auto shifted = [&](int j) { return j < at ? j : j + k; };
    switch (t->kind) {
      case TermKind::Zero:
        return zero(out);
      case TermKind::ProjN:
        return proj_n(t->index, out);
      case TermKind::ProjS:
        return proj_s(shifted(t->index), out);
      case TermKind::S0:
      case TermKind::S1:
      case TermKind::Pred:
      case TermKind::Cond: {
        const int r = leaf_window(t->kind);
        if (q - r >= at) {
          // The operands shift as a block and stay trailing.
          switch (t->kind) {
            case TermKind::S0:
              return succ0(out);
            case TermKind::S1:
              return succ1(out);
            case TermKind::Pred:
              return pred(out);
            default:
              return cond(out);
          }
        }
        TermPtr leaf;
        switch (t->kind) {
          case TermKind::S0:
            leaf = succ0({0, r});
            break;
          case TermKind::S1:
            leaf = succ1({0, r});
            break;
          case TermKind::Pred:
            leaf = pred({0, r});
            break;
          default:
            leaf = cond({0, r});
            break;
        }
        std::vector<TermPtr> sa;
        for (int pos = q - r; pos < q; ++pos) sa.push_back(proj_s(shifted(pos), out));
        return call(std::move(leaf), {}, std::move(sa), out);
      }
      case TermKind::OracleCall: {
        int j = component_of(t->name);
        if (j != 0) {
          if (t->arity != base)
            throw Error("internal error: redirected oracle call has the wrong arity");
          return redirect_call(j, out);
        }
        return wrap_original(t, out);
      }
      case TermKind::InitialRelation:
        return wrap_original(t, out);
      case TermKind::CompSafe:
        return comp_safe(lift(t->sub[0]), lift(t->sub[1]));
      case TermKind::CompNormal:
        return comp_normal(t->sub[0], lift(t->sub[1]));
      case TermKind::RecPP:
      case TermKind::RecSim:
        return wrap_original(redirect_only(t, {}), out);
      case TermKind::Call: {
        std::vector<TermPtr> na, sa;
        for (int i = 0; i < t->call_normals; ++i) na.push_back(t->sub[1 + i]);
        for (size_t i = 1 + t->call_normals; i < t->sub.size(); ++i) sa.push_back(lift(t->sub[i]));
        return call(redirect_only(t->sub[0], {}), std::move(na), std::move(sa), out);
      }
    }
    throw Error("internal error: unknown term kind in lifting");
  }

  // Applies `inner` to the original arguments from the widened ambient.
  TermPtr wrap_original(TermPtr inner, Arity out) const {
    const int m = inner->arity.normals;
    const int q = inner->arity.safes;
    const int at = base.safes;
    std::vector<TermPtr> na, sa;
    for (int i = 0; i < m; ++i) na.push_back(proj_n(i, {out.normals, 0}));
    for (int j = 0; j < q; ++j) sa.push_back(proj_s(j < at ? j : j + k, out));
    return call(std::move(inner), std::move(na), std::move(sa), out);
  }
};

}  // namespace

std::vector<TermPtr> reduce_simultaneous(const TermPtr& t) {
  need(t && t->kind == TermKind::RecSim, "reduce_simultaneous expects a simultaneous recursion");
  well_formed(t);
  const int k = static_cast<int>(t->sub.size());
  if (k == 1) return {rec_pp(t->bound[0], t->sub[0])};

  std::set<std::string> used;
  collect_names(t.get(), used);
  std::string fresh = "rsim";
  for (int c = 1; used.count(fresh); ++c) fresh = "rsim" + std::to_string(c);

  SimReducer red;
  red.targets = t->bound;
  red.rec_name = fresh;
  red.k = k;
  red.base = t->arity;
  red.lifted = {t->arity.normals, t->arity.safes + k};

  std::vector<TermPtr> lifted_bodies;
  for (const auto& b : t->sub) lifted_bodies.push_back(red.lift(b));

  // Dispatch on the first tag slot.
  TermPtr selector = proj_s(red.base.safes, red.lifted);
  TermPtr dispatch = lifted_bodies[k - 1];
  for (int i = k - 1; i >= 1; --i)
    dispatch = if_true(eq_const(selector, i, red.lifted), lifted_bodies[i - 1],
                       std::move(dispatch), red.lifted);

  TermPtr single = rec_pp(fresh, std::move(dispatch));
  std::vector<TermPtr> components;
  for (int j = 1; j <= k; ++j) {
    std::vector<TermPtr> na, sa;
    for (int i = 0; i < red.base.normals; ++i) na.push_back(proj_n(i, {red.base.normals, 0}));
    for (int i = 0; i < red.base.safes; ++i) sa.push_back(proj_s(i, red.base));
    for (long long tag : red.rho(j)) sa.push_back(numeral(tag, red.base));
    components.push_back(call(single, std::move(na), std::move(sa), red.base));
  }
  return components;
}

OracleFn truncate_oracle(const OracleFn& inner, int m) {
  OracleFn out = inner;
  auto base = inner.fn;
  out.fn = [base, m](const std::vector<Value>& xs, const std::vector<Value>& ys) -> Value {
    for (const auto& v : xs)
      if (bit_length(v) >= m) return 0;
    for (const auto& v : ys)
      if (bit_length(v) >= m) return 0;
    return base(xs, ys);
  };
  return out;
}

}  // namespace cbp::algebra
