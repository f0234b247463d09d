#include "cbproof/evaluator.hpp"

#include <algorithm>
#include <memory>
#include <random>
#include <sstream>
#include <tuple>

namespace cbp {

int bit_length(const Value& v) {
  if (v == 0) return 0;
  return static_cast<int>(boost::multiprecision::msb(v)) + 1;
}

Value repunit(int bits) {
  if (bits < 0) throw Error("repunit of negative length");
  return (Value(1) << bits) - 1;
}

namespace {

std::map<std::string, OracleFn>& builtin_registry() {
  static std::map<std::string, OracleFn> reg = [] {
    std::map<std::string, OracleFn> m;

    OracleFn parity;
    parity.kind = "length-relation";
    parity.fn = [](const std::vector<Value>& xs, const std::vector<Value>& ys) -> Value {
      if (!xs.empty()) return bit_length(xs.front()) % 2;
      if (!ys.empty()) return bit_length(ys.front()) % 2;
      return 0;
    };
    m["parity-len"] = parity;

    // Stands in for an advice sequence nobody can compute: an arbitrary,
    // fixed, irregular set of total argument lengths.
    OracleFn halting;
    halting.kind = "length-relation";
    halting.fn = [](const std::vector<Value>& xs, const std::vector<Value>& ys) -> Value {
      static const std::set<int> accept = {1, 2, 3, 5, 8, 13, 21, 34, 55, 89};
      int sum = 0;
      for (const auto& v : xs) sum += bit_length(v);
      for (const auto& v : ys) sum += bit_length(v);
      return accept.count(sum) ? 1 : 0;
    };
    m["halting-stub"] = halting;

    for (int bit = 0; bit < 2; ++bit) {
      OracleFn c;
      c.kind = "length-relation";
      c.fn = [bit](const std::vector<Value>&, const std::vector<Value>&) -> Value {
        return bit;
      };
      m[bit ? "const-1" : "const-0"] = c;
    }
    return m;
  }();
  return reg;
}

}  // namespace

OracleFn advice_oracle(AdviceTable table) {
  auto shared = std::make_shared<AdviceTable>(std::move(table));
  OracleFn f;
  f.kind = "length-relation";
  f.fn = [shared](const std::vector<Value>& xs, const std::vector<Value>& ys) -> Value {
    std::vector<int> lengths;
    lengths.reserve(xs.size() + ys.size());
    for (const auto& v : xs) lengths.push_back(bit_length(v));
    for (const auto& v : ys) lengths.push_back(bit_length(v));
    return shared->lookup(lengths);
  };
  return f;
}

OracleFn builtin_oracle(const std::string& name) {
  auto& reg = builtin_registry();
  auto it = reg.find(name);
  if (it == reg.end()) throw MissingOracle("no builtin oracle named '" + name + "'");
  return it->second;
}

void register_builtin_oracle(const std::string& name, OracleFn fn) {
  builtin_registry()[name] = std::move(fn);
}

bool has_builtin_oracle(const std::string& name) {
  return builtin_registry().count(name) != 0;
}

OracleFn subgraph_oracle(ProofGraph g, OracleEnv env) {
  auto diags = validate_graph(g);
  if (!diags.empty())
    throw Error("subgraph oracle '" + g.name + "' is not a valid proof: " +
                diags.front().node + ": " + diags.front().message);
  auto shared_g = std::make_shared<ProofGraph>(std::move(g));
  auto shared_env = std::make_shared<OracleEnv>(std::move(env));
  OracleFn f;
  f.kind = "subgraph";
  f.fn = [shared_g, shared_env](const std::vector<Value>& xs,
                                const std::vector<Value>& ys) -> Value {
    return eval(*shared_g, xs, ys, *shared_env);
  };
  return f;
}

OracleEnv env_for(const ProofGraph& g, const std::filesystem::path& base_dir) {
  OracleEnv env;
  for (const auto& [name, d] : g.oracles) {
    if (d.source.rfind("builtin:", 0) == 0) {
      OracleFn f = builtin_oracle(d.source.substr(8));
      f.kind = d.kind;
      env.bind(name, std::move(f));
    } else if (d.source.size() > 4 && d.source.ends_with(".adv")) {
      env.bind(name, advice_oracle(load_advice(base_dir / d.source)));
    } else if (d.source.size() > 4 && d.source.ends_with(".cbp")) {
      auto path = base_dir / d.source;
      ProofGraph sub = load_proof(path);
      OracleEnv sub_env = env_for(sub, path.parent_path());
      env.bind(name, subgraph_oracle(std::move(sub), std::move(sub_env)));
    } else {
      throw MissingOracle("cannot resolve source '" + d.source + "' for oracle '" + name + "'");
    }
  }
  return env;
}

namespace {

struct ResolvedGraph {
  std::map<std::string, const Node*> byid;
  std::map<const Node*, std::vector<const Node*>> prem;

  explicit ResolvedGraph(const ProofGraph& g) {
    for (const auto& n : g.nodes) byid[n.id] = &n;
    for (const auto& n : g.nodes) {
      auto& ps = prem[&n];
      ps.reserve(n.premises.size());
      for (const auto& p : n.premises) ps.push_back(byid.at(p));
    }
  }
};

using MemoKey = std::tuple<const Node*, std::vector<Value>, std::vector<Value>>;

// Calls along a tail chain all share the final value, so every key in the
// chain is committed when that value arrives. The cap only limits how much
// memoization we buy, never correctness.
constexpr size_t kChainCap = 4096;

}  // namespace

Value eval(const ProofGraph& g, const std::string& node, std::vector<Value> xs,
           std::vector<Value> ys, const OracleEnv& env, EvalBudget budget) {
  const Node* start = &g.at(node);
  if (static_cast<int>(xs.size()) != start->seq.normals ||
      static_cast<int>(ys.size()) != start->seq.safes) {
    std::ostringstream os;
    os << "node '" << node << "' has sequent " << to_string(start->seq) << ", got "
       << xs.size() << " normal and " << ys.size() << " safe argument(s)";
    throw Error(os.str());
  }

  ResolvedGraph rg(g);
  std::map<MemoKey, Value> memo;
  std::vector<MemoKey> chain;

  struct Frame {
    const Node* node;
    int stage;
    std::vector<Value> xs, ys;
    size_t chain_base;
  };
  std::vector<Frame> frames;

  const Node* cur = start;
  long long fuel = budget.fuel;
  bool returning = false;
  Value ret;

  for (;;) {
    if (!returning) {
      MemoKey key{cur, xs, ys};
      if (auto it = memo.find(key); it != memo.end()) {
        ret = it->second;
        returning = true;
        continue;
      }
      if (--fuel < 0) throw FuelExhausted("evaluation stopped after exhausting its fuel");
      size_t base = frames.empty() ? 0 : frames.back().chain_base;
      if (chain.size() - base < kChainCap) chain.push_back(std::move(key));

      const auto& ps = rg.prem.at(cur);
      switch (cur->rule.rule) {
        case Rule::Id:
          ret = ys[0];
          returning = true;
          break;
        case Rule::Zero:
          ret = 0;
          returning = true;
          break;
        case Rule::One:
          ret = 1;
          returning = true;
          break;
        case Rule::S0:
        case Rule::S1:
        case Rule::CutN:
        case Rule::CutBox:
          frames.push_back({cur, 0, xs, ys, chain.size()});
          cur = ps[0];
          break;
        case Rule::WeakN:
          ys.pop_back();
          cur = ps[0];
          break;
        case Rule::WeakBox:
          xs.erase(xs.begin());
          cur = ps[0];
          break;
        case Rule::ExchN:
          std::swap(ys[cur->rule.index], ys[cur->rule.index + 1]);
          cur = ps[0];
          break;
        case Rule::ExchBox:
          std::swap(xs[cur->rule.index], xs[cur->rule.index + 1]);
          cur = ps[0];
          break;
        case Rule::BoxL:
          ys.push_back(std::move(xs.front()));
          xs.erase(xs.begin());
          cur = ps[0];
          break;
        case Rule::BoxR:
        case Rule::Dis:
          cur = ps[0];
          break;
        case Rule::SRec:
          if (xs[0] == 0) {
            xs.erase(xs.begin());
            cur = ps[0];
          } else {
            frames.push_back({cur, 0, xs, ys, chain.size()});
            xs[0] >>= 1;
          }
          break;
        case Rule::CondN: {
          Value v = std::move(ys.back());
          if (v == 0) {
            ys.pop_back();
            cur = ps[0];
          } else {
            bool odd = boost::multiprecision::bit_test(v, 0);
            ys.back() = v >> 1;
            cur = ps[odd ? 2 : 1];
          }
          break;
        }
        case Rule::CondBox: {
          Value v = std::move(xs.front());
          if (v == 0) {
            xs.erase(xs.begin());
            cur = ps[0];
          } else {
            bool odd = boost::multiprecision::bit_test(v, 0);
            xs.front() = v >> 1;
            cur = ps[odd ? 2 : 1];
          }
          break;
        }
        case Rule::PCondN: {
          Value v = std::move(ys.back());
          if (v == 0) {
            ys.pop_back();
            cur = ps[0];
          } else {
            ys.back() = v >> 1;
            cur = ps[1];
          }
          break;
        }
        case Rule::PCondBox: {
          Value v = std::move(xs.front());
          if (v == 0) {
            xs.erase(xs.begin());
            cur = ps[0];
          } else {
            xs.front() = v >> 1;
            cur = ps[1];
          }
          break;
        }
        case Rule::OracleLeaf: {
          const OracleFn* f = env.find(cur->rule.oracle);
          if (!f || !f->fn)
            throw MissingOracle("oracle '" + cur->rule.oracle +
                                "' is not bound in the evaluation environment");
          ret = f->fn(xs, ys);
          if (ret < 0) throw UndefinedCase("oracle '" + cur->rule.oracle + "' returned a negative value");
          returning = true;
          break;
        }
      }
    } else {
      size_t base = frames.empty() ? 0 : frames.back().chain_base;
      while (chain.size() > base) {
        memo.emplace(std::move(chain.back()), ret);
        chain.pop_back();
      }
      if (frames.empty()) return ret;
      Frame& f = frames.back();
      const auto& ps = rg.prem.at(f.node);
      switch (f.node->rule.rule) {
        case Rule::S0:
        case Rule::S1: {
          int bit = f.node->rule.rule == Rule::S1 ? 1 : 0;
          ret = (ret << 1) + bit;
          frames.pop_back();
          break;
        }
        case Rule::CutN:
          if (f.stage == 0) {
            f.stage = 1;
            xs = f.xs;
            ys = f.ys;
            ys.push_back(std::move(ret));
            cur = ps[1];
            returning = false;
          } else {
            frames.pop_back();
          }
          break;
        case Rule::CutBox:
          if (f.stage == 0) {
            f.stage = 1;
            xs = f.xs;
            xs.insert(xs.begin(), std::move(ret));
            ys = f.ys;
            cur = ps[1];
            returning = false;
          } else {
            frames.pop_back();
          }
          break;
        case Rule::SRec: {
          // self call finished; tail into the matching step premise
          bool odd = boost::multiprecision::bit_test(f.xs[0], 0);
          xs = std::move(f.xs);
          xs[0] >>= 1;
          ys = std::move(f.ys);
          ys.push_back(std::move(ret));
          cur = ps[odd ? 2 : 1];
          frames.pop_back();
          returning = false;
          break;
        }
        default:
          throw Error("internal: unexpected frame rule");
      }
    }
  }
}

Value eval(const ProofGraph& g, std::vector<Value> normals, std::vector<Value> safes,
           const OracleEnv& env, EvalBudget budget) {
  return eval(g, g.root().id, std::move(normals), std::move(safes), env, budget);
}

namespace {

Value random_with_length(std::mt19937& gen, int len) {
  if (len <= 0) return 0;
  Value v = Value(1) << (len - 1);
  for (int i = 0; i < len - 1; ++i)
    if (gen() & 1) boost::multiprecision::bit_set(v, i);
  return v;
}

}  // namespace

std::optional<LengthCounterexample> probe_length_determined(const OracleFn& f, int normals,
                                                            int safes, int samples,
                                                            unsigned seed) {
  if (!f.fn) throw MissingOracle("probe on an unbound oracle");
  std::mt19937 gen(seed);
  std::uniform_int_distribution<int> len_dist(0, 12);
  for (int s = 0; s < samples; ++s) {
    LengthCounterexample cx;
    for (int i = 0; i < normals; ++i) {
      int len = len_dist(gen);
      cx.normals_a.push_back(random_with_length(gen, len));
      cx.normals_b.push_back(random_with_length(gen, len));
    }
    for (int j = 0; j < safes; ++j) {
      int len = len_dist(gen);
      cx.safes_a.push_back(random_with_length(gen, len));
      cx.safes_b.push_back(random_with_length(gen, len));
    }
    cx.out_a = f.fn(cx.normals_a, cx.safes_a);
    cx.out_b = f.fn(cx.normals_b, cx.safes_b);
    if (cx.out_a != cx.out_b) return cx;
  }
  return std::nullopt;
}

namespace {

struct ExpansionBuilder {
  const OracleFn& fn;
  int depth;
  ProofGraph g;
  int counter = 0;
  int unknowns = 0;

  std::string fresh() { return "e" + std::to_string(counter++); }

  std::string add(Sequent seq, RuleApp rule, std::vector<std::string> prem) {
    Node n;
    n.id = fresh();
    n.seq = seq;
    n.rule = std::move(rule);
    n.premises = std::move(prem);
    g.nodes.push_back(n);
    return g.nodes.back().id;
  }

  std::string unknown_leaf(int m, int n) {
    std::string name = "unknown" + std::to_string(unknowns++);
    g.oracles[name] = {name, m, n, "length-relation", "builtin:const-0"};
    return add({m, n, Succ::N}, {Rule::OracleLeaf, -1, name}, {});
  }

  // Derivation for the relation with the first (M-m) normal lengths and the
  // last (N-n) safe lengths already determined.
  std::string build(int m, int n, std::vector<int>& norm_done, std::vector<int>& safe_done_rev) {
    if (m > 0) return tower(m, n, 0, norm_done, safe_done_rev, /*normal=*/true);
    if (n > 0) return tower(m, n, 0, norm_done, safe_done_rev, /*normal=*/false);
    std::vector<Value> xs, ys;
    for (int l : norm_done) xs.push_back(repunit(l));
    for (auto it = safe_done_rev.rbegin(); it != safe_done_rev.rend(); ++it)
      ys.push_back(repunit(*it));
    Value bit = fn.fn(xs, ys);
    return add({0, 0, Succ::N}, {bit != 0 ? Rule::One : Rule::Zero}, {});
  }

  std::string tower(int m, int n, int j, std::vector<int>& norm_done,
                    std::vector<int>& safe_done_rev, bool normal) {
    std::vector<std::string> prem;
    if (normal) {
      norm_done.push_back(j);
      prem.push_back(build(m - 1, n, norm_done, safe_done_rev));
      norm_done.pop_back();
    } else {
      safe_done_rev.push_back(j);
      prem.push_back(build(m, n - 1, norm_done, safe_done_rev));
      safe_done_rev.pop_back();
    }
    prem.push_back(j + 1 < depth ? tower(m, n, j + 1, norm_done, safe_done_rev, normal)
                                 : unknown_leaf(m, n));
    return add({m, n, Succ::N}, {normal ? Rule::PCondBox : Rule::PCondN}, std::move(prem));
  }
};

}  // namespace

ProofGraph expand_relation(const OracleDecl& decl, const OracleFn& fn, int depth) {
  if (depth < 0) throw Error("expansion depth must be non-negative");
  if (!fn.fn) throw MissingOracle("expand_relation on an unbound oracle");
  ExpansionBuilder b{fn, depth};
  b.g.name = decl.name + "_expansion";
  std::string root;
  if (depth == 0) {
    root = b.unknown_leaf(decl.normals, decl.safes);
  } else {
    std::vector<int> norm_done, safe_done_rev;
    root = b.build(decl.normals, decl.safes, norm_done, safe_done_rev);
  }

  // Reorder into DFS preorder from the root; the tree has no cycles.
  std::map<std::string, Node> pool;
  for (auto& n : b.g.nodes) pool[n.id] = std::move(n);
  ProofGraph out;
  out.name = b.g.name;
  out.oracles = b.g.oracles;
  std::vector<std::string> stack = {root};
  std::set<std::string> seen;
  while (!stack.empty()) {
    std::string id = stack.back();
    stack.pop_back();
    if (!seen.insert(id).second) continue;
    Node& n = pool.at(id);
    for (auto it = n.premises.rbegin(); it != n.premises.rend(); ++it) stack.push_back(*it);
    out.nodes.push_back(std::move(n));
  }
  return out;
}

}  // namespace cbp
