#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <functional>

#include "cbproof/prooffmt.hpp"

namespace cbp {

// Derivations denote functions over binary naturals; values never go
// negative. Bit length of 0 is 0.
using Value = boost::multiprecision::cpp_int;

int bit_length(const Value&);
Value repunit(int bits);  // 1^bits, the canonical value of each length

struct MissingOracle : Error {
  using Error::Error;
};

struct UndefinedCase : Error {
  using Error::Error;
};

// Distinguished outcome, not a judgement about the input: raised when the
// step budget runs out, which on divergent derivations is the only exit.
struct FuelExhausted : Error {
  using Error::Error;
};

struct OracleFn {
  std::string kind = "length-relation";
  std::function<Value(const std::vector<Value>& normals, const std::vector<Value>& safes)> fn;
  // declared growth bound sum c_i * n^i, informational for host oracles
  std::vector<long long> bound_coeffs = {1};
};

struct OracleEnv {
  std::map<std::string, OracleFn> table;

  void bind(const std::string& name, OracleFn fn) { table[name] = std::move(fn); }
  const OracleFn* find(const std::string& name) const {
    auto it = table.find(name);
    return it == table.end() ? nullptr : &it->second;
  }
};

// A length-relation backed by an advice table: the value depends only on the
// lengths of all arguments, normals first.
OracleFn advice_oracle(AdviceTable);

// Built-in oracle sources, addressed as "builtin:<name>" in declarations.
// Ships with parity-len, halting-stub, const-0, const-1; other modules may
// register more (circuit families, the host circuit evaluator).
OracleFn builtin_oracle(const std::string& name);
void register_builtin_oracle(const std::string& name, OracleFn);
bool has_builtin_oracle(const std::string& name);

// Subgraph oracle: evaluates another proof graph on the call's arguments.
OracleFn subgraph_oracle(ProofGraph, OracleEnv);

// Resolve a graph's declarations: .adv paths relative to base_dir, builtins,
// and .cbp sources as subgraph oracles. Throws MissingOracle on unresolvable
// sources.
OracleEnv env_for(const ProofGraph&, const std::filesystem::path& base_dir = ".");

struct EvalBudget {
  long long fuel = 10'000'000;  // counted per rule application
};

// Evaluate the subderivation rooted at `node` on the given arguments.
// Pre: validate_graph(g) is empty and the argument counts match the node's
// sequent. Iterative machine, so divergent inputs burn fuel, not stack.
Value eval(const ProofGraph& g, const std::string& node, std::vector<Value> normals,
           std::vector<Value> safes, const OracleEnv& env = {}, EvalBudget budget = {});

Value eval(const ProofGraph& g, std::vector<Value> normals, std::vector<Value> safes,
           const OracleEnv& env = {}, EvalBudget budget = {});

struct LengthCounterexample {
  std::vector<Value> normals_a, safes_a;
  std::vector<Value> normals_b, safes_b;
  Value out_a, out_b;
};

// Randomized refuter for "the output depends only on argument lengths":
// a returned counterexample is always genuine, absence is only evidence.
std::optional<LengthCounterexample> probe_length_determined(const OracleFn&, int normals,
                                                            int safes, int samples,
                                                            unsigned seed);

// Unrolls a length-relation into a finite derivation that agrees with it on
// every argument tuple whose lengths are all < depth: towers of pcond_box /
// pcond_n peel one length unit at a time; tuples past the horizon fall into
// fresh default-0 oracle leaves.
ProofGraph expand_relation(const OracleDecl&, const OracleFn&, int depth);

}  // namespace cbp
