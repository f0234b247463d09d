#pragma once

#include <memory>

#include "cbproof/evaluator.hpp"

namespace cbp::algebra {

using cbp::Value;

// Every term carries the explicit ambient argument vector it consumes:
// `normals` oracle-free arguments, `safes` full arguments.
struct Arity {
  int normals = 0;
  int safes = 0;
  friend auto operator<=>(const Arity&, const Arity&) = default;
};

enum class TermKind {
  Zero,             // constant 0
  S0,               // 2 * last safe
  S1,               // 2 * last safe + 1
  Pred,             // floor(last safe / 2)
  Cond,             // on the last four safes (w,x,y,z): w=0 -> x, even -> y, odd -> z
  ProjN,            // normal argument `index`
  ProjS,            // safe argument `index`
  OracleCall,       // a bound recursion oracle applied to the ambient arguments
  InitialRelation,  // an environment relation applied to the ambient arguments
  CompSafe,         // sub = {g, h}: h(xs; ys, g(xs; ys))
  CompNormal,       // sub = {g, h}: h(g(xs;), xs; ys); g consumes no safes
  RecPP,            // sub = {body}; bound = {a}: prefix-guarded recursion
  RecSim,           // sub = {k bodies}; bound = {k names}; `index` selects a component
  Call,             // sub = {f, normal args..., safe args...}; explicit composition
};

struct Term;
using TermPtr = std::shared_ptr<const Term>;

struct Term {
  TermKind kind;
  Arity arity;
  int index = -1;                   // ProjN, ProjS, RecSim component
  std::string name;                 // OracleCall, InitialRelation
  std::vector<std::string> bound;   // RecPP, RecSim
  std::vector<TermPtr> sub;
  int call_normals = 0;             // Call: how many of sub[1..] are normal arguments
};

struct IllFormedTerm : cbp::Error {
  using Error::Error;
};

// Factories; each checks the local shape it can see.
TermPtr zero(Arity);
TermPtr succ0(Arity);
TermPtr succ1(Arity);
TermPtr pred(Arity);
TermPtr cond(Arity);
TermPtr proj_n(int index, Arity);
TermPtr proj_s(int index, Arity);
TermPtr oracle_call(std::string name, Arity);
TermPtr initial_relation(std::string name, Arity);
TermPtr comp_safe(TermPtr g, TermPtr h);
TermPtr comp_normal(TermPtr g, TermPtr h);
TermPtr rec_pp(std::string name, TermPtr body);
TermPtr rec_sim(std::vector<std::string> names, std::vector<TermPtr> bodies, int component = 0);
TermPtr call(TermPtr f, std::vector<TermPtr> normal_args, std::vector<TermPtr> safe_args,
             Arity ambient);

// Arity discipline, operand positions, oracle scoping, oracle-freeness of
// normal arguments. Throws IllFormedTerm.
void well_formed(const TermPtr&);

// s-expression syntax, re-parsable: (zero 2 1), (comp-safe G H),
// (rec-pp a BODY), (rec-sim 0 a b BODY1 BODY2), (call 2 1 F (N...) (S...)), ...
std::string serialize_term(const TermPtr&);
TermPtr parse_term(const std::string&);

// Direct evaluation. Guarded oracles answer recursive calls (strictly
// prefix-smaller normals, prefix-bounded safes) and return 0 outside the
// guard. Total on well-formed terms.
Value eval_term(const TermPtr&, const std::vector<Value>& normals,
                const std::vector<Value>& safes, const OracleEnv& = {});

// Same semantics via the finite lookup-table method: each recursion is
// tabulated over enumerate_pp of its invocation arguments, then the body is
// applied once. An independent route for cross-checking eval_term.
Value eval_term_table(const TermPtr&, const std::vector<Value>& normals,
                      const std::vector<Value>& safes, const OracleEnv& = {});

// The prefix order on tuples: u <= x when some permutation matches every
// u_i to a bit-prefix of x_{pi(i)}; strict when on top of that some match is
// a proper prefix.
enum class PPOrder { Strict, NonStrict, Incomparable };

bool is_bit_prefix(const Value& u, const Value& x);
PPOrder pp_compare(const std::vector<Value>& u, const std::vector<Value>& x);

struct PPPoint {
  std::vector<Value> normals, safes;
  friend bool operator==(const PPPoint&, const PPPoint&) = default;
};

// All points with normals strictly below and safes non-strictly below the
// given tuple, in an order compatible with the product order (anything a
// guarded call can reach appears before its caller).
std::vector<PPPoint> enumerate_pp(const std::vector<Value>& normals,
                                  const std::vector<Value>& safes);

// Polynomials with non-negative integer coefficients; index = degree.
struct Poly {
  std::vector<Value> c;

  Value operator()(const Value& n) const;
  friend bool operator==(const Poly&, const Poly&) = default;
};

Poly poly_const(Value v);
Poly poly_n();
Poly add(const Poly&, const Poly&);
Poly mul(const Poly&, const Poly&);
Poly compose(const Poly& outer, const Poly& inner);
std::string to_string(const Poly&);

// A polynomial p with |f(xs; ys)| <= p(sum |xs|) + max |ys| for all
// arguments. Pre: the term is closed except for initial relations.
Poly bound_poly(const TermPtr&);

// Replace a simultaneous recursion by a single prefix-guarded one: rotation
// tags in fresh trailing safe arguments select the component. Returns the
// component functions, each of the original arity.
std::vector<TermPtr> reduce_simultaneous(const TermPtr& rec_sim_term);

// Answers like the argument oracle while every argument is shorter than m
// bits, 0 otherwise.
OracleFn truncate_oracle(const OracleFn&, int m);

}  // namespace cbp::algebra
