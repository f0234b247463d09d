#pragma once

#include <compare>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cbp {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Sequents have the shape  []N^m, N^n => A  with A one of N, []N.
// Normal (boxed) antecedent positions always precede safe ones.
enum class Succ { N, BoxN };

struct Sequent {
  int normals = 0;
  int safes = 0;
  Succ succ = Succ::N;
  friend auto operator<=>(const Sequent&, const Sequent&) = default;
};

std::string to_string(const Sequent&);

enum class Rule {
  Id,
  Zero,
  One,
  S0,
  S1,
  CutN,
  CutBox,
  WeakN,
  WeakBox,
  ExchN,
  ExchBox,
  BoxL,
  BoxR,
  SRec,
  CondN,
  CondBox,
  PCondN,
  PCondBox,
  Dis,
  OracleLeaf,
};

// One rule instance. Exchange rules carry the swap position (i swaps with
// i+1 inside the relevant zone); oracle leaves carry the declared relation's
// name.
struct RuleApp {
  Rule rule = Rule::Id;
  int index = -1;
  std::string oracle;
  friend bool operator==(const RuleApp&, const RuleApp&) = default;
};

const char* rule_name(Rule);
std::optional<Rule> rule_from_name(const std::string&);

struct OracleDecl {
  std::string name;
  int normals = 0;
  int safes = 0;
  std::string kind;    // "length-relation", "subgraph" or "host"
  std::string source;  // .adv path, builtin:<name>, or a proof file for subgraphs
};

struct Node {
  std::string id;
  Sequent seq;
  RuleApp rule;
  std::vector<std::string> premises;
};

// A finite presentation of a (possibly non-wellfounded) derivation: nodes in
// declaration order with the root first, premise edges by id. Cycles may only
// close through dis nodes; validate_graph enforces that and everything local.
struct ProofGraph {
  std::string name;
  std::vector<Node> nodes;
  std::map<std::string, OracleDecl> oracles;

  const Node* find(const std::string& id) const;
  const Node& at(const std::string& id) const;  // throws Error if missing
  const Node& root() const;
};

struct IncompatibleSequent : Error {
  using Error::Error;
};

// Premise sequents forced by a rule instance at the given conclusion, in
// premise order. Oracle leaves consult the context's declaration table.
// Throws IncompatibleSequent when the conclusion does not fit the rule.
std::vector<Sequent> rule_signature(const RuleApp&, const Sequent& conclusion,
                                    const ProofGraph* context = nullptr);

struct Diagnostic {
  std::string node;
  std::string message;
};

// Local and structural invariants: ids resolve, premise sequents match
// rule_signature, every node is reachable, subproofs are shared only through
// dis nodes, and every cycle closes through a dis node. Empty result means
// the graph is well formed.
std::vector<Diagnostic> validate_graph(const ProofGraph&);

// Tree skeleton of a valid graph. Premise edges are classified by a DFS from
// the root in premise order: the first visit of a node makes the tree edge,
// every other edge must point at a dis node and is recorded as a bud of that
// companion.
struct GraphShape {
  std::vector<std::string> preorder;
  std::map<std::string, std::string> parent;  // child -> tree parent
  std::map<std::string, int> enter, leave;    // Euler intervals
  std::map<std::string, int> depth;
  // companion -> bud edges (node, premise slot), in DFS discovery order
  std::map<std::string, std::vector<std::pair<std::string, int>>> buds;
  std::set<std::pair<std::string, int>> bud_edges;

  bool is_tree_edge(const std::string& node, int slot) const;
  bool ancestor_or_self(const std::string& up, const std::string& down) const;
};

// Pre: validate_graph returned no diagnostics.
GraphShape analyze_shape(const ProofGraph&);

enum class Zone { Normal, Safe, Succedent };

struct Pos {
  Zone zone = Zone::Normal;
  int index = 0;
  friend auto operator<=>(const Pos&, const Pos&) = default;
};

// Formula ancestry across one premise edge, mapping conclusion positions to
// premise positions. A link is strict where the premise occurrence is a
// predecessor of the conclusion one; that happens exactly at the normal
// principal of cond_box / pcond_box in the non-zero premises.
struct AncestryLink {
  Pos from;  // conclusion side
  Pos to;    // premise side
  bool strict = false;
};

std::vector<AncestryLink> ancestry_edges(const ProofGraph&, const std::string& node,
                                         int premise_index);

// Finite unfolding to the given edge depth; depth 0 is the node alone.
// `path` lists dot-separated premise indices from the unfolding root ("" there).
struct UnfoldTree {
  std::string node;
  std::string path;
  Sequent seq;
  RuleApp rule;
  std::vector<UnfoldTree> children;
};

UnfoldTree unfold(const ProofGraph&, const std::string& node, int depth);

}  // namespace cbp
