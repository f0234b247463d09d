#pragma once

#include "cbproof/kernel.hpp"

namespace cbp {

// A concrete cycle, as consecutive premise edges (node, slot); the last edge
// re-enters the node the first edge leaves.
struct CycleWitness {
  std::vector<std::pair<std::string, int>> edges;
};

std::string to_string(const CycleWitness&);

struct CheckResult {
  bool ok = true;
  std::optional<CycleWitness> witness;
  std::string detail;
};

// No cut_box conclusion lies on a directed cycle.
CheckResult check_safe(const ProofGraph&);

// No directed cycle traverses the right (recursion-carrying) premise of a
// cut_n. Buds must sit under left cut branches only.
CheckResult check_left_leaning(const ProofGraph&);

struct ClosureBudget {
  std::size_t max_elements = 1'000'000;
};

// Resource exhaustion while composing trace relations; never a verdict.
struct ClosureOverflow : Error {
  using Error::Error;
};

struct ProgressResult {
  bool ok = true;
  std::optional<CycleWitness> witness;  // an idempotent loop with no strict thread
  std::size_t closure_size = 0;
};

// Every infinite branch of the unfolding carries a normal-position thread
// that is progressed (strictly halved) infinitely often. Decided by closing
// the per-edge ancestry relations under composition and inspecting the
// idempotent self-loops.
ProgressResult check_progressing(const ProofGraph&, ClosureBudget = {});

using RuleSet = std::set<Rule>;

// The rules a presentation is measured against when looking for oracle-like
// subderivations: cond_box, cond_n, s0, s1, id. The bootstrapped pcond
// variants are deliberately not in it.
extern const RuleSet kNuBRuleSet;

// A node is free when no rule from the set occurs anywhere reachable from it.
bool rule_free(const ProofGraph&, const std::string& node, const RuleSet&);

// Free nodes not reachable from any other free node: pairwise unreachable
// and every free node sits in one of their regions. A mutually-reachable
// family of free nodes is represented by its first declared member.
std::vector<std::string> minimal_free_nodes(const ProofGraph&, const RuleSet&);

struct NotProgressing : Error {
  using Error::Error;
};

struct FactorResult {
  ProofGraph graph;
  std::map<std::string, ProofGraph> definitions;  // oracle name -> excised subproof
};

// Excise the minimal free regions (w.r.t. the nuB rule set) into subgraph
// oracles, leaving a proof over those oracles with identical semantics.
// Free nodes with a boxN succedent cannot become oracle leaves, so the
// boundary moves to their premises. Pre: the graph is progressing.
FactorResult factor(const ProofGraph&);

struct Verdict {
  enum class Class { CB, NuBPresentation, BDerivation, Rejected };
  Class cls = Class::Rejected;
  bool progressing = false, safe = false, left_leaning = false;
  std::vector<std::string> reasons;
  std::optional<CycleWitness> witness;
};

std::string to_string(Verdict::Class);

// Decision tree over a valid graph: srec only in finite derivations; cyclic
// graphs must be progressing, safe and left-leaning; oracles decide between
// the oracle-free class and presentations over declared length relations.
Verdict classify(const ProofGraph&);

}  // namespace cbp
