#pragma once

#include "cbproof/algebra.hpp"
#include "cbproof/checker.hpp"

namespace cbp {

// The presentation breaks the shape contract for cycles: a bud whose
// companion is not an ancestor, or a node that duplicates an ancestor
// instead of closing a cycle back to it.
struct NotCycleNormal : Error {
  using Error::Error;
};

// A cycle is entered without crossing a case split on a normal argument, so
// the recursion it denotes has no decreasing argument to recurse on.
struct StrictnessViolation : Error {
  using Error::Error;
};

struct CycleAnalysis {
  GraphShape shape;
  // Companions of buds below each node that close strictly above it. Empty
  // at the root of any accepted presentation.
  std::map<std::string, std::set<std::string>> open_above;
};

// Checks the shape conditions and computes the open-cycle map. Throws
// NotCycleNormal when a companion is unreachable along tree edges from above
// or when a subtree is bisimilar to one rooted at a proper ancestor.
CycleAnalysis cycle_nf(const ProofGraph&);

// Syntactic examination of every companion-to-bud cycle, independent of the
// trace-based checks: which rules occur on the cycle and through which
// premise slots it runs.
struct StructureReport {
  struct Path {
    std::string companion;
    std::string bud_node;
    int bud_slot = 0;
    bool progress = false;                       // a case split on a normal is taken rightward
    std::vector<std::string> safety_violations;  // rules that smuggle safes into normals
    std::vector<std::string> left_violations;    // rules that nest recursion on the right
  };
  std::vector<Path> paths;
  bool all_progress = true, none_unsafe = true, none_right = true;
};

StructureReport structure_check(const ProofGraph&);

// Erases the safe context of the subproof at `node` (which must conclude
// boxed N): the result is a standalone graph concluding with no safe
// assumptions, computing the same function of the normal arguments.
ProofGraph cutbox_star(const ProofGraph&, const std::string& node);

struct TranslateOptions {
  // Refuse input that does not classify as a checked cyclic derivation.
  // Disabling this exposes StrictnessViolation on crafted graphs.
  bool verify_classification = true;
};

// Reads a checked presentation as a function-algebra term over its declared
// relations. Cycles become prefix-guarded recursions.
algebra::TermPtr translate(const ProofGraph&, const TranslateOptions& = {});

// Rewrites every safe-recursion node as an explicit cycle (dis over a case
// split on the recursion argument), preserving the defined function.
ProofGraph srec_to_cycle(const ProofGraph&);

}  // namespace cbp
