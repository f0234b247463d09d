#pragma once

#include <filesystem>
#include <iosfwd>

#include "cbproof/kernel.hpp"

namespace cbp {

struct FormatError : Error {
  int line;
  FormatError(int line_, const std::string& msg)
      : Error("line " + std::to_string(line_) + ": " + msg), line(line_) {}
};

// Line-oriented proof documents:
//
//   # comment
//   proof <name>
//   oracle <name> normal <m> safe <n> kind <kind> source <source>
//   node <id> seq <m> <n> <N|boxN> rule <tag> [<index>|<oracle>] [prem <id>...]
//
// Premises may reference nodes declared later (tree children) or earlier;
// a reference that closes a cycle must name a dis node.
ProofGraph parse_proof(std::istream&);
ProofGraph parse_proof_string(const std::string&);
ProofGraph load_proof(const std::filesystem::path&);

// Canonical form: oracles sorted by name, nodes in declaration order, single
// spaces, no comments. parse(serialize(g)) == g, and serialize(parse(s)) == s
// for canonical s.
std::string serialize_proof(const ProofGraph&);
void save_proof(const ProofGraph&, const std::filesystem::path&);

// Advice tables map length tuples to bits:
//
//   <l1> <l2> ... -> <0|1>
//   default <0|1>
struct AdviceTable {
  std::map<std::vector<int>, int> rows;
  int default_bit = 0;

  int lookup(const std::vector<int>& lengths) const;
  friend bool operator==(const AdviceTable&, const AdviceTable&) = default;
};

AdviceTable parse_advice(std::istream&);
AdviceTable parse_advice_string(const std::string&);
AdviceTable load_advice(const std::filesystem::path&);
std::string serialize_advice(const AdviceTable&);

}  // namespace cbp
