#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cbproof/algebra.hpp"
#include "cbproof/evaluator.hpp"
#include "cbproof/kernel.hpp"

namespace cbp {

// Boolean circuits with fan-in-two gates, self-delimiting descriptions, and
// polynomial-size circuit families served to proofs through length-determined
// bit oracles.

enum class GateKind { And = 0, Or = 1, Not = 2, C0 = 3, C1 = 4 };

// Operands index the wire space: inputs first, then earlier gates.  `And` and
// `Or` use both operands, `Not` uses `a` only, constants use neither.  The
// output wire is always the last gate.
struct Gate {
  GateKind kind = GateKind::C0;
  int a = -1;
  int b = -1;

  friend bool operator==(const Gate&, const Gate&) = default;
};

struct Circuit {
  int inputs = 0;
  std::vector<Gate> gates;

  friend bool operator==(const Circuit&, const Circuit&) = default;
};

struct DecodeError : Error {
  using Error::Error;
};

// Throws Error when a gate references a wire that is not yet available, a
// constant carries operands, or the circuit has no gates.
void validate_circuit(const Circuit& c);

bool circuit_eval(const Circuit& c, const std::vector<bool>& inputs);

// Self-delimiting bit description: Elias-gamma codes for inputs+1 and
// gates+1, then per gate a three-bit kind followed by operands at the
// smallest width that addresses the wires defined so far.  Decoding ignores
// trailing bits, so descriptions may be padded with zeros on the right.
std::vector<bool> encode_circuit(const Circuit& c);
Circuit decode_circuit(const std::vector<bool>& bits);

// Text format, one directive per line:
//   inputs <n>
//   gate <name> <and|or|not|c0|c1> [operand...]
//   output <name>
// Operands are in<i> for inputs or the name of an earlier gate.  The output
// directive must name the last gate.  Serialization renames gates g0, g1, ...
Circuit parse_circuit(std::istream& in);
Circuit parse_circuit_string(const std::string& text);
Circuit load_circuit(const std::filesystem::path& path);
std::string serialize_circuit(const Circuit& c);

// A uniform presentation of one circuit per input length, with a declared
// polynomial bound on the description length.  `family_member` enforces the
// bound, so code downstream may size description fields from the polynomial
// alone.
struct CircuitFamily {
  std::string name;
  std::function<Circuit(int)> member;
  algebra::Poly description_bound;
  // Members and streamed descriptions depend only on the input length, so
  // both routes memoize per length; copies of the family share the caches.
  std::shared_ptr<std::map<int, Circuit>> member_cache =
      std::make_shared<std::map<int, Circuit>>();
  std::shared_ptr<std::map<int, Circuit>> streamed_cache =
      std::make_shared<std::map<int, Circuit>>();
};

Circuit family_member(const CircuitFamily& fam, int n);

CircuitFamily parity_family();
CircuitFamily majority_family();
CircuitFamily constant_family(bool value);
std::optional<CircuitFamily> find_family(const std::string& name);

// The description-bit relation (y, z ;) -> bit |z| of encode(member(|y|)),
// zero past the end.  Length-determined by construction.
OracleFn family_oracle(const CircuitFamily& fam);

// A term (y, z ;) that streams the first |z| description bits of the circuit
// for length |y|: bit 0 of the description lands on the most significant end
// of a |z|-wide field.  The term consults `relation` for individual bits;
// `width` is the field width to use for inputs of length n.
struct DescriptionProgram {
  algebra::TermPtr term;
  std::string relation;
  algebra::Poly width;
};

DescriptionProgram build_description_term(const CircuitFamily& fam);

// End-to-end check of one input: evaluate the description term at the
// polynomial width, decode the streamed bits, then run the circuit on the
// bits of `input` (least significant bit on wire in0).
bool pipeline_eval(const CircuitFamily& fam, const Value& input);

// A cyclic proof F with conclusion (z, y ;) -> N that computes the same
// streamed description value as the term from build_description_term.  Its
// only oracle is the description-bit relation, so it classifies as an
// advice-style presentation.
ProofGraph compile_family_to_proof(const CircuitFamily& fam);

// Extends the compiled proof with a host step: a cut on the boxed description
// value feeds (pad, d, y ;) to the eval-circuit oracle, which decodes d at
// width |pad| and runs the circuit on y.  Evaluating the result at
// z = repunit(width) reproduces the family's output.
ProofGraph family_pipeline_graph(const CircuitFamily& fam);

// Installs builtin oracles family-<name> for the stock families plus the
// eval-circuit host.  Safe to call repeatedly.
void register_family_builtins();

}  // namespace cbp
