// Circuits, self-delimiting descriptions, circuit families, and the pipeline
// that serves family descriptions to proofs through bit oracles.

#include <sstream>
#include <string>
#include <vector>

#include "cbproof/checker.hpp"
#include "cbproof/nonuniform.hpp"
#include "cbproof/prooffmt.hpp"
#include "doctest.h"
#include "support/brute.hpp"
#include "support/fixtures.hpp"

using namespace cbp;
namespace ts = cbp::testsupport;

namespace {

std::vector<bool> bits_of(const std::string& s) {
  std::vector<bool> out;
  for (char c : s) out.push_back(c == '1');
  return out;
}

// The first `width` description bits as the evaluator streams them: bit 0 on
// the most significant end of a width-wide field, zeros past the end.
Value stream_ref(const std::vector<bool>& bits, int width) {
  Value v = 0;
  for (int j = 0; j < width; ++j) {
    v <<= 1;
    if (j < static_cast<int>(bits.size()) && bits[j]) v += 1;
  }
  return v;
}

std::vector<bool> wires_of(const Value& v, int n) {
  std::vector<bool> w(n, false);
  for (int i = 0; i < n; ++i) w[i] = boost::multiprecision::bit_test(v, unsigned(i));
  return w;
}

}  // namespace

TEST_SUITE_BEGIN("nonuniform");

TEST_CASE("evaluating the two-input xor circuit") {
  Circuit c = load_circuit(ts::fixture_path("xor2.circ"));
  CHECK(c.inputs == 2);
  REQUIRE(c.gates.size() == 4);
  CHECK(c.gates[0] == Gate{GateKind::Or, 0, 1});
  CHECK(c.gates[1] == Gate{GateKind::And, 0, 1});
  CHECK(c.gates[2] == Gate{GateKind::Not, 3, -1});
  CHECK(c.gates[3] == Gate{GateKind::And, 2, 4});

  CHECK(circuit_eval(c, {false, false}) == false);
  CHECK(circuit_eval(c, {true, false}) == true);
  CHECK(circuit_eval(c, {false, true}) == true);
  CHECK(circuit_eval(c, {true, true}) == false);
  CHECK_THROWS_WITH_AS((void)circuit_eval(c, {true}), "circuit expects 2 inputs, got 1", Error);
}

TEST_CASE("circuit validation") {
  Circuit c;
  c.inputs = 1;
  CHECK_THROWS_WITH_AS((void)validate_circuit(c), "a circuit needs at least one gate", Error);
  c.gates = {{GateKind::And, 0, 1}};
  CHECK_THROWS_WITH_AS((void)validate_circuit(c), "gate 0: second operand is out of range",
                       Error);
  c.gates = {{GateKind::C0, 0, -1}};
  CHECK_THROWS_WITH_AS((void)validate_circuit(c), "gate 0: 'c0' takes 0 operand(s)", Error);
  c.gates = {{GateKind::Not, 0, -1}, {GateKind::And, 0, 1}};
  CHECK_NOTHROW(validate_circuit(c));
}

TEST_CASE("the xor circuit has the pinned description bits") {
  Circuit c = load_circuit(ts::fixture_path("xor2.circ"));
  std::vector<bool> enc = encode_circuit(c);
  CHECK(enc == bits_of("0110010100101000000101011000010100"));
  CHECK(decode_circuit(enc) == c);
}

TEST_CASE("descriptions survive an encode/decode round trip") {
  std::vector<Circuit> samples{load_circuit(ts::fixture_path("xor2.circ"))};
  for (const auto& fam :
       {parity_family(), majority_family(), constant_family(false), constant_family(true)})
    for (int n = 0; n <= 6; ++n) samples.push_back(family_member(fam, n));

  for (const Circuit& c : samples) {
    std::vector<bool> enc = encode_circuit(c);
    CHECK(decode_circuit(enc) == c);
    // Trailing padding is ignored.
    enc.insert(enc.end(), 5, false);
    CHECK(decode_circuit(enc) == c);
  }
}

TEST_CASE("malformed descriptions are rejected") {
  Circuit xo = load_circuit(ts::fixture_path("xor2.circ"));
  std::vector<bool> enc = encode_circuit(xo);

  SUBCASE("cut off inside a field") {
    enc.resize(8);
    CHECK_THROWS_WITH_AS((void)decode_circuit(enc),
                         "the description ends in the middle of a field", DecodeError);
    CHECK_THROWS_AS((void)decode_circuit(std::vector<bool>{}), DecodeError);
  }
  SUBCASE("unknown gate kind") {
    CHECK_THROWS_WITH_AS((void)decode_circuit(bits_of("1010101")),
                         "the description uses an unknown gate kind", DecodeError);
  }
  SUBCASE("operand out of scope") {
    CHECK_THROWS_WITH_AS((void)decode_circuit(bits_of("1010000")),
                         "the description references a wire that is not in scope", DecodeError);
  }
  SUBCASE("no gates") {
    CHECK_THROWS_WITH_AS((void)decode_circuit(bits_of("11")), "the description defines no gates",
                         DecodeError);
  }
  SUBCASE("absurd size field") {
    std::vector<bool> long_run(70, false);
    long_run.push_back(true);
    CHECK_THROWS_WITH_AS((void)decode_circuit(long_run),
                         "the description declares an absurd size", DecodeError);
  }
}

TEST_CASE("circuit text round trip and renaming") {
  Circuit c = load_circuit(ts::fixture_path("xor2.circ"));
  std::string canon = serialize_circuit(c);
  CHECK(canon ==
        "inputs 2\n"
        "gate g0 or in0 in1\n"
        "gate g1 and in0 in1\n"
        "gate g2 not g1\n"
        "gate g3 and g0 g2\n"
        "output g3\n");
  CHECK(parse_circuit_string(canon) == c);
  for (const auto& fam : {parity_family(), majority_family()})
    for (int n = 0; n <= 5; ++n) {
      Circuit m = family_member(fam, n);
      CHECK(parse_circuit_string(serialize_circuit(m)) == m);
    }
}

TEST_CASE("circuit text errors carry line numbers") {
  auto line_of = [](const std::string& text) -> std::string {
    try {
      (void)parse_circuit_string(text);
      return "(no error)";
    } catch (const FormatError& e) {
      return e.what();
    }
  };
  CHECK(line_of("gate a c0\n") == "line 1: the inputs directive must come before gates");
  CHECK(line_of("inputs 2\ngate in3 and in0 in1\n") ==
        "line 2: gate name 'in3' is reserved for inputs");
  CHECK(line_of("inputs 1\ngate a not in0\ngate a not in0\n") == "line 3: duplicate gate 'a'");
  CHECK(line_of("inputs 1\ngate a frob in0\n") == "line 2: unknown gate kind 'frob'");
  CHECK(line_of("inputs 1\ngate a not b\n") == "line 2: operand 'b' is not defined yet");
  CHECK(line_of("inputs 1\ngate a not in5\n") == "line 2: input 'in5' is out of range");
  CHECK(line_of("inputs 1\ngate a not in0 in0\n") == "line 2: 'not' takes 1 operand(s)");
  CHECK(line_of("inputs 1\ngate a not in0\ngate b not a\noutput a\n") ==
        "line 4: output must name the last gate");
  CHECK(line_of("inputs 1\ngate a not in0\noutput c\n") ==
        "line 3: output names an unknown gate 'c'");
  CHECK(line_of("inputs 1\nwibble\n") == "line 2: unknown directive 'wibble'");
  CHECK(line_of("inputs 1\ngate a not in0\n") == "line 2: missing output directive");
  // Comments and odd spacing are fine.
  Circuit ok = parse_circuit_string("# leading\n  inputs   1 # trailing\n\ngate a not in0\noutput a\n");
  CHECK(ok.inputs == 1);
  CHECK(ok.gates == std::vector<Gate>{{GateKind::Not, 0, -1}});
}

TEST_CASE("stock families stay within their declared description bounds") {
  for (const auto& fam :
       {parity_family(), majority_family(), constant_family(false), constant_family(true)})
    for (int n = 0; n <= 40; ++n) {
      Circuit c = family_member(fam, n);  // throws if the bound is broken
      CHECK(c.inputs == n);
    }
  CHECK_THROWS_WITH_AS((void)family_member(parity_family(), -1),
                       "circuit families are indexed by input length >= 0", Error);
}

TEST_CASE("a family that outgrows its bound is refused") {
  CircuitFamily tight;
  tight.name = "tight";
  tight.description_bound = algebra::Poly{{1}};
  tight.member = [](int n) {
    Circuit c;
    c.inputs = n;
    c.gates = {{GateKind::C0, -1, -1}};
    return c;
  };
  CHECK_THROWS_WITH_AS((void)family_member(tight, 0),
                       "the description of 'tight' member 0 exceeds the declared bound", Error);

  CircuitFamily lying;
  lying.name = "lying";
  lying.description_bound = algebra::Poly{{64, 8}};
  lying.member = [](int) {
    Circuit c;
    c.inputs = 3;
    c.gates = {{GateKind::C1, -1, -1}};
    return c;
  };
  CHECK_THROWS_AS((void)family_member(lying, 2), Error);
}

TEST_CASE("family members compute their advertised functions") {
  CircuitFamily par = parity_family();
  CircuitFamily maj = majority_family();
  for (int n = 0; n <= 6; ++n) {
    Circuit cp = family_member(par, n);
    Circuit cm = family_member(maj, n);
    for (unsigned long long v = 0; v < (1ull << n); ++v) {
      CHECK(circuit_eval(cp, wires_of(v, n)) == ts::ref_parity_bits(v, n));
      CHECK(circuit_eval(cm, wires_of(v, n)) == ts::ref_majority_bits(v, n));
    }
  }
}

TEST_CASE("the description-bit relation matches the encoder and is length-determined") {
  CircuitFamily fam = parity_family();
  OracleFn rel = family_oracle(fam);
  CHECK(rel.kind == "length-relation");
  for (int n = 0; n <= 5; ++n) {
    std::vector<bool> bits = encode_circuit(family_member(fam, n));
    for (int i = 0; i < static_cast<int>(bits.size()) + 5; ++i) {
      Value want = (i < static_cast<int>(bits.size()) && bits[i]) ? 1 : 0;
      CHECK(rel.fn({repunit(n), repunit(i)}, {}) == want);
    }
    // Only lengths matter.
    if (n >= 2) CHECK(rel.fn({repunit(n), Value(5)}, {}) == rel.fn({Value(1) << (n - 1), Value(4)}, {}));
  }
  CHECK(!probe_length_determined(rel, 2, 0, 300, 11).has_value());
  CHECK_THROWS_AS((void)rel.fn({1}, {}), Error);
}

TEST_CASE("the description term streams prefixes of the encoding") {
  CircuitFamily fam = parity_family();
  DescriptionProgram prog = build_description_term(fam);
  CHECK(prog.relation == "circ-parity");
  algebra::well_formed(prog.term);
  CHECK(prog.term->arity == algebra::Arity{2, 0});
  CHECK(prog.width(2) == fam.description_bound(2));

  OracleEnv env;
  env.bind(prog.relation, family_oracle(fam));
  for (int n = 0; n <= 4; ++n) {
    std::vector<bool> bits = encode_circuit(family_member(fam, n));
    Value y = repunit(n);
    CHECK(algebra::eval_term(prog.term, {y, 0}, {}, env) == 0);
    for (int j0 : {1, 5, 12, 40}) {
      CAPTURE(n);
      CAPTURE(j0);
      CHECK(algebra::eval_term(prog.term, {y, repunit(j0)}, {}, env) == stream_ref(bits, j0));
    }
  }
  // Two inputs of equal length stream the same description.
  CHECK(algebra::eval_term(prog.term, {Value(5), repunit(10)}, {}, env) ==
        algebra::eval_term(prog.term, {Value(7), repunit(10)}, {}, env));
  // A full-width stream reproduces the padded encoding end to end.
  int k = fam.description_bound(2).convert_to<int>();
  CHECK(algebra::eval_term(prog.term, {repunit(2), repunit(k)}, {}, env) ==
        stream_ref(encode_circuit(family_member(fam, 2)), k));
}

TEST_CASE("pipeline evaluation matches direct circuit evaluation") {
  CircuitFamily par = parity_family();
  CircuitFamily maj = majority_family();
  for (unsigned long long v = 0; v < 256; ++v) {
    int len = ts::brute_bitlen(v);
    CHECK(pipeline_eval(par, v) == ts::ref_parity_bits(v, len));
    if (v < 128) CHECK(pipeline_eval(maj, v) == ts::ref_majority_bits(v, len));
  }
  for (unsigned long long v : {0ull, 3ull, 21ull}) {
    CHECK(pipeline_eval(constant_family(false), v) == false);
    CHECK(pipeline_eval(constant_family(true), v) == true);
  }
  // Pinned spot values.
  CHECK(pipeline_eval(par, 5) == false);
  CHECK(pipeline_eval(maj, 6) == true);
}

TEST_CASE("finding families by name") {
  CHECK(find_family("parity").has_value());
  CHECK(find_family("majority").has_value());
  CHECK(find_family("constant-0").has_value());
  CHECK(find_family("constant-1").has_value());
  CHECK(!find_family("sorting").has_value());
}

TEST_CASE("compiling a family into a cyclic description proof") {
  register_family_builtins();
  CircuitFamily fam = parity_family();
  ProofGraph g = compile_family_to_proof(fam);
  CHECK(g.name == "parity_description");
  CHECK(g.root().id == "loop");
  CHECK(validate_graph(g).empty());

  REQUIRE(g.oracles.count("circ-parity") == 1);
  const OracleDecl& d = g.oracles.at("circ-parity");
  CHECK(d.normals == 2);
  CHECK(d.safes == 0);
  CHECK(d.kind == "length-relation");
  CHECK(d.source == "builtin:family-parity");

  Verdict v = classify(g);
  CHECK(v.cls == Verdict::Class::NuBPresentation);
  CHECK(v.progressing);
  CHECK(v.safe);
  CHECK(v.left_leaning);

  // The proof's conclusion (z, y ;) streams the same description prefixes as
  // the term form (y, z ;).
  DescriptionProgram prog = build_description_term(fam);
  OracleEnv env = env_for(g);
  OracleEnv term_env;
  term_env.bind(prog.relation, family_oracle(fam));
  for (int n = 0; n <= 4; ++n)
    for (int j0 : {0, 1, 5, 12}) {
      Value y = repunit(n), z = repunit(j0);
      CHECK(eval(g, {z, y}, {}, env) == algebra::eval_term(prog.term, {y, z}, {}, term_env));
    }
}

TEST_CASE("the hosted pipeline graph reproduces pipeline evaluation") {
  register_family_builtins();
  CircuitFamily fam = parity_family();
  ProofGraph g = family_pipeline_graph(fam);
  CHECK(g.name == "parity_pipeline");
  CHECK(g.root().id == "main");
  CHECK(validate_graph(g).empty());

  Verdict v = classify(g);
  CHECK(v.cls == Verdict::Class::Rejected);
  CHECK(v.reasons ==
        std::vector<std::string>{"oracle 'eval-circuit' is not a declared length relation"});

  OracleEnv env = env_for(g);
  for (unsigned long long y = 0; y < 32; ++y) {
    int k = fam.description_bound(ts::brute_bitlen(y)).convert_to<int>();
    CHECK((eval(g, {repunit(k), Value(y)}, {}, env) != 0) == pipeline_eval(fam, y));
  }
}

TEST_CASE("registering family builtins is idempotent") {
  register_family_builtins();
  register_family_builtins();
  for (const char* name : {"family-parity", "family-majority", "family-constant-0",
                           "family-constant-1", "eval-circuit"})
    CHECK(has_builtin_oracle(name));
}

TEST_SUITE_END();
