#include <algorithm>
#include <set>

#include "cbproof/checker.hpp"
#include "cbproof/evaluator.hpp"
#include "cbproof/prooffmt.hpp"
#include "doctest.h"
#include "support/brute.hpp"
#include "support/fixtures.hpp"
#include "support/randgraph.hpp"

using namespace cbp;
namespace ts = cbp::testsupport;

TEST_SUITE_BEGIN("checker");

namespace {

// the witness must be a closed chain of real premise edges
void check_witness_is_a_cycle(const ProofGraph& g, const CycleWitness& w) {
  REQUIRE(!w.edges.empty());
  for (std::size_t i = 0; i < w.edges.size(); ++i) {
    const auto& [id, slot] = w.edges[i];
    const Node& n = g.at(id);
    REQUIRE(slot >= 0);
    REQUIRE(slot < static_cast<int>(n.premises.size()));
    const std::string& target = n.premises[slot];
    const std::string& next = w.edges[(i + 1) % w.edges.size()].first;
    CHECK(target == next);
  }
}

}  // namespace

TEST_CASE("verdicts for the stock fixtures") {
  struct Row {
    const char* file;
    Verdict::Class cls;
    bool progressing, safe, left;
  };
  const Row rows[] = {
      {"spin.cbp", Verdict::Class::Rejected, false, false, true},
      {"normal_rec.cbp", Verdict::Class::Rejected, true, false, true},
      {"concat.cbp", Verdict::Class::CB, true, true, true},
      {"nest.cbp", Verdict::Class::Rejected, true, true, false},
      {"parity_len.cbp", Verdict::Class::CB, true, true, true},
      {"advice_stream.cbp", Verdict::Class::NuBPresentation, true, true, true},
      {"advice_inline.cbp", Verdict::Class::CB, true, true, true},
      {"flip.cbp", Verdict::Class::BDerivation, true, true, true},
      {"crossbud.cbp", Verdict::Class::CB, true, true, true},
      {"stacked.cbp", Verdict::Class::CB, true, true, true},
  };
  for (const Row& r : rows) {
    CAPTURE(r.file);
    Verdict v = classify(ts::load_fixture(r.file));
    CHECK(v.cls == r.cls);
    CHECK(v.progressing == r.progressing);
    CHECK(v.safe == r.safe);
    CHECK(v.left_leaning == r.left);
  }
}

TEST_CASE("rejection reasons and witnesses are pinned") {
  SUBCASE("the self-feeding loop is neither progressing nor safe") {
    Verdict v = classify(ts::load_fixture("spin.cbp"));
    REQUIRE(v.reasons.size() == 2);
    CHECK(v.reasons[0] == "not progressing");
    CHECK(v.reasons[1] == "cut_box node 'i_cut' lies on a cycle");
    REQUIRE(v.witness.has_value());
    CHECK(to_string(*v.witness) == "i_cut.1 -> i_swap.0 -> i_drop.0 -> i_dis.0");
  }
  SUBCASE("recursion through the normal zone is not safe") {
    Verdict v = classify(ts::load_fixture("normal_rec.cbp"));
    REQUIRE(v.reasons.size() == 1);
    CHECK(v.reasons[0].find("lies on a cycle") != std::string::npos);
    CHECK(v.reasons[0].find("cut_box node") != std::string::npos);
  }
  SUBCASE("nested recursion on the right of a cut is not left-leaning") {
    Verdict v = classify(ts::load_fixture("nest.cbp"));
    REQUIRE(v.reasons.size() == 1);
    CHECK(v.reasons[0] == "right premise of cut_n 'e_cut0' lies on a cycle");
    REQUIRE(v.witness.has_value());
    CHECK(to_string(*v.witness) == "e_cut0.1 -> e_swap0.0 -> e_drop0.0 -> e_dis.0 -> e_case.1");
  }
}

TEST_CASE("witnesses are genuine cycles") {
  for (const char* f : {"spin.cbp", "normal_rec.cbp", "nest.cbp"}) {
    CAPTURE(f);
    ProofGraph g = ts::load_fixture(f);
    Verdict v = classify(g);
    REQUIRE(v.witness.has_value());
    check_witness_is_a_cycle(g, *v.witness);
  }
}

TEST_CASE("safe and left-leaning checks on crafted graphs") {
  SUBCASE("acyclic cut_box is fine") {
    ProofGraph g = parse_proof_string(
        "proof p\n"
        "node a seq 0 0 N rule cut_box prem b c\n"
        "node b seq 0 0 boxN rule box_r prem z\n"
        "node z seq 0 0 N rule zero\n"
        "node c seq 1 0 N rule w_box prem o\n"
        "node o seq 0 0 N rule one\n");
    REQUIRE(validate_graph(g).empty());
    CHECK(check_safe(g).ok);
    CHECK(check_left_leaning(g).ok);
  }
  SUBCASE("a cycle through the left premise of cut_n is still left-leaning") {
    ProofGraph g = ts::load_fixture("advice_stream.cbp");
    CHECK(check_left_leaning(g).ok);
  }
}

TEST_CASE("progress check reports closure size and overflows honestly") {
  ProofGraph g = ts::load_fixture("concat.cbp");
  ProgressResult r = check_progressing(g);
  CHECK(r.ok);
  CHECK(r.closure_size > 0);
  CHECK_THROWS_AS((void)check_progressing(g, ClosureBudget{3}), ClosureOverflow);
}

TEST_CASE("srec inside a cycle is rejected outright") {
  ProofGraph g = parse_proof_string(
      "proof p\n"
      "node d seq 1 0 N rule dis prem s\n"
      "node s seq 1 0 N rule srec prem g h0 h1\n"
      "node g seq 0 0 N rule zero\n"
      "node h0 seq 1 1 N rule w_n prem d\n"
      "node h1 seq 1 1 N rule w_n prem hc\n"
      "node hc seq 1 0 N rule w_box prem hz\n"
      "node hz seq 0 0 N rule zero\n");
  REQUIRE(validate_graph(g).empty());
  Verdict v = classify(g);
  CHECK(v.cls == Verdict::Class::Rejected);
  REQUIRE(v.reasons.size() == 1);
  CHECK(v.reasons[0] == "srec occurs in a cyclic graph");
}

TEST_CASE("rule-free regions") {
  CHECK(kNuBRuleSet ==
        RuleSet{Rule::CondBox, Rule::CondN, Rule::S0, Rule::S1, Rule::Id});

  ProofGraph inl = ts::load_fixture("advice_inline.cbp");
  CHECK(rule_free(inl, "a_wn", kNuBRuleSet));
  CHECK(rule_free(inl, "a_zero", kNuBRuleSet));
  CHECK(!rule_free(inl, "a_dis", kNuBRuleSet));      // reaches cond_n and s0/s1
  CHECK(!rule_free(inl, "a_split", kNuBRuleSet));    // is a cond_n

  auto mins = minimal_free_nodes(inl, kNuBRuleSet);
  CHECK(std::set<std::string>(mins.begin(), mins.end()) ==
        std::set<std::string>{"a_wn", "a_zero"});

  // the parity fixture uses only rules outside the set, so its root is free
  ProofGraph par = ts::load_fixture("parity_len.cbp");
  CHECK(rule_free(par, "p_dis", kNuBRuleSet));
  auto pm = minimal_free_nodes(par, kNuBRuleSet);
  CHECK(pm == std::vector<std::string>{"p_dis"});
}

TEST_CASE("factoring excises oracle-like subproofs") {
  ProofGraph g = ts::load_fixture("advice_inline.cbp");
  FactorResult fr = factor(g);

  REQUIRE(fr.definitions.size() == 2);
  REQUIRE(fr.definitions.count("def_a_wn"));
  REQUIRE(fr.definitions.count("def_a_zero"));

  // the factored graph replaces the regions with declared subgraph oracles
  REQUIRE(fr.graph.oracles.count("def_a_wn"));
  CHECK(fr.graph.oracles.at("def_a_wn").kind == "subgraph");
  CHECK(fr.graph.oracles.at("def_a_wn").source == "def_a_wn.cbp");
  int leaves = 0;
  for (const auto& n : fr.graph.nodes)
    if (n.rule.rule == Rule::OracleLeaf) ++leaves;
  CHECK(leaves >= 2);
  CHECK(validate_graph(fr.graph).empty());

  // semantics are preserved once the definitions are bound back in
  OracleEnv env;
  for (const auto& [name, def] : fr.definitions) env.bind(name, subgraph_oracle(def, {}));
  auto bit = [](int len) { return len % 2; };
  for (int x : {0, 1, 5, 6, 13, 200}) {
    CAPTURE(x);
    CHECK(eval(fr.graph, {x}, {}, env) == eval(g, {x}, {}));
    CHECK(eval(fr.graph, {x}, {}, env) == ts::ref_stream(x, bit));
  }

  // tool-level oracle kinds keep the factored artifact out of the named
  // classes; it is honest about that
  Verdict v = classify(fr.graph);
  CHECK(v.cls == Verdict::Class::Rejected);
  bool mentions = false;
  for (const auto& r : v.reasons)
    if (r == "oracle 'def_a_wn' is not a declared length relation") mentions = true;
  CHECK(mentions);
}

TEST_CASE("factoring a graph that is free at the root") {
  ProofGraph g = ts::load_fixture("parity_len.cbp");
  FactorResult fr = factor(g);
  REQUIRE(fr.definitions.count("def_p_dis"));
  OracleEnv env;
  for (const auto& [name, def] : fr.definitions) env.bind(name, subgraph_oracle(def, {}));
  for (int x = 0; x < 32; ++x) CHECK(eval(fr.graph, {x}, {}, env) == ts::ref_parity_len(x));
}

TEST_CASE("factoring requires progress") {
  CHECK_THROWS_AS((void)factor(ts::load_fixture("spin.cbp")), NotProgressing);
}

TEST_CASE("random graphs: cycle checks agree with reachability brute force") {
  for (unsigned seed = 1000; seed < 1060; ++seed) {
    ts::GraphGen gen(seed, 8);
    ProofGraph g = gen();
    CAPTURE(seed);
    REQUIRE(validate_graph(g).empty());
    CHECK(check_safe(g).ok == ts::brute_safe(g));
    CHECK(check_left_leaning(g).ok == ts::brute_left_leaning(g));
  }
}

TEST_CASE("random graphs: progress check agrees with the raw closure") {
  int undecided = 0;
  for (unsigned seed = 2000; seed < 2040; ++seed) {
    ts::GraphGen gen(seed, 6);
    ProofGraph g = gen();
    CAPTURE(seed);
    REQUIRE(validate_graph(g).empty());
    ts::BruteProgress b = ts::brute_progressing(g);
    if (!b.decided) {
      ++undecided;
      continue;
    }
    ProgressResult r = check_progressing(g);
    CHECK(r.ok == b.ok);
  }
  CHECK(undecided == 0);
}

TEST_SUITE_END();
