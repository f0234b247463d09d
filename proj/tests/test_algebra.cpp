#include <algorithm>
#include <random>

#include "cbproof/algebra.hpp"
#include "cbproof/translator.hpp"
#include "doctest.h"
#include "support/brute.hpp"
#include "support/fixtures.hpp"

using namespace cbp;
using namespace cbp::algebra;
namespace ts = cbp::testsupport;

TEST_SUITE_BEGIN("algebra");

namespace {

Value rnd_value(std::mt19937& rng, int max_bits) {
  int len = std::uniform_int_distribution<int>(0, max_bits)(rng);
  Value v = 0;
  for (int i = 0; i < len; ++i) v = v * 2 + std::uniform_int_distribution<int>(0, 1)(rng);
  if (len > 0) v |= Value(1) << (len - 1);  // force the exact length
  return v;
}

// constant 1 at the given ambient arity
TermPtr one_term(Arity a) {
  return comp_safe(zero(a), succ1({a.normals, a.safes + 1}));
}

TermPtr half_of_normal(Arity a, int idx) {
  return call(pred({0, 1}), {}, {proj_n(idx, a)}, a);
}

// ev(x;) = 1 if |x| is even else 0, od its complement, by mutual recursion:
// ev(0) = 1, ev(x) = od(x/2); od(0) = 0, od(x) = ev(x/2).
TermPtr even_odd_pair(int component) {
  const Arity a{1, 0};
  auto branch = [&](const std::string& callee) {
    return call(oracle_call(callee, a), {half_of_normal(a, 0)}, {}, a);
  };
  TermPtr body_ev =
      call(cond({0, 4}), {}, {proj_n(0, a), one_term(a), branch("od"), branch("od")}, a);
  TermPtr body_od =
      call(cond({0, 4}), {}, {proj_n(0, a), zero(a), branch("ev"), branch("ev")}, a);
  return rec_sim({"ev", "od"}, {body_ev, body_od}, component);
}

}  // namespace

TEST_CASE("primitive semantics") {
  CHECK(eval_term(zero({2, 1}), {4, 5}, {6}) == 0);
  CHECK(eval_term(succ0({0, 1}), {}, {5}) == 10);
  CHECK(eval_term(succ1({0, 1}), {}, {5}) == 11);
  CHECK(eval_term(pred({0, 1}), {}, {5}) == 2);
  CHECK(eval_term(pred({0, 1}), {}, {0}) == 0);
  CHECK(eval_term(proj_n(1, {3, 2}), {7, 8, 9}, {1, 2}) == 8);
  CHECK(eval_term(proj_s(0, {3, 2}), {7, 8, 9}, {1, 2}) == 1);

  TermPtr c = cond({0, 4});
  CHECK(eval_term(c, {}, {0, 10, 20, 30}) == 10);
  CHECK(eval_term(c, {}, {2, 10, 20, 30}) == 20);
  CHECK(eval_term(c, {}, {6, 10, 20, 30}) == 20);
  CHECK(eval_term(c, {}, {1, 10, 20, 30}) == 30);
  CHECK(eval_term(c, {}, {7, 10, 20, 30}) == 30);
}

TEST_CASE("composition semantics") {
  // s1 after s0: x -> 4x + 1
  TermPtr t = comp_safe(succ0({0, 1}), succ1({0, 2}));
  CHECK(eval_term(t, {}, {3}) == 13);

  // h(g(x;), x;) with g = x and h = first normal: the identity
  TermPtr cn = comp_normal(proj_n(0, {1, 0}), proj_n(0, {2, 0}));
  CHECK(eval_term(cn, {9}, {}) == 9);
  TermPtr cn2 = comp_normal(proj_n(0, {1, 0}), proj_n(1, {2, 0}));
  CHECK(eval_term(cn2, {9}, {}) == 9);

  // explicit call: pred of the only normal
  TermPtr h = half_of_normal({1, 0}, 0);
  CHECK(eval_term(h, {9}, {}) == 4);
}

TEST_CASE("ill-formed terms are refused") {
  CHECK_THROWS_AS((void)proj_n(2, {2, 0}), IllFormedTerm);
  CHECK_THROWS_AS((void)proj_s(0, {1, 0}), IllFormedTerm);
  CHECK_THROWS_AS((void)succ0({1, 0}), IllFormedTerm);
  CHECK_THROWS_AS((void)cond({0, 3}), IllFormedTerm);
  CHECK_THROWS_AS((void)comp_safe(zero({0, 1}), zero({0, 1})), IllFormedTerm);
  CHECK_THROWS_AS((void)comp_normal(succ0({0, 1}), proj_n(0, {1, 1})), IllFormedTerm);
  CHECK_THROWS_AS((void)rec_sim({"f", "f"}, {zero({1, 0}), zero({1, 0})}), IllFormedTerm);
  CHECK_THROWS_AS((void)rec_sim({"f", "g"}, {zero({1, 0}), zero({1, 0})}, 2), IllFormedTerm);
  CHECK_THROWS_AS((void)call(pred({0, 1}), {}, {}, {0, 0}), IllFormedTerm);
  // normal arguments may not carry recursion oracles
  CHECK_THROWS_AS((void)call(proj_n(0, {1, 0}), {oracle_call("f", {1, 0})}, {}, {1, 0}),
                  IllFormedTerm);
  // a free oracle call is fine (it resolves through the environment), but a
  // call bound by an enclosing recursion must match the binder's arity
  well_formed(call(oracle_call("loose", {0, 1}), {}, {proj_s(0, {0, 1})}, {0, 1}));
  TermPtr bad_self =
      call(oracle_call("f", {2, 0}), {proj_n(0, {1, 0}), proj_n(0, {1, 0})}, {}, {1, 0});
  CHECK_THROWS_AS(well_formed(rec_sim({"f", "g"}, {bad_self, zero({1, 0})})), IllFormedTerm);
}

TEST_CASE("serialization round-trips") {
  std::vector<TermPtr> samples = {
      zero({0, 0}),
      succ1({2, 3}),
      cond({0, 4}),
      proj_n(1, {2, 0}),
      proj_s(2, {0, 3}),
      initial_relation("r", {1, 0}),
      comp_safe(zero({0, 1}), succ0({0, 2})),
      comp_normal(proj_n(0, {1, 0}), proj_n(1, {2, 0})),
      half_of_normal({1, 0}, 0),
      even_odd_pair(0),
      even_odd_pair(1),
      rec_pp("f", call(oracle_call("f", {1, 0}), {half_of_normal({1, 0}, 0)}, {}, {1, 0})),
  };
  for (const auto& t : samples) {
    std::string s = serialize_term(t);
    CAPTURE(s);
    TermPtr u = parse_term(s);
    CHECK(serialize_term(u) == s);
  }
}

TEST_CASE("parse errors") {
  CHECK_THROWS_AS((void)parse_term(""), Error);
  CHECK_THROWS_AS((void)parse_term("(zero 1"), Error);
  CHECK_THROWS_AS((void)parse_term("(wibble 0 0)"), Error);
  CHECK_THROWS_AS((void)parse_term("(zero 0 0) trailing"), Error);
}

TEST_CASE("prefix order on single values") {
  CHECK(is_bit_prefix(0, 0));
  CHECK(is_bit_prefix(0, 5));
  CHECK(is_bit_prefix(5, 5));
  CHECK(is_bit_prefix(2, 5));    // "10" begins "101"
  CHECK(!is_bit_prefix(3, 5));   // "11" does not begin "101"
  CHECK(!is_bit_prefix(5, 2));
  CHECK(is_bit_prefix(1, 3));    // "1" begins "11"
  CHECK(is_bit_prefix(1, 2));    // "1" begins "10"
  CHECK(!is_bit_prefix(2, 3));   // "10" does not begin "11"
}

TEST_CASE("prefix order on tuples matches the permutation search") {
  std::mt19937 rng(42);
  for (int iter = 0; iter < 300; ++iter) {
    int k = std::uniform_int_distribution<int>(0, 4)(rng);
    std::vector<Value> u, x;
    for (int i = 0; i < k; ++i) {
      u.push_back(rnd_value(rng, 5));
      x.push_back(rnd_value(rng, 5));
    }
    // bias toward comparable pairs: sometimes derive u from x by truncation
    if (std::uniform_int_distribution<int>(0, 1)(rng)) {
      for (int i = 0; i < k; ++i) {
        int cut = std::uniform_int_distribution<int>(0, ts::brute_bitlen(x[i]))(rng);
        u[i] = x[i] >> cut;
      }
      std::shuffle(u.begin(), u.end(), rng);
    }
    CAPTURE(iter);
    CHECK(pp_compare(u, x) == ts::brute_pp_compare(u, x));
  }
  CHECK(pp_compare({1, 2}, {1}) == PPOrder::Incomparable);
}

TEST_CASE("guarded-point enumeration is complete and ordered") {
  auto points = enumerate_pp({5}, {2});
  // normals strictly below 5 = "101": "", "1", "10"; safes below 2: "", "1", "10"
  CHECK(points.size() == 9);
  for (const auto& p : points) {
    CHECK(pp_compare(p.normals, {5}) == PPOrder::Strict);
    CHECK(pp_compare(p.safes, {2}) != PPOrder::Incomparable);
  }
  // anything a guarded call can reach appears before its caller
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = 0; j < points.size(); ++j) {
      if (i == j) continue;
      bool j_below_i = pp_compare(points[j].normals, points[i].normals) == PPOrder::Strict &&
                       pp_compare(points[j].safes, points[i].safes) != PPOrder::Incomparable;
      if (j_below_i) CHECK(j < i);
    }
}

TEST_CASE("polynomial arithmetic and printing") {
  Poly p{{1, 1, 2}};  // 2n^2 + n + 1
  CHECK(p(0) == 1);
  CHECK(p(3) == 22);
  CHECK(to_string(p) == "2*n^2 + n + 1");
  CHECK(to_string(Poly{}) == "0");
  CHECK(to_string(Poly{{0}}) == "0");
  CHECK(to_string(Poly{{5}}) == "5");
  CHECK(to_string(Poly{{0, 1}}) == "n");
  CHECK(to_string(poly_n()) == "n");

  Poly q = add(poly_const(2), mul(poly_n(), poly_n()));  // n^2 + 2
  CHECK(to_string(q) == "n^2 + 2");
  Poly r = compose(q, add(poly_n(), poly_const(1)));  // (n+1)^2 + 2
  CHECK(r(2) == 11);
  CHECK(to_string(r) == "n^2 + 2*n + 3");
}

TEST_CASE("growth bound for the concatenation term") {
  TermPtr t = translate(ts::load_fixture("concat.cbp"));
  Poly p = bound_poly(t);
  CHECK(to_string(p) == "n^3 + 3*n^2 + 2*n");

  std::mt19937 rng(7);
  for (int iter = 0; iter < 200; ++iter) {
    Value x = rnd_value(rng, 6), u = rnd_value(rng, 6), a = rnd_value(rng, 6);
    Value out = eval_term(t, {x, u}, {a});
    long long sum_norm = bit_length(x) + bit_length(u);
    CHECK(Value(bit_length(out)) <= p(sum_norm) + bit_length(a));
  }
}

TEST_CASE("direct and table evaluation agree") {
  TermPtr t = translate(ts::load_fixture("concat.cbp"));
  std::mt19937 rng(11);
  for (int iter = 0; iter < 40; ++iter) {
    Value x = rnd_value(rng, 4), u = rnd_value(rng, 4), a = rnd_value(rng, 4);
    CAPTURE(iter);
    Value direct = eval_term(t, {x, u}, {a});
    CHECK(direct == eval_term_table(t, {x, u}, {a}));
    CHECK(direct == ts::ref_concat(x, u, a));
    CHECK(direct == ts::brute_eval_term(t, {x, u}, {a}));
  }
}

TEST_CASE("simultaneous recursion: direct, reduced, and brute agree") {
  TermPtr ev = even_odd_pair(0);
  TermPtr od = even_odd_pair(1);
  well_formed(ev);

  auto reduced = reduce_simultaneous(ev);
  REQUIRE(reduced.size() == 2);
  well_formed(reduced[0]);
  well_formed(reduced[1]);
  CHECK(reduced[0]->arity == Arity{1, 0});

  for (int x = 0; x < 32; ++x) {
    CAPTURE(x);
    Value expect = (ts::brute_bitlen(x) % 2 == 0) ? 1 : 0;
    CHECK(eval_term(ev, {x}, {}) == expect);
    CHECK(eval_term(od, {x}, {}) == 1 - expect);
    CHECK(ts::brute_eval_term(ev, {x}, {}) == expect);
    CHECK(eval_term(reduced[0], {x}, {}) == expect);
    CHECK(eval_term(reduced[1], {x}, {}) == 1 - expect);
    CHECK(eval_term_table(reduced[0], {x}, {}) == expect);
  }
}

TEST_CASE("oracle truncation") {
  OracleFn parity = builtin_oracle("parity-len");
  OracleFn cut = truncate_oracle(parity, 3);
  // Arguments strictly shorter than m bits pass through untouched.
  CHECK(cut.fn({3}, {}) == parity.fn({3}, {}));
  CHECK(cut.fn({2}, {}) == parity.fn({2}, {}));
  CHECK(cut.fn({0}, {}) == parity.fn({0}, {}));
  // Any argument of length >= m collapses the answer to zero.
  CHECK(cut.fn({5}, {}) == 0);                    // |5| = 3
  CHECK(parity.fn({5}, {}) == 1);                 // truncation visibly differs here
  CHECK(cut.fn({9}, {}) == 0);                    // |9| = 4
  CHECK(cut.fn({16}, {}) == 0);
  CHECK(parity.fn({16}, {}) == 1);
}

TEST_SUITE_END();
