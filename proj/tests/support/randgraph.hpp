#pragma once

// Grows random valid proof graphs for cross-validating the cycle checkers.
// Construction is top-down: every premise is either a fresh node whose
// sequent comes from rule_signature, a back-reference to an enclosing dis
// node with the same sequent (closing a cycle), or, when the node budget runs
// low, a forced chain of weakenings down to an axiom leaf.  Each subtree gets
// an explicit node budget, so the whole graph never exceeds max_nodes.

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "cbproof/kernel.hpp"

namespace cbp::testsupport {

class GraphGen {
 public:
  GraphGen(unsigned seed, int max_nodes) : rng_(seed), max_nodes_(max_nodes) {}

  ProofGraph operator()() {
    g_ = {};
    g_.name = "rand";
    counter_ = 0;
    dis_count_ = 0;
    Sequent root{pick(0, 2), pick(0, 2), Succ::N};
    grow(root, {}, max_nodes_);
    return g_;
  }

 private:
  std::mt19937 rng_;
  int max_nodes_;
  ProofGraph g_;
  int counter_ = 0;
  int dis_count_ = 0;

  int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool chance(double p) { return std::uniform_real_distribution<double>(0, 1)(rng_) < p; }

  // Nodes are pushed parent-first so the root ends up in slot 0; premises are
  // patched in once the children exist.
  std::size_t make(const Sequent& seq, RuleApp rule) {
    Node n;
    n.id = "n" + std::to_string(counter_++);
    n.seq = seq;
    n.rule = std::move(rule);
    g_.nodes.push_back(std::move(n));
    return g_.nodes.size() - 1;
  }

  // Exact node count of the forced closing chain from a sequent.
  static int closing_cost(const Sequent& s) {
    if (s.succ == Succ::BoxN) return s.safes + 1 + s.normals + 1;
    return s.normals + (s.safes >= 1 ? s.safes - 1 : 0) + 1;
  }

  std::string close(const Sequent& s) {
    if (s.succ == Succ::BoxN) {
      if (s.safes > 0) {
        std::size_t i = make(s, {Rule::WeakN});
        g_.nodes[i].premises = {close({s.normals, s.safes - 1, Succ::BoxN})};
        return g_.nodes[i].id;
      }
      std::size_t i = make(s, {Rule::BoxR});
      g_.nodes[i].premises = {close({s.normals, 0, Succ::N})};
      return g_.nodes[i].id;
    }
    if (s.normals > 0) {
      std::size_t i = make(s, {Rule::WeakBox});
      g_.nodes[i].premises = {close({s.normals - 1, s.safes, Succ::N})};
      return g_.nodes[i].id;
    }
    if (s.safes == 1) return g_.nodes[make(s, {Rule::Id})].id;
    if (s.safes > 1) {
      std::size_t i = make(s, {Rule::WeakN});
      g_.nodes[i].premises = {close({0, s.safes - 1, Succ::N})};
      return g_.nodes[i].id;
    }
    return g_.nodes[make(s, {chance(0.5) ? Rule::Zero : Rule::One})].id;
  }

  // Returns the premise reference: a fresh subtree, an ancestor dis id, or a
  // forced closing chain.  Uses at most `budget` nodes.
  std::string grow(const Sequent& seq, std::vector<std::pair<std::string, Sequent>> dis_anc,
                   int budget) {
    if (budget <= closing_cost(seq)) return close(seq);

    // Close a cycle back to a matching companion.
    std::vector<std::string> matching;
    for (const auto& [id, s] : dis_anc)
      if (s == seq) matching.push_back(id);
    if (!matching.empty() && chance(0.55)) return matching[pick(0, (int)matching.size() - 1)];

    // Candidate rule applications at this sequent; weights steer toward
    // interesting cyclic shapes.
    struct Move {
      RuleApp app;
      int weight;
    };
    std::vector<Move> moves;
    const int m = seq.normals, n = seq.safes;
    auto add = [&](RuleApp app, int weight) {
      std::vector<Sequent> prem;
      try {
        prem = rule_signature(app, seq);
      } catch (const IncompatibleSequent&) {
        return;
      }
      int cost = 1;
      for (const auto& p : prem) cost += closing_cost(p);
      if (cost <= budget) moves.push_back({std::move(app), weight});
    };

    add({Rule::S0}, 1);
    add({Rule::S1}, 1);
    if (dis_count_ < 3) add({Rule::Dis}, dis_anc.empty() ? 6 : 2);
    add({Rule::CutN}, 2);
    add({Rule::CutBox}, 2);
    if (n >= 1) add({Rule::WeakN}, 1);
    if (m >= 1) add({Rule::WeakBox}, 1);
    if (n >= 2) add({Rule::ExchN, pick(0, n - 2)}, 1);
    if (m >= 2) add({Rule::ExchBox, pick(0, m - 2)}, 1);
    if (m >= 1) add({Rule::BoxL}, 1);
    if (seq.succ == Succ::BoxN && n == 0) add({Rule::BoxR}, 2);
    if (n >= 1 && seq.succ == Succ::N) {
      add({Rule::CondN}, 2);
      add({Rule::PCondN}, 2);
    }
    if (m >= 1 && seq.succ == Succ::N) {
      add({Rule::CondBox}, 3);
      add({Rule::PCondBox}, 3);
    }
    if (moves.empty() || chance(0.1)) return close(seq);

    int total = 0;
    for (const auto& mv : moves) total += mv.weight;
    int roll = pick(0, total - 1);
    const Move* chosen = &moves.front();
    for (const auto& mv : moves) {
      if (roll < mv.weight) {
        chosen = &mv;
        break;
      }
      roll -= mv.weight;
    }

    std::size_t idx = make(seq, chosen->app);
    if (chosen->app.rule == Rule::Dis) {
      ++dis_count_;
      dis_anc.emplace_back(g_.nodes[idx].id, seq);
    }
    std::vector<Sequent> prem = rule_signature(chosen->app, seq);

    // Reserve each child's closing cost up front, then hand out the surplus
    // left to right at random.
    std::vector<int> alloc;
    int surplus = budget - 1;
    for (const auto& p : prem) {
      alloc.push_back(closing_cost(p));
      surplus -= alloc.back();
    }
    for (std::size_t i = 0; i < alloc.size(); ++i) {
      int extra = (i + 1 == alloc.size()) ? surplus : pick(0, surplus);
      alloc[i] += extra;
      surplus -= extra;
    }

    std::vector<std::string> refs;
    for (std::size_t i = 0; i < prem.size(); ++i) refs.push_back(grow(prem[i], dis_anc, alloc[i]));
    g_.nodes[idx].premises = std::move(refs);
    return g_.nodes[idx].id;
  }
};

}  // namespace cbp::testsupport
