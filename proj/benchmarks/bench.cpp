// Microbenchmarks for the hot paths: the iterative evaluator, the trace
// closure behind the progress check, prefix-point enumeration, translation,
// and the circuit-family pipeline.

#include <benchmark/benchmark.h>

#include <filesystem>

#include "cbproof/algebra.hpp"
#include "cbproof/checker.hpp"
#include "cbproof/evaluator.hpp"
#include "cbproof/nonuniform.hpp"
#include "cbproof/prooffmt.hpp"
#include "cbproof/translator.hpp"

namespace {

using namespace cbp;

std::filesystem::path fixture_dir() { return CBP_FIXTURE_DIR; }

ProofGraph load(const std::string& name) { return load_proof(fixture_dir() / name); }

void bm_eval_concat(benchmark::State& state) {
  ProofGraph g = load("concat.cbp");
  Value x = (Value(1) << static_cast<int>(state.range(0))) - 1;
  for (auto _ : state) benchmark::DoNotOptimize(eval(g, {x, x}, {7}));
}
BENCHMARK(bm_eval_concat)->Arg(16)->Arg(64)->Arg(256);

void bm_eval_nest(benchmark::State& state) {
  ProofGraph g = load("nest.cbp");
  Value x = state.range(0);
  for (auto _ : state) benchmark::DoNotOptimize(eval(g, {x}, {1}));
}
BENCHMARK(bm_eval_nest)->Arg(3)->Arg(7);

void bm_check_progressing(benchmark::State& state) {
  ProofGraph g = load(std::string(state.range(0) == 0 ? "stacked.cbp" : "advice_inline.cbp"));
  for (auto _ : state) benchmark::DoNotOptimize(check_progressing(g).closure_size);
}
BENCHMARK(bm_check_progressing)->Arg(0)->Arg(1);

void bm_classify(benchmark::State& state) {
  ProofGraph g = load("advice_inline.cbp");
  for (auto _ : state) benchmark::DoNotOptimize(classify(g).cls);
}
BENCHMARK(bm_classify);

void bm_translate(benchmark::State& state) {
  ProofGraph g = load("concat.cbp");
  for (auto _ : state) benchmark::DoNotOptimize(translate(g));
}
BENCHMARK(bm_translate);

void bm_enumerate_pp(benchmark::State& state) {
  Value x = (Value(1) << static_cast<int>(state.range(0))) - 1;
  for (auto _ : state) benchmark::DoNotOptimize(algebra::enumerate_pp({x}, {x}).size());
}
BENCHMARK(bm_enumerate_pp)->Arg(3)->Arg(5);

void bm_pipeline_parity(benchmark::State& state) {
  register_family_builtins();
  CircuitFamily fam = *find_family("parity");
  Value v = (Value(1) << static_cast<int>(state.range(0))) - 1;
  for (auto _ : state) benchmark::DoNotOptimize(pipeline_eval(fam, v));
}
BENCHMARK(bm_pipeline_parity)->Arg(4)->Arg(8);

void bm_expand_relation(benchmark::State& state) {
  OracleDecl decl{"par", 1, 0, "length-relation", "builtin:parity-len"};
  OracleFn fn = builtin_oracle("parity-len");
  for (auto _ : state)
    benchmark::DoNotOptimize(expand_relation(decl, fn, static_cast<int>(state.range(0))).nodes.size());
}
BENCHMARK(bm_expand_relation)->Arg(4)->Arg(8);

}  // namespace

BENCHMARK_MAIN();
