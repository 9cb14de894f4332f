#include <benchmark/benchmark.h>

#include "nagm/eval.hpp"
#include "nagm/metrics.hpp"
#include "nagm/model.hpp"

namespace {

nagm::ModelConfig bench_config(std::size_t dim) {
  nagm::ModelConfig cfg;
  cfg.embed_dim = dim;
  cfg.hidden_dim = dim;
  cfg.vocab_size = 64;
  cfg.max_decode_len = 20;
  return cfg;
}

nagm::ExamplePair bench_example() {
  nagm::ExamplePair e;
  e.question = {4, 5, 6, 7, 8, nagm::kEos};
  e.conclusion = {9, 10, 11, nagm::kEos};
  e.supplement = {12, 13, 14, 15, nagm::kEos};
  e.neg_conclusion = {16, 17, nagm::kEos};
  e.neg_supplement = {18, 19, 20, nagm::kEos};
  return e;
}

void BM_LossForwardBackward(benchmark::State& state) {
  nagm::ModelConfig cfg = bench_config(static_cast<std::size_t>(state.range(0)));
  nagm::ParamStore params = nagm::init_model_params(cfg, 1);
  nagm::ExamplePair e = bench_example();
  for (auto _ : state) {
    benchmark::DoNotOptimize(nagm::loss_total(e, params, cfg).value);
  }
}
BENCHMARK(BM_LossForwardBackward)->Arg(8)->Arg(32)->Arg(64);

void BM_Generate(benchmark::State& state) {
  nagm::ModelConfig cfg = bench_config(static_cast<std::size_t>(state.range(0)));
  nagm::ParamStore params = nagm::init_model_params(cfg, 1);
  nagm::TokenSeq q = {4, 5, 6, 7, 8, nagm::kEos};
  for (auto _ : state) {
    benchmark::DoNotOptimize(nagm::generate(q, params, cfg).conclusion);
  }
}
BENCHMARK(BM_Generate)->Arg(8)->Arg(32);

void BM_RougeL(benchmark::State& state) {
  nagm::TokenList cand, ref;
  for (int i = 0; i < state.range(0); ++i) {
    cand.push_back("t" + std::to_string(i % 7));
    ref.push_back("t" + std::to_string(i % 5));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(nagm::rouge_l(cand, ref));
  }
}
BENCHMARK(BM_RougeL)->Arg(32)->Arg(256);

void BM_AdagradStep(benchmark::State& state) {
  nagm::ModelConfig cfg = bench_config(32);
  nagm::ParamStore params = nagm::init_model_params(cfg, 1);
  nagm::ExamplePair e = bench_example();
  auto grads = nagm::loss_total(e, params, cfg).grads;
  for (auto _ : state) {
    params.adagrad_step(grads, 0.05, 1e-8);
  }
}
BENCHMARK(BM_AdagradStep);

}  // namespace

BENCHMARK_MAIN();
