#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "subrank/cross_encoder.hpp"
#include "subrank/gbdt.hpp"
#include "subrank/metrics.hpp"

using namespace subrank;

namespace {

void BM_GbdtFit(benchmark::State& state) {
  const auto n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  std::vector<PairFeature> x(n);
  std::vector<double> y(n);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < 32; ++k) x[i].values.push_back(g(rng));
    y[i] = x[i].values[0] - x[i].values[1] * x[i].values[2] + 0.1 * g(rng);
  }
  GbdtParams p;
  p.n_trees = 20;
  for (auto _ : state) benchmark::DoNotOptimize(fit_gbdt(x, y, p, Objective::mse));
  state.SetItemsProcessed(state.iterations() * n * p.n_trees);
}
BENCHMARK(BM_GbdtFit)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);

void BM_CrossEncoderForward(benchmark::State& state) {
  CrossEncoderConfig c;
  c.vocab_size = 2000;
  const auto model = init_cross_encoder(c, 3);
  std::mt19937_64 rng(2);
  std::vector<TokenSequence> batch(static_cast<std::size_t>(state.range(0)));
  for (auto& seq : batch) {
    seq.assign(static_cast<std::size_t>(c.max_len), 0);
    // Roughly half the positions hold tokens, the rest is padding.
    for (int i = 0; i < c.max_len / 2; ++i) seq[static_cast<std::size_t>(i)] = static_cast<TokenId>(4 + rng() % 1990);
  }
  for (auto _ : state) benchmark::DoNotOptimize(forward(model, batch));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CrossEncoderForward)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_Auprc(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u;
  std::vector<double> s(n);
  std::vector<int> l(n);
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = u(rng);
    l[i] = u(rng) < 0.6;
  }
  for (auto _ : state) benchmark::DoNotOptimize(auprc(s, l));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Auprc)->Arg(2000)->Arg(100000);

void BM_NdcgForQuery(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u;
  std::vector<double> s(n), gains(n);
  std::vector<std::string> keys(n);
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = u(rng);
    gains[i] = u(rng) * 0.1;
    keys[i] = "p" + std::to_string(i);
  }
  for (auto _ : state) benchmark::DoNotOptimize(ndcg_for_query(s, gains, keys));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_NdcgForQuery)->Arg(20)->Arg(1000);

}  // namespace
BENCHMARK_MAIN();
