#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "imag/repetition.hpp"

namespace {

std::vector<int> repeated_tail_sequence(int m, int vocab) {
  std::mt19937_64 g(7);
  std::uniform_int_distribution<int> d(0, vocab - 1);
  std::vector<int> toks(m);
  for (int& v : toks) v = d(g);
  // plant a copy so the scan always finds a span
  if (m >= 8)
    for (int i = 0; i < 3; ++i) toks[m - 3 + i] = toks[i];
  return toks;
}

void BM_FindLrns(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const std::vector<int> toks = repeated_tail_sequence(m, 12);
  for (auto _ : state) {
    const imag::LrnsSpan span = imag::find_lrns(toks);
    benchmark::DoNotOptimize(span.q);
  }
  state.SetComplexityN(m);
}
BENCHMARK(BM_FindLrns)->RangeMultiplier(2)->Range(16, 512)->Complexity();

}  // namespace
