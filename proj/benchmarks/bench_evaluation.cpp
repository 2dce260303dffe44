#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "imag/evaluation.hpp"

namespace {

std::vector<std::string> word_soup(int n, unsigned seed) {
  static const char* bank[] = {"the",  "city", "of",     "located", "in",    "region",
                               "is",   "a",    "member", "country", "which", "serves",
                               "food", "and",  "has",    "leader",  "named", "airport"};
  std::mt19937_64 g(seed);
  std::uniform_int_distribution<int> d(0, 17);
  std::vector<std::string> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) out.push_back(bank[d(g)]);
  return out;
}

void BM_RougeL(benchmark::State& state) {
  const auto cand = word_soup(static_cast<int>(state.range(0)), 1);
  const auto ref = word_soup(static_cast<int>(state.range(0)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(imag::rouge_l(cand, ref).f1);
}
BENCHMARK(BM_RougeL)->Arg(30)->Arg(120);

void BM_RougeSu4(benchmark::State& state) {
  const auto cand = word_soup(static_cast<int>(state.range(0)), 3);
  const auto ref = word_soup(static_cast<int>(state.range(0)), 4);
  for (auto _ : state) benchmark::DoNotOptimize(imag::rouge_su4(cand, ref).f1);
}
BENCHMARK(BM_RougeSu4)->Arg(30)->Arg(120);

void BM_SentenceStats(benchmark::State& state) {
  const auto toks = word_soup(static_cast<int>(state.range(0)), 5);
  for (auto _ : state) benchmark::DoNotOptimize(imag::sentence_stats(toks).lrnsr);
}
BENCHMARK(BM_SentenceStats)->Arg(30)->Arg(120);

}  // namespace
