#include <random>

#include <benchmark/benchmark.h>

#include "imag/tape.hpp"
#include "imag/tensor.hpp"

namespace {

imag::Tensor rand_tensor(int r, int c, std::mt19937_64& g) {
  imag::Tensor t(r, c, true);
  std::uniform_real_distribution<double> d(-0.5, 0.5);
  for (double& v : *t.values) v = d(g);
  return t;
}

void BM_MatmulBackward(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 g(1);
  const imag::Tensor a = rand_tensor(n, n, g), b = rand_tensor(n, n, g);
  for (auto _ : state) {
    imag::Tape t;
    const imag::Tensor loss = t.sum_all(t.matmul(a, b));
    t.backward(loss);
    a.zero_grad();
    b.zero_grad();
    benchmark::DoNotOptimize(loss.item());
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_MatmulBackward)->RangeMultiplier(2)->Range(8, 64)->Complexity();

void BM_SoftmaxColumns(benchmark::State& state) {
  std::mt19937_64 g(2);
  const imag::Tensor x = rand_tensor(64, 16, g);
  for (auto _ : state) {
    imag::Tape t;
    const imag::Tensor loss = t.sum_all(t.mul(t.softmax_columns(x), x));
    t.backward(loss);
    x.zero_grad();
    benchmark::DoNotOptimize(loss.item());
  }
}
BENCHMARK(BM_SoftmaxColumns);

void BM_LstmChain(benchmark::State& state) {
  const int steps = static_cast<int>(state.range(0));
  std::mt19937_64 g(3);
  const imag::LstmParams p{rand_tensor(128, 32, g), rand_tensor(128, 32, g),
                           rand_tensor(128, 1, g)};
  const imag::Tensor x = rand_tensor(32, 1, g);
  for (auto _ : state) {
    imag::Tape t;
    imag::LstmState s{imag::Tensor::zeros(32, 1), imag::Tensor::zeros(32, 1)};
    for (int i = 0; i < steps; ++i) s = imag::lstm_step(t, x, s, p);
    const imag::Tensor loss = t.sum_all(s.h);
    t.backward(loss);
    for (const imag::Tensor& w : {p.w_ih, p.w_hh, p.b, x}) w.zero_grad();
    benchmark::DoNotOptimize(loss.item());
  }
}
BENCHMARK(BM_LstmChain)->Arg(8)->Arg(32);

}  // namespace

BENCHMARK_MAIN();
