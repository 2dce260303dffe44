#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "imag/dataset.hpp"
#include "imag/model.hpp"
#include "imag/tape.hpp"
#include "imag/training.hpp"

namespace {

std::vector<imag::Sample> tiny_corpus() {
  std::vector<imag::Sample> samples;
  for (int i = 0; i < 8; ++i) {
    imag::Sample s;
    s.id = "b" + std::to_string(i);
    const std::string subj = "e" + std::to_string(i);
    s.triples.triples.push_back({subj, "color", i % 2 ? "red" : "blue"});
    s.triples.triples.push_back({subj, "size", i % 2 ? "big" : "small"});
    s.text = {subj, "is", i % 2 ? "red" : "blue", "and", i % 2 ? "big" : "small"};
    samples.push_back(std::move(s));
  }
  return samples;
}

void BM_Stage1BatchStep(benchmark::State& state) {
  const std::vector<imag::Sample> corpus = tiny_corpus();
  const imag::Vocabulary vocab = imag::build_vocab(corpus, 1);
  imag::ModelConfig mc;
  mc.vocab_size = static_cast<int>(vocab.size());
  mc.e = static_cast<int>(state.range(0));
  mc.k = 3;
  mc.l = 16;
  const imag::Model model = imag::Model::init(mc, 5);
  std::mt19937_64 rng(5);
  const auto batch = imag::make_batch(corpus, vocab, mc.k, 1.0, imag::ModelKind::kFull, rng);
  for (auto _ : state) {
    for (const imag::EncodedPair& pair : batch) {
      imag::Tape tape;
      const imag::Tensor loss = imag::stage1_loss(tape, model, pair);
      tape.backward(tape.scale_shift(loss, 1.0 / batch.size(), 0.0));
    }
    benchmark::DoNotOptimize(imag::sgd_step(model, 0.1, 5.0));
  }
}
BENCHMARK(BM_Stage1BatchStep)->Arg(16)->Arg(32);

}  // namespace
