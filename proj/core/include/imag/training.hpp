#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "imag/dataset.hpp"
#include "imag/model.hpp"
#include "imag/repetition.hpp"
#include "imag/seq2seq.hpp"

namespace imag {

struct TrainConfig {
  int e = 32;
  int k = 3;
  int l = 16;
  double zeta = 0.5;   // per-triple preserve probability while training
  double alpha = 0.5;  // penalty weight in stage 2
  double gamma = 1.0;  // repeated-word budget (rwp)
  PenaltyVariant variant = PenaltyVariant::kNone;
  int batch_size = 8;
  int stage1_batches = 200;
  int stage2_batches = 0;
  double learning_rate = 0.1;
  double grad_clip = 5.0;
  std::uint64_t seed = 1;
  ModelKind model_kind = ModelKind::kFull;

  void validate() const;  // throws on out-of-range fields
};

// Flat key=value file, keys named exactly like the fields above; '#' starts
// a comment. Unknown keys are errors.
TrainConfig parse_train_config(std::istream& in);
TrainConfig load_train_config(const std::string& path);
void set_config_field(TrainConfig& cfg, const std::string& key, const std::string& value);

struct EncodedPair {
  std::vector<int> source;  // flattened triple ids, padded to the window
  std::vector<int> target;  // text ids closed with <eos>
};

// One supervision pair per sample: imag/s2s drop triples with probability
// 1-zeta per triple (never all of them), s2sf keeps everything.
std::vector<EncodedPair> make_batch(std::span<const Sample> samples, const Vocabulary& vocab,
                                    int window, double zeta, ModelKind kind,
                                    std::mt19937_64& rng);

// Teacher-forced mean per-token surprisal.
Tensor stage1_loss(Tape& tape, const Model& m, const EncodedPair& pair);

// Free-running decode aligned to the gold length, scored against gold, plus
// alpha times the configured penalty. The rl variant adds a sampled rollout.
Tensor stage2_loss(Tape& tape, const Model& m, const EncodedPair& pair, const PenaltyConfig& pc,
                   std::mt19937_64& rng);

void zero_param_grads(const Model& m);

// Clips the accumulated gradient to grad_clip by global norm, applies one
// SGD update, and clears the gradients. Returns the pre-clip norm.
double sgd_step(const Model& m, double learning_rate, double grad_clip);

struct TrainReport {
  std::vector<double> loss_curve;  // one entry per batch
  int stage_boundary_index = 0;    // first curve index belonging to stage 2
  double wall_clock_seconds = 0.0;
  std::string checkpoint_path;
};

void write_train_report(const std::string& path, const TrainReport& report);

// Called after every optimizer step with the number of completed batches.
using StepObserver = std::function<void(int completed_batches, const Model& m)>;

struct TrainResult {
  Model model;
  Vocabulary vocab;
  TrainReport report;
};

// Two-stage run over split.train: stage 1 teacher-forced, stage 2 free
// running with the penalty variant. Deterministic under cfg.seed; saves the
// model (with sidecars) to checkpoint_path unless it is empty.
TrainResult train(const TrainConfig& cfg, const ItgSplit& split,
                  const std::string& checkpoint_path = "",
                  const StepObserver& observer = nullptr);

}  // namespace imag
