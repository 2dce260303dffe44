#pragma once

#include <span>
#include <string>

#include "imag/seq2seq.hpp"
#include "imag/tape.hpp"

namespace imag {

// Longest span that restates an earlier, non-overlapping stretch of the same
// sequence. Positions are 1-based; all zero when no such span exists.
struct LrnsSpan {
  int p = 0;   // first position of the later occurrence
  int q = 0;   // last position of the later occurrence
  int k0 = 0;  // first position of the earlier occurrence
  bool found() const { return p != 0; }
  int length() const { return found() ? q - p + 1 : 0; }
};

// O(m^2) search. The repeated span has length >= 2 and its earlier copy ends
// strictly before the span starts. Ties resolve to the longest span, then the
// latest start p, then the latest copy start k0.
LrnsSpan find_lrns(std::span<const int> tokens);

enum class PenaltyVariant { kNone, kRsp, kRwp, kRl, kCvg };

PenaltyVariant parse_variant(const std::string& s);
std::string to_string(PenaltyVariant v);

struct PenaltyConfig {
  PenaltyVariant variant = PenaltyVariant::kNone;
  double alpha = 0.5;  // weight of the penalty term
  double gamma = 1.0;  // repeated-word budget for the rwp variant
};

// Probability mass the decoder put on its own tokens inside the repeated
// span; zero-valued constant when the run has no such span.
Tensor rsp_loss(Tape& tape, const DecoderRun& run, const LrnsSpan& span);

// Word-level repetition: sum over the vocabulary of max(0, total expected
// count - gamma).
Tensor rwp_loss(Tape& tape, const DecoderRun& run, double gamma);

// Reinforce surrogate over a sampled rollout: -R * sum_t log y_t[token_t],
// with R = 1 when the rollout has no repeated span, else (m - q + p) / m.
Tensor rl_surrogate(Tape& tape, const DecoderRun& sampled_run);

// Attention-coverage penalty over the run's attention history.
Tensor cvg_loss(Tape& tape, const DecoderRun& run);

}  // namespace imag
