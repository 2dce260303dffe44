#include "imag/repetition.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "imag/error.hpp"

namespace imag {

LrnsSpan find_lrns(std::span<const int> tokens) {
  const int m = static_cast<int>(tokens.size());
  LrnsSpan best;
  if (m < 2) return best;
  // lce_next[j] is the longest common extension of suffixes i+1 and j+1 from
  // the previous (i+1) sweep; one descending pass per start i.
  std::vector<int> lce_next(static_cast<std::size_t>(m) + 1, 0);
  std::vector<int> lce_cur(static_cast<std::size_t>(m) + 1, 0);
  for (int i = m - 1; i >= 0; --i) {
    for (int j = m - 1; j > i; --j)
      lce_cur[j] = tokens[i] == tokens[j] ? lce_next[j + 1] + 1 : 0;
    for (int j = i + 1; j < m; ++j) {
      const int len = std::min(lce_cur[j], j - i);  // cap keeps the copies disjoint
      if (len < 2) continue;
      const int p = j + 1, q = j + len, k0 = i + 1;  // 1-based
      if (len > best.length() ||
          (len == best.length() && (p > best.p || (p == best.p && k0 > best.k0)))) {
        best = LrnsSpan{p, q, k0};
      }
    }
    std::swap(lce_cur, lce_next);
  }
  return best;
}

PenaltyVariant parse_variant(const std::string& s) {
  if (s == "none") return PenaltyVariant::kNone;
  if (s == "rsp") return PenaltyVariant::kRsp;
  if (s == "rwp") return PenaltyVariant::kRwp;
  if (s == "rl") return PenaltyVariant::kRl;
  if (s == "cvg") return PenaltyVariant::kCvg;
  throw ConfigError("unknown penalty variant \"" + s + "\" (expected none, rsp, rwp, rl, or cvg)");
}

std::string to_string(PenaltyVariant v) {
  switch (v) {
    case PenaltyVariant::kNone: return "none";
    case PenaltyVariant::kRsp: return "rsp";
    case PenaltyVariant::kRwp: return "rwp";
    case PenaltyVariant::kRl: return "rl";
    case PenaltyVariant::kCvg: return "cvg";
  }
  throw ConfigError("bad penalty variant value");
}

Tensor rsp_loss(Tape& tape, const DecoderRun& run, const LrnsSpan& span) {
  if (!span.found()) return tape.scale_shift(Tensor::scalar(0.0), 1.0, 0.0);
  if (span.q > static_cast<int>(run.probs.size()))
    throw ConfigError("rsp_loss: span ends past the decoded run");
  std::vector<Tensor> picks;
  for (int r = span.p; r <= span.q; ++r)
    picks.push_back(tape.pick(run.probs[r - 1], run.tokens[r - 1]));
  return picks.size() == 1 ? picks.front() : tape.add_n(picks);
}

Tensor rwp_loss(Tape& tape, const DecoderRun& run, double gamma) {
  if (run.probs.empty()) throw ConfigError("rwp_loss: empty run");
  Tensor expected = run.probs.size() == 1 ? run.probs.front() : tape.add_n(run.probs);
  return tape.hinge_sum(expected, gamma);
}

Tensor rl_surrogate(Tape& tape, const DecoderRun& sampled_run) {
  const int m = static_cast<int>(sampled_run.tokens.size());
  if (m == 0) throw ConfigError("rl_surrogate: empty rollout");
  const LrnsSpan span = find_lrns(sampled_run.tokens);
  const double reward =
      span.found() ? static_cast<double>(m - span.q + span.p) / m : 1.0;
  std::vector<Tensor> nlls;
  for (int t = 0; t < m; ++t)
    nlls.push_back(tape.neg_log_pick(sampled_run.probs[t], sampled_run.tokens[t]));
  Tensor total = nlls.size() == 1 ? nlls.front() : tape.add_n(nlls);
  return tape.scale_shift(total, reward, 0.0);
}

Tensor cvg_loss(Tape& tape, const DecoderRun& run) {
  if (run.attentions.empty()) throw ConfigError("cvg_loss: empty run");
  return tape.coverage_penalty(run.attentions);
}

}  // namespace imag
