#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "imag/grad_check.hpp"
#include "imag/memory.hpp"
#include "imag/tape.hpp"
#include "imag/tensor.hpp"

namespace imag {

// imag (kFull): memory-augmented generator. s2s: plain encoder/decoder,
// input dropping still on. s2sf: plain encoder/decoder fed every triple.
enum class ModelKind { kFull, kS2s, kS2sf };

ModelKind parse_model_kind(const std::string& s);
std::string to_string(ModelKind kind);

struct ModelConfig {
  int vocab_size = 0;
  int e = 32;  // embedding width, also every hidden width
  int k = 3;   // memory query window
  int l = 16;  // memory slots
  ModelKind kind = ModelKind::kFull;
};

struct Model {
  ModelConfig cfg;

  Tensor emb_table;  // |V| x e, shared by source and target sides
  MemoryParams mem;
  LstmParams enc;  // input width e
  LstmParams dec;  // input width 2e: [emb(prev) ; z_prev]

  Tensor att_wu;  // e x e
  Tensor att_wh;  // e x e
  Tensor att_v;   // 1 x e
  Tensor att_wc;  // e x 2e, combines [u ; context] into z
  Tensor gate_w;  // 1 x e, copy/generate gate on z
  Tensor gate_b;  // 1 x 1
  Tensor out_w;   // |V| x e
  Tensor out_b;   // |V| x 1
  Tensor dec_z0;  // e x 1, attentional state fed to the first decoder step

  // All weights uniform in [-0.1, 0.1], drawn in registry order from one stream.
  static Model init(const ModelConfig& cfg, std::uint64_t seed);

  // Stable name -> tensor registry; ordering is part of the checkpoint contract.
  std::vector<NamedParam> params() const;

  std::int64_t param_count() const;
};

}  // namespace imag
