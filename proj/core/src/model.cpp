#include "imag/model.hpp"

#include <random>

#include "imag/dataset.hpp"
#include "imag/error.hpp"

namespace imag {

ModelKind parse_model_kind(const std::string& s) {
  if (s == "imag") return ModelKind::kFull;
  if (s == "s2s") return ModelKind::kS2s;
  if (s == "s2sf") return ModelKind::kS2sf;
  throw ConfigError("unknown model kind \"" + s + "\" (expected imag, s2s, or s2sf)");
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kFull: return "imag";
    case ModelKind::kS2s: return "s2s";
    case ModelKind::kS2sf: return "s2sf";
  }
  throw ConfigError("bad model kind value");
}

namespace {

void fill_uniform(Tensor& t, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(-0.1, 0.1);
  for (double& v : *t.values) v = unif(rng);
}

}  // namespace

Model Model::init(const ModelConfig& cfg, std::uint64_t seed) {
  if (cfg.vocab_size <= Vocabulary::kReservedCount)
    throw ConfigError("model needs a vocabulary larger than the reserved tokens");
  if (cfg.e < 1 || cfg.k < 1 || cfg.l < 1)
    throw ConfigError("model dims e, k, l must all be >= 1");

  Model m;
  m.cfg = cfg;
  const int e = cfg.e, l = cfg.l, k = cfg.k, vocab = cfg.vocab_size;

  // Grad buffers come along from the start so every tape sees trainable leaves.
  m.emb_table = Tensor::zeros(vocab, e, true);
  m.mem.v_values = Tensor::zeros(l, e, true);
  m.mem.k_keys = Tensor::zeros(e, l, true);
  m.mem.kernel = Tensor::zeros(e, e * k, true);
  m.mem.bias = Tensor::zeros(e, 1, true);
  m.mem.window = k;
  m.enc.w_ih = Tensor::zeros(4 * e, e, true);
  m.enc.w_hh = Tensor::zeros(4 * e, e, true);
  m.enc.b = Tensor::zeros(4 * e, 1, true);
  m.dec.w_ih = Tensor::zeros(4 * e, 2 * e, true);
  m.dec.w_hh = Tensor::zeros(4 * e, e, true);
  m.dec.b = Tensor::zeros(4 * e, 1, true);
  m.att_wu = Tensor::zeros(e, e, true);
  m.att_wh = Tensor::zeros(e, e, true);
  m.att_v = Tensor::zeros(1, e, true);
  m.att_wc = Tensor::zeros(e, 2 * e, true);
  m.gate_w = Tensor::zeros(1, e, true);
  m.gate_b = Tensor::zeros(1, 1, true);
  m.out_w = Tensor::zeros(vocab, e, true);
  m.out_b = Tensor::zeros(vocab, 1, true);
  m.dec_z0 = Tensor::zeros(e, 1, true);

  std::mt19937_64 rng(seed);
  for (NamedParam& p : m.params()) fill_uniform(p.tensor, rng);
  return m;
}

std::vector<NamedParam> Model::params() const {
  return {
      {"emb.table", emb_table}, {"mem.V", mem.v_values}, {"mem.K", mem.k_keys},
      {"mem.kernel", mem.kernel}, {"mem.bias", mem.bias},
      {"enc.w_ih", enc.w_ih}, {"enc.w_hh", enc.w_hh}, {"enc.b", enc.b},
      {"dec.w_ih", dec.w_ih}, {"dec.w_hh", dec.w_hh}, {"dec.b", dec.b},
      {"att.wu", att_wu}, {"att.wh", att_wh}, {"att.v", att_v}, {"att.wc", att_wc},
      {"gate.w", gate_w}, {"gate.b", gate_b},
      {"out.w", out_w}, {"out.b", out_b}, {"dec.z0", dec_z0},
  };
}

std::int64_t Model::param_count() const {
  std::int64_t n = 0;
  for (const NamedParam& p : params()) n += static_cast<std::int64_t>(p.tensor.rows) * p.tensor.cols;
  return n;
}

}  // namespace imag
