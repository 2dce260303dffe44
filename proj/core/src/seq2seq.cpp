#include "imag/seq2seq.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "imag/error.hpp"

namespace imag {

using ordered_json = nlohmann::ordered_json;

AblateMode parse_ablate_mode(const std::string& s) {
  if (s == "none") return AblateMode::kNone;
  if (s == "wo_memory") return AblateMode::kWoMemory;
  if (s == "wo_source") return AblateMode::kWoSource;
  throw ConfigError("unknown ablation \"" + s + "\" (expected none, wo_memory, or wo_source)");
}

std::string to_string(AblateMode mode) {
  switch (mode) {
    case AblateMode::kNone: return "none";
    case AblateMode::kWoMemory: return "wo_memory";
    case AblateMode::kWoSource: return "wo_source";
  }
  throw ConfigError("bad ablation value");
}

EncoderRun encode(Tape& tape, const Model& m, const std::vector<int>& source_ids,
                  AblateMode ablate) {
  if (source_ids.empty()) throw ConfigError("encode: empty source");
  if (ablate != AblateMode::kNone && m.cfg.kind != ModelKind::kFull)
    throw ConfigError("encode: ablations only apply to the memory-augmented model");
  EncoderRun run;
  run.source_ids = source_ids;
  Tensor embedded = embed_input(tape, m.emb_table, source_ids);
  Tensor x = embedded;
  if (m.cfg.kind == ModelKind::kFull && ablate != AblateMode::kWoMemory) {
    run.memory = apply_memory(tape, embedded, m.mem);
    x = run.memory.encoder_input;
    run.used_memory = true;
    if (ablate == AblateMode::kWoSource) {
      x = run.memory.fetched;
      run.source_ids.clear();  // no real positions to copy from
    }
  }
  LstmState state{Tensor::zeros(m.cfg.e, 1), Tensor::zeros(m.cfg.e, 1)};
  std::vector<Tensor> hs;
  hs.reserve(x.cols);
  for (int j = 0; j < x.cols; ++j) {
    state = lstm_step(tape, tape.col(x, j), state, m.enc);
    hs.push_back(state.h);
  }
  run.states = tape.hstack(hs);
  run.final_state = state;
  return run;
}

AttentionStep attend(Tape& tape, const Model& m, const Tensor& u, const Tensor& enc_states) {
  Tensor wu_u = tape.matmul(m.att_wu, u);
  Tensor wh_h = tape.matmul(m.att_wh, enc_states);
  Tensor pre = tape.tanh(tape.add_col_vec(wh_h, wu_u));
  Tensor scores = tape.transpose(tape.matmul(m.att_v, pre));  // S x 1
  AttentionStep step;
  step.weights = tape.softmax_columns(scores);
  Tensor context = tape.matmul(enc_states, step.weights);
  step.z = tape.tanh(tape.matmul(m.att_wc, tape.concat_rows(u, context)));
  return step;
}

Tensor project_vocab(Tape& tape, const Model& m, const Tensor& z) {
  return tape.softmax_columns(tape.add(tape.matmul(m.out_w, z), m.out_b));
}

Tensor copy_merge(Tape& tape, const Model& m, const Tensor& z, const Tensor& gen,
                  const Tensor& attention, const std::vector<int>& source_ids) {
  Tensor gate = tape.sigmoid(tape.add(tape.matmul(m.gate_w, z), m.gate_b));
  Tensor copy = tape.scatter_sum(attention, source_ids, gen.rows);
  Tensor keep = tape.scale_shift(gate, -1.0, 1.0);
  return tape.add(tape.mul_by_scalar(gen, gate), tape.mul_by_scalar(copy, keep));
}

namespace {

int argmax_column(const Tensor& v) {
  int best = 0;
  for (int i = 1; i < v.rows; ++i)
    if (v.at(i, 0) > v.at(best, 0)) best = i;
  return best;
}

int sample_column(const Tensor& v, std::mt19937_64& rng) {
  std::vector<double> w(static_cast<std::size_t>(v.rows));
  for (int i = 0; i < v.rows; ++i) w[i] = std::max(0.0, v.at(i, 0));
  std::discrete_distribution<int> dist(w.begin(), w.end());
  return dist(rng);
}

}  // namespace

DecoderRun decode(Tape& tape, const Model& m, const EncoderRun& enc, const DecodeOptions& opt) {
  const bool teacher = opt.mode == DecodeMode::kTeacherForced;
  if (teacher && (!opt.gold || opt.gold->empty()))
    throw ConfigError("decode: teacher forcing needs a gold sequence");
  if (opt.mode == DecodeMode::kSampled && !opt.rng)
    throw ConfigError("decode: sampled mode needs an rng");
  if (opt.align_to_gold && (teacher || !opt.gold || opt.gold->empty()))
    throw ConfigError("decode: align_to_gold needs gold and a free-running mode");
  const bool scoring = teacher || opt.align_to_gold;
  const int steps = scoring ? static_cast<int>(opt.gold->size()) : opt.max_len;
  if (steps < 1) throw ConfigError("decode: nothing to decode");

  DecoderRun run;
  LstmState state = enc.final_state;
  Tensor z = m.dec_z0;
  int prev = Vocabulary::kBos;
  std::vector<Tensor> step_losses;
  for (int t = 0; t < steps; ++t) {
    Tensor emb_prev = tape.embed(m.emb_table, std::span<const int>(&prev, 1));
    state = lstm_step(tape, tape.concat_rows(emb_prev, z), state, m.dec);
    AttentionStep att = attend(tape, m, state.h, enc.states);
    z = att.z;
    Tensor gen = project_vocab(tape, m, z);
    Tensor y = copy_merge(tape, m, z, gen, att.weights, enc.source_ids);
    run.probs.push_back(y);
    run.attentions.push_back(att.weights);

    int emitted;
    switch (opt.mode) {
      case DecodeMode::kTeacherForced: emitted = (*opt.gold)[t]; break;
      case DecodeMode::kGreedy: emitted = argmax_column(y); break;
      case DecodeMode::kSampled: emitted = sample_column(y, *opt.rng); break;
      default: throw ConfigError("decode: bad mode");
    }
    run.tokens.push_back(emitted);
    if (scoring) step_losses.push_back(tape.neg_log_pick(y, (*opt.gold)[t]));
    prev = emitted;
    if (!teacher && !opt.align_to_gold && emitted == Vocabulary::kEos) break;
  }
  if (scoring) {
    Tensor total = step_losses.size() == 1 ? step_losses.front()
                                           : tape.add_n(step_losses);
    run.loss = tape.scale_shift(total, 1.0 / static_cast<double>(step_losses.size()), 0.0);
    run.has_loss = true;
  }
  return run;
}

std::vector<int> target_ids(const Vocabulary& vocab, const Sample& sample) {
  if (sample.text.empty())
    throw ConfigError("target_ids: sample " + sample.id + " has no text");
  std::vector<int> ids = vocab.encode(sample.text);
  ids.push_back(Vocabulary::kEos);
  return ids;
}

std::vector<int> source_ids_for(const Vocabulary& vocab, const Model& m, const TripleSet& triples) {
  std::vector<int> ids = vocab.encode(flatten_triples(triples));
  pad_to_min_length(ids, m.cfg.k, Vocabulary::kPad);
  return ids;
}

double distribution_entropy(const Tensor& probs) {
  double h = 0.0;
  for (int i = 0; i < probs.rows; ++i) {
    const double p = probs.at(i, 0);
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

GenerationRecord generate(const Model& m, const Vocabulary& vocab, const Sample& sample,
                          int max_len, AblateMode ablate) {
  return generate_from_tokens(m, vocab, sample.id, flatten_triples(sample.triples), max_len,
                              ablate);
}

GenerationRecord generate_from_tokens(const Model& m, const Vocabulary& vocab,
                                      const std::string& id,
                                      const std::vector<std::string>& input_tokens, int max_len,
                                      AblateMode ablate) {
  Tape tape;
  GenerationRecord rec;
  rec.id = id;
  rec.input = input_tokens;
  std::vector<int> src = vocab.encode(rec.input);
  const int real_n = static_cast<int>(src.size());
  pad_to_min_length(src, m.cfg.k, Vocabulary::kPad);

  EncoderRun enc = encode(tape, m, src, ablate);
  DecodeOptions opt;
  opt.mode = DecodeMode::kGreedy;
  opt.max_len = max_len;
  DecoderRun run = decode(tape, m, enc, opt);

  for (std::size_t t = 0; t < run.tokens.size(); ++t) {
    const int tok = run.tokens[t];
    if (tok == Vocabulary::kEos) break;
    rec.entropy.push_back(distribution_entropy(run.probs[t]));
    if (tok == Vocabulary::kUnk && real_n > 0 && ablate != AblateMode::kWoSource) {
      const Tensor& a = run.attentions[t];
      int best = 0;
      for (int i = 1; i < real_n && i < a.rows; ++i)
        if (a.at(i, 0) > a.at(best, 0)) best = i;
      rec.output.push_back(rec.input[best]);
    } else {
      rec.output.push_back(vocab.token(tok));
    }
  }
  return rec;
}

void write_generation_records(const std::string& path, std::span<const GenerationRecord> records) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write generations to " + path);
  for (const GenerationRecord& r : records) {
    ordered_json j;
    j["id"] = r.id;
    j["input"] = r.input;
    j["output_tokens"] = r.output;
    j["per_step_entropy"] = r.entropy;
    out << j.dump() << "\n";
  }
}

std::vector<GenerationRecord> read_generation_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read generations from " + path);
  std::vector<GenerationRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("id") || !j.contains("output_tokens"))
      throw ParseError("generations line " + std::to_string(line_no) + ": invalid record");
    GenerationRecord r;
    r.id = j["id"].get<std::string>();
    if (j.contains("input")) r.input = j["input"].get<std::vector<std::string>>();
    r.output = j["output_tokens"].get<std::vector<std::string>>();
    if (j.contains("per_step_entropy"))
      r.entropy = j["per_step_entropy"].get<std::vector<double>>();
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace imag
