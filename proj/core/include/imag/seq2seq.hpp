#pragma once

#include <random>
#include <string>
#include <vector>

#include "imag/dataset.hpp"
#include "imag/memory.hpp"
#include "imag/model.hpp"
#include "imag/tape.hpp"

namespace imag {

// Generation-time ablations of a memory-trained model: wo_memory feeds the
// encoder the embeddings alone, wo_source feeds it the memory readout alone
// (queries still come from the input).
enum class AblateMode { kNone, kWoMemory, kWoSource };

AblateMode parse_ablate_mode(const std::string& s);
std::string to_string(AblateMode mode);

struct EncoderRun {
  Tensor states;                // e x S, one hidden state per encoder column
  LstmState final_state;        // seeds the decoder
  std::vector<int> source_ids;  // ids of the real input positions (first columns)
  MemoryReadout memory;         // populated when the memory path ran
  bool used_memory = false;
};

// Embeds the flattened input, optionally reads the memory, and runs the
// encoder LSTM over the resulting columns.
EncoderRun encode(Tape& tape, const Model& m, const std::vector<int>& source_ids,
                  AblateMode ablate = AblateMode::kNone);

struct AttentionStep {
  Tensor weights;  // S x 1, sums to 1 across encoder columns
  Tensor z;        // e x 1, attentional state tanh(Wc [u ; context])
};

AttentionStep attend(Tape& tape, const Model& m, const Tensor& u, const Tensor& enc_states);

// Vocabulary distribution from the attentional state (generation path).
Tensor project_vocab(Tape& tape, const Model& m, const Tensor& z);

// gate * gen + (1 - gate) * copy, where copy scatters attention weight from
// the real source positions onto their token ids; attention mass on memory
// columns backs no copy. gate = sigmoid(w z + b).
Tensor copy_merge(Tape& tape, const Model& m, const Tensor& z, const Tensor& gen,
                  const Tensor& attention, const std::vector<int>& source_ids);

enum class DecodeMode {
  kTeacherForced,  // feed gold prefix, loss over gold
  kGreedy,         // feed own argmax, stop at <eos> or max_len
  kSampled,        // feed own samples, stop at <eos> or max_len
};

struct DecodeOptions {
  DecodeMode mode = DecodeMode::kTeacherForced;
  int max_len = 60;
  const std::vector<int>* gold = nullptr;  // required by teacher forcing
  std::mt19937_64* rng = nullptr;          // required by sampled mode
  // Greedy/sampled only: run exactly gold->size() steps, ignore <eos>, and
  // score the gold sequence under the free-running distributions.
  bool align_to_gold = false;
};

struct DecoderRun {
  std::vector<Tensor> probs;       // per step merged distribution, |V| x 1
  std::vector<Tensor> attentions;  // per step attention, S x 1
  std::vector<int> tokens;         // emitted ids, <eos> kept when produced
  Tensor loss;                     // mean -log p(gold_t); see has_loss
  bool has_loss = false;
};

DecoderRun decode(Tape& tape, const Model& m, const EncoderRun& enc, const DecodeOptions& opt);

// Target token ids for a sample: encoded text plus a closing <eos>.
std::vector<int> target_ids(const Vocabulary& vocab, const Sample& sample);

// Flattened source token ids, padded with <pad> up to the memory window.
std::vector<int> source_ids_for(const Vocabulary& vocab, const Model& m, const TripleSet& triples);

// Shannon entropy of a distribution column, in nats.
double distribution_entropy(const Tensor& probs);

struct GenerationRecord {
  std::string id;
  std::vector<std::string> input;   // flattened source surface tokens
  std::vector<std::string> output;  // generated surface tokens, <eos> stripped
  std::vector<double> entropy;      // per generated step
};

// Greedy generation; <unk> outputs take the surface form of the most
// attended real source position.
GenerationRecord generate(const Model& m, const Vocabulary& vocab, const Sample& sample,
                          int max_len, AblateMode ablate = AblateMode::kNone);

// Same, over a raw surface-token input (used by entity-only prompting).
GenerationRecord generate_from_tokens(const Model& m, const Vocabulary& vocab,
                                      const std::string& id,
                                      const std::vector<std::string>& input_tokens, int max_len,
                                      AblateMode ablate = AblateMode::kNone);

void write_generation_records(const std::string& path, std::span<const GenerationRecord> records);
std::vector<GenerationRecord> read_generation_records(const std::string& path);

}  // namespace imag
