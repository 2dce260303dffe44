#pragma once

#include <vector>

#include "imag/tape.hpp"
#include "imag/tensor.hpp"

namespace imag {

// Learned key/value memory plus the convolutional query head that reads it.
struct MemoryParams {
  Tensor k_keys;    // e x l, one key per slot
  Tensor v_values;  // l x e, one value row per slot
  Tensor kernel;    // e x (e*k), shared window map
  Tensor bias;      // e x 1
  int window = 3;   // k, tokens per query window
};

// Intermediate products of one memory read, kept for probing and tests.
// All tensors alias tape storage.
struct MemoryReadout {
  Tensor embedded;       // E, e x n
  Tensor queries;        // Q, e x (n-k+1)
  Tensor slots;          // W, l x (n-k+1), each column a distribution
  Tensor fetched;        // C, e x (n-k+1)
  Tensor encoder_input;  // X = [E ; C] columns, e x (2n-k+1)
};

Tensor embed_input(Tape& tape, const Tensor& table, const std::vector<int>& ids);

Tensor query_windows(Tape& tape, const Tensor& embedded, const MemoryParams& mem);

// Columns of the result sum to one: each query is softmax-matched against all keys.
Tensor slot_distribution(Tape& tape, const Tensor& queries, const MemoryParams& mem);

Tensor fetch_relevant(Tape& tape, const Tensor& slots, const MemoryParams& mem);

Tensor assemble_encoder_input(Tape& tape, const Tensor& embedded, const Tensor& fetched);

// Full read pipeline over an already-embedded input.
MemoryReadout apply_memory(Tape& tape, const Tensor& embedded, const MemoryParams& mem);

}  // namespace imag
