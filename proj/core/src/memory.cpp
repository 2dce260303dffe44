#include "imag/memory.hpp"

#include "imag/error.hpp"

namespace imag {

Tensor embed_input(Tape& tape, const Tensor& table, const std::vector<int>& ids) {
  return tape.embed(table, ids);
}

Tensor query_windows(Tape& tape, const Tensor& embedded, const MemoryParams& mem) {
  return tape.conv1d_windows(embedded, mem.kernel, mem.bias, mem.window);
}

Tensor slot_distribution(Tape& tape, const Tensor& queries, const MemoryParams& mem) {
  if (mem.k_keys.rows != queries.rows)
    throw ShapeError("slot_distribution: keys are " + mem.k_keys.shape_str() +
                     " but queries are " + queries.shape_str());
  Tensor kt = tape.transpose(mem.k_keys);
  Tensor scores = tape.matmul(kt, queries);
  return tape.softmax_columns(scores);
}

Tensor fetch_relevant(Tape& tape, const Tensor& slots, const MemoryParams& mem) {
  if (mem.v_values.rows != slots.rows)
    throw ShapeError("fetch_relevant: values are " + mem.v_values.shape_str() +
                     " but slot weights are " + slots.shape_str());
  Tensor vt = tape.transpose(mem.v_values);
  return tape.matmul(vt, slots);
}

Tensor assemble_encoder_input(Tape& tape, const Tensor& embedded, const Tensor& fetched) {
  return tape.concat_cols(embedded, fetched);
}

MemoryReadout apply_memory(Tape& tape, const Tensor& embedded, const MemoryParams& mem) {
  MemoryReadout r;
  r.embedded = embedded;
  r.queries = query_windows(tape, embedded, mem);
  r.slots = slot_distribution(tape, r.queries, mem);
  r.fetched = fetch_relevant(tape, r.slots, mem);
  r.encoder_input = assemble_encoder_input(tape, embedded, r.fetched);
  return r;
}

}  // namespace imag
