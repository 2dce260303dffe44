#pragma once

#include <string>

#include "imag/dataset.hpp"
#include "imag/model.hpp"

namespace imag {

// Binary checkpoint: magic "IMAG1", a manifest of (name, shape, payload
// offset) entries, then the tensor payloads as little-endian 64-bit floats in
// row-major order. Saving the same parameters twice yields identical bytes.
void save_checkpoint(const Model& m, const std::string& path);

// Rebuilds a model for cfg and fills it from the file; every tensor shape is
// validated, and the error for a mismatch names the offending tensor.
Model load_checkpoint(const std::string& path, const ModelConfig& cfg);

// Saves the checkpoint plus its sidecars: "<path>.vocab" (token list) and
// "<path>.meta" (architecture), so the file is self-describing.
void save_model(const Model& m, const Vocabulary& vocab, const std::string& path);

struct LoadedModel {
  Model model;
  Vocabulary vocab;
};

// Loads a self-describing checkpoint via its sidecars.
LoadedModel load_model(const std::string& path);

}  // namespace imag
