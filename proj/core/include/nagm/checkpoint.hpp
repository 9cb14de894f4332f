#pragma once

#include <string>

#include "nagm/corpus.hpp"
#include "nagm/model.hpp"

namespace nagm {

struct Checkpoint {
  ModelConfig config;
  Vocabulary vocab;
  ParamStore params;
};

/// Versioned binary container: magic, version, JSON header (config, vocab,
/// tensor manifest), then raw little-endian doubles. Bitwise round-trip.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

/// Rejects checkpoints whose tensor shapes disagree with `expected`,
/// naming the first offending tensor.
void validate_checkpoint_shapes(const Checkpoint& ckpt,
                                const ModelConfig& expected);

}  // namespace nagm
