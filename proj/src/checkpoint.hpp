#pragma once

#include <optional>
#include <string>

#include "models.hpp"

namespace maskgan {

// Binary checkpoint: versioned header (magic, format version, dims, stage),
// then named parameter blocks as little-endian float32. Parameters are kept
// at float32 precision in memory, so save/load round-trips are bit-exact.
struct LoadedCheckpoint {
  std::string stage;  // "lm", "mle" or "gan"
  ModelDims dims;
  bool shared_embedding = false;
  Seq2SeqModel generator;
  std::optional<Seq2SeqModel> discriminator;
};

void save_checkpoint(const std::string& path, const std::string& stage,
                     const Seq2SeqModel& generator,
                     const Seq2SeqModel* discriminator = nullptr);

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace maskgan
