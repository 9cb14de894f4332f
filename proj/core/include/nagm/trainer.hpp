#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nagm/checkpoint.hpp"
#include "nagm/corpus.hpp"
#include "nagm/model.hpp"

namespace nagm {

struct TrainConfig {
  double lr = 0.05;
  double adagrad_eps = 1e-8;
  std::size_t batch_size = 16;
  std::size_t iterations = 100;  // full passes over the corpus
  std::uint64_t seed = 0;
  std::size_t min_count = 1;
  TokenizerKind tokenizer = TokenizerKind::Bigram;
  std::size_t checkpoint_interval = 0;  // 0: only the final checkpoint
  std::string checkpoint_path;          // empty: no checkpoints written

  void validate() const;
};

struct TrainLogEntry {
  std::size_t iteration = 0;  // 1-based
  double mean_loss_w = 0.0;
  double mean_loss_s = 0.0;
  double mean_ce = 0.0;
  double wall_seconds = 0.0;  // in-memory only; not serialized
};

struct TrainLog {
  std::uint64_t seed = 0;
  std::vector<TrainLogEntry> entries;
};

struct FitResult {
  Checkpoint checkpoint;
  TrainLog log;
};

/// Uniform over `pool` entries whose id differs from the positive's.
std::size_t sample_negative(const std::vector<QCSTriple>& pool,
                            std::size_t positive_index, std::mt19937_64& rng);

FitResult fit(const std::vector<QCSTriple>& corpus, ModelConfig model_config,
              const TrainConfig& train_config);

/// Header: iteration,loss_w,loss_s,ce
void write_train_log_csv(const TrainLog& log, const std::string& path);

}  // namespace nagm
