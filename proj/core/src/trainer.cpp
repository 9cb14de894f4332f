#include "nagm/trainer.hpp"

#include <chrono>
#include <fstream>

namespace nagm {

void TrainConfig::validate() const {
  if (lr <= 0.0) throw ConfigError("train config: lr must be > 0");
  if (adagrad_eps <= 0.0) throw ConfigError("train config: eps must be > 0");
  if (batch_size < 1) throw ConfigError("train config: batch_size must be >= 1");
  if (iterations < 1) throw ConfigError("train config: iterations must be >= 1");
}

std::size_t sample_negative(const std::vector<QCSTriple>& pool,
                            std::size_t positive_index, std::mt19937_64& rng) {
  const std::string& pos_id = pool.at(positive_index).id;
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (pool[i].id != pos_id) candidates.push_back(i);
  }
  if (candidates.empty()) {
    throw ConfigError("sample_negative: no triple with a different id");
  }
  return candidates[uniform_index(rng, candidates.size())];
}

FitResult fit(const std::vector<QCSTriple>& corpus, ModelConfig model_config,
              const TrainConfig& train_config) {
  train_config.validate();
  if (corpus.size() < 2) {
    throw ConfigError("fit: corpus must hold >= 2 triples for negative sampling");
  }

  Vocabulary vocab =
      Vocabulary::build(corpus, train_config.min_count, train_config.tokenizer);
  model_config.vocab_size = vocab.size();
  model_config.validate();

  FitResult result;
  result.checkpoint.config = model_config;
  result.checkpoint.vocab = vocab;
  result.checkpoint.params =
      init_model_params(model_config, train_config.seed);
  result.log.seed = train_config.seed;

  std::mt19937_64 shuffle_seeds(train_config.seed);
  std::mt19937_64 negative_rng(train_config.seed + 0x9E3779B97F4A7C15ull);
  auto t0 = std::chrono::steady_clock::now();

  for (std::size_t iter = 1; iter <= train_config.iterations; ++iter) {
    std::vector<Batch> batches = make_batches(
        corpus, vocab, train_config.batch_size, shuffle_seeds());
    double sum_lw = 0.0, sum_ls = 0.0, sum_ce = 0.0;
    std::size_t n_examples = 0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const Batch& batch = batches[b];
      std::vector<ExamplePair> pairs;
      for (std::size_t i = 0; i < batch.size(); ++i) {
        const QCSTriple& pos = corpus[batch.corpus_indices[i]];
        // Negatives come from the batch peers, falling back to the corpus
        // for singleton batches.
        const QCSTriple* neg = nullptr;
        if (batch.size() >= 2) {
          std::vector<QCSTriple> pool;
          for (std::size_t k : batch.corpus_indices) pool.push_back(corpus[k]);
          neg = &corpus[batch.corpus_indices[sample_negative(pool, i,
                                                             negative_rng)]];
        } else {
          std::size_t pos_index = batch.corpus_indices[i];
          neg = &corpus[sample_negative(corpus, pos_index, negative_rng)];
        }
        ExamplePair pair;
        pair.question = vocab.encode(pos.question);
        pair.conclusion = vocab.encode(pos.conclusion);
        pair.supplement = vocab.encode(pos.supplement);
        pair.neg_conclusion = vocab.encode(neg->conclusion);
        pair.neg_supplement = vocab.encode(neg->supplement);
        pairs.push_back(std::move(pair));
      }
      std::vector<ForwardTrace> traces;
      BackpropResult r;
      try {
        r = batch_loss(pairs, result.checkpoint.params, model_config, &traces);
      } catch (const TrainingError& e) {
        throw TrainingError("iteration " + std::to_string(iter) + ", batch " +
                            std::to_string(b) + ": " + e.what());
      }
      result.checkpoint.params.adagrad_step(r.grads, train_config.lr,
                                            train_config.adagrad_eps);
      for (const ForwardTrace& t : traces) {
        sum_lw += t.loss_total;
        sum_ls += t.loss_closeness;
        sum_ce += t.cross_entropy;
        ++n_examples;
      }
    }
    TrainLogEntry entry;
    entry.iteration = iter;
    entry.mean_loss_w = sum_lw / static_cast<double>(n_examples);
    entry.mean_loss_s = sum_ls / static_cast<double>(n_examples);
    entry.mean_ce = sum_ce / static_cast<double>(n_examples);
    entry.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    result.log.entries.push_back(entry);

    if (!train_config.checkpoint_path.empty() &&
        train_config.checkpoint_interval > 0 &&
        iter % train_config.checkpoint_interval == 0 &&
        iter != train_config.iterations) {
      save_checkpoint(result.checkpoint, train_config.checkpoint_path + "." +
                                             std::to_string(iter));
    }
  }
  if (!train_config.checkpoint_path.empty()) {
    save_checkpoint(result.checkpoint, train_config.checkpoint_path);
  }
  return result;
}

void write_train_log_csv(const TrainLog& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "iteration,loss_w,loss_s,ce\n";
  out.precision(17);
  for (const auto& e : log.entries) {
    out << e.iteration << ',' << e.mean_loss_w << ',' << e.mean_loss_s << ','
        << e.mean_ce << '\n';
  }
}

}  // namespace nagm
