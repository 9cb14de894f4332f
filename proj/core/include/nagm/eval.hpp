#pragma once

#include <string>
#include <vector>

#include "nagm/checkpoint.hpp"
#include "nagm/corpus.hpp"
#include "nagm/trainer.hpp"

namespace nagm {

struct ExampleScore {
  std::string id;
  std::string generated_conclusion;
  std::string generated_supplement;
  std::string reference;
  double rouge_l = 0.0;
  double bleu_4 = 0.0;
  double rouge_l_conclusion = 0.0;
  double rouge_l_supplement = 0.0;
};

struct EvalReport {
  double mean_rouge_l = 0.0;
  double mean_bleu_4 = 0.0;
  double mean_rouge_l_conclusion = 0.0;
  double mean_rouge_l_supplement = 0.0;
  std::vector<ExampleScore> examples;
  std::string config_fingerprint;
};

std::string config_fingerprint(const ModelConfig& config);

/// Greedy generation per test question; metrics over the tokenizer's
/// tokens of concatenated conclusion+supplement against the reference.
EvalReport evaluate_corpus(const Checkpoint& ckpt,
                           const std::vector<QCSTriple>& test);

void save_eval_report_json(const EvalReport& report, const std::string& path);

struct ExperimentRow {
  std::string variant;  // "alpha=<v>" | "NAGM" | "NAGMWA" | "wo_ste"
  double alpha = 0.0;
  double rouge_l = 0.0;
  double bleu_4 = 0.0;
  std::uint64_t seed = 0;
  std::string config_hash;
};

/// Trains one model per alpha with a shared seed; rows sorted by alpha.
std::vector<ExperimentRow> alpha_sweep(const std::vector<QCSTriple>& train,
                                       const std::vector<QCSTriple>& test,
                                       const std::vector<double>& alphas,
                                       ModelConfig base,
                                       const TrainConfig& tcfg);

/// NAGM, NAGMWA (attention off), and w/o ste (type vectors off) with a
/// shared seed and data.
std::vector<ExperimentRow> ablation_run(const std::vector<QCSTriple>& train,
                                        const std::vector<QCSTriple>& test,
                                        ModelConfig base,
                                        const TrainConfig& tcfg);

/// Header: variant_or_alpha,rouge_l,bleu_4,seed,config_hash
void save_table_csv(const std::vector<ExperimentRow>& rows,
                    const std::string& path);

}  // namespace nagm
