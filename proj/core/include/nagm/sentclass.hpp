#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nagm/corpus.hpp"
#include "nagm/params.hpp"

namespace nagm {

/// Ordered lowercase cue phrases; a sentence starting with one is a
/// supplement by rule.
struct CuePhraseList {
  std::vector<std::string> phrases;

  static CuePhraseList defaults();
  /// One phrase per line, UTF-8, '#' comments, blank lines ignored.
  static CuePhraseList load(const std::string& path);
};

struct SentenceLabel {
  enum class Source { Rule, Model };
  bool is_supplement = false;
  double probability = 0.0;
  Source source = Source::Model;
};

struct ClassifierConfig {
  std::size_t embed_dim = 16;
  std::size_t hidden_dim = 16;
  double lr = 0.2;
  double adagrad_eps = 1e-8;
  std::size_t epochs = 120;
  std::uint64_t seed = 0;
  double threshold = 0.5;  // probability >= threshold => supplement
  TokenizerKind tokenizer = TokenizerKind::Bigram;
};

struct Classifier {
  ClassifierConfig config;
  Vocabulary vocab;
  ParamStore params;
  double final_loss = 0.0;
  std::vector<double> loss_curve;  // mean BCE per epoch
};

std::optional<SentenceLabel> rule_classify(const std::string& sentence,
                                           const CuePhraseList& cues);

/// Rule precedence first, then BiLSTM + max-pool + logistic sigmoid.
SentenceLabel classify_sentence(const std::string& sentence,
                                const Classifier& clf,
                                const CuePhraseList& cues);

/// Supplement probability from the model alone (no rule shortcut).
double classifier_probability(const std::string& sentence,
                              const Classifier& clf);

Classifier train_classifier(const std::vector<LabeledSentence>& labeled,
                            const ClassifierConfig& config);

struct RawRecord {
  std::string question;
  std::vector<std::string> sentences;
};

/// JSONL with keys "question" and "sentences" (array of strings).
std::vector<RawRecord> load_raw_jsonl(const std::string& path);

struct AnnotateResult {
  std::vector<QCSTriple> triples;
  std::size_t dropped = 0;  // records with an empty class
};

AnnotateResult annotate(const std::vector<RawRecord>& records,
                        const Classifier& clf, const CuePhraseList& cues);

}  // namespace nagm
