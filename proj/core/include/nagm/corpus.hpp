#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nagm/errors.hpp"

namespace nagm {

/// One question-conclusion-supplement training unit.
struct QCSTriple {
  std::string id;
  std::string question;
  std::string conclusion;
  std::string supplement;

  bool operator==(const QCSTriple&) const = default;
};

using TokenSeq = std::vector<std::size_t>;

enum class TokenizerKind { Bigram, Word };

constexpr std::size_t kPad = 0;
constexpr std::size_t kBos = 1;
constexpr std::size_t kEos = 2;
constexpr std::size_t kUnk = 3;

/// Lowercase + collapse runs of whitespace to single spaces + trim.
std::string normalize(const std::string& text);

/// Overlapping character bigrams of the normalized text. Single-character
/// text yields that character as the only token. Character == UTF-8
/// codepoint.
std::vector<std::string> tokenize_bigram(const std::string& text);

/// Whitespace-split words of the normalized text.
std::vector<std::string> tokenize_words(const std::string& text);

std::vector<std::string> tokenize(const std::string& text, TokenizerKind kind);

class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> tokens,
                      TokenizerKind kind = TokenizerKind::Bigram);

  static Vocabulary build(const std::vector<QCSTriple>& corpus,
                          std::size_t min_count = 1,
                          TokenizerKind kind = TokenizerKind::Bigram);
  static Vocabulary build_from_texts(const std::vector<std::string>& texts,
                                     std::size_t min_count = 1,
                                     TokenizerKind kind = TokenizerKind::Bigram);

  std::size_t size() const { return tokens_.size(); }
  TokenizerKind kind() const { return kind_; }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& token(std::size_t id) const;
  std::size_t id(const std::string& token) const;  // UNK when absent

  /// Tokenize, map to ids (OOV -> UNK), append EOS.
  TokenSeq encode(const std::string& text) const;
  /// Drop specials and reconstruct surface text (overlap-merge for bigrams).
  std::string decode(const TokenSeq& seq) const;

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, std::size_t> index_;
  TokenizerKind kind_ = TokenizerKind::Bigram;
};

struct Batch {
  // ids[i] is example i's padded token row; mask marks non-PAD positions.
  struct Side {
    std::vector<TokenSeq> ids;
    std::vector<std::vector<bool>> mask;
    std::vector<std::size_t> lengths;
  };
  std::vector<std::string> example_ids;
  std::vector<std::size_t> corpus_indices;
  Side questions;
  Side conclusions;
  Side supplements;

  std::size_t size() const { return example_ids.size(); }
};

std::vector<QCSTriple> load_jsonl(const std::string& path);
void save_jsonl(const std::vector<QCSTriple>& triples, const std::string& path);

std::vector<Batch> make_batches(const std::vector<QCSTriple>& triples,
                                const Vocabulary& vocab,
                                std::size_t batch_size, std::uint64_t seed);

struct SyntheticSpec {
  std::size_t n_templates = 4;
  std::size_t n_triples = 50;
  std::uint64_t seed = 0;
};

/// Deterministic template-grammar corpus. Every supplement shares a content
/// word with its conclusion; half of the template families open the
/// supplement with a cue phrase.
std::vector<QCSTriple> generate_synthetic(const SyntheticSpec& spec);

struct LabeledSentence {
  std::string sentence;
  bool is_supplement = false;
};

/// Per-sentence classifier training data derived from a synthetic corpus.
std::vector<LabeledSentence> synthetic_labeled_sentences(std::size_t n,
                                                         std::uint64_t seed);

}  // namespace nagm
