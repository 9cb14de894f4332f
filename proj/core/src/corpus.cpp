#include "nagm/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "nagm/params.hpp"

namespace nagm {

namespace {

const char* kSpecials[] = {"<pad>", "<bos>", "<eos>", "<unk>"};

std::vector<std::string> utf8_chars(const std::string& s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    std::size_t len = 1;
    if ((c & 0x80) == 0x00)
      len = 1;
    else if ((c & 0xE0) == 0xC0)
      len = 2;
    else if ((c & 0xF0) == 0xE0)
      len = 3;
    else if ((c & 0xF8) == 0xF0)
      len = 4;
    if (i + len > s.size()) len = 1;  // tolerate truncated sequences
    out.push_back(s.substr(i, len));
    i += len;
  }
  return out;
}

}  // namespace

std::string normalize(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  bool in_space = true;  // trims leading whitespace
  for (char ch : text) {
    unsigned char c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      if (!in_space) out.push_back(' ');
      in_space = true;
    } else {
      out.push_back(static_cast<char>(std::tolower(c)));
      in_space = false;
    }
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

std::vector<std::string> tokenize_bigram(const std::string& text) {
  std::string norm = normalize(text);
  if (norm.empty()) throw DomainError("tokenize_bigram: empty text");
  std::vector<std::string> chars = utf8_chars(norm);
  if (chars.size() == 1) return {chars[0]};
  std::vector<std::string> out;
  out.reserve(chars.size() - 1);
  for (std::size_t i = 0; i + 1 < chars.size(); ++i)
    out.push_back(chars[i] + chars[i + 1]);
  return out;
}

std::vector<std::string> tokenize_words(const std::string& text) {
  std::string norm = normalize(text);
  if (norm.empty()) throw DomainError("tokenize_words: empty text");
  std::vector<std::string> out;
  std::istringstream is(norm);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

std::vector<std::string> tokenize(const std::string& text, TokenizerKind kind) {
  return kind == TokenizerKind::Bigram ? tokenize_bigram(text)
                                       : tokenize_words(text);
}

Vocabulary::Vocabulary(std::vector<std::string> tokens, TokenizerKind kind)
    : tokens_(std::move(tokens)), kind_(kind) {
  for (std::size_t i = 0; i < 4; ++i) {
    if (tokens_.size() <= i || tokens_[i] != kSpecials[i]) {
      throw ConfigError("vocabulary must start with the four special tokens");
    }
  }
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], i).second) {
      throw ConfigError("duplicate token in vocabulary: " + tokens_[i]);
    }
  }
}

Vocabulary Vocabulary::build(const std::vector<QCSTriple>& corpus,
                             std::size_t min_count, TokenizerKind kind) {
  std::vector<std::string> texts;
  texts.reserve(corpus.size() * 3);
  for (const auto& t : corpus) {
    texts.push_back(t.question);
    texts.push_back(t.conclusion);
    if (!t.supplement.empty()) texts.push_back(t.supplement);
  }
  return build_from_texts(texts, min_count, kind);
}

Vocabulary Vocabulary::build_from_texts(const std::vector<std::string>& texts,
                                        std::size_t min_count,
                                        TokenizerKind kind) {
  if (texts.empty()) throw DomainError("build_vocab: empty corpus");
  std::map<std::string, std::size_t> counts;
  for (const auto& text : texts) {
    for (const auto& tok : tokenize(text, kind)) ++counts[tok];
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (const auto& [tok, n] : counts) {
    if (n >= min_count) kept.emplace_back(tok, n);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> tokens(std::begin(kSpecials), std::end(kSpecials));
  for (auto& [tok, n] : kept) tokens.push_back(std::move(tok));
  return Vocabulary(std::move(tokens), kind);
}

const std::string& Vocabulary::token(std::size_t id) const {
  if (id >= tokens_.size()) {
    throw DomainError("token id " + std::to_string(id) +
                      " out of range for vocabulary of size " +
                      std::to_string(tokens_.size()));
  }
  return tokens_[id];
}

std::size_t Vocabulary::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

TokenSeq Vocabulary::encode(const std::string& text) const {
  TokenSeq out;
  for (const auto& tok : tokenize(text, kind_)) out.push_back(id(tok));
  out.push_back(kEos);
  return out;
}

std::string Vocabulary::decode(const TokenSeq& seq) const {
  std::vector<std::string> surface;
  for (std::size_t id : seq) {
    if (id >= tokens_.size()) {
      throw DomainError("decode: corrupt token id " + std::to_string(id));
    }
    if (id == kPad || id == kBos) continue;
    if (id == kEos) break;
    surface.push_back(id == kUnk ? "\xEF\xBF\xBD" : tokens_[id]);
  }
  if (surface.empty()) return "";
  if (kind_ == TokenizerKind::Word) {
    std::string out = surface[0];
    for (std::size_t i = 1; i < surface.size(); ++i) out += " " + surface[i];
    return out;
  }
  // Overlap-merge: keep the first bigram, then append the trailing character
  // of each subsequent one.
  std::string out = surface[0];
  for (std::size_t i = 1; i < surface.size(); ++i) {
    std::vector<std::string> chars = utf8_chars(surface[i]);
    out += chars.empty() ? surface[i] : chars.back();
  }
  return out;
}

std::vector<QCSTriple> load_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<QCSTriple> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ":" + std::to_string(lineno) +
                       ": malformed JSON: " + e.what());
    }
    QCSTriple t;
    for (const char* key : {"id", "question", "conclusion", "supplement"}) {
      if (!j.contains(key) || !j[key].is_string()) {
        throw SchemaError(path + ":" + std::to_string(lineno) +
                          ": missing or non-string key \"" + key + "\"");
      }
    }
    t.id = j["id"].get<std::string>();
    t.question = j["question"].get<std::string>();
    t.conclusion = j["conclusion"].get<std::string>();
    t.supplement = j["supplement"].get<std::string>();
    out.push_back(std::move(t));
  }
  return out;
}

void save_jsonl(const std::vector<QCSTriple>& triples,
                const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  for (const auto& t : triples) {
    nlohmann::json j;
    j["id"] = t.id;
    j["question"] = t.question;
    j["conclusion"] = t.conclusion;
    j["supplement"] = t.supplement;
    out << j.dump() << '\n';
  }
}

namespace {

void fill_side(Batch::Side& side, const std::vector<TokenSeq>& seqs) {
  std::size_t max_len = 0;
  for (const auto& s : seqs) max_len = std::max(max_len, s.size());
  for (const auto& s : seqs) {
    TokenSeq row = s;
    std::vector<bool> mask(s.size(), true);
    row.resize(max_len, kPad);
    mask.resize(max_len, false);
    side.lengths.push_back(s.size());
    side.ids.push_back(std::move(row));
    side.mask.push_back(std::move(mask));
  }
}

}  // namespace

std::vector<Batch> make_batches(const std::vector<QCSTriple>& triples,
                                const Vocabulary& vocab,
                                std::size_t batch_size, std::uint64_t seed) {
  if (batch_size < 1) throw ConfigError("make_batches: batch_size must be >= 1");
  std::vector<std::size_t> order(triples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[uniform_index(rng, i)]);
  }
  std::vector<Batch> out;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    std::size_t end = std::min(start + batch_size, order.size());
    Batch b;
    std::vector<TokenSeq> qs, cs, ss;
    for (std::size_t k = start; k < end; ++k) {
      const QCSTriple& t = triples[order[k]];
      b.example_ids.push_back(t.id);
      b.corpus_indices.push_back(order[k]);
      qs.push_back(vocab.encode(t.question));
      cs.push_back(vocab.encode(t.conclusion));
      ss.push_back(vocab.encode(t.supplement));
    }
    fill_side(b.questions, qs);
    fill_side(b.conclusions, cs);
    fill_side(b.supplements, ss);
    out.push_back(std::move(b));
  }
  return out;
}

namespace {

struct TemplateFamily {
  std::string topic;
  std::string question;    // uses {topic} {adj}
  std::string conclusion;  // uses {topic} {noun}
  std::string supplement;  // uses {topic} {noun}; cue optional
  bool cue = false;
};

const std::vector<std::string> kTopics = {"cat",  "dog",   "fern", "phone",
                                          "bike", "stove", "shoe", "kite"};
const std::vector<std::string> kAdjs = {"tired", "noisy", "dull", "slow"};
const std::vector<std::string> kNouns = {"water", "rest", "light", "care"};

std::string subst(std::string s, const std::string& key,
                  const std::string& val) {
  std::size_t pos;
  while ((pos = s.find(key)) != std::string::npos) s.replace(pos, key.size(), val);
  return s;
}

std::vector<TemplateFamily> make_families(std::size_t n) {
  std::vector<TemplateFamily> fams;
  for (std::size_t k = 0; k < n; ++k) {
    TemplateFamily f;
    f.topic = kTopics[k % kTopics.size()];
    if (k % 2 == 0) {
      f.question = "why is my {topic} so {adj}";
      f.conclusion = "your {topic} needs more {noun}";
      f.supplement = "a {topic} gets {adj} without {noun}";
    } else {
      f.question = "how do i help a {adj} {topic}";
      f.conclusion = "give the {topic} some {noun}";
      f.supplement = "every {topic} wants {noun} daily";
    }
    f.cue = (k % 2 == 0);
    fams.push_back(std::move(f));
  }
  return fams;
}

}  // namespace

std::vector<QCSTriple> generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n_templates < 2) {
    throw ConfigError("generate_synthetic: n_templates must be >= 2");
  }
  if (spec.n_triples < spec.n_templates) {
    throw ConfigError("generate_synthetic: n_triples must be >= n_templates");
  }
  std::mt19937_64 rng(spec.seed);
  std::vector<TemplateFamily> fams = make_families(spec.n_templates);
  std::vector<QCSTriple> out;
  for (std::size_t i = 0; i < spec.n_triples; ++i) {
    const TemplateFamily& f = fams[i % fams.size()];
    const std::string& adj = kAdjs[uniform_index(rng, kAdjs.size())];
    const std::string& noun = kNouns[uniform_index(rng, kNouns.size())];
    QCSTriple t;
    t.id = "synth-" + std::to_string(i);
    auto fill = [&](const std::string& pat) {
      return subst(subst(subst(pat, "{topic}", f.topic), "{adj}", adj),
                   "{noun}", noun);
    };
    t.question = fill(f.question);
    t.conclusion = fill(f.conclusion);
    t.supplement = (f.cue ? "this is because " : "") + fill(f.supplement);
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<LabeledSentence> synthetic_labeled_sentences(std::size_t n,
                                                         std::uint64_t seed) {
  SyntheticSpec spec;
  spec.n_templates = 4;
  spec.n_triples = (n + 1) / 2;
  spec.seed = seed;
  std::vector<QCSTriple> triples = generate_synthetic(spec);
  std::vector<LabeledSentence> out;
  for (const auto& t : triples) {
    if (out.size() < n) out.push_back({t.conclusion, false});
    if (out.size() < n) out.push_back({t.supplement, true});
  }
  return out;
}

}  // namespace nagm
