#include "nagm/sentclass.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"
#include "nagm/gradcheck.hpp"
#include "nagm/tape.hpp"

namespace nagm {

CuePhraseList CuePhraseList::defaults() {
  return CuePhraseList{
      {"this is because", "therefore", "that's because", "the reason is"}};
}

CuePhraseList CuePhraseList::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open cue phrase list " + path);
  CuePhraseList out;
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::string norm = normalize(line);
    if (!norm.empty()) out.phrases.push_back(norm);
  }
  if (out.phrases.empty()) {
    throw ConfigError("cue phrase list " + path + " contains no phrases");
  }
  return out;
}

std::optional<SentenceLabel> rule_classify(const std::string& sentence,
                                           const CuePhraseList& cues) {
  std::string norm = normalize(sentence);
  for (const auto& phrase : cues.phrases) {
    if (norm.rfind(phrase, 0) == 0) {
      return SentenceLabel{true, 1.0, SentenceLabel::Source::Rule};
    }
  }
  return std::nullopt;
}

namespace {

struct BilstmVars {
  Var w_i, w_f, w_o, w_c, u_i, u_f, u_o, u_c, b_i, b_f, b_o, b_c;
};

BilstmVars load_lstm(Tape& tape, const ParamStore& p, const std::string& pre,
                     std::map<std::string, Var>& leaves) {
  auto get = [&](const std::string& n) {
    auto it = leaves.find(n);
    if (it != leaves.end()) return it->second;
    Var v = tape.leaf(p.at(n));
    leaves.emplace(n, v);
    return v;
  };
  return BilstmVars{get(pre + ".W_i"), get(pre + ".W_f"), get(pre + ".W_o"),
                    get(pre + ".W_c"), get(pre + ".U_i"), get(pre + ".U_f"),
                    get(pre + ".U_o"), get(pre + ".U_c"), get(pre + ".b_i"),
                    get(pre + ".b_f"), get(pre + ".b_o"), get(pre + ".b_c")};
}

std::pair<Var, Var> lstm_step(Tape& t, const BilstmVars& v, Var x, Var h,
                              Var c) {
  Var i = t.sigmoid(t.add(t.add(t.matvec(v.w_i, x), t.matvec(v.u_i, h)), v.b_i));
  Var f = t.sigmoid(t.add(t.add(t.matvec(v.w_f, x), t.matvec(v.u_f, h)), v.b_f));
  Var o = t.sigmoid(t.add(t.add(t.matvec(v.w_o, x), t.matvec(v.u_o, h)), v.b_o));
  Var g = t.tanh(t.add(t.add(t.matvec(v.w_c, x), t.matvec(v.u_c, h)), v.b_c));
  Var cell = t.add(t.mul(i, g), t.mul(f, c));
  return {t.mul(o, t.tanh(cell)), cell};
}

/// Sentence embedding + linear head; pre-sigmoid logit, shared by training
/// and inference.
Var logit_var(Tape& tape, const ParamStore& p, const ClassifierConfig& cfg,
              const TokenSeq& ids, std::map<std::string, Var>& leaves) {
  auto get = [&](const std::string& n) {
    auto it = leaves.find(n);
    if (it != leaves.end()) return it->second;
    Var v = tape.leaf(p.at(n));
    leaves.emplace(n, v);
    return v;
  };
  Var embed = get("embed");
  BilstmVars fw = load_lstm(tape, p, "f", leaves);
  BilstmVars bw = load_lstm(tape, p, "b", leaves);
  std::size_t h = cfg.hidden_dim;
  std::vector<Var> inputs;
  for (std::size_t id : ids) inputs.push_back(tape.column(embed, id));
  std::vector<Var> fwd(inputs.size()), rev(inputs.size());
  Var hf = tape.leaf(Tensor::zeros({h})), cf = tape.leaf(Tensor::zeros({h}));
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    std::tie(hf, cf) = lstm_step(tape, fw, inputs[i], hf, cf);
    fwd[i] = hf;
  }
  Var hb = tape.leaf(Tensor::zeros({h})), cb = tape.leaf(Tensor::zeros({h}));
  for (std::size_t i = inputs.size(); i-- > 0;) {
    std::tie(hb, cb) = lstm_step(tape, bw, inputs[i], hb, cb);
    rev[i] = hb;
  }
  std::vector<Var> states(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i)
    states[i] = tape.concat(fwd[i], rev[i]);
  Var pooled = tape.max_pool(states);
  return tape.add(tape.dot(get("out.w"), pooled), get("out.b"));
}

ParamStore init_classifier_params(const ClassifierConfig& cfg,
                                  std::size_t vocab_size) {
  std::mt19937_64 rng(cfg.seed);
  ParamStore p;
  std::size_t e = cfg.embed_dim, h = cfg.hidden_dim;
  p.add("embed", glorot(e, vocab_size, rng));
  for (const char* pre : {"f", "b"}) {
    for (const char* g : {"i", "f", "o", "c"}) {
      p.add(std::string(pre) + ".W_" + g, glorot(h, e, rng));
      p.add(std::string(pre) + ".U_" + g, glorot(h, h, rng));
      Tensor b = Tensor::zeros({h});
      if (g[0] == 'f') {
        for (double& v : b.data) v = 1.0;
      }
      p.add(std::string(pre) + ".b_" + g, std::move(b));
    }
  }
  Tensor w = glorot(1, 2 * h, rng);
  w.shape = {2 * h};
  p.add("out.w", std::move(w));
  p.add("out.b", Tensor::zeros({1}));
  return p;
}

}  // namespace

double classifier_probability(const std::string& sentence,
                              const Classifier& clf) {
  std::string norm = normalize(sentence);
  if (norm.empty()) throw DomainError("classify_sentence: empty sentence");
  TokenSeq ids = clf.vocab.encode(norm);
  ids.pop_back();  // no EOS for classification
  Tape tape;
  std::map<std::string, Var> leaves;
  Var logit = logit_var(tape, clf.params, clf.config, ids, leaves);
  return tape.scalar(tape.sigmoid(logit));
}

SentenceLabel classify_sentence(const std::string& sentence,
                                const Classifier& clf,
                                const CuePhraseList& cues) {
  if (auto rule = rule_classify(sentence, cues)) return *rule;
  double p = classifier_probability(sentence, clf);
  return SentenceLabel{p >= clf.config.threshold, p,
                       SentenceLabel::Source::Model};
}

Classifier train_classifier(const std::vector<LabeledSentence>& labeled,
                            const ClassifierConfig& config) {
  bool has_pos = false, has_neg = false;
  for (const auto& s : labeled) (s.is_supplement ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg) {
    throw ConfigError("train_classifier: degenerate data, both labels required");
  }

  std::vector<std::string> texts;
  for (const auto& s : labeled) texts.push_back(s.sentence);
  Classifier clf;
  clf.config = config;
  clf.vocab = Vocabulary::build_from_texts(texts, 1, config.tokenizer);
  clf.params = init_classifier_params(config, clf.vocab.size());

  std::vector<TokenSeq> encoded;
  for (const auto& s : labeled) {
    TokenSeq ids = clf.vocab.encode(s.sentence);
    ids.pop_back();
    encoded.push_back(std::move(ids));
  }

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    // Full-batch BCE; one AdaGrad step per epoch.
    Tape tape;
    std::map<std::string, Var> leaves;
    Var total;
    for (std::size_t i = 0; i < labeled.size(); ++i) {
      Var logit = logit_var(tape, clf.params, config, encoded[i], leaves);
      Var loss = tape.bce_with_logit(logit, labeled[i].is_supplement ? 1.0 : 0.0);
      total = total.valid() ? tape.add(total, loss) : loss;
    }
    Var mean = tape.scale(total, 1.0 / static_cast<double>(labeled.size()));
    clf.final_loss = tape.scalar(mean);
    clf.loss_curve.push_back(clf.final_loss);
    tape.backward(mean);
    std::map<std::string, Tensor> grads;
    for (const auto& [name, var] : leaves) grads.emplace(name, tape.grad(var));
    clf.params.adagrad_step(grads, config.lr, config.adagrad_eps);
  }
  return clf;
}

std::vector<RawRecord> load_raw_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<RawRecord> out;
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
    if (!j.contains("question") || !j["question"].is_string()) {
      throw SchemaError(path + ":" + std::to_string(lineno) +
                        ": missing or non-string key \"question\"");
    }
    if (!j.contains("sentences") || !j["sentences"].is_array()) {
      throw SchemaError(path + ":" + std::to_string(lineno) +
                        ": missing or non-array key \"sentences\"");
    }
    RawRecord r;
    r.question = j["question"].get<std::string>();
    for (const auto& s : j["sentences"]) {
      if (!s.is_string()) {
        throw SchemaError(path + ":" + std::to_string(lineno) +
                          ": \"sentences\" entries must be strings");
      }
      r.sentences.push_back(s.get<std::string>());
    }
    if (r.sentences.empty()) {
      throw SchemaError(path + ":" + std::to_string(lineno) +
                        ": record has no sentences");
    }
    out.push_back(std::move(r));
  }
  return out;
}

AnnotateResult annotate(const std::vector<RawRecord>& records,
                        const Classifier& clf, const CuePhraseList& cues) {
  AnnotateResult out;
  std::size_t idx = 0;
  for (const auto& rec : records) {
    std::string conclusion, supplement;
    for (const auto& sentence : rec.sentences) {
      SentenceLabel label = classify_sentence(sentence, clf, cues);
      std::string& dst = label.is_supplement ? supplement : conclusion;
      if (!dst.empty()) dst += " ";
      dst += sentence;
    }
    if (conclusion.empty() || supplement.empty()) {
      ++out.dropped;
    } else {
      QCSTriple t;
      t.id = "rec-" + std::to_string(idx);
      t.question = rec.question;
      t.conclusion = conclusion;
      t.supplement = supplement;
      out.triples.push_back(std::move(t));
    }
    ++idx;
  }
  return out;
}

}  // namespace nagm
