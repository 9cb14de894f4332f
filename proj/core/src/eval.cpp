#include "nagm/eval.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "nagm/metrics.hpp"

namespace nagm {

std::string config_fingerprint(const ModelConfig& c) {
  // FNV-1a over a canonical rendering.
  nlohmann::json j = {{"embed_dim", c.embed_dim},
                      {"hidden_dim", c.hidden_dim},
                      {"vocab_size", c.vocab_size},
                      {"margin", c.margin},
                      {"alpha", c.alpha},
                      {"use_attention", c.use_attention},
                      {"use_sentence_type", c.use_sentence_type},
                      {"share_ensemble_weights", c.share_ensemble_weights},
                      {"max_decode_len", c.max_decode_len}};
  std::string s = j.dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

EvalReport evaluate_corpus(const Checkpoint& ckpt,
                           const std::vector<QCSTriple>& test) {
  EvalReport report;
  report.config_fingerprint = config_fingerprint(ckpt.config);
  TokenizerKind kind = ckpt.vocab.kind();
  for (const auto& triple : test) {
    Generated gen = generate(ckpt.vocab.encode(triple.question), ckpt.params,
                             ckpt.config);
    ExampleScore score;
    score.id = triple.id;
    score.generated_conclusion = ckpt.vocab.decode(gen.conclusion);
    score.generated_supplement = ckpt.vocab.decode(gen.supplement);
    score.reference =
        normalize(triple.conclusion) + " " + normalize(triple.supplement);

    auto toks = [&](const std::string& text) {
      return text.empty() ? TokenList{} : tokenize(text, kind);
    };
    std::string cand_all =
        score.generated_conclusion.empty()
            ? score.generated_supplement
            : (score.generated_supplement.empty()
                   ? score.generated_conclusion
                   : score.generated_conclusion + " " +
                         score.generated_supplement);
    score.rouge_l = rouge_l(toks(cand_all), toks(score.reference));
    score.bleu_4 = bleu_4(toks(cand_all), toks(score.reference));
    score.rouge_l_conclusion =
        rouge_l(toks(score.generated_conclusion),
                toks(normalize(triple.conclusion)));
    score.rouge_l_supplement =
        rouge_l(toks(score.generated_supplement),
                toks(normalize(triple.supplement)));
    report.examples.push_back(std::move(score));
  }
  double n = static_cast<double>(report.examples.size());
  for (const auto& s : report.examples) {
    report.mean_rouge_l += s.rouge_l / n;
    report.mean_bleu_4 += s.bleu_4 / n;
    report.mean_rouge_l_conclusion += s.rouge_l_conclusion / n;
    report.mean_rouge_l_supplement += s.rouge_l_supplement / n;
  }
  return report;
}

void save_eval_report_json(const EvalReport& report, const std::string& path) {
  nlohmann::json j;
  j["mean_rouge_l"] = report.mean_rouge_l;
  j["mean_bleu_4"] = report.mean_bleu_4;
  j["mean_rouge_l_conclusion"] = report.mean_rouge_l_conclusion;
  j["mean_rouge_l_supplement"] = report.mean_rouge_l_supplement;
  j["config_fingerprint"] = report.config_fingerprint;
  j["examples"] = nlohmann::json::array();
  for (const auto& s : report.examples) {
    j["examples"].push_back({{"id", s.id},
                             {"generated_conclusion", s.generated_conclusion},
                             {"generated_supplement", s.generated_supplement},
                             {"reference", s.reference},
                             {"rouge_l", s.rouge_l},
                             {"bleu_4", s.bleu_4},
                             {"rouge_l_conclusion", s.rouge_l_conclusion},
                             {"rouge_l_supplement", s.rouge_l_supplement}});
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << j.dump(2) << '\n';
}

namespace {

ExperimentRow run_variant(const std::string& variant,
                          const std::vector<QCSTriple>& train,
                          const std::vector<QCSTriple>& test, ModelConfig cfg,
                          const TrainConfig& tcfg) {
  FitResult fitted = fit(train, cfg, tcfg);
  EvalReport report = evaluate_corpus(fitted.checkpoint, test);
  ExperimentRow row;
  row.variant = variant;
  row.alpha = cfg.alpha;
  row.rouge_l = report.mean_rouge_l;
  row.bleu_4 = report.mean_bleu_4;
  row.seed = tcfg.seed;
  row.config_hash = config_fingerprint(fitted.checkpoint.config);
  return row;
}

}  // namespace

std::vector<ExperimentRow> alpha_sweep(const std::vector<QCSTriple>& train,
                                       const std::vector<QCSTriple>& test,
                                       const std::vector<double>& alphas,
                                       ModelConfig base,
                                       const TrainConfig& tcfg) {
  if (alphas.empty()) throw ConfigError("alpha_sweep: no alphas given");
  std::vector<double> sorted = alphas;
  std::sort(sorted.begin(), sorted.end());
  std::vector<ExperimentRow> rows;
  for (double a : sorted) {
    ModelConfig cfg = base;
    cfg.alpha = a;
    std::ostringstream label;
    label << "alpha=" << a;  // shortest round-trippable form, e.g. alpha=0.5
    rows.push_back(run_variant(label.str(), train, test, cfg, tcfg));
  }
  return rows;
}

std::vector<ExperimentRow> ablation_run(const std::vector<QCSTriple>& train,
                                        const std::vector<QCSTriple>& test,
                                        ModelConfig base,
                                        const TrainConfig& tcfg) {
  std::vector<ExperimentRow> rows;
  ModelConfig nagm = base;
  nagm.use_attention = true;
  nagm.use_sentence_type = true;
  rows.push_back(run_variant("NAGM", train, test, nagm, tcfg));
  ModelConfig nagmwa = nagm;
  nagmwa.use_attention = false;
  rows.push_back(run_variant("NAGMWA", train, test, nagmwa, tcfg));
  ModelConfig wo_ste = nagm;
  wo_ste.use_sentence_type = false;
  rows.push_back(run_variant("wo_ste", train, test, wo_ste, tcfg));
  return rows;
}

void save_table_csv(const std::vector<ExperimentRow>& rows,
                    const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "variant_or_alpha,rouge_l,bleu_4,seed,config_hash\n";
  out.precision(17);
  for (const auto& r : rows) {
    out << r.variant << ',' << r.rouge_l << ',' << r.bleu_4 << ',' << r.seed
        << ',' << r.config_hash << '\n';
  }
}

}  // namespace nagm
