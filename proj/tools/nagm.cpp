#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "nagm/eval.hpp"
#include "nagm/gradcheck.hpp"
#include "nagm/sentclass.hpp"
#include "nagm/trainer.hpp"

using nlohmann::json;

namespace {

struct RunConfig {
  nagm::ModelConfig model;
  nagm::TrainConfig train;
};

json to_json(const RunConfig& rc) {
  json j;
  j["embed_dim"] = rc.model.embed_dim;
  j["hidden_dim"] = rc.model.hidden_dim;
  j["margin"] = rc.model.margin;
  j["alpha"] = rc.model.alpha;
  j["use_attention"] = rc.model.use_attention;
  j["use_sentence_type"] = rc.model.use_sentence_type;
  j["max_decode_len"] = rc.model.max_decode_len;
  j["lr"] = rc.train.lr;
  j["adagrad_eps"] = rc.train.adagrad_eps;
  j["batch_size"] = rc.train.batch_size;
  j["iterations"] = rc.train.iterations;
  j["seed"] = rc.train.seed;
  j["min_count"] = rc.train.min_count;
  j["tokenizer"] =
      rc.train.tokenizer == nagm::TokenizerKind::Bigram ? "bigram" : "word";
  j["checkpoint_interval"] = rc.train.checkpoint_interval;
  return j;
}

void apply_json(const json& j, RunConfig& rc) {
  static const std::vector<std::string> known{
      "embed_dim",      "hidden_dim", "margin",     "alpha",
      "use_attention",  "use_sentence_type",        "max_decode_len",
      "lr",             "adagrad_eps", "batch_size", "iterations",
      "seed",           "min_count",  "tokenizer",  "checkpoint_interval"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw nagm::ConfigError("unknown config key: " + key);
    }
    (void)value;
  }
  if (j.contains("embed_dim")) rc.model.embed_dim = j["embed_dim"];
  if (j.contains("hidden_dim")) rc.model.hidden_dim = j["hidden_dim"];
  if (j.contains("margin")) rc.model.margin = j["margin"];
  if (j.contains("alpha")) rc.model.alpha = j["alpha"];
  if (j.contains("use_attention"))
    rc.model.use_attention = j["use_attention"];
  if (j.contains("use_sentence_type"))
    rc.model.use_sentence_type = j["use_sentence_type"];
  if (j.contains("max_decode_len"))
    rc.model.max_decode_len = j["max_decode_len"];
  if (j.contains("lr")) rc.train.lr = j["lr"];
  if (j.contains("adagrad_eps")) rc.train.adagrad_eps = j["adagrad_eps"];
  if (j.contains("batch_size")) rc.train.batch_size = j["batch_size"];
  if (j.contains("iterations")) rc.train.iterations = j["iterations"];
  if (j.contains("seed")) rc.train.seed = j["seed"];
  if (j.contains("min_count")) rc.train.min_count = j["min_count"];
  if (j.contains("checkpoint_interval"))
    rc.train.checkpoint_interval = j["checkpoint_interval"];
  if (j.contains("tokenizer")) {
    std::string t = j["tokenizer"];
    if (t == "bigram") {
      rc.train.tokenizer = nagm::TokenizerKind::Bigram;
    } else if (t == "word") {
      rc.train.tokenizer = nagm::TokenizerKind::Word;
    } else {
      throw nagm::ConfigError("tokenizer must be 'bigram' or 'word', got " + t);
    }
  }
}

/// Every file artifact gets a sidecar `<path>.config.json` carrying the
/// effective configuration, so any output is reproducible from disk alone.
void write_config_sidecar(const std::string& artifact_path,
                          const RunConfig& rc, const std::string& command) {
  json j = to_json(rc);
  j["command"] = command;
  std::ofstream out(artifact_path + ".config.json");
  if (!out) {
    throw nagm::IoError("cannot write " + artifact_path + ".config.json");
  }
  out << j.dump(2) << '\n';
}

/// Registers the flags shared by model-running subcommands. Flags override
/// whatever the --config file set, which in turn overrides defaults.
void add_model_flags(CLI::App* cmd, RunConfig& rc, std::string& tokenizer) {
  cmd->add_option("--embed_dim", rc.model.embed_dim);
  cmd->add_option("--hidden_dim", rc.model.hidden_dim);
  cmd->add_option("--margin", rc.model.margin);
  cmd->add_option("--alpha", rc.model.alpha);
  cmd->add_option("--use_attention", rc.model.use_attention);
  cmd->add_option("--use_sentence_type", rc.model.use_sentence_type);
  cmd->add_option("--max_decode_len", rc.model.max_decode_len);
  cmd->add_option("--lr", rc.train.lr);
  cmd->add_option("--adagrad_eps", rc.train.adagrad_eps);
  cmd->add_option("--batch_size", rc.train.batch_size);
  cmd->add_option("--iterations,--iters", rc.train.iterations);
  cmd->add_option("--min_count", rc.train.min_count);
  cmd->add_option("--checkpoint_interval", rc.train.checkpoint_interval);
  cmd->add_option("--tokenizer", tokenizer)
      ->check(CLI::IsMember({"bigram", "word"}));
}

void finish_tokenizer(const std::string& tokenizer, RunConfig& rc) {
  if (tokenizer == "word") {
    rc.train.tokenizer = nagm::TokenizerKind::Word;
  } else if (tokenizer == "bigram") {
    rc.train.tokenizer = nagm::TokenizerKind::Bigram;
  }
}

int run(int argc, char** argv) {
  CLI::App app{"conclusion-supplement answer generation toolkit"};
  app.require_subcommand(1);

  RunConfig rc;
  std::string config_path;
  std::string tokenizer;  // empty: keep whatever config/default says
  app.add_option("--config", config_path,
                 "JSON config file; flags override its values");

  // Preload the config file (if any) before CLI11 binds flag values, so
  // explicit flags win over file entries.
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--config") {
      std::ifstream in(argv[i + 1]);
      if (!in) throw nagm::IoError(std::string("cannot open ") + argv[i + 1]);
      json j;
      try {
        in >> j;
      } catch (const json::exception& e) {
        throw nagm::ParseError(std::string(argv[i + 1]) + ": " + e.what());
      }
      apply_json(j, rc);
    }
  }

  // synth
  auto* synth = app.add_subcommand("synth", "emit a synthetic q-c-s corpus");
  std::size_t synth_n = 50, synth_templates = 4;
  std::string synth_out;
  synth->add_option("--n", synth_n, "number of triples");
  synth->add_option("--templates", synth_templates, "template families");
  synth->add_option("--out", synth_out)->required();
  synth->add_option("--seed", rc.train.seed);

  // classify
  auto* classify =
      app.add_subcommand("classify", "raw records to q-c-s JSONL");
  std::string cls_raw, cls_out, cls_cues;
  std::size_t cls_labeled = 200;
  classify->add_option("--raw", cls_raw)->required();
  classify->add_option("--out", cls_out)->required();
  classify->add_option("--cues", cls_cues, "cue-phrase file");
  classify->add_option("--labeled", cls_labeled,
                       "synthetic labeled sentences for classifier training");
  classify->add_option("--seed", rc.train.seed);

  // train
  auto* train = app.add_subcommand("train", "corpus to checkpoint + log");
  std::string train_corpus, train_out, train_log;
  train->add_option("--corpus", train_corpus)->required();
  train->add_option("--out", train_out)->required();
  train->add_option("--log", train_log,
                    "TrainLog CSV path (default <out>.trainlog.csv)");
  train->add_option("--seed", rc.train.seed);
  add_model_flags(train, rc, tokenizer);

  // generate
  auto* gen = app.add_subcommand("generate", "answer a question");
  std::string gen_ckpt, gen_question;
  gen->add_option("--ckpt", gen_ckpt)->required();
  gen->add_option("--question", gen_question)->required();

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "score a checkpoint on a test set");
  std::string eval_ckpt, eval_test, eval_out;
  eval->add_option("--ckpt", eval_ckpt)->required();
  eval->add_option("--test", eval_test)->required();
  eval->add_option("--out", eval_out)->required();

  // sweep
  auto* sweep = app.add_subcommand("sweep", "alpha sweep experiment table");
  std::string sweep_train, sweep_test, sweep_out;
  std::vector<double> sweep_alphas{0.0, 1.0, 2.0};
  sweep->add_option("--corpus", sweep_train)->required();
  sweep->add_option("--test", sweep_test)->required();
  sweep->add_option("--out", sweep_out)->required();
  sweep->add_option("--alphas", sweep_alphas);
  sweep->add_option("--seed", rc.train.seed);
  add_model_flags(sweep, rc, tokenizer);

  // ablate
  auto* ablate = app.add_subcommand("ablate", "NAGM/NAGMWA/wo_ste table");
  std::string abl_train, abl_test, abl_out;
  ablate->add_option("--corpus", abl_train)->required();
  ablate->add_option("--test", abl_test)->required();
  ablate->add_option("--out", abl_out)->required();
  ablate->add_option("--seed", rc.train.seed);
  add_model_flags(ablate, rc, tokenizer);

  // gradcheck
  auto* gc = app.add_subcommand("gradcheck",
                                "finite-difference check of the full loss");
  std::size_t gc_dim = 8;
  double gc_eps = 1e-3, gc_tol = 1e-3;
  std::size_t gc_samples = 32;
  gc->add_option("--dim", gc_dim, "embed and hidden size");
  gc->add_option("--eps", gc_eps);
  gc->add_option("--tol", gc_tol);
  gc->add_option("--samples", gc_samples, "coordinates sampled per tensor");
  gc->add_option("--seed", rc.train.seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);  // prints help to stdout or the error to stderr
    return code == 0 ? 0 : 1;
  }
  finish_tokenizer(tokenizer, rc);

  if (*synth) {
    nagm::SyntheticSpec spec{synth_templates, synth_n, rc.train.seed};
    nagm::save_jsonl(nagm::generate_synthetic(spec), synth_out);
    write_config_sidecar(synth_out, rc, "synth");
    std::cout << "wrote " << synth_n << " triples to " << synth_out << "\n";
    return 0;
  }

  if (*classify) {
    nagm::CuePhraseList cues = cls_cues.empty()
                                   ? nagm::CuePhraseList::defaults()
                                   : nagm::CuePhraseList::load(cls_cues);
    nagm::ClassifierConfig cc;
    cc.seed = rc.train.seed;
    nagm::Classifier clf = nagm::train_classifier(
        nagm::synthetic_labeled_sentences(cls_labeled, rc.train.seed), cc);
    auto records = nagm::load_raw_jsonl(cls_raw);
    nagm::AnnotateResult res = nagm::annotate(records, clf, cues);
    nagm::save_jsonl(res.triples, cls_out);
    write_config_sidecar(cls_out, rc, "classify");
    std::cout << "kept " << res.triples.size() << ", dropped " << res.dropped
              << " of " << records.size() << " records\n";
    return 0;
  }

  if (*train) {
    auto corpus = nagm::load_jsonl(train_corpus);
    rc.train.checkpoint_path = train_out;
    nagm::FitResult r = nagm::fit(corpus, rc.model, rc.train);
    if (train_log.empty()) train_log = train_out + ".trainlog.csv";
    nagm::write_train_log_csv(r.log, train_log);
    write_config_sidecar(train_out, rc, "train");
    write_config_sidecar(train_log, rc, "train");
    std::cout << "trained " << rc.train.iterations << " iterations; final L_w "
              << r.log.entries.back().mean_loss_w << "\n";
    return 0;
  }

  if (*gen) {
    nagm::Checkpoint ckpt = nagm::load_checkpoint(gen_ckpt);
    nagm::TokenSeq q = ckpt.vocab.encode(gen_question);
    nagm::Generated out = nagm::generate(q, ckpt.params, ckpt.config);
    std::cout << ckpt.vocab.decode(out.conclusion) << "\n"
              << ckpt.vocab.decode(out.supplement) << "\n";
    return 0;
  }

  if (*eval) {
    nagm::Checkpoint ckpt = nagm::load_checkpoint(eval_ckpt);
    auto test = nagm::load_jsonl(eval_test);
    nagm::EvalReport report = nagm::evaluate_corpus(ckpt, test);
    nagm::save_eval_report_json(report, eval_out);
    write_config_sidecar(eval_out, rc, "evaluate");
    std::cout << "mean ROUGE-L " << report.mean_rouge_l << ", mean BLEU-4 "
              << report.mean_bleu_4 << "\n";
    return 0;
  }

  if (*sweep) {
    auto tr = nagm::load_jsonl(sweep_train);
    auto te = nagm::load_jsonl(sweep_test);
    auto rows = nagm::alpha_sweep(tr, te, sweep_alphas, rc.model, rc.train);
    nagm::save_table_csv(rows, sweep_out);
    write_config_sidecar(sweep_out, rc, "sweep");
    std::cout << "wrote " << rows.size() << " rows to " << sweep_out << "\n";
    return 0;
  }

  if (*ablate) {
    auto tr = nagm::load_jsonl(abl_train);
    auto te = nagm::load_jsonl(abl_test);
    auto rows = nagm::ablation_run(tr, te, rc.model, rc.train);
    nagm::save_table_csv(rows, abl_out);
    write_config_sidecar(abl_out, rc, "ablate");
    std::cout << "wrote " << rows.size() << " rows to " << abl_out << "\n";
    return 0;
  }

  if (*gc) {
    nagm::ModelConfig mc;
    mc.embed_dim = gc_dim;
    mc.hidden_dim = gc_dim;
    mc.vocab_size = 12;
    mc.max_decode_len = 10;
    nagm::ParamStore params = nagm::init_model_params(mc, rc.train.seed);
    nagm::ExamplePair e;
    e.question = {4, 5, 6, nagm::kEos};
    e.conclusion = {7, 8, nagm::kEos};
    e.supplement = {9, 10, 4, nagm::kEos};
    e.neg_conclusion = {5, 11, nagm::kEos};
    e.neg_supplement = {6, 4, nagm::kEos};
    auto f = [&](const nagm::ParamStore& p) {
      return nagm::loss_total(e, p, mc);
    };
    nagm::GradCheckReport report =
        nagm::grad_check(f, params, gc_eps, gc_samples, rc.train.seed);
    for (const auto& entry : report.entries) {
      std::cout << entry.name << " " << entry.max_rel_err << "\n";
    }
    std::cout << "max_rel_err " << report.max_rel_err << "\n";
    if (report.max_rel_err > gc_tol) {
      std::cerr << "gradcheck failed: " << report.max_rel_err << " > "
                << gc_tol << "\n";
      return 2;
    }
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const nagm::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const nagm::SchemaError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const nagm::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const nagm::DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
