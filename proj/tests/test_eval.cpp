#include <cstdio>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "nagm/eval.hpp"
#include "nagm/metrics.hpp"

using namespace nagm;

namespace {

Checkpoint tiny_checkpoint(std::uint64_t seed = 1) {
  std::vector<QCSTriple> corpus = generate_synthetic(SyntheticSpec{2, 4, 42});
  ModelConfig mc;
  mc.embed_dim = 8;
  mc.hidden_dim = 8;
  mc.max_decode_len = 20;
  TrainConfig tc;
  tc.iterations = 1;
  tc.batch_size = 4;
  tc.seed = seed;
  return fit(corpus, mc, tc).checkpoint;
}

}  // namespace

TEST_CASE("report means equal means of per-example scores") {
  Checkpoint ckpt = tiny_checkpoint();
  std::vector<QCSTriple> test = generate_synthetic(SyntheticSpec{2, 3, 9});
  EvalReport report = evaluate_corpus(ckpt, test);
  REQUIRE(report.examples.size() == test.size());
  double r = 0, b = 0, rc = 0, rs = 0;
  for (const auto& ex : report.examples) {
    CHECK(ex.rouge_l >= 0.0);
    CHECK(ex.rouge_l <= 1.0);
    CHECK(ex.bleu_4 >= 0.0);
    CHECK(ex.bleu_4 <= 1.0);
    r += ex.rouge_l;
    b += ex.bleu_4;
    rc += ex.rouge_l_conclusion;
    rs += ex.rouge_l_supplement;
  }
  double n = static_cast<double>(report.examples.size());
  CHECK(report.mean_rouge_l == doctest::Approx(r / n).epsilon(1e-12));
  CHECK(report.mean_bleu_4 == doctest::Approx(b / n).epsilon(1e-12));
  CHECK(report.mean_rouge_l_conclusion == doctest::Approx(rc / n));
  CHECK(report.mean_rouge_l_supplement == doctest::Approx(rs / n));
}

TEST_CASE("evaluation is deterministic for a fixed checkpoint") {
  Checkpoint ckpt = tiny_checkpoint();
  std::vector<QCSTriple> test = generate_synthetic(SyntheticSpec{2, 3, 9});
  EvalReport a = evaluate_corpus(ckpt, test);
  EvalReport b = evaluate_corpus(ckpt, test);
  REQUIRE(a.examples.size() == b.examples.size());
  for (std::size_t i = 0; i < a.examples.size(); ++i) {
    CHECK(a.examples[i].rouge_l == b.examples[i].rouge_l);
    CHECK(a.examples[i].generated_conclusion ==
          b.examples[i].generated_conclusion);
  }
  CHECK(a.config_fingerprint == b.config_fingerprint);
}

TEST_CASE("per-example scores agree with direct metric computation") {
  Checkpoint ckpt = tiny_checkpoint();
  std::vector<QCSTriple> test = generate_synthetic(SyntheticSpec{2, 2, 13});
  EvalReport report = evaluate_corpus(ckpt, test);
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto& ex = report.examples[i];
    std::string candidate =
        ex.generated_conclusion + " " + ex.generated_supplement;
    TokenList cand = tokenize_bigram(normalize(candidate));
    TokenList ref = tokenize_bigram(normalize(ex.reference));
    CHECK(ex.rouge_l == doctest::Approx(rouge_l(cand, ref)).epsilon(1e-12));
    CHECK(ex.bleu_4 == doctest::Approx(bleu_4(cand, ref)).epsilon(1e-12));
  }
}

TEST_CASE("a memorizing checkpoint scores rouge 1 on its own data") {
  // Hand-build a checkpoint whose generate() output is forced by training
  // to reproduce the training pair exactly (tiny corpus, many epochs).
  std::vector<QCSTriple> corpus{
      {"t0", "why hum", "the fan hums", "this is because it spins"},
      {"t1", "why drip", "the tap drips", "this is because it leaks"},
  };
  ModelConfig mc;
  mc.embed_dim = 24;
  mc.hidden_dim = 24;
  mc.max_decode_len = 40;
  TrainConfig tc;
  tc.iterations = 220;
  tc.batch_size = 2;
  tc.lr = 0.1;
  tc.seed = 3;
  FitResult r = fit(corpus, mc, tc);
  EvalReport report = evaluate_corpus(r.checkpoint, corpus);
  CHECK(report.mean_rouge_l == doctest::Approx(1.0));
}

TEST_CASE("eval report json round layout") {
  Checkpoint ckpt = tiny_checkpoint();
  std::vector<QCSTriple> test = generate_synthetic(SyntheticSpec{2, 2, 9});
  EvalReport report = evaluate_corpus(ckpt, test);
  std::string path = "test_eval_report.json";
  save_eval_report_json(report, path);
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  in.close();
  std::remove(path.c_str());
  CHECK(text.find("mean_rouge_l") != std::string::npos);
  CHECK(text.find("config_fingerprint") != std::string::npos);
  CHECK(text.find(report.examples[0].id) != std::string::npos);
}

TEST_CASE("config fingerprint tracks the config") {
  ModelConfig a;
  ModelConfig b;
  CHECK(config_fingerprint(a) == config_fingerprint(b));
  b.alpha = 2.0;
  CHECK(config_fingerprint(a) != config_fingerprint(b));
  ModelConfig c;
  c.use_attention = false;
  CHECK(config_fingerprint(a) != config_fingerprint(c));
}

TEST_CASE("single-alpha sweep yields one sorted row with provenance") {
  std::vector<QCSTriple> train = generate_synthetic(SyntheticSpec{2, 4, 42});
  std::vector<QCSTriple> test = generate_synthetic(SyntheticSpec{2, 2, 9});
  ModelConfig mc;
  mc.embed_dim = 8;
  mc.hidden_dim = 8;
  mc.max_decode_len = 20;
  TrainConfig tc;
  tc.iterations = 1;
  tc.batch_size = 4;
  tc.seed = 5;
  auto rows = alpha_sweep(train, test, {1.0}, mc, tc);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].variant == "alpha=1");
  CHECK(rows[0].alpha == 1.0);
  CHECK(rows[0].seed == 5);
  ModelConfig expect = mc;
  expect.alpha = 1.0;
  expect.vocab_size = 0;  // fingerprint is taken before vocab binding
  CHECK(!rows[0].config_hash.empty());

  // Unsorted input comes back sorted by alpha.
  auto rows2 = alpha_sweep(train, test, {2.0, 0.0}, mc, tc);
  REQUIRE(rows2.size() == 2);
  CHECK(rows2[0].alpha == 0.0);
  CHECK(rows2[1].alpha == 2.0);
  CHECK(rows2[0].config_hash != rows2[1].config_hash);
}

TEST_CASE("ablation rows map to exactly one flag each") {
  std::vector<QCSTriple> train = generate_synthetic(SyntheticSpec{2, 4, 42});
  std::vector<QCSTriple> test = generate_synthetic(SyntheticSpec{2, 2, 9});
  ModelConfig mc;
  mc.embed_dim = 8;
  mc.hidden_dim = 8;
  mc.max_decode_len = 20;
  TrainConfig tc;
  tc.iterations = 1;
  tc.batch_size = 4;
  tc.seed = 5;
  auto rows = ablation_run(train, test, mc, tc);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].variant == "NAGM");
  CHECK(rows[1].variant == "NAGMWA");
  CHECK(rows[2].variant == "wo_ste");
  for (const auto& row : rows) CHECK(row.seed == 5);

  // fit() binds the vocabulary size before fingerprinting.
  ModelConfig bound = mc;
  bound.vocab_size =
      Vocabulary::build(train, tc.min_count, tc.tokenizer).size();
  ModelConfig nagmwa = bound;
  nagmwa.use_attention = false;
  ModelConfig woste = bound;
  woste.use_sentence_type = false;
  CHECK(rows[0].config_hash == config_fingerprint(bound));
  CHECK(rows[1].config_hash == config_fingerprint(nagmwa));
  CHECK(rows[2].config_hash == config_fingerprint(woste));
}

TEST_CASE("experiment table csv layout") {
  std::vector<ExperimentRow> rows{{"alpha=0", 0.0, 0.5, 0.25, 7, "deadbeef"},
                                  {"NAGM", 1.0, 0.75, 0.5, 7, "cafef00d"}};
  std::string path = "test_table.csv";
  save_table_csv(rows, path);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "variant_or_alpha,rouge_l,bleu_4,seed,config_hash");
  std::getline(in, line);
  CHECK(line == "alpha=0,0.5,0.25,7,deadbeef");
  std::getline(in, line);
  CHECK(line == "NAGM,0.75,0.5,7,cafef00d");
  in.close();
  std::remove(path.c_str());
}
