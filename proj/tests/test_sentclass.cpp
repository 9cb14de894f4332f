#include <cstdio>
#include <fstream>

#include "doctest.h"
#include "nagm/sentclass.hpp"

using namespace nagm;

namespace {

ClassifierConfig small_config(std::uint64_t seed = 0) {
  ClassifierConfig cfg;
  cfg.embed_dim = 12;
  cfg.hidden_dim = 12;
  cfg.epochs = 60;
  cfg.seed = seed;
  return cfg;
}

std::vector<LabeledSentence> toy_labeled() {
  return {
      {"the cat needs food", false},
      {"your fern looks pale", false},
      {"the bike is ready", false},
      {"this is because the cat gets hungry", true},
      {"that is why the fern wilts", true},
      {"the reason is a flat tire", true},
  };
}

}  // namespace

TEST_CASE("rule classification takes precedence over the model") {
  CuePhraseList cues = CuePhraseList::defaults();
  auto hit = rule_classify("this is because it rained", cues);
  REQUIRE(hit.has_value());
  CHECK(hit->is_supplement);
  CHECK(hit->source == SentenceLabel::Source::Rule);
  CHECK(hit->probability == 1.0);

  CHECK_FALSE(rule_classify("the sky is blue", cues).has_value());
  // Cue must be a prefix, not an infix.
  CHECK_FALSE(rule_classify("we know this is because of rain", cues)
                  .has_value());
  // Normalization: case and surrounding whitespace do not matter.
  auto hit2 = rule_classify("  THEREFORE the road is wet ", cues);
  REQUIRE(hit2.has_value());
  CHECK(hit2->is_supplement);
}

TEST_CASE("untrained zero weights sit exactly at the threshold") {
  // Zero every parameter: the logit is 0, the probability exactly 0.5.
  Classifier trained = train_classifier(toy_labeled(), small_config(1));
  for (auto& [name, tensor] : trained.params.mutable_params()) {
    for (double& v : tensor.data) v = 0.0;
  }
  double p = classifier_probability("some words", trained);
  CHECK(p == doctest::Approx(0.5));
  // probability >= threshold counts as supplement.
  SentenceLabel lab =
      classify_sentence("some words", trained, CuePhraseList::defaults());
  CHECK(lab.is_supplement);
  CHECK(lab.source == SentenceLabel::Source::Model);
}

TEST_CASE("probability is invariant to trailing whitespace") {
  Classifier clf = train_classifier(toy_labeled(), small_config(2));
  double a = classifier_probability("the cat needs food", clf);
  double b = classifier_probability("  the cat needs food   ", clf);
  CHECK(a == b);
}

TEST_CASE("training reaches 95 percent accuracy on the synthetic set") {
  auto labeled = synthetic_labeled_sentences(200, 5);
  ClassifierConfig cfg;
  cfg.seed = 5;
  Classifier clf = train_classifier(labeled, cfg);
  std::size_t correct = 0;
  for (const auto& s : labeled) {
    double p = classifier_probability(s.sentence, clf);
    bool pred = p >= cfg.threshold;
    if (pred == s.is_supplement) ++correct;
  }
  CHECK(correct >= 190);
}

TEST_CASE("loss decreases monotonically on a separable toy set") {
  // Disjoint token sets: linearly separable after embedding.
  std::vector<LabeledSentence> labeled{
      {"aaaa", false}, {"aaab", false}, {"bbba", true}, {"bbbb", true}};
  std::size_t monotone = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    ClassifierConfig cfg = small_config(seed);
    cfg.epochs = 10;
    Classifier clf = train_classifier(labeled, cfg);
    REQUIRE(clf.loss_curve.size() == 10);
    bool ok = true;
    for (std::size_t i = 1; i < clf.loss_curve.size(); ++i) {
      if (clf.loss_curve[i] > clf.loss_curve[i - 1]) ok = false;
    }
    if (ok) ++monotone;
  }
  CHECK(monotone >= 9);
}

TEST_CASE("contradictory duplicates floor the loss at log 2") {
  std::vector<LabeledSentence> contradictory{
      {"same sentence twice", false},
      {"same sentence twice", true},
  };
  ClassifierConfig cfg = small_config(3);
  cfg.epochs = 200;
  Classifier clf = train_classifier(contradictory, cfg);
  // Best achievable mean BCE on an irreconcilable pair is ln 2.
  CHECK(clf.final_loss >= std::log(2.0) - 1e-9);
}

TEST_CASE("training is seed deterministic") {
  auto labeled = synthetic_labeled_sentences(60, 7);
  Classifier a = train_classifier(labeled, small_config(9));
  Classifier b = train_classifier(labeled, small_config(9));
  CHECK(a.final_loss == b.final_loss);
  for (const auto& [name, tensor] : a.params.params()) {
    CHECK(tensor.data == b.params.at(name).data);
  }
  Classifier c = train_classifier(labeled, small_config(10));
  CHECK(c.final_loss != a.final_loss);
}

TEST_CASE("single-class training data is rejected") {
  std::vector<LabeledSentence> only_pos{{"this is because x", true},
                                        {"that is why y", true}};
  CHECK_THROWS_AS(train_classifier(only_pos, small_config()), ConfigError);
  CHECK_THROWS_AS(train_classifier({}, small_config()), ConfigError);
}

TEST_CASE("annotate splits records and counts drops") {
  Classifier clf = train_classifier(toy_labeled(), small_config(5));
  CuePhraseList cues = CuePhraseList::defaults();
  std::vector<RawRecord> records{
      {"why is the cat loud", {"the cat needs food",
                               "this is because the cat gets hungry"}},
      {"why lean", {"this is because it seeks light"}},  // no conclusion
  };
  AnnotateResult res = annotate(records, clf, cues);
  REQUIRE(res.triples.size() == 1);
  CHECK(res.dropped == 1);
  CHECK(res.triples.size() + res.dropped == records.size());
  CHECK(res.triples[0].question == "why is the cat loud");
  CHECK(res.triples[0].conclusion == "the cat needs food");
  CHECK(res.triples[0].supplement == "this is because the cat gets hungry");
  CHECK(res.triples[0].id == "rec-0");
}

TEST_CASE("annotate keeps in-class sentence order and joins with spaces") {
  Classifier clf = train_classifier(toy_labeled(), small_config(4));
  CuePhraseList cues = CuePhraseList::defaults();
  std::vector<RawRecord> records{
      {"q", {"the cat needs food", "the bike is ready",
             "this is because the cat gets hungry",
             "therefore the tire is flat"}}};
  AnnotateResult res = annotate(records, clf, cues);
  REQUIRE(res.triples.size() == 1);
  // Cued sentences land in the supplement in their original order.
  CHECK(res.triples[0].supplement ==
        "this is because the cat gets hungry therefore the tire is flat");
}

TEST_CASE("cue phrases load from file with comments") {
  std::string path = "test_cues.txt";
  {
    std::ofstream out(path);
    out << "# reasons\n";
    out << "this is because\n";
    out << "\n";
    out << "owing to\n";
  }
  CuePhraseList cues = CuePhraseList::load(path);
  std::remove(path.c_str());
  REQUIRE(cues.phrases.size() == 2);
  CHECK(cues.phrases[0] == "this is because");
  CHECK(cues.phrases[1] == "owing to");
  CHECK(rule_classify("owing to the storm", cues).has_value());
  CHECK_THROWS_AS(CuePhraseList::load("does_not_exist.txt"), IoError);
}

TEST_CASE("raw jsonl loader") {
  std::string path = "test_raw.jsonl";
  {
    std::ofstream out(path);
    out << R"({"question":"q1","sentences":["a","b"]})" << "\n";
  }
  auto records = load_raw_jsonl(path);
  std::remove(path.c_str());
  REQUIRE(records.size() == 1);
  CHECK(records[0].question == "q1");
  CHECK(records[0].sentences == std::vector<std::string>{"a", "b"});

  // A record without any sentence is rejected rather than silently kept.
  std::string empty_arr = "test_raw_empty.jsonl";
  {
    std::ofstream out(empty_arr);
    out << R"({"question":"q2","sentences":[]})" << "\n";
  }
  CHECK_THROWS_AS(load_raw_jsonl(empty_arr), SchemaError);
  std::remove(empty_arr.c_str());

  std::string bad = "test_raw_bad.jsonl";
  {
    std::ofstream out(bad);
    out << R"({"sentences":["a"]})" << "\n";
  }
  CHECK_THROWS_AS(load_raw_jsonl(bad), SchemaError);
  std::remove(bad.c_str());
}
