#include <cmath>
#include <random>

#include "doctest.h"
#include "nagm/metrics.hpp"
#include "nagm/errors.hpp"

using namespace nagm;

namespace {

// Independent oracle: longest common subsequence by exhaustive subsequence
// enumeration of the shorter side (lengths <= 8 only).
std::size_t lcs_brute(const TokenList& a, const TokenList& b) {
  const TokenList& small = a.size() <= b.size() ? a : b;
  const TokenList& large = a.size() <= b.size() ? b : a;
  std::size_t best = 0;
  for (std::size_t mask = 0; mask < (1u << small.size()); ++mask) {
    TokenList sub;
    for (std::size_t i = 0; i < small.size(); ++i) {
      if (mask & (1u << i)) sub.push_back(small[i]);
    }
    // Is sub a subsequence of large?
    std::size_t j = 0;
    for (std::size_t i = 0; i < large.size() && j < sub.size(); ++i) {
      if (large[i] == sub[j]) ++j;
    }
    if (j == sub.size()) best = std::max(best, sub.size());
  }
  return best;
}

double rouge_oracle(const TokenList& cand, const TokenList& ref) {
  if (cand.empty()) return 0.0;
  double lcs = static_cast<double>(lcs_brute(cand, ref));
  double p = lcs / cand.size(), r = lcs / ref.size();
  if (p + r == 0.0) return 0.0;
  return 2.0 * p * r / (p + r);
}

TokenList from_string(const std::string& s) {
  TokenList out;
  for (char c : s) out.push_back(std::string(1, c));
  return out;
}

}  // namespace

TEST_CASE("rouge_l worked examples") {
  TokenList same = {"a", "b", "c", "d"};
  CHECK(rouge_l(same, same) == doctest::Approx(1.0));

  TokenList cand = {"a", "c", "d"};
  TokenList ref = {"a", "b", "c", "d"};
  CHECK(std::fabs(rouge_l(cand, ref) - 6.0 / 7.0) <= 1e-9);

  CHECK(rouge_l({"x", "y"}, {"a", "b"}) == 0.0);
  CHECK(rouge_l({}, ref) == 0.0);
  CHECK_THROWS_AS(rouge_l(cand, {}), DomainError);
}

TEST_CASE("rouge_l matches brute-force oracle exhaustively, lengths <= 4") {
  const char alphabet[] = {'a', 'b', 'c'};
  std::vector<TokenList> all;
  all.push_back({});
  for (std::size_t len = 1; len <= 4; ++len) {
    std::size_t count = 1;
    for (std::size_t i = 0; i < len; ++i) count *= 3;
    for (std::size_t code = 0; code < count; ++code) {
      TokenList seq;
      std::size_t c = code;
      for (std::size_t i = 0; i < len; ++i) {
        seq.push_back(std::string(1, alphabet[c % 3]));
        c /= 3;
      }
      all.push_back(seq);
    }
  }
  for (const auto& cand : all) {
    for (const auto& ref : all) {
      if (ref.empty()) continue;
      CHECK(rouge_l(cand, ref) == doctest::Approx(rouge_oracle(cand, ref)));
    }
  }
}

TEST_CASE("rouge_l matches oracle on 10000 random pairs, lengths <= 8") {
  std::mt19937_64 rng(17);
  for (int rep = 0; rep < 10000; ++rep) {
    auto rand_seq = [&](bool allow_empty) {
      std::size_t len = rng() % 9;
      if (!allow_empty && len == 0) len = 1;
      TokenList out;
      for (std::size_t i = 0; i < len; ++i)
        out.push_back(std::string(1, static_cast<char>('a' + rng() % 3)));
      return out;
    };
    TokenList cand = rand_seq(true);
    TokenList ref = rand_seq(false);
    CHECK(rouge_l(cand, ref) == doctest::Approx(rouge_oracle(cand, ref)));
  }
}

TEST_CASE("metrics are permutation sensitive in agreement with the oracle") {
  TokenList cand = from_string("abcd");
  TokenList rev(cand.rbegin(), cand.rend());
  TokenList ref = from_string("abcd");
  CHECK(rouge_l(cand, ref) == doctest::Approx(rouge_oracle(cand, ref)));
  CHECK(rouge_l(rev, ref) == doctest::Approx(rouge_oracle(rev, ref)));
  CHECK(rouge_l(rev, ref) < rouge_l(cand, ref));
}

TEST_CASE("bleu_4 identity and smoothing behavior") {
  TokenList ten;
  for (int i = 0; i < 10; ++i) ten.push_back("t" + std::to_string(i));
  CHECK(bleu_4(ten, ten, /*smoothed=*/false) == doctest::Approx(1.0));
  // Add-1 smoothing at length 10: p2 = 10/10? no - 9 bigrams: (9+1)/(9+1)=1,
  // identical sequences keep every smoothed precision at 1.
  CHECK(bleu_4(ten, ten, true) == doctest::Approx(1.0));

  TokenList four = {"a", "b", "c", "d"};
  CHECK(bleu_4(four, four, false) == doctest::Approx(1.0));

  // Short candidate with perfect prefix: smoothing and brevity keep it in (0,1).
  TokenList two = {"a", "b"};
  double v = bleu_4(two, four, true);
  CHECK(v > 0.0);
  CHECK(v < 1.0);

  // Disjoint unigrams: hard zero, not smoothed.
  CHECK(bleu_4({"x", "y", "z"}, four, true) == 0.0);
  CHECK(bleu_4({}, four, true) == 0.0);
  CHECK_THROWS_AS(bleu_4(four, {}, true), DomainError);
}

TEST_CASE("bleu_4 smoothed value from the formula at perfect length 10") {
  // Identical length-10 sequences but distinct tokens: all matched. Every
  // smoothed precision is (m+1)/(m+1) = 1 so BLEU = 1; verified above. A
  // partially matched case pins the formula:
  TokenList ref, cand;
  for (int i = 0; i < 10; ++i) ref.push_back("t" + std::to_string(i));
  cand = ref;
  cand[9] = "x";  // 9/10 unigrams, 8/9 bigrams, 7/8 trigrams, 6/7 4-grams
  double expect = std::pow((9.0 / 10.0) * (9.0 / 10.0) * (8.0 / 9.0) *
                               (7.0 / 8.0),
                           0.25);
  CHECK(bleu_4(cand, ref, true) == doctest::Approx(expect));
}

TEST_CASE("metrics bounded in [0,1]") {
  std::mt19937_64 rng(23);
  for (int rep = 0; rep < 500; ++rep) {
    auto rand_seq = [&](std::size_t max_len, bool allow_empty) {
      std::size_t len = rng() % (max_len + 1);
      if (!allow_empty && len == 0) len = 1;
      TokenList out;
      for (std::size_t i = 0; i < len; ++i)
        out.push_back(std::string(1, static_cast<char>('a' + rng() % 4)));
      return out;
    };
    TokenList cand = rand_seq(10, true);
    TokenList ref = rand_seq(10, false);
    double r = rouge_l(cand, ref);
    double b = bleu_4(cand, ref);
    CHECK(r >= 0.0);
    CHECK(r <= 1.0);
    CHECK(b >= 0.0);
    CHECK(b <= 1.0);
  }
}
