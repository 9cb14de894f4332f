#include "nagm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "nagm/errors.hpp"

namespace nagm {

std::size_t lcs_length(const TokenList& a, const TokenList& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = (a[i - 1] == b[j - 1]) ? prev[j - 1] + 1
                                      : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l(const TokenList& candidate, const TokenList& reference,
               double beta) {
  if (reference.empty()) throw DomainError("rouge_l: empty reference");
  if (candidate.empty()) return 0.0;
  double lcs = static_cast<double>(lcs_length(candidate, reference));
  double p = lcs / static_cast<double>(candidate.size());
  double r = lcs / static_cast<double>(reference.size());
  if (p + r == 0.0) return 0.0;
  double b2 = beta * beta;
  return (1.0 + b2) * p * r / (r + b2 * p);
}

namespace {

std::map<TokenList, std::size_t> ngram_counts(const TokenList& toks,
                                              std::size_t n) {
  std::map<TokenList, std::size_t> counts;
  if (toks.size() < n) return counts;
  for (std::size_t i = 0; i + n <= toks.size(); ++i) {
    ++counts[TokenList(toks.begin() + i, toks.begin() + i + n)];
  }
  return counts;
}

}  // namespace

double bleu_4(const TokenList& candidate, const TokenList& reference,
              bool smoothed) {
  if (reference.empty()) throw DomainError("bleu_4: empty reference");
  if (candidate.empty()) return 0.0;
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= 4; ++n) {
    auto cand = ngram_counts(candidate, n);
    auto ref = ngram_counts(reference, n);
    std::size_t matched = 0, total = 0;
    for (const auto& [gram, cnt] : cand) {
      total += cnt;
      auto it = ref.find(gram);
      if (it != ref.end()) matched += std::min(cnt, it->second);
    }
    double num = static_cast<double>(matched);
    double den = static_cast<double>(total);
    if (smoothed && n >= 2) {
      num += 1.0;
      den += 1.0;
    }
    if (num == 0.0 || den == 0.0) return 0.0;
    log_sum += 0.25 * std::log(num / den);
  }
  double bp = 1.0;
  if (candidate.size() < reference.size()) {
    bp = std::exp(1.0 - static_cast<double>(reference.size()) /
                            static_cast<double>(candidate.size()));
  }
  return bp * std::exp(log_sum);
}

}  // namespace nagm
