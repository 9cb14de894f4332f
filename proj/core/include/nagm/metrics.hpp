#pragma once

#include <string>
#include <vector>

namespace nagm {

using TokenList = std::vector<std::string>;

std::size_t lcs_length(const TokenList& a, const TokenList& b);

/// LCS F-measure. P = LCS/|cand|, R = LCS/|ref|, F = (1+b^2)PR/(R+b^2 P).
/// Empty candidate scores 0; empty reference is a domain error.
double rouge_l(const TokenList& candidate, const TokenList& reference,
               double beta = 1.0);

/// Geometric mean of modified n-gram precisions (n=1..4) times the brevity
/// penalty. With `smoothed`, numerator and denominator get +1 for n >= 2;
/// unigram precision is never smoothed. Empty candidate scores 0.
double bleu_4(const TokenList& candidate, const TokenList& reference,
              bool smoothed = true);

}  // namespace nagm
