#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "shapstab/data.hpp"

namespace shapstab {

struct QuartileScores {
    std::array<double, 4> per_quartile{};
    double average = 0.0;  // arithmetic mean of per_quartile
};

struct QuartileBounds {
    std::size_t begin = 0;
    std::size_t end = 0;  // half-open
};

// Floor-boundary partition of positions 0..length-1 into four contiguous
// segments: segment q covers [floor(q*length/4), floor((q+1)*length/4)).
// Requires length >= 4.
std::array<QuartileBounds, 4> quartile_split(std::size_t length);

// Quartile-based bigram precision between two rankings of the same index
// set. Bigrams are consecutive pairs inside a quartile; pairs crossing a
// quartile boundary are not formed. Each quartile scores
// (matched bigrams / reference bigrams)^(1/4); the average is the final
// value. Requires length >= 8 so every quartile holds at least one bigram.
QuartileScores bleu_q(std::span<const std::size_t> a, std::span<const std::size_t> b);

// Quartile-based intersection-over-union of the variable sets per quartile.
// Requires length >= 4.
QuartileScores jaccard_q(std::span<const std::size_t> a, std::span<const std::size_t> b);

// Whole-sequence n-gram score with weights 1/2^n for n = 1..max_n. For
// equal-length permutations the brevity penalty and unigram precision are
// identically 1, so the product starts at the bigram term.
double bleu_ngram(std::span<const std::size_t> a, std::span<const std::size_t> b, int max_n);

enum class RankMetric { kBleuQ, kJaccardQ };

struct PairwiseMean {
    double average = 0.0;
    std::array<double, 4> per_quartile{};
};

// Arithmetic mean of the metric over all C(p, 2) unordered pairs, applied
// to the averages and to each quartile component. Pairs are reduced in
// lexicographic index order.
PairwiseMean mean_pairwise(const std::vector<std::vector<std::size_t>>& rankings,
                           RankMetric metric);

// Sum over instances of the unbiased sample variance (denominator S - 1) of
// |shap| for one variable across S simulation stacks.
double variance_sum(const std::vector<Matrix>& shap_stacks, std::size_t variable);

}  // namespace shapstab
