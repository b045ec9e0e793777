#include "shapstab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace shapstab {

namespace {

void check_permutation_pair(std::span<const std::size_t> a, std::span<const std::size_t> b,
                            std::size_t min_length) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("rankings differ in length (" + std::to_string(a.size()) +
                                    " vs " + std::to_string(b.size()) + ")");
    }
    if (a.size() < min_length) {
        throw std::invalid_argument("ranking length " + std::to_string(a.size()) +
                                    " is below the minimum " + std::to_string(min_length));
    }
    std::vector<bool> seen(a.size());
    for (std::span<const std::size_t> ranking : {a, b}) {
        std::fill(seen.begin(), seen.end(), false);
        for (std::size_t value : ranking) {
            if (value >= ranking.size() || seen[value]) {
                throw std::invalid_argument("ranking is not a permutation of 0.." +
                                            std::to_string(ranking.size() - 1));
            }
            seen[value] = true;
        }
    }
}

// Consecutive pairs of one segment, encoded as first * length + second.
// Entries are distinct because the sequence is a permutation.
std::vector<std::uint64_t> segment_bigrams(std::span<const std::size_t> ranking,
                                           QuartileBounds bounds) {
    std::vector<std::uint64_t> bigrams;
    bigrams.reserve(bounds.end - bounds.begin - 1);
    const auto length = static_cast<std::uint64_t>(ranking.size());
    for (std::size_t t = bounds.begin; t + 1 < bounds.end; ++t) {
        bigrams.push_back(static_cast<std::uint64_t>(ranking[t]) * length +
                          static_cast<std::uint64_t>(ranking[t + 1]));
    }
    return bigrams;
}

std::size_t sorted_intersection_count(std::vector<std::uint64_t> lhs,
                                      std::vector<std::uint64_t> rhs) {
    std::sort(lhs.begin(), lhs.end());
    std::sort(rhs.begin(), rhs.end());
    std::size_t count = 0;
    auto it = lhs.begin();
    for (std::uint64_t value : rhs) {
        it = std::lower_bound(it, lhs.end(), value);
        if (it == lhs.end()) {
            break;
        }
        if (*it == value) {
            ++count;
            ++it;
        }
    }
    return count;
}

}  // namespace

std::array<QuartileBounds, 4> quartile_split(std::size_t length) {
    if (length < 4) {
        throw std::invalid_argument("quartile split needs at least 4 elements, got " +
                                    std::to_string(length));
    }
    std::array<QuartileBounds, 4> bounds;
    for (std::size_t q = 0; q < 4; ++q) {
        bounds[q] = {q * length / 4, (q + 1) * length / 4};
    }
    return bounds;
}

QuartileScores bleu_q(std::span<const std::size_t> a, std::span<const std::size_t> b) {
    check_permutation_pair(a, b, 8);
    const auto bounds = quartile_split(a.size());
    QuartileScores scores;
    double total = 0.0;
    for (std::size_t q = 0; q < 4; ++q) {
        const std::vector<std::uint64_t> candidate = segment_bigrams(a, bounds[q]);
        const std::vector<std::uint64_t> reference = segment_bigrams(b, bounds[q]);
        const std::size_t matched = sorted_intersection_count(candidate, reference);
        const double precision =
            static_cast<double>(matched) / static_cast<double>(reference.size());
        scores.per_quartile[q] = std::pow(precision, 0.25);
        total += scores.per_quartile[q];
    }
    scores.average = total / 4.0;
    return scores;
}

QuartileScores jaccard_q(std::span<const std::size_t> a, std::span<const std::size_t> b) {
    check_permutation_pair(a, b, 4);
    const auto bounds = quartile_split(a.size());
    QuartileScores scores;
    double total = 0.0;
    for (std::size_t q = 0; q < 4; ++q) {
        std::vector<std::uint64_t> lhs(a.begin() + bounds[q].begin, a.begin() + bounds[q].end);
        std::vector<std::uint64_t> rhs(b.begin() + bounds[q].begin, b.begin() + bounds[q].end);
        const std::size_t size = bounds[q].end - bounds[q].begin;
        const std::size_t intersection = sorted_intersection_count(std::move(lhs), std::move(rhs));
        const std::size_t union_size = 2 * size - intersection;
        scores.per_quartile[q] =
            static_cast<double>(intersection) / static_cast<double>(union_size);
        total += scores.per_quartile[q];
    }
    scores.average = total / 4.0;
    return scores;
}

double bleu_ngram(std::span<const std::size_t> a, std::span<const std::size_t> b, int max_n) {
    check_permutation_pair(a, b, 1);
    if (max_n < 1 || static_cast<std::size_t>(max_n) > a.size()) {
        throw std::invalid_argument("max_n must lie in [1, ranking length]");
    }
    // Brevity penalty and p_1 are 1 for equal-length permutations.
    double score = 1.0;
    std::vector<std::vector<std::size_t>> candidate;
    std::vector<std::vector<std::size_t>> reference;
    for (int n = 2; n <= max_n; ++n) {
        candidate.clear();
        reference.clear();
        for (std::size_t t = 0; t + n <= a.size(); ++t) {
            candidate.emplace_back(a.begin() + t, a.begin() + t + n);
            reference.emplace_back(b.begin() + t, b.begin() + t + n);
        }
        std::sort(candidate.begin(), candidate.end());
        std::sort(reference.begin(), reference.end());
        std::size_t matched = 0;
        auto it = candidate.begin();
        for (const auto& gram : reference) {
            it = std::lower_bound(it, candidate.end(), gram);
            if (it == candidate.end()) {
                break;
            }
            if (*it == gram) {
                ++matched;
                ++it;
            }
        }
        const double precision = static_cast<double>(matched) / static_cast<double>(reference.size());
        if (precision == 0.0) {
            return 0.0;
        }
        score *= std::pow(precision, 1.0 / std::pow(2.0, n));
    }
    return score;
}

PairwiseMean mean_pairwise(const std::vector<std::vector<std::size_t>>& rankings,
                           RankMetric metric) {
    if (rankings.size() < 2) {
        throw std::invalid_argument("pairwise mean needs at least 2 rankings");
    }
    for (const auto& ranking : rankings) {
        if (ranking.size() != rankings.front().size()) {
            throw std::invalid_argument("rankings differ in length");
        }
    }
    PairwiseMean mean;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < rankings.size(); ++i) {
        for (std::size_t j = i + 1; j < rankings.size(); ++j) {
            const QuartileScores scores = metric == RankMetric::kBleuQ
                                              ? bleu_q(rankings[i], rankings[j])
                                              : jaccard_q(rankings[i], rankings[j]);
            mean.average += scores.average;
            for (std::size_t q = 0; q < 4; ++q) {
                mean.per_quartile[q] += scores.per_quartile[q];
            }
            ++pairs;
        }
    }
    mean.average /= static_cast<double>(pairs);
    for (double& value : mean.per_quartile) {
        value /= static_cast<double>(pairs);
    }
    return mean;
}

double variance_sum(const std::vector<Matrix>& shap_stacks, std::size_t variable) {
    const std::size_t n_sims = shap_stacks.size();
    if (n_sims < 2) {
        throw std::invalid_argument("variance needs at least 2 simulations");
    }
    const std::size_t n_rows = shap_stacks.front().size();
    for (const Matrix& stack : shap_stacks) {
        if (stack.size() != n_rows) {
            throw std::invalid_argument("simulation stacks differ in row count");
        }
        for (const auto& row : stack) {
            if (variable >= row.size()) {
                throw std::invalid_argument("variable index out of range");
            }
        }
    }
    double total = 0.0;
    for (std::size_t i = 0; i < n_rows; ++i) {
        // Shifted two-pass variance: exact zero for identical stacks.
        const double offset = std::abs(shap_stacks.front()[i][variable]);
        double mean_shift = 0.0;
        for (const Matrix& stack : shap_stacks) {
            mean_shift += std::abs(stack[i][variable]) - offset;
        }
        mean_shift /= static_cast<double>(n_sims);
        double sum_squares = 0.0;
        for (const Matrix& stack : shap_stacks) {
            const double deviation = std::abs(stack[i][variable]) - offset - mean_shift;
            sum_squares += deviation * deviation;
        }
        total += sum_squares / static_cast<double>(n_sims - 1);
    }
    return total;
}

}  // namespace shapstab
