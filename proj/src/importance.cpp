#include "shapstab/importance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace shapstab {

std::vector<double> variable_importance(const AttributionResult& attr) {
    if (attr.shap.empty() || attr.shap.front().empty()) {
        throw std::invalid_argument("attribution matrix is empty");
    }
    std::vector<double> importance(attr.shap.front().size(), 0.0);
    for (const auto& row : attr.shap) {
        if (row.size() != importance.size()) {
            throw std::invalid_argument("attribution matrix is ragged");
        }
        for (std::size_t j = 0; j < row.size(); ++j) {
            importance[j] += std::abs(row[j]);
        }
    }
    return importance;
}

Ranking rank_variables(const std::vector<double>& importance) {
    if (importance.empty()) {
        throw std::invalid_argument("importance vector is empty");
    }
    for (double value : importance) {
        if (!std::isfinite(value)) {
            throw std::invalid_argument("importance contains a non-finite value");
        }
    }
    Ranking ranking;
    ranking.importance = importance;
    ranking.order.resize(importance.size());
    std::iota(ranking.order.begin(), ranking.order.end(), 0);
    // Stable sort on ascending indices gives the ascending-index tie-break.
    std::stable_sort(ranking.order.begin(), ranking.order.end(),
                     [&importance](std::size_t a, std::size_t b) {
                         return importance[a] > importance[b];
                     });
    return ranking;
}

std::string format_ranking(const Ranking& ranking, const std::vector<std::string>& names) {
    if (names.size() != ranking.order.size()) {
        throw std::invalid_argument("name count does not match ranking length");
    }
    std::string line;
    for (std::size_t k = 0; k < ranking.order.size(); ++k) {
        if (k > 0) {
            line += ", ";
        }
        line += names[ranking.order[k]];
    }
    return line;
}

}  // namespace shapstab
