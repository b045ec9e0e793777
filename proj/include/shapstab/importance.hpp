#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "shapstab/explainer.hpp"

namespace shapstab {

// Variable order by descending importance plus the importance values
// themselves, indexed by variable.
struct Ranking {
    std::vector<std::size_t> order;  // most important first
    std::vector<double> importance;
};

// I_j: sum of absolute attributions of variable j over all instances.
std::vector<double> variable_importance(const AttributionResult& attr);

// Descending importance; ties broken by ascending variable index.
Ranking rank_variables(const std::vector<double>& importance);

// One line of variable names, most important first.
std::string format_ranking(const Ranking& ranking, const std::vector<std::string>& names);

}  // namespace shapstab
