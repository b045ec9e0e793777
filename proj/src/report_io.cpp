#include "shapstab/report_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

#include "shapstab/text.hpp"

namespace shapstab {

namespace {

nlohmann::json metric_to_json(const PairwiseMean& mean) {
    return {{"average", mean.average},
            {"per_quartile", {mean.per_quartile[0], mean.per_quartile[1], mean.per_quartile[2],
                              mean.per_quartile[3]}}};
}

PairwiseMean metric_from_json(const nlohmann::json& j) {
    PairwiseMean mean;
    mean.average = j.at("average").get<double>();
    const auto& quartiles = j.at("per_quartile");
    if (!quartiles.is_array() || quartiles.size() != 4) {
        throw std::runtime_error("per_quartile must hold 4 values");
    }
    for (std::size_t q = 0; q < 4; ++q) {
        mean.per_quartile[q] = quartiles[q].get<double>();
    }
    return mean;
}

}  // namespace

void write_report(const StabilityReport& report, const std::filesystem::path& path) {
    nlohmann::json doc;
    doc["master_seed"] = report.master_seed;
    doc["simulations_per_size"] = report.simulations_per_size;
    doc["variable_names"] = report.variable_names;
    nlohmann::json sizes = nlohmann::json::array();
    for (const SizeReport& size : report.sizes) {
        nlohmann::json block;
        block["m"] = size.background_size;
        block["variance_sum"] = size.variance_sums;
        block["mean_bleu"] = metric_to_json(size.mean_bleu);
        block["mean_jaccard"] = metric_to_json(size.mean_jaccard);
        block["seeds"] = size.seeds;
        nlohmann::json rankings = nlohmann::json::array();
        for (const auto& order : size.rankings) {
            nlohmann::json names = nlohmann::json::array();
            for (std::size_t variable : order) {
                if (variable >= report.variable_names.size()) {
                    throw std::invalid_argument("ranking index out of range");
                }
                names.push_back(report.variable_names[variable]);
            }
            rankings.push_back(std::move(names));
        }
        block["rankings"] = std::move(rankings);
        sizes.push_back(std::move(block));
    }
    doc["sizes"] = std::move(sizes);

    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    }
    out << doc.dump(2) << '\n';
    if (!out) {
        throw std::runtime_error("failed writing '" + path.string() + "'");
    }
}

StabilityReport read_report(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open '" + path.string() + "' for reading");
    }
    StabilityReport report;
    try {
        const nlohmann::json doc = nlohmann::json::parse(in);
        report.master_seed = doc.at("master_seed").get<std::uint64_t>();
        report.simulations_per_size = doc.at("simulations_per_size").get<std::size_t>();
        report.variable_names = doc.at("variable_names").get<std::vector<std::string>>();
        std::unordered_map<std::string, std::size_t> index_of;
        for (std::size_t j = 0; j < report.variable_names.size(); ++j) {
            index_of[report.variable_names[j]] = j;
        }
        for (const auto& block : doc.at("sizes")) {
            SizeReport size;
            size.background_size = block.at("m").get<std::size_t>();
            size.variance_sums = block.at("variance_sum").get<std::vector<double>>();
            size.mean_bleu = metric_from_json(block.at("mean_bleu"));
            size.mean_jaccard = metric_from_json(block.at("mean_jaccard"));
            size.seeds = block.at("seeds").get<std::vector<std::uint64_t>>();
            for (const auto& names : block.at("rankings")) {
                std::vector<std::size_t> order;
                order.reserve(names.size());
                for (const auto& name : names) {
                    const auto it = index_of.find(name.get<std::string>());
                    if (it == index_of.end()) {
                        throw std::runtime_error("ranking references unknown variable '" +
                                                 name.get<std::string>() + "'");
                    }
                    order.push_back(it->second);
                }
                size.rankings.push_back(std::move(order));
            }
            report.sizes.push_back(std::move(size));
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("malformed report file '" + path.string() + "': " + e.what());
    }
    return report;
}

namespace {

void render_variance_csv(const StabilityReport& report, std::ostringstream& out) {
    out << "variable";
    for (const SizeReport& size : report.sizes) {
        out << ",m=" << size.background_size;
    }
    out << '\n';
    for (std::size_t j = 0; j < report.variable_names.size(); ++j) {
        out << report.variable_names[j];
        for (const SizeReport& size : report.sizes) {
            out << ',' << format_sig6(size.variance_sums.at(j));
        }
        out << '\n';
    }
}

void render_metric_csv(const StabilityReport& report, bool bleu, std::ostringstream& out) {
    out << "m,Average,Quartile 1,Quartile 2,Quartile 3,Quartile 4\n";
    for (const SizeReport& size : report.sizes) {
        const PairwiseMean& mean = bleu ? size.mean_bleu : size.mean_jaccard;
        out << size.background_size << ',' << format_sig6(mean.average);
        for (double value : mean.per_quartile) {
            out << ',' << format_sig6(value);
        }
        out << '\n';
    }
}

void render_metric_markdown(const StabilityReport& report, bool bleu, std::ostringstream& out) {
    out << "| m | Average | Quartile 1 | Quartile 2 | Quartile 3 | Quartile 4 |\n";
    out << "|---|---------|------------|------------|------------|------------|\n";
    for (const SizeReport& size : report.sizes) {
        const PairwiseMean& mean = bleu ? size.mean_bleu : size.mean_jaccard;
        out << "| " << size.background_size << " | " << format_sig6(mean.average);
        for (double value : mean.per_quartile) {
            out << " | " << format_sig6(value);
        }
        out << " |\n";
    }
}

}  // namespace

std::string render_tables_csv(const StabilityReport& report) {
    std::ostringstream out;
    out << "# variance sums\n";
    render_variance_csv(report, out);
    out << "\n# quartile-based bleu\n";
    render_metric_csv(report, true, out);
    out << "\n# quartile-based jaccard\n";
    render_metric_csv(report, false, out);
    return out.str();
}

std::string render_tables_markdown(const StabilityReport& report) {
    std::ostringstream out;
    out << "## Variance sums\n\n";
    out << "| variable |";
    for (const SizeReport& size : report.sizes) {
        out << " m=" << size.background_size << " |";
    }
    out << '\n';
    out << "|----------|";
    for (std::size_t s = 0; s < report.sizes.size(); ++s) {
        out << "---|";
    }
    out << '\n';
    for (std::size_t j = 0; j < report.variable_names.size(); ++j) {
        out << "| " << report.variable_names[j] << " |";
        for (const SizeReport& size : report.sizes) {
            out << ' ' << format_sig6(size.variance_sums.at(j)) << " |";
        }
        out << '\n';
    }
    out << "\n## Quartile-based BLEU\n\n";
    render_metric_markdown(report, true, out);
    out << "\n## Quartile-based Jaccard\n\n";
    render_metric_markdown(report, false, out);
    return out.str();
}

}  // namespace shapstab
