#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "senca/io.hpp"

namespace senca {

struct RankSumResult {
    double u = 0.0;  // Mann-Whitney U of the first group
    double p = 1.0;  // one-sided "greater", normal approximation
};

// Rank-sum test of `group` against `rest`: mid-ranks for ties, tie-corrected
// variance, 0.5 continuity correction. Both groups must be non-empty.
RankSumResult wilcoxon_rank_sum_greater(const std::vector<double>& group,
                                        const std::vector<double>& rest);

struct MarkerResult {
    std::string gene;
    std::string cluster;
    double u = 0.0;
    double p = 1.0;
};

// One test per (cluster, gene): gene values inside the cluster against all
// other spots. Requires log-stage expression and one label per spot row.
MarkerResult wilcoxon_marker(const ExpressionMatrix& expr,
                             const std::vector<std::string>& labels,
                             const std::string& cluster, int gene_index);

// Top `top_m` lowest-p genes per cluster, sorted ascending p (ties by gene
// name). Clusters are processed in sorted label order (numeric when all
// labels parse as integers).
std::vector<MarkerResult> marker_table(const ExpressionMatrix& expr,
                                       const std::vector<std::string>& labels, int top_m);

void save_markers(const std::filesystem::path& path, const std::vector<MarkerResult>& markers);

}  // namespace senca
