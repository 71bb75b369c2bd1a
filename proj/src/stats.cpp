#include "senca/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include "senca/error.hpp"

namespace senca {

RankSumResult wilcoxon_rank_sum_greater(const std::vector<double>& group,
                                        const std::vector<double>& rest) {
    size_t n1 = group.size(), n2 = rest.size();
    if (n1 == 0 || n2 == 0) {
        throw ParamError("wilcoxon_rank_sum_greater: both groups must be non-empty");
    }
    size_t n = n1 + n2;

    std::vector<std::pair<double, int>> all;  // (value, 1 if in group)
    all.reserve(n);
    for (double v : group) all.emplace_back(v, 1);
    for (double v : rest) all.emplace_back(v, 0);
    std::sort(all.begin(), all.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    // Mid-ranks; collect tie block sizes for the variance correction.
    double rank_sum_group = 0.0;
    double tie_term = 0.0;  // sum of t^3 - t
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && all[j + 1].first == all[i].first) ++j;
        double mid_rank = 0.5 * static_cast<double>(i + 1 + j + 1);
        size_t t = j - i + 1;
        if (t > 1) tie_term += static_cast<double>(t) * t * t - static_cast<double>(t);
        for (size_t r = i; r <= j; ++r) {
            if (all[r].second) rank_sum_group += mid_rank;
        }
        i = j + 1;
    }

    double fn1 = static_cast<double>(n1), fn2 = static_cast<double>(n2);
    double fn = static_cast<double>(n);
    double u = rank_sum_group - fn1 * (fn1 + 1.0) / 2.0;
    double mean_u = fn1 * fn2 / 2.0;
    double var_u = fn1 * fn2 / 12.0 * ((fn + 1.0) - tie_term / (fn * (fn - 1.0)));

    RankSumResult out;
    out.u = u;
    if (var_u <= 0.0) {
        // Every value tied: no evidence either way.
        out.p = 0.5;
        return out;
    }
    double z = (u - mean_u - 0.5) / std::sqrt(var_u);
    double p = 0.5 * std::erfc(z / std::sqrt(2.0));
    out.p = std::min(1.0, std::max(p, std::numeric_limits<double>::min()));
    return out;
}

MarkerResult wilcoxon_marker(const ExpressionMatrix& expr,
                             const std::vector<std::string>& labels,
                             const std::string& cluster, int gene_index) {
    if (expr.stage != ExprStage::log) {
        throw ParamError("wilcoxon_marker: expression must be at the log stage");
    }
    if (labels.size() != static_cast<size_t>(expr.n_spots())) {
        throw ConsistencyError("wilcoxon_marker: one label required per spot row");
    }
    if (gene_index < 0 || gene_index >= expr.n_genes()) {
        throw BoundsError("wilcoxon_marker: gene index out of range");
    }
    std::vector<double> in_cluster, others;
    for (int i = 0; i < expr.n_spots(); ++i) {
        double v = expr.values.at(i, gene_index);
        if (labels[i] == cluster)
            in_cluster.push_back(v);
        else
            others.push_back(v);
    }
    if (in_cluster.empty() || others.empty()) {
        throw ParamError("wilcoxon_marker: cluster '" + cluster +
                         "' and its complement must both be non-empty");
    }
    RankSumResult rs = wilcoxon_rank_sum_greater(in_cluster, others);
    return MarkerResult{expr.genes[gene_index], cluster, rs.u, rs.p};
}

namespace {

bool all_integer_labels(const std::set<std::string>& labels) {
    for (const auto& s : labels) {
        if (s.empty()) return false;
        size_t start = s[0] == '-' ? 1 : 0;
        if (start == s.size()) return false;
        for (size_t i = start; i < s.size(); ++i) {
            if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
        }
    }
    return true;
}

}  // namespace

std::vector<MarkerResult> marker_table(const ExpressionMatrix& expr,
                                       const std::vector<std::string>& labels, int top_m) {
    if (top_m < 0) throw ParamError("marker_table: top_m must be >= 0");
    std::vector<MarkerResult> out;
    if (top_m == 0) return out;

    std::set<std::string> distinct(labels.begin(), labels.end());
    if (distinct.size() < 2) {
        throw ParamError("marker_table: need at least 2 clusters");
    }
    std::vector<std::string> clusters(distinct.begin(), distinct.end());
    if (all_integer_labels(distinct)) {
        std::sort(clusters.begin(), clusters.end(), [](const auto& a, const auto& b) {
            long la = std::stol(a), lb = std::stol(b);
            if (la != lb) return la < lb;
            return a < b;
        });
    }

    int n_genes = expr.n_genes();
    for (const std::string& cluster : clusters) {
        std::vector<MarkerResult> results(n_genes);
#pragma omp parallel for schedule(static)
        for (int gj = 0; gj < n_genes; ++gj) {
            results[gj] = wilcoxon_marker(expr, labels, cluster, gj);
        }
        std::sort(results.begin(), results.end(), [](const auto& a, const auto& b) {
            if (a.p != b.p) return a.p < b.p;
            return a.gene < b.gene;
        });
        int keep = std::min(top_m, n_genes);
        out.insert(out.end(), results.begin(), results.begin() + keep);
    }
    return out;
}

void save_markers(const std::filesystem::path& path, const std::vector<MarkerResult>& markers) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << "gene\tcluster\tU\tp\n";
    char buf[96];
    for (const MarkerResult& m : markers) {
        std::snprintf(buf, sizeof(buf), "%.6g\t%.6e", m.u, m.p);
        out << m.gene << '\t' << m.cluster << '\t' << buf << '\n';
    }
}

}  // namespace senca
