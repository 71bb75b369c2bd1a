#pragma once

#include <filesystem>
#include <vector>

#include "senca/tensor.hpp"

namespace senca {

// One agglomerative merge. Node ids: 0..n-1 are leaves, n..2n-2 are internal
// nodes in merge order.
struct Merge {
    int left = 0;
    int right = 0;
    double distance = 0.0;
    int size = 0;  // leaves under the merged node
};

struct Dendrogram {
    int n_leaves = 0;
    std::vector<Merge> merges;  // exactly n_leaves - 1 entries
};

struct ClusterAssignment {
    std::vector<int> labels;  // spot -> 0..k-1
    int k = 0;
    Dendrogram dendrogram;
};

// Ward linkage on Euclidean distances via Lance-Williams updates. Ties merge
// the pair with the lexicographically smallest (min id, max id).
Dendrogram ward_linkage(const Tensor& points);

// Cuts to k clusters; label order follows the ascending smallest leaf id of
// each cluster.
std::vector<int> cut_dendrogram(const Dendrogram& dendro, int k);

ClusterAssignment agglomerative(const Tensor& points, int k);

// Adjusted Rand index between two label vectors of equal length; 1 when both
// partitions are identical-trivial (degenerate denominator).
double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

void save_dendrogram(const std::filesystem::path& path, const Dendrogram& dendro);

}  // namespace senca
