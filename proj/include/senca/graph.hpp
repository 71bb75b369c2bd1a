#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include "senca/autograd.hpp"
#include "senca/io.hpp"

namespace senca {

// Symmetric k-nearest-neighbor spot graph. `knn` keeps the directed neighbor
// lists (ascending distance, used for fixed-size attention neighborhoods);
// `adj` is the symmetrized union used for message passing.
struct SpotGraph {
    int n = 0;
    int k = 0;
    std::vector<std::array<double, 2>> coords;
    std::vector<std::vector<int>> knn;  // n x k, ascending distance
    std::vector<std::vector<int>> adj;  // symmetrized, sorted, no self-loops
    double spacing = 0.0;               // minimum pairwise spot distance
    Tensor features;                    // hvg-selected expression rows (V_i)
};

double min_spot_spacing(const SpotTable& spots);

// Exhaustive exact k-NN; ties broken by lower spot index. Throws ParamError
// for k < 1 or k >= n.
SpotGraph build_knn(const SpotTable& spots, int k = 4);

// [i] followed by i's k directed nearest neighbors in ascending-distance
// order; always length k+1.
std::vector<int> neighborhood(const SpotGraph& g, int i);

// Row-normalized adjacency with self-loops: D^-1 (A + I).
RowMix normalized_adjacency(const SpotGraph& g);

// Debug dump: `src\tdst\tdistance`, each undirected edge once (src < dst).
void save_graph_tsv(const std::filesystem::path& path, const SpotGraph& g);

}  // namespace senca
