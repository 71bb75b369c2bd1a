#include "senca/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "senca/error.hpp"

namespace senca {

namespace {

double dist2(const std::array<double, 2>& a, const std::array<double, 2>& b) {
    double dx = a[0] - b[0];
    double dy = a[1] - b[1];
    return dx * dx + dy * dy;
}

}  // namespace

double min_spot_spacing(const SpotTable& spots) {
    int n = spots.size();
    if (n < 2) throw ParamError("min_spot_spacing: need at least 2 spots");
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            double dx = spots.spots[i].x - spots.spots[j].x;
            double dy = spots.spots[i].y - spots.spots[j].y;
            double d2 = dx * dx + dy * dy;
            if (d2 < best) best = d2;
        }
    }
    return std::sqrt(best);
}

SpotGraph build_knn(const SpotTable& spots, int k) {
    int n = spots.size();
    if (k < 1) throw ParamError("build_knn: k must be >= 1");
    if (k >= n) {
        throw ParamError("build_knn: k=" + std::to_string(k) + " must be smaller than the " +
                         std::to_string(n) + " spots");
    }

    SpotGraph g;
    g.n = n;
    g.k = k;
    g.coords.resize(n);
    for (int i = 0; i < n; ++i) g.coords[i] = {spots.spots[i].x, spots.spots[i].y};

    g.knn.assign(n, {});
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        std::vector<std::pair<double, int>> cand;
        cand.reserve(n - 1);
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            cand.emplace_back(dist2(g.coords[i], g.coords[j]), j);
        }
        std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
        g.knn[i].reserve(k);
        for (int r = 0; r < k; ++r) g.knn[i].push_back(cand[r].second);
    }

    g.adj.assign(n, {});
    std::vector<std::set<int>> nb(n);
    for (int i = 0; i < n; ++i) {
        for (int j : g.knn[i]) {
            nb[i].insert(j);
            nb[j].insert(i);
        }
    }
    for (int i = 0; i < n; ++i) g.adj[i].assign(nb[i].begin(), nb[i].end());

    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) best = std::min(best, dist2(g.coords[i], g.coords[g.knn[i][0]]));
    g.spacing = std::sqrt(best);
    return g;
}

std::vector<int> neighborhood(const SpotGraph& g, int i) {
    if (i < 0 || i >= g.n) {
        throw BoundsError("neighborhood: spot index " + std::to_string(i) + " out of range");
    }
    std::vector<int> out;
    out.reserve(g.k + 1);
    out.push_back(i);
    out.insert(out.end(), g.knn[i].begin(), g.knn[i].end());
    return out;
}

RowMix normalized_adjacency(const SpotGraph& g) {
    RowMix mix;
    mix.entries.resize(g.n);
    for (int i = 0; i < g.n; ++i) {
        double deg = static_cast<double>(g.adj[i].size()) + 1.0;  // self-loop
        double w = 1.0 / deg;
        mix.entries[i].reserve(g.adj[i].size() + 1);
        mix.entries[i].emplace_back(i, w);
        for (int j : g.adj[i]) mix.entries[i].emplace_back(j, w);
    }
    return mix;
}

void save_graph_tsv(const std::filesystem::path& path, const SpotGraph& g) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << "src\tdst\tdistance\n";
    char buf[64];
    for (int i = 0; i < g.n; ++i) {
        for (int j : g.adj[i]) {
            if (j <= i) continue;
            std::snprintf(buf, sizeof(buf), "%.17g", std::sqrt(dist2(g.coords[i], g.coords[j])));
            out << i << '\t' << j << '\t' << buf << '\n';
        }
    }
}

}  // namespace senca
