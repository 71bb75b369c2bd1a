#include "senca/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "senca/error.hpp"

namespace senca {

Dendrogram ward_linkage(const Tensor& points) {
    int n = points.rows();
    if (n < 1) throw ParamError("ward_linkage: no points");
    Dendrogram out;
    out.n_leaves = n;
    if (n == 1) return out;

    // Squared-Euclidean distance matrix, updated in place by Lance-Williams.
    std::vector<double> d2(static_cast<size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            double s = 0.0;
            for (int c = 0; c < points.cols(); ++c) {
                double diff = points.at(i, c) - points.at(j, c);
                s += diff * diff;
            }
            d2[static_cast<size_t>(i) * n + j] = s;
            d2[static_cast<size_t>(j) * n + i] = s;
        }
    }

    std::vector<int> active(n);           // slot -> current node id
    std::vector<int> size(n, 1);          // slot -> cluster size
    std::vector<bool> alive(n, true);
    std::iota(active.begin(), active.end(), 0);

    out.merges.reserve(n - 1);
    for (int step = 0; step < n - 1; ++step) {
        // Global minimum; ties by lexicographically smallest (min id, max id).
        double best = std::numeric_limits<double>::infinity();
        int bi = -1, bj = -1;
        for (int i = 0; i < n; ++i) {
            if (!alive[i]) continue;
            for (int j = i + 1; j < n; ++j) {
                if (!alive[j]) continue;
                double v = d2[static_cast<size_t>(i) * n + j];
                if (v < best) {
                    best = v;
                    bi = i;
                    bj = j;
                } else if (v == best && bi >= 0) {
                    int lo = std::min(active[i], active[j]);
                    int hi = std::max(active[i], active[j]);
                    int cur_lo = std::min(active[bi], active[bj]);
                    int cur_hi = std::max(active[bi], active[bj]);
                    if (lo < cur_lo || (lo == cur_lo && hi < cur_hi)) {
                        bi = i;
                        bj = j;
                    }
                }
            }
        }

        Merge m;
        m.left = std::min(active[bi], active[bj]);
        m.right = std::max(active[bi], active[bj]);
        m.distance = std::sqrt(d2[static_cast<size_t>(bi) * n + bj]);
        m.size = size[bi] + size[bj];
        out.merges.push_back(m);

        // Ward update: d2(new, c) = ((a+c) d2(i,c) + (b+c) d2(j,c) - c d2(i,j))
        //                           / (a+b+c)
        double dij = d2[static_cast<size_t>(bi) * n + bj];
        double a = size[bi], b = size[bj];
        for (int c = 0; c < n; ++c) {
            if (!alive[c] || c == bi || c == bj) continue;
            double s = size[c];
            double dic = d2[static_cast<size_t>(bi) * n + c];
            double djc = d2[static_cast<size_t>(bj) * n + c];
            double v = ((a + s) * dic + (b + s) * djc - s * dij) / (a + b + s);
            d2[static_cast<size_t>(bi) * n + c] = v;
            d2[static_cast<size_t>(c) * n + bi] = v;
        }
        active[bi] = n + step;
        size[bi] = m.size;
        alive[bj] = false;
    }
    return out;
}

std::vector<int> cut_dendrogram(const Dendrogram& dendro, int k) {
    int n = dendro.n_leaves;
    if (k < 1 || k > n) {
        throw ParamError("cut_dendrogram: k=" + std::to_string(k) + " must be in [1, " +
                         std::to_string(n) + "]");
    }

    // Union-find over the first n-k merges.
    std::vector<int> parent(2 * n - 1);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&parent](int x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    for (int s = 0; s < n - k; ++s) {
        const Merge& m = dendro.merges[s];
        int node = n + s;
        parent[find(m.left)] = node;
        parent[find(m.right)] = node;
    }

    // Label clusters by ascending smallest member leaf id.
    std::vector<int> labels(n, -1);
    std::unordered_map<int, int> root_label;
    int next = 0;
    for (int i = 0; i < n; ++i) {
        int r = find(i);
        auto it = root_label.find(r);
        if (it == root_label.end()) {
            root_label.emplace(r, next);
            labels[i] = next;
            ++next;
        } else {
            labels[i] = it->second;
        }
    }
    return labels;
}

ClusterAssignment agglomerative(const Tensor& points, int k) {
    int n = points.rows();
    if (k < 1 || k > n) {
        throw ParamError("agglomerative: k=" + std::to_string(k) + " must be in [1, " +
                         std::to_string(n) + "]");
    }
    ClusterAssignment out;
    out.k = k;
    out.dendrogram = ward_linkage(points);
    out.labels = cut_dendrogram(out.dendrogram, k);
    return out;
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) {
        throw ConsistencyError("adjusted_rand_index: label vectors differ in length, " +
                               std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    }
    size_t n = a.size();
    if (n == 0) throw ParamError("adjusted_rand_index: empty labels");

    std::unordered_map<int, int> amap, bmap;
    for (int v : a) amap.emplace(v, static_cast<int>(amap.size()));
    for (int v : b) bmap.emplace(v, static_cast<int>(bmap.size()));
    size_t ka = amap.size(), kb = bmap.size();

    std::vector<long long> table(ka * kb, 0), asum(ka, 0), bsum(kb, 0);
    for (size_t i = 0; i < n; ++i) {
        int ai = amap[a[i]];
        int bi = bmap[b[i]];
        table[static_cast<size_t>(ai) * kb + bi] += 1;
        asum[ai] += 1;
        bsum[bi] += 1;
    }

    auto choose2 = [](long long x) { return 0.5 * static_cast<double>(x) * (x - 1); };
    double sum_ij = 0.0;
    for (long long v : table) sum_ij += choose2(v);
    double sum_a = 0.0;
    for (long long v : asum) sum_a += choose2(v);
    double sum_b = 0.0;
    for (long long v : bsum) sum_b += choose2(v);
    double total = choose2(static_cast<long long>(n));

    double expected = total > 0.0 ? sum_a * sum_b / total : 0.0;
    double denom = 0.5 * (sum_a + sum_b) - expected;
    if (denom == 0.0) {
        // Both partitions are degenerate the same way (all singletons or one
        // cluster); identical by construction.
        return 1.0;
    }
    return (sum_ij - expected) / denom;
}

void save_dendrogram(const std::filesystem::path& path, const Dendrogram& dendro) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << "left\tright\tdistance\tsize\n";
    char buf[64];
    for (const Merge& m : dendro.merges) {
        std::snprintf(buf, sizeof(buf), "%.17g", m.distance);
        out << m.left << '\t' << m.right << '\t' << buf << '\t' << m.size << '\n';
    }
}

}  // namespace senca
