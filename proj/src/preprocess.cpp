#include "senca/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

#include "senca/error.hpp"
#include "senca/kernels.hpp"

namespace senca {

namespace {

void require_stage(const ExpressionMatrix& m, ExprStage want, const char* op) {
    if (m.stage != want) {
        throw ParamError(std::string(op) + ": expression matrix is at the wrong pipeline stage");
    }
}

ExpressionMatrix keep_columns(const ExpressionMatrix& m, const std::vector<int>& cols) {
    ExpressionMatrix out;
    out.spot_ids = m.spot_ids;
    out.stage = m.stage;
    out.genes.reserve(cols.size());
    for (int c : cols) out.genes.push_back(m.genes[c]);
    out.values = Tensor(m.n_spots(), static_cast<int>(cols.size()));
    for (int i = 0; i < m.n_spots(); ++i) {
        for (size_t j = 0; j < cols.size(); ++j) {
            out.values.at(i, static_cast<int>(j)) = m.values.at(i, cols[j]);
        }
    }
    return out;
}

}  // namespace

ExpressionMatrix filter_genes(const ExpressionMatrix& m, double min_total) {
    require_stage(m, ExprStage::raw, "filter_genes");
    std::vector<int> keep;
    for (int j = 0; j < m.n_genes(); ++j) {
        double total = 0.0;
        for (int i = 0; i < m.n_spots(); ++i) total += m.values.at(i, j);
        if (total >= min_total) keep.push_back(j);
    }
    if (keep.empty()) {
        throw ParamError("filter_genes: no gene reaches total count " +
                         std::to_string(min_total));
    }
    return keep_columns(m, keep);
}

ExpressionMatrix normalize_log(const ExpressionMatrix& m, double target_sum) {
    require_stage(m, ExprStage::raw, "normalize_log");
    ExpressionMatrix out = m;
    for (int i = 0; i < m.n_spots(); ++i) {
        double total = 0.0;
        for (int j = 0; j < m.n_genes(); ++j) total += m.values.at(i, j);
        double factor = total > 0.0 ? target_sum / total : 0.0;
        for (int j = 0; j < m.n_genes(); ++j) {
            out.values.at(i, j) = std::log1p(m.values.at(i, j) * factor);
        }
    }
    out.stage = ExprStage::log;
    return out;
}

ExpressionMatrix select_hvg(const ExpressionMatrix& m, int n_hvg) {
    require_stage(m, ExprStage::log, "select_hvg");
    if (n_hvg < 1) throw ParamError("select_hvg: n_hvg must be positive");
    int n_genes = m.n_genes();
    int n_spots = m.n_spots();

    if (n_hvg >= n_genes) {
        if (n_hvg > n_genes) {
            std::cerr << "warning: select_hvg asked for " << n_hvg << " genes but only "
                      << n_genes << " available; keeping all\n";
        }
        ExpressionMatrix out = m;
        out.stage = ExprStage::hvg_selected;
        return out;
    }

    // Mean and dispersion (variance/mean) on the de-logged values.
    std::vector<double> mean(n_genes), disp(n_genes);
    for (int j = 0; j < n_genes; ++j) {
        double s = 0.0, ss = 0.0;
        for (int i = 0; i < n_spots; ++i) {
            double v = std::expm1(m.values.at(i, j));
            s += v;
            ss += v * v;
        }
        double mu = s / n_spots;
        double var = ss / n_spots - mu * mu;
        if (var < 0.0) var = 0.0;
        mean[j] = mu;
        disp[j] = mu > 0.0 ? var / mu : 0.0;
    }

    // 20 equal-frequency bins by mean; z-score dispersion within each bin.
    std::vector<int> order(n_genes);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (mean[a] != mean[b]) return mean[a] < mean[b];
        return m.genes[a] < m.genes[b];
    });
    const int n_bins = 20;
    std::vector<int> bin_of(n_genes);
    for (int r = 0; r < n_genes; ++r) {
        bin_of[order[r]] = static_cast<int>(static_cast<long long>(r) * n_bins / n_genes);
    }
    std::vector<double> bin_sum(n_bins, 0.0), bin_ss(n_bins, 0.0);
    std::vector<int> bin_count(n_bins, 0);
    for (int j = 0; j < n_genes; ++j) {
        bin_sum[bin_of[j]] += disp[j];
        bin_ss[bin_of[j]] += disp[j] * disp[j];
        bin_count[bin_of[j]] += 1;
    }
    std::vector<double> z(n_genes);
    for (int j = 0; j < n_genes; ++j) {
        int b = bin_of[j];
        double mu = bin_sum[b] / bin_count[b];
        double var = bin_ss[b] / bin_count[b] - mu * mu;
        double sd = var > 0.0 ? std::sqrt(var) : 0.0;
        z[j] = sd > 0.0 ? (disp[j] - mu) / sd : 0.0;
    }

    std::vector<int> rank(n_genes);
    std::iota(rank.begin(), rank.end(), 0);
    std::sort(rank.begin(), rank.end(), [&](int a, int b) {
        if (z[a] != z[b]) return z[a] > z[b];
        return m.genes[a] < m.genes[b];
    });
    std::vector<int> keep(rank.begin(), rank.begin() + n_hvg);
    std::sort(keep.begin(), keep.end());  // preserve original column order

    ExpressionMatrix out = keep_columns(m, keep);
    out.stage = ExprStage::hvg_selected;
    return out;
}

Patch extract_patch(const ImageRaster& raster, const Spot& spot, double spacing, int degree) {
    if (degree < 1) throw ParamError("extract_patch: degree must be >= 1");
    if (spacing <= 0.0) throw ParamError("extract_patch: spacing must be positive");
    double upp = raster.units_per_pixel;
    int cx = static_cast<int>(std::lround(spot.x / upp));
    int cy = static_cast<int>(std::lround(spot.y / upp));
    if (cx < 0 || cx >= raster.width || cy < 0 || cy >= raster.height) {
        throw BoundsError("extract_patch: spot '" + spot.id + "' center (" +
                          std::to_string(cx) + ", " + std::to_string(cy) +
                          ") outside raster " + std::to_string(raster.width) + "x" +
                          std::to_string(raster.height));
    }
    int side = std::max(1, static_cast<int>(std::lround(2.0 * degree * spacing / upp)));

    Patch patch;
    patch.side = side;
    patch.pixels.resize(static_cast<size_t>(side) * side * 3);
    int x0 = cx - side / 2;
    int y0 = cy - side / 2;
    for (int py = 0; py < side; ++py) {
        int sy = std::clamp(y0 + py, 0, raster.height - 1);
        for (int px = 0; px < side; ++px) {
            int sx = std::clamp(x0 + px, 0, raster.width - 1);
            for (int c = 0; c < 3; ++c) {
                patch.pixels[(static_cast<size_t>(py) * side + px) * 3 + c] =
                    raster.channel(sx, sy, c);
            }
        }
    }
    return patch;
}

std::vector<double> featurize_patch(const Patch& patch) {
    if (patch.side < 1) throw ParamError("featurize_patch: empty patch");
    const int grid = 16;
    std::vector<double> feats(kPatchFeatureDim, 0.0);
    for (int c = 0; c < 3; ++c) {
        for (int gy = 0; gy < grid; ++gy) {
            // Adaptive pooling windows: [floor(g*side/grid), ceil((g+1)*side/grid))
            int y0 = gy * patch.side / grid;
            int y1 = ((gy + 1) * patch.side + grid - 1) / grid;
            for (int gx = 0; gx < grid; ++gx) {
                int x0 = gx * patch.side / grid;
                int x1 = ((gx + 1) * patch.side + grid - 1) / grid;
                double acc = 0.0;
                for (int py = y0; py < y1; ++py) {
                    for (int px = x0; px < x1; ++px) {
                        acc += patch.pixels[(static_cast<size_t>(py) * patch.side + px) * 3 + c];
                    }
                }
                double count = static_cast<double>((y1 - y0) * (x1 - x0));
                feats[static_cast<size_t>(c) * grid * grid + gy * grid + gx] =
                    acc / (count * 255.0);
            }
        }
    }
    return feats;
}

Tensor featurize_all_patches(const ImageRaster& raster, const SpotTable& spots,
                             double spacing, int degree) {
    int n = spots.size();
    Tensor out(n, kPatchFeatureDim);
    // Bounds-check every spot up front so failures are not thrown mid-parallel.
    for (const Spot& s : spots.spots) {
        double upp = raster.units_per_pixel;
        int cx = static_cast<int>(std::lround(s.x / upp));
        int cy = static_cast<int>(std::lround(s.y / upp));
        if (cx < 0 || cx >= raster.width || cy < 0 || cy >= raster.height) {
            throw BoundsError("featurize_all_patches: spot '" + s.id + "' outside raster");
        }
    }
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        Patch p = extract_patch(raster, spots.spots[i], spacing, degree);
        std::vector<double> f = featurize_patch(p);
        for (int j = 0; j < kPatchFeatureDim; ++j) out.at(i, j) = f[j];
    }
    return out;
}

}  // namespace senca
