#pragma once

#include <vector>

#include "senca/io.hpp"

namespace senca {

// Gene pipeline (fixed order, stage-checked): filter -> normalize_log -> hvg.

// Keeps exactly the genes whose column sum is >= min_total. Requires raw stage.
ExpressionMatrix filter_genes(const ExpressionMatrix& m, double min_total = 10.0);

// Scales each spot row to target_sum (zero rows stay zero), then log(1+x).
// Requires raw stage; result is log stage.
ExpressionMatrix normalize_log(const ExpressionMatrix& m, double target_sum = 1e4);

// Selects the n_hvg genes with the highest normalized dispersion: per-gene
// variance/mean computed on expm1 of the log values, z-scored within 20
// equal-frequency mean bins. Ties break by gene name. Keeps all genes (with a
// warning on stderr) when fewer than n_hvg survive. Requires log stage.
ExpressionMatrix select_hvg(const ExpressionMatrix& m, int n_hvg = 500);

struct Patch {
    int side = 0;                 // pixels, square
    std::vector<uint8_t> pixels;  // side*side*3, row-major RGB
};

// Square crop of side 2*degree*spacing (physical units, converted to pixels)
// centered on the spot; pixels outside the raster are edge-replicated.
Patch extract_patch(const ImageRaster& raster, const Spot& spot, double spacing,
                    int degree = 3);

// Average-pools the patch onto a 16x16 grid per channel, scales to [0,1],
// flattens channel-major (R plane, G plane, B plane): 768 values.
std::vector<double> featurize_patch(const Patch& patch);

constexpr int kPatchFeatureDim = 16 * 16 * 3;

// Featurizes one patch per spot; rows follow the spot table order.
Tensor featurize_all_patches(const ImageRaster& raster, const SpotTable& spots,
                             double spacing, int degree = 3);

}  // namespace senca
