#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "senca/tensor.hpp"

namespace senca {

struct Spot {
    std::string id;
    double x = 0.0;
    double y = 0.0;
};

// Parsed spots.tsv: header `spot_id\tx\ty`, one spot per row.
struct SpotTable {
    std::vector<Spot> spots;

    int size() const { return static_cast<int>(spots.size()); }
};

enum class ExprStage { raw, normalized, log, hvg_selected };

// Spots x genes matrix. `stage` tracks the preprocessing pipeline position;
// each preprocessing op asserts the stage it expects.
struct ExpressionMatrix {
    std::vector<std::string> spot_ids;
    std::vector<std::string> genes;
    Tensor values;  // spots x genes
    ExprStage stage = ExprStage::raw;

    int n_spots() const { return values.rows(); }
    int n_genes() const { return values.cols(); }
};

// 8-bit RGB raster, row-major, with a physical-units-per-pixel scale from the
// sidecar meta file.
struct ImageRaster {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> pixels;  // width*height*3
    double units_per_pixel = 1.0;

    uint8_t channel(int px, int py, int c) const {
        return pixels[(static_cast<size_t>(py) * width + px) * 3 + c];
    }
};

struct LabelTable {
    std::vector<std::string> spot_ids;
    std::vector<std::string> labels;
};

SpotTable load_spots(const std::filesystem::path& path);
void save_spots(const std::filesystem::path& path, const SpotTable& table);

ExpressionMatrix load_expression(const std::filesystem::path& path);
void save_expression(const std::filesystem::path& path, const ExpressionMatrix& m);

// Binary PPM (P6, maxval 255). The sidecar meta file holds `units_per_pixel`.
ImageRaster load_raster(const std::filesystem::path& ppm_path,
                        const std::filesystem::path& meta_path);
void save_raster(const std::filesystem::path& ppm_path,
                 const std::filesystem::path& meta_path, const ImageRaster& raster);

// embeddings.f32: two little-endian u64 (rows, cols), then rows*cols
// little-endian f32 values, row-major.
Tensor load_f32_matrix(const std::filesystem::path& path);
void save_f32_matrix(const std::filesystem::path& path, const Tensor& m);

LabelTable load_labels(const std::filesystem::path& path);
void save_labels(const std::filesystem::path& path, const LabelTable& table);

// Spot ids must agree between the spot table and the expression matrix
// (same set, same order after this call reorders expression rows to match).
// Throws ConsistencyError listing offending ids.
void align_expression_to_spots(const SpotTable& spots, ExpressionMatrix& expr);

}  // namespace senca
