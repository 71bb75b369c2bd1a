#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "senca/io.hpp"

namespace senca {

// Seeded synthetic tissue: a uniform spot grid split into contiguous
// rectangular regions with per-region gene signatures (functional channel)
// and per-region structural feature means (image channel). One designated
// region pair shares the structural mean but has disjoint gene signatures.
struct SyntheticSpec {
    int grid_w = 24;
    int grid_h = 24;
    int n_regions = 5;
    int n_genes = 120;
    int sig_genes_per_region = 10;
    double delta_f = 2.0;     // Poisson rate shift on signature genes
    double base_count = 1.0;  // background Poisson rate
    int struct_dim = 32;      // width of the emitted structural embeddings
    double delta_s = 1.5;     // norm of each region's structural mean
    double sigma_s = 0.5;     // per-coordinate structural noise
    uint64_t seed = 0;

    void validate() const;
};

SyntheticSpec load_synth_spec(const std::filesystem::path& path);
std::string synth_spec_to_string(const SyntheticSpec& spec);

struct SyntheticData {
    SpotTable spots;
    ExpressionMatrix expression;    // raw counts
    Tensor structural;              // n x struct_dim precomputed embeddings
    std::vector<int> region;        // truth region per spot
    std::pair<int, int> twin_pair;  // structurally identical regions
};

SyntheticData generate_synthetic(const SyntheticSpec& spec);

// Emits spots.tsv, expression.tsv, embeddings.f32 and labels.tsv into dir.
void write_synthetic_dataset(const SyntheticData& data, const std::filesystem::path& dir);

}  // namespace senca
