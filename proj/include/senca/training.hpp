#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "senca/adam.hpp"
#include "senca/autograd.hpp"
#include "senca/graph.hpp"
#include "senca/model.hpp"

namespace senca {

struct TrainConfig {
    int epochs = 10;
    double lr = 5e-4;
    double lambda = 40.0;        // reconstruction weight
    double tau = 0.5;            // NT-Xent temperature
    double window_factor = 2.0;  // windowed-level side, in units of spot spacing
    double pool_factor = 4.0;    // pooled-level side
    double dropout = 0.2;
    uint64_t seed = 0;
    int k_neighbors = 4;
    int n_hvg = 500;
    int embed_dim = 128;
    int hidden_dim = 256;
    int latent_dim = 64;
    bool use_cross_attention = true;
    bool use_hierarchical = true;
    int steps_per_epoch = 20;

    void validate() const;
};

// Flat `key = value` config; keys are exactly the TrainConfig field names.
// Unknown keys are an error.
TrainConfig load_train_config(const std::filesystem::path& path);
std::string train_config_to_string(const TrainConfig& cfg);

// Partition of the spots into axis-aligned square windows of side
// factor * spacing over the bounding box. Groups are ordered row-major over
// the window grid; empty windows are dropped.
struct WindowGrid {
    double side = 0.0;
    std::vector<std::vector<int>> groups;
};

WindowGrid build_window_grid(const std::vector<std::array<double, 2>>& coords, double factor,
                             double spacing);

// Mean of member rows per window.
Value pool_embeddings(Tape& tape, Value embeddings, const WindowGrid& grid);

// SimCLR NT-Xent over the 2N-view batch formed by the rows of A and B
// (row i of A and row i of B are the positive pair). Rows are L2-normalized
// internally (cosine similarity). N >= 2 required.
Value nt_xent(Tape& tape, Value a, Value b, double tau);

struct LossValues {
    Value total;
    double nt_pooled = 0.0;
    double nt_windowed = 0.0;
    double mse = 0.0;  // unweighted reconstruction term
};

// Loss = NT-Xent(pooled H, pooled R) + NT-Xent(windowed H, windowed R)
//        + lambda * avg MSE(enc_in, dec_out).
// With use_hierarchical off, both NT-Xent terms are dropped.
LossValues total_loss(Tape& tape, Value rna, Value img, const FusionOut& fusion,
                      const WindowGrid& windowed, const WindowGrid& pooled,
                      const TrainConfig& cfg);

struct EpochLog {
    int epoch = 0;
    double nt_pooled = 0.0;
    double nt_windowed = 0.0;
    double mse = 0.0;
    double total = 0.0;
};

struct TrainResult {
    ModelParams params;
    Tensor rna;     // n x embed, eval mode
    Tensor image;   // n x embed
    Tensor latent;  // n x latent (shared embedding S)
    std::vector<EpochLog> log;
};

// Full-batch Adam training; deterministic for a given config/seed.
// image_features: n x d (d = kPatchFeatureDim for raster input, arbitrary for
// precomputed embeddings).
TrainResult train(const SpotGraph& graph, const Tensor& image_features, ImageMode image_mode,
                  const TrainConfig& cfg);

void save_train_log(const std::filesystem::path& path, const std::vector<EpochLog>& log);

}  // namespace senca
