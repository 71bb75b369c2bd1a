#pragma once

#include <cstdint>
#include <vector>

#include "senca/autograd.hpp"
#include "senca/graph.hpp"
#include "senca/tensor.hpp"

namespace senca {

enum class ImageMode { downsample_mlp, precomputed };

struct ModelConfig {
    int n_genes = 0;          // input width of the RNA branch (hvg-selected)
    int image_feat_dim = 0;   // input width of the image branch
    ImageMode image_mode = ImageMode::precomputed;
    int hidden_dim = 256;
    int embed_dim = 128;
    int latent_dim = 64;
    int mlp_hidden = 256;     // downsample_mlp middle width
    double dropout = 0.2;
    bool use_cross_attention = true;
};

// All trainable tensors. The order of all() is the canonical parameter order
// shared with the optimizer state.
struct ModelParams {
    // RNA branch (graph transformer)
    Tensor w1;                                  // genes x hidden
    Tensor attn_q, attn_k, attn_v, attn_o;      // hidden x hidden
    Tensor ln_gain, ln_bias;                    // 1 x hidden
    Tensor ff1_w, ff2_w;                        // hidden x hidden
    Tensor ff1_b, ff2_b;                        // 1 x hidden
    Tensor out_w;                               // hidden x embed
    // image branch
    Tensor img_w1, img_b1;                      // feat x mlp_hidden (or feat x embed)
    Tensor img_w2, img_b2;                      // mlp_hidden x embed (mlp mode only)
    // cross-attention
    Tensor proj_r, proj_h;                      // embed x embed
    Tensor q1, k1, v1, q2, k2, v2;              // embed x embed (key width E = embed)
    // shared encoder / decoder
    Tensor enc_w;                               // 2*embed x latent
    Tensor enc_b;                               // 1 x latent
    Tensor dec_w;                               // latent x 2*embed
    Tensor dec_b;                               // 1 x 2*embed

    std::vector<Tensor*> all();
    std::vector<const Tensor*> all() const;
};

// Xavier-uniform weights, zero biases, unit layer-norm gain; the draw order
// is the all() order, so a seed pins every weight.
ModelParams init_params(const ModelConfig& cfg, uint64_t seed);

// Tape-side handles for one forward/backward pass, same order as all().
struct ParamNodes {
    std::vector<Value> values;
};

ParamNodes bind_params(Tape& tape, const ModelParams& params);

// Graph transformer producing RNA embeddings, n x embed.
Value rna_forward(Tape& tape, const SpotGraph& g, const ParamNodes& p, const ModelConfig& cfg,
                  bool training, uint64_t dropout_seed);

// Image branch producing image embeddings, n x embed.
Value image_forward(Tape& tape, Value features, const ParamNodes& p, const ModelConfig& cfg);

struct CrossAttentionOut {
    Value a1, a2;      // (k+1) x embed attention outputs
    Value att1, att2;  // (k+1) x (k+1) attention weights
};

// Neighborhood cross-attention for one spot: queries from one modality's
// projected block, keys from the other's projected block, values from the
// other's unprojected block.
CrossAttentionOut cross_attention_block(Tape& tape, Value r_block, Value h_block,
                                        const ParamNodes& p, const ModelConfig& cfg);

struct FusionOut {
    Value enc_in;   // n x 2*embed (E rows)
    Value latent;   // n x latent  (S rows)
    Value dec_out;  // n x 2*embed (D rows)
};

// Runs cross-attention over every spot's neighborhood, concatenates the two
// center-row vectors, and applies the shared encoder/decoder. With
// use_cross_attention off, the raw (R_i, H_i) rows feed the encoder instead.
FusionOut fuse_all(Tape& tape, Value rna, Value img, const SpotGraph& g, const ParamNodes& p,
                   const ModelConfig& cfg);

// Index of a tensor inside ModelParams::all(); used to read gradients back.
struct ParamIndex {
    enum : int {
        w1 = 0, attn_q, attn_k, attn_v, attn_o, ln_gain, ln_bias,
        ff1_w, ff2_w, ff1_b, ff2_b, out_w,
        img_w1, img_b1, img_w2, img_b2,
        proj_r, proj_h, q1, k1, v1, q2, k2, v2,
        enc_w, enc_b, dec_w, dec_b,
        count
    };
};

}  // namespace senca
