#include "senca/model.hpp"

#include <cmath>

#include "senca/error.hpp"
#include "senca/rng.hpp"

namespace senca {

std::vector<Tensor*> ModelParams::all() {
    return {&w1,     &attn_q, &attn_k, &attn_v, &attn_o, &ln_gain, &ln_bias,
            &ff1_w,  &ff2_w,  &ff1_b,  &ff2_b,  &out_w,  &img_w1,  &img_b1,
            &img_w2, &img_b2, &proj_r, &proj_h, &q1,     &k1,      &v1,
            &q2,     &k2,     &v2,     &enc_w,  &enc_b,  &dec_w,   &dec_b};
}

std::vector<const Tensor*> ModelParams::all() const {
    auto mutable_list = const_cast<ModelParams*>(this)->all();
    return {mutable_list.begin(), mutable_list.end()};
}

namespace {

Tensor xavier(Rng& rng, int rows, int cols) {
    double bound = std::sqrt(6.0 / (rows + cols));
    Tensor t(rows, cols);
    for (size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-bound, bound);
    return t;
}

}  // namespace

ModelParams init_params(const ModelConfig& cfg, uint64_t seed) {
    if (cfg.n_genes < 1) throw ParamError("init_params: n_genes must be positive");
    if (cfg.image_feat_dim < 1) throw ParamError("init_params: image_feat_dim must be positive");
    Rng rng(seed);
    ModelParams p;
    int h = cfg.hidden_dim, e = cfg.embed_dim, l = cfg.latent_dim;

    p.w1 = xavier(rng, cfg.n_genes, h);
    p.attn_q = xavier(rng, h, h);
    p.attn_k = xavier(rng, h, h);
    p.attn_v = xavier(rng, h, h);
    p.attn_o = xavier(rng, h, h);
    p.ln_gain = Tensor(1, h);
    for (size_t i = 0; i < p.ln_gain.size(); ++i) p.ln_gain[i] = 1.0;
    p.ln_bias = Tensor(1, h);
    p.ff1_w = xavier(rng, h, h);
    p.ff2_w = xavier(rng, h, h);
    p.ff1_b = Tensor(1, h);
    p.ff2_b = Tensor(1, h);
    p.out_w = xavier(rng, h, e);

    if (cfg.image_mode == ImageMode::downsample_mlp) {
        p.img_w1 = xavier(rng, cfg.image_feat_dim, cfg.mlp_hidden);
        p.img_b1 = Tensor(1, cfg.mlp_hidden);
        p.img_w2 = xavier(rng, cfg.mlp_hidden, e);
        p.img_b2 = Tensor(1, e);
    } else {
        p.img_w1 = xavier(rng, cfg.image_feat_dim, e);
        p.img_b1 = Tensor(1, e);
        p.img_w2 = Tensor(0, 0);
        p.img_b2 = Tensor(0, 0);
    }

    p.proj_r = xavier(rng, e, e);
    p.proj_h = xavier(rng, e, e);
    p.q1 = xavier(rng, e, e);
    p.k1 = xavier(rng, e, e);
    p.v1 = xavier(rng, e, e);
    p.q2 = xavier(rng, e, e);
    p.k2 = xavier(rng, e, e);
    p.v2 = xavier(rng, e, e);

    p.enc_w = xavier(rng, 2 * e, l);
    p.enc_b = Tensor(1, l);
    p.dec_w = xavier(rng, l, 2 * e);
    p.dec_b = Tensor(1, 2 * e);
    return p;
}

ParamNodes bind_params(Tape& tape, const ModelParams& params) {
    ParamNodes nodes;
    auto list = params.all();
    nodes.values.reserve(list.size());
    for (const Tensor* t : list) {
        nodes.values.push_back(t->empty() ? Value{} : tape.param(*t));
    }
    return nodes;
}

Value rna_forward(Tape& tape, const SpotGraph& g, const ParamNodes& p, const ModelConfig& cfg,
                  bool training, uint64_t dropout_seed) {
    const Tensor& feats = g.features;
    if (feats.rows() != g.n) {
        throw ShapeError("rna_forward: graph features have " +
                         std::to_string(feats.rows()) + " rows for " + std::to_string(g.n) +
                         " spots");
    }
    if (feats.cols() != cfg.n_genes) {
        throw ShapeError("rna_forward: feature width " + std::to_string(feats.cols()) +
                         " does not match configured " + std::to_string(cfg.n_genes));
    }
    const auto& pv = p.values;

    Value x0 = tape.dropout(tape.constant(feats), cfg.dropout, dropout_seed, training);
    Value x1 = tape.matmul(x0, pv[ParamIndex::w1]);
    Value x2 = tape.row_mix(x1, normalized_adjacency(g));

    // Single-head self-attention over all spots.
    Value q = tape.matmul(x2, pv[ParamIndex::attn_q]);
    Value k = tape.matmul(x2, pv[ParamIndex::attn_k]);
    Value v = tape.matmul(x2, pv[ParamIndex::attn_v]);
    Value att = tape.softmax_rows(
        tape.scale(tape.matmul_nt(q, k), 1.0 / std::sqrt(static_cast<double>(cfg.hidden_dim))));
    Value sa = tape.matmul(tape.matmul(att, v), pv[ParamIndex::attn_o]);

    Value ln = tape.layer_norm(sa, pv[ParamIndex::ln_gain], pv[ParamIndex::ln_bias]);
    Value ff = tape.add_row(
        tape.matmul(tape.elu(tape.add_row(tape.matmul(ln, pv[ParamIndex::ff1_w]),
                                          pv[ParamIndex::ff1_b])),
                    pv[ParamIndex::ff2_w]),
        pv[ParamIndex::ff2_b]);

    // Residual skips the transformer block; activation after the sum.
    Value x3 = tape.elu(tape.add(x2, ff));
    return tape.matmul(x3, pv[ParamIndex::out_w]);
}

Value image_forward(Tape& tape, Value features, const ParamNodes& p, const ModelConfig& cfg) {
    const Tensor& fv = tape.value(features);
    if (fv.cols() != cfg.image_feat_dim) {
        throw ShapeError("image_forward: feature width " + std::to_string(fv.cols()) +
                         " does not match configured " + std::to_string(cfg.image_feat_dim));
    }
    const auto& pv = p.values;
    if (cfg.image_mode == ImageMode::downsample_mlp) {
        Value hidden = tape.elu(tape.add_row(tape.matmul(features, pv[ParamIndex::img_w1]),
                                             pv[ParamIndex::img_b1]));
        return tape.add_row(tape.matmul(hidden, pv[ParamIndex::img_w2]),
                            pv[ParamIndex::img_b2]);
    }
    return tape.add_row(tape.matmul(features, pv[ParamIndex::img_w1]), pv[ParamIndex::img_b1]);
}

CrossAttentionOut cross_attention_block(Tape& tape, Value r_block, Value h_block,
                                        const ParamNodes& p, const ModelConfig& cfg) {
    const Tensor& rv = tape.value(r_block);
    const Tensor& hv = tape.value(h_block);
    if (rv.rows() != hv.rows() || rv.cols() != cfg.embed_dim || hv.cols() != cfg.embed_dim) {
        throw ShapeError("cross_attention_block: blocks " + rv.shape_str() + " and " +
                         hv.shape_str() + " must both be rows x " +
                         std::to_string(cfg.embed_dim));
    }
    const auto& pv = p.values;
    double inv_sqrt_e = 1.0 / std::sqrt(static_cast<double>(cfg.embed_dim));

    Value r_proj = tape.matmul(r_block, pv[ParamIndex::proj_r]);
    Value h_proj = tape.matmul(h_block, pv[ParamIndex::proj_h]);

    // Queries from projected image, keys from projected RNA, values from the
    // unprojected RNA block.
    Value att1 = tape.softmax_rows(tape.scale(
        tape.matmul_nt(tape.matmul(h_proj, pv[ParamIndex::q1]),
                       tape.matmul(r_proj, pv[ParamIndex::k1])),
        inv_sqrt_e));
    Value a1 = tape.matmul(att1, tape.matmul(r_block, pv[ParamIndex::v1]));

    // The mirror image: queries from projected RNA, values from raw image.
    Value att2 = tape.softmax_rows(tape.scale(
        tape.matmul_nt(tape.matmul(r_proj, pv[ParamIndex::q2]),
                       tape.matmul(h_proj, pv[ParamIndex::k2])),
        inv_sqrt_e));
    Value a2 = tape.matmul(att2, tape.matmul(h_block, pv[ParamIndex::v2]));

    return {a1, a2, att1, att2};
}

FusionOut fuse_all(Tape& tape, Value rna, Value img, const SpotGraph& g, const ParamNodes& p,
                   const ModelConfig& cfg) {
    const Tensor& rv = tape.value(rna);
    const Tensor& hv = tape.value(img);
    if (rv.rows() != g.n || hv.rows() != g.n) {
        throw ShapeError("fuse_all: embedding row counts disagree with the graph");
    }
    if (rv.cols() != hv.cols()) {
        throw ShapeError("fuse_all: RNA and image embedding widths disagree, " +
                         rv.shape_str() + " vs " + hv.shape_str());
    }
    const auto& pv = p.values;

    Value enc_in;
    if (cfg.use_cross_attention) {
        std::vector<Value> rows;
        rows.reserve(g.n);
        for (int i = 0; i < g.n; ++i) {
            std::vector<int> nb = neighborhood(g, i);
            Value r_block = tape.gather_rows(rna, nb);
            Value h_block = tape.gather_rows(img, nb);
            CrossAttentionOut ca = cross_attention_block(tape, r_block, h_block, p, cfg);
            Value center1 = tape.gather_rows(ca.a1, {0});
            Value center2 = tape.gather_rows(ca.a2, {0});
            rows.push_back(tape.concat_cols(center1, center2));
        }
        enc_in = tape.concat_rows(rows);
    } else {
        // Ablation: attention weights bypassed, raw embeddings straight in.
        enc_in = tape.concat_cols(rna, img);
    }

    Value latent = tape.elu(
        tape.add_row(tape.matmul(enc_in, pv[ParamIndex::enc_w]), pv[ParamIndex::enc_b]));
    Value dec_out =
        tape.add_row(tape.matmul(latent, pv[ParamIndex::dec_w]), pv[ParamIndex::dec_b]);
    return {enc_in, latent, dec_out};
}

}  // namespace senca
