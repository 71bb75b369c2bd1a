#include "senca/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "senca/error.hpp"
#include "senca/rng.hpp"

namespace senca {

void TrainConfig::validate() const {
    if (epochs < 0) throw ParamError("config: epochs must be >= 0");
    if (lr <= 0.0) throw ParamError("config: lr must be positive");
    if (lambda < 0.0) throw ParamError("config: lambda must be >= 0");
    if (tau <= 0.0) throw ParamError("config: tau must be positive");
    if (!(pool_factor > window_factor) || window_factor < 1.0) {
        throw ParamError("config: need pool_factor > window_factor >= 1");
    }
    if (dropout < 0.0 || dropout >= 1.0) throw ParamError("config: dropout must be in [0, 1)");
    if (k_neighbors < 1) throw ParamError("config: k_neighbors must be >= 1");
    if (n_hvg < 1) throw ParamError("config: n_hvg must be >= 1");
    if (embed_dim < 1 || hidden_dim < 1 || latent_dim < 1) {
        throw ParamError("config: dimensions must be positive");
    }
    if (steps_per_epoch < 1) throw ParamError("config: steps_per_epoch must be >= 1");
}

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

bool parse_bool(const std::string& v, const std::string& key, size_t line_no) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ParseError("config:" + std::to_string(line_no) + ": bad boolean for " + key);
}

}  // namespace

TrainConfig load_train_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    TrainConfig cfg;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        size_t eq = s.find('=');
        if (eq == std::string::npos) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) +
                             ": expected 'key = value'");
        }
        std::string key = trim(s.substr(0, eq));
        std::string val = trim(s.substr(eq + 1));
        try {
            if (key == "epochs") cfg.epochs = std::stoi(val);
            else if (key == "lr") cfg.lr = std::stod(val);
            else if (key == "lambda") cfg.lambda = std::stod(val);
            else if (key == "tau") cfg.tau = std::stod(val);
            else if (key == "window_factor") cfg.window_factor = std::stod(val);
            else if (key == "pool_factor") cfg.pool_factor = std::stod(val);
            else if (key == "dropout") cfg.dropout = std::stod(val);
            else if (key == "seed") cfg.seed = std::stoull(val);
            else if (key == "k_neighbors") cfg.k_neighbors = std::stoi(val);
            else if (key == "n_hvg") cfg.n_hvg = std::stoi(val);
            else if (key == "embed_dim") cfg.embed_dim = std::stoi(val);
            else if (key == "hidden_dim") cfg.hidden_dim = std::stoi(val);
            else if (key == "latent_dim") cfg.latent_dim = std::stoi(val);
            else if (key == "use_cross_attention")
                cfg.use_cross_attention = parse_bool(val, key, line_no);
            else if (key == "use_hierarchical")
                cfg.use_hierarchical = parse_bool(val, key, line_no);
            else if (key == "steps_per_epoch") cfg.steps_per_epoch = std::stoi(val);
            else
                throw ParseError(path.string() + ":" + std::to_string(line_no) +
                                 ": unknown key '" + key + "'");
        } catch (const ParseError&) {
            throw;
        } catch (const std::exception&) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) +
                             ": bad value for '" + key + "'");
        }
    }
    cfg.validate();
    return cfg;
}

std::string train_config_to_string(const TrainConfig& cfg) {
    std::ostringstream out;
    char buf[64];
    auto num = [&buf](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    out << "epochs = " << cfg.epochs << '\n';
    out << "lr = " << num(cfg.lr) << '\n';
    out << "lambda = " << num(cfg.lambda) << '\n';
    out << "tau = " << num(cfg.tau) << '\n';
    out << "window_factor = " << num(cfg.window_factor) << '\n';
    out << "pool_factor = " << num(cfg.pool_factor) << '\n';
    out << "dropout = " << num(cfg.dropout) << '\n';
    out << "seed = " << cfg.seed << '\n';
    out << "k_neighbors = " << cfg.k_neighbors << '\n';
    out << "n_hvg = " << cfg.n_hvg << '\n';
    out << "embed_dim = " << cfg.embed_dim << '\n';
    out << "hidden_dim = " << cfg.hidden_dim << '\n';
    out << "latent_dim = " << cfg.latent_dim << '\n';
    out << "use_cross_attention = " << (cfg.use_cross_attention ? "true" : "false") << '\n';
    out << "use_hierarchical = " << (cfg.use_hierarchical ? "true" : "false") << '\n';
    out << "steps_per_epoch = " << cfg.steps_per_epoch << '\n';
    return out.str();
}

WindowGrid build_window_grid(const std::vector<std::array<double, 2>>& coords, double factor,
                             double spacing) {
    if (coords.empty()) throw ParamError("build_window_grid: no spots");
    if (factor < 1.0 || spacing <= 0.0) {
        throw ParamError("build_window_grid: need factor >= 1 and positive spacing");
    }
    double side = factor * spacing;
    double xmin = coords[0][0], ymin = coords[0][1], xmax = coords[0][0], ymax = coords[0][1];
    for (const auto& c : coords) {
        xmin = std::min(xmin, c[0]);
        xmax = std::max(xmax, c[0]);
        ymin = std::min(ymin, c[1]);
        ymax = std::max(ymax, c[1]);
    }
    int nx = std::max(1, static_cast<int>(std::floor((xmax - xmin) / side)) + 1);
    int ny = std::max(1, static_cast<int>(std::floor((ymax - ymin) / side)) + 1);

    std::vector<std::vector<int>> cells(static_cast<size_t>(nx) * ny);
    for (size_t i = 0; i < coords.size(); ++i) {
        int wx = std::min(nx - 1, static_cast<int>(std::floor((coords[i][0] - xmin) / side)));
        int wy = std::min(ny - 1, static_cast<int>(std::floor((coords[i][1] - ymin) / side)));
        cells[static_cast<size_t>(wy) * nx + wx].push_back(static_cast<int>(i));
    }

    WindowGrid grid;
    grid.side = side;
    for (auto& cell : cells) {
        if (!cell.empty()) grid.groups.push_back(std::move(cell));
    }
    return grid;
}

Value pool_embeddings(Tape& tape, Value embeddings, const WindowGrid& grid) {
    return tape.mean_rows_by_group(embeddings, grid.groups);
}

Value nt_xent(Tape& tape, Value a, Value b, double tau) {
    const Tensor& av = tape.value(a);
    const Tensor& bv = tape.value(b);
    if (av.rows() != bv.rows() || av.cols() != bv.cols()) {
        throw ShapeError("nt_xent: views must match, " + av.shape_str() + " vs " +
                         bv.shape_str());
    }
    int n = av.rows();
    if (n < 2) throw ParamError("nt_xent: need at least 2 pairs, got " + std::to_string(n));
    if (tau <= 0.0) throw ParamError("nt_xent: temperature must be positive");

    int m = 2 * n;
    Value z = tape.l2_normalize_rows(tape.concat_rows({a, b}));
    Value sim = tape.scale(tape.matmul_nt(z, z), 1.0 / tau);

    // Self-similarities drop out of every denominator.
    Tensor diag_mask(m, m);
    for (int i = 0; i < m; ++i) diag_mask.at(i, i) = -1e9;
    Value masked = tape.add(sim, tape.constant(std::move(diag_mask)));

    Tensor pos_mask(m, m);
    for (int i = 0; i < n; ++i) {
        pos_mask.at(i, n + i) = 1.0;
        pos_mask.at(n + i, i) = 1.0;
    }
    Value positives = tape.row_sums(tape.mul(masked, tape.constant(std::move(pos_mask))));
    Value lse = tape.logsumexp_rows(masked);
    return tape.scale(tape.sum(tape.sub(lse, positives)), 1.0 / static_cast<double>(m));
}

LossValues total_loss(Tape& tape, Value rna, Value img, const FusionOut& fusion,
                      const WindowGrid& windowed, const WindowGrid& pooled,
                      const TrainConfig& cfg) {
    LossValues out;
    Value recon = tape.mse(fusion.enc_in, fusion.dec_out);
    out.mse = tape.value(recon).scalar_value();

    Value loss = tape.scale(recon, cfg.lambda);
    if (cfg.use_hierarchical) {
        if (pooled.groups.size() < 2 || windowed.groups.size() < 2) {
            throw ParamError("total_loss: each window level needs at least 2 non-empty windows");
        }
        Value nt_p = nt_xent(tape, pool_embeddings(tape, img, pooled),
                             pool_embeddings(tape, rna, pooled), cfg.tau);
        Value nt_w = nt_xent(tape, pool_embeddings(tape, img, windowed),
                             pool_embeddings(tape, rna, windowed), cfg.tau);
        out.nt_pooled = tape.value(nt_p).scalar_value();
        out.nt_windowed = tape.value(nt_w).scalar_value();
        loss = tape.add(tape.add(nt_p, nt_w), loss);
    } else if (cfg.lambda == 0.0) {
        std::cerr << "warning: lambda = 0 with hierarchical learning off leaves nothing to "
                     "optimize\n";
    }
    out.total = loss;
    return out;
}

namespace {

struct ForwardOutputs {
    Value rna, img;
    FusionOut fusion;
};

ForwardOutputs run_forward(Tape& tape, const SpotGraph& graph, const Tensor& image_features,
                           const ParamNodes& nodes, const ModelConfig& mcfg, bool training,
                           uint64_t dropout_seed) {
    ForwardOutputs out;
    out.rna = rna_forward(tape, graph, nodes, mcfg, training, dropout_seed);
    out.img = image_forward(tape, tape.constant(image_features), nodes, mcfg);
    out.fusion = fuse_all(tape, out.rna, out.img, graph, nodes, mcfg);
    return out;
}

}  // namespace

TrainResult train(const SpotGraph& graph, const Tensor& image_features, ImageMode image_mode,
                  const TrainConfig& cfg) {
    cfg.validate();
    if (image_features.rows() != graph.n) {
        throw ShapeError("train: image features have " + std::to_string(image_features.rows()) +
                         " rows for " + std::to_string(graph.n) + " spots");
    }

    ModelConfig mcfg;
    mcfg.n_genes = graph.features.cols();
    mcfg.image_feat_dim = image_features.cols();
    mcfg.image_mode = image_mode;
    mcfg.hidden_dim = cfg.hidden_dim;
    mcfg.embed_dim = cfg.embed_dim;
    mcfg.latent_dim = cfg.latent_dim;
    mcfg.dropout = cfg.dropout;
    mcfg.use_cross_attention = cfg.use_cross_attention;

    TrainResult result;
    result.params = init_params(mcfg, cfg.seed);

    WindowGrid windowed = build_window_grid(graph.coords, cfg.window_factor, graph.spacing);
    WindowGrid pooled = build_window_grid(graph.coords, cfg.pool_factor, graph.spacing);

    std::vector<Tensor*> params = result.params.all();
    AdamState adam(params, AdamConfig{cfg.lr, 0.9, 0.999, 1e-8});

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        EpochLog entry;
        entry.epoch = epoch;
        for (int step = 1; step <= cfg.steps_per_epoch; ++step) {
            Tape tape;
            ParamNodes nodes = bind_params(tape, result.params);
            uint64_t drop_seed =
                mix_seed(cfg.seed, static_cast<uint64_t>(epoch) * 1000003ULL +
                                       static_cast<uint64_t>(step));
            ForwardOutputs fwd =
                run_forward(tape, graph, image_features, nodes, mcfg, true, drop_seed);
            LossValues loss = total_loss(tape, fwd.rna, fwd.img, fwd.fusion, windowed, pooled,
                                         cfg);
            double total = tape.value(loss.total).scalar_value();
            if (!std::isfinite(total)) {
                throw NumericError(
                    "train: non-finite loss at epoch " + std::to_string(epoch) + " step " +
                    std::to_string(step) + " (nt_pooled=" + std::to_string(loss.nt_pooled) +
                    ", nt_windowed=" + std::to_string(loss.nt_windowed) +
                    ", mse=" + std::to_string(loss.mse) + ")");
            }
            tape.backward(loss.total);
            std::vector<Tensor> grads;
            grads.reserve(nodes.values.size());
            for (Value v : nodes.values) {
                grads.push_back(v.valid() ? tape.grad(v) : Tensor());
            }
            adam.step(params, grads);

            entry.nt_pooled = loss.nt_pooled;
            entry.nt_windowed = loss.nt_windowed;
            entry.mse = loss.mse;
            entry.total = total;
        }
        result.log.push_back(entry);
    }

    // Final eval-mode pass for the persisted embeddings.
    Tape tape;
    ParamNodes nodes = bind_params(tape, result.params);
    ForwardOutputs fwd = run_forward(tape, graph, image_features, nodes, mcfg, false, 0);
    result.rna = tape.value(fwd.rna);
    result.image = tape.value(fwd.img);
    result.latent = tape.value(fwd.fusion.latent);
    return result;
}

void save_train_log(const std::filesystem::path& path, const std::vector<EpochLog>& log) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << "epoch\tntxent_pooled\tntxent_windowed\tmse\ttotal\n";
    char buf[160];
    for (const EpochLog& e : log) {
        std::snprintf(buf, sizeof(buf), "%d\t%.12g\t%.12g\t%.12g\t%.12g\n", e.epoch,
                      e.nt_pooled, e.nt_windowed, e.mse, e.total);
        out << buf;
    }
}

}  // namespace senca
