#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "senca/cluster.hpp"
#include "senca/error.hpp"
#include "senca/graph.hpp"
#include "senca/io.hpp"
#include "senca/kernels.hpp"
#include "senca/preprocess.hpp"
#include "senca/stats.hpp"
#include "senca/synth.hpp"
#include "senca/training.hpp"
#include "senca/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

void write_manifest(const fs::path& path, json manifest, Clock::time_point start) {
    manifest["version"] = senca::kVersion;
    manifest["duration_seconds"] =
        std::chrono::duration<double>(Clock::now() - start).count();
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw senca::Error("cannot write " + tmp.string());
        out << manifest.dump(2) << '\n';
    }
    fs::rename(tmp, path);
}

json path_list(std::initializer_list<fs::path> paths) {
    json arr = json::array();
    for (const auto& p : paths) arr.push_back(p.string());
    return arr;
}

int run_synth(const std::string& spec_path, const std::string& out_dir, bool seed_set,
              uint64_t seed) {
    auto start = Clock::now();
    senca::SyntheticSpec spec;
    if (!spec_path.empty()) spec = senca::load_synth_spec(spec_path);
    if (seed_set) spec.seed = seed;

    senca::SyntheticData data = senca::generate_synthetic(spec);
    fs::path out(out_dir);
    senca::write_synthetic_dataset(data, out);

    json manifest;
    manifest["command"] = "synth";
    manifest["seed"] = spec.seed;
    manifest["config"] = senca::synth_spec_to_string(spec);
    manifest["inputs"] = json::object();
    if (!spec_path.empty()) manifest["inputs"]["spec"] = spec_path;
    manifest["outputs"] = path_list({out / "spots.tsv", out / "expression.tsv",
                                     out / "embeddings.f32", out / "labels.tsv"});
    write_manifest(out / "manifest.json", manifest, start);
    std::cout << "synth: " << data.spots.size() << " spots, " << spec.n_regions
              << " regions -> " << out_dir << "\n";
    return 0;
}

int run_train(const std::string& config_path, const std::string& data_dir,
              const std::string& out_dir, bool seed_set, uint64_t seed, bool dump_graph) {
    auto start = Clock::now();
    senca::TrainConfig cfg;
    if (!config_path.empty()) cfg = senca::load_train_config(config_path);
    if (seed_set) cfg.seed = seed;
    cfg.validate();

    fs::path data(data_dir);
    senca::SpotTable spots = senca::load_spots(data / "spots.tsv");
    senca::ExpressionMatrix expr = senca::load_expression(data / "expression.tsv");
    senca::align_expression_to_spots(spots, expr);

    expr = senca::filter_genes(expr, 10.0);
    expr = senca::normalize_log(expr, 1e4);
    expr = senca::select_hvg(expr, cfg.n_hvg);

    senca::SpotGraph graph = senca::build_knn(spots, cfg.k_neighbors);
    graph.features = expr.values;

    senca::Tensor image_features;
    senca::ImageMode mode;
    if (fs::exists(data / "embeddings.f32")) {
        image_features = senca::load_f32_matrix(data / "embeddings.f32");
        mode = senca::ImageMode::precomputed;
        if (image_features.rows() != spots.size()) {
            throw senca::ConsistencyError(
                "embeddings.f32 has " + std::to_string(image_features.rows()) + " rows for " +
                std::to_string(spots.size()) + " spots");
        }
    } else if (fs::exists(data / "image.ppm")) {
        senca::ImageRaster raster =
            senca::load_raster(data / "image.ppm", data / "image.meta.tsv");
        image_features =
            senca::featurize_all_patches(raster, spots, graph.spacing, /*degree=*/3);
        mode = senca::ImageMode::downsample_mlp;
    } else {
        throw senca::ParseError("no image channel in " + data_dir +
                                ": expected embeddings.f32 or image.ppm");
    }

    senca::TrainResult result = senca::train(graph, image_features, mode, cfg);

    fs::path out(out_dir);
    fs::create_directories(out);
    senca::save_f32_matrix(out / "shared_latent.f32", result.latent);
    senca::save_f32_matrix(out / "rna_embeddings.f32", result.rna);
    senca::save_f32_matrix(out / "image_embeddings.f32", result.image);
    senca::save_train_log(out / "train_log.tsv", result.log);
    if (dump_graph) senca::save_graph_tsv(out / "graph.tsv", graph);

    json manifest;
    manifest["command"] = "train";
    manifest["seed"] = cfg.seed;
    manifest["config"] = senca::train_config_to_string(cfg);
    manifest["inputs"] = {{"data", data_dir},
                          {"image_mode", mode == senca::ImageMode::precomputed
                                             ? "precomputed"
                                             : "downsample_mlp"}};
    if (!config_path.empty()) manifest["inputs"]["config"] = config_path;
    manifest["outputs"] =
        path_list({out / "shared_latent.f32", out / "rna_embeddings.f32",
                   out / "image_embeddings.f32", out / "train_log.tsv"});
    write_manifest(out / "manifest.json", manifest, start);

    if (!result.log.empty()) {
        std::cout << "train: " << cfg.epochs << " epochs, final loss "
                  << result.log.back().total << " -> " << out_dir << "\n";
    } else {
        std::cout << "train: 0 epochs (initialized model) -> " << out_dir << "\n";
    }
    return 0;
}

int run_segment(const std::string& latent_path, int k, const std::string& out_dir,
                const std::string& spots_path) {
    auto start = Clock::now();
    senca::Tensor latent = senca::load_f32_matrix(latent_path);

    std::vector<std::string> ids;
    if (!spots_path.empty()) {
        senca::SpotTable spots = senca::load_spots(spots_path);
        if (spots.size() != latent.rows()) {
            throw senca::ConsistencyError("spot table has " + std::to_string(spots.size()) +
                                          " rows, latent has " + std::to_string(latent.rows()));
        }
        for (const auto& s : spots.spots) ids.push_back(s.id);
    } else {
        for (int i = 0; i < latent.rows(); ++i) ids.push_back(std::to_string(i));
    }

    senca::ClusterAssignment assignment = senca::agglomerative(latent, k);

    fs::path out(out_dir);
    fs::create_directories(out);
    senca::LabelTable labels;
    labels.spot_ids = ids;
    for (int lbl : assignment.labels) labels.labels.push_back(std::to_string(lbl));
    senca::save_labels(out / "clusters.tsv", labels);
    senca::save_dendrogram(out / "dendrogram.tsv", assignment.dendrogram);

    json manifest;
    manifest["command"] = "segment";
    manifest["inputs"] = {{"latent", latent_path}, {"k", k}};
    if (!spots_path.empty()) manifest["inputs"]["spots"] = spots_path;
    manifest["outputs"] = path_list({out / "clusters.tsv", out / "dendrogram.tsv"});
    write_manifest(out / "manifest.json", manifest, start);
    std::cout << "segment: " << latent.rows() << " spots into " << k << " clusters -> "
              << out_dir << "\n";
    return 0;
}

int run_evaluate(const std::string& pred_path, const std::string& truth_path,
                 const std::string& out_path) {
    auto start = Clock::now();
    senca::LabelTable pred = senca::load_labels(pred_path);
    senca::LabelTable truth = senca::load_labels(truth_path);

    std::unordered_map<std::string, std::string> truth_by_id;
    for (size_t i = 0; i < truth.spot_ids.size(); ++i) {
        truth_by_id[truth.spot_ids[i]] = truth.labels[i];
    }

    // Pairwise-complete: spots without a truth label are dropped.
    std::vector<int> a, b;
    std::unordered_map<std::string, int> amap, bmap;
    for (size_t i = 0; i < pred.spot_ids.size(); ++i) {
        auto it = truth_by_id.find(pred.spot_ids[i]);
        if (it == truth_by_id.end()) continue;
        auto ia = amap.emplace(pred.labels[i], static_cast<int>(amap.size()));
        auto ib = bmap.emplace(it->second, static_cast<int>(bmap.size()));
        a.push_back(ia.first->second);
        b.push_back(ib.first->second);
    }
    if (a.empty()) {
        throw senca::ConsistencyError("evaluate: no spot ids shared between " + pred_path +
                                      " and " + truth_path);
    }

    double ari = senca::adjusted_rand_index(a, b);
    char line[64];
    std::snprintf(line, sizeof(line), "ari=%.6f\n", ari);
    {
        fs::path tmp(out_path + ".tmp");
        std::ofstream out(tmp);
        if (!out) throw senca::Error("cannot write " + tmp.string());
        out << line;
        out.close();
        fs::rename(tmp, out_path);
    }

    json manifest;
    manifest["command"] = "evaluate";
    manifest["inputs"] = {{"pred", pred_path}, {"truth", truth_path}};
    manifest["outputs"] = path_list({out_path});
    manifest["spots_compared"] = a.size();
    write_manifest(fs::path(out_path + ".manifest.json"), manifest, start);
    std::cout << line;
    return 0;
}

int run_markers(const std::string& expr_path, const std::string& labels_path, int top_m,
                const std::string& out_path, double min_total) {
    auto start = Clock::now();
    senca::ExpressionMatrix expr = senca::load_expression(expr_path);
    senca::LabelTable labels = senca::load_labels(labels_path);

    std::unordered_map<std::string, std::string> label_by_id;
    for (size_t i = 0; i < labels.spot_ids.size(); ++i) {
        label_by_id[labels.spot_ids[i]] = labels.labels[i];
    }
    std::vector<std::string> row_labels;
    std::string missing;
    for (const auto& id : expr.spot_ids) {
        auto it = label_by_id.find(id);
        if (it == label_by_id.end()) {
            missing += missing.empty() ? id : ", " + id;
        } else {
            row_labels.push_back(it->second);
        }
    }
    if (!missing.empty()) {
        throw senca::ConsistencyError("markers: spots without labels: " + missing);
    }

    expr = senca::filter_genes(expr, min_total);
    expr = senca::normalize_log(expr, 1e4);
    std::vector<senca::MarkerResult> markers = senca::marker_table(expr, row_labels, top_m);
    senca::save_markers(out_path, markers);

    json manifest;
    manifest["command"] = "markers";
    manifest["inputs"] = {{"expression", expr_path}, {"labels", labels_path}, {"top", top_m}};
    manifest["outputs"] = path_list({out_path});
    write_manifest(fs::path(out_path + ".manifest.json"), manifest, start);
    std::cout << "markers: " << markers.size() << " rows -> " << out_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    senca::kern::init_threads_from_env();

    CLI::App app{"senca: multimodal spatial region segmentation"};
    app.set_version_flag("--version", std::string("senca ") + senca::kVersion);
    app.require_subcommand(1);

    uint64_t seed = 0;
    bool seed_set = false;

    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
    std::string synth_spec, synth_out;
    synth->add_option("--spec", synth_spec, "synthetic spec file (key = value)")
        ->check(CLI::ExistingFile);
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--seed", seed, "override the spec seed")
        ->each([&seed_set](const std::string&) { seed_set = true; });

    auto* train = app.add_subcommand("train", "train the model on a dataset directory");
    std::string train_config, train_data, train_out;
    bool dump_graph = false;
    train->add_option("--config", train_config, "training config file (key = value)")
        ->check(CLI::ExistingFile);
    train->add_option("--data", train_data, "dataset directory")
        ->required()
        ->check(CLI::ExistingDirectory);
    train->add_option("--out", train_out, "output directory")->required();
    train->add_option("--seed", seed, "override the config seed")
        ->each([&seed_set](const std::string&) { seed_set = true; });
    train->add_flag("--dump-graph", dump_graph, "write graph.tsv edge list");

    auto* segment = app.add_subcommand("segment", "cluster a latent matrix");
    std::string seg_latent, seg_out, seg_spots;
    int seg_k = 0;
    segment->add_option("--latent", seg_latent, "latent matrix (.f32)")
        ->required()
        ->check(CLI::ExistingFile);
    segment->add_option("--k", seg_k, "number of clusters")->required();
    segment->add_option("--out", seg_out, "output directory")->required();
    segment->add_option("--spots", seg_spots, "spot table supplying output ids")
        ->check(CLI::ExistingFile);

    auto* evaluate = app.add_subcommand("evaluate", "ARI between predictions and truth");
    std::string eval_pred, eval_truth, eval_out;
    evaluate->add_option("--pred", eval_pred, "predicted labels.tsv")
        ->required()
        ->check(CLI::ExistingFile);
    evaluate->add_option("--truth", eval_truth, "ground-truth labels.tsv")
        ->required()
        ->check(CLI::ExistingFile);
    evaluate->add_option("--out", eval_out, "output metrics file")->required();

    auto* markers = app.add_subcommand("markers", "Wilcoxon marker genes per cluster");
    std::string mk_expr, mk_labels, mk_out;
    int mk_top = 5;
    double mk_min_total = 10.0;
    markers->add_option("--expression", mk_expr, "raw expression.tsv")
        ->required()
        ->check(CLI::ExistingFile);
    markers->add_option("--labels", mk_labels, "cluster labels.tsv")
        ->required()
        ->check(CLI::ExistingFile);
    markers->add_option("--top", mk_top, "markers per cluster (default 5)");
    markers->add_option("--out", mk_out, "output markers.tsv")->required();
    markers->add_option("--min-total", mk_min_total, "gene count filter (default 10)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (synth->parsed()) return run_synth(synth_spec, synth_out, seed_set, seed);
        if (train->parsed())
            return run_train(train_config, train_data, train_out, seed_set, seed, dump_graph);
        if (segment->parsed()) return run_segment(seg_latent, seg_k, seg_out, seg_spots);
        if (evaluate->parsed()) return run_evaluate(eval_pred, eval_truth, eval_out);
        if (markers->parsed())
            return run_markers(mk_expr, mk_labels, mk_top, mk_out, mk_min_total);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
