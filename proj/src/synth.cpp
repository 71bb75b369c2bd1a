#include "senca/synth.hpp"

#include <cmath>
#include <fstream>
#include <string>

#include "senca/error.hpp"
#include "senca/rng.hpp"

namespace senca {

void SyntheticSpec::validate() const {
    if (grid_w < 2 || grid_h < 2) throw ParamError("synth: grid must be at least 2x2");
    if (n_regions < 4) throw ParamError("synth: need at least 4 regions");
    if (n_genes < n_regions * sig_genes_per_region) {
        throw ParamError("synth: n_genes must cover the disjoint signature blocks (" +
                         std::to_string(n_regions * sig_genes_per_region) + " needed)");
    }
    if (sig_genes_per_region < 1) throw ParamError("synth: signature block must be non-empty");
    if (delta_f < 0.0 || base_count < 0.0) throw ParamError("synth: rates must be >= 0");
    if (delta_f + base_count <= 0.0) {
        throw ParamError("synth: expression rates are all zero");
    }
    if (struct_dim < 1) throw ParamError("synth: struct_dim must be positive");
    if (sigma_s < 0.0 || delta_s < 0.0) throw ParamError("synth: noise must be >= 0");
    int n_top = n_regions / 2;
    int n_bottom = n_regions - n_top;
    if (grid_w < n_top || grid_w < n_bottom) {
        throw ParamError("synth: grid too narrow for the region layout");
    }
}

namespace {

// Two horizontal bands; the top band is split into n_regions/2 column slices,
// the bottom band into the rest. Every cell is covered exactly once.
int region_of(const SyntheticSpec& spec, int col, int row) {
    int n_top = spec.n_regions / 2;
    int n_bottom = spec.n_regions - n_top;
    int band_rows = spec.grid_h / 2;
    if (row < band_rows) {
        int slice = std::min(n_top - 1, col * n_top / spec.grid_w);
        return slice;
    }
    int slice = std::min(n_bottom - 1, col * n_bottom / spec.grid_w);
    return n_top + slice;
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);

    SyntheticData data;
    data.twin_pair = {1, spec.n_regions - 2};

    int n = spec.grid_w * spec.grid_h;
    data.spots.spots.reserve(n);
    data.region.reserve(n);
    for (int row = 0; row < spec.grid_h; ++row) {
        for (int col = 0; col < spec.grid_w; ++col) {
            Spot s;
            s.id = std::to_string(row * spec.grid_w + col);
            s.x = static_cast<double>(col);
            s.y = static_cast<double>(row);
            data.spots.spots.push_back(std::move(s));
            data.region.push_back(region_of(spec, col, row));
        }
    }

    // Structural means: unit directions scaled to delta_s; the twin pair
    // shares one direction.
    std::vector<std::vector<double>> struct_mean(spec.n_regions,
                                                 std::vector<double>(spec.struct_dim, 0.0));
    for (int r = 0; r < spec.n_regions; ++r) {
        double norm2 = 0.0;
        for (int d = 0; d < spec.struct_dim; ++d) {
            struct_mean[r][d] = rng.normal();
            norm2 += struct_mean[r][d] * struct_mean[r][d];
        }
        double scale = norm2 > 0.0 ? spec.delta_s / std::sqrt(norm2) : 0.0;
        for (int d = 0; d < spec.struct_dim; ++d) struct_mean[r][d] *= scale;
    }
    struct_mean[data.twin_pair.second] = struct_mean[data.twin_pair.first];

    data.expression.spot_ids.reserve(n);
    data.expression.genes.reserve(spec.n_genes);
    for (int g = 0; g < spec.n_genes; ++g) {
        char name[16];
        std::snprintf(name, sizeof(name), "g%03d", g);
        data.expression.genes.emplace_back(name);
    }
    data.expression.values = Tensor(n, spec.n_genes);
    data.expression.stage = ExprStage::raw;
    data.structural = Tensor(n, spec.struct_dim);

    for (int i = 0; i < n; ++i) {
        int r = data.region[i];
        data.expression.spot_ids.push_back(data.spots.spots[i].id);
        int sig_lo = r * spec.sig_genes_per_region;
        int sig_hi = sig_lo + spec.sig_genes_per_region;
        for (int g = 0; g < spec.n_genes; ++g) {
            double rate = spec.base_count + (g >= sig_lo && g < sig_hi ? spec.delta_f : 0.0);
            data.expression.values.at(i, g) = static_cast<double>(rng.poisson(rate));
        }
        for (int d = 0; d < spec.struct_dim; ++d) {
            data.structural.at(i, d) = struct_mean[r][d] + spec.sigma_s * rng.normal();
        }
    }
    return data;
}

void write_synthetic_dataset(const SyntheticData& data, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    save_spots(dir / "spots.tsv", data.spots);
    save_expression(dir / "expression.tsv", data.expression);
    save_f32_matrix(dir / "embeddings.f32", data.structural);
    LabelTable truth;
    truth.spot_ids.reserve(data.spots.spots.size());
    truth.labels.reserve(data.spots.spots.size());
    for (size_t i = 0; i < data.spots.spots.size(); ++i) {
        truth.spot_ids.push_back(data.spots.spots[i].id);
        truth.labels.push_back(std::to_string(data.region[i]));
    }
    save_labels(dir / "labels.tsv", truth);
}

SyntheticSpec load_synth_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    SyntheticSpec spec;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        size_t a = line.find_first_not_of(" \t\r");
        if (a == std::string::npos) continue;
        size_t b = line.find_last_not_of(" \t\r");
        std::string s = line.substr(a, b - a + 1);
        if (s.empty() || s[0] == '#') continue;
        size_t eq = s.find('=');
        if (eq == std::string::npos) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) +
                             ": expected 'key = value'");
        }
        auto trim = [](std::string v) {
            size_t x = v.find_first_not_of(" \t");
            size_t y = v.find_last_not_of(" \t");
            return x == std::string::npos ? std::string() : v.substr(x, y - x + 1);
        };
        std::string key = trim(s.substr(0, eq));
        std::string val = trim(s.substr(eq + 1));
        try {
            if (key == "grid_w") spec.grid_w = std::stoi(val);
            else if (key == "grid_h") spec.grid_h = std::stoi(val);
            else if (key == "n_regions") spec.n_regions = std::stoi(val);
            else if (key == "n_genes") spec.n_genes = std::stoi(val);
            else if (key == "sig_genes_per_region") spec.sig_genes_per_region = std::stoi(val);
            else if (key == "delta_f") spec.delta_f = std::stod(val);
            else if (key == "base_count") spec.base_count = std::stod(val);
            else if (key == "struct_dim") spec.struct_dim = std::stoi(val);
            else if (key == "delta_s") spec.delta_s = std::stod(val);
            else if (key == "sigma_s") spec.sigma_s = std::stod(val);
            else if (key == "seed") spec.seed = std::stoull(val);
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
    spec.validate();
    return spec;
}

std::string synth_spec_to_string(const SyntheticSpec& spec) {
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "grid_w = %d\ngrid_h = %d\nn_regions = %d\nn_genes = %d\n"
                  "sig_genes_per_region = %d\ndelta_f = %.17g\nbase_count = %.17g\n"
                  "struct_dim = %d\ndelta_s = %.17g\nsigma_s = %.17g\nseed = %llu\n",
                  spec.grid_w, spec.grid_h, spec.n_regions, spec.n_genes,
                  spec.sig_genes_per_region, spec.delta_f, spec.base_count, spec.struct_dim,
                  spec.delta_s, spec.sigma_s,
                  static_cast<unsigned long long>(spec.seed));
    return std::string(buf);
}

}  // namespace senca
