#include "senca/io.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "senca/error.hpp"

namespace senca {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    size_t start = 0;
    while (true) {
        size_t pos = line.find('\t', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::string chomp(std::string line) {
    while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.pop_back();
    return line;
}

double parse_double(const std::string& s, const std::string& file, size_t line_no) {
    try {
        size_t consumed = 0;
        double v = std::stod(s, &consumed);
        if (consumed != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ParseError(file + ":" + std::to_string(line_no) + ": not a number: '" + s + "'");
    }
}

std::ifstream open_text(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    return in;
}

void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw Error("cannot write " + tmp.string());
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

uint64_t read_u64_le(std::istream& in) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), 8);
    uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | buf[i];
    return v;
}

void write_u64_le(std::ostream& out, uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(buf), 8);
}

}  // namespace

SpotTable load_spots(const std::filesystem::path& path) {
    std::ifstream in = open_text(path);
    std::string file = path.string();
    std::string line;
    size_t line_no = 0;

    if (!std::getline(in, line)) throw ParseError(file + ": empty file");
    ++line_no;
    if (chomp(line) != "spot_id\tx\ty") {
        throw ParseError(file + ":1: expected header 'spot_id\\tx\\ty'");
    }

    SpotTable table;
    std::unordered_set<std::string> seen;
    while (std::getline(in, line)) {
        ++line_no;
        line = chomp(line);
        if (line.empty()) continue;
        auto fields = split_tabs(line);
        if (fields.size() != 3) {
            throw ParseError(file + ":" + std::to_string(line_no) + ": expected 3 fields, got " +
                             std::to_string(fields.size()));
        }
        Spot s;
        s.id = fields[0];
        s.x = parse_double(fields[1], file, line_no);
        s.y = parse_double(fields[2], file, line_no);
        if (!std::isfinite(s.x) || !std::isfinite(s.y)) {
            throw ParseError(file + ":" + std::to_string(line_no) + ": non-finite coordinate");
        }
        if (!seen.insert(s.id).second) {
            throw ParseError(file + ":" + std::to_string(line_no) + ": duplicate spot_id '" +
                             s.id + "'");
        }
        table.spots.push_back(std::move(s));
    }
    if (table.size() < 2) throw ParseError(file + ": need at least 2 spots");
    return table;
}

void save_spots(const std::filesystem::path& path, const SpotTable& table) {
    std::ostringstream out;
    out << "spot_id\tx\ty\n";
    char buf[64];
    for (const Spot& s : table.spots) {
        std::snprintf(buf, sizeof(buf), "%.17g\t%.17g", s.x, s.y);
        out << s.id << '\t' << buf << '\n';
    }
    write_text_atomic(path, out.str());
}

ExpressionMatrix load_expression(const std::filesystem::path& path) {
    std::ifstream in = open_text(path);
    std::string file = path.string();
    std::string line;
    size_t line_no = 0;

    if (!std::getline(in, line)) throw ParseError(file + ": empty file");
    ++line_no;
    auto header = split_tabs(chomp(line));
    if (header.size() < 2 || header[0] != "spot_id") {
        throw ParseError(file + ":1: expected header 'spot_id\\t<gene>...'");
    }

    ExpressionMatrix m;
    m.genes.assign(header.begin() + 1, header.end());
    size_t n_genes = m.genes.size();

    std::vector<double> data;
    std::unordered_set<std::string> seen;
    while (std::getline(in, line)) {
        ++line_no;
        line = chomp(line);
        if (line.empty()) continue;
        auto fields = split_tabs(line);
        if (fields.size() != n_genes + 1) {
            throw ParseError(file + ":" + std::to_string(line_no) + ": expected " +
                             std::to_string(n_genes + 1) + " fields, got " +
                             std::to_string(fields.size()));
        }
        if (!seen.insert(fields[0]).second) {
            throw ParseError(file + ":" + std::to_string(line_no) + ": duplicate spot_id '" +
                             fields[0] + "'");
        }
        m.spot_ids.push_back(fields[0]);
        for (size_t j = 1; j < fields.size(); ++j) {
            double v = parse_double(fields[j], file, line_no);
            if (v < 0.0) {
                throw ParseError(file + ":" + std::to_string(line_no) +
                                 ": negative count for gene '" + m.genes[j - 1] + "'");
            }
            data.push_back(v);
        }
    }
    if (m.spot_ids.empty()) throw ParseError(file + ": no expression rows");
    m.values = Tensor(static_cast<int>(m.spot_ids.size()), static_cast<int>(n_genes),
                      std::move(data));
    m.stage = ExprStage::raw;
    return m;
}

void save_expression(const std::filesystem::path& path, const ExpressionMatrix& m) {
    std::ostringstream out;
    out << "spot_id";
    for (const auto& g : m.genes) out << '\t' << g;
    out << '\n';
    char buf[64];
    for (int i = 0; i < m.n_spots(); ++i) {
        out << m.spot_ids[i];
        for (int j = 0; j < m.n_genes(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", m.values.at(i, j));
            out << '\t' << buf;
        }
        out << '\n';
    }
    write_text_atomic(path, out.str());
}

ImageRaster load_raster(const std::filesystem::path& ppm_path,
                        const std::filesystem::path& meta_path) {
    std::ifstream in(ppm_path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + ppm_path.string());

    std::string magic;
    in >> magic;
    if (magic != "P6") throw ParseError(ppm_path.string() + ": not a binary PPM (P6)");
    int width = 0, height = 0, maxval = 0;
    in >> width >> height >> maxval;
    if (!in || width <= 0 || height <= 0) {
        throw ParseError(ppm_path.string() + ": bad PPM dimensions");
    }
    if (maxval != 255) throw ParseError(ppm_path.string() + ": only maxval 255 supported");
    in.get();  // single whitespace after maxval

    ImageRaster raster;
    raster.width = width;
    raster.height = height;
    raster.pixels.resize(static_cast<size_t>(width) * height * 3);
    in.read(reinterpret_cast<char*>(raster.pixels.data()),
            static_cast<std::streamsize>(raster.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(raster.pixels.size())) {
        throw ParseError(ppm_path.string() + ": truncated pixel data");
    }

    std::ifstream meta = open_text(meta_path);
    std::string line;
    size_t line_no = 0;
    bool have_scale = false;
    while (std::getline(meta, line)) {
        ++line_no;
        line = chomp(line);
        if (line.empty()) continue;
        auto fields = split_tabs(line);
        if (fields.size() != 2) {
            throw ParseError(meta_path.string() + ":" + std::to_string(line_no) +
                             ": expected 'key\\tvalue'");
        }
        if (fields[0] == "units_per_pixel") {
            raster.units_per_pixel = parse_double(fields[1], meta_path.string(), line_no);
            if (raster.units_per_pixel <= 0.0) {
                throw ParseError(meta_path.string() + ":" + std::to_string(line_no) +
                                 ": units_per_pixel must be positive");
            }
            have_scale = true;
        }
    }
    if (!have_scale) {
        throw ParseError(meta_path.string() + ": missing units_per_pixel");
    }
    return raster;
}

void save_raster(const std::filesystem::path& ppm_path,
                 const std::filesystem::path& meta_path, const ImageRaster& raster) {
    {
        std::filesystem::path tmp = ppm_path;
        tmp += ".tmp";
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw Error("cannot write " + tmp.string());
        out << "P6\n" << raster.width << " " << raster.height << "\n255\n";
        out.write(reinterpret_cast<const char*>(raster.pixels.data()),
                  static_cast<std::streamsize>(raster.pixels.size()));
        out.close();
        std::filesystem::rename(tmp, ppm_path);
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "units_per_pixel\t%.17g\n", raster.units_per_pixel);
    write_text_atomic(meta_path, buf);
}

Tensor load_f32_matrix(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path.string());
    uint64_t rows = read_u64_le(in);
    uint64_t cols = read_u64_le(in);
    if (!in) throw ParseError(path.string() + ": truncated header");
    if (rows == 0 || cols == 0 || rows * cols > (1ULL << 32)) {
        throw ParseError(path.string() + ": implausible dimensions " + std::to_string(rows) +
                         "x" + std::to_string(cols));
    }
    std::vector<float> raw(rows * cols);
    in.read(reinterpret_cast<char*>(raw.data()),
            static_cast<std::streamsize>(raw.size() * sizeof(float)));
    if (in.gcount() != static_cast<std::streamsize>(raw.size() * sizeof(float))) {
        throw ParseError(path.string() + ": truncated matrix data");
    }
    Tensor out(static_cast<int>(rows), static_cast<int>(cols));
    for (size_t i = 0; i < raw.size(); ++i) out[i] = static_cast<double>(raw[i]);
    return out;
}

void save_f32_matrix(const std::filesystem::path& path, const Tensor& m) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw Error("cannot write " + tmp.string());
        write_u64_le(out, static_cast<uint64_t>(m.rows()));
        write_u64_le(out, static_cast<uint64_t>(m.cols()));
        std::vector<float> raw(m.size());
        for (size_t i = 0; i < m.size(); ++i) raw[i] = static_cast<float>(m[i]);
        out.write(reinterpret_cast<const char*>(raw.data()),
                  static_cast<std::streamsize>(raw.size() * sizeof(float)));
    }
    std::filesystem::rename(tmp, path);
}

LabelTable load_labels(const std::filesystem::path& path) {
    std::ifstream in = open_text(path);
    std::string file = path.string();
    std::string line;
    size_t line_no = 0;

    if (!std::getline(in, line)) throw ParseError(file + ": empty file");
    ++line_no;
    if (chomp(line) != "spot_id\tlabel") {
        throw ParseError(file + ":1: expected header 'spot_id\\tlabel'");
    }
    LabelTable table;
    std::unordered_set<std::string> seen;
    while (std::getline(in, line)) {
        ++line_no;
        line = chomp(line);
        if (line.empty()) continue;
        auto fields = split_tabs(line);
        if (fields.size() != 2) {
            throw ParseError(file + ":" + std::to_string(line_no) + ": expected 2 fields");
        }
        if (!seen.insert(fields[0]).second) {
            throw ParseError(file + ":" + std::to_string(line_no) + ": duplicate spot_id '" +
                             fields[0] + "'");
        }
        table.spot_ids.push_back(fields[0]);
        table.labels.push_back(fields[1]);
    }
    if (table.spot_ids.empty()) throw ParseError(file + ": no label rows");
    return table;
}

void save_labels(const std::filesystem::path& path, const LabelTable& table) {
    std::ostringstream out;
    out << "spot_id\tlabel\n";
    for (size_t i = 0; i < table.spot_ids.size(); ++i) {
        out << table.spot_ids[i] << '\t' << table.labels[i] << '\n';
    }
    write_text_atomic(path, out.str());
}

void align_expression_to_spots(const SpotTable& spots, ExpressionMatrix& expr) {
    std::unordered_map<std::string, int> expr_row;
    for (size_t i = 0; i < expr.spot_ids.size(); ++i) {
        expr_row[expr.spot_ids[i]] = static_cast<int>(i);
    }
    std::string missing;
    for (const Spot& s : spots.spots) {
        if (expr_row.find(s.id) == expr_row.end()) {
            missing += missing.empty() ? s.id : ", " + s.id;
        }
    }
    std::unordered_set<std::string> spot_ids;
    for (const Spot& s : spots.spots) spot_ids.insert(s.id);
    std::string extra;
    for (const auto& id : expr.spot_ids) {
        if (spot_ids.find(id) == spot_ids.end()) {
            extra += extra.empty() ? id : ", " + id;
        }
    }
    if (!missing.empty() || !extra.empty()) {
        std::string msg = "spot_id mismatch between spots and expression";
        if (!missing.empty()) msg += "; missing from expression: " + missing;
        if (!extra.empty()) msg += "; not in spot table: " + extra;
        throw ConsistencyError(msg);
    }

    Tensor reordered(spots.size(), expr.n_genes());
    std::vector<std::string> ids(spots.size());
    for (int i = 0; i < spots.size(); ++i) {
        int src = expr_row[spots.spots[i].id];
        ids[i] = spots.spots[i].id;
        for (int j = 0; j < expr.n_genes(); ++j) reordered.at(i, j) = expr.values.at(src, j);
    }
    expr.values = std::move(reordered);
    expr.spot_ids = std::move(ids);
}

}  // namespace senca
