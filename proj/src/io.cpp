#include "cascade/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cascade/cost.hpp"

namespace cascade {

using json = nlohmann::json;

namespace {

constexpr std::string_view kBinaryExtension = ".f32le";

bool is_binary_path(const fs::path& path) { return path.extension() == kBinaryExtension; }

fs::path manifest_path(const fs::path& data_path) {
    fs::path p = data_path;
    p.replace_extension(".manifest.json");
    return p;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::ofstream open_for_write(const fs::path& path, std::ios::openmode mode = std::ios::out) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, mode | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(sep, start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    return s;
}

// Splits a file into non-empty lines.
std::vector<std::string_view> lines_of(std::string_view text) {
    std::vector<std::string_view> lines;
    for (auto line : split(text, '\n')) {
        line = trim(line);
        if (!line.empty()) lines.push_back(line);
    }
    return lines;
}

std::string row_error(const fs::path& path, std::size_t row, const std::string& what) {
    return path.string() + ": row " + std::to_string(row) + ": " + what;
}

json read_manifest(const fs::path& data_path) {
    const auto mpath = manifest_path(data_path);
    json m;
    try {
        m = json::parse(read_text(mpath));
    } catch (const json::exception& e) {
        throw DataError(mpath.string() + ": malformed manifest: " + e.what());
    }
    for (const char* key : {"n_samples", "n_labels"}) {
        if (!m.contains(key) || !m[key].is_number_unsigned()) {
            throw DataError(mpath.string() + ": manifest field '" + key + "' missing or invalid");
        }
    }
    return m;
}

void check_dims(std::size_t n, std::size_t l, const fs::path& path) {
    if (n < 1) throw DataError(path.string() + ": score matrix needs at least one sample");
    if (l < 2) throw DataError(path.string() + ": score matrix needs at least two labels");
}

ScoreMatrix load_scores_binary(const fs::path& path) {
    const json m = read_manifest(path);
    ScoreMatrix s;
    s.n_samples = m["n_samples"].get<std::size_t>();
    s.n_labels = m["n_labels"].get<std::size_t>();
    s.source_id = m.value("source_id", path.stem().string());
    check_dims(s.n_samples, s.n_labels, path);

    const std::string raw = read_text(path);
    const std::size_t expected = s.n_samples * s.n_labels * sizeof(float);
    if (raw.size() != expected) {
        throw DataError(path.string() + ": dimension mismatch, manifest declares " +
                        std::to_string(s.n_samples) + "x" + std::to_string(s.n_labels) +
                        " (" + std::to_string(expected) + " bytes) but file has " +
                        std::to_string(raw.size()) + " bytes");
    }
    s.scores.resize(s.n_samples * s.n_labels);
    for (std::size_t i = 0; i < s.scores.size(); ++i) {
        std::uint32_t bits;
        std::memcpy(&bits, raw.data() + i * 4, 4);
        if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
        const float v = std::bit_cast<float>(bits);
        if (!std::isfinite(v)) {
            throw DataError(row_error(path, i / s.n_labels, "non-finite value"));
        }
        s.scores[i] = v;
    }
    return s;
}

ScoreMatrix load_scores_csv(const fs::path& path) {
    const std::string text = read_text(path);
    const auto lines = lines_of(text);
    if (lines.empty()) throw DataError(path.string() + ": empty file");

    const auto header = split(lines[0], ',');
    if (header.size() < 3 || trim(header[0]) != "sample_id") {
        throw DataError(path.string() + ": malformed header, expected sample_id,s0,...");
    }
    for (std::size_t j = 1; j < header.size(); ++j) {
        if (trim(header[j]) != "s" + std::to_string(j - 1)) {
            throw DataError(path.string() + ": malformed header column " + std::to_string(j) +
                            " '" + std::string(header[j]) + "'");
        }
    }
    ScoreMatrix s;
    s.n_labels = header.size() - 1;
    s.n_samples = lines.size() - 1;
    s.source_id = path.stem().string();
    check_dims(s.n_samples, s.n_labels, path);
    s.scores.reserve(s.n_samples * s.n_labels);

    for (std::size_t r = 1; r < lines.size(); ++r) {
        const auto cells = split(lines[r], ',');
        if (cells.size() != header.size()) {
            throw DataError(row_error(path, r - 1,
                                      "expected " + std::to_string(header.size()) +
                                          " columns, found " + std::to_string(cells.size())));
        }
        for (std::size_t j = 1; j < cells.size(); ++j) {
            double v;
            try {
                v = parse_real(trim(cells[j]));
            } catch (const DataError&) {
                throw DataError(row_error(path, r - 1, "unparsable value '" +
                                                           std::string(cells[j]) + "'"));
            }
            if (!std::isfinite(v)) throw DataError(row_error(path, r - 1, "non-finite value"));
            s.scores.push_back(v);
        }
    }
    return s;
}

void validate_stage_count(const CascadeConfig& c) {
    if (c.stages.size() < 2) {
        throw DataError("cascade needs at least 2 stages, got " + std::to_string(c.stages.size()));
    }
    for (const auto& st : c.stages) {
        if (!(st.cost_ops > 0.0) || !std::isfinite(st.cost_ops)) {
            throw DataError("stage '" + st.name + "' must have a positive cost");
        }
    }
}

}  // namespace

std::string format_real(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

double parse_real(std::string_view s) {
    double v = 0.0;
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
        throw DataError("cannot parse number '" + std::string(s) + "'");
    }
    return v;
}

ScoreMatrix load_scores(const fs::path& path) {
    if (!fs::exists(path)) throw DataError("score file not found: " + path.string());
    return is_binary_path(path) ? load_scores_binary(path) : load_scores_csv(path);
}

void save_scores(const ScoreMatrix& s, const fs::path& path) {
    if (is_binary_path(path)) {
        std::string raw(s.scores.size() * sizeof(float), '\0');
        for (std::size_t i = 0; i < s.scores.size(); ++i) {
            auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(s.scores[i]));
            if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
            std::memcpy(raw.data() + i * 4, &bits, 4);
        }
        auto out = open_for_write(path, std::ios::binary);
        out.write(raw.data(), static_cast<std::streamsize>(raw.size()));
        json m = {{"n_samples", s.n_samples}, {"n_labels", s.n_labels}, {"source_id", s.source_id}};
        open_for_write(manifest_path(path)) << m.dump(2) << '\n';
        return;
    }
    auto out = open_for_write(path);
    out << "sample_id";
    for (std::size_t j = 0; j < s.n_labels; ++j) out << ",s" << j;
    out << '\n';
    for (std::size_t i = 0; i < s.n_samples; ++i) {
        out << i;
        for (double v : s.row(i)) out << ',' << format_real(v);
        out << '\n';
    }
}

ScoreShape probe_scores(const fs::path& path) {
    if (!fs::exists(path)) throw DataError("score file not found: " + path.string());
    if (is_binary_path(path)) {
        const json m = read_manifest(path);
        ScoreShape shape{m["n_samples"].get<std::size_t>(), m["n_labels"].get<std::size_t>()};
        const auto bytes = fs::file_size(path);
        if (bytes != shape.n_samples * shape.n_labels * sizeof(float)) {
            throw DataError(path.string() + ": dimension mismatch between manifest and file size");
        }
        return shape;
    }
    const std::string text = read_text(path);
    const auto lines = lines_of(text);
    if (lines.empty()) throw DataError(path.string() + ": empty file");
    const auto header = split(lines[0], ',');
    if (header.size() < 3 || trim(header[0]) != "sample_id") {
        throw DataError(path.string() + ": malformed header, expected sample_id,s0,...");
    }
    return {lines.size() - 1, header.size() - 1};
}

LabelVector load_labels(const fs::path& path, std::size_t n_labels) {
    const std::string text = read_text(path);
    const auto lines = lines_of(text);
    if (lines.empty() || lines[0] != "sample_id,label") {
        throw DataError(path.string() + ": malformed header, expected sample_id,label");
    }
    LabelVector lv;
    lv.n_labels = n_labels;
    lv.labels.reserve(lines.size() - 1);
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const auto cells = split(lines[r], ',');
        if (cells.size() != 2) throw DataError(row_error(path, r - 1, "expected 2 columns"));
        const auto cell = trim(cells[1]);
        long long label = 0;
        auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), label);
        if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
            throw DataError(row_error(path, r - 1, "unparsable label '" + std::string(cell) + "'"));
        }
        if (label < 0 || static_cast<std::size_t>(label) >= n_labels) {
            throw DataError(row_error(path, r - 1,
                                      "label " + std::to_string(label) + " out of range [0," +
                                          std::to_string(n_labels) + ")"));
        }
        lv.labels.push_back(static_cast<int>(label));
    }
    return lv;
}

void save_labels(const LabelVector& labels, const fs::path& path) {
    auto out = open_for_write(path);
    out << "sample_id,label\n";
    for (std::size_t i = 0; i < labels.labels.size(); ++i) out << i << ',' << labels.labels[i] << '\n';
}

CascadeConfig parse_config(const std::string& json_text, const fs::path& base_dir) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed config: ") + e.what());
    }
    if (!j.is_object()) throw DataError("config must be a JSON object");
    static const std::vector<std::string> known = {"stages",      "labels_path", "normalization",
                                                   "metric",      "grid",        "cost_scale"};
    for (const auto& [key, _] : j.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw DataError("unknown config key '" + key + "'");
        }
    }

    auto resolve = [&](const std::string& p) {
        fs::path path(p);
        return (path.is_absolute() ? path : (base_dir / path).lexically_normal()).string();
    };

    CascadeConfig c;
    try {
        if (j.contains("cost_scale")) {
            const auto& cs = j["cost_scale"];
            c.cost_preset = cs.value("preset", std::string("conservative"));
            c.scale = precision_scale_preset(c.cost_preset);
            c.scale.fx32_factor = cs.value("fx32_factor", c.scale.fx32_factor);
            c.scale.bin_divisor = cs.value("bin_divisor", c.scale.bin_divisor);
            if (!(c.scale.fx32_factor > 0.0) || !(c.scale.bin_divisor > 0.0)) {
                throw DataError("cost_scale factors must be positive");
            }
        }
        if (!j.contains("stages") || !j["stages"].is_array()) {
            throw DataError("config is missing the 'stages' array");
        }
        for (const auto& js : j["stages"]) {
            StageSpec st;
            st.name = js.at("name").get<std::string>();
            st.precision = parse_precision(js.value("precision", std::string("fp32")));
            st.scores_path = resolve(js.at("scores_path").get<std::string>());
            if (js.contains("macs")) {
                st.macs = js["macs"].get<double>();
                if (!(*st.macs > 0.0)) throw DataError("stage '" + st.name + "' macs must be > 0");
                st.cost_ops = scale_cost(*st.macs, st.precision, c.scale);
            } else if (js.contains("cost_ops")) {
                st.cost_ops = js["cost_ops"].get<double>();
            } else {
                throw DataError("stage '" + st.name + "' needs cost_ops or macs");
            }
            c.stages.push_back(std::move(st));
        }
        if (!j.contains("labels_path")) throw DataError("config is missing 'labels_path'");
        c.labels_path = resolve(j["labels_path"].get<std::string>());
        c.normalization = parse_normalization(j.value("normalization", std::string("softmax")));
        c.metric = parse_metric(j.value("metric", std::string("bvsb")));
        if (j.contains("grid")) {
            const auto& g = j["grid"];
            c.grid.points_per_stage = g.value("points_per_stage", c.grid.points_per_stage);
            c.grid.include_pass_all = g.value("include_pass_all", c.grid.include_pass_all);
            if (g.contains("explicit_values")) {
                c.grid.explicit_values = g["explicit_values"].get<std::vector<double>>();
            }
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("invalid config: ") + e.what());
    }
    validate_stage_count(c);
    (void)c.grid.values();  // throws on an invalid grid
    return c;
}

CascadeConfig load_config(const fs::path& path) {
    CascadeConfig c = parse_config(read_text(path), path.parent_path());

    std::optional<ScoreShape> shape;
    for (const auto& st : c.stages) {
        ScoreShape s = probe_scores(st.scores_path);
        if (shape && (s.n_samples != shape->n_samples || s.n_labels != shape->n_labels)) {
            throw DataError("stage '" + st.name + "' has " + std::to_string(s.n_samples) + "x" +
                            std::to_string(s.n_labels) + " scores, expected " +
                            std::to_string(shape->n_samples) + "x" +
                            std::to_string(shape->n_labels));
        }
        shape = s;
    }
    const LabelVector labels = load_labels(c.labels_path, shape->n_labels);
    if (labels.size() != shape->n_samples) {
        throw DataError("labels file has " + std::to_string(labels.size()) + " entries, scores have " +
                        std::to_string(shape->n_samples) + " samples");
    }
    return c;
}

std::string config_to_json(const CascadeConfig& c) {
    json j;
    j["stages"] = json::array();
    for (const auto& st : c.stages) {
        json js = {{"name", st.name},
                   {"precision", std::string(to_string(st.precision))},
                   {"scores_path", st.scores_path}};
        if (st.macs) {
            js["macs"] = *st.macs;
        } else {
            js["cost_ops"] = st.cost_ops;
        }
        j["stages"].push_back(js);
    }
    j["labels_path"] = c.labels_path;
    j["normalization"] = std::string(to_string(c.normalization));
    j["metric"] = std::string(to_string(c.metric));
    j["grid"] = {{"points_per_stage", c.grid.points_per_stage},
                 {"include_pass_all", c.grid.include_pass_all}};
    if (!c.grid.explicit_values.empty()) j["grid"]["explicit_values"] = c.grid.explicit_values;
    j["cost_scale"] = {{"preset", c.cost_preset},
                       {"fx32_factor", c.scale.fx32_factor},
                       {"bin_divisor", c.scale.bin_divisor}};
    return j.dump(2) + "\n";
}

void save_config(const CascadeConfig& config, const fs::path& path) {
    open_for_write(path) << config_to_json(config);
}

std::vector<std::string> config_warnings(const CascadeConfig& c) {
    std::vector<std::string> w;
    for (std::size_t i = 1; i < c.stages.size(); ++i) {
        if (!(c.stages[i].cost_ops > c.stages[i - 1].cost_ops)) {
            w.push_back("stage '" + c.stages[i].name + "' (cost " + format_real(c.stages[i].cost_ops) +
                        ") is not more expensive than preceding stage '" + c.stages[i - 1].name +
                        "' (cost " + format_real(c.stages[i - 1].cost_ops) +
                        "); stages should be sorted by increasing cost");
        }
    }
    return w;
}

void apply_cost_scale(CascadeConfig& config, const PrecisionScale& scale) {
    config.scale = scale;
    for (auto& st : config.stages) {
        if (st.macs) st.cost_ops = scale_cost(*st.macs, st.precision, scale);
    }
}

}  // namespace cascade
