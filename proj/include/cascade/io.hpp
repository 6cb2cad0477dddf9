#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cascade/types.hpp"

namespace cascade {

namespace fs = std::filesystem;

/// Loads a score matrix. Files ending in `.f32le` are read as raw little-endian
/// floats with a `<stem>.manifest.json` sidecar; everything else is parsed as
/// CSV with a `sample_id,s0,...` header.
ScoreMatrix load_scores(const fs::path& path);

/// Writes CSV or binary depending on the extension (see load_scores).
/// The binary format stores 32-bit floats, so values are rounded to float.
void save_scores(const ScoreMatrix& scores, const fs::path& path);

struct ScoreShape {
    std::size_t n_samples = 0;
    std::size_t n_labels = 0;
};

/// Reads only the dimensions of a score file (manifest or CSV row count).
ScoreShape probe_scores(const fs::path& path);

LabelVector load_labels(const fs::path& path, std::size_t n_labels);
void save_labels(const LabelVector& labels, const fs::path& path);

/// Parses a JSON cascade config. Relative paths are resolved against the
/// config file's directory; stage score files must exist and agree on N and L.
CascadeConfig load_config(const fs::path& path);

/// Parses the config without touching the referenced data files.
CascadeConfig parse_config(const std::string& json_text, const fs::path& base_dir);

void save_config(const CascadeConfig& config, const fs::path& path);
std::string config_to_json(const CascadeConfig& config);

/// Non-fatal findings, e.g. stages not sorted by increasing cost.
std::vector<std::string> config_warnings(const CascadeConfig& config);

/// Recomputes cost_ops of every stage that declares macs.
void apply_cost_scale(CascadeConfig& config, const PrecisionScale& scale);

/// Shortest decimal text that parses back to the same double.
std::string format_real(double v);
double parse_real(std::string_view s);

}  // namespace cascade
