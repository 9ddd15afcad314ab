#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "jmlh/data.hpp"
#include "jmlh/experiment.hpp"

namespace jmlh::cli {

/// Everything one run needs. Loaded from JSON; unknown keys are rejected.
///
/// {
///   "dataset": "path.bhf",                 // or "blobs": {...}; exactly one
///   "blobs": {"classes", "dim", "per_class", "center_scale", "noise_scale", "seed"},
///   "split": {"queries_per_class", "train_per_class"},   // omit to keep stored roles
///   "model": {"hidden_width", "code_length", "variant", "estimator"},
///   "train": {"lambda", "learning_rate", "batch_size", "epochs", "max_iters",
///             "mc_samples", "patience", "min_delta"},
///   "eval":  {"map_k", "precision_ks", "radius", "skip_empty_balls"},
///   "seed": 0,
///   "seeds": [0, 1, 2, 3, 4],
///   "output_dir": "runs/blobs"
/// }
struct RunConfig {
    std::optional<std::filesystem::path> dataset;
    BlobSpec blobs;
    bool resplit = true;
    Index queries_per_class = 10;
    Index train_per_class = 50;
    ExperimentSettings settings;
    std::uint64_t seed = 0;
    std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
    std::filesystem::path output_dir = "out";
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& path);

/// The dataset for run seed `seed`: loaded or generated, then split.
/// Blob data use blobs.seed + seed; the split uses `seed`.
Dataset materialize_dataset(const RunConfig& config, std::uint64_t seed);

/// Settings with the training seed set to `seed`.
ExperimentSettings settings_for_seed(const RunConfig& config, std::uint64_t seed);

}  // namespace jmlh::cli
