#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "jmlh/checkpoint.hpp"
#include "jmlh/retrieval.hpp"
#include "run_config.hpp"

namespace jmlh::cli {

namespace fs = std::filesystem;

/// Log verbosity from the JMLH_LOG environment variable: quiet, info (default) or debug.
enum class LogLevel { Quiet, Info, Debug };
LogLevel log_level_from_env();

/// Trains one model at config.seed. Writes checkpoint.jmlh, train_log.csv and
/// dataset.bhf (the split dataset the model was trained on) into out_dir.
Checkpoint cmd_train(const RunConfig& config, const fs::path& out_dir);

enum class EncodeRole { Query, Database, Train, All };
EncodeRole parse_encode_role(const std::string& name);

/// Encodes the chosen rows of a dataset with a checkpoint and writes BHC1 codes.
PackedCodes cmd_encode(const fs::path& checkpoint, const fs::path& dataset, EncodeRole role, const fs::path& out);

/// Evaluates query codes against database codes. Labels come from the dataset's
/// query rows and database rows. Writes report.json, precision_at_k.csv and pr_curve.csv.
EvalReport cmd_eval(const fs::path& query_codes, const fs::path& db_codes, const fs::path& dataset,
                    const EvalOptions& options, const fs::path& out_dir);

std::string report_json(const EvalReport& report, Index queries, Index database);

enum class SweepAxis { Lambda, CodeLength };
SweepAxis parse_sweep_axis(const std::string& name);

struct SweepPoint {
    double value;
    double median_map;
    std::vector<double> per_seed;
};

/// For each value: train and evaluate mAP on every config seed; writes sweep_<axis>.csv
/// with header `<axis>,map` holding the median over seeds.
std::vector<SweepPoint> cmd_sweep(const RunConfig& config, SweepAxis axis, const std::vector<double>& values,
                                  const fs::path& out_dir);

struct AblationRow {
    Variant variant;
    double median_map;
    std::vector<double> per_seed;
};

/// All five variants on every config seed; writes ablation.csv (`variant,median,seed_<s>...`).
std::vector<AblationRow> cmd_ablate(const RunConfig& config, const fs::path& out_dir);

/// Writes the dataset for config.seed (generated or loaded, then split) to `out`.
void cmd_make_data(const RunConfig& config, const fs::path& out);

/// mAP of one full train-and-evaluate run, as used by sweep and ablate.
double run_map(const RunConfig& config, const ExperimentSettings& settings, std::uint64_t seed);

}  // namespace jmlh::cli
