#pragma once

// End-to-end pipeline shared by the CLI and the acceptance suite:
// standardize on the train split, train, encode, evaluate.

#include <vector>

#include "jmlh/checkpoint.hpp"
#include "jmlh/data.hpp"
#include "jmlh/model.hpp"
#include "jmlh/retrieval.hpp"

namespace jmlh {

/// A split dataset with features standardized by train-split statistics.
struct PreparedData {
    Standardizer standardizer;
    Matrix train_x;
    Labels train_y;
    Matrix query_x;
    Labels query_y;
    Matrix db_x;
    Labels db_y;
};

PreparedData prepare(const Dataset& ds);

struct ExperimentSettings {
    Index hidden_width = 512;
    Index code_length = 16;
    Variant variant = Variant::Full;
    EstimatorKind estimator = EstimatorKind::DistributionalDerivative;
    TrainConfig train;
    EvalOptions eval;
    /// Also evaluate the freshly initialized model before training.
    bool evaluate_untrained = false;
    /// Skip precision@k, P@H<=r and the P-R curve; only mAP is computed.
    bool map_only = false;
};

struct ExperimentResult {
    Checkpoint checkpoint;
    TrainSummary summary;
    double map_untrained = 0.0;
    EvalReport report;
    /// Plug-in I(code; label) on the train split; single-label data only.
    double mi_initial = 0.0;
    double mi_final = 0.0;
};

/// Model-initialization seed derived from the run seed, kept apart from the training stream.
std::uint64_t init_seed(std::uint64_t run_seed);

JmlhModel initial_model(const PreparedData& data, const ExperimentSettings& settings);

ExperimentResult run_experiment(const PreparedData& data, const ExperimentSettings& settings,
                                const StepCallback& on_step = {});

double median(std::vector<double> values);

}  // namespace jmlh
