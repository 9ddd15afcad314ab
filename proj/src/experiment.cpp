#include "jmlh/experiment.hpp"

#include <algorithm>

namespace jmlh {

PreparedData prepare(const Dataset& ds) {
    const auto train_rows = ds.train_rows();
    const auto query_rows = ds.query_rows();
    const auto db_rows = ds.database_rows();
    if (train_rows.empty()) throw InputError("dataset has no train rows");
    if (query_rows.empty()) throw InputError("dataset has no query rows");
    if (db_rows.empty()) throw InputError("dataset has no database rows");

    PreparedData p;
    p.standardizer = Standardizer::fit(select_rows(ds.features, train_rows));
    p.train_x = p.standardizer.apply(select_rows(ds.features, train_rows));
    p.query_x = p.standardizer.apply(select_rows(ds.features, query_rows));
    p.db_x = p.standardizer.apply(select_rows(ds.features, db_rows));
    p.train_y = ds.labels.select(train_rows);
    p.query_y = ds.labels.select(query_rows);
    p.db_y = ds.labels.select(db_rows);
    return p;
}

std::uint64_t init_seed(std::uint64_t run_seed) { return RngStream(run_seed ^ 0x6A09E667F3BCC909ULL).next_u64(); }

JmlhModel initial_model(const PreparedData& data, const ExperimentSettings& settings) {
    ModelSpec spec;
    spec.input_dim = data.train_x.cols();
    spec.hidden_width = settings.hidden_width;
    spec.code_length = settings.code_length;
    spec.label_width = data.train_y.num_classes;
    spec.label_mode = data.train_y.mode;
    spec.estimator = settings.estimator;
    spec.variant = settings.variant;
    RngStream rng(init_seed(settings.train.seed));
    return make_model(spec, rng);
}

namespace {

double evaluate_map(const JmlhModel& model, const PreparedData& data, const EvalOptions& eval) {
    const PackedCodes queries = pack_codes(encode_dataset(model, data.query_x));
    const PackedCodes db = pack_codes(encode_dataset(model, data.db_x));
    const RelevanceJudge judge(data.query_y, data.db_y);
    return mean_ap(queries, db, judge, eval.map_k);
}

double train_mi(const JmlhModel& model, const PreparedData& data) {
    if (data.train_y.mode != LabelMode::Single) return 0.0;
    return mutual_information_estimate(encode_dataset(model, data.train_x), data.train_y.classes);
}

}  // namespace

ExperimentResult run_experiment(const PreparedData& data, const ExperimentSettings& settings,
                                const StepCallback& on_step) {
    ExperimentResult result;
    JmlhModel model = initial_model(data, settings);
    if (settings.evaluate_untrained) {
        result.map_untrained = evaluate_map(model, data, settings.eval);
        result.mi_initial = train_mi(model, data);
    }
    result.summary = train(model, data.train_x, data.train_y, settings.train, on_step);

    if (settings.map_only) {
        result.report.map_k = settings.eval.map_k;
        result.report.map_at_k = evaluate_map(model, data, settings.eval);
    } else {
        const PackedCodes queries = pack_codes(encode_dataset(model, data.query_x));
        const PackedCodes db = pack_codes(encode_dataset(model, data.db_x));
        result.report = evaluate(queries, db, RelevanceJudge(data.query_y, data.db_y), settings.eval);
    }
    if (settings.evaluate_untrained) result.mi_final = train_mi(model, data);
    result.checkpoint = Checkpoint{std::move(model), data.standardizer};
    return result;
}

double median(std::vector<double> values) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    return values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

}  // namespace jmlh
