#include "commands.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>

#include "jmlh/experiment.hpp"
#include "jmlh/text_format.hpp"
#include "json.hpp"

namespace jmlh::cli {

namespace {

void log_line(LogLevel at_least, const std::string& text) {
    static const LogLevel level = log_level_from_env();
    if (static_cast<int>(level) >= static_cast<int>(at_least)) std::cerr << text << '\n';
}

std::ofstream open_text(const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot open " + path.string() + " for writing");
    return out;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw InputError("cannot create directory " + dir.string() + ": " + ec.message());
}

std::vector<Index> rows_for(const Dataset& ds, EncodeRole role) {
    switch (role) {
        case EncodeRole::Query: return ds.query_rows();
        case EncodeRole::Database: return ds.database_rows();
        case EncodeRole::Train: return ds.train_rows();
        case EncodeRole::All: break;
    }
    std::vector<Index> all(static_cast<std::size_t>(ds.size()));
    for (Index i = 0; i < ds.size(); ++i) all[static_cast<std::size_t>(i)] = i;
    return all;
}

}  // namespace

LogLevel log_level_from_env() {
    const char* env = std::getenv("JMLH_LOG");
    const std::string value = env ? env : "info";
    if (value == "quiet" || value == "0") return LogLevel::Quiet;
    if (value == "debug" || value == "2") return LogLevel::Debug;
    return LogLevel::Info;
}

Checkpoint cmd_train(const RunConfig& config, const fs::path& out_dir) {
    ensure_dir(out_dir);
    const Dataset ds = materialize_dataset(config, config.seed);
    save_dataset(ds, out_dir / "dataset.bhf");
    const PreparedData data = prepare(ds);
    const ExperimentSettings settings = settings_for_seed(config, config.seed);

    JmlhModel model = initial_model(data, settings);
    auto log = open_text(out_dir / "train_log.csv");
    log << "iteration,total,classification,regularizer\n";
    const StepCallback on_step = [&](std::uint64_t step, const LossBreakdown& loss) {
        log << step << ',' << format_sig(loss.total) << ',' << format_sig(loss.classification) << ','
            << format_sig(loss.regularizer) << '\n';
        if (step % 100 == 0) log_line(LogLevel::Debug, "step " + std::to_string(step) + " loss " + format_sig(loss.total));
    };
    const TrainSummary summary = train(model, data.train_x, data.train_y, settings.train, on_step);
    if (!summary.epochs.empty()) {
        log_line(LogLevel::Info, "trained " + std::to_string(summary.epochs.size()) + " epochs, " +
                                     std::to_string(summary.steps) + " steps, final loss " +
                                     format_sig(summary.epochs.back().mean.total));
    }
    Checkpoint ck{std::move(model), data.standardizer};
    save_checkpoint(ck, out_dir / "checkpoint.jmlh");
    return ck;
}

EncodeRole parse_encode_role(const std::string& name) {
    if (name == "query") return EncodeRole::Query;
    if (name == "database" || name == "db") return EncodeRole::Database;
    if (name == "train") return EncodeRole::Train;
    if (name == "all") return EncodeRole::All;
    throw ConfigError("unknown role \"" + name + "\" (expected query, database, train or all)");
}

PackedCodes cmd_encode(const fs::path& checkpoint, const fs::path& dataset, EncodeRole role, const fs::path& out) {
    const Checkpoint ck = load_checkpoint(checkpoint);
    const Dataset ds = load_dataset(dataset);
    if (ds.dim() != ck.model.input_dim()) {
        throw InputError("dataset has " + std::to_string(ds.dim()) + " features, checkpoint expects " +
                         std::to_string(ck.model.input_dim()));
    }
    Matrix x = select_rows(ds.features, rows_for(ds, role));
    if (!ck.standardizer.empty()) x = ck.standardizer.apply(x);
    const PackedCodes codes = pack_codes(encode_dataset(ck.model, x));
    if (out.has_parent_path()) ensure_dir(out.parent_path());
    save_codes(codes, out);
    log_line(LogLevel::Info, "encoded " + std::to_string(codes.n) + " rows to " + out.string());
    return codes;
}

std::string report_json(const EvalReport& report, Index queries, Index database) {
    nlohmann::ordered_json j;
    j["queries"] = queries;
    j["database"] = database;
    j["map_k"] = report.map_k;
    j["map"] = round_sig(report.map_at_k);
    j["precision_at_k"] = nlohmann::ordered_json::array();
    for (const auto& p : report.precision_at_k) j["precision_at_k"].push_back({{"k", p.k}, {"precision", round_sig(p.precision)}});
    j["radius"] = report.radius;
    j["precision_at_radius"] = round_sig(report.p_at_radius);
    j["pr_curve"] = nlohmann::ordered_json::array();
    for (const auto& p : report.pr_curve) {
        j["pr_curve"].push_back({{"recall", round_sig(p.recall)}, {"precision", round_sig(p.precision)}});
    }
    return j.dump(2) + "\n";
}

EvalReport cmd_eval(const fs::path& query_codes, const fs::path& db_codes, const fs::path& dataset,
                    const EvalOptions& options, const fs::path& out_dir) {
    const PackedCodes queries = load_codes(query_codes);
    const PackedCodes db = load_codes(db_codes);
    if (queries.m != db.m) throw InputError("query and database code lengths differ");
    const Dataset ds = load_dataset(dataset);
    const auto query_rows = ds.query_rows();
    const auto db_rows = ds.database_rows();
    if (static_cast<Index>(query_rows.size()) != queries.n || static_cast<Index>(db_rows.size()) != db.n) {
        throw InputError("code counts (" + std::to_string(queries.n) + " query, " + std::to_string(db.n) +
                         " database) do not match the dataset roles (" + std::to_string(query_rows.size()) + ", " +
                         std::to_string(db_rows.size()) + ")");
    }
    const RelevanceJudge judge(ds.labels.select(query_rows), ds.labels.select(db_rows));
    const EvalReport report = evaluate(queries, db, judge, options);

    ensure_dir(out_dir);
    open_text(out_dir / "report.json") << report_json(report, queries.n, db.n);
    write_precision_csv(out_dir / "precision_at_k.csv", report.precision_at_k);
    write_pr_csv(out_dir / "pr_curve.csv", report.pr_curve);
    log_line(LogLevel::Info, "mAP@" + (report.map_k ? std::to_string(report.map_k) : std::string("all")) + " = " +
                                 format_sig(report.map_at_k));
    return report;
}

SweepAxis parse_sweep_axis(const std::string& name) {
    if (name == "lambda") return SweepAxis::Lambda;
    if (name == "m" || name == "code_length") return SweepAxis::CodeLength;
    throw ConfigError("unknown sweep axis \"" + name + "\" (expected lambda or m)");
}

double run_map(const RunConfig& config, const ExperimentSettings& settings, std::uint64_t seed) {
    const PreparedData data = prepare(materialize_dataset(config, seed));
    ExperimentSettings s = settings;
    s.train.seed = seed;
    s.map_only = true;
    return run_experiment(data, s).report.map_at_k;
}

std::vector<SweepPoint> cmd_sweep(const RunConfig& config, SweepAxis axis, const std::vector<double>& values,
                                  const fs::path& out_dir) {
    if (values.empty()) throw ConfigError("sweep needs at least one value");
    std::vector<SweepPoint> points;
    for (double value : values) {
        ExperimentSettings settings = config.settings;
        if (axis == SweepAxis::Lambda) {
            if (value < 0.0) throw ConfigError("lambda must be >= 0");
            settings.train.lambda = value;
        } else {
            if (value < 1.0 || value != static_cast<double>(static_cast<Index>(value))) {
                throw ConfigError("code length must be a positive integer");
            }
            settings.code_length = static_cast<Index>(value);
        }
        SweepPoint point{value, 0.0, {}};
        for (std::uint64_t seed : config.seeds) point.per_seed.push_back(run_map(config, settings, seed));
        point.median_map = median(point.per_seed);
        log_line(LogLevel::Info, "sweep " + format_sig(value) + ": median mAP " + format_sig(point.median_map));
        points.push_back(std::move(point));
    }
    ensure_dir(out_dir);
    const std::string name = axis == SweepAxis::Lambda ? "lambda" : "m";
    auto out = open_text(out_dir / ("sweep_" + name + ".csv"));
    out << name << ",map\n";
    for (const auto& p : points) out << format_sig(p.value) << ',' << format_sig(p.median_map) << '\n';
    return points;
}

std::vector<AblationRow> cmd_ablate(const RunConfig& config, const fs::path& out_dir) {
    std::vector<AblationRow> rows;
    for (Variant v : kAllVariants) {
        ExperimentSettings settings = config.settings;
        settings.variant = v;
        AblationRow row{v, 0.0, {}};
        for (std::uint64_t seed : config.seeds) row.per_seed.push_back(run_map(config, settings, seed));
        row.median_map = median(row.per_seed);
        log_line(LogLevel::Info, std::string(to_string(v)) + ": median mAP " + format_sig(row.median_map));
        rows.push_back(std::move(row));
    }
    ensure_dir(out_dir);
    auto out = open_text(out_dir / "ablation.csv");
    out << "variant,median";
    for (std::uint64_t seed : config.seeds) out << ",seed_" << seed;
    out << '\n';
    for (const auto& row : rows) {
        out << to_string(row.variant) << ',' << format_sig(row.median_map);
        for (double v : row.per_seed) out << ',' << format_sig(v);
        out << '\n';
    }
    return rows;
}

void cmd_make_data(const RunConfig& config, const fs::path& out) {
    if (out.has_parent_path()) ensure_dir(out.parent_path());
    save_dataset(materialize_dataset(config, config.seed), out);
}

}  // namespace jmlh::cli
