// jmlh: train, encode, evaluate, sweep and ablate binary hashing models.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 data or format error,
// 3 numerical divergence during training.

#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "commands.hpp"

using namespace jmlh;
using namespace jmlh::cli;

namespace {

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::string> variant;
    std::optional<std::string> estimator;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--seed", o.seed, "Run seed (overrides the config)");
    cmd->add_option("--out", o.out, "Output directory (overrides the config)");
    cmd->add_option("--variant", o.variant, "full, cont, qr, nr or vae");
    cmd->add_option("--estimator", o.estimator, "dd (distributional derivative) or st (straight-through)");
}

RunConfig resolve(const std::string& path, const Overrides& o) {
    RunConfig cfg = path.empty() ? parse_run_config("{}") : load_run_config(path);
    if (o.seed) {
        cfg.seed = *o.seed;
        cfg.seeds = {*o.seed};
    }
    if (o.out) cfg.output_dir = *o.out;
    if (o.variant) cfg.settings.variant = parse_variant(*o.variant);
    if (o.estimator) cfg.settings.estimator = parse_estimator(*o.estimator);
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Binary hashing with a stochastic code bottleneck"};
    app.require_subcommand(1);

    std::string config_path;
    Overrides overrides;

    auto* train = app.add_subcommand("train", "Train one model; writes checkpoint, log and split dataset");
    train->add_option("--config", config_path, "JSON run config")->check(CLI::ExistingFile);
    add_overrides(train, overrides);

    std::string checkpoint, dataset, role = "database", codes_out;
    auto* encode = app.add_subcommand("encode", "Encode dataset rows into BHC1 codes");
    encode->add_option("--checkpoint", checkpoint)->required();
    encode->add_option("--data", dataset)->required();
    encode->add_option("--role", role, "query, database, train or all")->capture_default_str();
    encode->add_option("--out", codes_out, "Output .bhc file")->required();

    std::string query_codes, db_codes, eval_out = "eval";
    EvalOptions eval_options;
    bool skip_empty = false;
    auto* eval = app.add_subcommand("eval", "Evaluate query codes against database codes");
    eval->add_option("--query", query_codes)->required();
    eval->add_option("--db", db_codes)->required();
    eval->add_option("--data", dataset, "Dataset providing labels and roles")->required();
    eval->add_option("--k", eval_options.map_k, "mAP cutoff; 0 means the whole database")->capture_default_str();
    eval->add_option("--radius", eval_options.radius, "Hamming radius for precision")->capture_default_str();
    eval->add_flag("--skip-empty-balls", skip_empty, "Leave queries with an empty Hamming ball out of P@H<=r");
    eval->add_option("--out", eval_out)->capture_default_str();

    std::string axis;
    std::vector<double> values;
    auto* sweep = app.add_subcommand("sweep", "Median mAP over seeds along lambda or code length");
    sweep->add_option("--config", config_path)->check(CLI::ExistingFile);
    sweep->add_option("--axis", axis, "lambda or m")->required();
    sweep->add_option("--values", values)->required()->delimiter(',');
    add_overrides(sweep, overrides);

    auto* ablate = app.add_subcommand("ablate", "Median mAP over seeds for every variant");
    ablate->add_option("--config", config_path)->check(CLI::ExistingFile);
    add_overrides(ablate, overrides);

    std::string data_out;
    auto* make_data = app.add_subcommand("make-data", "Write the configured (split) dataset");
    make_data->add_option("--config", config_path)->check(CLI::ExistingFile);
    make_data->add_option("--seed", overrides.seed);
    make_data->add_option("--out", data_out, "Output .bhf or .csv path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (*train) {
            const RunConfig cfg = resolve(config_path, overrides);
            cmd_train(cfg, cfg.output_dir);
        } else if (*encode) {
            cmd_encode(checkpoint, dataset, parse_encode_role(role), codes_out);
        } else if (*eval) {
            eval_options.empty_ball = skip_empty ? EmptyBall::Skip : EmptyBall::CountAsZero;
            if (eval_options.map_k < 0 || eval_options.radius < 0) throw ConfigError("--k and --radius must be >= 0");
            const EvalReport report = cmd_eval(query_codes, db_codes, dataset, eval_options, eval_out);
            std::cout << "map " << report.map_at_k << '\n';
        } else if (*sweep) {
            const RunConfig cfg = resolve(config_path, overrides);
            for (const auto& p : cmd_sweep(cfg, parse_sweep_axis(axis), values, cfg.output_dir)) {
                std::cout << axis << ' ' << p.value << " map " << p.median_map << '\n';
            }
        } else if (*ablate) {
            const RunConfig cfg = resolve(config_path, overrides);
            for (const auto& row : cmd_ablate(cfg, cfg.output_dir)) {
                std::cout << to_string(row.variant) << " map " << row.median_map << '\n';
            }
        } else if (*make_data) {
            Overrides seed_only;
            seed_only.seed = overrides.seed;
            cmd_make_data(resolve(config_path, seed_only), data_out);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const CapacityError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const DivergenceError& e) {
        std::cerr << "diverged: " << e.what() << '\n';
        return 3;
    } catch (const Error& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
