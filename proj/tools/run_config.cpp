#include "run_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace jmlh::cli {

namespace {

using nlohmann::json;

void reject_unknown(const json& object, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!object.is_object()) throw ConfigError(where + ": expected an object");
    const std::set<std::string> known(allowed.begin(), allowed.end());
    for (const auto& [key, value] : object.items()) {
        if (!known.count(key)) throw ConfigError(where + ": unknown key \"" + key + "\"");
    }
}

template <class T>
void read(const json& object, const char* key, T& out, const std::string& where) {
    if (!object.contains(key)) return;
    try {
        out = object.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + "." + key + ": wrong type");
    }
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    reject_unknown(root, "config",
                   {"dataset", "blobs", "split", "model", "train", "eval", "seed", "seeds", "output_dir"});

    RunConfig cfg;
    if (root.contains("dataset") && root.contains("blobs")) throw ConfigError("config: give either dataset or blobs");
    if (root.contains("dataset")) {
        std::string path;
        read(root, "dataset", path, "config");
        cfg.dataset = path;
        cfg.resplit = root.contains("split");
    }
    if (root.contains("blobs")) {
        const auto& b = root["blobs"];
        reject_unknown(b, "blobs", {"classes", "dim", "per_class", "center_scale", "noise_scale", "seed"});
        read(b, "classes", cfg.blobs.classes, "blobs");
        read(b, "dim", cfg.blobs.dim, "blobs");
        read(b, "per_class", cfg.blobs.per_class, "blobs");
        read(b, "center_scale", cfg.blobs.center_scale, "blobs");
        read(b, "noise_scale", cfg.blobs.noise_scale, "blobs");
        read(b, "seed", cfg.blobs.seed, "blobs");
    }
    if (root.contains("split")) {
        const auto& s = root["split"];
        reject_unknown(s, "split", {"queries_per_class", "train_per_class"});
        read(s, "queries_per_class", cfg.queries_per_class, "split");
        read(s, "train_per_class", cfg.train_per_class, "split");
    }
    auto& st = cfg.settings;
    if (root.contains("model")) {
        const auto& m = root["model"];
        reject_unknown(m, "model", {"hidden_width", "code_length", "variant", "estimator"});
        read(m, "hidden_width", st.hidden_width, "model");
        read(m, "code_length", st.code_length, "model");
        std::string name;
        read(m, "variant", name, "model");
        if (!name.empty()) st.variant = parse_variant(name);
        name.clear();
        read(m, "estimator", name, "model");
        if (!name.empty()) st.estimator = parse_estimator(name);
    }
    if (root.contains("train")) {
        const auto& t = root["train"];
        reject_unknown(t, "train",
                       {"lambda", "learning_rate", "batch_size", "epochs", "max_iters", "mc_samples", "patience",
                        "min_delta"});
        read(t, "lambda", st.train.lambda, "train");
        read(t, "learning_rate", st.train.learning_rate, "train");
        read(t, "batch_size", st.train.batch_size, "train");
        read(t, "epochs", st.train.epochs, "train");
        read(t, "max_iters", st.train.max_iters, "train");
        read(t, "mc_samples", st.train.mc_samples, "train");
        read(t, "patience", st.train.patience, "train");
        read(t, "min_delta", st.train.min_delta, "train");
    }
    if (root.contains("eval")) {
        const auto& e = root["eval"];
        reject_unknown(e, "eval", {"map_k", "precision_ks", "radius", "skip_empty_balls"});
        read(e, "map_k", st.eval.map_k, "eval");
        read(e, "precision_ks", st.eval.precision_ks, "eval");
        read(e, "radius", st.eval.radius, "eval");
        bool skip = false;
        read(e, "skip_empty_balls", skip, "eval");
        st.eval.empty_ball = skip ? EmptyBall::Skip : EmptyBall::CountAsZero;
    }
    read(root, "seed", cfg.seed, "config");
    read(root, "seeds", cfg.seeds, "config");
    std::string out;
    read(root, "output_dir", out, "config");
    if (!out.empty()) cfg.output_dir = out;

    if (st.code_length < 1) throw ConfigError("model.code_length must be >= 1");
    if (st.hidden_width < 0) throw ConfigError("model.hidden_width must be >= 0");
    if (st.train.batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
    if (st.train.epochs < 0) throw ConfigError("train.epochs must be >= 0");
    if (st.train.mc_samples < 1) throw ConfigError("train.mc_samples must be >= 1");
    if (st.train.lambda < 0.0) throw ConfigError("train.lambda must be >= 0");
    if (!(st.train.learning_rate >= 0.0)) throw ConfigError("train.learning_rate must be >= 0");
    if (st.eval.map_k < 0 || st.eval.radius < 0) throw ConfigError("eval.map_k and eval.radius must be >= 0");
    if (cfg.seeds.empty()) throw ConfigError("seeds must not be empty");
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    std::stringstream text;
    text << in.rdbuf();
    return parse_run_config(text.str());
}

Dataset materialize_dataset(const RunConfig& config, std::uint64_t seed) {
    if (config.dataset) {
        const Dataset ds = load_dataset(*config.dataset);
        if (!config.resplit) return ds;
        return split_protocol(ds, config.queries_per_class, config.train_per_class, seed);
    }
    BlobSpec spec = config.blobs;
    spec.seed += seed;
    return split_protocol(make_blobs(spec), config.queries_per_class, config.train_per_class, seed);
}

ExperimentSettings settings_for_seed(const RunConfig& config, std::uint64_t seed) {
    ExperimentSettings s = config.settings;
    s.train.seed = seed;
    return s;
}

}  // namespace jmlh::cli
