#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "partiallab/curriculum.hpp"
#include "partiallab/data.hpp"
#include "partiallab/loss.hpp"
#include "partiallab/trainer.hpp"

namespace partiallab {

inline constexpr const char* kToolName = "partiallab";
inline constexpr const char* kToolVersion = "0.1.0";

using ojson = nlohmann::ordered_json;

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[i] = digits[v & 0xF];
        v >>= 4;
    }
    return s;
}

/// Full experiment description: data generation, masking protocol, loss
/// weighting, model and trainer knobs. Every field has a default, so `{}`
/// is a valid config.
struct ExperimentConfig {
    // data
    std::size_t n_train = 2000;
    std::size_t n_test = 500;
    std::size_t classes = 8;
    std::size_t dim = 16;
    double correlation = 0.5;
    std::uint64_t data_seed = 0;
    bool ensure_positive = false;
    // mask
    std::string protocol = "partial";
    double mask_p = 0.1;
    std::uint64_t mask_seed = 0;
    // loss weight curve, solved so g(1) = 1 and g(p0) = g0
    double gamma = 1.0;
    double p0 = 0.1;
    double g0 = 1.0;
    // model + trainer + curriculum
    TrainConfig train;
};

namespace cfgdetail {

[[noreturn]] inline void fail(const std::string& path, const std::string& msg) {
    throw std::invalid_argument(path + ": " + msg);
}

inline double as_number(const ojson& v, const std::string& path) {
    if (!v.is_number()) fail(path, "expected a number");
    return v.get<double>();
}

inline std::uint64_t as_uint(const ojson& v, const std::string& path) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer()) {
        auto i = v.get<std::int64_t>();
        if (i < 0) fail(path, "must be non-negative");
        return static_cast<std::uint64_t>(i);
    }
    fail(path, "expected an integer");
}

inline std::size_t as_count(const ojson& v, const std::string& path, std::size_t lo) {
    auto n = static_cast<std::size_t>(as_uint(v, path));
    if (n < lo) fail(path, "must be >= " + std::to_string(lo));
    return n;
}

inline bool as_bool(const ojson& v, const std::string& path) {
    if (!v.is_boolean()) fail(path, "expected a boolean");
    return v.get<bool>();
}

inline std::string as_string(const ojson& v, const std::string& path) {
    if (!v.is_string()) fail(path, "expected a string");
    return v.get<std::string>();
}

inline std::vector<std::size_t> as_count_list(const ojson& v, const std::string& path,
                                              std::size_t lo) {
    if (!v.is_array()) fail(path, "expected an array of integers");
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(as_count(v[i], path + "/" + std::to_string(i), lo));
    return out;
}

}  // namespace cfgdetail

inline ExperimentConfig experiment_from_json(const ojson& j) {
    using namespace cfgdetail;
    if (!j.is_object()) fail("/", "config root must be an object");
    ExperimentConfig cfg;
    for (const auto& [sec, val] : j.items()) {
        if (sec != "data" && sec != "mask" && sec != "loss" && sec != "model" && sec != "train" &&
            sec != "curriculum")
            fail("/" + sec, "unknown config key");
        if (!val.is_object()) fail("/" + sec, "expected an object");
    }
    if (j.contains("data")) {
        for (const auto& [k, v] : j.at("data").items()) {
            std::string path = "/data/" + k;
            if (k == "n_train") cfg.n_train = as_count(v, path, 1);
            else if (k == "n_test") cfg.n_test = as_count(v, path, 1);
            else if (k == "classes") cfg.classes = as_count(v, path, 1);
            else if (k == "dim") cfg.dim = as_count(v, path, 1);
            else if (k == "correlation") cfg.correlation = as_number(v, path);
            else if (k == "seed") cfg.data_seed = as_uint(v, path);
            else if (k == "ensure_positive") cfg.ensure_positive = as_bool(v, path);
            else fail(path, "unknown config key");
        }
    }
    if (j.contains("mask")) {
        for (const auto& [k, v] : j.at("mask").items()) {
            std::string path = "/mask/" + k;
            if (k == "protocol") cfg.protocol = as_string(v, path);
            else if (k == "p") cfg.mask_p = as_number(v, path);
            else if (k == "seed") cfg.mask_seed = as_uint(v, path);
            else fail(path, "unknown config key");
        }
    }
    if (j.contains("loss")) {
        for (const auto& [k, v] : j.at("loss").items()) {
            std::string path = "/loss/" + k;
            if (k == "gamma") cfg.gamma = as_number(v, path);
            else if (k == "p0") cfg.p0 = as_number(v, path);
            else if (k == "g0") cfg.g0 = as_number(v, path);
            else fail(path, "unknown config key");
        }
    }
    if (j.contains("model")) {
        for (const auto& [k, v] : j.at("model").items()) {
            std::string path = "/model/" + k;
            if (k == "hidden") cfg.train.hidden = as_count_list(v, path, 1);
            else if (k == "use_gnn") cfg.train.use_gnn = as_bool(v, path);
            else if (k == "gnn_rounds") cfg.train.gnn_rounds = as_count(v, path, 1);
            else fail(path, "unknown config key");
        }
    }
    if (j.contains("train")) {
        for (const auto& [k, v] : j.at("train").items()) {
            std::string path = "/train/" + k;
            if (k == "epochs") cfg.train.epochs = as_count(v, path, 1);
            else if (k == "batch_size") cfg.train.batch_size = as_count(v, path, 1);
            else if (k == "lr") cfg.train.lr = as_number(v, path);
            else if (k == "lr_decay_epoch") cfg.train.lr_decay_epoch = as_count(v, path, 0);
            else if (k == "weight_decay") cfg.train.weight_decay = as_number(v, path);
            else if (k == "seed") cfg.train.seed = as_uint(v, path);
            else fail(path, "unknown config key");
        }
    }
    if (j.contains("curriculum")) {
        for (const auto& [k, v] : j.at("curriculum").items()) {
            std::string path = "/curriculum/" + k;
            if (k == "relabel_epochs") cfg.train.relabel_epochs = as_count_list(v, path, 1);
            else if (k == "strategy") {
                try {
                    cfg.train.strategy.kind = parse_strategy(as_string(v, path));
                } catch (const std::invalid_argument& e) {
                    fail(path, e.what());
                }
            } else if (k == "theta") cfg.train.strategy.theta = as_number(v, path);
            else if (k == "ensemble_size")
                cfg.train.strategy.ensemble_size = as_count(v, path, 1);
            else fail(path, "unknown config key");
        }
    }

    if (cfg.correlation < 0.0 || cfg.correlation > 1.0)
        fail("/data/correlation", "must lie in [0,1]");
    if (cfg.protocol != "full" && cfg.protocol != "partial" && cfg.protocol != "dense" &&
        cfg.protocol != "noisy" && cfg.protocol != "noisy_plus")
        fail("/mask/protocol", "unknown protocol: " + cfg.protocol);
    if (cfg.protocol == "partial" || cfg.protocol == "dense") {
        if (cfg.mask_p <= 0.0 || cfg.mask_p > 1.0) fail("/mask/p", "must lie in (0,1]");
    } else if (cfg.protocol == "noisy") {
        if (cfg.mask_p < 0.0 || cfg.mask_p > 1.0) fail("/mask/p", "must lie in [0,1]");
    }
    if (cfg.p0 <= 0.0 || cfg.p0 >= 1.0) fail("/loss/p0", "must lie in (0,1)");
    if (cfg.g0 <= 0.0) fail("/loss/g0", "must be > 0");
    try {
        cfg.train.gnorm = solve_g_params(cfg.gamma, cfg.p0, cfg.g0);
    } catch (const std::invalid_argument& e) {
        fail("/loss/gamma", e.what());
    }
    if (cfg.train.lr < 0.0) fail("/train/lr", "must be >= 0");
    if (cfg.train.weight_decay < 0.0) fail("/train/weight_decay", "must be >= 0");
    for (std::size_t e : cfg.train.relabel_epochs)
        if (e < 1 || e > cfg.train.epochs)
            fail("/curriculum/relabel_epochs", "entries must lie in [1, epochs]");
    if (!cfg.train.relabel_epochs.empty()) {
        const StrategyConfig& s = cfg.train.strategy;
        if (s.kind == StrategyKind::proportion) {
            if (s.theta <= 0.0 || s.theta > 1.0) fail("/curriculum/theta", "must lie in (0,1]");
        } else if (s.kind != StrategyKind::two_step && s.theta <= 0.0) {
            fail("/curriculum/theta", "must be > 0");
        }
        if ((s.kind == StrategyKind::ensemble || s.kind == StrategyKind::uncertainty) &&
            s.ensemble_size < 2)
            fail("/curriculum/ensemble_size", "must be >= 2 for this strategy");
    }
    return cfg;
}

inline ojson to_canonical_json(const ExperimentConfig& cfg) {
    ojson j;
    j["data"] = {{"n_train", cfg.n_train},
                 {"n_test", cfg.n_test},
                 {"classes", cfg.classes},
                 {"dim", cfg.dim},
                 {"correlation", cfg.correlation},
                 {"seed", cfg.data_seed},
                 {"ensure_positive", cfg.ensure_positive}};
    j["mask"] = {{"protocol", cfg.protocol}, {"p", cfg.mask_p}, {"seed", cfg.mask_seed}};
    j["loss"] = {{"gamma", cfg.gamma}, {"p0", cfg.p0}, {"g0", cfg.g0}};
    j["model"] = {{"hidden", cfg.train.hidden},
                  {"use_gnn", cfg.train.use_gnn},
                  {"gnn_rounds", cfg.train.gnn_rounds}};
    j["train"] = {{"epochs", cfg.train.epochs},
                  {"batch_size", cfg.train.batch_size},
                  {"lr", cfg.train.lr},
                  {"lr_decay_epoch", cfg.train.lr_decay_epoch},
                  {"weight_decay", cfg.train.weight_decay},
                  {"seed", cfg.train.seed}};
    j["curriculum"] = {{"relabel_epochs", cfg.train.relabel_epochs},
                       {"strategy", strategy_name(cfg.train.strategy.kind)},
                       {"theta", cfg.train.strategy.theta},
                       {"ensemble_size", cfg.train.strategy.ensemble_size}};
    return j;
}

inline std::string config_hash(const ExperimentConfig& cfg) {
    return "fnv1a:" + hex64(fnv1a(to_canonical_json(cfg).dump()));
}

inline ExperimentConfig parse_experiment_config(const std::string& text) {
    ojson j;
    try {
        j = ojson::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
    }
    return experiment_from_json(j);
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_experiment_config(ss.str());
}

/// Apply the named observation protocol to a fully labeled dataset.
inline Dataset apply_protocol(const Dataset& ds, const std::string& protocol, double p,
                              std::uint64_t seed) {
    if (protocol == "full") return ds;
    if (protocol == "partial") return mask_partial(ds, p, seed);
    if (protocol == "dense") return mask_dense(ds, p, seed);
    if (protocol == "noisy") return corrupt_noisy(ds, p, seed);
    if (protocol == "noisy_plus") return make_noisy_plus(ds, seed);
    throw std::invalid_argument("unknown protocol: " + protocol);
}

/// Generate one pool, split it, and mask only the training half. The eval
/// half keeps full labels, so metrics are always against clean ground truth
/// drawn from the same generative model.
inline std::pair<Dataset, Dataset> build_experiment_data(const ExperimentConfig& cfg) {
    bool ep = cfg.ensure_positive || cfg.protocol == "noisy_plus";
    Dataset full = gen_synthetic(cfg.n_train + cfg.n_test, cfg.classes, cfg.dim, cfg.correlation,
                                 cfg.data_seed, ep);
    auto [tr, ev] = split_dataset(full, cfg.n_train);
    Dataset masked = apply_protocol(tr, cfg.protocol, cfg.mask_p, cfg.mask_seed);
    return {std::move(masked), std::move(ev)};
}

inline ojson meta_json(const std::string& hash) {
    return ojson{{"tool", kToolName}, {"version", kToolVersion}, {"config", hash}};
}

inline ojson metrics_to_json(const MetricsReport& m) {
    return ojson{{"map", m.map},         {"exact_match", m.exact_match},
                 {"macro_f1", m.macro_f1}, {"micro_f1", m.micro_f1},
                 {"pc_p", m.pc_p},       {"pc_r", m.pc_r},
                 {"ov_p", m.ov_p},       {"ov_r", m.ov_r}};
}

inline ojson budget_to_json(const BudgetReport& b) {
    return ojson{{"clean_count", b.clean_count},
                 {"noisy_count", b.noisy_count},
                 {"total_slots", b.total_slots}};
}

inline ojson report_to_json(const RunReport& r, const std::string& hash) {
    ojson j;
    j["meta"] = meta_json(hash);
    j["epoch_losses"] = r.epoch_losses;
    j["final_metrics"] = metrics_to_json(r.final_metrics);
    j["budget"] = budget_to_json(r.budget);
    ojson audit = ojson::array();
    for (const AuditRow& a : r.audit) {
        audit.push_back(ojson{{"round", a.round},
                              {"strategy", a.strategy},
                              {"theta", a.theta},
                              {"n_selected", a.n_selected},
                              {"label_prop_after", a.label_prop_after},
                              {"tp_rate", a.tp_rate},
                              {"tn_rate", a.tn_rate}});
    }
    j["audit"] = audit;
    return j;
}

}  // namespace partiallab
