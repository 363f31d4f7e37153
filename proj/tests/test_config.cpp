#include <catch2/catch_amalgamated.hpp>

#include <stdexcept>
#include <string>

#include "partiallab/config.hpp"

using namespace partiallab;

namespace {

bool fails_mentioning(const std::string& text, const std::string& needle) {
    try {
        parse_experiment_config(text);
        return false;
    } catch (const std::invalid_argument& e) {
        return std::string(e.what()).find(needle) != std::string::npos;
    }
}

}  // namespace

TEST_CASE("empty config yields the documented defaults") {
    ExperimentConfig cfg = parse_experiment_config("{}");
    REQUIRE(cfg.n_train == 2000);
    REQUIRE(cfg.n_test == 500);
    REQUIRE(cfg.classes == 8);
    REQUIRE(cfg.dim == 16);
    REQUIRE(cfg.correlation == 0.5);
    REQUIRE(cfg.protocol == "partial");
    REQUIRE(cfg.mask_p == 0.1);
    REQUIRE(cfg.g0 == 1.0);
    REQUIRE(cfg.train.epochs == 20);
    REQUIRE(cfg.train.batch_size == 16);
    REQUIRE(cfg.train.lr == 0.01);
    REQUIRE(cfg.train.lr_decay_epoch == 10);
    REQUIRE(cfg.train.weight_decay == 1e-4);
    REQUIRE(cfg.train.hidden == std::vector<std::size_t>{32});
    REQUIRE(cfg.train.use_gnn == false);
    REQUIRE(cfg.train.gnn_rounds == 3);
    REQUIRE(cfg.train.relabel_epochs.empty());
    REQUIRE(cfg.train.strategy.kind == StrategyKind::threshold);
    REQUIRE(cfg.train.strategy.theta == 2.0);
    // default loss curve is flat
    REQUIRE(cfg.train.gnorm.alpha == 0.0);
    REQUIRE(cfg.train.gnorm.beta == 1.0);
}

TEST_CASE("fields parse into the right places") {
    std::string text = R"({
        "data": {"n_train": 100, "n_test": 50, "classes": 4, "dim": 6,
                  "correlation": 0.25, "seed": 7, "ensure_positive": true},
        "mask": {"protocol": "dense", "p": 0.5, "seed": 3},
        "loss": {"gamma": 1.0, "p0": 0.1, "g0": 5.0},
        "model": {"hidden": [8, 4], "use_gnn": true, "gnn_rounds": 2},
        "train": {"epochs": 7, "batch_size": 4, "lr": 0.05,
                   "lr_decay_epoch": 5, "weight_decay": 0.001, "seed": 11},
        "curriculum": {"relabel_epochs": [3, 6], "strategy": "ensemble",
                        "theta": 1.5, "ensemble_size": 4}
    })";
    ExperimentConfig cfg = parse_experiment_config(text);
    REQUIRE(cfg.n_train == 100);
    REQUIRE(cfg.correlation == 0.25);
    REQUIRE(cfg.ensure_positive);
    REQUIRE(cfg.data_seed == 7);
    REQUIRE(cfg.protocol == "dense");
    REQUIRE(cfg.mask_p == 0.5);
    REQUIRE(cfg.g0 == 5.0);
    REQUIRE(cfg.train.gnorm.alpha == Catch::Approx(-40.0 / 9.0).epsilon(1e-13));
    REQUIRE(cfg.train.gnorm.beta == Catch::Approx(49.0 / 9.0).epsilon(1e-13));
    REQUIRE(cfg.train.hidden == std::vector<std::size_t>{8, 4});
    REQUIRE(cfg.train.use_gnn);
    REQUIRE(cfg.train.gnn_rounds == 2);
    REQUIRE(cfg.train.epochs == 7);
    REQUIRE(cfg.train.seed == 11);
    REQUIRE(cfg.train.relabel_epochs == std::vector<std::size_t>{3, 6});
    REQUIRE(cfg.train.strategy.kind == StrategyKind::ensemble);
    REQUIRE(cfg.train.strategy.theta == 1.5);
    REQUIRE(cfg.train.strategy.ensemble_size == 4);
}

TEST_CASE("unknown keys are rejected with their path") {
    REQUIRE(fails_mentioning(R"({"foo": 1})", "/foo"));
    REQUIRE(fails_mentioning(R"({"data": {"bogus": 1}})", "/data/bogus"));
    REQUIRE(fails_mentioning(R"({"train": {"momentum": 0.9}})", "/train/momentum"));
    REQUIRE(fails_mentioning(R"({"curriculum": {"speed": 2}})", "/curriculum/speed"));
}

TEST_CASE("type and range errors name the offending field") {
    REQUIRE(fails_mentioning(R"({"train": {"epochs": "ten"}})", "/train/epochs"));
    REQUIRE(fails_mentioning(R"({"train": {"epochs": 0}})", "/train/epochs"));
    REQUIRE(fails_mentioning(R"({"data": {"correlation": 1.5}})", "/data/correlation"));
    REQUIRE(fails_mentioning(R"({"data": {"seed": -4}})", "/data/seed"));
    REQUIRE(fails_mentioning(R"({"mask": {"protocol": "sparse"}})", "/mask/protocol"));
    REQUIRE(fails_mentioning(R"({"mask": {"p": 0.0}})", "/mask/p"));
    REQUIRE(fails_mentioning(R"({"loss": {"p0": 1.0}})", "/loss/p0"));
    REQUIRE(fails_mentioning(R"({"loss": {"g0": -1.0}})", "/loss/g0"));
    REQUIRE(fails_mentioning(R"({"loss": {"gamma": 0.0, "g0": 5.0}})", "/loss/gamma"));
    REQUIRE(fails_mentioning(
        R"({"train": {"epochs": 5}, "curriculum": {"relabel_epochs": [9]}})",
        "relabel_epochs"));
    REQUIRE(fails_mentioning(
        R"({"curriculum": {"relabel_epochs": [2], "theta": -1.0}})", "/curriculum/theta"));
    REQUIRE(fails_mentioning(
        R"({"curriculum": {"relabel_epochs": [2], "strategy": "ensemble", "ensemble_size": 1}})",
        "/curriculum/ensemble_size"));
    REQUIRE(fails_mentioning("not json at all", "JSON"));
    REQUIRE(fails_mentioning(R"({"model": {"hidden": [0]}})", "/model/hidden"));
}

TEST_CASE("canonical form is stable under round trips") {
    ExperimentConfig cfg = parse_experiment_config(R"({"data": {"classes": 5}})");
    std::string dumped = to_canonical_json(cfg).dump(2);
    ExperimentConfig back = parse_experiment_config(dumped);
    REQUIRE(to_canonical_json(back).dump(2) == dumped);
    REQUIRE(config_hash(cfg) == config_hash(back));
}

TEST_CASE("hashes are stable and sensitive") {
    ExperimentConfig a = parse_experiment_config("{}");
    ExperimentConfig b = parse_experiment_config("{}");
    REQUIRE(config_hash(a) == config_hash(b));
    REQUIRE(config_hash(a).rfind("fnv1a:", 0) == 0);
    REQUIRE(config_hash(a).size() == 6 + 16);
    ExperimentConfig c = parse_experiment_config(R"({"train": {"lr": 0.02}})");
    REQUIRE(config_hash(a) != config_hash(c));
}

TEST_CASE("protocol dispatch masks and corrupts") {
    Dataset full = gen_synthetic(30, 4, 5, 0.4, 6);
    Dataset same = apply_protocol(full, "full", 0.0, 1);
    REQUIRE(same.y_observed.data == full.y_full.data);
    Dataset part = apply_protocol(full, "partial", 0.5, 1);
    REQUIRE(part.protocol == "partial:0.5");
    Dataset dense = apply_protocol(full, "dense", 0.5, 1);
    REQUIRE(dense.protocol == "dense:0.5");
    Dataset noisy = apply_protocol(full, "noisy", 0.9, 1);
    REQUIRE(budget(noisy).noisy_count == 12);
    REQUIRE_THROWS_AS(apply_protocol(full, "sparse", 0.5, 1), std::invalid_argument);
}

TEST_CASE("experiment data splits and masks only the training half") {
    ExperimentConfig cfg = parse_experiment_config(R"({
        "data": {"n_train": 60, "n_test": 40, "classes": 4, "dim": 5},
        "mask": {"protocol": "partial", "p": 0.5}
    })");
    auto [train, eval] = build_experiment_data(cfg);
    REQUIRE(train.n() == 60);
    REQUIRE(eval.n() == 40);
    REQUIRE(train.protocol == "partial:0.5");
    REQUIRE(eval.protocol == "full");
    for (int v : eval.y_observed.data) REQUIRE(v != 0);
    BudgetReport b = budget(train);
    REQUIRE(b.clean_count == 60 * 2);

    ExperimentConfig np = parse_experiment_config(R"({
        "data": {"n_train": 80, "n_test": 20, "classes": 4, "dim": 5},
        "mask": {"protocol": "noisy_plus"}
    })");
    auto [tr2, ev2] = build_experiment_data(np);
    for (std::size_t i = 0; i < tr2.n(); ++i) {
        int pos = 0;
        for (std::size_t j = 0; j < tr2.classes(); ++j)
            if (tr2.y_observed(i, j) == 1) ++pos;
        REQUIRE(pos == 1);
    }
}

TEST_CASE("run reports carry tool and config identity") {
    Dataset clean = gen_synthetic(30, 3, 5, 0.4, 2);
    Dataset ds = mask_partial(clean, 2.0 / 3.0, 3);
    TrainConfig tc;
    tc.epochs = 2;
    tc.hidden = {4};
    tc.relabel_epochs = {2};
    tc.strategy.theta = 0.5;
    RunReport rep = train(tc, ds, clean);
    ExperimentConfig cfg = parse_experiment_config("{}");
    ojson j = report_to_json(rep, config_hash(cfg));
    REQUIRE(j["meta"]["tool"] == "partiallab");
    REQUIRE(j["meta"]["version"] == "0.1.0");
    REQUIRE(j["meta"]["config"] == config_hash(cfg));
    REQUIRE(j["epoch_losses"].size() == 2);
    REQUIRE(j["final_metrics"].contains("map"));
    REQUIRE(j["final_metrics"].contains("ov_r"));
    REQUIRE(j["budget"]["clean_count"] == 60);
    REQUIRE(j["audit"].size() == 1);
    REQUIRE(j["audit"][0]["strategy"] == "threshold");
    REQUIRE(j["audit"][0]["round"] == 2);
}
