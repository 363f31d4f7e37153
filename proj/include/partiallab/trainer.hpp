#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "partiallab/core.hpp"
#include "partiallab/curriculum.hpp"
#include "partiallab/data.hpp"
#include "partiallab/gnn.hpp"
#include "partiallab/loss.hpp"
#include "partiallab/metrics.hpp"
#include "partiallab/nn.hpp"
#include "partiallab/rng.hpp"

namespace partiallab {

struct ModelParams {
    MlpParams mlp;
    std::optional<GnnParams> gnn;
};

struct TrainConfig {
    std::size_t epochs = 20;
    std::size_t batch_size = 16;
    double lr = 0.01;
    std::size_t lr_decay_epoch = 10;  // epochs after this one run at lr/10
    double weight_decay = 1e-4;
    std::uint64_t seed = 0;
    std::vector<std::size_t> hidden = {32};
    bool use_gnn = false;
    std::size_t gnn_rounds = 3;
    GNorm gnorm;  // default g == 1: plain BCE scaled by 1/C
    std::vector<std::size_t> relabel_epochs;  // 1-based; relabel runs before these epochs
    StrategyConfig strategy;

    void validate() const {
        if (epochs < 1) throw std::invalid_argument("train.epochs must be >= 1");
        if (batch_size < 1) throw std::invalid_argument("train.batch_size must be >= 1");
        if (lr < 0.0) throw std::invalid_argument("train.lr must be >= 0");
        if (weight_decay < 0.0) throw std::invalid_argument("train.weight_decay must be >= 0");
        for (std::size_t e : relabel_epochs)
            if (e < 1 || e > epochs)
                throw std::invalid_argument("train.relabel_epochs entries must lie in [1, epochs]");
        if (!relabel_epochs.empty()) strategy.validate();
        if (use_gnn && gnn_rounds < 1)
            throw std::invalid_argument("model.gnn_rounds must be >= 1 when the head is enabled");
    }
};

struct AuditRow {
    std::size_t round = 0;  // epoch the relabeling ran before
    std::string strategy;
    double theta = 0.0;
    std::size_t n_selected = 0;
    double label_prop_after = 0.0;
    double tp_rate = 0.0;
    double tn_rate = 0.0;
};

inline AuditRow make_audit_row(std::size_t round, const StrategyConfig& cfg,
                               const RelabelOutcome& out) {
    AuditRow r;
    r.round = round;
    r.strategy = strategy_name(cfg.kind);
    r.theta = cfg.theta;
    r.n_selected = out.selection.count;
    r.label_prop_after = out.label_prop_after;
    r.tp_rate = out.tp_rate;
    r.tn_rate = out.tn_rate;
    return r;
}

inline void write_audit_csv(std::ostream& os, const std::vector<AuditRow>& rows) {
    os << audit_header() << "\n";
    for (const AuditRow& r : rows) {
        os << r.round << "," << r.strategy << "," << format_double(r.theta) << "," << r.n_selected
           << "," << format_double(r.label_prop_after) << "," << format_double(r.tp_rate) << ","
           << format_double(r.tn_rate) << "\n";
    }
}

struct RunReport {
    std::vector<double> epoch_losses;  // replica 0, mean per-example data loss
    MetricsReport final_metrics;       // replica 0 on the held-out split
    BudgetReport budget;               // of the training data as handed in
    std::vector<AuditRow> audit;
};

inline ModelParams init_model(std::size_t d, std::size_t C, const TrainConfig& cfg, Rng& rng) {
    ModelParams m;
    std::vector<std::size_t> sizes;
    sizes.push_back(d);
    for (std::size_t h : cfg.hidden) sizes.push_back(h);
    sizes.push_back(C);
    m.mlp = MlpParams::glorot(sizes, rng);
    if (cfg.use_gnn) m.gnn = GnnParams::glorot(C, cfg.gnn_rounds, rng);
    return m;
}

/// Raw scores for every example: MLP logits, refined per row by the
/// message-passing head when present.
inline Matrix forward_all(const ModelParams& m, const Matrix& X) {
    Matrix scores = mlp_forward(m.mlp, X);
    if (m.gnn) {
        for (std::size_t i = 0; i < scores.rows; ++i) {
            std::vector<double> s = gnn_forward(*m.gnn, scores.row(i));
            std::copy(s.begin(), s.end(), scores.row(i).begin());
        }
    }
    return scores;
}

inline MetricsReport evaluate(const ModelParams& m, const Dataset& ds,
                              std::ostream* warn = nullptr) {
    if (ds.n() == 0) throw std::invalid_argument("evaluate: empty split");
    require_fully_labeled(ds, "evaluate");
    Matrix scores = forward_all(m, ds.features);
    return compute_metrics(scores, ds.y_full, warn);
}

/// Mean data loss over the given rows under the model's current parameters.
inline double dataset_loss(const ModelParams& m, const Dataset& ds, const GNorm& g) {
    Matrix scores = forward_all(m, ds.features);
    double total = 0.0;
    for (std::size_t i = 0; i < ds.n(); ++i)
        total += partial_bce(scores.row(i), ds.y_observed.row(i), g).loss;
    return total / static_cast<double>(ds.n());
}

namespace detail {

/// One SGD update on a mini-batch of rows. Returns the summed (unaveraged)
/// per-row data loss; gradients are averaged over every row in the batch,
/// including rows whose labels are all unknown.
inline double train_batch(ModelParams& model, const Dataset& ds,
                          std::span<const std::size_t> rows, const TrainConfig& cfg,
                          double lr_now) {
    const std::size_t nb = rows.size();
    const std::size_t C = ds.classes();
    Matrix X(nb, ds.dim());
    for (std::size_t r = 0; r < nb; ++r)
        std::copy(ds.features.row(rows[r]).begin(), ds.features.row(rows[r]).end(),
                  X.row(r).begin());
    MlpCache mcache;
    Matrix logits = mlp_forward(model.mlp, X, &mcache);
    Matrix scores = logits;
    std::vector<GnnCache> gcaches;
    if (model.gnn) {
        gcaches.resize(nb);
        for (std::size_t r = 0; r < nb; ++r) {
            std::vector<double> s = gnn_forward(*model.gnn, logits.row(r), &gcaches[r]);
            std::copy(s.begin(), s.end(), scores.row(r).begin());
        }
    }
    double batch_loss = 0.0;
    Matrix dscores(nb, C);
    const double inv = 1.0 / static_cast<double>(nb);
    for (std::size_t r = 0; r < nb; ++r) {
        LossResult res = partial_bce(scores.row(r), ds.y_observed.row(rows[r]), cfg.gnorm);
        batch_loss += res.loss;
        for (std::size_t c = 0; c < C; ++c) dscores(r, c) = inv * res.grad[c];
    }
    MlpGrads mgrads;
    if (model.gnn) {
        GnnGrads ggrads = GnnGrads::zeros_like(*model.gnn);
        Matrix dlogits(nb, C);
        for (std::size_t r = 0; r < nb; ++r) {
            GnnGrads g = gnn_backward(*model.gnn, gcaches[r], dscores.row(r));
            accumulate(ggrads, g);
            std::copy(g.x.begin(), g.x.end(), dlogits.row(r).begin());
        }
        mgrads = mlp_backward(model.mlp, mcache, dlogits);
        apply_sgd(*model.gnn, ggrads, lr_now, cfg.weight_decay);
    } else {
        mgrads = mlp_backward(model.mlp, mcache, dscores);
    }
    apply_sgd(model.mlp, mgrads, lr_now, cfg.weight_decay);
    return batch_loss;
}

}  // namespace detail

/// Mini-batch SGD with the self-paced relabeling loop. `train_ds` is taken
/// by value: relabeling rounds write predicted labels into the local copy.
/// Ensemble strategies train `ensemble_size` seeded replicas in lockstep and
/// share the relabeled dataset; replica 0 is the one reported and returned.
inline RunReport train(const TrainConfig& cfg, Dataset train_ds, const Dataset& eval_ds,
                       ModelParams* model_out = nullptr) {
    cfg.validate();
    validate_dataset(train_ds);
    if (train_ds.n() == 0) throw std::invalid_argument("train: empty training set");
    bool any_known = false;
    for (int v : train_ds.y_observed.data) any_known = any_known || v != 0;
    if (!any_known) throw std::invalid_argument("train: dataset has no known labels");

    const std::size_t K = cfg.relabel_epochs.empty() ? 1 : cfg.strategy.models_needed();
    std::vector<ModelParams> replicas;
    std::vector<Rng> batch_rngs;
    for (std::size_t k = 0; k < K; ++k) {
        std::uint64_t rep_seed = mix_seed(cfg.seed, 0x100 + k);
        Rng init_rng(mix_seed(rep_seed, seed_tag::kInit));
        replicas.push_back(init_model(train_ds.dim(), train_ds.classes(), cfg, init_rng));
        batch_rngs.emplace_back(mix_seed(rep_seed, seed_tag::kBatch));
    }

    RunReport report;
    report.budget = budget(train_ds);
    std::vector<std::size_t> order(train_ds.n());
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        if (std::find(cfg.relabel_epochs.begin(), cfg.relabel_epochs.end(), epoch) !=
            cfg.relabel_epochs.end()) {
            std::vector<Matrix> stack;
            stack.reserve(K);
            for (const ModelParams& m : replicas) stack.push_back(forward_all(m, train_ds.features));
            RelabelOutcome out = relabel_step(stack, train_ds, cfg.strategy);
            report.audit.push_back(make_audit_row(epoch, cfg.strategy, out));
        }
        double lr_now = epoch > cfg.lr_decay_epoch ? cfg.lr / 10.0 : cfg.lr;
        for (std::size_t k = 0; k < K; ++k) {
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
            batch_rngs[k].shuffle(order);
            double epoch_loss = 0.0;
            for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
                std::size_t stop = std::min(order.size(), start + cfg.batch_size);
                epoch_loss += detail::train_batch(
                    replicas[k], train_ds, std::span(order).subspan(start, stop - start), cfg,
                    lr_now);
            }
            if (k == 0)
                report.epoch_losses.push_back(epoch_loss / static_cast<double>(train_ds.n()));
        }
    }
    report.final_metrics = evaluate(replicas[0], eval_ds);
    if (model_out) *model_out = std::move(replicas[0]);
    return report;
}

}  // namespace partiallab
