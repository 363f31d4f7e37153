#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "partiallab/core.hpp"
#include "partiallab/finite_diff.hpp"
#include "partiallab/gnn.hpp"
#include "partiallab/loss.hpp"
#include "partiallab/nn.hpp"
#include "partiallab/rng.hpp"

namespace partiallab {

struct BlockCheck {
    std::string block;
    std::size_t instances = 0;
    double max_rel_err = 0.0;
    bool pass = true;
};

namespace gradcheck_detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline std::vector<double> randn(std::size_t n, Rng& rng, double scale = 1.0) {
    std::vector<double> v(n);
    for (double& x : v) x = scale * rng.normal();
    return v;
}

/// Finite-difference gradient of `value` w.r.t. the storage behind `params`,
/// compared against `analytic`. `value` must recompute the objective from
/// the current storage contents.
inline double fd_rel_err(std::span<double> params, std::span<const double> analytic,
                         const std::function<double()>& value, double eps = 1e-5) {
    std::vector<double> fd(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        double orig = params[i];
        params[i] = orig + eps;
        double fp = value();
        params[i] = orig - eps;
        double fm = value();
        params[i] = orig;
        fd[i] = (fp - fm) / (2.0 * eps);
    }
    return grad_rel_err(analytic, fd);
}

struct Recorder {
    std::vector<BlockCheck> blocks;
    double tol;
    std::string inject;

    explicit Recorder(double tol_, std::string inject_) : tol(tol_), inject(std::move(inject_)) {}

    void record(const std::string& name, std::span<double> params,
                std::span<const double> analytic, const std::function<double()>& value) {
        std::vector<double> g(analytic.begin(), analytic.end());
        if (name == inject)
            for (double& v : g) v = -v;
        double err = fd_rel_err(params, g, value);
        BlockCheck* bc = nullptr;
        for (BlockCheck& b : blocks)
            if (b.block == name) bc = &b;
        if (!bc) {
            blocks.push_back(BlockCheck{name, 0, 0.0, true});
            bc = &blocks.back();
        }
        ++bc->instances;
        if (err > bc->max_rel_err) bc->max_rel_err = err;
        bc->pass = bc->max_rel_err <= tol;
    }
};

/// ReLU kinks break central differences, so instances are redrawn until all
/// pre-activations sit safely away from zero.
inline bool away_from_kinks(const Matrix& pre, double margin = 1e-3) {
    for (double v : pre.data)
        if (std::fabs(v) < margin) return false;
    return true;
}

inline void check_loss(Recorder& rec, Rng& rng) {
    std::size_t C = 2 + rng.below(5);
    std::vector<double> x = randn(C, rng);
    std::vector<int> y(C);
    for (int& v : y) v = static_cast<int>(rng.below(3)) - 1;
    y[rng.below(C)] = rng.below(2) ? 1 : -1;
    GNorm g = solve_g_params(1.0, 0.1, 1.0 + 9.0 * rng.uniform());
    LossResult res = partial_bce(x, y, g);
    rec.record("loss/x", x, res.grad, [&] { return partial_bce(x, y, g).loss; });
}

inline void check_mlp(Recorder& rec, Rng& rng) {
    std::size_t d = 2 + rng.below(4), h = 2 + rng.below(5), C = 2 + rng.below(4);
    std::size_t n = 1 + rng.below(3);
    MlpParams p;
    Matrix X(n, d), W(n, C);
    MlpCache cache;
    for (int tries = 0;; ++tries) {
        Rng draw(rng.next_u64());
        p = MlpParams::glorot({d, h, C}, draw);
        for (Linear& l : p.layers)
            for (double& b : l.b) b = 0.1 * draw.normal();
        X.data = randn(n * d, draw);
        W.data = randn(n * C, draw);
        mlp_forward(p, X, &cache);
        if (away_from_kinks(cache.pre[0]) || tries > 50) break;
    }
    MlpGrads g = mlp_backward(p, cache, W);
    auto value = [&] {
        Matrix out = mlp_forward(p, X);
        return dot(out.data, W.data);
    };
    rec.record("mlp/W0", p.layers[0].W.data, g.layers[0].W.data, value);
    rec.record("mlp/b0", p.layers[0].b, g.layers[0].b, value);
    rec.record("mlp/W1", p.layers[1].W.data, g.layers[1].W.data, value);
    rec.record("mlp/b1", p.layers[1].b, g.layers[1].b, value);
    rec.record("mlp/x", X.data, g.input.data, value);
}

inline void check_gru(Recorder& rec, Rng& rng) {
    std::size_t H = 2 + rng.below(4);
    GruParams p = GruParams::glorot(H, rng);
    for (auto* b : {&p.bz, &p.br, &p.bh})
        for (double& v : *b) v = 0.1 * rng.normal();
    std::vector<double> h = randn(H, rng), m = randn(H, rng), w = randn(H, rng);
    GruCache cache;
    gru_cell(p, h, m, &cache);
    GruGrads g = GruParams::zeros(H);
    std::vector<double> dh(H), dm(H);
    gru_backward(p, cache, w, g, dh, dm);
    auto value = [&] { return dot(gru_cell(p, h, m), w); };
    rec.record("gru/Wz", p.Wz.data, g.Wz.data, value);
    rec.record("gru/Uz", p.Uz.data, g.Uz.data, value);
    rec.record("gru/Wr", p.Wr.data, g.Wr.data, value);
    rec.record("gru/Ur", p.Ur.data, g.Ur.data, value);
    rec.record("gru/Wh", p.Wh.data, g.Wh.data, value);
    rec.record("gru/Uh", p.Uh.data, g.Uh.data, value);
    rec.record("gru/bz", p.bz, g.bz, value);
    rec.record("gru/br", p.br, g.br, value);
    rec.record("gru/bh", p.bh, g.bh, value);
    rec.record("gru/h", h, dh, value);
    rec.record("gru/m", m, dm, value);
}

inline void check_gnn(Recorder& rec, Rng& rng) {
    const std::size_t C = 3, T = 2;
    GnnParams p;
    std::vector<double> x, w;
    GnnCache cache;
    for (int tries = 0;; ++tries) {
        Rng draw(rng.next_u64());
        p = GnnParams::glorot(C, T, draw);
        for (double& v : p.fm.b) v = 0.1 * draw.normal();
        for (auto* b : {&p.gru.bz, &p.gru.br, &p.gru.bh})
            for (double& v : *b) v = 0.1 * draw.normal();
        x = randn(C, draw);
        w = randn(C, draw);
        gnn_forward(p, x, &cache);
        bool clean = true;
        for (const Matrix& pre : cache.pre) clean = clean && away_from_kinks(pre);
        if (clean || tries > 50) break;
    }
    GnnGrads g = gnn_backward(p, cache, w);
    auto value = [&] { return dot(gnn_forward(p, x), w); };
    rec.record("gnn/fm.W", p.fm.W.data, g.fm.W.data, value);
    rec.record("gnn/fm.b", p.fm.b, g.fm.b, value);
    rec.record("gnn/gru.Wz", p.gru.Wz.data, g.gru.Wz.data, value);
    rec.record("gnn/gru.Uz", p.gru.Uz.data, g.gru.Uz.data, value);
    rec.record("gnn/gru.Wr", p.gru.Wr.data, g.gru.Wr.data, value);
    rec.record("gnn/gru.Ur", p.gru.Ur.data, g.gru.Ur.data, value);
    rec.record("gnn/gru.Wh", p.gru.Wh.data, g.gru.Wh.data, value);
    rec.record("gnn/gru.Uh", p.gru.Uh.data, g.gru.Uh.data, value);
    rec.record("gnn/gru.bz", p.gru.bz, g.gru.bz, value);
    rec.record("gnn/gru.br", p.gru.br, g.gru.br, value);
    rec.record("gnn/gru.bh", p.gru.bh, g.gru.bh, value);
    rec.record("gnn/x", x, g.x, value);
}

inline void check_pipeline(Recorder& rec, Rng& rng, bool with_gnn) {
    std::size_t d = 2 + rng.below(3), h = 3 + rng.below(3), C = 2 + rng.below(3);
    std::size_t n = 1 + rng.below(2);
    GNorm gn = solve_g_params(1.0, 0.1, 5.0);
    MlpParams mlp;
    GnnParams gnn;
    Matrix X(n, d);
    std::vector<int> y(n * C);
    MlpCache mcache;
    std::vector<GnnCache> gcaches(n);
    for (int tries = 0;; ++tries) {
        Rng draw(rng.next_u64());
        mlp = MlpParams::glorot({d, h, C}, draw);
        for (Linear& l : mlp.layers)
            for (double& b : l.b) b = 0.1 * draw.normal();
        if (with_gnn) {
            gnn = GnnParams::glorot(C, 1, draw);
            for (double& v : gnn.fm.b) v = 0.1 * draw.normal();
        }
        X.data = randn(n * d, draw);
        for (int& v : y) v = static_cast<int>(draw.below(3)) - 1;
        for (std::size_t i = 0; i < n; ++i) y[i * C + draw.below(C)] = 1;
        Matrix logits = mlp_forward(mlp, X, &mcache);
        bool clean = away_from_kinks(mcache.pre[0]);
        if (with_gnn) {
            for (std::size_t i = 0; i < n; ++i) {
                gnn_forward(gnn, logits.row(i), &gcaches[i]);
                for (const Matrix& pre : gcaches[i].pre) clean = clean && away_from_kinks(pre);
            }
        }
        if (clean || tries > 50) break;
    }
    auto value = [&] {
        Matrix logits = mlp_forward(mlp, X);
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> s(logits.row(i).begin(), logits.row(i).end());
            if (with_gnn) s = gnn_forward(gnn, s);
            total += partial_bce(s, std::span<const int>(y.data() + i * C, C), gn).loss;
        }
        return total;
    };
    Matrix logits = mlp_forward(mlp, X, &mcache);
    Matrix dlogits(n, C);
    GnnGrads ggrads = GnnGrads::zeros_like(gnn);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> s(logits.row(i).begin(), logits.row(i).end());
        if (with_gnn) s = gnn_forward(gnn, logits.row(i), &gcaches[i]);
        LossResult res = partial_bce(s, std::span<const int>(y.data() + i * C, C), gn);
        if (with_gnn) {
            GnnGrads g = gnn_backward(gnn, gcaches[i], res.grad);
            accumulate(ggrads, g);
            std::copy(g.x.begin(), g.x.end(), dlogits.row(i).begin());
        } else {
            std::copy(res.grad.begin(), res.grad.end(), dlogits.row(i).begin());
        }
    }
    MlpGrads mg = mlp_backward(mlp, mcache, dlogits);
    const char* tag = with_gnn ? "pipeline+gnn/mlp" : "pipeline/mlp";
    for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
        rec.record(tag, mlp.layers[l].W.data, mg.layers[l].W.data, value);
        rec.record(tag, mlp.layers[l].b, mg.layers[l].b, value);
    }
    if (with_gnn) {
        rec.record("pipeline+gnn/gnn", gnn.fm.W.data, ggrads.fm.W.data, value);
        rec.record("pipeline+gnn/gnn", gnn.gru.Wh.data, ggrads.gru.Wh.data, value);
        rec.record("pipeline+gnn/gnn", gnn.gru.Uz.data, ggrads.gru.Uz.data, value);
    }
}

}  // namespace gradcheck_detail

/// Run the finite-difference suite: `per_block` random instances of every
/// parameter block across the loss, the MLP, the GRU cell, the message head
/// and the end-to-end pipeline. `inject` flips the analytic sign of one
/// named block, which must make exactly that block fail (harness control).
inline std::vector<BlockCheck> run_gradient_checks(std::uint64_t seed, std::size_t per_block = 2,
                                                   double tol = 1e-5,
                                                   const std::string& inject = "") {
    using namespace gradcheck_detail;
    Recorder rec(tol, inject);
    Rng rng(mix_seed(seed, 0x6C));
    for (std::size_t i = 0; i < per_block; ++i) {
        check_loss(rec, rng);
        check_mlp(rec, rng);
        check_gru(rec, rng);
        check_gnn(rec, rng);
        check_pipeline(rec, rng, false);
        check_pipeline(rec, rng, true);
    }
    return rec.blocks;
}

}  // namespace partiallab
