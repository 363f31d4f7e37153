#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "partiallab/core.hpp"
#include "partiallab/nn.hpp"
#include "partiallab/rng.hpp"

namespace partiallab {

/// Fully connected message-passing head over C label nodes. Node v starts at
/// h_v = x_v * e_v (one-hot scaled by its logit), exchanges messages for
/// `rounds` steps through a shared linear map + GRU, and reads out
/// score_v = x_v + h_v[v].
struct GnnParams {
    Linear fm;       // message function, hidden -> hidden
    GruParams gru;   // state update, hidden == C
    std::size_t rounds = 3;

    std::size_t hidden() const { return gru.hidden(); }

    static GnnParams zeros(std::size_t C, std::size_t rounds) {
        GnnParams p;
        p.fm = Linear(C, C);
        p.gru = GruParams::zeros(C);
        p.rounds = rounds;
        return p;
    }

    static GnnParams glorot(std::size_t C, std::size_t rounds, Rng& rng) {
        GnnParams p = zeros(C, rounds);
        glorot_fill(p.fm.W, rng);
        p.gru = GruParams::glorot(C, rng);
        return p;
    }
};

/// h_v = x_v * e_v stacked as rows: diag(x).
inline Matrix init_hidden(std::span<const double> x) {
    if (x.size() < 2) throw std::invalid_argument("init_hidden: need at least 2 label nodes");
    Matrix H(x.size(), x.size());
    for (std::size_t v = 0; v < x.size(); ++v) H(v, v) = x[v];
    return H;
}

/// Mean of ReLU(fm(h_u)) over all neighbours u != v, for every v at once.
/// With the graph fully connected this is (sum - own term) / (C - 1).
/// `pre_out`, if given, receives the pre-ReLU activations for backprop.
inline Matrix message_update(const Linear& fm, const Matrix& H, Matrix* pre_out = nullptr) {
    const std::size_t C = H.rows;
    if (C < 2) throw std::invalid_argument("message_update: need at least 2 label nodes");
    require_shape(H.cols == fm.in_dim(), "message_update: hidden dim");
    Matrix pre(C, fm.out_dim());
    Matrix F(C, fm.out_dim());
    std::vector<double> sum(fm.out_dim(), 0.0);
    for (std::size_t u = 0; u < C; ++u) {
        affine(fm.W, fm.b, H.row(u), pre.row(u));
        for (std::size_t j = 0; j < F.cols; ++j) {
            F(u, j) = relu(pre(u, j));
            sum[j] += F(u, j);
        }
    }
    Matrix msg(C, fm.out_dim());
    const double inv = 1.0 / static_cast<double>(C - 1);
    for (std::size_t v = 0; v < C; ++v)
        for (std::size_t j = 0; j < msg.cols; ++j) msg(v, j) = (sum[j] - F(v, j)) * inv;
    if (pre_out) *pre_out = std::move(pre);
    return msg;
}

struct GnnCache {
    std::vector<double> x;
    std::vector<Matrix> H;                   // rounds+1 states, each C x C
    std::vector<Matrix> pre;                 // per-round pre-ReLU activations
    std::vector<std::vector<GruCache>> gru;  // [round][node]
    bool valid = false;
};

inline std::vector<double> gnn_forward(const GnnParams& p, std::span<const double> x,
                                       GnnCache* cache = nullptr) {
    const std::size_t C = x.size();
    require_shape(C == p.hidden() && C == p.fm.in_dim(), "gnn_forward: C != hidden dim");
    Matrix H = init_hidden(x);
    if (cache) {
        cache->x.assign(x.begin(), x.end());
        cache->H.assign(1, H);
        cache->pre.clear();
        cache->gru.assign(p.rounds, std::vector<GruCache>(C));
        cache->valid = false;
    }
    for (std::size_t t = 0; t < p.rounds; ++t) {
        Matrix pre;
        Matrix msg = message_update(p.fm, H, cache ? &pre : nullptr);
        Matrix next(C, C);
        for (std::size_t v = 0; v < C; ++v) {
            std::vector<double> hv =
                gru_cell(p.gru, H.row(v), msg.row(v), cache ? &cache->gru[t][v] : nullptr);
            std::copy(hv.begin(), hv.end(), next.row(v).begin());
        }
        H = std::move(next);
        if (cache) {
            cache->H.push_back(H);
            cache->pre.push_back(std::move(pre));
        }
    }
    std::vector<double> scores(C);
    for (std::size_t v = 0; v < C; ++v) scores[v] = x[v] + H(v, v);
    if (cache) cache->valid = true;
    require_finite(scores, "gnn_forward scores");
    return scores;
}

struct GnnGrads {
    Linear fm;
    GruGrads gru;
    std::vector<double> x;

    static GnnGrads zeros_like(const GnnParams& p) {
        GnnGrads g;
        g.fm = Linear(p.fm.out_dim(), p.fm.in_dim());
        g.gru = GruParams::zeros(p.hidden());
        g.x.assign(p.hidden(), 0.0);
        return g;
    }
};

inline GnnGrads gnn_backward(const GnnParams& p, const GnnCache& c,
                             std::span<const double> dscores) {
    if (!c.valid) throw std::logic_error("gnn_backward called without a cached forward pass");
    const std::size_t C = p.hidden();
    require_shape(dscores.size() == C, "gnn_backward: dscores length");
    GnnGrads g = GnnGrads::zeros_like(p);
    Matrix dH(C, C);
    for (std::size_t v = 0; v < C; ++v) {
        dH(v, v) = dscores[v];
        g.x[v] = dscores[v];
    }
    const double inv = 1.0 / static_cast<double>(C - 1);
    std::vector<double> dh(C), dm(C);
    for (std::size_t t = p.rounds; t-- > 0;) {
        Matrix dHprev(C, C);
        Matrix dMsg(C, C);
        for (std::size_t v = 0; v < C; ++v) {
            gru_backward(p.gru, c.gru[t][v], dH.row(v), g.gru, dh, dm);
            axpy(1.0, dh, dHprev.row(v));
            std::copy(dm.begin(), dm.end(), dMsg.row(v).begin());
        }
        std::vector<double> dsum(C, 0.0);
        for (std::size_t v = 0; v < C; ++v) axpy(inv, dMsg.row(v), dsum);
        const Matrix& Hin = c.H[t];
        std::vector<double> dpre(C);
        for (std::size_t u = 0; u < C; ++u) {
            for (std::size_t j = 0; j < C; ++j) {
                double df = dsum[j] - inv * dMsg(u, j);
                dpre[j] = c.pre[t](u, j) > 0.0 ? df : 0.0;
            }
            outer_add(g.fm.W, dpre, Hin.row(u));
            axpy(1.0, dpre, g.fm.b);
            tmatvec_add(p.fm.W, dpre, dHprev.row(u));
        }
        dH = std::move(dHprev);
    }
    for (std::size_t v = 0; v < C; ++v) g.x[v] += dH(v, v);
    return g;
}

inline void accumulate(GnnGrads& into, const GnnGrads& g) {
    accumulate(into.fm, g.fm);
    accumulate(into.gru, g.gru);
    axpy(1.0, g.x, into.x);
}

inline void apply_sgd(GnnParams& p, const GnnGrads& g, double lr, double wd) {
    apply_sgd(p.fm, g.fm, lr, wd);
    apply_sgd(p.gru, g.gru, lr, wd);
}

}  // namespace partiallab
