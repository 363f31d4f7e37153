#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "partiallab/core.hpp"
#include "partiallab/rng.hpp"

namespace partiallab {

/// One affine layer, y = W x + b with W stored out_dim x in_dim.
struct Linear {
    Matrix W;
    std::vector<double> b;

    Linear() = default;
    Linear(std::size_t out_dim, std::size_t in_dim) : W(out_dim, in_dim), b(out_dim, 0.0) {}

    std::size_t in_dim() const { return W.cols; }
    std::size_t out_dim() const { return W.rows; }
};

inline void glorot_fill(Matrix& W, Rng& rng) {
    double limit = std::sqrt(6.0 / static_cast<double>(W.rows + W.cols));
    for (double& w : W.data) w = rng.uniform(-limit, limit);
}

/// Feed-forward net: affine layers with ReLU between them (none after the last).
/// sizes = [d_in, hidden..., d_out]; a single layer (sizes of length 2) is plain affine.
struct MlpParams {
    std::vector<Linear> layers;

    static MlpParams glorot(const std::vector<std::size_t>& sizes, Rng& rng) {
        if (sizes.size() < 2) throw std::invalid_argument("mlp needs at least [d_in, d_out]");
        MlpParams p;
        for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
            Linear lin(sizes[l + 1], sizes[l]);
            glorot_fill(lin.W, rng);
            p.layers.push_back(std::move(lin));
        }
        return p;
    }

    static MlpParams zeros(const std::vector<std::size_t>& sizes) {
        if (sizes.size() < 2) throw std::invalid_argument("mlp needs at least [d_in, d_out]");
        MlpParams p;
        for (std::size_t l = 0; l + 1 < sizes.size(); ++l) p.layers.emplace_back(sizes[l + 1], sizes[l]);
        return p;
    }

    std::size_t in_dim() const { return layers.front().in_dim(); }
    std::size_t out_dim() const { return layers.back().out_dim(); }
};

struct MlpCache {
    std::vector<Matrix> acts;  // acts[l] = input to layer l; acts[0] = X
    std::vector<Matrix> pre;   // pre[l] = pre-activation output of layer l
    bool valid = false;
};

struct MlpGrads {
    std::vector<Linear> layers;
    Matrix input;  // dLoss/dX

    static MlpGrads zeros_like(const MlpParams& p, std::size_t n_rows) {
        MlpGrads g;
        for (const Linear& l : p.layers) g.layers.emplace_back(l.out_dim(), l.in_dim());
        g.input = Matrix(n_rows, p.in_dim());
        return g;
    }
};

inline Matrix mlp_forward(const MlpParams& p, const Matrix& X, MlpCache* cache = nullptr) {
    require_shape(X.cols == p.in_dim(), "mlp input cols != d_in");
    if (cache) {
        cache->acts.clear();
        cache->pre.clear();
        cache->acts.push_back(X);
    }
    Matrix cur = X;
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        const Linear& lin = p.layers[l];
        Matrix out(cur.rows, lin.out_dim());
        for (std::size_t i = 0; i < cur.rows; ++i) affine(lin.W, lin.b, cur.row(i), out.row(i));
        if (cache) cache->pre.push_back(out);
        if (l + 1 < p.layers.size()) {
            for (double& v : out.data) v = relu(v);
            if (cache) cache->acts.push_back(out);
        }
        cur = std::move(out);
    }
    if (cache) cache->valid = true;
    require_finite(cur, "mlp_forward output");
    return cur;
}

/// Backward through the cached forward pass. dY is dLoss/d(output).
inline MlpGrads mlp_backward(const MlpParams& p, const MlpCache& cache, const Matrix& dY) {
    if (!cache.valid) throw std::logic_error("mlp_backward called without a cached forward pass");
    require_shape(dY.rows == cache.acts[0].rows && dY.cols == p.out_dim(), "mlp_backward dY dims");
    MlpGrads g = MlpGrads::zeros_like(p, dY.rows);
    Matrix delta = dY;  // dLoss/d pre[l]
    for (std::size_t li = p.layers.size(); li-- > 0;) {
        const Linear& lin = p.layers[li];
        const Matrix& in = cache.acts[li];
        for (std::size_t n = 0; n < delta.rows; ++n) {
            outer_add(g.layers[li].W, delta.row(n), in.row(n));
            axpy(1.0, delta.row(n), g.layers[li].b);
        }
        Matrix dprev(delta.rows, lin.in_dim());
        for (std::size_t n = 0; n < delta.rows; ++n) tmatvec_add(lin.W, delta.row(n), dprev.row(n));
        if (li > 0) {
            const Matrix& pre_prev = cache.pre[li - 1];
            for (std::size_t k = 0; k < dprev.data.size(); ++k)
                dprev.data[k] = pre_prev.data[k] > 0.0 ? dprev.data[k] : 0.0;
            delta = std::move(dprev);
        } else {
            g.input = std::move(dprev);
        }
    }
    return g;
}

// ---- GRU cell ----

/// Gate parameters for one GRU cell operating on message m and hidden state h,
/// both of length H:
///   z = sigma(Wz m + Uz h + bz)
///   r = sigma(Wr m + Ur h + br)
///   hc = tanh(Wh m + Uh (r*h) + bh)
///   h' = (1-z)*h + z*hc
struct GruParams {
    Matrix Wz, Uz, Wr, Ur, Wh, Uh;
    std::vector<double> bz, br, bh;

    std::size_t hidden() const { return bz.size(); }

    static GruParams zeros(std::size_t h) {
        GruParams p;
        p.Wz = p.Uz = p.Wr = p.Ur = p.Wh = p.Uh = Matrix(h, h);
        p.bz = p.br = p.bh = std::vector<double>(h, 0.0);
        return p;
    }

    static GruParams glorot(std::size_t h, Rng& rng) {
        GruParams p = zeros(h);
        glorot_fill(p.Wz, rng);
        glorot_fill(p.Uz, rng);
        glorot_fill(p.Wr, rng);
        glorot_fill(p.Ur, rng);
        glorot_fill(p.Wh, rng);
        glorot_fill(p.Uh, rng);
        return p;
    }
};

struct GruCache {
    std::vector<double> h, m, z, r, rh, hc;
    bool valid = false;
};

using GruGrads = GruParams;  // same shapes, accumulated in place

inline std::vector<double> gru_cell(const GruParams& p, std::span<const double> h,
                                    std::span<const double> m, GruCache* cache = nullptr) {
    const std::size_t H = p.hidden();
    require_shape(h.size() == H && m.size() == H, "gru_cell h/m length != H");
    std::vector<double> z(H), r(H), rh(H), hc(H), out(H);
    affine(p.Wz, p.bz, m, z);
    matvec_add(p.Uz, h, z);
    for (double& v : z) v = sigmoid(v);
    affine(p.Wr, p.br, m, r);
    matvec_add(p.Ur, h, r);
    for (double& v : r) v = sigmoid(v);
    for (std::size_t i = 0; i < H; ++i) rh[i] = r[i] * h[i];
    affine(p.Wh, p.bh, m, hc);
    matvec_add(p.Uh, rh, hc);
    for (double& v : hc) v = std::tanh(v);
    for (std::size_t i = 0; i < H; ++i) out[i] = (1.0 - z[i]) * h[i] + z[i] * hc[i];
    if (cache) {
        cache->h.assign(h.begin(), h.end());
        cache->m.assign(m.begin(), m.end());
        cache->z = z;
        cache->r = r;
        cache->rh = rh;
        cache->hc = hc;
        cache->valid = true;
    }
    require_finite(out, "gru_cell output");
    return out;
}

/// Backward through one cached cell application. Accumulates parameter
/// gradients into `g` and writes input gradients into dh (w.r.t. h) and
/// dm (w.r.t. m); dh/dm are overwritten, not accumulated.
inline void gru_backward(const GruParams& p, const GruCache& c, std::span<const double> dout,
                         GruGrads& g, std::span<double> dh, std::span<double> dm) {
    if (!c.valid) throw std::logic_error("gru_backward called without a cached forward pass");
    const std::size_t H = p.hidden();
    require_shape(dout.size() == H && dh.size() == H && dm.size() == H, "gru_backward dims");
    std::vector<double> dz(H), dhc(H), da(H), drh(H), dr(H);
    for (std::size_t i = 0; i < H; ++i) {
        dz[i] = (c.hc[i] - c.h[i]) * dout[i];
        dhc[i] = c.z[i] * dout[i];
        dh[i] = (1.0 - c.z[i]) * dout[i];
        dm[i] = 0.0;
    }
    // candidate path
    for (std::size_t i = 0; i < H; ++i) da[i] = (1.0 - c.hc[i] * c.hc[i]) * dhc[i];
    outer_add(g.Wh, da, c.m);
    outer_add(g.Uh, da, c.rh);
    axpy(1.0, da, g.bh);
    tmatvec_add(p.Wh, da, dm);
    std::fill(drh.begin(), drh.end(), 0.0);
    tmatvec_add(p.Uh, da, drh);
    for (std::size_t i = 0; i < H; ++i) {
        dr[i] = c.h[i] * drh[i];
        dh[i] += c.r[i] * drh[i];
    }
    // reset gate
    for (std::size_t i = 0; i < H; ++i) da[i] = c.r[i] * (1.0 - c.r[i]) * dr[i];
    outer_add(g.Wr, da, c.m);
    outer_add(g.Ur, da, c.h);
    axpy(1.0, da, g.br);
    tmatvec_add(p.Wr, da, dm);
    tmatvec_add(p.Ur, da, dh);
    // update gate
    for (std::size_t i = 0; i < H; ++i) da[i] = c.z[i] * (1.0 - c.z[i]) * dz[i];
    outer_add(g.Wz, da, c.m);
    outer_add(g.Uz, da, c.h);
    axpy(1.0, da, g.bz);
    tmatvec_add(p.Wz, da, dm);
    tmatvec_add(p.Uz, da, dh);
}

inline void accumulate(Linear& into, const Linear& g) {
    require_shape(into.W.rows == g.W.rows && into.W.cols == g.W.cols, "accumulate linear dims");
    axpy(1.0, g.W.data, into.W.data);
    axpy(1.0, g.b, into.b);
}

inline void accumulate(GruGrads& into, const GruGrads& g) {
    axpy(1.0, g.Wz.data, into.Wz.data);
    axpy(1.0, g.Uz.data, into.Uz.data);
    axpy(1.0, g.Wr.data, into.Wr.data);
    axpy(1.0, g.Ur.data, into.Ur.data);
    axpy(1.0, g.Wh.data, into.Wh.data);
    axpy(1.0, g.Uh.data, into.Uh.data);
    axpy(1.0, g.bz, into.bz);
    axpy(1.0, g.br, into.br);
    axpy(1.0, g.bh, into.bh);
}

/// One SGD update with L2 regularization: p <- p - lr * (g + 2*wd*p).
inline void sgd_step(std::span<double> params, std::span<const double> grads, double lr,
                     double weight_decay) {
    require_shape(params.size() == grads.size(), "sgd_step param/grad length");
    if (!all_finite(grads)) throw std::runtime_error("sgd_step: non-finite gradients");
    for (std::size_t i = 0; i < params.size(); ++i)
        params[i] -= lr * (grads[i] + 2.0 * weight_decay * params[i]);
}

inline void apply_sgd(Linear& p, const Linear& g, double lr, double wd) {
    sgd_step(p.W.data, g.W.data, lr, wd);
    sgd_step(p.b, g.b, lr, wd);
}

inline void apply_sgd(MlpParams& p, const MlpGrads& g, double lr, double wd) {
    for (std::size_t l = 0; l < p.layers.size(); ++l) apply_sgd(p.layers[l], g.layers[l], lr, wd);
}

inline void apply_sgd(GruParams& p, const GruGrads& g, double lr, double wd) {
    sgd_step(p.Wz.data, g.Wz.data, lr, wd);
    sgd_step(p.Uz.data, g.Uz.data, lr, wd);
    sgd_step(p.Wr.data, g.Wr.data, lr, wd);
    sgd_step(p.Ur.data, g.Ur.data, lr, wd);
    sgd_step(p.Wh.data, g.Wh.data, lr, wd);
    sgd_step(p.Uh.data, g.Uh.data, lr, wd);
    sgd_step(p.bz, g.bz, lr, wd);
    sgd_step(p.br, g.br, lr, wd);
    sgd_step(p.bh, g.bh, lr, wd);
}

}  // namespace partiallab
