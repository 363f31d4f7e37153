#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "partiallab/core.hpp"

namespace partiallab {

/// Weight curve g(p) = alpha * p^gamma + beta applied to the fraction p of
/// observed labels. gamma = 0 collapses to the constant alpha + beta.
struct GNorm {
    double alpha = 0.0;
    double beta = 1.0;
    double gamma = 1.0;
};

inline double g_eval(const GNorm& g, double p) {
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("g_eval: p outside [0,1]");
    if (p == 0.0 && g.gamma < 0.0)
        throw std::invalid_argument("g_eval: p = 0 diverges for negative gamma");
    return g.alpha * std::pow(p, g.gamma) + g.beta;
}

/// Solve for (alpha, beta) such that g(1) = 1 and g(p0) = g0 with the given
/// exponent. The constraint at p = 1 pins alpha + beta = 1.
inline GNorm solve_g_params(double gamma, double p0, double g0) {
    if (p0 <= 0.0 || p0 >= 1.0) throw std::invalid_argument("solve_g_params: p0 outside (0,1)");
    if (g0 == 1.0) return GNorm{0.0, 1.0, gamma};
    double denom = std::pow(p0, gamma) - 1.0;
    if (denom == 0.0) throw std::invalid_argument("solve_g_params: singular, p0^gamma == 1");
    double alpha = (g0 - 1.0) / denom;
    return GNorm{alpha, 1.0 - alpha, gamma};
}

/// Fraction of labels that are observed (nonzero) in a {-1,0,+1} row.
inline double label_proportion(std::span<const int> y) {
    if (y.empty()) throw std::invalid_argument("label_proportion: empty row");
    std::size_t known = 0;
    for (int v : y) {
        if (v != -1 && v != 0 && v != 1) throw std::invalid_argument("label_proportion: label not in {-1,0,1}");
        if (v != 0) ++known;
    }
    return static_cast<double>(known) / static_cast<double>(y.size());
}

struct LossResult {
    double loss = 0.0;
    std::vector<double> grad;
};

/// Binary cross-entropy over the observed entries of y, scaled by g(p)/C
/// where p is the observed fraction. Returns the minimization objective
/// (negated log-likelihood) and its gradient w.r.t. the logits x.
/// Rows with no observed labels contribute zero loss and zero gradient.
inline LossResult partial_bce(std::span<const double> x, std::span<const int> y, const GNorm& g) {
    require_shape(x.size() == y.size(), "partial_bce: x/y length");
    require_finite(x, "partial_bce logits");
    const std::size_t C = x.size();
    LossResult out;
    out.grad.assign(C, 0.0);
    double p = label_proportion(y);
    if (p == 0.0) return out;
    double w = g_eval(g, p) / static_cast<double>(C);
    double ll = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
        if (y[c] == 0) continue;
        double t = y[c] == 1 ? 1.0 : 0.0;
        ll += y[c] == 1 ? log_sigmoid(x[c]) : log_sigmoid(-x[c]);
        out.grad[c] = w * (sigmoid(x[c]) - t);
    }
    out.loss = -w * ll;
    return out;
}

}  // namespace partiallab
