#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "partiallab/core.hpp"

namespace partiallab {

/// Central finite differences: grad[i] ~ (f(x+eps*e_i) - f(x-eps*e_i)) / (2*eps).
/// `f` is called with the perturbed vector; `x` is restored after each coordinate.
inline std::vector<double> finite_diff(const std::function<double(std::span<const double>)>& f,
                                       std::span<double> x, double eps = 1e-5) {
    std::vector<double> grad(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        double orig = x[i];
        x[i] = orig + eps;
        double fp = f(x);
        x[i] = orig - eps;
        double fm = f(x);
        x[i] = orig;
        grad[i] = (fp - fm) / (2.0 * eps);
    }
    return grad;
}

/// Symmetric relative error between two gradient vectors with an absolute
/// floor so that near-zero pairs compare cleanly.
inline double grad_rel_err(std::span<const double> a, std::span<const double> b,
                           double floor = 1e-12) {
    require_shape(a.size() == b.size(), "grad_rel_err length");
    double num = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        num += d * d;
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    num = std::sqrt(num);
    double denom = std::sqrt(na) + std::sqrt(nb);
    if (denom < floor) return num < floor ? 0.0 : num / floor;
    return num / denom;
}

}  // namespace partiallab
