#pragma once

#include <charconv>
#include <cstdint>
#include <cstddef>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include "partiallab/core.hpp"
#include "partiallab/rng.hpp"

namespace partiallab {

/// Feature matrix plus two label matrices: the full ground truth (never
/// zero) and the observed view a protocol exposes to training (zeros mark
/// unobserved slots). `protocol` and `seed` record how the observed view
/// was produced.
struct Dataset {
    Matrix features;         // N x d
    LabelMatrix y_full;      // N x C, entries in {-1,+1}
    LabelMatrix y_observed;  // N x C, entries in {-1,0,+1}
    std::string protocol = "full";
    std::uint64_t seed = 0;

    std::size_t n() const { return features.rows; }
    std::size_t dim() const { return features.cols; }
    std::size_t classes() const { return y_full.cols; }
};

inline void validate_dataset(const Dataset& ds) {
    require_shape(ds.y_full.rows == ds.n() && ds.y_observed.rows == ds.n() &&
                      ds.y_full.cols == ds.y_observed.cols,
                  "dataset label dims");
    for (int v : ds.y_full.data)
        if (v != 1 && v != -1) throw std::invalid_argument("y_full must be in {-1,+1}");
    for (int v : ds.y_observed.data)
        if (v != 1 && v != -1 && v != 0)
            throw std::invalid_argument("y_observed must be in {-1,0,+1}");
}

struct BudgetReport {
    std::size_t clean_count = 0;  // observed slots matching ground truth
    std::size_t noisy_count = 0;  // observed slots contradicting ground truth
    std::size_t total_slots = 0;  // N * C
};

inline BudgetReport budget(const Dataset& ds) {
    BudgetReport b;
    b.total_slots = ds.n() * ds.classes();
    for (std::size_t k = 0; k < ds.y_observed.data.size(); ++k) {
        int o = ds.y_observed.data[k];
        if (o == 0) continue;
        if (o == ds.y_full.data[k])
            ++b.clean_count;
        else
            ++b.noisy_count;
    }
    return b;
}

/// Correlated multi-label generator. Each example has C+1 latent normals:
/// one direction shared by every class and one private per class. Class c
/// fires on corr*z[0] + (1-corr)*z[c+1] + b_c >= 0, so `corr` dials the
/// inter-class label correlation from independent (0) to lockstep (1).
/// Features are a fixed random projection of the latents plus small noise,
/// so the labels are learnable from the features.
///
/// Each class is rebalanced by redrawing its offset b_c (up to 100 tries)
/// until it has at least one positive and one negative example.
/// `ensure_positive` additionally redraws an example's latents until the
/// example has at least one positive label (needed by protocols that
/// require a positive per row).
inline Dataset gen_synthetic(std::size_t N, std::size_t C, std::size_t d, double corr,
                             std::uint64_t seed, bool ensure_positive = false) {
    if (N < 1 || C < 1 || d < 1) throw std::invalid_argument("gen_synthetic: N, C, d must be >= 1");
    if (corr < 0.0 || corr > 1.0)
        throw std::invalid_argument("gen_synthetic: correlation_strength outside [0,1]");
    const std::size_t K = C + 1;
    Rng rng_proj(mix_seed(seed, 0xA));
    Rng rng_z(mix_seed(seed, 0x2));
    Rng rng_b(mix_seed(seed, 0xB));
    Rng rng_noise(mix_seed(seed, 0xE));

    Matrix A(d, K);
    double scale = 1.0 / std::sqrt(static_cast<double>(K));
    for (double& a : A.data) a = scale * rng_proj.normal();

    Matrix z(N, K);
    for (double& v : z.data) v = rng_z.normal();

    std::vector<double> b(C);
    for (double& v : b) v = 0.5 * rng_b.normal();

    Dataset ds;
    ds.y_full = LabelMatrix(N, C);
    ds.seed = seed;
    auto label_of = [&](std::size_t i, std::size_t c) {
        double m = corr * z(i, 0) + (1.0 - corr) * z(i, c + 1) + b[c];
        return m >= 0.0 ? 1 : -1;
    };
    auto class_balanced = [&](std::size_t c) {
        bool pos = false, neg = false;
        for (std::size_t i = 0; i < N; ++i) {
            (ds.y_full(i, c) == 1 ? pos : neg) = true;
            if (pos && neg) return true;
        }
        return false;
    };
    for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t i = 0; i < N; ++i) ds.y_full(i, c) = label_of(i, c);
        int tries = 0;
        while (!class_balanced(c)) {
            if (++tries > 100)
                throw std::runtime_error("gen_synthetic: could not balance class " +
                                         std::to_string(c) + " after 100 offset redraws");
            b[c] = 0.5 * rng_b.normal();
            for (std::size_t i = 0; i < N; ++i) ds.y_full(i, c) = label_of(i, c);
        }
    }

    if (ensure_positive) {
        for (std::size_t i = 0; i < N; ++i) {
            int tries = 0;
            auto row_has_positive = [&] {
                for (std::size_t c = 0; c < C; ++c)
                    if (ds.y_full(i, c) == 1) return true;
                return false;
            };
            while (!row_has_positive()) {
                if (++tries > 100)
                    throw std::runtime_error("gen_synthetic: could not draw a positive for row " +
                                             std::to_string(i));
                for (std::size_t k = 0; k < K; ++k) z(i, k) = rng_z.normal();
                for (std::size_t c = 0; c < C; ++c) ds.y_full(i, c) = label_of(i, c);
            }
        }
        for (std::size_t c = 0; c < C; ++c) {
            if (!class_balanced(c))
                throw std::runtime_error("gen_synthetic: class " + std::to_string(c) +
                                         " lost balance during positive-row redraws");
        }
    }

    ds.features = Matrix(N, d);
    for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < K; ++k) acc += A(j, k) * z(i, k);
            ds.features(i, j) = acc + 0.1 * rng_noise.normal();
        }
    }
    ds.y_observed = ds.y_full;
    ds.protocol = "full";
    return ds;
}

inline std::string format_double(double v);

inline void require_fully_labeled(const Dataset& ds, const char* op) {
    for (int v : ds.y_observed.data)
        if (v == 0) throw std::invalid_argument(std::string(op) + ": dataset must be fully labeled");
}

/// Keep exactly round(p*C) uniformly chosen labels per example, zero the rest.
inline Dataset mask_partial(const Dataset& ds, double p, std::uint64_t seed) {
    if (p <= 0.0 || p > 1.0) throw std::invalid_argument("mask_partial: p outside (0,1]");
    require_fully_labeled(ds, "mask_partial");
    const std::size_t C = ds.classes();
    const auto keep = static_cast<std::size_t>(std::lround(p * static_cast<double>(C)));
    if (keep == 0) throw std::invalid_argument("mask_partial: round(p*C) is zero");
    Dataset out = ds;
    Rng rng(mix_seed(seed, seed_tag::kMask));
    std::vector<std::size_t> idx(C);
    for (std::size_t i = 0; i < ds.n(); ++i) {
        for (std::size_t c = 0; c < C; ++c) idx[c] = c;
        rng.shuffle(idx);
        for (std::size_t k = keep; k < C; ++k) out.y_observed(i, idx[k]) = 0;
    }
    out.protocol = "partial:" + format_double(p);
    out.seed = seed;
    return out;
}

/// Keep all labels on round(fraction*N) uniformly chosen examples; the rest
/// become all-zero rows (kept in place so indices and budgets stay aligned).
inline Dataset mask_dense(const Dataset& ds, double fraction, std::uint64_t seed) {
    if (fraction <= 0.0 || fraction > 1.0)
        throw std::invalid_argument("mask_dense: fraction outside (0,1]");
    require_fully_labeled(ds, "mask_dense");
    const auto keep = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(ds.n())));
    if (keep == 0) throw std::invalid_argument("mask_dense: zero labeled examples");
    Dataset out = ds;
    Rng rng(mix_seed(seed, seed_tag::kMask));
    std::vector<std::size_t> rows(ds.n());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    rng.shuffle(rows);
    for (std::size_t k = keep; k < rows.size(); ++k)
        for (std::size_t c = 0; c < ds.classes(); ++c) out.y_observed(rows[k], c) = 0;
    out.protocol = "dense:" + format_double(fraction);
    out.seed = seed;
    return out;
}

/// All slots stay observed; a uniform (1-clean_fraction) subset gets its
/// sign flipped.
inline Dataset corrupt_noisy(const Dataset& ds, double clean_fraction, std::uint64_t seed) {
    if (clean_fraction < 0.0 || clean_fraction > 1.0)
        throw std::invalid_argument("corrupt_noisy: clean_fraction outside [0,1]");
    require_fully_labeled(ds, "corrupt_noisy");
    const std::size_t slots = ds.n() * ds.classes();
    const auto n_flip = static_cast<std::size_t>(
        std::lround((1.0 - clean_fraction) * static_cast<double>(slots)));
    Dataset out = ds;
    Rng rng(mix_seed(seed, seed_tag::kMask));
    std::vector<std::size_t> idx(slots);
    for (std::size_t i = 0; i < slots; ++i) idx[i] = i;
    rng.shuffle(idx);
    for (std::size_t k = 0; k < n_flip; ++k) out.y_observed.data[idx[k]] *= -1;
    out.protocol = "noisy:" + format_double(clean_fraction);
    out.seed = seed;
    return out;
}

/// Keep one uniformly chosen positive per example and flip its remaining
/// positives to -1; negatives are untouched. Models single-positive web
/// supervision, so every row must have at least one positive.
inline Dataset make_noisy_plus(const Dataset& ds, std::uint64_t seed) {
    require_fully_labeled(ds, "make_noisy_plus");
    Dataset out = ds;
    Rng rng(mix_seed(seed, seed_tag::kMask));
    std::vector<std::size_t> pos;
    for (std::size_t i = 0; i < ds.n(); ++i) {
        pos.clear();
        for (std::size_t c = 0; c < ds.classes(); ++c)
            if (ds.y_observed(i, c) == 1) pos.push_back(c);
        if (pos.empty())
            throw std::invalid_argument("make_noisy_plus: example " + std::to_string(i) +
                                        " has no positive label");
        std::size_t kept = pos[rng.below(pos.size())];
        for (std::size_t c : pos)
            if (c != kept) out.y_observed(i, c) = -1;
    }
    out.protocol = "noisy_plus";
    out.seed = seed;
    return out;
}

/// First n_train rows become the training set, the rest the eval set.
/// Both halves keep the protocol and seed fields.
inline std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, std::size_t n_train) {
    if (n_train == 0 || n_train >= ds.n())
        throw std::invalid_argument("split_dataset: n_train must be in [1, N)");
    auto take = [&](std::size_t lo, std::size_t hi) {
        Dataset part;
        part.features = Matrix(hi - lo, ds.dim());
        part.y_full = LabelMatrix(hi - lo, ds.classes());
        part.y_observed = LabelMatrix(hi - lo, ds.classes());
        for (std::size_t i = lo; i < hi; ++i) {
            std::copy(ds.features.row(i).begin(), ds.features.row(i).end(),
                      part.features.row(i - lo).begin());
            std::copy(ds.y_full.row(i).begin(), ds.y_full.row(i).end(),
                      part.y_full.row(i - lo).begin());
            std::copy(ds.y_observed.row(i).begin(), ds.y_observed.row(i).end(),
                      part.y_observed.row(i - lo).begin());
        }
        part.protocol = ds.protocol;
        part.seed = ds.seed;
        return part;
    };
    return {take(0, n_train), take(n_train, ds.n())};
}

// ---- text format ----
// Optional leading '#' comment lines, then a header `N C d protocol seed`,
// then one line per example: d features, C observed labels, C full labels,
// space-separated. Floats use shortest round-trip formatting, so
// write/read/write is byte-identical.

inline std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw std::runtime_error("format_double failed");
    return std::string(buf, ptr);
}

inline double parse_double(std::string_view tok) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
        throw std::runtime_error("bad float token: " + std::string(tok));
    return v;
}

inline void write_dataset(std::ostream& os, const Dataset& ds,
                          const std::vector<std::string>& comments = {}) {
    validate_dataset(ds);
    for (const std::string& c : comments) os << "# " << c << "\n";
    os << ds.n() << " " << ds.classes() << " " << ds.dim() << " " << ds.protocol << " " << ds.seed
       << "\n";
    for (std::size_t i = 0; i < ds.n(); ++i) {
        for (std::size_t j = 0; j < ds.dim(); ++j) {
            if (j) os << " ";
            os << format_double(ds.features(i, j));
        }
        for (std::size_t c = 0; c < ds.classes(); ++c) os << " " << ds.y_observed(i, c);
        for (std::size_t c = 0; c < ds.classes(); ++c) os << " " << ds.y_full(i, c);
        os << "\n";
    }
    if (!os) throw std::runtime_error("write_dataset: stream failure");
}

inline Dataset read_dataset(std::istream& is) {
    std::string line;
    while (std::getline(is, line)) {
        if (!line.empty() && line[0] == '#') continue;
        break;
    }
    if (line.empty()) throw std::runtime_error("read_dataset: missing header");
    std::istringstream hs(line);
    std::size_t N = 0, C = 0, d = 0;
    std::string protocol;
    std::uint64_t seed = 0;
    if (!(hs >> N >> C >> d >> protocol >> seed))
        throw std::runtime_error("read_dataset: bad header: " + line);
    Dataset ds;
    ds.features = Matrix(N, d);
    ds.y_observed = LabelMatrix(N, C);
    ds.y_full = LabelMatrix(N, C);
    ds.protocol = protocol;
    ds.seed = seed;
    std::string tok;
    for (std::size_t i = 0; i < N; ++i) {
        if (!std::getline(is, line))
            throw std::runtime_error("read_dataset: truncated at row " + std::to_string(i));
        std::istringstream ls(line);
        for (std::size_t j = 0; j < d; ++j) {
            if (!(ls >> tok)) throw std::runtime_error("read_dataset: short feature row");
            ds.features(i, j) = parse_double(tok);
        }
        auto read_label = [&](int& dst, bool allow_zero) {
            int v = 0;
            if (!(ls >> v)) throw std::runtime_error("read_dataset: short label row");
            if (v != 1 && v != -1 && (!allow_zero || v != 0))
                throw std::runtime_error("read_dataset: bad label value");
            dst = v;
        };
        for (std::size_t c = 0; c < C; ++c) read_label(ds.y_observed(i, c), true);
        for (std::size_t c = 0; c < C; ++c) read_label(ds.y_full(i, c), false);
        if (ls >> tok) throw std::runtime_error("read_dataset: trailing tokens on row");
    }
    validate_dataset(ds);
    return ds;
}

}  // namespace partiallab
