#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "partiallab/core.hpp"

namespace partiallab {

/// Threshold raw scores into hard labels: score >= 0 maps to +1, else -1.
inline LabelMatrix binarize(const Matrix& scores) {
    LabelMatrix out(scores.rows, scores.cols);
    for (std::size_t k = 0; k < scores.data.size(); ++k)
        out.data[k] = scores.data[k] >= 0.0 ? 1 : -1;
    return out;
}

inline void check_label_pair(const LabelMatrix& pred, const LabelMatrix& gt) {
    require_shape(pred.rows == gt.rows && pred.cols == gt.cols, "pred/gt label dims");
    if (pred.rows == 0 || pred.cols == 0) throw std::invalid_argument("empty label matrix");
    for (int v : pred.data)
        if (v != 1 && v != -1) throw std::invalid_argument("predictions must be in {-1,+1}");
    for (int v : gt.data)
        if (v != 1 && v != -1) throw std::invalid_argument("ground truth must be in {-1,+1}");
}

/// Fraction of examples whose full label vector is predicted exactly.
inline double exact_match(const LabelMatrix& pred, const LabelMatrix& gt) {
    check_label_pair(pred, gt);
    std::size_t hit = 0;
    for (std::size_t i = 0; i < pred.rows; ++i) {
        if (std::equal(pred.row(i).begin(), pred.row(i).end(), gt.row(i).begin())) ++hit;
    }
    return static_cast<double>(hit) / static_cast<double>(pred.rows);
}

struct ClassCounts {
    std::vector<std::size_t> tp, pred_pos, gt_pos;
};

inline ClassCounts count_per_class(const LabelMatrix& pred, const LabelMatrix& gt) {
    check_label_pair(pred, gt);
    ClassCounts c;
    c.tp.assign(pred.cols, 0);
    c.pred_pos.assign(pred.cols, 0);
    c.gt_pos.assign(pred.cols, 0);
    for (std::size_t i = 0; i < pred.rows; ++i) {
        for (std::size_t j = 0; j < pred.cols; ++j) {
            bool p = pred(i, j) == 1;
            bool g = gt(i, j) == 1;
            if (p) ++c.pred_pos[j];
            if (g) ++c.gt_pos[j];
            if (p && g) ++c.tp[j];
        }
    }
    return c;
}

inline double safe_div(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

struct F1Scores {
    double macro_f1 = 0.0;
    double micro_f1 = 0.0;
};

/// Macro-F1 averages per-class F1; micro-F1 pools true positives across
/// classes: 2*sum(TP) / (sum(gt positives) + sum(predicted positives)).
inline F1Scores f1_scores(const LabelMatrix& pred, const LabelMatrix& gt) {
    ClassCounts c = count_per_class(pred, gt);
    F1Scores out;
    double macro = 0.0;
    std::size_t tp_all = 0, pred_all = 0, gt_all = 0;
    for (std::size_t j = 0; j < pred.cols; ++j) {
        double p = safe_div(static_cast<double>(c.tp[j]), static_cast<double>(c.pred_pos[j]));
        double r = safe_div(static_cast<double>(c.tp[j]), static_cast<double>(c.gt_pos[j]));
        macro += safe_div(2.0 * p * r, p + r);
        tp_all += c.tp[j];
        pred_all += c.pred_pos[j];
        gt_all += c.gt_pos[j];
    }
    out.macro_f1 = macro / static_cast<double>(pred.cols);
    out.micro_f1 = safe_div(2.0 * static_cast<double>(tp_all),
                            static_cast<double>(gt_all + pred_all));
    return out;
}

struct PrecisionRecall {
    double pc_p = 0.0;  // per-class precision, averaged over classes
    double pc_r = 0.0;  // per-class recall, averaged over classes
    double ov_p = 0.0;  // overall precision pooled over all slots
    double ov_r = 0.0;  // overall recall pooled over all slots
};

inline PrecisionRecall pc_ov_precision_recall(const LabelMatrix& pred, const LabelMatrix& gt) {
    ClassCounts c = count_per_class(pred, gt);
    PrecisionRecall out;
    std::size_t tp_all = 0, pred_all = 0, gt_all = 0;
    for (std::size_t j = 0; j < pred.cols; ++j) {
        out.pc_p += safe_div(static_cast<double>(c.tp[j]), static_cast<double>(c.pred_pos[j]));
        out.pc_r += safe_div(static_cast<double>(c.tp[j]), static_cast<double>(c.gt_pos[j]));
        tp_all += c.tp[j];
        pred_all += c.pred_pos[j];
        gt_all += c.gt_pos[j];
    }
    out.pc_p /= static_cast<double>(pred.cols);
    out.pc_r /= static_cast<double>(pred.cols);
    out.ov_p = safe_div(static_cast<double>(tp_all), static_cast<double>(pred_all));
    out.ov_r = safe_div(static_cast<double>(tp_all), static_cast<double>(gt_all));
    return out;
}

struct MapResult {
    double map = 0.0;
    std::size_t classes_scored = 0;
    std::size_t classes_skipped = 0;  // classes with no positive ground truth
};

/// Mean average precision over classes. Per class, examples are ranked by
/// descending score (ties broken by ascending example index) and AP is the
/// mean of precision-at-rank over the positive examples. Classes with no
/// positives are skipped; a note goes to `warn` when given.
inline MapResult mean_average_precision(const Matrix& scores, const LabelMatrix& gt,
                                        std::ostream* warn = nullptr) {
    require_shape(scores.rows == gt.rows && scores.cols == gt.cols, "scores/gt dims");
    if (gt.rows == 0 || gt.cols == 0) throw std::invalid_argument("empty label matrix");
    MapResult out;
    double total = 0.0;
    std::vector<std::size_t> order(scores.rows);
    for (std::size_t j = 0; j < scores.cols; ++j) {
        std::size_t n_pos = 0;
        for (std::size_t i = 0; i < gt.rows; ++i)
            if (gt(i, j) == 1) ++n_pos;
        if (n_pos == 0) {
            ++out.classes_skipped;
            if (warn) *warn << "map: class " << j << " has no positive examples, skipped\n";
            continue;
        }
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (scores(a, j) != scores(b, j)) return scores(a, j) > scores(b, j);
            return a < b;
        });
        double ap = 0.0;
        std::size_t hits = 0;
        for (std::size_t rank = 0; rank < order.size(); ++rank) {
            if (gt(order[rank], j) == 1) {
                ++hits;
                ap += static_cast<double>(hits) / static_cast<double>(rank + 1);
            }
        }
        total += ap / static_cast<double>(n_pos);
        ++out.classes_scored;
    }
    if (out.classes_scored == 0) throw std::invalid_argument("map: no class has positive examples");
    out.map = total / static_cast<double>(out.classes_scored);
    return out;
}

struct MetricsReport {
    double map = 0.0;
    double exact_match = 0.0;
    double macro_f1 = 0.0;
    double micro_f1 = 0.0;
    double pc_p = 0.0;
    double pc_r = 0.0;
    double ov_p = 0.0;
    double ov_r = 0.0;
};

inline MetricsReport compute_metrics(const Matrix& scores, const LabelMatrix& gt,
                                     std::ostream* warn = nullptr) {
    MetricsReport rep;
    LabelMatrix pred = binarize(scores);
    rep.map = mean_average_precision(scores, gt, warn).map;
    rep.exact_match = exact_match(pred, gt);
    F1Scores f1 = f1_scores(pred, gt);
    rep.macro_f1 = f1.macro_f1;
    rep.micro_f1 = f1.micro_f1;
    PrecisionRecall pr = pc_ov_precision_recall(pred, gt);
    rep.pc_p = pr.pc_p;
    rep.pc_r = pr.pc_r;
    rep.ov_p = pr.ov_p;
    rep.ov_r = pr.ov_r;
    return rep;
}

}  // namespace partiallab
