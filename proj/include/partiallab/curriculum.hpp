#pragma once

#include <algorithm>
#include <cstddef>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "partiallab/core.hpp"
#include "partiallab/data.hpp"

namespace partiallab {

/// 0/1 matrix over example x class slots. As an argument it marks the
/// candidate (missing) slots; as a result it marks slots that carry a label.
using SelectionMask = LabelMatrix;

enum class StrategyKind { threshold, proportion, positive_only, ensemble, uncertainty, two_step };

inline const char* strategy_name(StrategyKind k) {
    switch (k) {
        case StrategyKind::threshold: return "threshold";
        case StrategyKind::proportion: return "proportion";
        case StrategyKind::positive_only: return "positive_only";
        case StrategyKind::ensemble: return "ensemble";
        case StrategyKind::uncertainty: return "uncertainty";
        case StrategyKind::two_step: return "two_step";
    }
    throw std::invalid_argument("unknown strategy kind");
}

inline StrategyKind parse_strategy(const std::string& s) {
    if (s == "threshold") return StrategyKind::threshold;
    if (s == "proportion") return StrategyKind::proportion;
    if (s == "positive_only") return StrategyKind::positive_only;
    if (s == "ensemble") return StrategyKind::ensemble;
    if (s == "uncertainty") return StrategyKind::uncertainty;
    if (s == "two_step") return StrategyKind::two_step;
    throw std::invalid_argument("unknown strategy: " + s);
}

struct StrategyConfig {
    StrategyKind kind = StrategyKind::threshold;
    double theta = 2.0;
    std::size_t ensemble_size = 1;

    /// Number of trained model replicas the strategy consumes.
    std::size_t models_needed() const {
        return kind == StrategyKind::ensemble || kind == StrategyKind::uncertainty ? ensemble_size
                                                                                   : 1;
    }

    void validate() const {
        switch (kind) {
            case StrategyKind::threshold:
            case StrategyKind::positive_only:
                if (theta <= 0.0) throw std::invalid_argument("strategy theta must be > 0");
                break;
            case StrategyKind::proportion:
                if (theta <= 0.0 || theta > 1.0)
                    throw std::invalid_argument("proportion theta must be in (0,1]");
                break;
            case StrategyKind::ensemble:
            case StrategyKind::uncertainty:
                if (theta <= 0.0) throw std::invalid_argument("strategy theta must be > 0");
                if (ensemble_size < 2)
                    throw std::invalid_argument("ensemble_size must be >= 2 for this strategy");
                break;
            case StrategyKind::two_step:
                break;
        }
    }
};

/// Newly selected slots plus the labels predicted for them.
struct Selection {
    SelectionMask selected;  // 1 where a slot was just selected
    LabelMatrix labels;      // predicted label at selected slots, 0 elsewhere
    std::size_t count = 0;
};

inline void check_selection_inputs(const Matrix& scores, const SelectionMask& missing) {
    require_shape(scores.rows == missing.rows && scores.cols == missing.cols,
                  "scores/missing dims");
    for (int v : missing.data)
        if (v != 0 && v != 1) throw std::invalid_argument("missing mask must be 0/1");
}

inline Selection make_empty_selection(std::size_t rows, std::size_t cols) {
    Selection s;
    s.selected = SelectionMask(rows, cols);
    s.labels = LabelMatrix(rows, cols);
    return s;
}

/// Strategy: confident either way. Select missing slots with x >= theta
/// (label +1) or x < -theta (label -1). x == -theta stays unselected.
inline Selection select_threshold(const Matrix& scores, const SelectionMask& missing,
                                  double theta) {
    if (theta <= 0.0) throw std::invalid_argument("select_threshold: theta must be > 0");
    check_selection_inputs(scores, missing);
    Selection s = make_empty_selection(scores.rows, scores.cols);
    for (std::size_t k = 0; k < scores.data.size(); ++k) {
        if (!missing.data[k]) continue;
        double x = scores.data[k];
        if (x >= theta) {
            s.selected.data[k] = 1;
            s.labels.data[k] = 1;
            ++s.count;
        } else if (x < -theta) {
            s.selected.data[k] = 1;
            s.labels.data[k] = -1;
            ++s.count;
        }
    }
    return s;
}

/// Strategy: fixed fraction. Select the ceil(theta * #missing) missing slots
/// with the largest |x|; ties go to the lower example index, then the lower
/// class index. Labels follow the sign of x (0 counts as positive).
inline Selection select_proportion(const Matrix& scores, const SelectionMask& missing,
                                   double theta) {
    if (theta <= 0.0 || theta > 1.0)
        throw std::invalid_argument("select_proportion: theta must be in (0,1]");
    check_selection_inputs(scores, missing);
    Selection s = make_empty_selection(scores.rows, scores.cols);
    std::vector<std::size_t> cand;
    for (std::size_t k = 0; k < scores.data.size(); ++k)
        if (missing.data[k]) cand.push_back(k);
    if (cand.empty()) return s;
    const auto want = static_cast<std::size_t>(
        std::ceil(theta * static_cast<double>(cand.size())));
    std::stable_sort(cand.begin(), cand.end(), [&](std::size_t a, std::size_t b) {
        double fa = std::fabs(scores.data[a]), fb = std::fabs(scores.data[b]);
        if (fa != fb) return fa > fb;
        return a < b;
    });
    for (std::size_t k = 0; k < want && k < cand.size(); ++k) {
        std::size_t slot = cand[k];
        s.selected.data[slot] = 1;
        s.labels.data[slot] = scores.data[slot] >= 0.0 ? 1 : -1;
        ++s.count;
    }
    return s;
}

/// Strategy: positives only. Select missing slots with x >= theta, always +1.
inline Selection select_positive_only(const Matrix& scores, const SelectionMask& missing,
                                      double theta) {
    if (theta <= 0.0) throw std::invalid_argument("select_positive_only: theta must be > 0");
    check_selection_inputs(scores, missing);
    Selection s = make_empty_selection(scores.rows, scores.cols);
    for (std::size_t k = 0; k < scores.data.size(); ++k) {
        if (!missing.data[k]) continue;
        if (scores.data[k] >= theta) {
            s.selected.data[k] = 1;
            s.labels.data[k] = 1;
            ++s.count;
        }
    }
    return s;
}

inline Matrix mean_scores(const std::vector<Matrix>& stack) {
    if (stack.empty()) throw std::invalid_argument("empty score stack");
    Matrix mean = stack[0];
    for (std::size_t k = 1; k < stack.size(); ++k) {
        require_shape(stack[k].rows == mean.rows && stack[k].cols == mean.cols,
                      "score stack dims");
        for (std::size_t j = 0; j < mean.data.size(); ++j) mean.data[j] += stack[k].data[j];
    }
    for (double& v : mean.data) v /= static_cast<double>(stack.size());
    return mean;
}

/// Strategy: ensemble mean. Average K model scores, then threshold like
/// select_threshold.
inline Selection select_ensemble(const std::vector<Matrix>& score_stack,
                                 const SelectionMask& missing, double theta) {
    if (score_stack.size() < 2)
        throw std::invalid_argument("select_ensemble: need at least 2 models");
    return select_threshold(mean_scores(score_stack), missing, theta);
}

/// Strategy: low disagreement. U = population standard deviation of the K
/// sigmoid outputs per slot; select missing slots with U <= theta and label
/// them by the sign of the mean raw score (0 counts as positive).
inline Selection select_uncertainty(const std::vector<Matrix>& prob_stack,
                                    const Matrix& mean_raw, const SelectionMask& missing,
                                    double theta) {
    if (prob_stack.size() < 2)
        throw std::invalid_argument("select_uncertainty: need at least 2 models");
    if (theta <= 0.0) throw std::invalid_argument("select_uncertainty: theta must be > 0");
    check_selection_inputs(mean_raw, missing);
    const std::size_t K = prob_stack.size();
    for (const Matrix& m : prob_stack)
        require_shape(m.rows == mean_raw.rows && m.cols == mean_raw.cols, "prob stack dims");
    Selection s = make_empty_selection(mean_raw.rows, mean_raw.cols);
    for (std::size_t k = 0; k < mean_raw.data.size(); ++k) {
        if (!missing.data[k]) continue;
        double mean = 0.0;
        for (const Matrix& m : prob_stack) mean += m.data[k];
        mean /= static_cast<double>(K);
        double var = 0.0;
        for (const Matrix& m : prob_stack) {
            double d = m.data[k] - mean;
            var += d * d;
        }
        double u = std::sqrt(var / static_cast<double>(K));
        if (u <= theta) {
            s.selected.data[k] = 1;
            s.labels.data[k] = mean_raw.data[k] >= 0.0 ? 1 : -1;
            ++s.count;
        }
    }
    return s;
}

/// Selection-cost diagnostic: each selected slot pays -log sigma(theta).
inline double g_cost(const SelectionMask& v, double theta) {
    if (theta <= 0.0) throw std::invalid_argument("g_cost: theta must be > 0");
    std::size_t n = 0;
    for (int e : v.data) {
        if (e != 0 && e != 1) throw std::invalid_argument("g_cost: mask must be 0/1");
        n += static_cast<std::size_t>(e);
    }
    return static_cast<double>(n) * softplus(-theta);
}

inline SelectionMask known_mask(const Dataset& ds) {
    SelectionMask m(ds.y_observed.rows, ds.y_observed.cols);
    for (std::size_t k = 0; k < m.data.size(); ++k) m.data[k] = ds.y_observed.data[k] != 0;
    return m;
}

inline SelectionMask missing_mask(const Dataset& ds) {
    SelectionMask m(ds.y_observed.rows, ds.y_observed.cols);
    for (std::size_t k = 0; k < m.data.size(); ++k) m.data[k] = ds.y_observed.data[k] == 0;
    return m;
}

struct RelabelOutcome {
    Selection selection;
    SelectionMask v;                // slots carrying a label after the step
    double label_prop_after = 0.0;  // fraction of slots carrying a label
    double tp_rate = 0.0;  // of selected slots that are truly positive, fraction labeled +1
    double tn_rate = 0.0;  // of selected slots that are truly negative, fraction labeled -1
};

/// One relabeling round: run the configured strategy over the currently
/// missing slots of `ds` and write the predicted labels into y_observed.
/// Slots that already carry a label are never touched. `score_stack` holds
/// one raw score matrix per model replica; single-model strategies require
/// exactly one, ensemble-style strategies exactly `ensemble_size`.
inline RelabelOutcome relabel_step(const std::vector<Matrix>& score_stack, Dataset& ds,
                                   const StrategyConfig& cfg) {
    cfg.validate();
    if (score_stack.size() != cfg.models_needed())
        throw std::invalid_argument("relabel_step: strategy needs " +
                                    std::to_string(cfg.models_needed()) + " model(s), got " +
                                    std::to_string(score_stack.size()));
    for (const Matrix& m : score_stack)
        require_shape(m.rows == ds.n() && m.cols == ds.classes(), "relabel score dims");
    SelectionMask missing = missing_mask(ds);
    RelabelOutcome out;
    switch (cfg.kind) {
        case StrategyKind::threshold:
            out.selection = select_threshold(score_stack[0], missing, cfg.theta);
            break;
        case StrategyKind::proportion:
            out.selection = select_proportion(score_stack[0], missing, cfg.theta);
            break;
        case StrategyKind::positive_only:
            out.selection = select_positive_only(score_stack[0], missing, cfg.theta);
            break;
        case StrategyKind::ensemble:
            out.selection = select_ensemble(score_stack, missing, cfg.theta);
            break;
        case StrategyKind::uncertainty: {
            std::vector<Matrix> probs(score_stack.size());
            for (std::size_t k = 0; k < score_stack.size(); ++k) {
                probs[k] = score_stack[k];
                for (double& v : probs[k].data) v = sigmoid(v);
            }
            out.selection =
                select_uncertainty(probs, mean_scores(score_stack), missing, cfg.theta);
            break;
        }
        case StrategyKind::two_step: {
            out.selection = make_empty_selection(ds.n(), ds.classes());
            const Matrix& x = score_stack[0];
            for (std::size_t k = 0; k < missing.data.size(); ++k) {
                if (!missing.data[k]) continue;
                out.selection.selected.data[k] = 1;
                out.selection.labels.data[k] = x.data[k] >= 0.0 ? 1 : -1;
                ++out.selection.count;
            }
            break;
        }
    }
    std::size_t tp_den = 0, tp_num = 0, tn_den = 0, tn_num = 0;
    for (std::size_t k = 0; k < out.selection.selected.data.size(); ++k) {
        if (!out.selection.selected.data[k]) continue;
        ds.y_observed.data[k] = out.selection.labels.data[k];
        if (ds.y_full.data[k] == 1) {
            ++tp_den;
            if (out.selection.labels.data[k] == 1) ++tp_num;
        } else {
            ++tn_den;
            if (out.selection.labels.data[k] == -1) ++tn_num;
        }
    }
    out.v = known_mask(ds);
    std::size_t known = 0;
    for (int e : out.v.data) known += static_cast<std::size_t>(e);
    out.label_prop_after = static_cast<double>(known) / static_cast<double>(out.v.data.size());
    out.tp_rate = tp_den ? static_cast<double>(tp_num) / static_cast<double>(tp_den) : 0.0;
    out.tn_rate = tn_den ? static_cast<double>(tn_num) / static_cast<double>(tn_den) : 0.0;
    return out;
}

inline const char* audit_header() {
    return "round,strategy,theta,n_selected,label_prop_after,tp_rate,tn_rate";
}

inline void write_audit_row(std::ostream& os, std::size_t round, const StrategyConfig& cfg,
                            const RelabelOutcome& out) {
    os << round << "," << strategy_name(cfg.kind) << "," << format_double(cfg.theta) << ","
       << out.selection.count << "," << format_double(out.label_prop_after) << ","
       << format_double(out.tp_rate) << "," << format_double(out.tn_rate) << "\n";
}

}  // namespace partiallab
