#pragma once

// Prevalence estimators: the counting family (pcc, cpcc, cc, acc) and the
// two stable-class-conditional extrapolators (Hellinger mixture search and
// median sweep).

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "calex/core.hpp"

namespace calex {

enum class Technique { pcc, cpcc, cc, acc, mixture, median_sweep };

inline Technique technique_by_name(std::string_view name) {
    if (name == "pcc") return Technique::pcc;
    if (name == "cpcc") return Technique::cpcc;
    if (name == "cc") return Technique::cc;
    if (name == "acc") return Technique::acc;
    if (name == "mixture") return Technique::mixture;
    if (name == "median_sweep") return Technique::median_sweep;
    throw std::invalid_argument("unknown technique: " + std::string(name));
}

inline std::string technique_name(Technique t) {
    switch (t) {
        case Technique::pcc: return "pcc";
        case Technique::cpcc: return "cpcc";
        case Technique::cc: return "cc";
        case Technique::acc: return "acc";
        case Technique::mixture: return "mixture";
        case Technique::median_sweep: return "median_sweep";
    }
    throw std::logic_error("unreachable technique");
}

struct TechniqueConfig {
    Technique technique = Technique::cpcc;
    double threshold = 0.5;        // cc / acc
    double grid_step = 0.001;      // mixture
    int bins = 20;                 // histogram resolution
    double denominator_guard = 0.05;  // acc / median sweep

    void validate() const {
        if (!(grid_step > 0.0 && grid_step <= 0.5)) {
            throw std::invalid_argument("technique config: grid_step must be in (0, 0.5]");
        }
        if (!(denominator_guard > 0.0 && denominator_guard < 1.0)) {
            throw std::invalid_argument("technique config: guard must be in (0, 1)");
        }
        if (bins < 1) {
            throw std::invalid_argument("technique config: bins must be >= 1");
        }
        require_unit_interval(threshold, "threshold");
    }
};

/// Mean raw score.
inline double estimate_pcc(std::span<const double> scores) {
    if (scores.empty()) {
        throw std::invalid_argument("estimate_pcc: empty score list");
    }
    double sum = 0.0;
    for (double s : scores) {
        sum += s;
    }
    return sum / static_cast<double>(scores.size());
}

/// Mean calibrated probability.
inline double estimate_cpcc(std::span<const double> scores,
                            const CalibrationCurve& curve) {
    if (scores.empty()) {
        throw std::invalid_argument("estimate_cpcc: empty score list");
    }
    double sum = 0.0;
    for (double s : scores) {
        sum += eval_curve(curve, s);
    }
    return sum / static_cast<double>(scores.size());
}

/// Fraction of scores at or above the threshold.
inline double estimate_cc(std::span<const double> scores, double threshold) {
    if (scores.empty()) {
        throw std::invalid_argument("estimate_cc: empty score list");
    }
    require_unit_interval(threshold, "threshold");
    std::size_t above = 0;
    for (double s : scores) {
        above += s >= threshold ? 1 : 0;
    }
    return static_cast<double>(above) / static_cast<double>(scores.size());
}

namespace detail {

/// Histogram mass in bins whose midpoint is at or above the threshold.
inline double mass_at_or_above(const Histogram& h, double threshold) {
    double sum = 0.0;
    for (std::size_t b = 0; b < h.bins(); ++b) {
        if (h.center(b) >= threshold) {
            sum += h.mass[b];
        }
    }
    return sum;
}

}  // namespace detail

/// Adjusted count from an observed above-threshold fraction and the base
/// true/false positive rates, clipped into [0,1].
inline double acc_from_rates(double above, double tpr, double fpr,
                             double guard = 0.05) {
    if (std::abs(tpr - fpr) < guard) {
        throw std::runtime_error(
            "acc: threshold is unstable, |tpr - fpr| < guard");
    }
    return std::clamp((above - fpr) / (tpr - fpr), 0.0, 1.0);
}

/// Adjusted classify-and-count against the base joint distribution. The
/// bin-midpoint convention decides membership above/below the threshold for
/// the rates and the observed fraction alike, so on the base dataset itself
/// the estimate reproduces prevalence_of(base_joint) for any guarded
/// threshold.
inline double estimate_acc(std::span<const double> scores, double threshold,
                           const JointDistribution& base_joint, double guard = 0.05) {
    if (scores.empty()) {
        throw std::invalid_argument("estimate_acc: empty score list");
    }
    require_unit_interval(threshold, "threshold");
    const auto cc = to_class_conditionals(base_joint);
    const double tpr = detail::mass_at_or_above(cc.f_pos, threshold);
    const double fpr = detail::mass_at_or_above(cc.f_neg, threshold);
    const Histogram target = histogram_over(scores, base_joint.density.edges);
    const double above = detail::mass_at_or_above(target, threshold);
    return acc_from_rates(above, tpr, fpr, guard);
}

/// Grid search over candidate prevalences, minimizing the Hellinger distance
/// between the implied mixture of the base class-conditionals and the
/// observed target density. Ties break toward the smaller prevalence; the
/// ends of the grid act as clipping.
inline double estimate_mixture(const Histogram& target_hist,
                               const ClassConditionals& base_cc,
                               double grid_step = 0.001) {
    require_shared_edges(target_hist, base_cc.f_pos, "estimate_mixture");
    require_shared_edges(base_cc.f_pos, base_cc.f_neg, "estimate_mixture");
    if (!(grid_step > 0.0 && grid_step <= 0.5)) {
        throw std::invalid_argument("estimate_mixture: grid_step must be in (0, 0.5]");
    }
    validate(target_hist);
    // grid {0, step, 2 step, ..., 1}; the endpoint is always included
    const auto steps =
        static_cast<std::size_t>(std::ceil(1.0 / grid_step - 1e-12));
    std::vector<double> sqrt_target(target_hist.bins());
    for (std::size_t b = 0; b < target_hist.bins(); ++b) {
        sqrt_target[b] = std::sqrt(target_hist.mass[b]);
    }
    double best_p = 0.0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i <= steps; ++i) {
        const double p = std::min(static_cast<double>(i) * grid_step, 1.0);
        double sum = 0.0;
        for (std::size_t b = 0; b < target_hist.bins(); ++b) {
            const double m =
                p * base_cc.f_pos.mass[b] + (1.0 - p) * base_cc.f_neg.mass[b];
            const double d = std::sqrt(m) - sqrt_target[b];
            sum += d * d;
        }
        if (sum < best_d) {
            best_d = sum;
            best_p = p;
        }
    }
    return best_p;
}

/// Adjusted-count estimates across every interior bin edge whose rate gap
/// passes the guard, combined by the median (mean of the two middle values
/// for even counts).
inline double estimate_median_sweep(const Histogram& target_hist,
                                    const ClassConditionals& base_cc,
                                    double guard = 0.05) {
    require_shared_edges(target_hist, base_cc.f_pos, "estimate_median_sweep");
    require_shared_edges(base_cc.f_pos, base_cc.f_neg, "estimate_median_sweep");
    validate(target_hist);
    std::vector<double> estimates;
    const auto& edges = target_hist.edges;
    for (std::size_t j = 1; j + 1 < edges.size(); ++j) {
        const double t = edges[j];
        const double tpr = detail::mass_at_or_above(base_cc.f_pos, t);
        const double fpr = detail::mass_at_or_above(base_cc.f_neg, t);
        if (std::abs(tpr - fpr) < guard) {
            continue;
        }
        const double above = detail::mass_at_or_above(target_hist, t);
        estimates.push_back(std::clamp((above - fpr) / (tpr - fpr), 0.0, 1.0));
    }
    if (estimates.empty()) {
        throw std::runtime_error("median sweep: no threshold passes the guard");
    }
    std::sort(estimates.begin(), estimates.end());
    const std::size_t n = estimates.size();
    if (n % 2 == 1) {
        return estimates[n / 2];
    }
    return 0.5 * (estimates[n / 2 - 1] + estimates[n / 2]);
}

/// Dispatch a configured technique against target scores and the base joint
/// distribution. Histogram-based techniques bin the target over the joint's
/// edges so the class-conditionals line up.
inline double estimate(const TechniqueConfig& config,
                       std::span<const double> target_scores,
                       const JointDistribution& base_joint) {
    config.validate();
    switch (config.technique) {
        case Technique::pcc:
            return estimate_pcc(target_scores);
        case Technique::cpcc:
            return estimate_cpcc(target_scores, base_joint.curve);
        case Technique::cc:
            return estimate_cc(target_scores, config.threshold);
        case Technique::acc:
            return estimate_acc(target_scores, config.threshold, base_joint,
                                config.denominator_guard);
        case Technique::mixture:
            return estimate_mixture(
                histogram_over(target_scores, base_joint.density.edges),
                to_class_conditionals(base_joint), config.grid_step);
        case Technique::median_sweep:
            return estimate_median_sweep(
                histogram_over(target_scores, base_joint.density.edges),
                to_class_conditionals(base_joint), config.denominator_guard);
    }
    throw std::logic_error("unreachable technique");
}

}  // namespace calex
