#pragma once

// Core domain types for score-based prevalence estimation: scored items,
// binned score densities, calibration curves, and the two interchangeable
// representations of the joint distribution between classifier scores and
// binary ground-truth labels.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace calex {

enum class Label : int { negative = 0, positive = 1 };

/// One dataset row: a classifier score in [0,1] plus an optional
/// binary ground-truth label.
struct ScoredItem {
    std::string id;
    double score = 0.0;
    std::optional<Label> label;

    bool is_positive() const { return label && *label == Label::positive; }
};

inline double sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

inline void require_unit_interval(double score, const char* what) {
    if (!(score >= 0.0 && score <= 1.0)) {
        throw std::domain_error(std::string(what) + " must lie in [0,1], got " +
                                std::to_string(score));
    }
}

// ---------------------------------------------------------------------------
// Histogram: normalized binned density over [0,1]
// ---------------------------------------------------------------------------

/// Normalized binned density over [0,1]. `edges` has size B+1, strictly
/// ascending, with edges[0]=0 and edges[B]=1; `mass` has size B and sums
/// to 1. Bins are right-open except the last, which is right-closed.
struct Histogram {
    std::vector<double> edges;
    std::vector<double> mass;

    std::size_t bins() const { return mass.size(); }
    double center(std::size_t b) const { return 0.5 * (edges[b] + edges[b + 1]); }
};

inline void validate(const Histogram& h) {
    if (h.edges.size() < 2 || h.mass.size() + 1 != h.edges.size()) {
        throw std::invalid_argument("histogram: edges must have one more entry than mass");
    }
    if (h.edges.front() != 0.0 || h.edges.back() != 1.0) {
        throw std::invalid_argument("histogram: edges must span [0,1]");
    }
    double total = 0.0;
    for (std::size_t b = 0; b < h.mass.size(); ++b) {
        if (h.edges[b + 1] <= h.edges[b]) {
            throw std::invalid_argument("histogram: edges must be strictly increasing");
        }
        if (!(h.mass[b] >= 0.0)) {
            throw std::invalid_argument("histogram: mass must be nonnegative");
        }
        total += h.mass[b];
    }
    if (total == 0.0) {
        throw std::invalid_argument("histogram: empty (all-zero) histogram rejected");
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw std::invalid_argument("histogram: mass must sum to 1, got " +
                                    std::to_string(total));
    }
}

/// Index of the bin containing `score` under the right-open convention
/// (the last bin is right-closed).
inline std::size_t bin_index(const std::vector<double>& edges, double score) {
    require_unit_interval(score, "score");
    if (score >= edges[edges.size() - 2]) {
        return edges.size() - 2;
    }
    auto it = std::upper_bound(edges.begin(), edges.end(), score);
    return static_cast<std::size_t>(it - edges.begin()) - 1;
}

inline std::vector<double> uniform_edges(std::size_t bins) {
    if (bins == 0) {
        throw std::invalid_argument("histogram: need at least one bin");
    }
    std::vector<double> edges(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i) {
        edges[i] = static_cast<double>(i) / static_cast<double>(bins);
    }
    edges.back() = 1.0;
    return edges;
}

/// Empirical normalized histogram of `scores` over the given edges.
inline Histogram histogram_over(std::span<const double> scores,
                                std::vector<double> edges) {
    if (scores.empty()) {
        throw std::invalid_argument("histogram_over: empty score list");
    }
    Histogram h{std::move(edges), std::vector<double>(0)};
    h.mass.assign(h.edges.size() - 1, 0.0);
    const double w = 1.0 / static_cast<double>(scores.size());
    for (double s : scores) {
        h.mass[bin_index(h.edges, s)] += w;
    }
    return h;
}

/// Empirical histogram with `bins` equal-width bins over [0,1].
inline Histogram histogram_of(std::span<const double> scores, std::size_t bins) {
    return histogram_over(scores, uniform_edges(bins));
}

inline void require_shared_edges(const Histogram& a, const Histogram& b,
                                 const char* what) {
    if (a.edges != b.edges) {
        throw std::invalid_argument(std::string(what) + ": histograms must share edges");
    }
}

// ---------------------------------------------------------------------------
// Calibration curves
// ---------------------------------------------------------------------------

/// Stepwise curve over bins: probs[b] applies to any score inside bin b.
struct BinnedCurve {
    std::vector<double> edges;
    std::vector<double> probs;
};

/// Logistic curve sigmoid(w * score + b); nondecreasing for w >= 0.
struct PlattCurve {
    double w = 0.0;
    double b = 0.0;
};

/// Stepwise-constant nondecreasing curve from pool-adjacent-violators
/// breakpoints: probs[i] applies from scores[i] up to the next breakpoint;
/// scores below the first breakpoint take probs.front().
struct IsotonicCurve {
    std::vector<double> scores;
    std::vector<double> probs;
};

/// sigmoid(logit(clip(score)) / t) with scores clipped into
/// [clip_epsilon, 1 - clip_epsilon].
struct TemperatureCurve {
    double t = 1.0;
    double clip_epsilon = 1e-3;
};

/// p_above for score >= threshold, p_below otherwise.
struct StepCurve {
    double threshold = 0.5;
    double p_below = 0.0;
    double p_above = 1.0;
};

/// Treats the raw score as already calibrated.
struct IdentityCurve {};

using CalibrationCurve = std::variant<BinnedCurve, PlattCurve, IsotonicCurve,
                                      TemperatureCurve, StepCurve, IdentityCurve>;

/// P(y = positive | score) under the curve's model.
inline double eval_curve(const CalibrationCurve& curve, double score) {
    require_unit_interval(score, "score");
    return std::visit(
        [score](const auto& c) -> double {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, BinnedCurve>) {
                if (c.probs.empty() || c.edges.size() != c.probs.size() + 1) {
                    throw std::invalid_argument("binned curve: malformed edges/probs");
                }
                return c.probs[bin_index(c.edges, score)];
            } else if constexpr (std::is_same_v<T, PlattCurve>) {
                return sigmoid(c.w * score + c.b);
            } else if constexpr (std::is_same_v<T, IsotonicCurve>) {
                if (c.scores.empty() || c.scores.size() != c.probs.size()) {
                    throw std::invalid_argument("isotonic curve: malformed breakpoints");
                }
                // last breakpoint at or below score; below the first -> first value
                auto it = std::upper_bound(c.scores.begin(), c.scores.end(), score);
                if (it == c.scores.begin()) {
                    return c.probs.front();
                }
                return c.probs[static_cast<std::size_t>(it - c.scores.begin()) - 1];
            } else if constexpr (std::is_same_v<T, TemperatureCurve>) {
                if (!(c.t > 0.0) || !(c.clip_epsilon > 0.0 && c.clip_epsilon < 0.5)) {
                    throw std::invalid_argument("temperature curve: need t > 0, eps in (0,0.5)");
                }
                const double s = std::clamp(score, c.clip_epsilon, 1.0 - c.clip_epsilon);
                return sigmoid(std::log(s / (1.0 - s)) / c.t);
            } else if constexpr (std::is_same_v<T, StepCurve>) {
                return score >= c.threshold ? c.p_above : c.p_below;
            } else {
                return score;
            }
        },
        curve);
}

// ---------------------------------------------------------------------------
// Joint distribution, two ways
// ---------------------------------------------------------------------------

/// Left-hand representation of the joint distribution: a score density
/// plus a calibration curve.
struct JointDistribution {
    Histogram density;
    CalibrationCurve curve;
};

/// Right-hand representation: prevalence plus the per-class score densities.
struct ClassConditionals {
    Histogram f_pos;
    Histogram f_neg;
    double prevalence = 0.0;
};

/// Integral of density x curve over [0,1] via bin midpoints.
inline double prevalence_of(const JointDistribution& joint) {
    validate(joint.density);
    double p = 0.0;
    for (std::size_t b = 0; b < joint.density.bins(); ++b) {
        p += joint.density.mass[b] * eval_curve(joint.curve, joint.density.center(b));
    }
    return p;
}

/// Split the joint into per-class densities and the prevalence.
/// Requires prevalence strictly inside (0,1): with a degenerate class one
/// conditional is undefined.
inline ClassConditionals to_class_conditionals(const JointDistribution& joint) {
    validate(joint.density);
    const std::size_t n = joint.density.bins();
    std::vector<double> pos(n), neg(n);
    double pos_total = 0.0;
    double neg_total = 0.0;
    for (std::size_t b = 0; b < n; ++b) {
        const double c = eval_curve(joint.curve, joint.density.center(b));
        pos[b] = joint.density.mass[b] * c;
        neg[b] = joint.density.mass[b] * (1.0 - c);
        pos_total += pos[b];
        neg_total += neg[b];
    }
    if (pos_total <= 0.0 || neg_total <= 0.0) {
        throw std::domain_error(
            "to_class_conditionals: degenerate prevalence, one class has no mass");
    }
    for (std::size_t b = 0; b < n; ++b) {
        pos[b] /= pos_total;
        neg[b] /= neg_total;
    }
    return ClassConditionals{Histogram{joint.density.edges, std::move(pos)},
                             Histogram{joint.density.edges, std::move(neg)},
                             pos_total};
}

/// Per-bin convex combination p * f_pos + (1-p) * f_neg.
inline Histogram mix(const Histogram& f_pos, const Histogram& f_neg, double p) {
    require_shared_edges(f_pos, f_neg, "mix");
    require_unit_interval(p, "mixing weight");
    Histogram out{f_pos.edges, std::vector<double>(f_pos.bins())};
    for (std::size_t b = 0; b < f_pos.bins(); ++b) {
        out.mass[b] = p * f_pos.mass[b] + (1.0 - p) * f_neg.mass[b];
    }
    return out;
}

/// Rebuild the (density, curve) representation. Zero-mass bins carry no
/// information about the curve and get probability 0.5.
inline JointDistribution from_class_conditionals(const ClassConditionals& cc) {
    validate(cc.f_pos);
    validate(cc.f_neg);
    require_shared_edges(cc.f_pos, cc.f_neg, "from_class_conditionals");
    if (!(cc.prevalence > 0.0 && cc.prevalence < 1.0)) {
        throw std::domain_error("from_class_conditionals: prevalence must be inside (0,1)");
    }
    Histogram density = mix(cc.f_pos, cc.f_neg, cc.prevalence);
    std::vector<double> probs(density.bins());
    for (std::size_t b = 0; b < density.bins(); ++b) {
        probs[b] = density.mass[b] > 0.0
                       ? cc.prevalence * cc.f_pos.mass[b] / density.mass[b]
                       : 0.5;
    }
    BinnedCurve curve{density.edges, std::move(probs)};
    return JointDistribution{std::move(density), std::move(curve)};
}

/// Hellinger distance (1/sqrt(2)) * ||sqrt(h1) - sqrt(h2)||_2, in [0,1].
inline double hellinger(const Histogram& h1, const Histogram& h2) {
    require_shared_edges(h1, h2, "hellinger");
    validate(h1);
    validate(h2);
    double sum = 0.0;
    for (std::size_t b = 0; b < h1.bins(); ++b) {
        const double d = std::sqrt(h1.mass[b]) - std::sqrt(h2.mass[b]);
        sum += d * d;
    }
    return std::sqrt(0.5 * sum);
}

}  // namespace calex
