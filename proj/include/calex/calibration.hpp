#pragma once

// Calibration-phase machinery: select a labeled calibration sample from a
// scored base dataset (uniform-per-stratum, Neyman, or simple random
// designs), fit a calibration curve on it, and assemble the base joint
// distribution.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "calex/core.hpp"

namespace calex {

constexpr double kPlattRidge = 1e-6;

// ---------------------------------------------------------------------------
// Stratification and sampling designs
// ---------------------------------------------------------------------------

struct Stratification {
    std::vector<int> stratum_of;            // per input score
    std::vector<std::size_t> counts;        // per stratum
    std::vector<double> bounds;             // k+1 equal-width edges
};

/// A labeled calibration sample that remembers the design it was drawn
/// under, so downstream estimators can respect it.
struct StratifiedSample {
    std::vector<ScoredItem> items;
    std::vector<int> stratum_of;            // parallel to items
    std::vector<double> strata_bounds;      // k+1 edges over [0,1]
    std::vector<std::size_t> population_counts;  // full-base size per stratum

    std::size_t strata() const { return population_counts.size(); }
};

/// Equal-width strata over [0,1]; the last stratum is right-closed.
inline Stratification stratify(std::span<const double> scores, int k) {
    if (k < 1) {
        throw std::invalid_argument("stratify: need k >= 1");
    }
    Stratification out;
    out.bounds = uniform_edges(static_cast<std::size_t>(k));
    out.counts.assign(static_cast<std::size_t>(k), 0);
    out.stratum_of.reserve(scores.size());
    for (double s : scores) {
        const auto h = bin_index(out.bounds, s);
        out.stratum_of.push_back(static_cast<int>(h));
        ++out.counts[h];
    }
    return out;
}

namespace detail {

/// k indices drawn uniformly without replacement via a partial Fisher-Yates
/// pass over `pool`.
inline std::vector<std::size_t> draw_without_replacement(std::vector<std::size_t>& pool,
                                                         std::size_t take,
                                                         std::mt19937_64& rng) {
    std::vector<std::size_t> out;
    out.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
        std::swap(pool[i], pool[pick(rng)]);
        out.push_back(pool[i]);
    }
    return out;
}

inline StratifiedSample collect(std::span<const ScoredItem> base,
                                const Stratification& strat,
                                const std::vector<std::size_t>& allocation,
                                std::mt19937_64& rng) {
    const std::size_t k = strat.counts.size();
    std::vector<std::vector<std::size_t>> pools(k);
    for (std::size_t i = 0; i < base.size(); ++i) {
        pools[static_cast<std::size_t>(strat.stratum_of[i])].push_back(i);
    }
    StratifiedSample sample;
    sample.strata_bounds = strat.bounds;
    sample.population_counts = strat.counts;
    for (std::size_t h = 0; h < k; ++h) {
        const std::size_t take = std::min(allocation[h], pools[h].size());
        for (std::size_t idx : draw_without_replacement(pools[h], take, rng)) {
            sample.items.push_back(base[idx]);
            sample.stratum_of.push_back(static_cast<int>(h));
        }
    }
    return sample;
}

}  // namespace detail

/// Up to `cap` items drawn uniformly without replacement from each of `k`
/// equal-width score strata (all of a smaller stratum).
inline StratifiedSample sample_uniform_strata(std::span<const ScoredItem> base,
                                              std::size_t cap, int k,
                                              std::uint64_t seed) {
    if (base.empty()) {
        throw std::invalid_argument("sample_uniform_strata: empty base dataset");
    }
    std::vector<double> scores;
    scores.reserve(base.size());
    for (const auto& it : base) {
        scores.push_back(it.score);
    }
    const auto strat = stratify(scores, k);
    std::vector<std::size_t> allocation(strat.counts.size(), cap);
    std::mt19937_64 rng(seed);
    return detail::collect(base, strat, allocation, rng);
}

/// Neyman-style allocation n_h proportional to N_h * sigma_h, with the
/// label-free variance proxy sigma_h = sqrt(m_h (1 - m_h)) built from the
/// mean raw score m_h of stratum h. Rounded by largest remainder, clipped
/// at stratum sizes with the excess redistributed proportionally.
inline std::vector<std::size_t> neyman_allocation(
    const std::vector<std::size_t>& population_counts,
    const std::vector<double>& score_means, std::size_t total) {
    const std::size_t k = population_counts.size();
    if (score_means.size() != k) {
        throw std::invalid_argument("neyman_allocation: counts/means size mismatch");
    }
    const std::size_t population =
        std::accumulate(population_counts.begin(), population_counts.end(),
                        std::size_t{0});
    if (total == 0 || total > population) {
        throw std::runtime_error("neyman_allocation: infeasible total " +
                                 std::to_string(total) + " for population " +
                                 std::to_string(population));
    }
    std::vector<double> weight(k);
    double weight_sum = 0.0;
    for (std::size_t h = 0; h < k; ++h) {
        const double m = std::clamp(score_means[h], 0.0, 1.0);
        weight[h] = static_cast<double>(population_counts[h]) * std::sqrt(m * (1.0 - m));
        weight_sum += weight[h];
    }
    if (weight_sum == 0.0) {
        // no variance signal anywhere: fall back to proportional allocation
        for (std::size_t h = 0; h < k; ++h) {
            weight[h] = static_cast<double>(population_counts[h]);
            weight_sum += weight[h];
        }
    }

    // waterfill: clip at stratum capacity, push the excess onto the rest
    std::vector<double> target(k, 0.0);
    std::vector<bool> saturated(k, false);
    double remaining = static_cast<double>(total);
    for (;;) {
        double open_weight = 0.0;
        for (std::size_t h = 0; h < k; ++h) {
            if (!saturated[h]) {
                open_weight += weight[h];
            }
        }
        if (open_weight == 0.0) {
            break;
        }
        bool clipped = false;
        for (std::size_t h = 0; h < k; ++h) {
            if (saturated[h]) {
                continue;
            }
            target[h] = remaining * weight[h] / open_weight;
            const auto capacity = static_cast<double>(population_counts[h]);
            if (target[h] >= capacity) {
                target[h] = capacity;
                saturated[h] = true;
                clipped = true;
            }
        }
        if (!clipped) {
            break;
        }
        remaining = static_cast<double>(total);
        for (std::size_t h = 0; h < k; ++h) {
            if (saturated[h]) {
                remaining -= target[h];
            } else {
                target[h] = 0.0;
            }
        }
    }

    // largest-remainder rounding; remainder ties go to the smaller allocation
    std::vector<std::size_t> alloc(k);
    std::size_t assigned = 0;
    for (std::size_t h = 0; h < k; ++h) {
        alloc[h] = static_cast<std::size_t>(std::floor(target[h]));
        assigned += alloc[h];
    }
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double ra = target[a] - std::floor(target[a]);
        const double rb = target[b] - std::floor(target[b]);
        if (ra != rb) {
            return ra > rb;
        }
        return alloc[a] < alloc[b];
    });
    for (std::size_t h : order) {
        if (assigned == total) {
            break;
        }
        if (alloc[h] < population_counts[h]) {
            ++alloc[h];
            ++assigned;
        }
    }
    if (assigned != total) {
        throw std::runtime_error("neyman_allocation: could not place the requested total");
    }
    return alloc;
}

inline StratifiedSample sample_neyman(std::span<const ScoredItem> base,
                                      std::size_t total, int k, std::uint64_t seed) {
    if (base.empty()) {
        throw std::invalid_argument("sample_neyman: empty base dataset");
    }
    std::vector<double> scores;
    scores.reserve(base.size());
    for (const auto& it : base) {
        scores.push_back(it.score);
    }
    const auto strat = stratify(scores, k);
    std::vector<double> means(strat.counts.size(), 0.0);
    for (std::size_t i = 0; i < scores.size(); ++i) {
        means[static_cast<std::size_t>(strat.stratum_of[i])] += scores[i];
    }
    for (std::size_t h = 0; h < means.size(); ++h) {
        if (strat.counts[h] > 0) {
            means[h] /= static_cast<double>(strat.counts[h]);
        }
    }
    const auto allocation = neyman_allocation(strat.counts, means, total);
    std::mt19937_64 rng(seed);
    return detail::collect(base, strat, allocation, rng);
}

/// Simple random sample without replacement, recorded as a single stratum.
inline StratifiedSample sample_random(std::span<const ScoredItem> base, std::size_t n,
                                      std::uint64_t seed) {
    if (base.empty()) {
        throw std::invalid_argument("sample_random: empty base dataset");
    }
    if (n > base.size()) {
        throw std::invalid_argument("sample_random: n exceeds base size");
    }
    std::vector<double> scores;
    scores.reserve(base.size());
    for (const auto& it : base) {
        scores.push_back(it.score);
    }
    const auto strat = stratify(scores, 1);
    std::vector<std::size_t> allocation{n};
    std::mt19937_64 rng(seed);
    return detail::collect(base, strat, allocation, rng);
}

// ---------------------------------------------------------------------------
// Curve fitters
// ---------------------------------------------------------------------------

namespace detail {

struct LabeledPoint {
    double score;
    double y;
};

inline std::vector<LabeledPoint> labeled_points(std::span<const ScoredItem> sample) {
    std::vector<LabeledPoint> pts;
    pts.reserve(sample.size());
    for (const auto& it : sample) {
        if (it.label) {
            pts.push_back({it.score, it.is_positive() ? 1.0 : 0.0});
        }
    }
    if (pts.empty()) {
        throw std::invalid_argument("curve fit: no labeled items in sample");
    }
    return pts;
}

inline void require_both_classes(const std::vector<LabeledPoint>& pts,
                                 const char* what) {
    bool pos = false;
    bool neg = false;
    for (const auto& p : pts) {
        (p.y > 0.5 ? pos : neg) = true;
    }
    if (!pos || !neg) {
        throw std::runtime_error(std::string(what) +
                                 ": degenerate fit, sample contains a single class");
    }
}

}  // namespace detail

/// Empirical positive fraction per equal-width score bin; bins with no
/// sample fall back to the global positive fraction.
inline CalibrationCurve fit_binned(std::span<const ScoredItem> sample, int bins) {
    const auto pts = detail::labeled_points(sample);
    if (bins < 1) {
        throw std::invalid_argument("fit_binned: need bins >= 1");
    }
    const auto edges = uniform_edges(static_cast<std::size_t>(bins));
    std::vector<double> pos(static_cast<std::size_t>(bins), 0.0);
    std::vector<double> count(static_cast<std::size_t>(bins), 0.0);
    double global_pos = 0.0;
    for (const auto& p : pts) {
        const auto b = bin_index(edges, p.score);
        pos[b] += p.y;
        count[b] += 1.0;
        global_pos += p.y;
    }
    global_pos /= static_cast<double>(pts.size());
    std::vector<double> probs(static_cast<std::size_t>(bins));
    for (std::size_t b = 0; b < probs.size(); ++b) {
        probs[b] = count[b] > 0.0 ? pos[b] / count[b] : global_pos;
    }
    return BinnedCurve{edges, std::move(probs)};
}

struct PlattObjective {
    double value;
    double grad_w;
    double grad_b;
};

/// Ridge-penalized Bernoulli negative log-likelihood of sigmoid(w s + b)
/// and its gradient.
inline PlattObjective platt_objective(std::span<const ScoredItem> sample, double w,
                                      double b, double ridge = kPlattRidge) {
    const auto pts = detail::labeled_points(sample);
    double value = 0.0;
    double gw = 0.0;
    double gb = 0.0;
    for (const auto& p : pts) {
        const double z = w * p.score + b;
        // -log lik = log(1 + e^-|z|) + max(z,0) - y z, stable for large |z|
        value += std::log1p(std::exp(-std::abs(z))) + std::max(z, 0.0) - p.y * z;
        const double resid = sigmoid(z) - p.y;
        gw += resid * p.score;
        gb += resid;
    }
    value += ridge * (w * w + b * b);
    gw += 2.0 * ridge * w;
    gb += 2.0 * ridge * b;
    return {value, gw, gb};
}

struct PlattTrace {
    std::vector<double> objective;  // value after each accepted Newton step
};

/// Logistic calibration curve by damped Newton iteration on the penalized
/// log-likelihood; converges when the gradient max-norm drops below 1e-8
/// (at most 100 iterations). Requires both classes in the sample.
inline CalibrationCurve fit_platt(std::span<const ScoredItem> sample,
                                  PlattTrace* trace = nullptr) {
    const auto pts = detail::labeled_points(sample);
    detail::require_both_classes(pts, "fit_platt");
    double w = 0.0;
    double b = 0.0;
    auto objective_at = [&](double ww, double bb) {
        long double value = 0.0L;
        for (const auto& p : pts) {
            const double z = ww * p.score + bb;
            value += std::log1p(std::exp(-std::abs(z))) + std::max(z, 0.0) - p.y * z;
        }
        return value + kPlattRidge * (ww * ww + bb * bb);
    };
    long double current = objective_at(w, b);
    if (trace) {
        trace->objective.push_back(static_cast<double>(current));
    }
    for (int iter = 0; iter < 100; ++iter) {
        double gw = 2.0 * kPlattRidge * w;
        double gb = 2.0 * kPlattRidge * b;
        double hww = 2.0 * kPlattRidge;
        double hwb = 0.0;
        double hbb = 2.0 * kPlattRidge;
        for (const auto& p : pts) {
            const double q = sigmoid(w * p.score + b);
            const double resid = q - p.y;
            const double weight = q * (1.0 - q);
            gw += resid * p.score;
            gb += resid;
            hww += weight * p.score * p.score;
            hwb += weight * p.score;
            hbb += weight;
        }
        const double gnorm = std::max(std::abs(gw), std::abs(gb));
        if (gnorm < 1e-8) {
            break;
        }
        const double det = hww * hbb - hwb * hwb;
        const double dw = -(hbb * gw - hwb * gb) / det;
        const double db = -(hww * gb - hwb * gw) / det;
        // halve the step until the objective improves
        double step = 1.0;
        long double next = objective_at(w + step * dw, b + step * db);
        while (next > current && step > 1e-12) {
            step *= 0.5;
            next = objective_at(w + step * dw, b + step * db);
        }
        if (next > current) {
            // improvement is below objective precision; inside the quadratic
            // basin the undamped step still contracts the gradient
            if (gnorm >= 1e-4) {
                break;
            }
            step = 1.0;
            next = objective_at(w + dw, b + db);
        }
        w += step * dw;
        b += step * db;
        current = next;
        if (trace) {
            trace->objective.push_back(static_cast<double>(current));
        }
    }
    return PlattCurve{w, b};
}

/// Pool-adjacent-violators least-squares fit of the binary labels,
/// nondecreasing in score. Tied scores are pooled up front since the curve
/// maps score to a single probability.
inline CalibrationCurve fit_isotonic(std::span<const ScoredItem> sample) {
    auto pts = detail::labeled_points(sample);
    std::sort(pts.begin(), pts.end(),
              [](const auto& a, const auto& b) { return a.score < b.score; });

    struct Block {
        double score_start;
        double weight;
        double mean;
    };
    std::vector<Block> merged;  // tie groups, one per distinct score
    for (const auto& p : pts) {
        if (!merged.empty() && merged.back().score_start == p.score) {
            auto& blk = merged.back();
            blk.mean = (blk.mean * blk.weight + p.y) / (blk.weight + 1.0);
            blk.weight += 1.0;
        } else {
            merged.push_back({p.score, 1.0, p.y});
        }
    }
    std::vector<Block> stack;
    for (const auto& blk : merged) {
        stack.push_back(blk);
        while (stack.size() > 1 &&
               stack[stack.size() - 2].mean > stack.back().mean + 0.0) {
            const Block top = stack.back();
            stack.pop_back();
            Block& prev = stack.back();
            prev.mean = (prev.mean * prev.weight + top.mean * top.weight) /
                        (prev.weight + top.weight);
            prev.weight += top.weight;
        }
    }
    // expand back to one breakpoint per distinct score
    IsotonicCurve curve;
    std::size_t block = 0;
    double consumed = 0.0;
    for (const auto& blk : merged) {
        if (consumed >= stack[block].weight) {
            consumed = 0.0;
            ++block;
        }
        curve.scores.push_back(blk.score_start);
        curve.probs.push_back(std::clamp(stack[block].mean, 0.0, 1.0));
        consumed += blk.weight;
    }
    return curve;
}

/// Single-parameter temperature fit: sigmoid(logit(clip(score)) / t), t > 0
/// chosen by golden-section search on log t in [-4, 4].
inline CalibrationCurve fit_temperature(std::span<const ScoredItem> sample,
                                        double clip_epsilon = 1e-3) {
    if (!(clip_epsilon > 0.0 && clip_epsilon < 0.5)) {
        throw std::invalid_argument("fit_temperature: clip_epsilon must be in (0, 0.5)");
    }
    const auto pts = detail::labeled_points(sample);
    detail::require_both_classes(pts, "fit_temperature");
    std::vector<double> logits;
    logits.reserve(pts.size());
    for (const auto& p : pts) {
        const double s = std::clamp(p.score, clip_epsilon, 1.0 - clip_epsilon);
        logits.push_back(std::log(s / (1.0 - s)));
    }
    auto nll = [&](double log_t) {
        const double t = std::exp(log_t);
        double value = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const double z = logits[i] / t;
            value += std::log1p(std::exp(-std::abs(z))) + std::max(z, 0.0) -
                     pts[i].y * z;
        }
        return value;
    };
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = -4.0;
    double hi = 4.0;
    double x1 = hi - phi * (hi - lo);
    double x2 = lo + phi * (hi - lo);
    double f1 = nll(x1);
    double f2 = nll(x2);
    while (hi - lo > 1e-6) {
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = nll(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = nll(x2);
        }
    }
    return TemperatureCurve{std::exp(0.5 * (lo + hi)), clip_epsilon};
}

/// Attach a fitted curve to the empirical base score density.
inline JointDistribution build_base_joint(std::span<const double> base_scores,
                                          CalibrationCurve curve, int bins) {
    return JointDistribution{histogram_of(base_scores, static_cast<std::size_t>(bins)),
                             std::move(curve)};
}

using Fitter = std::function<CalibrationCurve(std::span<const ScoredItem>)>;

/// binned | platt | isotonic | temperature
inline Fitter fitter_by_name(std::string_view name, int bins = 20,
                             double clip_epsilon = 1e-3) {
    if (name == "binned") {
        return [bins](std::span<const ScoredItem> s) { return fit_binned(s, bins); };
    }
    if (name == "platt") {
        return [](std::span<const ScoredItem> s) { return fit_platt(s); };
    }
    if (name == "isotonic") {
        return [](std::span<const ScoredItem> s) { return fit_isotonic(s); };
    }
    if (name == "temperature") {
        return [clip_epsilon](std::span<const ScoredItem> s) {
            return fit_temperature(s, clip_epsilon);
        };
    }
    throw std::invalid_argument("unknown fitter: " + std::string(name));
}

}  // namespace calex
