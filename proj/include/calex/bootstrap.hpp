#pragma once

// Percentile bootstrap over the whole calibrate-then-estimate pipeline:
// resample the calibration sample within each stratum, refit the curve,
// rebuild the base joint, re-estimate. Target scores stay fixed; only the
// calibration labels move.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "calex/calibration.hpp"
#include "calex/core.hpp"
#include "calex/estimators.hpp"

namespace calex {

struct EstimateReport {
    std::string technique;
    double point = 0.0;
    double ci_low = 0.0;
    double ci_high = 1.0;
    std::size_t replicates = 0;
    std::uint64_t seed = 0;
};

namespace detail {

/// Linear-interpolation percentile of a sorted vector.
inline double percentile_sorted(const std::vector<double>& sorted, double q) {
    const std::size_t n = sorted.size();
    if (n == 1) {
        return sorted[0];
    }
    const double h = q * static_cast<double>(n - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, n - 1);
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline std::vector<ScoredItem> resample_within_strata(
    const StratifiedSample& sample,
    const std::vector<std::vector<std::size_t>>& groups, std::mt19937_64& rng) {
    std::vector<ScoredItem> out;
    out.reserve(sample.items.size());
    for (const auto& group : groups) {
        if (group.empty()) {
            continue;
        }
        std::uniform_int_distribution<std::size_t> pick(0, group.size() - 1);
        for (std::size_t i = 0; i < group.size(); ++i) {
            out.push_back(sample.items[group[pick(rng)]]);
        }
    }
    return out;
}

}  // namespace detail

/// Bootstrap the configured estimate: each replicate resamples the
/// calibration sample with replacement within each stratum (preserving the
/// per-stratum counts), refits the named curve, rebuilds the base joint from
/// the fixed base scores, and estimates on the target scores when given,
/// otherwise on the base. Point is the replicate mean; the interval is the
/// middle 95 percent. Replicates whose resample defeats the fitter are
/// retried up to 10 times on derived seeds and then counted as failures;
/// more than 5 percent failures aborts.
inline EstimateReport bootstrap_estimate(
    std::span<const double> base_scores, const StratifiedSample& sample,
    const std::optional<std::vector<double>>& target_scores,
    const TechniqueConfig& config, std::string_view fitter_name, std::size_t reps,
    std::uint64_t seed) {
    config.validate();
    if (reps < 2) {
        throw std::invalid_argument("bootstrap_estimate: need reps >= 2");
    }
    if (base_scores.empty()) {
        throw std::invalid_argument("bootstrap_estimate: empty base scores");
    }
    if (target_scores && target_scores->empty()) {
        throw std::invalid_argument("bootstrap_estimate: empty target scores");
    }
    const Fitter fitter = fitter_by_name(fitter_name, config.bins);

    std::vector<std::vector<std::size_t>> groups(sample.strata());
    for (std::size_t i = 0; i < sample.items.size(); ++i) {
        groups[static_cast<std::size_t>(sample.stratum_of[i])].push_back(i);
    }

    std::vector<double> estimates;
    estimates.reserve(reps);
    std::size_t failures = 0;
    for (std::size_t r = 0; r < reps; ++r) {
        bool done = false;
        for (std::size_t attempt = 0; attempt <= 10 && !done; ++attempt) {
            // retry seeds sit reps*10 past the replicate block
            std::mt19937_64 rng(seed + r + attempt * reps * 10);
            const auto resampled = detail::resample_within_strata(sample, groups, rng);
            try {
                const auto joint =
                    build_base_joint(base_scores, fitter(resampled), config.bins);
                const std::span<const double> eval_on =
                    target_scores ? std::span<const double>(*target_scores)
                                  : base_scores;
                estimates.push_back(estimate(config, eval_on, joint));
                done = true;
            } catch (const std::runtime_error&) {
                // degenerate resample; try the next derived seed
            }
        }
        failures += done ? 0 : 1;
    }
    if (failures * 20 > reps) {
        throw std::runtime_error("bootstrap_estimate: unstable, " +
                                 std::to_string(failures) + " of " +
                                 std::to_string(reps) + " replicates failed");
    }

    std::sort(estimates.begin(), estimates.end());
    double mean = 0.0;
    for (double e : estimates) {
        mean += e;
    }
    mean /= static_cast<double>(estimates.size());
    EstimateReport report;
    report.technique = technique_name(config.technique);
    report.point = mean;
    report.ci_low = detail::percentile_sorted(estimates, 0.025);
    report.ci_high = detail::percentile_sorted(estimates, 0.975);
    report.replicates = estimates.size();
    report.seed = seed;
    return report;
}

}  // namespace calex
