#pragma once

// Simulation of labeled score datasets from known joint distributions, via
// the two generating directions: intrinsic (label first, then a per-class
// Beta score) and extrinsic (score first from a Beta mixture, then a label
// from a fixed logistic calibration curve). Presets carry the four standard
// strong/weak configurations with base and target variants.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "calex/core.hpp"

namespace calex {

/// Label-first generator: label ~ Bernoulli(prev), then
/// score ~ Beta(alpha_pos, beta_pos) or Beta(alpha_neg, beta_neg).
struct IntrinsicSpec {
    double alpha_pos = 1.0;
    double beta_pos = 1.0;
    double alpha_neg = 1.0;
    double beta_neg = 1.0;
    double prev = 0.5;
};

/// Score-first generator: score ~ lambda B(alpha1,beta1) + (1-lambda) B(alpha2,beta2),
/// then label ~ Bernoulli(sigmoid(w * score + b)).
struct ExtrinsicSpec {
    double w = 0.0;
    double b = 0.0;
    double alpha1 = 1.0;
    double beta1 = 1.0;
    double alpha2 = 1.0;
    double beta2 = 1.0;
    double lambda = 0.5;
};

inline void validate(const IntrinsicSpec& s) {
    if (!(s.alpha_pos > 0.0 && s.beta_pos > 0.0 && s.alpha_neg > 0.0 &&
          s.beta_neg > 0.0)) {
        throw std::invalid_argument("intrinsic spec: Beta shape parameters must be > 0");
    }
    if (!(s.prev >= 0.0 && s.prev <= 1.0)) {
        throw std::invalid_argument("intrinsic spec: prev must lie in [0,1]");
    }
}

inline void validate(const ExtrinsicSpec& s) {
    if (!(s.alpha1 > 0.0 && s.beta1 > 0.0 && s.alpha2 > 0.0 && s.beta2 > 0.0)) {
        throw std::invalid_argument("extrinsic spec: Beta shape parameters must be > 0");
    }
    if (!(s.lambda >= 0.0 && s.lambda <= 1.0)) {
        throw std::invalid_argument("extrinsic spec: lambda must lie in [0,1]");
    }
    if (!std::isfinite(s.w) || !std::isfinite(s.b)) {
        throw std::invalid_argument("extrinsic spec: curve parameters must be finite");
    }
}

inline double beta_pdf(double x, double alpha, double beta) {
    if (x <= 0.0) {
        return alpha < 1.0 ? std::numeric_limits<double>::infinity()
                           : (alpha == 1.0 ? beta : 0.0);
    }
    if (x >= 1.0) {
        return beta < 1.0 ? std::numeric_limits<double>::infinity()
                          : (beta == 1.0 ? alpha : 0.0);
    }
    const double log_norm =
        std::lgamma(alpha + beta) - std::lgamma(alpha) - std::lgamma(beta);
    return std::exp(log_norm + (alpha - 1.0) * std::log(x) +
                    (beta - 1.0) * std::log1p(-x));
}

namespace detail {

/// Beta variate as a gamma ratio, clamped into [0,1].
inline double draw_beta(std::mt19937_64& rng, double alpha, double beta) {
    std::gamma_distribution<double> ga(alpha, 1.0);
    std::gamma_distribution<double> gb(beta, 1.0);
    const double a = ga(rng);
    const double b = gb(rng);
    if (a + b == 0.0) {
        return 0.5;
    }
    return std::clamp(a / (a + b), 0.0, 1.0);
}

}  // namespace detail

inline std::vector<ScoredItem> gen_intrinsic(const IntrinsicSpec& spec, std::size_t n,
                                             std::uint64_t seed) {
    validate(spec);
    if (n == 0) {
        throw std::invalid_argument("gen_intrinsic: n must be >= 1");
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<ScoredItem> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const bool positive = unif(rng) < spec.prev;
        const double score =
            positive ? detail::draw_beta(rng, spec.alpha_pos, spec.beta_pos)
                     : detail::draw_beta(rng, spec.alpha_neg, spec.beta_neg);
        out.push_back({std::to_string(i), score,
                       positive ? Label::positive : Label::negative});
    }
    return out;
}

inline std::vector<ScoredItem> gen_extrinsic(const ExtrinsicSpec& spec, std::size_t n,
                                             std::uint64_t seed) {
    validate(spec);
    if (n == 0) {
        throw std::invalid_argument("gen_extrinsic: n must be >= 1");
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<ScoredItem> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const bool first = unif(rng) < spec.lambda;
        const double score = first ? detail::draw_beta(rng, spec.alpha1, spec.beta1)
                                   : detail::draw_beta(rng, spec.alpha2, spec.beta2);
        const bool positive = unif(rng) < sigmoid(spec.w * score + spec.b);
        out.push_back({std::to_string(i), score,
                       positive ? Label::positive : Label::negative});
    }
    return out;
}

/// E[sigmoid(w C + b)] under the spec's score mixture, by a composite
/// midpoint rule. The density integral in the denominator cancels the
/// quadrature's normalization error.
inline double true_prevalence_extrinsic(const ExtrinsicSpec& spec,
                                        int panels = 100000) {
    validate(spec);
    if (panels < 10000) {
        panels = 10000;
    }
    double num = 0.0;
    double den = 0.0;
    for (int i = 0; i < panels; ++i) {
        const double x = (i + 0.5) / panels;
        const double dens = spec.lambda * beta_pdf(x, spec.alpha1, spec.beta1) +
                            (1.0 - spec.lambda) * beta_pdf(x, spec.alpha2, spec.beta2);
        num += dens * sigmoid(spec.w * x + spec.b);
        den += dens;
    }
    return num / den;
}

// ---------------------------------------------------------------------------
// Presets: the four standard configurations, base and target variants
// ---------------------------------------------------------------------------

using GeneratorSpec = std::variant<IntrinsicSpec, ExtrinsicSpec>;

struct Preset {
    std::string name;
    GeneratorSpec spec;
};

inline const std::vector<Preset>& presets() {
    // strong positives Beta(10,2) vs Beta(2,5) negatives; weak positives
    // Beta(5,3) overlap the negatives heavily
    static const std::vector<Preset> all = {
        {"intrinsic-strong-base", IntrinsicSpec{10, 2, 2, 5, 0.2}},
        {"intrinsic-strong-target", IntrinsicSpec{10, 2, 2, 5, 0.6}},
        {"intrinsic-weak-base", IntrinsicSpec{5, 3, 2, 5, 0.2}},
        {"intrinsic-weak-target", IntrinsicSpec{5, 3, 2, 5, 0.6}},
        {"extrinsic-strong-base", ExtrinsicSpec{25, -15, 10, 2, 2, 5, 0.2}},
        {"extrinsic-strong-target", ExtrinsicSpec{25, -15, 10, 2, 2, 5, 0.6}},
        {"extrinsic-weak-base", ExtrinsicSpec{0.5, -1, 10, 2, 2, 5, 0.2}},
        {"extrinsic-weak-target", ExtrinsicSpec{0.5, -1, 10, 2, 2, 5, 0.6}},
    };
    return all;
}

inline const Preset& preset_by_name(std::string_view name) {
    for (const auto& p : presets()) {
        if (p.name == name) {
            return p;
        }
    }
    throw std::invalid_argument("unknown preset: " + std::string(name));
}

inline std::vector<ScoredItem> generate(const GeneratorSpec& spec, std::size_t n,
                                        std::uint64_t seed) {
    if (std::holds_alternative<IntrinsicSpec>(spec)) {
        return gen_intrinsic(std::get<IntrinsicSpec>(spec), n, seed);
    }
    return gen_extrinsic(std::get<ExtrinsicSpec>(spec), n, seed);
}

/// True prevalence implied by a generator spec: the label probability for
/// intrinsic specs, the calibrated-curve integral for extrinsic specs.
inline double true_prevalence(const GeneratorSpec& spec) {
    if (std::holds_alternative<IntrinsicSpec>(spec)) {
        return std::get<IntrinsicSpec>(spec).prev;
    }
    return true_prevalence_extrinsic(std::get<ExtrinsicSpec>(spec));
}

inline std::vector<double> scores_of(std::span<const ScoredItem> items) {
    std::vector<double> s;
    s.reserve(items.size());
    for (const auto& it : items) {
        s.push_back(it.score);
    }
    return s;
}

inline double positive_fraction(std::span<const ScoredItem> items) {
    if (items.empty()) {
        throw std::invalid_argument("positive_fraction: empty item list");
    }
    std::size_t pos = 0;
    for (const auto& it : items) {
        if (!it.label) {
            throw std::invalid_argument("positive_fraction: unlabeled item " + it.id);
        }
        pos += it.is_positive() ? 1 : 0;
    }
    return static_cast<double>(pos) / static_cast<double>(items.size());
}

}  // namespace calex
