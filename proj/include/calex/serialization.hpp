#pragma once

// JSON forms of the joint-distribution representations and estimate reports.
// Doubles round-trip exactly through nlohmann's shortest-representation
// printing.

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "calex/bootstrap.hpp"
#include "calex/core.hpp"

namespace calex {

using json = nlohmann::json;

inline json to_json(const CalibrationCurve& curve) {
    return std::visit(
        [](const auto& c) -> json {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, BinnedCurve>) {
                return {{"kind", "binned"}, {"edges", c.edges}, {"probs", c.probs}};
            } else if constexpr (std::is_same_v<T, PlattCurve>) {
                return {{"kind", "platt"}, {"w", c.w}, {"b", c.b}};
            } else if constexpr (std::is_same_v<T, IsotonicCurve>) {
                return {{"kind", "isotonic"}, {"scores", c.scores}, {"probs", c.probs}};
            } else if constexpr (std::is_same_v<T, TemperatureCurve>) {
                return {{"kind", "temperature"}, {"t", c.t},
                        {"clip_epsilon", c.clip_epsilon}};
            } else if constexpr (std::is_same_v<T, StepCurve>) {
                return {{"kind", "step"}, {"threshold", c.threshold},
                        {"p_below", c.p_below}, {"p_above", c.p_above}};
            } else {
                return {{"kind", "identity"}};
            }
        },
        curve);
}

namespace detail {

inline void require_probs(const std::vector<double>& probs, const char* what) {
    for (double p : probs) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw std::invalid_argument(std::string(what) +
                                        ": probabilities must lie in [0,1]");
        }
    }
}

}  // namespace detail

inline CalibrationCurve curve_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "binned") {
        BinnedCurve c{j.at("edges").get<std::vector<double>>(),
                      j.at("probs").get<std::vector<double>>()};
        if (c.edges.size() != c.probs.size() + 1) {
            throw std::invalid_argument("binned curve: edges/probs size mismatch");
        }
        detail::require_probs(c.probs, "binned curve");
        return c;
    }
    if (kind == "platt") {
        return PlattCurve{j.at("w").get<double>(), j.at("b").get<double>()};
    }
    if (kind == "isotonic") {
        IsotonicCurve c{j.at("scores").get<std::vector<double>>(),
                        j.at("probs").get<std::vector<double>>()};
        if (c.scores.empty() || c.scores.size() != c.probs.size()) {
            throw std::invalid_argument("isotonic curve: scores/probs size mismatch");
        }
        detail::require_probs(c.probs, "isotonic curve");
        return c;
    }
    if (kind == "temperature") {
        return TemperatureCurve{j.at("t").get<double>(),
                                j.at("clip_epsilon").get<double>()};
    }
    if (kind == "step") {
        return StepCurve{j.at("threshold").get<double>(),
                         j.at("p_below").get<double>(),
                         j.at("p_above").get<double>()};
    }
    if (kind == "identity") {
        return IdentityCurve{};
    }
    throw std::invalid_argument("unknown curve kind: " + kind);
}

inline json to_json(const JointDistribution& joint) {
    return {{"edges", joint.density.edges},
            {"mass", joint.density.mass},
            {"curve", to_json(joint.curve)}};
}

inline JointDistribution joint_from_json(const json& j) {
    JointDistribution joint{Histogram{j.at("edges").get<std::vector<double>>(),
                                      j.at("mass").get<std::vector<double>>()},
                            curve_from_json(j.at("curve"))};
    validate(joint.density);
    return joint;
}

inline json to_json(const ClassConditionals& cc) {
    return {{"edges", cc.f_pos.edges},
            {"f_pos", cc.f_pos.mass},
            {"f_neg", cc.f_neg.mass},
            {"prevalence", cc.prevalence}};
}

inline ClassConditionals class_conditionals_from_json(const json& j) {
    const auto edges = j.at("edges").get<std::vector<double>>();
    ClassConditionals cc{Histogram{edges, j.at("f_pos").get<std::vector<double>>()},
                         Histogram{edges, j.at("f_neg").get<std::vector<double>>()},
                         j.at("prevalence").get<double>()};
    validate(cc.f_pos);
    validate(cc.f_neg);
    require_unit_interval(cc.prevalence, "prevalence");
    return cc;
}

inline json to_json(const EstimateReport& r) {
    return {{"technique", r.technique}, {"point", r.point},   {"ci_low", r.ci_low},
            {"ci_high", r.ci_high},     {"replicates", r.replicates}, {"seed", r.seed}};
}

inline EstimateReport report_from_json(const json& j) {
    return EstimateReport{j.at("technique").get<std::string>(),
                          j.at("point").get<double>(),
                          j.at("ci_low").get<double>(),
                          j.at("ci_high").get<double>(),
                          j.at("replicates").get<std::size_t>(),
                          j.at("seed").get<std::uint64_t>()};
}

inline void save_json(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << j.dump(2) << '\n';
}

inline json load_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot read " + path.string());
    }
    return json::parse(in);
}

}  // namespace calex
