// Command-line surface for the calibrate-extrapolate toolkit: dataset
// simulation, base calibration, target extrapolation, the four-configuration
// experiment grid, and multi-period series estimation.

#include <cstdio>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "calex/bootstrap.hpp"
#include "calex/calibration.hpp"
#include "calex/core.hpp"
#include "calex/csv.hpp"
#include "calex/estimators.hpp"
#include "calex/generators.hpp"
#include "calex/serialization.hpp"
#include "calex/workflows.hpp"

namespace {

std::uint64_t resolve_seed(std::optional<std::uint64_t> flag) {
    if (flag) {
        return *flag;
    }
    std::random_device entropy;
    const std::uint64_t seed =
        (static_cast<std::uint64_t>(entropy()) << 32) ^ entropy();
    std::printf("seed: %llu\n", static_cast<unsigned long long>(seed));
    return seed;
}

std::string pct(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f%%", 100.0 * v);
    return buf;
}

struct SimulateArgs {
    std::string preset;
    std::string generator;
    calex::IntrinsicSpec intrinsic;
    calex::ExtrinsicSpec extrinsic;
    std::size_t n = 0;
    std::optional<std::uint64_t> seed;
    std::string out;
};

int cmd_simulate(const SimulateArgs& args) {
    calex::GeneratorSpec spec;
    if (!args.preset.empty()) {
        if (!args.generator.empty()) {
            std::cerr << "simulate: --preset conflicts with --generator\n";
            return 1;
        }
        spec = calex::preset_by_name(args.preset).spec;
    } else if (args.generator == "intrinsic") {
        spec = args.intrinsic;
    } else if (args.generator == "extrinsic") {
        spec = args.extrinsic;
    } else {
        std::cerr << "simulate: need --preset or --generator intrinsic|extrinsic\n";
        return 1;
    }
    const auto seed = resolve_seed(args.seed);
    const auto items = calex::generate(spec, args.n, seed);
    calex::write_dataset_csv(args.out, items);
    std::printf("wrote %s: n=%zu, positive fraction %s\n", args.out.c_str(),
                items.size(), pct(calex::positive_fraction(items)).c_str());
    return 0;
}

struct CalibrateArgs {
    std::string base;
    std::string sample;
    calex::CalibrateOptions options;
    std::optional<std::uint64_t> seed;
    std::string out_joint = "joint.json";
    std::string out_sample = "sample.csv";
};

int cmd_calibrate(CalibrateArgs args) {
    args.options.seed = resolve_seed(args.seed);
    const auto base = calex::read_dataset_csv(args.base);
    std::optional<std::vector<calex::ScoredItem>> presampled;
    if (!args.sample.empty()) {
        presampled = calex::read_dataset_csv(args.sample);
    }
    const auto result = calex::run_calibrate(base, std::move(presampled), args.options);
    calex::save_json(args.out_joint, calex::to_json(result.joint));
    calex::write_dataset_csv(args.out_sample, result.sample.items);
    std::printf("calibration sample: %zu items (%s)\n", result.sample.items.size(),
                args.options.sampler.c_str());
    std::printf("base prevalence estimate: %s, 95%% CI (%s, %s), %zu replicates\n",
                pct(result.report.point).c_str(), pct(result.report.ci_low).c_str(),
                pct(result.report.ci_high).c_str(), result.report.replicates);
    std::printf("wrote %s and %s\n", args.out_joint.c_str(), args.out_sample.c_str());
    return 0;
}

struct ExtrapolateArgs {
    std::string joint;
    std::string target;
    std::string technique;
    calex::TechniqueConfig config;
    int bins = 0;  // 0: inherit the joint's bin count
    std::string base;
    std::string sample;
    std::string fitter = "platt";
    int strata = 10;
    std::size_t reps = 1000;
    std::optional<std::uint64_t> seed;
    std::string out = "report.json";
};

int cmd_extrapolate(ExtrapolateArgs args) {
    const auto seed = resolve_seed(args.seed);
    const auto joint = calex::joint_from_json(calex::load_json(args.joint));
    const auto target = calex::read_dataset_csv(args.target);
    if (target.empty()) {
        std::cerr << "extrapolate: target dataset is empty\n";
        return 1;
    }
    const auto target_scores = calex::scores_of(target);
    args.config.technique = calex::technique_by_name(args.technique);
    args.config.bins =
        args.bins > 0 ? args.bins : static_cast<int>(joint.density.bins());

    calex::EstimateReport report;
    if (!args.base.empty() && !args.sample.empty()) {
        const auto base = calex::read_dataset_csv(args.base);
        const auto sample = calex::adopt_sample(
            base, calex::read_dataset_csv(args.sample), args.strata);
        report = calex::bootstrap_estimate(calex::scores_of(base), sample,
                                           target_scores, args.config, args.fitter,
                                           args.reps, seed);
    } else {
        report.technique = args.technique;
        report.point = calex::estimate(args.config, target_scores, joint);
        report.ci_low = report.point;
        report.ci_high = report.point;
        report.replicates = 1;
        report.seed = seed;
    }
    calex::save_json(args.out, calex::to_json(report));
    std::printf("%s estimate: %s", report.technique.c_str(), pct(report.point).c_str());
    if (report.replicates > 1) {
        std::printf(", 95%% CI (%s, %s), %zu replicates",
                    pct(report.ci_low).c_str(), pct(report.ci_high).c_str(),
                    report.replicates);
    }
    std::printf("\nwrote %s\n", args.out.c_str());
    return 0;
}

struct ExperimentArgs {
    calex::ExperimentOptions options;
    std::optional<std::uint64_t> seed;
};

int cmd_experiment(ExperimentArgs args) {
    args.options.seed = resolve_seed(args.seed);
    const auto result = calex::run_experiment(args.options);
    for (const auto& row : result.rows) {
        std::printf("%-17s base: calibrated %s (%s, %s)  no-calib %s  truth %s\n",
                    row.config.c_str(), pct(row.calibrated.point).c_str(),
                    pct(row.calibrated.ci_low).c_str(),
                    pct(row.calibrated.ci_high).c_str(),
                    pct(row.no_calibration).c_str(), pct(row.true_base).c_str());
        std::printf("%-17s target: mixture %s (%s, %s)  cpcc %s (%s, %s)  truth %s\n",
                    "", pct(row.mixture.point).c_str(), pct(row.mixture.ci_low).c_str(),
                    pct(row.mixture.ci_high).c_str(), pct(row.cpcc.point).c_str(),
                    pct(row.cpcc.ci_low).c_str(), pct(row.cpcc.ci_high).c_str(),
                    pct(row.true_target).c_str());
    }
    for (const auto& check : result.checks) {
        std::printf("[%s] %s: %s\n", check.pass ? "PASS" : "FAIL", check.name.c_str(),
                    check.detail.c_str());
    }
    std::printf("wrote %s and %s\n",
                (args.options.out_dir / "table1.csv").string().c_str(),
                (args.options.out_dir / "table2.csv").string().c_str());
    return result.pass ? 0 : 2;
}

struct SeriesArgs {
    std::string manifest;
    std::vector<std::string> techniques;
    std::size_t reps = 1000;
    std::optional<std::uint64_t> seed;
    std::string out;
};

int cmd_series(const SeriesArgs& args) {
    const auto seed = resolve_seed(args.seed);
    const std::filesystem::path manifest_path(args.manifest);
    const auto manifest = calex::manifest_from_json(
        calex::load_json(manifest_path), manifest_path.parent_path());
    const auto rows = calex::run_series(manifest, args.techniques, args.reps, seed);
    calex::write_series_csv(args.out, rows);
    std::printf("wrote %zu rows to %s\n", rows.size(), args.out.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"calex: classifier-calibrated prevalence estimation"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand(
        "simulate", "Generate a labeled score dataset from a known joint");
    simulate->add_option("--preset", sim.preset,
                         "intrinsic-strong-base, extrinsic-weak-target, ...");
    simulate->add_option("--generator", sim.generator, "intrinsic | extrinsic");
    simulate->add_option("--alpha-pos", sim.intrinsic.alpha_pos);
    simulate->add_option("--beta-pos", sim.intrinsic.beta_pos);
    simulate->add_option("--alpha-neg", sim.intrinsic.alpha_neg);
    simulate->add_option("--beta-neg", sim.intrinsic.beta_neg);
    simulate->add_option("--prev", sim.intrinsic.prev);
    simulate->add_option("--w", sim.extrinsic.w);
    simulate->add_option("--b", sim.extrinsic.b);
    simulate->add_option("--alpha1", sim.extrinsic.alpha1);
    simulate->add_option("--beta1", sim.extrinsic.beta1);
    simulate->add_option("--alpha2", sim.extrinsic.alpha2);
    simulate->add_option("--beta2", sim.extrinsic.beta2);
    simulate->add_option("--lambda", sim.extrinsic.lambda);
    simulate->add_option("--n", sim.n, "items to generate")
        ->required()
        ->check(CLI::PositiveNumber);
    simulate->add_option("--seed", sim.seed);
    simulate->add_option("--out", sim.out, "output CSV path")->required();

    CalibrateArgs cal;
    auto* calibrate = app.add_subcommand(
        "calibrate", "Sample, fit a curve, and build the base joint distribution");
    calibrate->add_option("--base", cal.base, "base dataset CSV")->required();
    calibrate->add_option("--sample", cal.sample,
                          "pre-labeled calibration sample CSV (skips sampling)");
    calibrate->add_option("--sampler", cal.options.sampler,
                          "uniform-strata | neyman | random");
    calibrate->add_option("--fitter", cal.options.fitter,
                          "binned | platt | isotonic | temperature");
    calibrate->add_option("--strata", cal.options.strata);
    calibrate->add_option("--cap", cal.options.cap, "per-stratum cap (uniform-strata)");
    calibrate->add_option("--total", cal.options.total, "sample size (neyman, random)");
    calibrate->add_option("--bins", cal.options.bins);
    calibrate->add_option("--reps", cal.options.reps);
    calibrate->add_option("--seed", cal.seed);
    calibrate->add_option("--out-joint", cal.out_joint);
    calibrate->add_option("--out-sample", cal.out_sample);

    ExtrapolateArgs ext;
    auto* extrapolate = app.add_subcommand(
        "extrapolate", "Estimate target prevalence from a stored base joint");
    extrapolate->add_option("--joint", ext.joint, "base joint JSON")->required();
    extrapolate->add_option("--target", ext.target, "target dataset CSV")->required();
    extrapolate
        ->add_option("--technique", ext.technique,
                     "pcc | cpcc | cc | acc | mixture | median_sweep")
        ->required();
    extrapolate->add_option("--threshold", ext.config.threshold);
    extrapolate->add_option("--grid-step", ext.config.grid_step);
    extrapolate->add_option("--guard", ext.config.denominator_guard);
    extrapolate->add_option("--bins", ext.bins);
    extrapolate->add_option("--base", ext.base, "base CSV (enables the bootstrap)");
    extrapolate->add_option("--sample", ext.sample,
                            "calibration sample CSV (enables the bootstrap)");
    extrapolate->add_option("--fitter", ext.fitter);
    extrapolate->add_option("--strata", ext.strata);
    extrapolate->add_option("--reps", ext.reps);
    extrapolate->add_option("--seed", ext.seed);
    extrapolate->add_option("--out", ext.out, "report JSON path");

    ExperimentArgs exp;
    auto* experiment = app.add_subcommand(
        "experiment", "Run the four-configuration simulation grid");
    experiment->add_option("--out-dir", exp.options.out_dir)->required();
    experiment->add_option("--reps", exp.options.reps);
    experiment->add_option("--n", exp.options.n);
    experiment->add_option("--bins", exp.options.bins);
    experiment->add_option("--strata", exp.options.strata);
    experiment->add_option("--cap", exp.options.cap);
    experiment->add_option("--seed", exp.seed);

    SeriesArgs ser;
    auto* series = app.add_subcommand(
        "series", "Estimate prevalence for each period in a manifest");
    series->add_option("--manifest", ser.manifest)->required();
    series->add_option("--techniques", ser.techniques)->delimiter(',');
    series->add_option("--reps", ser.reps);
    series->add_option("--seed", ser.seed);
    series->add_option("--out", ser.out, "long-format CSV output")->required();

    CLI11_PARSE(app, argc, argv);
    try {
        if (simulate->parsed()) {
            return cmd_simulate(sim);
        }
        if (calibrate->parsed()) {
            return cmd_calibrate(std::move(cal));
        }
        if (extrapolate->parsed()) {
            return cmd_extrapolate(std::move(ext));
        }
        if (experiment->parsed()) {
            return cmd_experiment(std::move(exp));
        }
        if (series->parsed()) {
            return cmd_series(ser);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
