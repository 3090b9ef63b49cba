#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <random>

#include "calex/core.hpp"
#include "calex/csv.hpp"
#include "calex/generators.hpp"
#include "calex/serialization.hpp"
#include "calex/workflows.hpp"

using namespace calex;
using Catch::Approx;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("calex-wf-" + std::to_string(std::random_device{}()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("calibrate workflow on a simulated base", "[workflows][calibrate]") {
    const auto base = gen_intrinsic({10, 2, 2, 5, 0.2}, 20000, 301);
    CalibrateOptions opt;
    opt.reps = 100;
    opt.seed = 302;
    const auto result = run_calibrate(base, std::nullopt, opt);
    CHECK(result.joint.density.bins() == 20);
    CHECK(result.sample.items.size() == 2000);
    CHECK(result.report.point == Approx(0.20).margin(0.015));
    CHECK(result.report.ci_low <= result.report.point);
    CHECK(result.report.point <= result.report.ci_high);
    CHECK(prevalence_of(result.joint) == Approx(result.report.point).margin(0.01));
}

TEST_CASE("calibrate with a single binned bin collapses to the raw sample fraction",
          "[workflows][calibrate]") {
    const auto base = gen_intrinsic({10, 2, 2, 5, 0.2}, 10000, 303);
    CalibrateOptions opt;
    opt.fitter = "binned";
    opt.bins = 1;
    opt.reps = 10;
    opt.seed = 304;
    const auto result = run_calibrate(base, std::nullopt, opt);
    CHECK(prevalence_of(result.joint) ==
          Approx(positive_fraction(result.sample.items)).margin(1e-12));
    // the stratified sample over-represents rare high-score items, so this
    // degenerate estimate is far from the true 20%
    CHECK(std::abs(prevalence_of(result.joint) - 0.20) > 0.05);
}

TEST_CASE("calibrate accepts a pre-labeled sample for an unlabeled base",
          "[workflows][calibrate]") {
    auto base = gen_intrinsic({10, 2, 2, 5, 0.2}, 20000, 305);
    auto sample_items = sample_uniform_strata(base, 200, 10, 306).items;
    for (auto& item : base) {
        item.label.reset();  // real-data mode: base labels unknown
    }
    CalibrateOptions opt;
    opt.reps = 50;
    opt.seed = 307;
    const auto result = run_calibrate(base, sample_items, opt);
    CHECK(result.report.point == Approx(0.20).margin(0.02));

    SECTION("unlabeled items in the sample are rejected") {
        sample_items.front().label.reset();
        CHECK_THROWS_WITH(run_calibrate(base, sample_items, opt),
                          Catch::Matchers::ContainsSubstring("no label"));
    }
    SECTION("single-class samples surface the degenerate fit") {
        for (auto& item : sample_items) {
            item.label = Label::positive;
        }
        CHECK_THROWS_AS(run_calibrate(base, sample_items, opt), std::runtime_error);
    }
}

TEST_CASE("experiment smoke run with two replicates", "[workflows][experiment]") {
    TempDir dir;
    ExperimentOptions opt;
    opt.out_dir = dir.path / "out";
    opt.n = 4000;
    opt.reps = 2;
    opt.seed = 310;
    const auto result = run_experiment(opt);
    REQUIRE(result.rows.size() == 4);
    CHECK(result.checks.size() == 8);
    CHECK(std::filesystem::exists(opt.out_dir / "table1.csv"));
    CHECK(std::filesystem::exists(opt.out_dir / "table2.csv"));
    for (const auto& row : result.rows) {
        CHECK(row.calibrated.replicates == 2);
        CHECK(row.calibrated.ci_high - row.calibrated.ci_low <= 0.2);
    }
}

TEST_CASE("experiment tables are byte-identical under one seed",
          "[workflows][experiment][determinism]") {
    TempDir dir;
    ExperimentOptions opt;
    opt.n = 2000;
    opt.reps = 5;
    opt.seed = 311;
    opt.out_dir = dir.path / "a";
    run_experiment(opt);
    opt.out_dir = dir.path / "b";
    run_experiment(opt);
    CHECK(slurp(dir.path / "a" / "table1.csv") == slurp(dir.path / "b" / "table1.csv"));
    CHECK(slurp(dir.path / "a" / "table2.csv") == slurp(dir.path / "b" / "table2.csv"));
    opt.out_dir = dir.path / "c";
    opt.seed = 312;
    run_experiment(opt);
    CHECK(slurp(dir.path / "a" / "table1.csv") != slurp(dir.path / "c" / "table1.csv"));
}

TEST_CASE("series manifest parsing", "[workflows][series]") {
    TempDir dir;
    SECTION("relative paths resolve against the manifest directory") {
        const auto m = manifest_from_json(
            json::parse(R"({"base_joint":"j.json",
                            "periods":[{"label":"w1","target":"t1.csv"}],
                            "techniques":["cpcc"]})"),
            dir.path);
        CHECK(m.base_joint == dir.path / "j.json");
        CHECK(m.periods.size() == 1);
        CHECK(m.periods[0].target_csv == dir.path / "t1.csv");
    }
    SECTION("at least one period required") {
        CHECK_THROWS_AS(
            manifest_from_json(
                json::parse(R"({"base_joint":"j.json","periods":[]})"), dir.path),
            std::invalid_argument);
    }
}

TEST_CASE("series over identical targets agrees with the base prevalence",
          "[workflows][series]") {
    TempDir dir;
    const auto base = gen_intrinsic({10, 2, 2, 5, 0.2}, 20000, 313);
    CalibrateOptions copt;
    copt.reps = 10;
    copt.seed = 314;
    const auto cal = run_calibrate(base, std::nullopt, copt);
    const double base_prev = prevalence_of(cal.joint);

    write_dataset_csv(dir.path / "base.csv", base);
    write_dataset_csv(dir.path / "sample.csv", cal.sample.items);
    save_json(dir.path / "joint.json", to_json(cal.joint));
    write_dataset_csv(dir.path / "t1.csv", base);
    write_dataset_csv(dir.path / "t2.csv", base);
    write_dataset_csv(dir.path / "t3.csv", base);

    SeriesManifest manifest;
    manifest.base_joint = dir.path / "joint.json";
    manifest.periods = {{"w1", dir.path / "t1.csv"},
                        {"w2", dir.path / "t2.csv"},
                        {"w3", dir.path / "t3.csv"}};
    manifest.base_csv = dir.path / "base.csv";
    manifest.sample_csv = dir.path / "sample.csv";

    const auto rows =
        run_series(manifest, {"cpcc", "mixture", "median_sweep"}, 50, 315);
    REQUIRE(rows.size() == 9);
    for (const auto& row : rows) {
        CHECK(row.point == Approx(base_prev).margin(0.02));
        CHECK(row.replicates == 50);
    }
}

TEST_CASE("series without bootstrap inputs reports point estimates",
          "[workflows][series]") {
    TempDir dir;
    const auto base = gen_intrinsic({10, 2, 2, 5, 0.2}, 10000, 316);
    CalibrateOptions copt;
    copt.reps = 10;
    copt.seed = 317;
    const auto cal = run_calibrate(base, std::nullopt, copt);
    save_json(dir.path / "joint.json", to_json(cal.joint));
    write_dataset_csv(dir.path / "t1.csv",
                      gen_intrinsic({10, 2, 2, 5, 0.4}, 10000, 318));
    write_dataset_csv(dir.path / "t2.csv",
                      gen_intrinsic({10, 2, 2, 5, 0.5}, 10000, 319));
    write_dataset_csv(dir.path / "t3.csv",
                      gen_intrinsic({10, 2, 2, 5, 0.6}, 10000, 320));

    SeriesManifest manifest;
    manifest.base_joint = dir.path / "joint.json";
    manifest.periods = {{"w1", dir.path / "t1.csv"},
                        {"w2", dir.path / "t2.csv"},
                        {"w3", dir.path / "t3.csv"}};

    const auto rows = run_series(manifest, {"mixture", "pcc"}, 10, 321);
    REQUIRE(rows.size() == 6);  // periods x techniques
    for (const auto& row : rows) {
        CHECK(row.replicates == 1);
        CHECK(row.ci_low == row.point);
        CHECK(row.ci_high == row.point);
    }
    const auto csv = dir.path / "series.csv";
    write_series_csv(csv, rows);
    CHECK(slurp(csv).starts_with("period,technique,point,ci_low,ci_high,replicates\n"));
}

TEST_CASE("series tracks a rising prevalence", "[workflows][series]") {
    TempDir dir;
    const auto base = gen_intrinsic({10, 2, 2, 5, 0.2}, 20000, 322);
    CalibrateOptions copt;
    copt.reps = 10;
    copt.seed = 323;
    const auto cal = run_calibrate(base, std::nullopt, copt);
    save_json(dir.path / "joint.json", to_json(cal.joint));

    SeriesManifest manifest;
    manifest.base_joint = dir.path / "joint.json";
    const std::vector<double> truth{0.2, 0.3, 0.4, 0.5};
    for (std::size_t week = 0; week < truth.size(); ++week) {
        const auto file = dir.path / ("week" + std::to_string(week) + ".csv");
        write_dataset_csv(file, gen_intrinsic({10, 2, 2, 5, truth[week]}, 20000,
                                              330 + week));
        manifest.periods.push_back({"week" + std::to_string(week), file});
    }
    const auto rows = run_series(manifest, {"mixture"}, 10, 324);
    REQUIRE(rows.size() == truth.size());
    for (std::size_t week = 0; week < truth.size(); ++week) {
        CHECK(rows[week].point == Approx(truth[week]).margin(0.02));
        if (week > 0) {
            CHECK(rows[week].point > rows[week - 1].point);
        }
    }
}

TEST_CASE("series errors name the failing period", "[workflows][series]") {
    TempDir dir;
    const auto base = gen_intrinsic({10, 2, 2, 5, 0.2}, 5000, 325);
    CalibrateOptions copt;
    copt.reps = 10;
    copt.seed = 326;
    const auto cal = run_calibrate(base, std::nullopt, copt);
    save_json(dir.path / "joint.json", to_json(cal.joint));

    SeriesManifest manifest;
    manifest.base_joint = dir.path / "joint.json";
    manifest.periods = {{"march", dir.path / "missing.csv"}};
    CHECK_THROWS_WITH(run_series(manifest, {"cpcc"}, 10, 327),
                      Catch::Matchers::ContainsSubstring("march"));
}
