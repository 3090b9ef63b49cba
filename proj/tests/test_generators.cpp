#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "calex/core.hpp"
#include "calex/generators.hpp"
#include "oracles.hpp"

using namespace calex;
using Catch::Approx;

namespace {

Histogram class_histogram(const std::vector<ScoredItem>& items, Label which,
                          std::size_t bins) {
    std::vector<double> s;
    for (const auto& it : items) {
        if (it.label == which) {
            s.push_back(it.score);
        }
    }
    return histogram_of(s, bins);
}

double hellinger_to_beta(const Histogram& h, double alpha, double beta) {
    const auto masses = oracles::beta_bin_masses(alpha, beta, h.edges);
    Histogram ref{h.edges, masses};
    return hellinger(h, ref);
}

}  // namespace

TEST_CASE("gen_intrinsic matches its spec", "[gen][intrinsic]") {
    SECTION("degenerate prior gives one class and the right score law") {
        const auto items = gen_intrinsic({10, 2, 2, 5, 1.0}, 20000, 91);
        for (const auto& it : items) {
            REQUIRE(it.is_positive());
        }
        const auto h = histogram_of(scores_of(items), 20);
        CHECK(hellinger_to_beta(h, 10, 2) < 0.03);
    }
    SECTION("prev=0 draws every score from the negative law") {
        const auto items = gen_intrinsic({10, 2, 2, 5, 0.0}, 20000, 92);
        const auto h = histogram_of(scores_of(items), 20);
        CHECK(hellinger_to_beta(h, 2, 5) < 0.03);
    }
    SECTION("base label fraction near 20 percent") {
        const auto items = gen_intrinsic({10, 2, 2, 5, 0.2}, 20000, 93);
        CHECK(positive_fraction(items) == Approx(0.20).margin(0.01));
    }
    SECTION("target label fraction near 60 percent") {
        const auto items = gen_intrinsic({10, 2, 2, 5, 0.6}, 20000, 94);
        CHECK(positive_fraction(items) == Approx(0.60).margin(0.011));
    }
    SECTION("scores stay in the unit interval") {
        const auto items = gen_intrinsic({0.5, 0.5, 2, 5, 0.5}, 5000, 95);
        for (const auto& it : items) {
            REQUIRE(it.score >= 0.0);
            REQUIRE(it.score <= 1.0);
        }
    }
    SECTION("invalid specs rejected") {
        CHECK_THROWS_AS(gen_intrinsic({0, 2, 2, 5, 0.2}, 10, 1), std::invalid_argument);
        CHECK_THROWS_AS(gen_intrinsic({1, 2, 2, 5, 1.2}, 10, 1), std::invalid_argument);
        CHECK_THROWS_AS(gen_intrinsic({1, 2, 2, 5, 0.2}, 0, 1), std::invalid_argument);
    }
}

TEST_CASE("gen_extrinsic matches its spec", "[gen][extrinsic]") {
    SECTION("flat curve makes labels fair coin flips") {
        const auto items = gen_extrinsic({0, 0, 10, 2, 2, 5, 0.2}, 20000, 96);
        CHECK(positive_fraction(items) == Approx(0.5).margin(0.011));
    }
    SECTION("strong base configuration label fraction") {
        const auto items = gen_extrinsic({25, -15, 10, 2, 2, 5, 0.2}, 20000, 97);
        CHECK(positive_fraction(items) == Approx(0.2313).margin(0.01));
    }
    SECTION("weak target configuration label fraction") {
        const auto items = gen_extrinsic({0.5, -1, 10, 2, 2, 5, 0.6}, 20000, 98);
        CHECK(positive_fraction(items) == Approx(0.3338).margin(0.011));
    }
    SECTION("score density is the stated mixture") {
        const auto items = gen_extrinsic({25, -15, 10, 2, 2, 5, 0.2}, 20000, 99);
        const auto h = histogram_of(scores_of(items), 20);
        const auto c1 = oracles::beta_bin_masses(10, 2, h.edges);
        const auto c2 = oracles::beta_bin_masses(2, 5, h.edges);
        Histogram ref{h.edges, std::vector<double>(20)};
        for (std::size_t b = 0; b < 20; ++b) {
            ref.mass[b] = 0.2 * c1[b] + 0.8 * c2[b];
        }
        CHECK(hellinger(h, ref) < 0.03);
    }
}

TEST_CASE("true_prevalence_extrinsic quadrature", "[gen][quadrature]") {
    SECTION("flat curve integrates to one half exactly") {
        CHECK(true_prevalence_extrinsic({0, 0, 10, 2, 2, 5, 0.2}) ==
              Approx(0.5).margin(1e-12));
    }
    SECTION("strong base value") {
        const double v = true_prevalence_extrinsic({25, -15, 10, 2, 2, 5, 0.2});
        CHECK(v == Approx(0.2315930347).margin(1e-6));
        CHECK(v == Approx(0.2313).margin(5e-4));
    }
    SECTION("strong target value") {
        const double v = true_prevalence_extrinsic({25, -15, 10, 2, 2, 5, 0.6});
        CHECK(v == Approx(0.5927042358).margin(1e-6));
    }
    SECTION("weak base and target values") {
        CHECK(true_prevalence_extrinsic({0.5, -1, 10, 2, 2, 5, 0.2}) ==
              Approx(0.3102132396).margin(1e-6));
        CHECK(true_prevalence_extrinsic({0.5, -1, 10, 2, 2, 5, 0.6}) ==
              Approx(0.3342339989).margin(1e-6));
    }
    SECTION("agrees with an independent Simpson oracle") {
        const ExtrinsicSpec spec{3.0, -2.0, 4, 3, 2, 6, 0.35};
        const double oracle = oracles::simpson(
            [&](double x) {
                return (0.35 * oracles::beta_pdf_ref(x, 4, 3) +
                        0.65 * oracles::beta_pdf_ref(x, 2, 6)) *
                       sigmoid(3.0 * x - 2.0);
            },
            0.0, 1.0, 20000);
        CHECK(true_prevalence_extrinsic(spec) == Approx(oracle).margin(1e-6));
    }
}

TEST_CASE("generator determinism", "[gen][determinism]") {
    const IntrinsicSpec ispec{10, 2, 2, 5, 0.2};
    const auto a = gen_intrinsic(ispec, 2000, 1234);
    const auto b = gen_intrinsic(ispec, 2000, 1234);
    const auto c = gen_intrinsic(ispec, 2000, 1235);
    REQUIRE(a.size() == b.size());
    bool all_equal = true;
    bool any_diff_c = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        all_equal = all_equal && a[i].score == b[i].score && a[i].label == b[i].label &&
                    a[i].id == b[i].id;
        any_diff_c = any_diff_c || a[i].score != c[i].score;
    }
    CHECK(all_equal);
    CHECK(any_diff_c);

    const ExtrinsicSpec espec{25, -15, 10, 2, 2, 5, 0.2};
    const auto x = gen_extrinsic(espec, 2000, 77);
    const auto y = gen_extrinsic(espec, 2000, 77);
    bool same = true;
    for (std::size_t i = 0; i < x.size(); ++i) {
        same = same && x[i].score == y[i].score && x[i].label == y[i].label;
    }
    CHECK(same);
}

TEST_CASE("intrinsic stability: class-conditionals survive a prior shift",
          "[gen][stability]") {
    const auto base = gen_intrinsic({10, 2, 2, 5, 0.2}, 20000, 41);
    const auto target = gen_intrinsic({10, 2, 2, 5, 0.6}, 20000, 42);
    for (Label cls : {Label::positive, Label::negative}) {
        const auto hb = class_histogram(base, cls, 20);
        const auto ht = class_histogram(target, cls, 20);
        CHECK(hellinger(hb, ht) < 0.05);
    }
}

TEST_CASE("extrinsic stability: the calibration curve survives a covariate shift",
          "[gen][stability]") {
    const auto base = gen_extrinsic({25, -15, 10, 2, 2, 5, 0.2}, 20000, 43);
    const auto target = gen_extrinsic({25, -15, 10, 2, 2, 5, 0.6}, 20000, 44);
    const std::size_t B = 10;
    const auto edges = uniform_edges(B);
    std::vector<std::size_t> nb(B, 0), nt(B, 0), pb(B, 0), pt(B, 0);
    for (const auto& it : base) {
        const auto b = bin_index(edges, it.score);
        ++nb[b];
        pb[b] += it.is_positive() ? 1 : 0;
    }
    for (const auto& it : target) {
        const auto b = bin_index(edges, it.score);
        ++nt[b];
        pt[b] += it.is_positive() ? 1 : 0;
    }
    int compared = 0;
    for (std::size_t b = 0; b < B; ++b) {
        if (nb[b] >= 200 && nt[b] >= 200) {
            const double fb = static_cast<double>(pb[b]) / nb[b];
            const double ft = static_cast<double>(pt[b]) / nt[b];
            CHECK(std::abs(fb - ft) <= 0.05);
            ++compared;
        }
    }
    REQUIRE(compared >= 5);
}

TEST_CASE("label fraction converges to the quadrature value", "[gen][extrinsic]") {
    for (std::uint64_t seed : {11u, 12u, 13u}) {
        const ExtrinsicSpec spec{0.5, -1, 10, 2, 2, 5, 0.6};
        const double p = true_prevalence_extrinsic(spec);
        const auto items = gen_extrinsic(spec, 20000, seed);
        const double margin = 3.0 * std::sqrt(p * (1.0 - p) / 20000.0);
        CHECK(positive_fraction(items) == Approx(p).margin(margin));
    }
}

TEST_CASE("presets", "[gen][presets]") {
    REQUIRE(presets().size() == 8);
    const auto& strong_base = preset_by_name("extrinsic-strong-base");
    const auto& es = std::get<ExtrinsicSpec>(strong_base.spec);
    CHECK(es.w == 25.0);
    CHECK(es.b == -15.0);
    CHECK(es.lambda == 0.2);
    const auto& it = std::get<IntrinsicSpec>(preset_by_name("intrinsic-strong-target").spec);
    CHECK(it.prev == 0.6);
    CHECK_THROWS_AS(preset_by_name("intrinsic-mild-base"), std::invalid_argument);

    SECTION("true_prevalence dispatch") {
        CHECK(true_prevalence(preset_by_name("intrinsic-weak-base").spec) == 0.2);
        CHECK(true_prevalence(preset_by_name("extrinsic-strong-target").spec) ==
              Approx(0.5927042358).margin(1e-6));
    }
}

TEST_CASE("joint distribution recovery from simulated data", "[gen][core]") {
    SECTION("empirical density with the generating curve yields the true prevalence") {
        const auto items = gen_extrinsic({25, -15, 10, 2, 2, 5, 0.2}, 20000, 45);
        const auto joint = JointDistribution{histogram_of(scores_of(items), 20),
                                             PlattCurve{25, -15}};
        CHECK(prevalence_of(joint) == Approx(0.2313).margin(0.01));
    }
    SECTION("class-conditionals recovered from the intrinsic base joint") {
        // joint: empirical base density + the true calibration curve binned at
        // the midpoints; conditionals must come back close to the Beta laws
        const auto items = gen_intrinsic({10, 2, 2, 5, 0.2}, 20000, 46);
        const auto density = histogram_of(scores_of(items), 20);
        BinnedCurve curve{density.edges, std::vector<double>(20)};
        for (std::size_t b = 0; b < 20; ++b) {
            const double mid = density.center(b);
            const double fp = beta_pdf(mid, 10, 2);
            const double fn = beta_pdf(mid, 2, 5);
            curve.probs[b] = 0.2 * fp / (0.2 * fp + 0.8 * fn);
        }
        const auto cc = to_class_conditionals({density, curve});
        const auto ref_pos = oracles::beta_bin_masses(10, 2, density.edges);
        const auto ref_neg = oracles::beta_bin_masses(2, 5, density.edges);
        double tv_pos = 0.0;
        double tv_neg = 0.0;
        for (std::size_t b = 0; b < 20; ++b) {
            tv_pos += 0.5 * std::abs(cc.f_pos.mass[b] - ref_pos[b]);
            tv_neg += 0.5 * std::abs(cc.f_neg.mass[b] - ref_neg[b]);
        }
        CHECK(tv_pos < 0.05);
        CHECK(tv_neg < 0.05);
    }
    SECTION("stable conditionals with a shifted prevalence match the shifted density") {
        const auto edges = uniform_edges(20);
        Histogram fpos{edges, oracles::beta_bin_masses(10, 2, edges)};
        Histogram fneg{edges, oracles::beta_bin_masses(2, 5, edges)};
        const auto joint = from_class_conditionals({fpos, fneg, 0.6});
        const auto target = gen_intrinsic({10, 2, 2, 5, 0.6}, 20000, 47);
        const auto th = histogram_of(scores_of(target), 20);
        CHECK(hellinger(joint.density, th) < 0.05);
    }
}
