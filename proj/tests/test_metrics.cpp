#include "doctest.h"

#include "umeml/error.hpp"
#include "umeml/metrics.hpp"
#include "umeml/oracles.hpp"

#include <cmath>
#include <random>
#include <sstream>

using namespace umeml;

namespace {

// scores quantized to one decimal so ties happen often and stay exact
std::vector<double> quantized_scores(std::size_t n, std::mt19937_64& rng) {
    std::vector<double> s(n);
    for (double& v : s) v = static_cast<double>(rng() % 11) / 10.0;
    return s;
}

} // namespace

TEST_CASE("accuracy counts argmax hits") {
    CHECK(accuracy({{0.9, 0.1}, {0.2, 0.8}}, {0, 1}) == 1.0);
    CHECK(accuracy({{0.1, 0.9}, {0.8, 0.2}}, {0, 1}) == 0.0);
    CHECK(accuracy({{1, 0}, {1, 0}, {0, 1}, {0, 1}}, {0, 0, 1, 0}) == 0.75);

    // exact ties resolve to the lowest class index
    CHECK(accuracy({{0.5, 0.5}}, {0}) == 1.0);
    CHECK(accuracy({{0.5, 0.5}}, {1}) == 0.0);

    CHECK_THROWS_AS(accuracy({}, {}), Error);
    CHECK_THROWS_AS(accuracy({{0.5}}, {0, 1}), Error);
}

TEST_CASE("binary auc on worked examples") {
    CHECK(binary_auc({0.1, 0.9}, {0, 1}) == 1.0);
    CHECK(binary_auc({0.9, 0.1}, {0, 1}) == 0.0);
    CHECK(binary_auc({0.4, 0.4, 0.4}, {0, 1, 0}) == 0.5);
    CHECK_THROWS_AS(binary_auc({0.1, 0.9}, {1, 1}), Error);
}

TEST_CASE("binary auc equals pair counting bit for bit") {
    std::mt19937_64 rng(101);
    for (int round = 0; round < 50; ++round) {
        const std::size_t n = 2 + rng() % 49;  // up to 50
        std::vector<double> s = quantized_scores(n, rng);
        std::vector<char> pos(n);
        for (auto& p : pos) p = rng() % 2;
        pos[0] = 1;
        pos[1] = 0;  // force both classes
        CHECK(binary_auc(s, pos) == oracles::pairwise_auc(s, pos));
    }
}

TEST_CASE("auc is invariant under strictly monotone transforms") {
    std::mt19937_64 rng(55);
    std::vector<double> s = quantized_scores(30, rng);
    std::vector<char> pos(30);
    for (auto& p : pos) p = rng() % 2;
    pos[0] = 1;
    pos[1] = 0;
    const double base = binary_auc(s, pos);

    std::vector<double> affine(30), cubed(30);
    for (std::size_t i = 0; i < 30; ++i) {
        affine[i] = 2.0 * s[i] + 3.0;
        cubed[i] = s[i] * s[i] * s[i];
    }
    CHECK(binary_auc(affine, pos) == base);
    CHECK(binary_auc(cubed, pos) == base);
}

TEST_CASE("macro one-vs-rest auc") {
    // class 2 absent: it is skipped and reported
    std::vector<std::vector<double>> scores = {
        {0.8, 0.1, 0.1}, {0.2, 0.7, 0.1}, {0.3, 0.6, 0.1}, {0.6, 0.3, 0.1}};
    std::vector<int> labels = {0, 1, 1, 0};
    std::vector<int> skipped;
    const double macro = roc_auc_macro_ovr(scores, labels, 3, &skipped);
    REQUIRE(skipped.size() == 1);
    CHECK(skipped[0] == 2);

    // recompute the macro average straight from the pair oracle
    std::vector<double> s0, s1;
    std::vector<char> p0, p1;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        s0.push_back(scores[i][0]);
        p0.push_back(labels[i] == 0);
        s1.push_back(scores[i][1]);
        p1.push_back(labels[i] == 1);
    }
    const double expect = (oracles::pairwise_auc(s0, p0) + oracles::pairwise_auc(s1, p1)) / 2.0;
    CHECK(macro == expect);

    CHECK_THROWS_AS(roc_auc_macro_ovr({{1.0}, {0.5}}, {0, 0}, 1, nullptr), Error);
}

TEST_CASE("concordance index on worked examples") {
    CHECK(concordance_index({3, 2, 1}, {1, 2, 3}, {1, 1, 1}) == 1.0);
    CHECK(concordance_index({1, 2, 3}, {1, 2, 3}, {1, 1, 1}) == 0.0);
    // one comparable pair: the early event against the later censored case
    CHECK(concordance_index({5, 1}, {1, 2}, {1, 0}) == 1.0);
    // all censored: nothing to compare
    CHECK_THROWS_AS(concordance_index({1, 2}, {1, 2}, {0, 0}), Error);
}

TEST_CASE("concordance equals pair enumeration bit for bit") {
    std::mt19937_64 rng(202);
    int tested = 0;
    for (int round = 0; round < 50; ++round) {
        const std::size_t n = 3 + rng() % 48;
        std::vector<double> risk = quantized_scores(n, rng);
        std::vector<double> time(n);
        std::vector<int> event(n);
        for (std::size_t i = 0; i < n; ++i) {
            time[i] = static_cast<double>(1 + rng() % 12);  // deliberate time ties
            event[i] = rng() % 3 != 0;                      // ~2/3 observed
        }
        event[0] = 1;
        std::size_t pairs = 0;
        double oracle = 0.0;
        bool comparable = true;
        try {
            oracle = oracles::pairwise_concordance(risk, time, event, &pairs);
        } catch (const Error&) {
            comparable = false;
        }
        if (!comparable) continue;
        ++tested;
        CHECK(concordance_index(risk, time, event) == oracle);
    }
    CHECK(tested >= 40);
}

TEST_CASE("concordance symmetry without tied risks") {
    std::mt19937_64 rng(303);
    std::vector<double> risk(20), time(20);
    std::vector<int> event(20);
    for (std::size_t i = 0; i < 20; ++i) {
        risk[i] = static_cast<double>(i) + static_cast<double>(rng() % 100) / 1000.0;
        time[i] = static_cast<double>(1 + rng() % 40);
        event[i] = rng() % 2;
    }
    event[0] = 1;
    std::vector<double> neg_risk(20);
    for (std::size_t i = 0; i < 20; ++i) neg_risk[i] = -risk[i];
    CHECK(concordance_index(risk, time, event) + concordance_index(neg_risk, time, event) ==
          doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("roc points form a staircase consistent with the auc") {
    SUBCASE("perfect separation passes through the corner") {
        std::vector<double> s = {0.9, 0.8, 0.2, 0.1};
        std::vector<char> pos = {1, 1, 0, 0};
        auto pts = roc_points(s, pos);
        CHECK(pts.front() == std::pair<double, double>{0.0, 0.0});
        CHECK(pts.back() == std::pair<double, double>{1.0, 1.0});
        bool corner = false;
        for (auto& [x, y] : pts) corner |= (x == 0.0 && y == 1.0);
        CHECK(corner);
        CHECK(trapezoid_area(pts) == 1.0);
    }
    SUBCASE("area matches the rank statistic") {
        std::mt19937_64 rng(404);
        for (int round = 0; round < 20; ++round) {
            std::vector<double> s = quantized_scores(25, rng);
            std::vector<char> pos(25);
            for (auto& p : pos) p = rng() % 2;
            pos[0] = 1;
            pos[1] = 0;
            auto pts = roc_points(s, pos);
            CHECK(std::fabs(trapezoid_area(pts) - binary_auc(s, pos)) <= 1e-12);

            // staircase is monotone in both coordinates
            for (std::size_t i = 1; i < pts.size(); ++i) {
                CHECK(pts[i].first >= pts[i - 1].first);
                CHECK(pts[i].second >= pts[i - 1].second);
            }
        }
    }
    SUBCASE("reversing scores mirrors the area") {
        std::mt19937_64 rng(505);
        std::vector<double> s = quantized_scores(20, rng);
        std::vector<char> pos(20);
        for (auto& p : pos) p = rng() % 2;
        pos[0] = 1;
        pos[1] = 0;
        std::vector<double> rev(20);
        for (std::size_t i = 0; i < 20; ++i) rev[i] = -s[i];
        CHECK(std::fabs(trapezoid_area(roc_points(rev, pos)) -
                        (1.0 - trapezoid_area(roc_points(s, pos)))) <= 1e-12);
    }
    SUBCASE("single class rejected") {
        CHECK_THROWS_AS(roc_points({0.5, 0.6}, {1, 1}), Error);
    }
}

TEST_CASE("time dependent auc") {
    SUBCASE("single case outranking a single control") {
        TdAucResult r = time_dependent_auc({0.9, 0.1}, {5.0, 20.0}, {1, 0}, {10.0});
        REQUIRE(r.points.size() == 1);
        CHECK(r.points[0].time == 10.0);
        CHECK(r.points[0].auc == 1.0);
        CHECK(r.skipped_times.empty());
    }
    SUBCASE("identical risks give one half") {
        TdAucResult r = time_dependent_auc({0.5, 0.5, 0.5}, {5.0, 20.0, 30.0}, {1, 0, 1}, {10.0});
        REQUIRE(r.points.size() == 1);
        CHECK(r.points[0].auc == 0.5);
    }
    SUBCASE("times without both sides are skipped") {
        TdAucResult r = time_dependent_auc({0.9, 0.1}, {5.0, 20.0}, {1, 0}, {1.0, 10.0, 25.0});
        REQUIRE(r.points.size() == 1);
        REQUIRE(r.skipped_times.size() == 2);
        CHECK(r.skipped_times[0] == 1.0);   // no case yet
        CHECK(r.skipped_times[1] == 25.0);  // nobody left under observation
    }
    SUBCASE("matches the case/control pair loop bit for bit") {
        std::mt19937_64 rng(606);
        for (int round = 0; round < 20; ++round) {
            const std::size_t n = 30;
            std::vector<double> risk = quantized_scores(n, rng);
            std::vector<double> time(n);
            std::vector<int> event(n);
            for (std::size_t i = 0; i < n; ++i) {
                time[i] = static_cast<double>(1 + rng() % 60);
                event[i] = rng() % 3 != 0;
            }
            std::vector<double> eval_times = {6.0, 12.0, 24.0, 36.0, 48.0};
            TdAucResult r = time_dependent_auc(risk, time, event, eval_times);
            std::size_t pi = 0;
            for (double t : eval_times) {
                double oracle = 0.0;
                if (oracles::pairwise_td_auc(risk, time, event, t, &oracle)) {
                    REQUIRE(pi < r.points.size());
                    CHECK(r.points[pi].time == t);
                    CHECK(r.points[pi].auc == oracle);
                    ++pi;
                }
            }
            CHECK(pi == r.points.size());
        }
    }
}

TEST_CASE("curve csv format") {
    std::ostringstream os;
    write_roc_csv(os, {{0.0, 0.0}, {0.25, 0.75}, {1.0, 1.0}});
    CHECK(os.str() == "fpr,tpr\n0.000000,0.000000\n0.250000,0.750000\n1.000000,1.000000\n");

    std::ostringstream ts;
    write_td_auc_csv(ts, {{12.0, 0.875}});
    CHECK(ts.str() == "time,auc\n12.000000,0.875000\n");

    CHECK(round6(0.1234561) == doctest::Approx(0.123456).epsilon(1e-12));
    CHECK(round6(0.1234569) == doctest::Approx(0.123457).epsilon(1e-12));
}
