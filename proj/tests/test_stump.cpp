#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "json.hpp"
#include "rmtgb/stump.hpp"

using namespace rmtgb;

TEST_CASE("hand example splits at the class boundary") {
    Matrix x(4, 1);
    Matrix r(4, 1);
    const double xs[] = {1, 2, 3, 4};
    const double rs[] = {0, 0, 1, 1};
    for (int i = 0; i < 4; ++i) {
        x(i, 0) = xs[i];
        r(i, 0) = rs[i];
    }
    const Stump s = fit_stump(x, r);
    CHECK(s.feature == 0);
    CHECK(s.threshold == 2.5);
    CHECK(s.left == std::vector<double>{0.0});
    CHECK(s.right == std::vector<double>{1.0});
}

TEST_CASE("a constant feature yields the degenerate stump") {
    Matrix x(3, 2);
    Matrix r(3, 1);
    r(0, 0) = 1;
    r(1, 0) = 2;
    r(2, 0) = 6;
    const Stump s = fit_stump(x, r);
    CHECK(s.degenerate());
    CHECK(s.feature == 0);
    CHECK(s.left[0] == doctest::Approx(3.0));
    CHECK(s.right[0] == doctest::Approx(3.0));
    const Matrix p = predict_stump(s, x);
    for (std::size_t i = 0; i < 3; ++i) CHECK(p(i, 0) == doctest::Approx(3.0));
}

TEST_CASE("samples equal to the threshold go left") {
    Stump s;
    s.feature = 0;
    s.threshold = 0.5;
    s.left = {-1.0};
    s.right = {1.0};
    Matrix x(2, 1);
    x(0, 0) = 0.5;
    x(1, 0) = std::nextafter(0.5, 1.0);
    const Matrix p = predict_stump(s, x);
    CHECK(p(0, 0) == -1.0);
    CHECK(p(1, 0) == 1.0);
}

TEST_CASE("ties go to the lowest feature, then the lowest threshold") {
    Matrix x(4, 2);
    Matrix r(4, 1);
    for (int i = 0; i < 4; ++i) {
        x(i, 0) = i;
        x(i, 1) = i;
        r(i, 0) = i < 2 ? 0.0 : 1.0;
    }
    CHECK(fit_stump(x, r).feature == 0);

    Matrix sym(4, 1);
    Matrix rs(4, 1);
    const double vals[] = {0, 1, 2, 3};
    const double res[] = {1, 0, 0, 1};  // splits at 0.5 and 2.5 have equal SSE
    for (int i = 0; i < 4; ++i) {
        sym(i, 0) = vals[i];
        rs(i, 0) = res[i];
    }
    CHECK(fit_stump(sym, rs).threshold == 0.5);
}

TEST_CASE("fitted split attains the brute-force minimum SSE") {
    std::mt19937_64 rng(42);
    for (int rep = 0; rep < 60; ++rep) {
        const std::size_t k = rep % 3 == 0 ? 3 : 1;
        Matrix x = testing::random_matrix(30, 4, rng);
        // Discretize one feature to exercise duplicate values.
        for (std::size_t i = 0; i < x.rows(); ++i) x(i, 2) = std::round(x(i, 2) * 3);
        const Matrix r = testing::random_matrix(30, k, rng, -2, 2);
        const Stump s = fit_stump(x, r);
        REQUIRE_FALSE(s.degenerate());
        CHECK(testing::partition_sse(x, r, s.feature, s.threshold) == testing::brute_force_min_sse(x, r));
    }
}

TEST_CASE("leaf values are partition means and never worsen SSE") {
    std::mt19937_64 rng(7);
    const Matrix x = testing::random_matrix(40, 3, rng);
    const Matrix r = testing::random_matrix(40, 2, rng);
    const Stump s = fit_stump(x, r);
    const Matrix p = predict_stump(s, x);
    std::vector<double> left_res(2), right_res(2);
    double sse = 0, sse_const = 0;
    std::vector<double> mean(2);
    for (std::size_t i = 0; i < 40; ++i) {
        for (std::size_t k = 0; k < 2; ++k) mean[k] += r(i, k) / 40;
    }
    for (std::size_t i = 0; i < 40; ++i) {
        const bool left = x(i, s.feature) <= s.threshold;
        for (std::size_t k = 0; k < 2; ++k) {
            (left ? left_res : right_res)[k] += r(i, k) - p(i, k);
            sse += (r(i, k) - p(i, k)) * (r(i, k) - p(i, k));
            sse_const += (r(i, k) - mean[k]) * (r(i, k) - mean[k]);
        }
    }
    for (std::size_t k = 0; k < 2; ++k) {
        CHECK(std::abs(left_res[k]) < 1e-9);
        CHECK(std::abs(right_res[k]) < 1e-9);
    }
    CHECK(sse <= sse_const);
}

TEST_CASE("row order does not change the fitted stump") {
    std::mt19937_64 rng(99);
    for (int rep = 0; rep < 20; ++rep) {
        Matrix x = testing::random_matrix(25, 3, rng);
        for (std::size_t i = 0; i < x.rows(); ++i) x(i, 1) = std::round(x(i, 1) * 2);
        const Matrix r = testing::random_matrix(25, 1, rng);
        std::vector<std::size_t> perm(25);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        const Stump a = fit_stump(x, r);
        const Stump b = fit_stump(x.select_rows(perm), r.select_rows(perm));
        CHECK(a.feature == b.feature);
        CHECK(a.threshold == b.threshold);
        CHECK(a.left[0] == doctest::Approx(b.left[0]).epsilon(1e-12));
        CHECK(a.right[0] == doctest::Approx(b.right[0]).epsilon(1e-12));
    }
}

TEST_CASE("presorted and direct fits agree") {
    std::mt19937_64 rng(5);
    const Matrix x = testing::random_matrix(50, 5, rng);
    const SortedFeatures sorted(x);
    for (int rep = 0; rep < 5; ++rep) {
        const Matrix r = testing::random_matrix(50, 1, rng);
        CHECK(fit_stump(sorted, x, r) == fit_stump(x, r));
    }
}

TEST_CASE("shape errors are rejected") {
    Matrix x(3, 2);
    Matrix r(2, 1);
    CHECK_THROWS_AS(fit_stump(x, r), InvalidArgument);
    CHECK_THROWS_AS(fit_stump(Matrix(0, 2), Matrix(0, 1)), InvalidArgument);
}

TEST_CASE("JSON round trip, including the degenerate sentinel") {
    Stump s{2, 0.125, {1.5, -1.5}, {0.25, -0.25}};
    nlohmann::json j = s;
    CHECK(j.get<Stump>() == s);

    Stump d{0, std::numeric_limits<double>::infinity(), {3.0}, {3.0}};
    nlohmann::json jd = d;
    CHECK(jd.at("threshold") == "inf");
    const auto back = nlohmann::json::parse(jd.dump()).get<Stump>();
    CHECK(back.degenerate());
    CHECK(back.left == d.left);
}
