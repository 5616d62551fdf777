#include <catch2/catch_amalgamated.hpp>

#include <wecs/common.hpp>

using wecs::GaussianSampler;
using wecs::PiecewiseLinear;

TEST_CASE("piecewise linear interpolation hits knots exactly") {
    PiecewiseLinear t({0.0, 1.0, 3.0}, {2.0, 4.0, 0.0});
    CHECK(t(0.0) == 2.0);
    CHECK(t(1.0) == 4.0);
    CHECK(t(3.0) == 0.0);
    CHECK(t(0.5) == Catch::Approx(3.0));
    CHECK(t(2.0) == Catch::Approx(2.0));
}

TEST_CASE("piecewise linear clamps outside the knot range") {
    PiecewiseLinear t({1.0, 2.0}, {5.0, 7.0});
    CHECK(t(0.0) == 5.0);
    CHECK(t(10.0) == 7.0);
}

TEST_CASE("piecewise linear rejects bad knots") {
    CHECK_THROWS_AS(PiecewiseLinear({1.0}, {2.0}), std::invalid_argument);
    CHECK_THROWS_AS(PiecewiseLinear({1.0, 1.0}, {2.0, 3.0}), std::invalid_argument);
    CHECK_THROWS_AS(PiecewiseLinear({2.0, 1.0}, {2.0, 3.0}), std::invalid_argument);
}

TEST_CASE("piecewise linear integral with clamped extensions") {
    PiecewiseLinear t({1.0, 2.0}, {2.0, 4.0});
    CHECK(t.integral(1.0, 2.0) == Catch::Approx(3.0));
    CHECK(t.integral(0.0, 1.0) == Catch::Approx(2.0));   // flat left extension
    CHECK(t.integral(2.0, 4.0) == Catch::Approx(8.0));   // flat right extension
    CHECK(t.integral(0.0, 4.0) == Catch::Approx(13.0));
    CHECK(t.integral(1.25, 1.75) == Catch::Approx(0.5 * (2.5 + 3.5) * 0.5));
}

TEST_CASE("gaussian sampler is deterministic per seed") {
    GaussianSampler a(42), b(42), c(43);
    bool all_equal = true;
    bool any_diff = false;
    for (int i = 0; i < 1000; ++i) {
        const double va = a.normal();
        all_equal = all_equal && (va == b.normal());
        any_diff = any_diff || (va != c.normal());
    }
    CHECK(all_equal);
    CHECK(any_diff);
}

TEST_CASE("gaussian sampler moments") {
    GaussianSampler g(7);
    const int n = 200000;
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double v = g.normal();
        sum += v;
        sum_sq += v * v;
    }
    const double mean = sum / n;
    const double var = sum_sq / n - mean * mean;
    CHECK(std::abs(mean) < 0.01);
    CHECK(var == Catch::Approx(1.0).margin(0.02));
}
