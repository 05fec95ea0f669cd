#include "doctest.h"
#include "trafcast/signal.hpp"
#include "trafcast/types.hpp"

#include <cmath>
#include <vector>

using namespace trafcast;

TEST_CASE("kernel weights") {
    SmoothingKernel k(10);
    // Total raw mass (hw+1)^2 = 121.
    double raw = 0.0;
    for (int j = -10; j <= 10; ++j) raw += k.raw_weight(j);
    CHECK(raw == doctest::Approx(121.0));
    CHECK(k.raw_weight(0) == doctest::Approx(11.0));
    CHECK(k.raw_weight(10) == doctest::Approx(1.0));
    CHECK(k.raw_weight(11) == 0.0);
    CHECK(k.weight(0) == doctest::Approx(11.0 / 121.0));
    double norm = 0.0;
    for (int j = -10; j <= 10; ++j) norm += k.weight(j);
    CHECK(norm == doctest::Approx(1.0));
}

TEST_CASE("constants are preserved everywhere, including edges") {
    SmoothingKernel k(10);
    std::vector<double> series(60, 7.5);
    auto out = smooth(series, k);
    REQUIRE(out.size() == series.size());
    for (double v : out) CHECK(v == doctest::Approx(7.5).epsilon(1e-13));
}

TEST_CASE("impulse response is the triangular kernel") {
    SmoothingKernel k(10);
    std::vector<double> series(101, 0.0);
    series[50] = 1.0;
    auto out = smooth(series, k);
    CHECK(out[50] == doctest::Approx(11.0 / 121.0));
    for (int j = 1; j <= 10; ++j) {
        CHECK(out[50 + j] == doctest::Approx((11.0 - j) / 121.0));
        CHECK(out[50 - j] == doctest::Approx((11.0 - j) / 121.0));
    }
    CHECK(out[39] == doctest::Approx(0.0));
    CHECK(out[61] == doctest::Approx(0.0));
}

TEST_CASE("affine series are fixed points in the interior") {
    SmoothingKernel k(10);
    std::vector<double> series(80);
    for (int t = 0; t < 80; ++t) series[t] = 3.0 + 0.25 * t;
    auto out = smooth(series, k);
    for (int t = 10; t < 70; ++t)
        CHECK(out[t] == doctest::Approx(series[t]).epsilon(1e-12));
}

TEST_CASE("linearity") {
    SmoothingKernel k(5);
    std::vector<double> a{1, 4, 2, 8, 5, 7, 1, 9, 3, 6, 2, 4};
    std::vector<double> b{0, 2, 9, 1, 3, 3, 8, 2, 7, 1, 5, 5};
    std::vector<double> combo(a.size());
    for (size_t i = 0; i < a.size(); ++i) combo[i] = 2.0 * a[i] - 0.5 * b[i];
    auto sa = smooth(a, k), sb = smooth(b, k), sc = smooth(combo, k);
    for (size_t i = 0; i < a.size(); ++i)
        CHECK(sc[i] == doctest::Approx(2.0 * sa[i] - 0.5 * sb[i]).epsilon(1e-12));
}

TEST_CASE("output stays within the hull of the inputs") {
    SmoothingKernel k(10);
    std::vector<double> series{5, 1, 9, 2, 8, 8, 0, 4, 10, 3, 7, 6, 2, 9, 1, 5, 5, 8};
    auto out = smooth(series, k);
    for (double v : out) {
        CHECK(v >= 0.0 - 1e-12);
        CHECK(v <= 10.0 + 1e-12);
    }
}

TEST_CASE("missing samples are skipped with renormalization") {
    SmoothingKernel k(3);
    std::vector<double> series(20, 4.0);
    series[9] = missing_value();
    series[10] = missing_value();
    auto out = smooth(series, k);
    for (size_t t = 0; t < series.size(); ++t) {
        if (std::isnan(series[t])) {
            CHECK(std::isnan(out[t]) == false);  // neighbors still carry mass
            CHECK(out[t] == doctest::Approx(4.0));
        } else {
            CHECK(out[t] == doctest::Approx(4.0));
        }
    }

    // An isolated island of NaNs wider than the kernel support yields missing output.
    std::vector<double> gap(40, 2.0);
    for (int t = 10; t <= 28; ++t) gap[t] = missing_value();
    auto out2 = smooth(gap, SmoothingKernel(3));
    CHECK(std::isnan(out2[19]));
    CHECK(out2[5] == doctest::Approx(2.0));
}

TEST_CASE("causal variants at a constant level") {
    SmoothingKernel k(10);
    std::vector<double> series(200, 3.0);
    const int t = 100;
    // NeumannHold extends the last value: exact constant.
    CHECK(smooth_causal(series, t, k, CausalBoundaryMode::NeumannHold) ==
          doctest::Approx(3.0).epsilon(1e-12));
    // DirichletZero loses the future half of the mass: c * 66/121.
    CHECK(smooth_causal(series, t, k, CausalBoundaryMode::DirichletZero) ==
          doctest::Approx(3.0 * 66.0 / 121.0).epsilon(1e-12));
}

TEST_CASE("causal equals acausal when the future inside the window is flat at the held value") {
    SmoothingKernel k(4);
    std::vector<double> series(60);
    for (int t = 0; t < 60; ++t) series[t] = (t < 30) ? 1.0 + 0.1 * t : 4.0;
    // At t=40 all indices in [36,44] hold the value 4.0 == series[40].
    const double causal = smooth_causal(series, 40, k, CausalBoundaryMode::NeumannHold);
    const auto acausal = smooth(series, k);
    CHECK(causal == doctest::Approx(acausal[40]).epsilon(1e-12));
}

TEST_CASE("multiple passes smooth harder") {
    std::vector<double> series(120, 0.0);
    series[60] = 1.0;
    auto one = smooth(series, SmoothingKernel(10, 1));
    auto two = smooth(series, SmoothingKernel(10, 2));
    CHECK(two[60] < one[60]);
    // Mass is conserved in the interior.
    double m1 = 0.0, m2 = 0.0;
    for (size_t i = 0; i < series.size(); ++i) {
        m1 += one[i];
        m2 += two[i];
    }
    CHECK(m1 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m2 == doctest::Approx(1.0).epsilon(1e-12));
}
