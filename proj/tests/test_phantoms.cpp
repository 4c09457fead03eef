#include <doctest.h>

#include <dured/evaluation.hpp>
#include <dured/phantom.hpp>

#include <cmath>

using namespace dured;

TEST_CASE("pixels outside the skull ellipse are exactly zero") {
    const int h = 64, w = 64;
    ComplexImage img = shepp_logan(h, w, PhaseMode::none);
    int outside = 0;
    for (int r = 0; r < h; ++r) {
        const double y = (h - 1 - 2.0 * r) / (h - 1);
        for (int c = 0; c < w; ++c) {
            const double x = (2.0 * c - (w - 1)) / (w - 1);
            const double q = x * x / (0.69 * 0.69) + y * y / (0.92 * 0.92);
            if (q > 1.0) {
                CHECK(img(r, c) == cplx(0.0, 0.0));
                ++outside;
            }
        }
    }
    CHECK(outside > 0);
}

TEST_CASE("intensity image is mirror symmetric about the vertical axis") {
    for (auto [h, w] : {std::pair{64, 64}, {33, 47}}) {
        ComplexImage img = shepp_logan(h, w, PhaseMode::none);
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c)
                CHECK(img(r, c) == img(r, w - 1 - c));
    }
}

TEST_CASE("intensities lie in [0, 1] and the phantom is nontrivial") {
    ComplexImage img = shepp_logan(48, 48, PhaseMode::none);
    double maxv = 0.0;
    for (int i = 0; i < img.size(); ++i) {
        CHECK(img[i].imag() == 0.0);
        CHECK(img[i].real() >= 0.0);
        CHECK(img[i].real() <= 1.0);
        maxv = std::max(maxv, img[i].real());
    }
    CHECK(maxv == 1.0); // skull rim carries the table maximum
}

TEST_CASE("smooth phase mode preserves magnitude and adds phase") {
    ComplexImage flat = shepp_logan(32, 32, PhaseMode::none);
    ComplexImage smooth = shepp_logan(32, 32, PhaseMode::smooth);
    bool has_imag = false;
    for (int i = 0; i < flat.size(); ++i) {
        CHECK(std::abs(std::abs(smooth[i]) - flat[i].real()) < 1e-12);
        if (std::abs(smooth[i].imag()) > 1e-6) has_imag = true;
    }
    CHECK(has_imag);
    CHECK_THROWS_AS(shepp_logan(4, 4), std::invalid_argument);
}

TEST_CASE("variants: determinism, zero-jitter base case, pairwise distance") {
    auto a = phantom_variants(32, 32, 5, 9);
    auto b = phantom_variants(32, 32, 5, 9);
    REQUIRE(a.size() == 5);
    for (int k = 0; k < 5; ++k)
        for (int i = 0; i < a[k].size(); ++i) CHECK(a[k][i] == b[k][i]);

    auto base = phantom_variants(32, 32, 1, 13, PhaseMode::smooth, 0.0);
    ComplexImage direct = shepp_logan(32, 32, PhaseMode::smooth);
    for (int i = 0; i < direct.size(); ++i) CHECK(base[0][i] == direct[i]);

    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = i + 1; j < a.size(); ++j)
            CHECK(nmse(a[i], a[j]) >= 1e-4);

    CHECK_THROWS_AS(phantom_variants(32, 32, 0, 1), std::invalid_argument);
}
