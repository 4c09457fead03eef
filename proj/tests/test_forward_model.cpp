#include <doctest.h>

#include <dured/fft.hpp>
#include <dured/forward_model.hpp>

#include "test_support.hpp"

#include <Eigen/Dense>

using namespace dured;
using testsup::random_image;
using testsup::random_model;
using testsup::rel_err;

TEST_CASE("construction enforces the invariants") {
    // DC must be acquired
    std::vector<std::uint8_t> mask(16, 1);
    std::vector<double> wts(16, 1.0);
    mask[2 * 4 + 2] = 0; // DC of a 4x4 grid
    CHECK_THROWS_AS(ForwardModel(4, 4, mask, wts), std::invalid_argument);

    // weights must be strictly positive where sampled
    mask.assign(16, 1);
    wts[5] = 0.0;
    CHECK_THROWS_AS(ForwardModel(4, 4, mask, wts), std::invalid_argument);

    wts.assign(16, 1.0);
    CHECK(ForwardModel(4, 4, mask, wts).full_mask());
}

TEST_CASE("full mask with unit weights: forward is the unitary FFT") {
    ForwardModel A = ForwardModel::full(8, 8);
    ComplexImage x = random_image(8, 8, 7);
    ComplexImage y = apply_forward(A, x);
    ComplexImage k = fft2_unitary(x);
    for (int i = 0; i < y.size(); ++i) CHECK(y[i] == k[i]);
}

TEST_CASE("zero image maps to zero measurement and back") {
    ForwardModel A = random_model(8, 8, 3);
    ComplexImage zero(8, 8);
    CHECK(norm2(apply_forward(A, zero)) == 0.0);
    CHECK(norm2(apply_adjoint(A, zero)) == 0.0);
}

TEST_CASE("shape mismatch is rejected") {
    ForwardModel A = ForwardModel::full(8, 8);
    ComplexImage x(4, 4);
    CHECK_THROWS_AS(apply_forward(A, x), std::invalid_argument);
    CHECK_THROWS_AS(apply_adjoint(A, x), std::invalid_argument);
}

TEST_CASE("adjoint identity <Ax, y> = <x, A^H y> over 100 random pairs") {
    for (int trial = 0; trial < 100; ++trial) {
        ForwardModel A = random_model(8, 8, 100 + trial);
        ComplexImage x = random_image(8, 8, 1000 + trial);
        ComplexImage y = random_image(8, 8, 2000 + trial);
        const cplx lhs = inner(apply_forward(A, x), y);
        const cplx rhs = inner(x, apply_adjoint(A, y));
        CHECK(std::abs(lhs - rhs) / std::abs(rhs) < 1e-10);
    }
}

TEST_CASE("full mask, unit weights: A^H A is the identity") {
    ForwardModel A = ForwardModel::full(8, 8);
    ComplexImage x = random_image(8, 8, 17);
    CHECK(rel_err(apply_adjoint(A, apply_forward(A, x)), x) < 1e-10);
}

TEST_CASE("adjoint matches the explicit dense-matrix adjoint on 4x4 grids") {
    ForwardModel A = random_model(4, 4, 23);
    Eigen::MatrixXcd MF = testsup::materialize_forward(A);
    Eigen::MatrixXcd MA = testsup::materialize_adjoint(A);
    CHECK((MA - MF.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("cg: full mask, unit weights, beta = 0 returns ifft2(y)") {
    ForwardModel A = ForwardModel::full(8, 8);
    ComplexImage y = random_image(8, 8, 31);
    ComplexImage x = cg_solve_x(A, y, 0.0, ComplexImage::zeros(8, 8), 10, 0.0);
    CHECK(rel_err(x, ifft2_unitary(y)) < 1e-8);
}

TEST_CASE("cg: y = 0 with full mask returns beta/(1+beta) * x_reg") {
    ForwardModel A = ForwardModel::full(8, 8);
    ComplexImage r = random_image(8, 8, 37);
    const double beta = 2.5;
    ComplexImage x = cg_solve_x(A, ComplexImage::zeros(8, 8), beta, r, 20, 0.0);
    ComplexImage want = (beta / (1.0 + beta)) * r;
    CHECK(rel_err(x, want) < 1e-8);
}

TEST_CASE("cg matches the dense solve of the normal system") {
    for (auto [h, w, seed] : {std::tuple{4, 4, 41ull}, {8, 8, 43ull}}) {
        ForwardModel A = random_model(h, w, seed);
        ComplexImage y = random_image(h, w, seed + 1);
        ComplexImage x_reg = random_image(h, w, seed + 2);
        const double beta = 0.7;
        const int n = h * w;

        Eigen::MatrixXcd MF = testsup::materialize_forward(A);
        Eigen::MatrixXcd N = MF.adjoint() * MF + beta * Eigen::MatrixXcd::Identity(n, n);
        Eigen::VectorXcd b = MF.adjoint() * testsup::to_vec(y) + beta * testsup::to_vec(x_reg);
        Eigen::VectorXcd x_dense = Eigen::PartialPivLU<Eigen::MatrixXcd>(N).solve(b);

        ComplexImage x_cg = cg_solve_x(A, y, beta, x_reg, 4 * n, 0.0);
        CHECK(rel_err(x_cg, testsup::from_vec(x_dense, h, w)) < 1e-6);

        // a bounded iteration budget must already reach the oracle
        if (n == 64) {
            ComplexImage x_50 = cg_solve_x(A, y, beta, x_reg, 50, 0.0);
            CHECK(rel_err(x_50, testsup::from_vec(x_dense, h, w)) < 1e-6);
        }
    }
}

TEST_CASE("cg residual is monotonically nonincreasing") {
    ForwardModel A = random_model(8, 8, 53);
    ComplexImage y = random_image(8, 8, 54);
    ComplexImage x_reg = random_image(8, 8, 55);
    const double beta = 1.3;

    ComplexImage b = apply_adjoint(A, y);
    for (int i = 0; i < b.size(); ++i) b[i] += beta * x_reg[i];
    auto residual_norm = [&](const ComplexImage& x) {
        ComplexImage k = fft2_unitary(x);
        const auto& d = A.normal_grid();
        for (int i = 0; i < k.size(); ++i) k[i] *= d[i];
        ComplexImage nx = ifft2_unitary(k);
        for (int i = 0; i < nx.size(); ++i) nx[i] += beta * x[i];
        return norm2(b - nx);
    };

    double prev = norm2(b); // zero start
    for (int iters = 1; iters <= 40; ++iters) {
        ComplexImage x = cg_solve_x(A, y, beta, x_reg, iters, 0.0);
        const double cur = residual_norm(x);
        CHECK(cur <= prev + 1e-9);
        prev = cur;
    }
}

TEST_CASE("cg early stop on the relative residual") {
    ForwardModel A = random_model(8, 8, 61);
    ComplexImage y = random_image(8, 8, 62);
    ComplexImage x_reg = random_image(8, 8, 63);
    ComplexImage full = cg_solve_x(A, y, 2.0, x_reg, 500, 1e-12);
    ComplexImage tight = cg_solve_x(A, y, 2.0, x_reg, 500, 0.0);
    CHECK(rel_err(full, tight) < 1e-9);
}

TEST_CASE("cg rejects the singular configuration") {
    ForwardModel A = random_model(8, 8, 71, 0.4);
    ComplexImage y = random_image(8, 8, 72);
    CHECK_THROWS_AS(cg_solve_x(A, y, 0.0, ComplexImage::zeros(8, 8), 10, 0.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(cg_solve_x(A, y, -1.0, ComplexImage::zeros(8, 8), 10, 0.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(cg_solve_x(A, y, 1.0, ComplexImage::zeros(8, 8), 0, 0.0),
                    std::invalid_argument);
}
