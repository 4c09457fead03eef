#include <doctest.h>

#include <dured/fft.hpp>
#include <dured/red_solver.hpp>
#include <dured/unrolled.hpp>

#include "test_support.hpp"

#include <Eigen/Dense>

#include <cmath>

using namespace dured;
using testsup::random_image;
using testsup::random_model;
using testsup::rel_err;

namespace {

// Closed-form minimizer (A^H A + lambda (I - G))^{-1} A^H y with the dense
// blur matrix built from the kernel formula.
ComplexImage dense_red_minimizer(const ComplexImage& y, const ForwardModel& A,
                                 double sigma, double lambda) {
    const int h = A.height(), w = A.width();
    const int n = h * w;
    Eigen::MatrixXcd MF = testsup::materialize_forward(A);
    Eigen::MatrixXd G = testsup::dense_blur_matrix(h, w, sigma);
    Eigen::MatrixXcd M = MF.adjoint() * MF +
                         lambda * (Eigen::MatrixXd::Identity(n, n) - G).cast<cplx>();
    Eigen::VectorXcd b = MF.adjoint() * testsup::to_vec(y);
    return testsup::from_vec(Eigen::PartialPivLU<Eigen::MatrixXcd>(M).solve(b), h, w);
}

} // namespace

TEST_CASE("identity denoiser reduces to the zero-weight unrolled recursion") {
    ForwardModel A = random_model(8, 8, 3);
    ComplexImage y = apply_forward(A, random_image(8, 8, 4));

    AdmmRedOptions opts;
    opts.lambda = 6.0;
    opts.beta = 9.0;
    opts.n_iters = 3;
    opts.cg_iters = 15;
    AdmmRedResult res = admm_red(y, A, Denoiser::identity(), opts);

    DuredConfig cfg;
    cfg.n_modules = 3;
    cfg.cg_iters = 15;
    cfg.lambda_init = 6.0;
    cfg.beta_init = 9.0;
    DuredParams params = DuredParams::zero_weights(cfg);
    ComplexImage want = dured_forward(y, A, cfg, params);
    CHECK(rel_err(res.x, want) < 1e-10);
}

TEST_CASE("lambda = 0 on a full mask converges to ifft2(y)") {
    ForwardModel A = ForwardModel::full(8, 8);
    ComplexImage y = apply_forward(A, random_image(8, 8, 7));
    AdmmRedOptions opts;
    opts.lambda = 0.0;
    opts.beta = 1.0;
    opts.n_iters = 60;
    opts.cg_iters = 20;
    AdmmRedResult res = admm_red(y, A, Denoiser::identity(), opts);
    CHECK(!res.diverged);
    CHECK(rel_err(res.x, ifft2_unitary(y)) < 1e-6);
}

TEST_CASE("gaussian denoiser converges to the dense closed-form minimizer") {
    const double sigma = 1.0, lambda = 0.8;
    ForwardModel A = random_model(8, 8, 11, 0.55);
    ComplexImage y = apply_forward(A, random_image(8, 8, 12));

    AdmmRedOptions opts;
    opts.lambda = lambda;
    opts.beta = 4.0;
    opts.n_iters = 200;
    opts.cg_iters = 30;
    opts.cg_tol = 1e-13;
    AdmmRedResult res = admm_red(y, A, Denoiser::gaussian(sigma), opts);
    CHECK(!res.diverged);

    ComplexImage want = dense_red_minimizer(y, A, sigma, lambda);
    CHECK(rel_err(res.x, want) < 1e-3);

    SUBCASE("the exact v-update reaches the same minimizer") {
        AdmmRedOptions exact = opts;
        exact.exact_v_update = true;
        AdmmRedResult res2 = admm_red(y, A, Denoiser::gaussian(sigma), exact);
        CHECK(rel_err(res2.x, want) < 1e-3);
    }

    SUBCASE("a wider blur from the same family also converges to its minimizer") {
        AdmmRedOptions wide = opts;
        wide.lambda = 0.5;
        AdmmRedResult res2 = admm_red(y, A, Denoiser::gaussian(2.0), wide);
        CHECK(rel_err(res2.x, dense_red_minimizer(y, A, 2.0, 0.5)) < 1e-3);
    }
}

TEST_CASE("primal residual decreases after burn-in on the toy instance") {
    ForwardModel A = random_model(8, 8, 21, 0.6);
    ComplexImage y = apply_forward(A, random_image(8, 8, 22));
    AdmmRedOptions opts;
    opts.lambda = 0.8;
    opts.beta = 4.0;
    opts.n_iters = 60;
    opts.cg_iters = 30;
    opts.cg_tol = 1e-13;
    AdmmRedResult res = admm_red(y, A, Denoiser::gaussian(1.0), opts);
    REQUIRE(res.primal_residual.size() == 60);
    int violations = 0;
    for (std::size_t i = 10; i + 1 < res.primal_residual.size(); ++i)
        if (res.primal_residual[i + 1] > res.primal_residual[i] * (1.0 + 1e-9)) ++violations;
    WARN_MESSAGE(violations == 0, "primal residual increased ", violations,
                 " times after burn-in");
    CHECK(res.primal_residual.back() < res.primal_residual.front());
}

TEST_CASE("fixed-point consistency at convergence") {
    ForwardModel A = random_model(8, 8, 31, 0.6);
    ComplexImage y = apply_forward(A, random_image(8, 8, 32));
    const double lambda = 0.8, beta = 4.0;
    AdmmRedOptions opts;
    opts.lambda = lambda;
    opts.beta = beta;
    opts.n_iters = 4000;
    opts.cg_iters = 30;
    opts.cg_tol = 1e-14;
    opts.stop_tol = 1e-10;
    Denoiser f = Denoiser::gaussian(1.0);
    AdmmRedResult res = admm_red(y, A, f, opts);
    REQUIRE(res.primal_residual.back() < 1e-8);

    // Reconstruct the converged (x, v, u) triple: x = v at the fixed point
    // and u = (lambda/beta) (v - f(v)).
    const ComplexImage& x = res.x;
    ComplexImage fx = denoise(f, x);
    ComplexImage u = (lambda / beta) * (x - fx);

    // x-subproblem optimality: (A^H A + beta I) x = A^H y + beta (v - u)
    ComplexImage lhs = apply_adjoint(A, apply_forward(A, x)) + beta * x;
    ComplexImage rhs = apply_adjoint(A, y) + beta * (x - u);
    CHECK(norm2(lhs - rhs) / norm2(rhs) < 1e-6);

    // v-equation with v = x: lambda (v - f(v)) - beta u = 0
    ComplexImage v_eq(x.height(), x.width());
    for (int i = 0; i < v_eq.size(); ++i) v_eq[i] = lambda * (x[i] - fx[i]) - beta * u[i];
    CHECK(norm2(v_eq) / (lambda * norm2(x - fx) + 1e-300) < 1e-6);

    // multiplier stationarity: x - v = 0
    CHECK(res.primal_residual.back() < 1e-8);

    // the full cost gradient vanishes at the minimizer
    ComplexImage J = red_gradient(x, y, A, f, lambda);
    CHECK(norm2(J) < 1e-6);
}

TEST_CASE("divergence is detected and reported with history") {
    ForwardModel A = random_model(8, 8, 41, 0.5);
    ComplexImage y = apply_forward(A, random_image(8, 8, 42));
    AdmmRedOptions opts;
    opts.lambda = 1e9; // the residual-form v-update blows up when lambda >> beta
    opts.beta = 1e-3;
    opts.n_iters = 200;
    opts.cg_iters = 5;
    AdmmRedResult res = admm_red(y, A, Denoiser::gaussian(1.0), opts);
    CHECK(res.diverged);
    CHECK(res.primal_residual.size() < 200);
}

TEST_CASE("red_cost trivial cases") {
    ForwardModel A = ForwardModel::full(8, 8);
    ComplexImage x = random_image(8, 8, 51);
    ComplexImage y = apply_forward(A, x);
    CHECK(std::abs(red_cost(x, y, A, Denoiser::identity(), 5.0)) < 1e-20);

    ForwardModel B = random_model(8, 8, 52);
    ComplexImage x2 = random_image(8, 8, 53);
    ComplexImage y2 = apply_forward(B, random_image(8, 8, 54));
    const double want = 0.5 * norm2sq(apply_forward(B, x2) - y2);
    CHECK(red_cost(x2, y2, B, Denoiser::gaussian(1.0), 0.0) ==
          doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("red_cost matches the dense quadratic oracle") {
    const int h = 8, w = 8, n = 64;
    const double sigma = 1.2, lambda = 1.4;
    ForwardModel A = random_model(h, w, 61);
    ComplexImage x = random_image(h, w, 62);
    ComplexImage y = random_image(h, w, 63);

    Eigen::MatrixXcd MF = testsup::materialize_forward(A);
    Eigen::MatrixXd G = testsup::dense_blur_matrix(h, w, sigma);
    Eigen::VectorXcd xv = testsup::to_vec(x), yv = testsup::to_vec(y);
    Eigen::VectorXcd r = MF * xv - yv;
    const double data_term = 0.5 * r.squaredNorm();
    Eigen::MatrixXcd M = (Eigen::MatrixXd::Identity(n, n) - G).cast<cplx>();
    const double reg_term = 0.5 * lambda * (xv.adjoint() * (M * xv)).real()(0);
    CHECK(std::abs(red_cost(x, y, A, Denoiser::gaussian(sigma), lambda) -
                   (data_term + reg_term)) < 1e-8);
}

TEST_CASE("red_gradient closed forms") {
    ForwardModel A = ForwardModel::full(8, 8);
    ComplexImage x = random_image(8, 8, 71);
    ComplexImage y = random_image(8, 8, 72);
    ComplexImage J = red_gradient(x, y, A, Denoiser::gaussian(1.0), 0.0);
    CHECK(rel_err(J, x - ifft2_unitary(y)) < 1e-12);

    // vanishes at the dense minimizer
    ForwardModel B = random_model(8, 8, 73, 0.6);
    ComplexImage yb = apply_forward(B, random_image(8, 8, 74));
    ComplexImage xstar = dense_red_minimizer(yb, B, 1.0, 0.8);
    CHECK(norm2(red_gradient(xstar, yb, B, Denoiser::gaussian(1.0), 0.8)) < 1e-6);
}

TEST_CASE("red_gradient matches central finite differences of red_cost") {
    ForwardModel A = random_model(8, 8, 81);
    ComplexImage x = random_image(8, 8, 82);
    ComplexImage y = apply_forward(A, random_image(8, 8, 83));
    Denoiser f = Denoiser::gaussian(1.3);
    const double lambda = 0.9;
    ComplexImage J = red_gradient(x, y, A, f, lambda);

    const double step = 1e-5;
    double worst = 0.0;
    for (int i = 0; i < x.size(); ++i)
        for (int chan = 0; chan < 2; ++chan) {
            ComplexImage xp = x, xm = x;
            const cplx d = chan == 0 ? cplx(step, 0.0) : cplx(0.0, step);
            xp[i] += d;
            xm[i] -= d;
            const double fd =
                (red_cost(xp, y, A, f, lambda) - red_cost(xm, y, A, f, lambda)) / (2.0 * step);
            const double an = chan == 0 ? J[i].real() : J[i].imag();
            worst = std::max(worst, std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-4}));
        }
    CHECK(worst < 1e-5);
}
