#include <doctest.h>

#include <dured/denoiser.hpp>
#include <dured/rng.hpp>

#include "test_support.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>

using namespace dured;
using testsup::random_image;
using testsup::rel_err;

namespace {

// Independent naive zero-padded convolution + leaky rectifier stack.
std::vector<double> naive_net_forward(const ResidualConvNet& net,
                                      const std::vector<double>& input, int h, int w) {
    std::vector<double> cur = input;
    int cin = 2;
    const int k = net.cfg.kernel_size;
    const int half = k / 2;
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        const int cout = net.weights[l].shape[0];
        std::vector<double> next(static_cast<std::size_t>(cout) * h * w, 0.0);
        for (int co = 0; co < cout; ++co)
            for (int r = 0; r < h; ++r)
                for (int c = 0; c < w; ++c) {
                    double acc = net.biases[l].data[co];
                    for (int ci = 0; ci < cin; ++ci)
                        for (int kr = 0; kr < k; ++kr)
                            for (int kc = 0; kc < k; ++kc) {
                                const int rr = r + kr - half;
                                const int cc = c + kc - half;
                                if (rr < 0 || rr >= h || cc < 0 || cc >= w) continue;
                                acc += net.weights[l]
                                           .data[((co * cin + ci) * k + kr) * k + kc] *
                                       cur[(ci * h + rr) * static_cast<std::size_t>(w) + cc];
                            }
                    next[(co * h + r) * static_cast<std::size_t>(w) + c] = acc;
                }
        if (l + 1 < net.weights.size())
            for (auto& v : next)
                if (v < 0.0) v *= net.cfg.leak;
        cur = std::move(next);
        cin = cout;
    }
    return cur;
}

} // namespace

TEST_CASE("gaussian blur preserves constants") {
    ComplexImage c(16, 16);
    for (int i = 0; i < c.size(); ++i) c[i] = cplx(0.7, -0.3);
    ComplexImage out = denoise(Denoiser::gaussian(1.5), c);
    for (int i = 0; i < out.size(); ++i) CHECK(std::abs(out[i] - c[i]) < 1e-13);
}

TEST_CASE("median preserves constants") {
    ComplexImage c(10, 10);
    for (int i = 0; i < c.size(); ++i) c[i] = cplx(-0.2, 0.9);
    ComplexImage out = denoise(Denoiser::median_filter(3), c);
    for (int i = 0; i < out.size(); ++i) CHECK(out[i] == c[i]);
}

TEST_CASE("gaussian blur of a delta reproduces the kernel") {
    const int h = 12, w = 12;
    const double sigma = 1.2;
    ComplexImage delta(h, w);
    delta(3, 7) = 1.0;
    ComplexImage out = denoise(Denoiser::gaussian(sigma), delta);

    // direct kernel evaluation
    auto k1 = [&](int n, int d) {
        const double dist = std::min(d, n - d);
        return std::exp(-dist * dist / (2.0 * sigma * sigma));
    };
    double sr = 0.0, sc = 0.0;
    for (int d = 0; d < h; ++d) sr += k1(h, d);
    for (int d = 0; d < w; ++d) sc += k1(w, d);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            const int dr = ((r - 3) % h + h) % h;
            const int dc = ((c - 7) % w + w) % w;
            const double want = (k1(h, dr) / sr) * (k1(w, dc) / sc);
            CHECK(std::abs(out(r, c) - want) < 1e-12);
        }
}

TEST_CASE("median window validation") {
    ComplexImage x = random_image(6, 6, 3);
    CHECK_THROWS_AS(denoise(Denoiser::median_filter(7), x), std::invalid_argument);
    CHECK_THROWS_AS(denoise(Denoiser::median_filter(4), x), std::invalid_argument);
    CHECK_NOTHROW(denoise(Denoiser::median_filter(5), x));
}

TEST_CASE("median removes isolated impulses") {
    ComplexImage x(9, 9);
    for (int i = 0; i < x.size(); ++i) x[i] = 1.0;
    x(4, 4) = 50.0;
    ComplexImage out = denoise(Denoiser::median_filter(3), x);
    CHECK(out(4, 4).real() == 1.0);
}

TEST_CASE("shape preservation across denoiser kinds") {
    for (auto [h, w] : {std::pair{8, 8}, {9, 13}}) {
        ComplexImage x = random_image(h, w, 5);
        for (auto f : {Denoiser::gaussian(1.0), Denoiser::median_filter(3)}) {
            ComplexImage out = denoise(f, x);
            CHECK(out.height() == h);
            CHECK(out.width() == w);
        }
    }
}

TEST_CASE("zw_forward with zero weights is the zero map") {
    ConvNetConfig cfg;
    ResidualConvNet net = ResidualConvNet::zeros(cfg);
    ComplexImage v = random_image(10, 10, 7);
    ComplexImage z = zw_forward(net, v);
    for (int i = 0; i < z.size(); ++i) CHECK(z[i] == cplx(0.0, 0.0));
}

TEST_CASE("single 1x1 conv with (1-c)I weights scales the input exactly") {
    ConvNetConfig cfg;
    cfg.layers = 1;
    cfg.kernel_size = 1;
    ResidualConvNet net = ResidualConvNet::zeros(cfg);
    const double c = 0.3;
    // weight tensor is (2, 2, 1, 1): diagonal (1-c)
    net.weights[0].data[0 * 2 + 0] = 1.0 - c;
    net.weights[0].data[1 * 2 + 1] = 1.0 - c;
    ComplexImage v = random_image(8, 8, 11);
    ComplexImage z = zw_forward(net, v);
    for (int i = 0; i < v.size(); ++i) CHECK(std::abs(z[i] - (1.0 - c) * v[i]) < 1e-15);

    // implicit denoiser: f(v) = v - z = c v
    ComplexImage f = denoise(Denoiser::residual(&net), v);
    for (int i = 0; i < v.size(); ++i) CHECK(std::abs(f[i] - c * v[i]) < 1e-15);
}

TEST_CASE("zw_forward matches a nested-loop convolution oracle") {
    ConvNetConfig cfg;
    cfg.layers = 3;
    cfg.hidden_channels = 4;
    ResidualConvNet net = ResidualConvNet::init(cfg, 17);
    for (auto& b : net.biases)
        for (auto& v : b.data) v = 0.05;

    ComplexImage v = random_image(7, 9, 19);
    ComplexImage z = zw_forward(net, v);

    std::vector<double> input(2 * 7 * 9);
    for (int i = 0; i < v.size(); ++i) {
        input[i] = v[i].real();
        input[63 + i] = v[i].imag();
    }
    auto want = naive_net_forward(net, input, 7, 9);
    for (int i = 0; i < v.size(); ++i) {
        CHECK(std::abs(z[i].real() - want[i]) < 1e-10);
        CHECK(std::abs(z[i].imag() - want[63 + i]) < 1e-10);
    }
}

TEST_CASE("zw_forward rejects non-finite weights") {
    ConvNetConfig cfg;
    ResidualConvNet net = ResidualConvNet::init(cfg, 1);
    net.weights[1].data[3] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(zw_forward(net, random_image(8, 8, 2)), std::invalid_argument);
}

TEST_CASE("superposition in one layer's weights with identity nonlinearities") {
    ConvNetConfig cfg;
    cfg.layers = 3;
    cfg.hidden_channels = 3;
    cfg.nonlin = Nonlinearity::identity;
    ResidualConvNet net_a = ResidualConvNet::init(cfg, 23);
    ResidualConvNet net_b = net_a;
    ResidualConvNet net_sum = net_a;
    Rng rng(29);
    for (std::size_t i = 0; i < net_b.weights[1].data.size(); ++i) {
        net_b.weights[1].data[i] = 0.3 * rng.next_normal();
        net_sum.weights[1].data[i] = net_a.weights[1].data[i] + net_b.weights[1].data[i];
    }
    // biases break additivity; zero them everywhere
    for (auto* n : {&net_a, &net_b, &net_sum})
        for (auto& b : n->biases)
            for (auto& v : b.data) v = 0.0;

    ComplexImage v = random_image(8, 8, 31);
    ComplexImage za = zw_forward(net_a, v);
    ComplexImage zb = zw_forward(net_b, v);
    ComplexImage zs = zw_forward(net_sum, v);
    CHECK(rel_err(zs, za + zb) < 1e-12);
}

TEST_CASE("red_regularizer_value trivial cases") {
    ComplexImage zero(8, 8);
    CHECK(red_regularizer_value(Denoiser::gaussian(1.0), zero, 2.0) == 0.0);

    ComplexImage x = random_image(8, 8, 37);
    CHECK(std::abs(red_regularizer_value(Denoiser::identity(), x, 3.0)) < 1e-14);
}

TEST_CASE("red_regularizer_value matches the dense quadratic form") {
    const int h = 8, w = 8;
    const double sigma = 1.0, lambda = 1.7;
    ComplexImage x = random_image(h, w, 41);
    const double got = red_regularizer_value(Denoiser::gaussian(sigma), x, lambda);

    Eigen::MatrixXd G = testsup::dense_blur_matrix(h, w, sigma);
    Eigen::MatrixXd M = Eigen::MatrixXd::Identity(h * w, h * w) - G;
    Eigen::VectorXcd xv = testsup::to_vec(x);
    const double want = 0.5 * lambda * (xv.adjoint() * (M * xv)).real()(0);
    CHECK(std::abs(got - want) < 1e-8);
}

TEST_CASE("gradient rule: analytic x - Gx matches finite differences") {
    const int h = 8, w = 8;
    const double sigma = 1.1, lambda = 0.9;
    Denoiser f = Denoiser::gaussian(sigma);
    ComplexImage x = random_image(h, w, 43);

    ComplexImage analytic = x - denoise(f, x);
    const double step = 1e-5;
    for (int i = 0; i < x.size(); ++i) {
        for (int chan = 0; chan < 2; ++chan) {
            ComplexImage xp = x, xm = x;
            const cplx delta = chan == 0 ? cplx(step, 0.0) : cplx(0.0, step);
            xp[i] += delta;
            xm[i] -= delta;
            const double fd = (red_regularizer_value(f, xp, lambda) -
                               red_regularizer_value(f, xm, lambda)) /
                              (2.0 * step);
            const double an = lambda * (chan == 0 ? analytic[i].real() : analytic[i].imag());
            CHECK(std::abs(fd - an) <= 1e-5 * std::max({std::abs(fd), std::abs(an), 1e-4}));
        }
    }
}
