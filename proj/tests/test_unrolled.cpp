#include <doctest.h>

#include <dured/evaluation.hpp>
#include <dured/fft.hpp>
#include <dured/phantom.hpp>
#include <dured/unrolled.hpp>

#include "test_support.hpp"

#include <cmath>

using namespace dured;
using testsup::circshift;
using testsup::random_image;
using testsup::random_model;
using testsup::rel_err;

namespace {

// Independent straight-line recursion: the four update lines written out
// directly, sharing only the solver/net primitives with the library.
ComplexImage recursion_oracle(const ComplexImage& y, const ForwardModel& A,
                              const DuredConfig& cfg, const DuredParams& params) {
    ComplexImage x = apply_adjoint(A, y);
    ComplexImage v = x;
    ComplexImage u(x.height(), x.width());
    for (int n = 0; n < cfg.n_modules; ++n) {
        x = cg_solve_x(A, y, params.beta, v - u, cfg.cg_iters, 0.0);
        ComplexImage z = zw_forward(params.net_for_module(n, cfg.share_net), v);
        ComplexImage v_next = x + u - (params.lambda / params.beta) * z;
        u = u + x - v_next;
        v = v_next;
    }
    return x;
}

DuredConfig small_cfg() {
    DuredConfig cfg;
    cfg.n_modules = 2;
    cfg.cg_iters = 15;
    cfg.net.layers = 3;
    cfg.net.hidden_channels = 4;
    return cfg;
}

SamplingPDF small_pdf(int h, int w) {
    SamplingPDF pdf;
    pdf.mu = 0.3;
    pdf.alpha = 2.0;
    pdf.height = h;
    pdf.width = w;
    pdf.p_min = 0.05;
    return pdf;
}

} // namespace

TEST_CASE("zero net weights: u stays exactly zero in every module") {
    DuredConfig cfg = small_cfg();
    cfg.n_modules = 4;
    DuredParams params = DuredParams::zero_weights(cfg);
    ForwardModel A = random_model(8, 8, 3);
    ComplexImage y = apply_forward(A, random_image(8, 8, 4));

    std::vector<UnrolledState> history;
    dured_forward(y, A, cfg, params, nullptr, &history);
    REQUIRE(history.size() == 4);
    for (const auto& st : history) {
        for (int i = 0; i < st.u.size(); ++i) CHECK(st.u[i] == cplx(0.0, 0.0));
        for (int i = 0; i < st.z.size(); ++i) CHECK(st.z[i] == cplx(0.0, 0.0));
    }
}

TEST_CASE("zero net weights, full mask: module 1 output equals ifft2(y)") {
    DuredConfig cfg = small_cfg();
    cfg.n_modules = 1;
    DuredParams params = DuredParams::zero_weights(cfg);
    ForwardModel A = ForwardModel::full(8, 8);
    ComplexImage y = apply_forward(A, random_image(8, 8, 7));
    ComplexImage out = dured_forward(y, A, cfg, params);
    CHECK(rel_err(out, ifft2_unitary(y)) < 1e-6);
}

TEST_CASE("dured_forward matches the straight-line recursion oracle") {
    DuredConfig cfg = small_cfg();
    DuredParams params = DuredParams::init(cfg, 11);
    params.lambda = 7.3;
    params.beta = 4.1;
    ForwardModel A = random_model(8, 8, 13);
    ComplexImage y = apply_forward(A, random_image(8, 8, 14));
    ComplexImage got = dured_forward(y, A, cfg, params);
    ComplexImage want = recursion_oracle(y, A, cfg, params);
    CHECK(rel_err(got, want) < 1e-10);

    // per-module denoiser copies follow the same recursion
    DuredConfig cfg2 = small_cfg();
    cfg2.share_net = false;
    DuredParams params2 = DuredParams::init(cfg2, 15);
    CHECK(rel_err(dured_forward(y, A, cfg2, params2),
                  recursion_oracle(y, A, cfg2, params2)) < 1e-10);
}

TEST_CASE("graph forward agrees with the plain forward") {
    DuredConfig cfg = small_cfg();
    DuredParams params = DuredParams::init(cfg, 21);
    ForwardModel A = random_model(8, 8, 22);
    ComplexImage y = apply_forward(A, random_image(8, 8, 23));

    ComplexImage plain = dured_forward(y, A, cfg, params);
    Tape tape;
    GraphParamIds ids = inject_params(tape, params, cfg);
    Tape::Id out = dured_forward_graph(tape, y, A, cfg, ids);
    ComplexImage graph = tensor_to_image(tape.value(out));
    CHECK(rel_err(graph, plain) < 1e-10);
}

TEST_CASE("n2n_loss") {
    ComplexImage a = random_image(8, 8, 31);
    CHECK(n2n_loss(a, a) == 0.0);

    const cplx c(0.3, -0.4);
    ComplexImage b = a;
    for (int i = 0; i < b.size(); ++i) b[i] += c;
    CHECK(n2n_loss(b, a) == doctest::Approx(std::norm(c)).epsilon(1e-12));

    ComplexImage d = random_image(8, 8, 32);
    double acc = 0.0;
    for (int i = 0; i < a.size(); ++i) acc += std::norm(a[i] - d[i]);
    CHECK(std::abs(n2n_loss(a, d) - acc / 64.0) < 1e-12);

    CHECK_THROWS_AS(n2n_loss(a, ComplexImage(4, 4)), std::invalid_argument);
}

TEST_CASE("augment: zero shift is the identity") {
    ComplexImage gt = shepp_logan(16, 16, PhaseMode::smooth);
    TrainingSample s = make_training_sample(gt, small_pdf(16, 16), 41, 42);
    TrainingSample a = augment(s, 0, 0);
    CHECK(rel_err(a.y1, s.y1) < 1e-15);
    CHECK(rel_err(a.y2, s.y2) < 1e-15);
    CHECK(rel_err(a.target_image, s.target_image) < 1e-15);
}

TEST_CASE("augment: zero-filled of shifted data is the shifted zero-filled") {
    ComplexImage gt = shepp_logan(16, 16, PhaseMode::smooth);
    TrainingSample s = make_training_sample(gt, small_pdf(16, 16), 51, 52);
    TrainingSample a = augment(s, 3, -5);
    CHECK(rel_err(a.target_image, circshift(s.target_image, 3, -5)) < 1e-10);
}

TEST_CASE("augment: loss is shift-invariant through the linear pipeline") {
    ComplexImage gt = shepp_logan(16, 16, PhaseMode::smooth);
    SamplingPDF pdf = small_pdf(16, 16);
    TrainingSample s = make_training_sample(gt, pdf, 61, 62);
    DuredConfig cfg = small_cfg();
    DuredParams params = DuredParams::zero_weights(cfg);
    ForwardModel A1 = make_forward_model(s.input_draw);

    const double base = n2n_loss(dured_forward(s.y1, A1, cfg, params), s.target_image);
    TrainingSample a = augment(s, 5, 2);
    const double shifted = n2n_loss(dured_forward(a.y1, A1, cfg, params), a.target_image);
    CHECK(std::abs(base - shifted) <= 1e-10 * std::max(1.0, std::abs(base)));
}

TEST_CASE("training sample construction ties the pieces together") {
    ComplexImage gt = shepp_logan(16, 16, PhaseMode::smooth);
    SamplingPDF pdf = small_pdf(16, 16);
    TrainingSample s = make_training_sample(gt, pdf, 71, 72);
    CHECK(s.input_draw.seed != s.target_draw.seed);
    ForwardModel A2 = make_forward_model(s.target_draw);
    CHECK(rel_err(s.target_image, apply_adjoint(A2, s.y2)) < 1e-15);
    CHECK(rel_err(s.y2, apply_forward(A2, gt)) < 1e-15);
}

TEST_CASE("beta clamping is reported and keeps the forward pass finite") {
    DuredConfig cfg = small_cfg();
    DuredParams params = DuredParams::init(cfg, 81);
    params.beta = -1.0;
    ForwardModel A = random_model(8, 8, 82);
    ComplexImage y = apply_forward(A, random_image(8, 8, 83));

    ForwardStats stats;
    ComplexImage out = dured_forward(y, A, cfg, params, &stats);
    CHECK(stats.beta_clamps == 1);
    CHECK(all_finite(out));

    Tape tape;
    ForwardStats gstats;
    GraphParamIds ids = inject_params(tape, params, cfg, &gstats);
    CHECK(gstats.beta_clamps == 1);
    CHECK(ids.beta_clamped);
    Tape::Id o = dured_forward_graph(tape, y, A, cfg, ids);
    Tape::Id tgt = tape.leaf(image_to_tensor(random_image(8, 8, 84)));
    tape.backward(tape.mse(o, tgt, 64.0));
    auto grads = collect_param_grads(tape, ids);
    CHECK(grads[1] == 0.0); // clamped beta gets no gradient
}

TEST_CASE("gradient flows into lambda, beta, and every conv layer") {
    DuredConfig cfg = small_cfg();
    DuredParams params = DuredParams::init(cfg, 91);
    ComplexImage gt = shepp_logan(16, 16, PhaseMode::smooth);
    TrainingSample s = make_training_sample(gt, small_pdf(16, 16), 92, 93);
    ForwardModel A = make_forward_model(s.input_draw);

    Tape tape;
    GraphParamIds ids = inject_params(tape, params, cfg);
    Tape::Id out = dured_forward_graph(tape, s.y1, A, cfg, ids);
    Tape::Id tgt = tape.leaf(image_to_tensor(s.target_image));
    tape.backward(tape.mse(out, tgt, 256.0));

    CHECK(tape.grad(ids.lambda).data[0] != 0.0);
    CHECK(tape.grad(ids.beta).data[0] != 0.0);
    for (const auto& net : ids.nets)
        for (std::size_t l = 0; l < net.w.size(); ++l) {
            bool nonzero = false;
            for (double g : tape.grad(net.w[l]).data)
                if (g != 0.0) { nonzero = true; break; }
            CHECK(nonzero);
        }
}

TEST_CASE("end-to-end gradients match finite differences on an 8x8 phantom") {
    DuredConfig cfg;
    cfg.n_modules = 2;
    cfg.cg_iters = 8;
    cfg.net.layers = 2;
    cfg.net.hidden_channels = 2;
    DuredParams params = DuredParams::init(cfg, 101);
    params.lambda = 3.0;
    params.beta = 2.0;

    ComplexImage gt = shepp_logan(8, 8, PhaseMode::smooth);
    TrainingSample s = make_training_sample(gt, small_pdf(8, 8), 102, 103);
    ForwardModel A = make_forward_model(s.input_draw);

    auto loss_value = [&](const DuredParams& p) {
        Tape tape;
        GraphParamIds ids = inject_params(tape, p, cfg);
        Tape::Id out = dured_forward_graph(tape, s.y1, A, cfg, ids);
        Tape::Id tgt = tape.leaf(image_to_tensor(s.target_image));
        return tape.value(tape.mse(out, tgt, 64.0)).scalar_value();
    };

    Tape tape;
    GraphParamIds ids = inject_params(tape, params, cfg);
    Tape::Id out = dured_forward_graph(tape, s.y1, A, cfg, ids);
    Tape::Id tgt = tape.leaf(image_to_tensor(s.target_image));
    tape.backward(tape.mse(out, tgt, 64.0));
    std::vector<double> analytic = collect_param_grads(tape, ids);

    std::vector<double> flat = params.flatten();
    const double step = 1e-5;
    double worst = 0.0;
    for (std::size_t i = 0; i < flat.size(); ++i) {
        DuredParams pp = params, pm = params;
        std::vector<double> fp = flat, fm = flat;
        fp[i] += step;
        fm[i] -= step;
        pp.unflatten(fp);
        pm.unflatten(fm);
        const double fd = (loss_value(pp) - loss_value(pm)) / (2.0 * step);
        const double err =
            std::abs(fd - analytic[i]) / std::max({std::abs(fd), std::abs(analytic[i]), 1e-4});
        worst = std::max(worst, err);
    }
    CHECK(worst < 1e-3);
}

TEST_CASE("train: zero epochs leave the parameters untouched") {
    DuredConfig cfg = small_cfg();
    cfg.epochs = 0;
    DuredParams params = DuredParams::init(cfg, 111);
    std::vector<double> before = params.flatten();
    ComplexImage gt = shepp_logan(16, 16, PhaseMode::smooth);
    std::vector<TrainingSample> data = {make_training_sample(gt, small_pdf(16, 16), 112, 113)};
    AdamState adam;
    TrainRecord rec = train(data, cfg, params, adam, 114);
    CHECK(params.flatten() == before);
    CHECK(rec.epoch_loss.empty());
    CHECK(!rec.aborted);
}

TEST_CASE("train: one-sample run reduces the loss") {
    DuredConfig cfg = small_cfg();
    cfg.epochs = 200;
    cfg.batch_size = 1;
    cfg.augment = false;
    cfg.adam.lr = 1e-2;

    ComplexImage gt = shepp_logan(8, 8, PhaseMode::smooth);
    SamplingPDF pdf = small_pdf(8, 8);
    pdf.mu = 0.45; // roughly 2x undersampling
    std::vector<TrainingSample> data = {make_training_sample(gt, pdf, 121, 122)};

    DuredParams params = DuredParams::init(cfg, 123);
    AdamState adam;
    TrainRecord rec = train(data, cfg, params, adam, 124);
    REQUIRE(rec.epoch_loss.size() == 200);
    CHECK(!rec.aborted);
    CHECK(rec.epoch_loss.back() < rec.epoch_loss.front());
    CHECK(std::isfinite(params.lambda));
    CHECK(std::isfinite(params.beta));
}

TEST_CASE("train: identical seeds give identical loss curves") {
    DuredConfig cfg = small_cfg();
    cfg.epochs = 5;
    cfg.net.hidden_channels = 2;

    ComplexImage gt = shepp_logan(12, 12, PhaseMode::smooth);
    SamplingPDF pdf = small_pdf(12, 12);
    std::vector<TrainingSample> data = {make_training_sample(gt, pdf, 131, 132),
                                        make_training_sample(gt, pdf, 133, 134)};

    auto run = [&] {
        DuredParams params = DuredParams::init(cfg, 135);
        AdamState adam;
        TrainRecord rec = train(data, cfg, params, adam, 136);
        return std::pair{rec.epoch_loss, params.flatten()};
    };
    auto [la, pa] = run();
    auto [lb, pb] = run();
    CHECK(la == lb);
    CHECK(pa == pb);
}
