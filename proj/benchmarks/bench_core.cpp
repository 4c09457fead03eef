#include <dured/autodiff.hpp>
#include <dured/denoiser.hpp>
#include <dured/fft.hpp>
#include <dured/phantom.hpp>
#include <dured/red_solver.hpp>
#include <dured/rng.hpp>
#include <dured/sampling.hpp>
#include <dured/unrolled.hpp>

#include <benchmark/benchmark.h>

namespace {

using namespace dured;

ComplexImage bench_image(int n, std::uint64_t seed) {
    Rng rng(seed);
    ComplexImage img(n, n);
    for (int i = 0; i < img.size(); ++i) img[i] = cplx(rng.next_normal(), rng.next_normal());
    return img;
}

SamplingPDF bench_pdf(int n) {
    SamplingPDF pdf;
    pdf.height = n;
    pdf.width = n;
    pdf.p_min = 0.01;
    return pdf;
}

void BM_fft2_unitary(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    ComplexImage x = bench_image(n, 1);
    for (auto _ : state) benchmark::DoNotOptimize(fft2_unitary(x));
    state.SetItemsProcessed(state.iterations() * x.size());
}
BENCHMARK(BM_fft2_unitary)->Arg(32)->Arg(64)->Arg(128)->Arg(320);

void BM_draw_mask(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    SamplingPDF pdf = bench_pdf(n);
    std::uint64_t seed = 0;
    for (auto _ : state) benchmark::DoNotOptimize(draw_mask(pdf, ++seed));
}
BENCHMARK(BM_draw_mask)->Arg(64)->Arg(320);

void BM_cg_solve(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    ForwardModel A = make_forward_model(draw_mask(bench_pdf(n), 3));
    ComplexImage y = apply_forward(A, bench_image(n, 4));
    ComplexImage x_reg = bench_image(n, 5);
    for (auto _ : state)
        benchmark::DoNotOptimize(cg_solve_x(A, y, 10.0, x_reg, 15, 0.0));
}
BENCHMARK(BM_cg_solve)->Arg(32)->Arg(64)->Arg(128);

void BM_gaussian_denoise(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    ComplexImage x = bench_image(n, 6);
    Denoiser f = Denoiser::gaussian(1.5);
    for (auto _ : state) benchmark::DoNotOptimize(denoise(f, x));
}
BENCHMARK(BM_gaussian_denoise)->Arg(64)->Arg(128);

void BM_zw_forward(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    ConvNetConfig cfg;
    ResidualConvNet net = ResidualConvNet::init(cfg, 7);
    ComplexImage v = bench_image(n, 8);
    for (auto _ : state) benchmark::DoNotOptimize(zw_forward(net, v));
}
BENCHMARK(BM_zw_forward)->Arg(32)->Arg(64)->Arg(128);

void BM_dured_forward(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    DuredConfig cfg;
    cfg.net.hidden_channels = 8;
    cfg.net.layers = 3;
    DuredParams params = DuredParams::init(cfg, 9);
    ForwardModel A = make_forward_model(draw_mask(bench_pdf(n), 10));
    ComplexImage y = apply_forward(A, bench_image(n, 11));
    for (auto _ : state) benchmark::DoNotOptimize(dured_forward(y, A, cfg, params));
}
BENCHMARK(BM_dured_forward)->Arg(32)->Arg(64);

void BM_train_step(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    DuredConfig cfg;
    cfg.net.hidden_channels = 8;
    cfg.net.layers = 3;
    cfg.epochs = 1;
    cfg.batch_size = 1;
    cfg.augment = false;
    ComplexImage gt = shepp_logan(n, n, PhaseMode::smooth);
    SamplingPDF pdf = bench_pdf(n);
    std::vector<TrainingSample> data = {make_training_sample(gt, pdf, 12, 13)};
    for (auto _ : state) {
        DuredParams params = DuredParams::init(cfg, 14);
        AdamState adam;
        benchmark::DoNotOptimize(train(data, cfg, params, adam, 15));
    }
}
BENCHMARK(BM_train_step)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_admm_red(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    ForwardModel A = make_forward_model(draw_mask(bench_pdf(n), 16));
    ComplexImage y = apply_forward(A, bench_image(n, 17));
    AdmmRedOptions opts;
    opts.lambda = 0.5;
    opts.beta = 2.0;
    opts.n_iters = 20;
    opts.cg_iters = 15;
    Denoiser f = Denoiser::gaussian(1.5);
    for (auto _ : state) benchmark::DoNotOptimize(admm_red(y, A, f, opts));
}
BENCHMARK(BM_admm_red)->Arg(64)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
