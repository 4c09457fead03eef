#include "dured/unrolled.hpp"
#include "dured/fft.hpp"
#include "dured/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace dured {
namespace {

constexpr double kBetaFloor = 1e-6;
constexpr double kCgEps = 1e-300;

} // namespace

void DuredConfig::validate() const {
    if (n_modules < 1) throw std::invalid_argument("DuredConfig: n_modules must be >= 1");
    if (cg_iters < 1) throw std::invalid_argument("DuredConfig: cg_iters must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("DuredConfig: batch_size must be >= 1");
    if (epochs < 0) throw std::invalid_argument("DuredConfig: epochs must be >= 0");
    if (augment_repeat < 1) throw std::invalid_argument("DuredConfig: augment_repeat must be >= 1");
    net.validate();
    adam.validate();
}

DuredParams DuredParams::init(const DuredConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    DuredParams p;
    p.lambda = cfg.lambda_init;
    p.beta = cfg.beta_init;
    for (int i = 0; i < cfg.net_count(); ++i)
        p.nets.push_back(ResidualConvNet::init(cfg.net, mix_seed(seed, 100 + i)));
    return p;
}

DuredParams DuredParams::zero_weights(const DuredConfig& cfg) {
    cfg.validate();
    DuredParams p;
    p.lambda = cfg.lambda_init;
    p.beta = cfg.beta_init;
    for (int i = 0; i < cfg.net_count(); ++i)
        p.nets.push_back(ResidualConvNet::zeros(cfg.net));
    return p;
}

std::size_t DuredParams::flat_size() const {
    std::size_t n = 2;
    for (const auto& net : nets) n += net.param_count();
    return n;
}

std::vector<double> DuredParams::flatten() const {
    std::vector<double> out;
    out.reserve(flat_size());
    out.push_back(lambda);
    out.push_back(beta);
    for (const auto& net : nets)
        for (std::size_t l = 0; l < net.weights.size(); ++l) {
            out.insert(out.end(), net.weights[l].data.begin(), net.weights[l].data.end());
            out.insert(out.end(), net.biases[l].data.begin(), net.biases[l].data.end());
        }
    return out;
}

void DuredParams::unflatten(const std::vector<double>& flat) {
    if (flat.size() != flat_size())
        throw std::invalid_argument("DuredParams::unflatten: size mismatch");
    std::size_t k = 0;
    lambda = flat[k++];
    beta = flat[k++];
    for (auto& net : nets)
        for (std::size_t l = 0; l < net.weights.size(); ++l) {
            for (auto& v : net.weights[l].data) v = flat[k++];
            for (auto& v : net.biases[l].data) v = flat[k++];
        }
}

// ---------------------------------------------------------------- plain path

ComplexImage dured_forward(const ComplexImage& y, const ForwardModel& A,
                           const DuredConfig& cfg, const DuredParams& params,
                           ForwardStats* stats, std::vector<UnrolledState>* history) {
    cfg.validate();
    if (y.height() != A.height() || y.width() != A.width())
        throw std::invalid_argument("dured_forward: y shape mismatch");
    validate_finite(y, "dured_forward");
    if (static_cast<int>(params.nets.size()) != cfg.net_count())
        throw std::invalid_argument("dured_forward: params/config net count mismatch");

    double beta_eff = params.beta;
    if (beta_eff < kBetaFloor) {
        std::fprintf(stderr, "warning: dured_forward: beta=%g clamped to %g\n", beta_eff, kBetaFloor);
        beta_eff = kBetaFloor;
        if (stats) stats->beta_clamps += 1;
    }
    const double lam_over_beta = params.lambda / beta_eff;

    ComplexImage zf = apply_adjoint(A, y);
    ComplexImage x = zf;
    ComplexImage v = zf;
    ComplexImage u = ComplexImage::zeros(y.height(), y.width());

    for (int n = 0; n < cfg.n_modules; ++n) {
        ComplexImage x_reg = v - u;
        x = cg_solve_x(A, y, beta_eff, x_reg, cfg.cg_iters, 0.0);
        ComplexImage z = zw_forward(params.net_for_module(n, cfg.share_net), v);
        ComplexImage v_new(v.height(), v.width());
        for (int i = 0; i < v.size(); ++i)
            v_new[i] = (x[i] + u[i]) - lam_over_beta * z[i];
        for (int i = 0; i < u.size(); ++i) u[i] += x[i] - v_new[i];
        v = v_new;
        if (history) history->push_back(UnrolledState{x, z, v, u});
    }
    return x;
}

double n2n_loss(const ComplexImage& x_out, const ComplexImage& target_image) {
    require_same_shape(x_out, target_image, "n2n_loss");
    double acc = 0.0;
    for (int i = 0; i < x_out.size(); ++i) {
        const double dr = x_out[i].real() - target_image[i].real();
        const double di = x_out[i].imag() - target_image[i].imag();
        acc += dr * dr + di * di;
    }
    return acc / static_cast<double>(x_out.size());
}

TrainingSample make_training_sample(const ComplexImage& x_true, const SamplingPDF& pdf,
                                    std::uint64_t seed_input, std::uint64_t seed_target) {
    TrainingSample s;
    s.input_draw = draw_mask(pdf, seed_input);
    s.target_draw = draw_mask(pdf, seed_target);
    ForwardModel A1 = make_forward_model(s.input_draw);
    ForwardModel A2 = make_forward_model(s.target_draw);
    s.y1 = apply_forward(A1, x_true);
    s.y2 = apply_forward(A2, x_true);
    s.target_image = apply_adjoint(A2, s.y2);
    return s;
}

TrainingSample augment(const TrainingSample& sample, int dx, int dy) {
    TrainingSample out;
    out.input_draw = sample.input_draw;
    out.target_draw = sample.target_draw;
    out.y1 = phase_shift_translate(sample.y1, dx, dy);
    out.y2 = phase_shift_translate(sample.y2, dx, dy);
    out.target_image = apply_adjoint(make_forward_model(out.target_draw), out.y2);
    return out;
}

// ---------------------------------------------------------------- graph path

GraphParamIds inject_params(Tape& tape, const DuredParams& params, const DuredConfig& cfg,
                            ForwardStats* stats) {
    GraphParamIds ids;
    ids.lambda = tape.leaf(Tensor::scalar(params.lambda));
    if (params.beta < kBetaFloor) {
        std::fprintf(stderr, "warning: dured graph: beta=%g clamped to %g\n", params.beta, kBetaFloor);
        ids.beta = tape.leaf(Tensor::scalar(kBetaFloor));
        ids.beta_clamped = true;
        if (stats) stats->beta_clamps += 1;
    } else {
        ids.beta = tape.leaf(Tensor::scalar(params.beta));
    }
    for (const auto& net : params.nets) {
        GraphParamIds::NetIds n;
        for (std::size_t l = 0; l < net.weights.size(); ++l) {
            n.w.push_back(tape.leaf(net.weights[l]));
            n.b.push_back(tape.leaf(net.biases[l]));
        }
        ids.nets.push_back(std::move(n));
    }
    (void)cfg;
    return ids;
}

namespace {

Tape::Id cg_graph(Tape& t, Tape::Id rhs, const ForwardModel& A, Tape::Id beta, int iters) {
    Tape::Id x = t.leaf(Tensor::zeros_like(t.value(rhs)));
    Tape::Id r = rhs;
    Tape::Id p = r;
    Tape::Id rs = t.inner(r, r);
    for (int it = 0; it < iters; ++it) {
        Tape::Id Ap = t.add(t.ifft2(t.masked_multiply(t.fft2(p), A.normal_grid())),
                            t.scale(p, beta));
        Tape::Id pAp = t.inner(p, Ap);
        Tape::Id alpha = t.s_div(rs, pAp, kCgEps);
        x = t.add(x, t.scale(p, alpha));
        r = t.sub(r, t.scale(Ap, alpha));
        Tape::Id rs_new = t.inner(r, r);
        Tape::Id cg_beta = t.s_div(rs_new, rs, kCgEps);
        p = t.add(r, t.scale(p, cg_beta));
        rs = rs_new;
    }
    return x;
}

Tape::Id net_graph(Tape& t, Tape::Id v, const GraphParamIds::NetIds& ids,
                   const ConvNetConfig& cfg) {
    Tape::Id cur = v;
    const int layers = static_cast<int>(ids.w.size());
    for (int l = 0; l < layers; ++l) {
        cur = t.conv2d(cur, ids.w[l], ids.b[l]);
        if (l < layers - 1) cur = t.nonlin(cur, cfg.nonlin, cfg.leak);
    }
    return cur;
}

} // namespace

Tape::Id dured_forward_graph(Tape& tape, const ComplexImage& y, const ForwardModel& A,
                             const DuredConfig& cfg, const GraphParamIds& ids) {
    if (y.height() != A.height() || y.width() != A.width())
        throw std::invalid_argument("dured_forward_graph: y shape mismatch");
    validate_finite(y, "dured_forward_graph");

    Tape::Id ahy = tape.leaf(image_to_tensor(apply_adjoint(A, y)));
    Tape::Id x = ahy;
    Tape::Id v = ahy;
    Tape::Id u = tape.leaf(Tensor::zeros_like(tape.value(ahy)));
    Tape::Id lam_over_beta = tape.s_div(ids.lambda, ids.beta, 0.0);

    for (int n = 0; n < cfg.n_modules; ++n) {
        Tape::Id x_reg = tape.sub(v, u);
        Tape::Id rhs = tape.add(ahy, tape.scale(x_reg, ids.beta));
        x = cg_graph(tape, rhs, A, ids.beta, cfg.cg_iters);
        Tape::Id z = net_graph(tape, v, ids.nets[cfg.share_net ? 0 : n], cfg.net);
        Tape::Id v_new = tape.sub(tape.add(x, u), tape.scale(z, lam_over_beta));
        u = tape.add(u, tape.sub(x, v_new));
        v = v_new;
    }
    return x;
}

std::vector<double> collect_param_grads(const Tape& tape, const GraphParamIds& ids) {
    std::vector<double> out;
    out.push_back(tape.grad(ids.lambda).data[0]);
    out.push_back(ids.beta_clamped ? 0.0 : tape.grad(ids.beta).data[0]);
    for (const auto& n : ids.nets)
        for (std::size_t l = 0; l < n.w.size(); ++l) {
            const auto& gw = tape.grad(n.w[l]).data;
            out.insert(out.end(), gw.begin(), gw.end());
            const auto& gb = tape.grad(n.b[l]).data;
            out.insert(out.end(), gb.begin(), gb.end());
        }
    return out;
}

// ------------------------------------------------------------------ training

TrainRecord train(const std::vector<TrainingSample>& dataset, const DuredConfig& cfg,
                  DuredParams& params, AdamState& adam, std::uint64_t seed) {
    cfg.validate();
    if (dataset.empty()) throw std::invalid_argument("train: dataset must be nonempty");
    if (static_cast<int>(params.nets.size()) != cfg.net_count())
        throw std::invalid_argument("train: params/config net count mismatch");

    const int n = static_cast<int>(dataset.size());
    const int h = dataset[0].target_image.height();
    const int w = dataset[0].target_image.width();

    std::vector<ForwardModel> input_models;
    input_models.reserve(n);
    for (const auto& s : dataset) input_models.push_back(make_forward_model(s.input_draw));

    if (adam.m.empty()) adam = AdamState::zeros(params.flat_size());
    if (adam.m.size() != params.flat_size())
        throw std::invalid_argument("train: adam state size mismatch");

    TrainRecord record;
    DuredParams last_good_params = params;
    AdamState last_good_adam = adam;
    Rng aug_rng(mix_seed(seed, 0x617567ULL));

    struct Item {
        int idx;
        int dx, dy;
    };

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<Item> items;
        items.reserve(static_cast<std::size_t>(n) * cfg.augment_repeat);
        for (int i = 0; i < n; ++i) {
            const int reps = cfg.augment ? cfg.augment_repeat : 1;
            for (int rep = 0; rep < reps; ++rep) {
                Item it{i, 0, 0};
                if (cfg.augment) {
                    it.dx = aug_rng.next_int(-w / 4, w / 4);
                    it.dy = aug_rng.next_int(-h / 4, h / 4);
                }
                items.push_back(it);
            }
        }

        double loss_sum = 0.0;
        int loss_count = 0;
        for (std::size_t start = 0; start < items.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(items.size(), start + cfg.batch_size);
            const double inv_batch = 1.0 / static_cast<double>(stop - start);
            std::vector<double> grads(params.flat_size(), 0.0);

            for (std::size_t k = start; k < stop; ++k) {
                const Item& it = items[k];
                const TrainingSample* sp = &dataset[it.idx];
                TrainingSample shifted;
                if (cfg.augment && (it.dx != 0 || it.dy != 0)) {
                    shifted = augment(*sp, it.dx, it.dy);
                    sp = &shifted;
                }
                Tape tape;
                ForwardStats fs;
                GraphParamIds ids = inject_params(tape, params, cfg, &fs);
                record.clamp_events += fs.beta_clamps;
                Tape::Id out = dured_forward_graph(tape, sp->y1, input_models[it.idx], cfg, ids);
                Tape::Id tgt = tape.leaf(image_to_tensor(sp->target_image));
                Tape::Id loss = tape.mse(out, tgt, static_cast<double>(h) * w);
                tape.backward(loss);
                loss_sum += tape.value(loss).scalar_value();
                ++loss_count;
                std::vector<double> g = collect_param_grads(tape, ids);
                for (std::size_t j = 0; j < grads.size(); ++j) grads[j] += g[j] * inv_batch;
            }

            bool finite = std::isfinite(loss_sum);
            for (double g : grads)
                if (!std::isfinite(g)) { finite = false; break; }
            if (!finite) {
                params = last_good_params;
                adam = last_good_adam;
                record.aborted = true;
                record.abort_reason = "non-finite loss or gradient at epoch " + std::to_string(epoch);
                return record;
            }

            std::vector<double> flat = params.flatten();
            adam_step(flat, grads, adam, cfg.adam);
            params.unflatten(flat);
        }

        record.epoch_loss.push_back(loss_sum / loss_count);
        last_good_params = params;
        last_good_adam = adam;
    }
    return record;
}

} // namespace dured
