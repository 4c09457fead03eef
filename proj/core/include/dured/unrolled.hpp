#pragma once

#include "dured/autodiff.hpp"
#include "dured/conv_net.hpp"
#include "dured/forward_model.hpp"
#include "dured/optimizer.hpp"
#include "dured/sampling.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace dured {

/// Unrolled network configuration. Defaults follow the reference training
/// setup: two modules, 15 inner CG iterations, lambda = beta = 10 at
/// initialization, Adam at 1e-3 with mini-batches of 8.
struct DuredConfig {
    int n_modules = 2;
    int cg_iters = 15;
    double lambda_init = 10.0;
    double beta_init = 10.0;
    ConvNetConfig net;
    bool share_net = true; // one Z_w across modules; false = per-module copies
    AdamConfig adam;
    int batch_size = 8;
    int epochs = 100;
    bool augment = true;
    int augment_repeat = 1; // shifted copies per sample per epoch

    void validate() const;
    int net_count() const { return share_net ? 1 : n_modules; }
};

/// All learnable state: the scalars lambda and beta plus the conv stacks.
/// flatten()/unflatten() expose declaration order (lambda, beta, then each
/// net's layer weights and biases) for the optimizer, serialization, and
/// finite-difference checks.
struct DuredParams {
    double lambda = 10.0;
    double beta = 10.0;
    std::vector<ResidualConvNet> nets;

    static DuredParams init(const DuredConfig& cfg, std::uint64_t seed);
    static DuredParams zero_weights(const DuredConfig& cfg);

    std::size_t flat_size() const;
    std::vector<double> flatten() const;
    void unflatten(const std::vector<double>& flat);
    const ResidualConvNet& net_for_module(int module, bool share) const {
        return nets[share ? 0 : module];
    }
};

/// Per-module iterate quadruple.
struct UnrolledState {
    ComplexImage x, z, v, u;
};

struct ForwardStats {
    int beta_clamps = 0;
};

/// Runs the unrolled X/Z/V/U recursion: x0 = v0 = Aᴴy (the weighted
/// zero-filled input), u0 = 0; then per module an inner CG data-consistency
/// solve, z = Z_w(v), v = (x + u) - (lambda/beta) z, u = u + (x - v).
/// A nonpositive (or sub-floor) beta is clamped to 1e-6 with a logged
/// warning, counted in stats.
ComplexImage dured_forward(const ComplexImage& y, const ForwardModel& A,
                           const DuredConfig& cfg, const DuredParams& params,
                           ForwardStats* stats = nullptr,
                           std::vector<UnrolledState>* history = nullptr);

/// Sum of squared real/imaginary differences divided by the pixel count.
double n2n_loss(const ComplexImage& x_out, const ComplexImage& target_image);

/// Noisy/noisy training pair: two draws from the same PDF with different
/// seeds; the target is the zero-filled image of the second draw.
struct TrainingSample {
    MaskDraw input_draw;
    MaskDraw target_draw;
    ComplexImage y1, y2;
    ComplexImage target_image;
};

TrainingSample make_training_sample(const ComplexImage& x_true, const SamplingPDF& pdf,
                                    std::uint64_t seed_input, std::uint64_t seed_target);

/// k-space translation augmentation: both measurements get the same phase
/// shift and the target image is recomputed from the shifted y2.
TrainingSample augment(const TrainingSample& sample, int dx, int dy);

struct TrainRecord {
    std::vector<double> epoch_loss;
    int clamp_events = 0;
    bool aborted = false;
    std::string abort_reason;
};

/// Mini-batch Adam over the noisy/noisy loss through the unrolled graph.
/// Deterministic given (dataset, cfg, seed). On a non-finite loss or
/// gradient the last end-of-epoch checkpoint is restored and the record
/// is marked aborted.
TrainRecord train(const std::vector<TrainingSample>& dataset, const DuredConfig& cfg,
                  DuredParams& params, AdamState& adam, std::uint64_t seed);

// --- graph-building entry points (used by train and the gradient suite) ---

struct GraphParamIds {
    Tape::Id lambda = -1;
    Tape::Id beta = -1;
    bool beta_clamped = false;
    struct NetIds {
        std::vector<Tape::Id> w, b;
    };
    std::vector<NetIds> nets;
};

GraphParamIds inject_params(Tape& tape, const DuredParams& params, const DuredConfig& cfg,
                            ForwardStats* stats = nullptr);
Tape::Id dured_forward_graph(Tape& tape, const ComplexImage& y, const ForwardModel& A,
                             const DuredConfig& cfg, const GraphParamIds& ids);
/// Parameter gradients in flatten() order; zero for the clamped beta.
std::vector<double> collect_param_grads(const Tape& tape, const GraphParamIds& ids);

} // namespace dured
