#pragma once

#include "dured/complex_image.hpp"
#include "dured/sampling.hpp"
#include "dured/unrolled.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace dured {

/// ||gt - recon||^2 / ||gt||^2. Throws on zero ground truth.
double nmse(const ComplexImage& gt, const ComplexImage& recon);

using CostFn = std::function<double(const ComplexImage&)>;
using GradFn = std::function<ComplexImage(const ComplexImage&)>;

/// Cost landscape sampled on an (a, b) lattice around x_hat along two
/// seed-deterministic random directions, each normalized to unit L2 norm.
/// grad_e1/grad_e2 carry the cost gradient projected onto the directions.
struct ContourGrid {
    int n = 0;
    double extent = 0.0;
    ComplexImage eps1, eps2;
    std::vector<double> a_values;      // lattice coordinates, length n
    std::vector<double> cost;          // n*n, index ib * n + ia
    std::vector<double> grad_e1;       // same layout
    std::vector<double> grad_e2;
    std::vector<std::uint8_t> valid;   // 0 where the cost was non-finite

    double at(int ia, int ib) const { return cost[static_cast<std::size_t>(ib) * n + ia]; }
};

/// grid_n must be odd and >= 3 so the origin is a lattice point; the center
/// cell equals cost(x_hat) by construction.
ContourGrid contour_grid(const ComplexImage& x_hat, const CostFn& cost_fn,
                         const GradFn& grad_fn, std::uint64_t seed,
                         double grid_extent, int grid_n);

/// Adds `amplitude` to the real channel at stencil-true pixels.
ComplexImage text_perturbation(const ComplexImage& img,
                               const std::vector<std::uint8_t>& stencil,
                               double amplitude);

/// Maps a (possibly perturbed) ground-truth image to a reconstruction;
/// the measurement step is part of the callable.
using ReconFn = std::function<ComplexImage(const ComplexImage&)>;

struct PerturbResult {
    ComplexImage r;
    double degradation; // nmse(x, recon(x + r)) of the worst candidate
};

/// Random-search surrogate for the worst-case perturbation: evaluates the
/// zero perturbation plus `trials` candidates of L1 norm exactly `budget`
/// and returns the worst. Deterministic given seed.
PerturbResult worst_case_perturb(const ReconFn& recon, const ComplexImage& x,
                                 double budget, int trials, std::uint64_t seed);

struct CurvePoint {
    double budget;
    double degradation;
};

/// Degradation curve over an ascending budget list with a nested candidate
/// pool (each budget adds candidates, the running worst is kept), so the
/// curve is nondecreasing by construction.
std::vector<CurvePoint> worst_case_curve(const ReconFn& recon, const ComplexImage& x,
                                         const std::vector<double>& budgets, int trials,
                                         std::uint64_t seed);

struct PatternStudyConfig {
    int height = 32;
    int width = 32;
    SamplingPDF pdf;    // height/width fields are overwritten from above
    DuredConfig dured;
    int n_train = 16;
    int n_test = 4;
};

struct PatternStudyRow {
    int n_patterns;
    double mean_test_nmse;
    double mean_zero_filled_nmse;
    double final_train_loss;
    std::vector<double> per_image_nmse;    // raw lists for external plotting
    std::vector<double> per_image_zf_nmse;
};

/// Trains once per requested pattern count, cycling exactly that many mask
/// seeds over the dataset, then evaluates on held-out phantoms with fresh
/// masks. One row per requested count.
std::vector<PatternStudyRow> sampling_pattern_study(const std::vector<int>& pattern_counts,
                                                    const PatternStudyConfig& cfg,
                                                    std::uint64_t seed);

} // namespace dured
