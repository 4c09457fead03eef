#include "dured/evaluation.hpp"
#include "dured/phantom.hpp"
#include "dured/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace dured {

double nmse(const ComplexImage& gt, const ComplexImage& recon) {
    require_same_shape(gt, recon, "nmse");
    const double denom = norm2sq(gt);
    if (denom == 0.0)
        throw std::invalid_argument("nmse: zero ground truth, metric undefined");
    return norm2sq(gt - recon) / denom;
}

namespace {

ComplexImage random_direction(Rng& rng, int h, int w) {
    ComplexImage d(h, w);
    for (int i = 0; i < d.size(); ++i)
        d[i] = cplx(rng.next_normal(), rng.next_normal());
    return d;
}

} // namespace

ContourGrid contour_grid(const ComplexImage& x_hat, const CostFn& cost_fn,
                         const GradFn& grad_fn, std::uint64_t seed,
                         double grid_extent, int grid_n) {
    if (grid_n < 3 || grid_n % 2 == 0)
        throw std::invalid_argument("contour_grid: grid_n must be odd and >= 3");
    if (!(grid_extent > 0.0))
        throw std::invalid_argument("contour_grid: grid_extent must be positive");

    const int h = x_hat.height(), w = x_hat.width();
    Rng rng(mix_seed(seed, 0x636f6eULL));
    ComplexImage e1 = random_direction(rng, h, w);
    ComplexImage e2 = random_direction(rng, h, w);
    e1 *= 1.0 / norm2(e1);
    e2 *= 1.0 / norm2(e2);

    ContourGrid grid;
    grid.n = grid_n;
    grid.extent = grid_extent;
    grid.eps1 = e1;
    grid.eps2 = e2;
    grid.a_values.resize(grid_n);
    for (int i = 0; i < grid_n; ++i)
        grid.a_values[i] = grid_extent * (2.0 * i / (grid_n - 1) - 1.0);
    const std::size_t cells = static_cast<std::size_t>(grid_n) * grid_n;
    grid.cost.assign(cells, 0.0);
    grid.grad_e1.assign(cells, 0.0);
    grid.grad_e2.assign(cells, 0.0);
    grid.valid.assign(cells, 1);

    for (int ib = 0; ib < grid_n; ++ib) {
        for (int ia = 0; ia < grid_n; ++ia) {
            const double a = grid.a_values[ia];
            const double b = grid.a_values[ib];
            ComplexImage point = x_hat;
            for (int i = 0; i < point.size(); ++i)
                point[i] += a * e1[i] + b * e2[i];
            const std::size_t idx = static_cast<std::size_t>(ib) * grid_n + ia;
            const double c = cost_fn(point);
            if (!std::isfinite(c)) {
                grid.valid[idx] = 0;
                continue;
            }
            grid.cost[idx] = c;
            if (grad_fn) {
                ComplexImage g = grad_fn(point);
                grid.grad_e1[idx] = inner_re(g, e1);
                grid.grad_e2[idx] = inner_re(g, e2);
            }
        }
    }
    return grid;
}

ComplexImage text_perturbation(const ComplexImage& img,
                               const std::vector<std::uint8_t>& stencil,
                               double amplitude) {
    if (stencil.size() != static_cast<std::size_t>(img.size()))
        throw std::invalid_argument("text_perturbation: stencil shape mismatch");
    ComplexImage out = img;
    for (int i = 0; i < out.size(); ++i)
        if (stencil[i]) out[i] += amplitude;
    return out;
}

namespace {

ComplexImage l1_unit_direction(Rng& rng, int h, int w) {
    ComplexImage d = random_direction(rng, h, w);
    const double n1 = norm1(d);
    d *= 1.0 / n1;
    return d;
}

} // namespace

PerturbResult worst_case_perturb(const ReconFn& recon, const ComplexImage& x,
                                 double budget, int trials, std::uint64_t seed) {
    if (budget < 0.0) throw std::invalid_argument("worst_case_perturb: budget must be >= 0");
    if (trials < 1) throw std::invalid_argument("worst_case_perturb: trials must be >= 1");

    Rng rng(mix_seed(seed, 0x776350ULL));
    PerturbResult best;
    best.r = ComplexImage::zeros(x.height(), x.width());
    best.degradation = nmse(x, recon(x)); // zero-perturbation baseline
    for (int t = 0; t < trials; ++t) {
        ComplexImage r = l1_unit_direction(rng, x.height(), x.width());
        r *= budget;
        if (budget == 0.0) continue; // all candidates coincide with the baseline
        const double d = nmse(x, recon(x + r));
        if (d > best.degradation) {
            best.degradation = d;
            best.r = r;
        }
    }
    return best;
}

std::vector<CurvePoint> worst_case_curve(const ReconFn& recon, const ComplexImage& x,
                                         const std::vector<double>& budgets, int trials,
                                         std::uint64_t seed) {
    if (budgets.empty()) throw std::invalid_argument("worst_case_curve: empty budget list");
    for (std::size_t i = 1; i < budgets.size(); ++i)
        if (budgets[i] < budgets[i - 1])
            throw std::invalid_argument("worst_case_curve: budgets must be ascending");

    Rng rng(mix_seed(seed, 0x776350ULL));
    double worst = nmse(x, recon(x));
    std::vector<CurvePoint> curve;
    curve.reserve(budgets.size());
    for (double budget : budgets) {
        if (budget < 0.0) throw std::invalid_argument("worst_case_curve: budget must be >= 0");
        for (int t = 0; t < trials; ++t) {
            ComplexImage r = l1_unit_direction(rng, x.height(), x.width());
            if (budget == 0.0) continue;
            r *= budget;
            const double d = nmse(x, recon(x + r));
            if (d > worst) worst = d;
        }
        curve.push_back(CurvePoint{budget, worst});
    }
    return curve;
}

std::vector<PatternStudyRow> sampling_pattern_study(const std::vector<int>& pattern_counts,
                                                    const PatternStudyConfig& cfg,
                                                    std::uint64_t seed) {
    if (pattern_counts.empty())
        throw std::invalid_argument("sampling_pattern_study: no pattern counts requested");

    SamplingPDF pdf = cfg.pdf;
    pdf.height = cfg.height;
    pdf.width = cfg.width;
    pdf.validate();

    auto train_phantoms = phantom_variants(cfg.height, cfg.width, cfg.n_train, mix_seed(seed, 1));
    auto test_phantoms = phantom_variants(cfg.height, cfg.width, cfg.n_test, mix_seed(seed, 2));

    std::vector<PatternStudyRow> rows;
    rows.reserve(pattern_counts.size());
    for (int count : pattern_counts) {
        if (count < 1)
            throw std::invalid_argument("sampling_pattern_study: pattern count must be >= 1");
        std::vector<std::uint64_t> pool(count);
        for (int k = 0; k < count; ++k) pool[k] = mix_seed(seed, 1000 + k);

        std::vector<TrainingSample> dataset;
        dataset.reserve(train_phantoms.size());
        for (std::size_t i = 0; i < train_phantoms.size(); ++i)
            dataset.push_back(make_training_sample(train_phantoms[i], pdf,
                                                   pool[(2 * i) % count],
                                                   pool[(2 * i + 1) % count]));

        DuredParams params = DuredParams::init(cfg.dured, mix_seed(seed, 3));
        AdamState adam;
        TrainRecord rec = train(dataset, cfg.dured, params, adam, mix_seed(seed, 4));

        PatternStudyRow row;
        row.n_patterns = count;
        double nmse_sum = 0.0, zf_sum = 0.0;
        for (std::size_t j = 0; j < test_phantoms.size(); ++j) {
            MaskDraw draw = draw_mask(pdf, mix_seed(seed, 5000 + j));
            ForwardModel A = make_forward_model(draw);
            ComplexImage y = apply_forward(A, test_phantoms[j]);
            ComplexImage zf = apply_adjoint(A, y);
            ComplexImage recon = dured_forward(y, A, cfg.dured, params);
            row.per_image_nmse.push_back(nmse(test_phantoms[j], recon));
            row.per_image_zf_nmse.push_back(nmse(test_phantoms[j], zf));
            nmse_sum += row.per_image_nmse.back();
            zf_sum += row.per_image_zf_nmse.back();
        }
        row.mean_test_nmse = nmse_sum / cfg.n_test;
        row.mean_zero_filled_nmse = zf_sum / cfg.n_test;
        row.final_train_loss = rec.epoch_loss.empty() ? 0.0 : rec.epoch_loss.back();
        rows.push_back(row);
    }
    return rows;
}

} // namespace dured
