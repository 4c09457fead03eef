#include "dured/sampling.hpp"
#include "dured/fft.hpp"
#include "dured/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace dured {

void SamplingPDF::validate() const {
    if (mu <= 0.0 || alpha <= 0.0)
        throw std::invalid_argument("SamplingPDF: mu and alpha must be positive");
    if (height <= 0 || width <= 0)
        throw std::invalid_argument("SamplingPDF: grid dimensions must be positive");
    if (!(p_min > 0.0) || p_min > 1.0)
        throw std::invalid_argument("SamplingPDF: p_min must lie in (0, 1]");
}

double pdf_eval(const SamplingPDF& pdf, int r, int c) {
    if (r < 0 || r >= pdf.height || c < 0 || c >= pdf.width)
        throw std::invalid_argument("pdf_eval: location outside grid");
    const double fy = static_cast<double>(r - dc_index(pdf.height)) / pdf.height;
    const double fx = static_cast<double>(c - dc_index(pdf.width)) / pdf.width;
    const double dist = pdf.dim_mode == DimMode::rows_1d
                            ? std::abs(fy)
                            : std::sqrt(fx * fx + fy * fy);
    const double p = std::exp(-std::pow(dist / pdf.mu, pdf.alpha));
    return std::max(p, pdf.p_min);
}

MaskDraw draw_mask(const SamplingPDF& pdf, std::uint64_t seed) {
    pdf.validate();
    const int h = pdf.height, w = pdf.width;
    MaskDraw draw;
    draw.pdf = pdf;
    draw.seed = seed;
    draw.mask.assign(static_cast<std::size_t>(h) * w, 0);
    draw.weights.assign(static_cast<std::size_t>(h) * w, 0.0);

    Rng rng(mix_seed(seed, 0x6d61736bULL));
    const int cy = dc_index(h), cx = dc_index(w);

    if (pdf.dim_mode == DimMode::rows_1d) {
        for (int r = 0; r < h; ++r) {
            const double p = pdf_eval(pdf, r, 0);
            bool take = rng.next_double() < p;
            if (r == cy) take = true;
            if (!take) continue;
            for (int c = 0; c < w; ++c) {
                draw.mask[static_cast<std::size_t>(r) * w + c] = 1;
                draw.weights[static_cast<std::size_t>(r) * w + c] = 1.0 / p;
            }
        }
    } else {
        for (int r = 0; r < h; ++r) {
            for (int c = 0; c < w; ++c) {
                const double p = pdf_eval(pdf, r, c);
                bool take = rng.next_double() < p;
                if (r == cy && c == cx) take = true;
                if (!take) continue;
                draw.mask[static_cast<std::size_t>(r) * w + c] = 1;
                draw.weights[static_cast<std::size_t>(r) * w + c] = 1.0 / p;
            }
        }
    }
    return draw;
}

double acceleration_factor(const MaskDraw& draw) {
    std::size_t sampled = 0;
    for (auto m : draw.mask) sampled += m;
    if (sampled == 0)
        throw std::logic_error("acceleration_factor: empty mask (DC should be forced)");
    return static_cast<double>(draw.mask.size()) / static_cast<double>(sampled);
}

ForwardModel make_forward_model(const MaskDraw& draw) {
    std::vector<double> pass(draw.weights.size(), 0.0);
    for (std::size_t i = 0; i < pass.size(); ++i)
        if (draw.mask[i]) pass[i] = std::sqrt(draw.weights[i]);
    return ForwardModel(draw.height(), draw.width(), draw.mask, std::move(pass),
                        draw.pdf.dim_mode);
}

ComplexImage zero_filled(const ForwardModel& A, const ComplexImage& x_true) {
    return apply_adjoint(A, apply_forward(A, x_true));
}

ComplexImage average_images(const std::vector<ComplexImage>& images) {
    if (images.empty())
        throw std::invalid_argument("average_images: empty list");
    ComplexImage acc = images.front();
    for (std::size_t i = 1; i < images.size(); ++i) {
        require_same_shape(acc, images[i], "average_images");
        acc += images[i];
    }
    acc *= 1.0 / static_cast<double>(images.size());
    return acc;
}

} // namespace dured
