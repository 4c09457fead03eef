#include "dured/conv_net.hpp"
#include "dured/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dured {

std::vector<std::pair<int, int>> ConvNetConfig::layer_channels() const {
    std::vector<std::pair<int, int>> ch;
    ch.reserve(layers);
    for (int l = 0; l < layers; ++l) {
        const int in = (l == 0) ? 2 : hidden_channels;
        const int out = (l == layers - 1) ? 2 : hidden_channels;
        ch.emplace_back(in, out);
    }
    return ch;
}

void ConvNetConfig::validate() const {
    if (layers < 1) throw std::invalid_argument("ConvNetConfig: layers must be >= 1");
    if (hidden_channels < 1) throw std::invalid_argument("ConvNetConfig: hidden_channels must be >= 1");
    if (kernel_size < 1 || kernel_size % 2 == 0)
        throw std::invalid_argument("ConvNetConfig: kernel_size must be odd and positive");
}

ResidualConvNet ResidualConvNet::zeros(const ConvNetConfig& cfg) {
    cfg.validate();
    ResidualConvNet net;
    net.cfg = cfg;
    for (auto [in, out] : cfg.layer_channels()) {
        net.weights.emplace_back(std::vector<int>{out, in, cfg.kernel_size, cfg.kernel_size});
        net.biases.emplace_back(std::vector<int>{out});
    }
    return net;
}

ResidualConvNet ResidualConvNet::init(const ConvNetConfig& cfg, std::uint64_t seed) {
    ResidualConvNet net = zeros(cfg);
    Rng rng(mix_seed(seed, 0x6e6574ULL));
    const int last = cfg.layers - 1;
    for (int l = 0; l < cfg.layers; ++l) {
        auto& w = net.weights[l];
        const int fan_in = w.shape[1] * w.shape[2] * w.shape[3];
        double std_dev = std::sqrt(2.0 / fan_in);
        if (l == last) std_dev *= 0.1;
        for (auto& v : w.data) v = std_dev * rng.next_normal();
        // biases start at zero
    }
    return net;
}

std::size_t ResidualConvNet::param_count() const {
    std::size_t n = 0;
    for (const auto& w : weights) n += w.numel();
    for (const auto& b : biases) n += b.numel();
    return n;
}

namespace detail {

void conv2d_forward(const double* x, int cin, int h, int w,
                    const double* wt, int cout, int k,
                    const double* bias, double* y) {
    const int pad = k / 2;
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    for (int co = 0; co < cout; ++co) {
        double* yp = y + co * plane;
        const double b = bias ? bias[co] : 0.0;
        for (std::size_t i = 0; i < plane; ++i) yp[i] = b;
        for (int ci = 0; ci < cin; ++ci) {
            const double* xp = x + ci * plane;
            const double* wp = wt + (static_cast<std::size_t>(co) * cin + ci) * k * k;
            for (int kr = 0; kr < k; ++kr) {
                for (int kc = 0; kc < k; ++kc) {
                    const double wv = wp[kr * k + kc];
                    if (wv == 0.0) continue;
                    const int dr = kr - pad, dc = kc - pad;
                    const int r0 = std::max(0, -dr), r1 = std::min(h, h - dr);
                    const int c0 = std::max(0, -dc), c1 = std::min(w, w - dc);
                    for (int r = r0; r < r1; ++r) {
                        double* yrow = yp + static_cast<std::size_t>(r) * w;
                        const double* xrow = xp + static_cast<std::size_t>(r + dr) * w + dc;
                        for (int c = c0; c < c1; ++c) yrow[c] += wv * xrow[c];
                    }
                }
            }
        }
    }
}

void conv2d_backward_input(const double* gy, int cout, int h, int w,
                           const double* wt, int cin, int k, double* gx) {
    const int pad = k / 2;
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    for (std::size_t i = 0; i < plane * cin; ++i) gx[i] = 0.0;
    for (int co = 0; co < cout; ++co) {
        const double* gp = gy + co * plane;
        for (int ci = 0; ci < cin; ++ci) {
            double* gxp = gx + ci * plane;
            const double* wp = wt + (static_cast<std::size_t>(co) * cin + ci) * k * k;
            for (int kr = 0; kr < k; ++kr) {
                for (int kc = 0; kc < k; ++kc) {
                    const double wv = wp[kr * k + kc];
                    if (wv == 0.0) continue;
                    // gx[r+dr, c+dc] += wv * gy[r, c]
                    const int dr = kr - pad, dc = kc - pad;
                    const int r0 = std::max(0, -dr), r1 = std::min(h, h - dr);
                    const int c0 = std::max(0, -dc), c1 = std::min(w, w - dc);
                    for (int r = r0; r < r1; ++r) {
                        const double* grow = gp + static_cast<std::size_t>(r) * w;
                        double* gxrow = gxp + static_cast<std::size_t>(r + dr) * w + dc;
                        for (int c = c0; c < c1; ++c) gxrow[c] += wv * grow[c];
                    }
                }
            }
        }
    }
}

void conv2d_backward_weights(const double* x, int cin, int h, int w,
                             const double* gy, int cout, int k,
                             double* gw, double* gb) {
    const int pad = k / 2;
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    for (int co = 0; co < cout; ++co) {
        const double* gp = gy + co * plane;
        if (gb) {
            double acc = 0.0;
            for (std::size_t i = 0; i < plane; ++i) acc += gp[i];
            gb[co] += acc;
        }
        for (int ci = 0; ci < cin; ++ci) {
            const double* xp = x + ci * plane;
            double* gwp = gw + (static_cast<std::size_t>(co) * cin + ci) * k * k;
            for (int kr = 0; kr < k; ++kr) {
                for (int kc = 0; kc < k; ++kc) {
                    const int dr = kr - pad, dc = kc - pad;
                    const int r0 = std::max(0, -dr), r1 = std::min(h, h - dr);
                    const int c0 = std::max(0, -dc), c1 = std::min(w, w - dc);
                    double acc = 0.0;
                    for (int r = r0; r < r1; ++r) {
                        const double* grow = gp + static_cast<std::size_t>(r) * w;
                        const double* xrow = xp + static_cast<std::size_t>(r + dr) * w + dc;
                        for (int c = c0; c < c1; ++c) acc += grow[c] * xrow[c];
                    }
                    gwp[kr * k + kc] += acc;
                }
            }
        }
    }
}

void apply_nonlin(Nonlinearity nl, double leak, const double* x, double* y, std::size_t n) {
    if (nl == Nonlinearity::identity) {
        for (std::size_t i = 0; i < n; ++i) y[i] = x[i];
        return;
    }
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : leak * x[i];
}

void apply_nonlin_grad(Nonlinearity nl, double leak, const double* x, const double* gy,
                       double* gx, std::size_t n) {
    if (nl == Nonlinearity::identity) {
        for (std::size_t i = 0; i < n; ++i) gx[i] += gy[i];
        return;
    }
    for (std::size_t i = 0; i < n; ++i) gx[i] += x[i] > 0.0 ? gy[i] : leak * gy[i];
}

} // namespace detail

ComplexImage zw_forward(const ResidualConvNet& net, const ComplexImage& v) {
    validate_finite(v, "zw_forward");
    for (const auto& w : net.weights)
        if (!all_finite(w)) throw std::invalid_argument("zw_forward: non-finite weights");
    for (const auto& b : net.biases)
        if (!all_finite(b)) throw std::invalid_argument("zw_forward: non-finite bias");

    const int h = v.height(), w = v.width();
    Tensor cur = image_to_tensor(v);
    const int layers = net.cfg.layers;
    for (int l = 0; l < layers; ++l) {
        const int cin = net.weights[l].shape[1];
        const int cout = net.weights[l].shape[0];
        Tensor next({cout, h, w});
        detail::conv2d_forward(cur.data.data(), cin, h, w,
                               net.weights[l].data.data(), cout, net.cfg.kernel_size,
                               net.biases[l].data.data(), next.data.data());
        if (l < layers - 1) {
            detail::apply_nonlin(net.cfg.nonlin, net.cfg.leak,
                                 next.data.data(), next.data.data(), next.numel());
        }
        cur = std::move(next);
    }
    return tensor_to_image(cur);
}

} // namespace dured
