#include "dured/autodiff.hpp"
#include "dured/fft.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

namespace dured {
namespace {

void require_same(const Tensor& a, const Tensor& b, const char* what) {
    if (!a.same_shape(b)) throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

void require_scalar(const Tensor& t, const char* what) {
    if (t.numel() != 1) throw std::invalid_argument(std::string(what) + ": operand must be scalar");
}

void require_image(const Tensor& t, const char* what) {
    if (t.shape.size() != 3 || t.shape[0] != 2)
        throw std::invalid_argument(std::string(what) + ": expected a (2, H, W) tensor");
}

// Channels-as-complex centered transform, unitary scale; sign -1 forward.
Tensor tensor_fft(const Tensor& t, int sign) {
    const int h = t.shape[1], w = t.shape[2];
    const std::size_t n = static_cast<std::size_t>(h) * w;
    std::vector<cplx> in(n), out(n);
    for (std::size_t i = 0; i < n; ++i) in[i] = cplx(t.data[i], t.data[n + i]);
    detail::fft2_centered_raw(in.data(), out.data(), h, w, sign);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    Tensor res({2, h, w});
    for (std::size_t i = 0; i < n; ++i) {
        res.data[i] = out[i].real() * scale;
        res.data[n + i] = out[i].imag() * scale;
    }
    return res;
}

} // namespace

Tape::Id Tape::push(Tensor value, std::function<void(Tape&)> back) {
    nodes_.push_back(Node{std::move(value), Tensor{}, std::move(back)});
    return static_cast<Id>(nodes_.size() - 1);
}

Tape::Id Tape::leaf(Tensor value) { return push(std::move(value), nullptr); }

Tape::Id Tape::add(Id a, Id b) {
    require_same(value(a), value(b), "add");
    Tensor out = value(a);
    const Tensor& vb = value(b);
    for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] += vb.data[i];
    Id self = push(std::move(out), nullptr);
    nodes_[self].back = [self, a, b](Tape& t) {
        const Tensor& g = t.grad_ref(self);
        Tensor& ga = t.grad_ref(a);
        Tensor& gb = t.grad_ref(b);
        for (std::size_t i = 0; i < g.numel(); ++i) {
            ga.data[i] += g.data[i];
            gb.data[i] += g.data[i];
        }
    };
    return self;
}

Tape::Id Tape::sub(Id a, Id b) {
    require_same(value(a), value(b), "sub");
    Tensor out = value(a);
    const Tensor& vb = value(b);
    for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] -= vb.data[i];
    Id self = push(std::move(out), nullptr);
    nodes_[self].back = [self, a, b](Tape& t) {
        const Tensor& g = t.grad_ref(self);
        Tensor& ga = t.grad_ref(a);
        Tensor& gb = t.grad_ref(b);
        for (std::size_t i = 0; i < g.numel(); ++i) {
            ga.data[i] += g.data[i];
            gb.data[i] -= g.data[i];
        }
    };
    return self;
}

Tape::Id Tape::neg(Id a) {
    Tensor out = value(a);
    for (auto& v : out.data) v = -v;
    Id self = push(std::move(out), nullptr);
    nodes_[self].back = [self, a](Tape& t) {
        const Tensor& g = t.grad_ref(self);
        Tensor& ga = t.grad_ref(a);
        for (std::size_t i = 0; i < g.numel(); ++i) ga.data[i] -= g.data[i];
    };
    return self;
}

Tape::Id Tape::scale(Id tid, Id s) {
    require_scalar(value(s), "scale");
    const double sv = value(s).data[0];
    Tensor out = value(tid);
    for (auto& v : out.data) v *= sv;
    Id self = push(std::move(out), nullptr);
    nodes_[self].back = [self, tid, s, sv](Tape& t) {
        const Tensor& g = t.grad_ref(self);
        const Tensor& vt = t.value(tid);
        Tensor& gt = t.grad_ref(tid);
        Tensor& gs = t.grad_ref(s);
        double acc = 0.0;
        for (std::size_t i = 0; i < g.numel(); ++i) {
            gt.data[i] += sv * g.data[i];
            acc += vt.data[i] * g.data[i];
        }
        gs.data[0] += acc;
    };
    return self;
}

Tape::Id Tape::scale_const(Id tid, double c) {
    Tensor out = value(tid);
    for (auto& v : out.data) v *= c;
    Id self = push(std::move(out), nullptr);
    nodes_[self].back = [self, tid, c](Tape& t) {
        const Tensor& g = t.grad_ref(self);
        Tensor& gt = t.grad_ref(tid);
        for (std::size_t i = 0; i < g.numel(); ++i) gt.data[i] += c * g.data[i];
    };
    return self;
}

Tape::Id Tape::masked_multiply(Id tid, std::vector<double> grid) {
    const Tensor& vt = value(tid);
    if (vt.shape.size() != 3)
        throw std::invalid_argument("masked_multiply: expected a (C, H, W) tensor");
    const std::size_t plane = static_cast<std::size_t>(vt.shape[1]) * vt.shape[2];
    if (grid.size() != plane)
        throw std::invalid_argument("masked_multiply: grid size must match a channel plane");
    const int ch = vt.shape[0];
    Tensor out = vt;
    for (int c = 0; c < ch; ++c)
        for (std::size_t i = 0; i < plane; ++i) out.data[c * plane + i] *= grid[i];
    auto shared = std::make_shared<std::vector<double>>(std::move(grid));
    Id self = push(std::move(out), nullptr);
    nodes_[self].back = [self, tid, shared, ch, plane](Tape& t) {
        const Tensor& g = t.grad_ref(self);
        Tensor& gt = t.grad_ref(tid);
        for (int c = 0; c < ch; ++c)
            for (std::size_t i = 0; i < plane; ++i)
                gt.data[c * plane + i] += (*shared)[i] * g.data[c * plane + i];
    };
    return self;
}

Tape::Id Tape::fft2(Id tid) {
    require_image(value(tid), "fft2");
    Id self = push(tensor_fft(value(tid), -1), nullptr);
    nodes_[self].back = [self, tid](Tape& t) {
        Tensor back = tensor_fft(t.grad_ref(self), +1); // adjoint of unitary FFT
        Tensor& gt = t.grad_ref(tid);
        for (std::size_t i = 0; i < back.numel(); ++i) gt.data[i] += back.data[i];
    };
    return self;
}

Tape::Id Tape::ifft2(Id tid) {
    require_image(value(tid), "ifft2");
    Id self = push(tensor_fft(value(tid), +1), nullptr);
    nodes_[self].back = [self, tid](Tape& t) {
        Tensor back = tensor_fft(t.grad_ref(self), -1);
        Tensor& gt = t.grad_ref(tid);
        for (std::size_t i = 0; i < back.numel(); ++i) gt.data[i] += back.data[i];
    };
    return self;
}

Tape::Id Tape::conv2d(Id x, Id w, Id b) {
    const Tensor& vx = value(x);
    const Tensor& vw = value(w);
    const Tensor& vb = value(b);
    if (vx.shape.size() != 3 || vw.shape.size() != 4 || vb.shape.size() != 1)
        throw std::invalid_argument("conv2d: expected x(C,H,W), w(Co,Ci,k,k), b(Co)");
    if (vw.shape[1] != vx.shape[0] || vw.shape[2] != vw.shape[3] || vb.shape[0] != vw.shape[0])
        throw std::invalid_argument("conv2d: incompatible shapes");
    const int cin = vx.shape[0], h = vx.shape[1], wd = vx.shape[2];
    const int cout = vw.shape[0], k = vw.shape[2];
    Tensor out({cout, h, wd});
    detail::conv2d_forward(vx.data.data(), cin, h, wd, vw.data.data(), cout, k,
                           vb.data.data(), out.data.data());
    Id self = push(std::move(out), nullptr);
    nodes_[self].back = [self, x, w, b, cin, h, wd, cout, k](Tape& t) {
        const Tensor& g = t.grad_ref(self);
        Tensor gx = Tensor::zeros_like(t.value(x));
        detail::conv2d_backward_input(g.data.data(), cout, h, wd,
                                      t.value(w).data.data(), cin, k, gx.data.data());
        Tensor& gxr = t.grad_ref(x);
        for (std::size_t i = 0; i < gx.numel(); ++i) gxr.data[i] += gx.data[i];
        detail::conv2d_backward_weights(t.value(x).data.data(), cin, h, wd,
                                        g.data.data(), cout, k,
                                        t.grad_ref(w).data.data(),
                                        t.grad_ref(b).data.data());
    };
    return self;
}

Tape::Id Tape::nonlin(Id x, Nonlinearity nl, double leak) {
    const Tensor& vx = value(x);
    Tensor out = Tensor::zeros_like(vx);
    detail::apply_nonlin(nl, leak, vx.data.data(), out.data.data(), vx.numel());
    Id self = push(std::move(out), nullptr);
    nodes_[self].back = [self, x, nl, leak](Tape& t) {
        const Tensor& g = t.grad_ref(self);
        detail::apply_nonlin_grad(nl, leak, t.value(x).data.data(), g.data.data(),
                                  t.grad_ref(x).data.data(), g.numel());
    };
    return self;
}

Tape::Id Tape::split_channel(Id x, int channel) {
    const Tensor& vx = value(x);
    if (vx.shape.size() != 3 || channel < 0 || channel >= vx.shape[0])
        throw std::invalid_argument("split_channel: channel out of range");
    const std::size_t plane = static_cast<std::size_t>(vx.shape[1]) * vx.shape[2];
    Tensor out({1, vx.shape[1], vx.shape[2]});
    for (std::size_t i = 0; i < plane; ++i) out.data[i] = vx.data[channel * plane + i];
    Id self = push(std::move(out), nullptr);
    nodes_[self].back = [self, x, channel, plane](Tape& t) {
        const Tensor& g = t.grad_ref(self);
        Tensor& gx = t.grad_ref(x);
        for (std::size_t i = 0; i < plane; ++i) gx.data[channel * plane + i] += g.data[i];
    };
    return self;
}

Tape::Id Tape::merge_channels(Id a, Id b) {
    const Tensor& va = value(a);
    const Tensor& vb = value(b);
    if (va.shape.size() != 3 || vb.shape.size() != 3 || va.shape[0] != 1 || vb.shape[0] != 1 ||
        va.shape[1] != vb.shape[1] || va.shape[2] != vb.shape[2])
        throw std::invalid_argument("merge_channels: expected matching (1, H, W) tensors");
    const std::size_t plane = va.numel();
    Tensor out({2, va.shape[1], va.shape[2]});
    for (std::size_t i = 0; i < plane; ++i) {
        out.data[i] = va.data[i];
        out.data[plane + i] = vb.data[i];
    }
    Id self = push(std::move(out), nullptr);
    nodes_[self].back = [self, a, b, plane](Tape& t) {
        const Tensor& g = t.grad_ref(self);
        Tensor& ga = t.grad_ref(a);
        Tensor& gb = t.grad_ref(b);
        for (std::size_t i = 0; i < plane; ++i) {
            ga.data[i] += g.data[i];
            gb.data[i] += g.data[plane + i];
        }
    };
    return self;
}

Tape::Id Tape::s_add(Id a, Id b) {
    require_scalar(value(a), "s_add");
    require_scalar(value(b), "s_add");
    Id self = push(Tensor::scalar(value(a).data[0] + value(b).data[0]), nullptr);
    nodes_[self].back = [self, a, b](Tape& t) {
        const double g = t.grad_ref(self).data[0];
        t.grad_ref(a).data[0] += g;
        t.grad_ref(b).data[0] += g;
    };
    return self;
}

Tape::Id Tape::s_sub(Id a, Id b) {
    require_scalar(value(a), "s_sub");
    require_scalar(value(b), "s_sub");
    Id self = push(Tensor::scalar(value(a).data[0] - value(b).data[0]), nullptr);
    nodes_[self].back = [self, a, b](Tape& t) {
        const double g = t.grad_ref(self).data[0];
        t.grad_ref(a).data[0] += g;
        t.grad_ref(b).data[0] -= g;
    };
    return self;
}

Tape::Id Tape::s_mul(Id a, Id b) {
    require_scalar(value(a), "s_mul");
    require_scalar(value(b), "s_mul");
    const double va = value(a).data[0], vb = value(b).data[0];
    Id self = push(Tensor::scalar(va * vb), nullptr);
    nodes_[self].back = [self, a, b, va, vb](Tape& t) {
        const double g = t.grad_ref(self).data[0];
        t.grad_ref(a).data[0] += g * vb;
        t.grad_ref(b).data[0] += g * va;
    };
    return self;
}

Tape::Id Tape::s_div(Id a, Id b, double eps) {
    require_scalar(value(a), "s_div");
    require_scalar(value(b), "s_div");
    const double va = value(a).data[0];
    const double denom = value(b).data[0] + eps;
    Id self = push(Tensor::scalar(va / denom), nullptr);
    nodes_[self].back = [self, a, b, va, denom](Tape& t) {
        const double g = t.grad_ref(self).data[0];
        t.grad_ref(a).data[0] += g / denom;
        t.grad_ref(b).data[0] -= g * va / (denom * denom);
    };
    return self;
}

Tape::Id Tape::s_neg(Id a) {
    require_scalar(value(a), "s_neg");
    Id self = push(Tensor::scalar(-value(a).data[0]), nullptr);
    nodes_[self].back = [self, a](Tape& t) {
        t.grad_ref(a).data[0] -= t.grad_ref(self).data[0];
    };
    return self;
}

Tape::Id Tape::inner(Id a, Id b) {
    require_same(value(a), value(b), "inner");
    const Tensor& va = value(a);
    const Tensor& vb = value(b);
    double acc = 0.0;
    for (std::size_t i = 0; i < va.numel(); ++i) acc += va.data[i] * vb.data[i];
    Id self = push(Tensor::scalar(acc), nullptr);
    nodes_[self].back = [self, a, b](Tape& t) {
        const double g = t.grad_ref(self).data[0];
        const Tensor& va2 = t.value(a);
        const Tensor& vb2 = t.value(b);
        Tensor& ga = t.grad_ref(a);
        Tensor& gb = t.grad_ref(b);
        for (std::size_t i = 0; i < va2.numel(); ++i) {
            ga.data[i] += g * vb2.data[i];
            gb.data[i] += g * va2.data[i];
        }
    };
    return self;
}

Tape::Id Tape::squared_l2(Id a) {
    const Tensor& va = value(a);
    double acc = 0.0;
    for (double v : va.data) acc += v * v;
    Id self = push(Tensor::scalar(acc), nullptr);
    nodes_[self].back = [self, a](Tape& t) {
        const double g = t.grad_ref(self).data[0];
        const Tensor& va2 = t.value(a);
        Tensor& ga = t.grad_ref(a);
        for (std::size_t i = 0; i < va2.numel(); ++i) ga.data[i] += 2.0 * g * va2.data[i];
    };
    return self;
}

Tape::Id Tape::mse(Id a, Id b, double denom) {
    require_same(value(a), value(b), "mse");
    if (!(denom > 0.0)) throw std::invalid_argument("mse: denom must be positive");
    const Tensor& va = value(a);
    const Tensor& vb = value(b);
    double acc = 0.0;
    for (std::size_t i = 0; i < va.numel(); ++i) {
        const double d = va.data[i] - vb.data[i];
        acc += d * d;
    }
    Id self = push(Tensor::scalar(acc / denom), nullptr);
    nodes_[self].back = [self, a, b, denom](Tape& t) {
        const double g = t.grad_ref(self).data[0] * 2.0 / denom;
        const Tensor& va2 = t.value(a);
        const Tensor& vb2 = t.value(b);
        Tensor& ga = t.grad_ref(a);
        Tensor& gb = t.grad_ref(b);
        for (std::size_t i = 0; i < va2.numel(); ++i) {
            const double d = g * (va2.data[i] - vb2.data[i]);
            ga.data[i] += d;
            gb.data[i] -= d;
        }
    };
    return self;
}

void Tape::backward(Id loss) {
    if (loss < 0 || loss >= static_cast<Id>(nodes_.size()))
        throw std::invalid_argument("backward: invalid loss node");
    if (nodes_[loss].value.numel() != 1)
        throw std::invalid_argument("backward: loss must be scalar");
    for (Id i = 0; i <= loss; ++i) nodes_[i].grad = Tensor::zeros_like(nodes_[i].value);
    nodes_[loss].grad.data[0] = 1.0;
    for (Id i = loss; i >= 0; --i)
        if (nodes_[i].back) nodes_[i].back(*this);
}

} // namespace dured
