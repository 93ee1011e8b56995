#include "anomalnet/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace anomalnet {

namespace {

void check_rank4(const char* what, const std::vector<int64_t>& shape) {
    if (shape.size() != 4)
        throw_invalid_argument(std::string(what) + " must be a 4-d [N,C,H,W] tensor");
}

// Range of output positions xo for which xi = xo*stride - padding + j stays
// inside [0, limit). Returns {lo, hi} inclusive; empty when lo > hi.
struct TapRange {
    int lo, hi;
};

TapRange tap_range(int out_size, int stride, int padding, int j, int limit) {
    int lo = 0;
    if (padding - j > 0) lo = (padding - j + stride - 1) / stride;
    int num = limit - 1 + padding - j;
    int hi = num < 0 ? -1 : std::min(out_size - 1, num / stride);
    return {lo, hi};
}

} // namespace

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const ConvParams<T>& params,
                         int stride, int padding) {
    check_rank4("conv2d input", input.shape());
    check_rank4("conv2d weights", params.weights.shape());
    if (stride < 1) throw_invalid_argument("conv2d stride must be >= 1");
    if (padding < 0) throw_invalid_argument("conv2d padding must be >= 0");

    const int n_batch = (int)input.dim(0), c_in = (int)input.dim(1);
    const int h = (int)input.dim(2), w = (int)input.dim(3);
    const int c_out = (int)params.weights.dim(0);
    const int kh = (int)params.weights.dim(2), kw = (int)params.weights.dim(3);
    if ((int)params.weights.dim(1) != c_in)
        throw_invalid_argument("conv2d input channel count does not match weights");
    if (params.bias.rank() != 1 || (int)params.bias.dim(0) != c_out)
        throw_invalid_argument("conv2d bias shape does not match output channels");

    const int h_out = (h + 2 * padding - kh) / stride + 1;
    const int w_out = (w + 2 * padding - kw) / stride + 1;
    if (h + 2 * padding < kh || w + 2 * padding < kw || h_out < 1 || w_out < 1)
        throw_invalid_argument("conv2d produces a zero-sized spatial output");

    Tensor<T> out({n_batch, c_out, h_out, w_out});
    const T* in = input.data();
    const T* wt = params.weights.data();
    const T* bs = params.bias.data();
    T* op = out.data();

    for (int n = 0; n < n_batch; ++n) {
        for (int o = 0; o < c_out; ++o) {
            T* out_plane = op + ((int64_t)n * c_out + o) * h_out * w_out;
            std::fill(out_plane, out_plane + (int64_t)h_out * w_out, bs[o]);
            for (int c = 0; c < c_in; ++c) {
                const T* in_plane = in + ((int64_t)n * c_in + c) * h * w;
                const T* wrow = wt + (((int64_t)o * c_in + c) * kh) * kw;
                for (int i = 0; i < kh; ++i) {
                    for (int j = 0; j < kw; ++j) {
                        const T wv = wrow[(int64_t)i * kw + j];
                        const TapRange xr = tap_range(w_out, stride, padding, j, w);
                        if (xr.hi < xr.lo) continue;
                        for (int yo = 0; yo < h_out; ++yo) {
                            const int yi = yo * stride - padding + i;
                            if (yi < 0 || yi >= h) continue;
                            const T* in_row = in_plane + (int64_t)yi * w - padding + j;
                            T* out_row = out_plane + (int64_t)yo * w_out;
                            for (int xo = xr.lo; xo <= xr.hi; ++xo)
                                out_row[xo] += wv * in_row[(int64_t)xo * stride];
                        }
                    }
                }
            }
        }
    }
    return out;
}

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& input, const ConvParams<T>& params,
                             const Tensor<T>& grad_out, int stride, int padding) {
    check_rank4("conv2d input", input.shape());
    check_rank4("conv2d grad_out", grad_out.shape());
    const int n_batch = (int)input.dim(0), c_in = (int)input.dim(1);
    const int h = (int)input.dim(2), w = (int)input.dim(3);
    const int c_out = (int)params.weights.dim(0);
    const int kh = (int)params.weights.dim(2), kw = (int)params.weights.dim(3);
    if ((int)params.weights.dim(1) != c_in)
        throw_invalid_argument("conv2d input channel count does not match weights");

    const int h_out = (h + 2 * padding - kh) / stride + 1;
    const int w_out = (w + 2 * padding - kw) / stride + 1;
    if (grad_out.dim(0) != n_batch || (int)grad_out.dim(1) != c_out ||
        (int)grad_out.dim(2) != h_out || (int)grad_out.dim(3) != w_out)
        throw_invalid_argument("conv2d grad_out shape does not match forward output");

    ConvGrads<T> g{Tensor<T>(input.shape()), Tensor<T>(params.weights.shape()),
                   Tensor<T>(params.bias.shape())};
    const T* in = input.data();
    const T* wt = params.weights.data();
    const T* go = grad_out.data();
    T* gi = g.input.data();
    T* gw = g.weights.data();
    T* gb = g.bias.data();

    for (int n = 0; n < n_batch; ++n) {
        for (int o = 0; o < c_out; ++o) {
            const T* go_plane = go + ((int64_t)n * c_out + o) * h_out * w_out;
            T acc_b = 0;
            for (int64_t k = 0; k < (int64_t)h_out * w_out; ++k) acc_b += go_plane[k];
            gb[o] += acc_b;

            for (int c = 0; c < c_in; ++c) {
                const T* in_plane = in + ((int64_t)n * c_in + c) * h * w;
                T* gi_plane = gi + ((int64_t)n * c_in + c) * h * w;
                for (int i = 0; i < kh; ++i) {
                    for (int j = 0; j < kw; ++j) {
                        const TapRange xr = tap_range(w_out, stride, padding, j, w);
                        if (xr.hi < xr.lo) continue;
                        const int64_t widx = (((int64_t)o * c_in + c) * kh + i) * kw + j;
                        const T wv = wt[widx];
                        T acc_w = 0;
                        for (int yo = 0; yo < h_out; ++yo) {
                            const int yi = yo * stride - padding + i;
                            if (yi < 0 || yi >= h) continue;
                            const T* in_row = in_plane + (int64_t)yi * w - padding + j;
                            T* gi_row = gi_plane + (int64_t)yi * w - padding + j;
                            const T* go_row = go_plane + (int64_t)yo * w_out;
                            for (int xo = xr.lo; xo <= xr.hi; ++xo) {
                                const T gv = go_row[xo];
                                acc_w += gv * in_row[(int64_t)xo * stride];
                                gi_row[(int64_t)xo * stride] += wv * gv;
                            }
                        }
                        gw[widx] += acc_w;
                    }
                }
            }
        }
    }
    return g;
}

template <typename T>
PoolResult<T> maxpool2_forward(const Tensor<T>& input) {
    check_rank4("maxpool input", input.shape());
    const int n_batch = (int)input.dim(0), c_in = (int)input.dim(1);
    const int h = (int)input.dim(2), w = (int)input.dim(3);
    if (h % 2 != 0 || w % 2 != 0)
        throw_invalid_argument("maxpool2 requires even spatial dimensions");

    const int h_out = h / 2, w_out = w / 2;
    PoolResult<T> r{Tensor<T>({n_batch, c_in, h_out, w_out}), {}};
    r.argmax.resize((size_t)r.output.numel());
    const T* in = input.data();
    T* op = r.output.data();
    int64_t* am = r.argmax.data();

    int64_t k = 0;
    for (int n = 0; n < n_batch; ++n) {
        for (int c = 0; c < c_in; ++c) {
            const int64_t plane = ((int64_t)n * c_in + c) * h * w;
            for (int yo = 0; yo < h_out; ++yo) {
                for (int xo = 0; xo < w_out; ++xo, ++k) {
                    const int64_t base = plane + (int64_t)(2 * yo) * w + 2 * xo;
                    // scan window positions in row-major order, keep the first max
                    T best = in[base];
                    int64_t best_idx = base;
                    const int64_t cand[3] = {base + 1, base + w, base + w + 1};
                    for (int64_t idx : cand) {
                        if (in[idx] > best) {
                            best = in[idx];
                            best_idx = idx;
                        }
                    }
                    op[k] = best;
                    am[k] = best_idx;
                }
            }
        }
    }
    return r;
}

template <typename T>
Tensor<T> maxpool2_backward(const std::vector<int64_t>& argmax, const Tensor<T>& grad_out,
                            const std::vector<int64_t>& input_shape) {
    if ((int64_t)argmax.size() != grad_out.numel())
        throw_invalid_argument("maxpool argmax/grad_out size mismatch");
    check_rank4("maxpool input_shape", input_shape);

    Tensor<T> grad_in(input_shape);
    const int64_t limit = grad_in.numel();
    const T* go = grad_out.data();
    T* gi = grad_in.data();
    for (size_t k = 0; k < argmax.size(); ++k) {
        const int64_t idx = argmax[k];
        if (idx < 0 || idx >= limit)
            throw_invalid_argument("maxpool argmax index out of range for input shape");
        gi[idx] += go[k];
    }
    return grad_in;
}

template <typename T>
Tensor<T> tconv2d_forward(const Tensor<T>& input, const ConvParams<T>& params, int stride) {
    check_rank4("tconv2d input", input.shape());
    check_rank4("tconv2d weights", params.weights.shape());
    if (stride < 1) throw_invalid_argument("tconv2d stride must be >= 1");

    const int n_batch = (int)input.dim(0), c_in = (int)input.dim(1);
    const int h = (int)input.dim(2), w = (int)input.dim(3);
    if ((int)params.weights.dim(0) != c_in)
        throw_invalid_argument("tconv2d input channel count does not match weights");
    const int c_out = (int)params.weights.dim(1);
    const int kh = (int)params.weights.dim(2), kw = (int)params.weights.dim(3);
    if (params.bias.rank() != 1 || (int)params.bias.dim(0) != c_out)
        throw_invalid_argument("tconv2d bias shape does not match output channels");

    const int h_out = (h - 1) * stride + kh;
    const int w_out = (w - 1) * stride + kw;
    Tensor<T> out({n_batch, c_out, h_out, w_out});
    const T* in = input.data();
    const T* wt = params.weights.data();
    const T* bs = params.bias.data();
    T* op = out.data();

    for (int n = 0; n < n_batch; ++n) {
        for (int o = 0; o < c_out; ++o) {
            T* out_plane = op + ((int64_t)n * c_out + o) * h_out * w_out;
            std::fill(out_plane, out_plane + (int64_t)h_out * w_out, bs[o]);
        }
        for (int c = 0; c < c_in; ++c) {
            const T* in_plane = in + ((int64_t)n * c_in + c) * h * w;
            for (int o = 0; o < c_out; ++o) {
                T* out_plane = op + ((int64_t)n * c_out + o) * h_out * w_out;
                const T* wrow = wt + (((int64_t)c * c_out + o) * kh) * kw;
                for (int i = 0; i < kh; ++i) {
                    for (int j = 0; j < kw; ++j) {
                        const T wv = wrow[(int64_t)i * kw + j];
                        for (int y = 0; y < h; ++y) {
                            const T* in_row = in_plane + (int64_t)y * w;
                            T* out_row = out_plane + (int64_t)(y * stride + i) * w_out + j;
                            for (int x = 0; x < w; ++x)
                                out_row[(int64_t)x * stride] += wv * in_row[x];
                        }
                    }
                }
            }
        }
    }
    return out;
}

template <typename T>
ConvGrads<T> tconv2d_backward(const Tensor<T>& input, const ConvParams<T>& params,
                              const Tensor<T>& grad_out, int stride) {
    check_rank4("tconv2d input", input.shape());
    check_rank4("tconv2d grad_out", grad_out.shape());
    const int n_batch = (int)input.dim(0), c_in = (int)input.dim(1);
    const int h = (int)input.dim(2), w = (int)input.dim(3);
    if ((int)params.weights.dim(0) != c_in)
        throw_invalid_argument("tconv2d input channel count does not match weights");
    const int c_out = (int)params.weights.dim(1);
    const int kh = (int)params.weights.dim(2), kw = (int)params.weights.dim(3);

    const int h_out = (h - 1) * stride + kh;
    const int w_out = (w - 1) * stride + kw;
    if (grad_out.dim(0) != n_batch || (int)grad_out.dim(1) != c_out ||
        (int)grad_out.dim(2) != h_out || (int)grad_out.dim(3) != w_out)
        throw_invalid_argument("tconv2d grad_out shape does not match forward output");

    ConvGrads<T> g{Tensor<T>(input.shape()), Tensor<T>(params.weights.shape()),
                   Tensor<T>(params.bias.shape())};
    const T* in = input.data();
    const T* wt = params.weights.data();
    const T* go = grad_out.data();
    T* gi = g.input.data();
    T* gw = g.weights.data();
    T* gb = g.bias.data();

    for (int n = 0; n < n_batch; ++n) {
        for (int o = 0; o < c_out; ++o) {
            const T* go_plane = go + ((int64_t)n * c_out + o) * h_out * w_out;
            T acc_b = 0;
            for (int64_t k = 0; k < (int64_t)h_out * w_out; ++k) acc_b += go_plane[k];
            gb[o] += acc_b;
        }
        for (int c = 0; c < c_in; ++c) {
            const T* in_plane = in + ((int64_t)n * c_in + c) * h * w;
            T* gi_plane = gi + ((int64_t)n * c_in + c) * h * w;
            for (int o = 0; o < c_out; ++o) {
                const T* go_plane = go + ((int64_t)n * c_out + o) * h_out * w_out;
                for (int i = 0; i < kh; ++i) {
                    for (int j = 0; j < kw; ++j) {
                        const int64_t widx = (((int64_t)c * c_out + o) * kh + i) * kw + j;
                        const T wv = wt[widx];
                        T acc_w = 0;
                        for (int y = 0; y < h; ++y) {
                            const T* in_row = in_plane + (int64_t)y * w;
                            T* gi_row = gi_plane + (int64_t)y * w;
                            const T* go_row = go_plane + (int64_t)(y * stride + i) * w_out + j;
                            for (int x = 0; x < w; ++x) {
                                const T gv = go_row[(int64_t)x * stride];
                                acc_w += gv * in_row[x];
                                gi_row[x] += wv * gv;
                            }
                        }
                        gw[widx] += acc_w;
                    }
                }
            }
        }
    }
    return g;
}

template <typename T>
Tensor<T> relu(const Tensor<T>& input) {
    Tensor<T> out(input.shape());
    const T* in = input.data();
    T* op = out.data();
    for (int64_t i = 0; i < input.numel(); ++i) op[i] = in[i] > T(0) ? in[i] : T(0);
    return out;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& input, const Tensor<T>& grad_out) {
    if (!input.same_shape(grad_out))
        throw_invalid_argument("relu_backward shape mismatch");
    Tensor<T> out(input.shape());
    const T* in = input.data();
    const T* go = grad_out.data();
    T* op = out.data();
    for (int64_t i = 0; i < input.numel(); ++i) op[i] = in[i] > T(0) ? go[i] : T(0);
    return out;
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& input) {
    Tensor<T> out(input.shape());
    const T* in = input.data();
    T* op = out.data();
    // saturate to the nearest representable values inside the open interval (0,1)
    const T hi = std::nextafter(T(1), T(0));
    const T lo = std::numeric_limits<T>::denorm_min();
    for (int64_t i = 0; i < input.numel(); ++i) {
        const T x = in[i];
        T y;
        if (x >= T(0)) {
            const T e = std::exp(-x);
            y = T(1) / (T(1) + e);
        } else {
            const T e = std::exp(x);
            y = e / (T(1) + e);
        }
        op[i] = std::min(hi, std::max(lo, y));
    }
    return out;
}

template <typename T>
Tensor<T> sigmoid_backward(const Tensor<T>& output, const Tensor<T>& grad_out) {
    if (!output.same_shape(grad_out))
        throw_invalid_argument("sigmoid_backward shape mismatch");
    Tensor<T> out(output.shape());
    const T* y = output.data();
    const T* go = grad_out.data();
    T* op = out.data();
    for (int64_t i = 0; i < output.numel(); ++i) op[i] = go[i] * y[i] * (T(1) - y[i]);
    return out;
}

template <typename T>
double mse_loss(const Tensor<T>& pred, const Tensor<T>& target) {
    if (!pred.same_shape(target))
        throw_invalid_argument("mse_loss shape mismatch");
    const T* p = pred.data();
    const T* t = target.data();
    double acc = 0.0;
    for (int64_t i = 0; i < pred.numel(); ++i) {
        const double d = (double)p[i] - (double)t[i];
        acc += d * d;
    }
    return acc / (double)pred.numel();
}

template <typename T>
Tensor<T> mse_backward(const Tensor<T>& pred, const Tensor<T>& target) {
    if (!pred.same_shape(target))
        throw_invalid_argument("mse_backward shape mismatch");
    Tensor<T> out(pred.shape());
    const T* p = pred.data();
    const T* t = target.data();
    T* op = out.data();
    const T scale = T(2) / T(pred.numel());
    for (int64_t i = 0; i < pred.numel(); ++i) op[i] = scale * (p[i] - t[i]);
    return out;
}

#define ANOMALNET_INSTANTIATE_KERNELS(T)                                                     \
    template Tensor<T> conv2d_forward<T>(const Tensor<T>&, const ConvParams<T>&, int, int); \
    template ConvGrads<T> conv2d_backward<T>(const Tensor<T>&, const ConvParams<T>&,        \
                                             const Tensor<T>&, int, int);                   \
    template PoolResult<T> maxpool2_forward<T>(const Tensor<T>&);                           \
    template Tensor<T> maxpool2_backward<T>(const std::vector<int64_t>&, const Tensor<T>&,  \
                                            const std::vector<int64_t>&);                   \
    template Tensor<T> tconv2d_forward<T>(const Tensor<T>&, const ConvParams<T>&, int);     \
    template ConvGrads<T> tconv2d_backward<T>(const Tensor<T>&, const ConvParams<T>&,       \
                                              const Tensor<T>&, int);                       \
    template Tensor<T> relu<T>(const Tensor<T>&);                                           \
    template Tensor<T> relu_backward<T>(const Tensor<T>&, const Tensor<T>&);                \
    template Tensor<T> sigmoid<T>(const Tensor<T>&);                                        \
    template Tensor<T> sigmoid_backward<T>(const Tensor<T>&, const Tensor<T>&);             \
    template double mse_loss<T>(const Tensor<T>&, const Tensor<T>&);                        \
    template Tensor<T> mse_backward<T>(const Tensor<T>&, const Tensor<T>&);

ANOMALNET_INSTANTIATE_KERNELS(float)
ANOMALNET_INSTANTIATE_KERNELS(double)

#undef ANOMALNET_INSTANTIATE_KERNELS

} // namespace anomalnet
