#pragma once

#include <vector>

#include "anomalnet/tensor.hpp"

namespace anomalnet {

// Learnable weights of one (transposed) convolution layer.
// Convolution stores weights as [out_channels, in_channels, kh, kw];
// transposed convolution stores them as [in_channels, out_channels, kh, kw].
template <typename T>
struct ConvParams {
    Tensor<T> weights;
    Tensor<T> bias; // [out_channels]
};

template <typename T>
struct ConvGrads {
    Tensor<T> input;
    Tensor<T> weights;
    Tensor<T> bias;
};

// Cross-correlation (no kernel flip):
//   out[n,o,y,x] = bias[o] + sum_{c,i,j} input[n,c,y*s-p+i, x*s-p+j] * weights[o,c,i,j]
// with out-of-bounds input reading as zero. Output spatial size uses floor
// division: H_out = (H + 2p - kh)/s + 1.
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const ConvParams<T>& params,
                         int stride, int padding);

// Exact partial derivatives of sum(out * grad_out) w.r.t. input, weights, bias.
template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& input, const ConvParams<T>& params,
                             const Tensor<T>& grad_out, int stride, int padding);

// Non-overlapping 2x2 max pooling. argmax holds, per output element, the flat
// index into the input tensor of the first maximal element in row-major window
// scan order (the tie-break rule).
template <typename T>
struct PoolResult {
    Tensor<T> output;
    std::vector<int64_t> argmax;
};

template <typename T>
PoolResult<T> maxpool2_forward(const Tensor<T>& input);

template <typename T>
Tensor<T> maxpool2_backward(const std::vector<int64_t>& argmax, const Tensor<T>& grad_out,
                            const std::vector<int64_t>& input_shape);

// Scatter-accumulate transposed convolution:
//   out[n,o,y*s+i, x*s+j] += input[n,c,y,x] * weights[c,o,i,j], plus bias[o]
// Output spatial size is (H-1)*s + kh; with k = s = 2 the patches tile exactly
// and the output is 2H x 2W.
template <typename T>
Tensor<T> tconv2d_forward(const Tensor<T>& input, const ConvParams<T>& params, int stride);

template <typename T>
ConvGrads<T> tconv2d_backward(const Tensor<T>& input, const ConvParams<T>& params,
                              const Tensor<T>& grad_out, int stride);

// Elementwise max(x, 0); backward passes gradient where x > 0 (subgradient 0 at 0).
template <typename T>
Tensor<T> relu(const Tensor<T>& input);

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& input, const Tensor<T>& grad_out);

// Numerically stable logistic function; outputs are clamped to the nearest
// representable values strictly inside (0,1). Backward uses the cached forward
// output: grad_in = grad_out * y * (1 - y).
template <typename T>
Tensor<T> sigmoid(const Tensor<T>& input);

template <typename T>
Tensor<T> sigmoid_backward(const Tensor<T>& output, const Tensor<T>& grad_out);

// Mean over all elements of (pred - target)^2, accumulated in double.
template <typename T>
double mse_loss(const Tensor<T>& pred, const Tensor<T>& target);

// gradient w.r.t. pred: 2*(pred - target)/M
template <typename T>
Tensor<T> mse_backward(const Tensor<T>& pred, const Tensor<T>& target);

} // namespace anomalnet
