#pragma once

#include <cstdint>
#include <vector>

#include "anomalnet/tensor.hpp"

namespace anomalnet {

// Adam optimizer state: one first/second moment tensor per parameter tensor,
// shapes mirroring the parameters, plus the shared step counter.
// A state instance must not be stepped concurrently.
template <typename T>
struct AdamState {
    std::vector<Tensor<T>> m;
    std::vector<Tensor<T>> v;
    int64_t t = 0;
    double lr = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

template <typename T>
AdamState<T> adam_init(const std::vector<std::vector<int64_t>>& param_shapes,
                       double lr = 0.01, double beta1 = 0.9, double beta2 = 0.999,
                       double eps = 1e-8);

// One Adam update, applied in place over every parameter tensor:
//   t <- t+1;  m <- b1*m + (1-b1)*g;  v <- b2*v + (1-b2)*g^2
//   theta <- theta - lr * (m/(1-b1^t)) / (sqrt(v/(1-b2^t)) + eps)
// Per-element arithmetic is carried out in double and stored back as T.
// All gradients are validated finite before any state is touched.
template <typename T>
void adam_step(const std::vector<Tensor<T>*>& params,
               const std::vector<const Tensor<T>*>& grads, AdamState<T>& state);

} // namespace anomalnet
