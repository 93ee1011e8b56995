#include "anomalnet/adam.hpp"

#include <cmath>
#include <string>

namespace anomalnet {

template <typename T>
AdamState<T> adam_init(const std::vector<std::vector<int64_t>>& param_shapes,
                       double lr, double beta1, double beta2, double eps) {
    AdamState<T> state;
    state.lr = lr;
    state.beta1 = beta1;
    state.beta2 = beta2;
    state.eps = eps;
    state.m.reserve(param_shapes.size());
    state.v.reserve(param_shapes.size());
    for (const auto& shape : param_shapes) {
        state.m.emplace_back(shape);
        state.v.emplace_back(shape);
    }
    return state;
}

template <typename T>
void adam_step(const std::vector<Tensor<T>*>& params,
               const std::vector<const Tensor<T>*>& grads, AdamState<T>& state) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw_invalid_argument("adam_step parameter/gradient/state count mismatch");
    for (size_t k = 0; k < params.size(); ++k) {
        if (!params[k]->same_shape(*grads[k]) || !params[k]->same_shape(state.m[k]))
            throw_invalid_argument("adam_step shape mismatch at parameter " + std::to_string(k));
        if (!grads[k]->all_finite())
            throw_numeric("non-finite gradient at parameter " + std::to_string(k));
    }

    state.t += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, (double)state.t);
    const double bc2 = 1.0 - std::pow(state.beta2, (double)state.t);

    for (size_t k = 0; k < params.size(); ++k) {
        T* theta = params[k]->data();
        const T* g = grads[k]->data();
        T* m = state.m[k].data();
        T* v = state.v[k].data();
        const int64_t n = params[k]->numel();
        for (int64_t i = 0; i < n; ++i) {
            const double gi = (double)g[i];
            const double mi = state.beta1 * (double)m[i] + (1.0 - state.beta1) * gi;
            const double vi = state.beta2 * (double)v[i] + (1.0 - state.beta2) * gi * gi;
            m[i] = (T)mi;
            v[i] = (T)vi;
            const double m_hat = mi / bc1;
            const double v_hat = vi / bc2;
            theta[i] = (T)((double)theta[i] - state.lr * m_hat / (std::sqrt(v_hat) + state.eps));
        }
    }
}

template AdamState<float> adam_init<float>(const std::vector<std::vector<int64_t>>&, double,
                                           double, double, double);
template AdamState<double> adam_init<double>(const std::vector<std::vector<int64_t>>&, double,
                                             double, double, double);
template void adam_step<float>(const std::vector<Tensor<float>*>&,
                               const std::vector<const Tensor<float>*>&, AdamState<float>&);
template void adam_step<double>(const std::vector<Tensor<double>*>&,
                                const std::vector<const Tensor<double>*>&, AdamState<double>&);

} // namespace anomalnet
