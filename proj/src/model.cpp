#include "anomalnet/model.hpp"

#include <cmath>
#include <string>

#include "anomalnet/rng.hpp"

namespace anomalnet {

void ModelConfig::validate() const {
    const int pool_factor = pool * pool * pool;
    if (input_size <= 0 || input_size % pool_factor != 0)
        throw_config("input_size must be a positive multiple of " + std::to_string(pool_factor) +
                     " (three pooling stages), got " + std::to_string(input_size));
    if (decoder_channels[2] != 1)
        throw_config("decoder output channel count must be 1 (grayscale target), got " +
                     std::to_string(decoder_channels[2]));
    for (int c : encoder_channels)
        if (c <= 0) throw_config("encoder channel counts must be positive");
    for (int c : decoder_channels)
        if (c <= 0) throw_config("decoder channel counts must be positive");
    if (conv_kernel < 1 || conv_padding < 0)
        throw_config("conv kernel/padding out of range");
    if (conv_kernel != 2 * conv_padding + 1)
        throw_config("conv stages must preserve spatial size: kernel = 2*padding + 1 required");
    if (pool != 2) throw_config("pool must be 2 (2x2 max pooling)");
    if (tconv_kernel != tconv_stride)
        throw_config("tconv kernel must equal stride for exact tiling, got kernel " +
                     std::to_string(tconv_kernel) + " stride " + std::to_string(tconv_stride));
    if (tconv_stride != pool)
        throw_config("tconv stride must match the pooling factor to restore spatial size");
    if (batch_size < 1) throw_config("batch_size must be >= 1");
    if (epochs < 0) throw_config("epochs must be >= 0");
    if (!(lr > 0.0)) throw_config("learning rate must be positive");
}

template <typename T>
std::vector<Tensor<T>*> ParameterSetT<T>::tensor_list() {
    std::vector<Tensor<T>*> out;
    out.reserve(layers.size() * 2);
    for (auto& layer : layers) {
        out.push_back(&layer.weights);
        out.push_back(&layer.bias);
    }
    return out;
}

template <typename T>
std::vector<const Tensor<T>*> ParameterSetT<T>::tensor_list() const {
    std::vector<const Tensor<T>*> out;
    out.reserve(layers.size() * 2);
    for (const auto& layer : layers) {
        out.push_back(&layer.weights);
        out.push_back(&layer.bias);
    }
    return out;
}

template <typename T>
std::vector<std::string> ParameterSetT<T>::tensor_names() const {
    std::vector<std::string> names;
    names.reserve(layers.size() * 2);
    for (size_t i = 0; i < layers.size(); ++i) {
        names.push_back(std::string(layer_names[i]) + ".weight");
        names.push_back(std::string(layer_names[i]) + ".bias");
    }
    return names;
}

namespace {

// Layer shapes in declaration order. Encoder conv weights are
// [out,in,k,k]; decoder tconv weights are [in,out,k,k].
template <typename T>
ParameterSetT<T> make_zero_params(const ModelConfig& cfg) {
    ParameterSetT<T> p;
    p.layers.reserve(6);
    const int64_t ck = cfg.conv_kernel, tk = cfg.tconv_kernel;
    int64_t enc_in = 1;
    for (int s = 0; s < 3; ++s) {
        const int64_t out = cfg.encoder_channels[(size_t)s];
        p.layers.push_back({Tensor<T>({out, enc_in, ck, ck}), Tensor<T>({out})});
        enc_in = out;
    }
    int64_t dec_in = cfg.encoder_channels[2];
    for (int s = 0; s < 3; ++s) {
        const int64_t out = cfg.decoder_channels[(size_t)s];
        p.layers.push_back({Tensor<T>({dec_in, out, tk, tk}), Tensor<T>({out})});
        dec_in = out;
    }
    return p;
}

} // namespace

template <typename T>
ModelT<T>::ModelT(const ModelConfig& config) : config_(config) {
    config_.validate();
    params_ = make_zero_params<T>(config_);
}

template <typename T>
std::vector<std::vector<int64_t>> ModelT<T>::param_shapes() const {
    std::vector<std::vector<int64_t>> shapes;
    for (const Tensor<T>* t : params_.tensor_list()) shapes.push_back(t->shape());
    return shapes;
}

template <typename T>
int ModelT<T>::latent_size() const {
    return config_.input_size / (config_.pool * config_.pool * config_.pool);
}

template <typename T>
ParameterSetT<T> init_parameters(const ModelConfig& config) {
    config.validate();
    ParameterSetT<T> p = make_zero_params<T>(config);
    SplitMix64 gen(config.seed);
    for (size_t s = 0; s < p.layers.size(); ++s) {
        Tensor<T>& w = p.layers[s].weights;
        // fan_in = in_channels * kh * kw; in_channels is dim 1 for encoder
        // convs and dim 0 for decoder tconvs
        const int64_t in_ch = s < 3 ? w.dim(1) : w.dim(0);
        const double bound = 1.0 / std::sqrt((double)(in_ch * w.dim(2) * w.dim(3)));
        for (int64_t i = 0; i < w.numel(); ++i) {
            const double u = gen.next_double();
            w[i] = (T)(-bound + 2.0 * bound * u);
        }
        // biases stay zero
    }
    return p;
}

template <typename T>
void ModelT<T>::init_parameters() {
    params_ = anomalnet::init_parameters<T>(config_);
}

template <typename T>
std::pair<Tensor<T>, ForwardCacheT<T>> ModelT<T>::forward(const Tensor<T>& batch) const {
    if (batch.rank() != 4)
        throw_invalid_argument("model input must be a 4-d [N,1,S,S] tensor");
    if (batch.dim(1) != 1)
        throw_invalid_argument("model input must have 1 channel, got " +
                               std::to_string(batch.dim(1)));
    if (batch.dim(2) != config_.input_size || batch.dim(3) != config_.input_size)
        throw_invalid_argument("model input spatial size must be " +
                               std::to_string(config_.input_size) + "x" +
                               std::to_string(config_.input_size));

    ForwardCacheT<T> cache;
    Tensor<T> x = batch;
    for (int s = 0; s < 3; ++s) {
        cache.conv_in[(size_t)s] = x;
        Tensor<T> pre = conv2d_forward(x, params_.layers[(size_t)s], 1, config_.conv_padding);
        cache.conv_out[(size_t)s] = pre;
        Tensor<T> act = relu(pre);
        cache.pool_in_shape[(size_t)s] = act.shape();
        PoolResult<T> pooled = maxpool2_forward(act);
        cache.pool_argmax[(size_t)s] = std::move(pooled.argmax);
        x = std::move(pooled.output);
    }
    for (int s = 0; s < 3; ++s) {
        cache.tconv_in[(size_t)s] = x;
        Tensor<T> pre = tconv2d_forward(x, params_.layers[(size_t)(3 + s)], config_.tconv_stride);
        cache.tconv_out[(size_t)s] = pre;
        x = s < 2 ? relu(pre) : sigmoid(pre);
    }
    cache.output = x;
    return {std::move(x), std::move(cache)};
}

template <typename T>
ParameterSetT<T> ModelT<T>::backward(const ForwardCacheT<T>& cache,
                                     const Tensor<T>& grad_reconstruction) const {
    if (cache.output.numel() == 0)
        throw_invalid_argument("model backward called with an empty cache");
    if (!grad_reconstruction.same_shape(cache.output))
        throw_invalid_argument("grad_reconstruction shape does not match cached output");
    for (int s = 0; s < 3; ++s) {
        if (cache.conv_in[(size_t)s].rank() != 4 ||
            cache.conv_in[(size_t)s].dim(1) != params_.layers[(size_t)s].weights.dim(1))
            throw_invalid_argument("cache does not match this model's layer stack");
    }

    ParameterSetT<T> grads = make_zero_params<T>(config_);

    Tensor<T> g = sigmoid_backward(cache.output, grad_reconstruction);
    for (int s = 2; s >= 0; --s) {
        if (s < 2) g = relu_backward(cache.tconv_out[(size_t)s], g);
        ConvGrads<T> cg = tconv2d_backward(cache.tconv_in[(size_t)s],
                                           params_.layers[(size_t)(3 + s)], g,
                                           config_.tconv_stride);
        grads.layers[(size_t)(3 + s)].weights = std::move(cg.weights);
        grads.layers[(size_t)(3 + s)].bias = std::move(cg.bias);
        g = std::move(cg.input);
    }
    for (int s = 2; s >= 0; --s) {
        g = maxpool2_backward(cache.pool_argmax[(size_t)s], g, cache.pool_in_shape[(size_t)s]);
        g = relu_backward(cache.conv_out[(size_t)s], g);
        ConvGrads<T> cg = conv2d_backward(cache.conv_in[(size_t)s], params_.layers[(size_t)s], g,
                                          1, config_.conv_padding);
        grads.layers[(size_t)s].weights = std::move(cg.weights);
        grads.layers[(size_t)s].bias = std::move(cg.bias);
        g = std::move(cg.input);
    }
    return grads;
}

template struct ParameterSetT<float>;
template struct ParameterSetT<double>;
template class ModelT<float>;
template class ModelT<double>;
template ParameterSetT<float> init_parameters<float>(const ModelConfig&);
template ParameterSetT<double> init_parameters<double>(const ModelConfig&);

} // namespace anomalnet
