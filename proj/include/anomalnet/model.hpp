#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "anomalnet/kernels.hpp"
#include "anomalnet/tensor.hpp"

namespace anomalnet {

// Declarative description of the encoder-decoder stack. The encoder is three
// [conv k3 p1 -> relu -> maxpool 2x2] stages, the decoder three
// [tconv k2 s2 -> relu] stages with a sigmoid after the last tconv.
struct ModelConfig {
    int input_size = 32; // square, grayscale
    std::array<int, 3> encoder_channels = {4, 16, 32};
    std::array<int, 3> decoder_channels = {16, 4, 1}; // output channels per tconv
    int conv_kernel = 3;
    int conv_padding = 1;
    int pool = 2;
    int tconv_kernel = 2;
    int tconv_stride = 2;
    uint64_t seed = 0;
    double lr = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    int epochs = 200;
    int batch_size = 32;

    // throws Error(config) naming the violated invariant
    void validate() const;
};

// The six layers' weights in fixed order: enc1, enc2, enc3, dec1, dec2, dec3.
template <typename T>
struct ParameterSetT {
    std::vector<ConvParams<T>> layers;

    static constexpr std::array<const char*, 6> layer_names = {"enc1", "enc2", "enc3",
                                                               "dec1", "dec2", "dec3"};

    // Flat tensor order used by the optimizer and the checkpoint payload:
    // enc1.weight, enc1.bias, enc2.weight, ..., dec3.bias.
    std::vector<Tensor<T>*> tensor_list();
    std::vector<const Tensor<T>*> tensor_list() const;
    std::vector<std::string> tensor_names() const;
};

// Activations recorded by the forward pass, one entry per layer, consumed by
// the backward pass.
template <typename T>
struct ForwardCacheT {
    std::array<Tensor<T>, 3> conv_in;   // encoder conv inputs
    std::array<Tensor<T>, 3> conv_out;  // encoder conv outputs (pre-relu)
    std::array<std::vector<int64_t>, 3> pool_argmax;
    std::array<std::vector<int64_t>, 3> pool_in_shape;
    std::array<Tensor<T>, 3> tconv_in;  // decoder tconv inputs
    std::array<Tensor<T>, 3> tconv_out; // decoder tconv outputs (pre-activation)
    Tensor<T> output;                   // sigmoid output
};

template <typename T>
class ModelT {
public:
    // Builds the layer stack with zero-valued parameters.
    explicit ModelT(const ModelConfig& config);

    const ModelConfig& config() const { return config_; }
    ParameterSetT<T>& params() { return params_; }
    const ParameterSetT<T>& params() const { return params_; }

    int64_t epochs_trained() const { return epochs_trained_; }
    void set_epochs_trained(int64_t n) { epochs_trained_ = n; }

    std::vector<std::vector<int64_t>> param_shapes() const;

    // Seeded weight initialization: each weight uniform in [-b, b] with
    // b = 1/sqrt(fan_in), fan_in = in_channels*kh*kw; biases zero. Draws come
    // from a single splitmix64 stream seeded with config.seed, consumed layer
    // by layer (enc1..dec3), weight elements in row-major order.
    void init_parameters();

    // Whole-model forward on a [N,1,S,S] batch; returns the reconstruction and
    // the cache needed for backward.
    std::pair<Tensor<T>, ForwardCacheT<T>> forward(const Tensor<T>& batch) const;

    // Gradients of the scalar loss whose reconstruction-gradient is supplied,
    // for every weight and bias (same structure as the parameter set).
    ParameterSetT<T> backward(const ForwardCacheT<T>& cache,
                              const Tensor<T>& grad_reconstruction) const;

    // Spatial side of the latent feature volume (input_size / 8).
    int latent_size() const;

private:
    ModelConfig config_;
    ParameterSetT<T> params_;
    int64_t epochs_trained_ = 0;
};

using Model = ModelT<float>;

// Free-standing parameter initializer (same draw scheme as init_parameters).
template <typename T>
ParameterSetT<T> init_parameters(const ModelConfig& config);

// Checkpoint container, bit-exact:
//   bytes 0..9   ASCII magic "ANOMALNET\0"
//   byte  10     format version 0x01
//   bytes 11..14 little-endian uint32 header length
//   header       UTF-8 JSON {config, ordered tensor names and shapes,
//                rng seed, epochs trained}
//   payload      each tensor as little-endian IEEE-754 binary32, row-major,
//                in declared order, no padding
void save_checkpoint(const Model& model, const std::string& path);
Model load_checkpoint(const std::string& path);

} // namespace anomalnet
