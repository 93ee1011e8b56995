#include "anomalnet/config_json.hpp"

#include <set>
#include <string>

namespace anomalnet {

using nlohmann::json;

json model_config_to_json(const ModelConfig& c) {
    return json{{"input_size", c.input_size},
                {"encoder_channels", c.encoder_channels},
                {"decoder_channels", c.decoder_channels},
                {"conv_kernel", c.conv_kernel},
                {"conv_padding", c.conv_padding},
                {"pool", c.pool},
                {"tconv_kernel", c.tconv_kernel},
                {"tconv_stride", c.tconv_stride},
                {"seed", c.seed},
                {"lr", c.lr},
                {"beta1", c.beta1},
                {"beta2", c.beta2},
                {"eps", c.eps},
                {"epochs", c.epochs},
                {"batch_size", c.batch_size}};
}

ModelConfig model_config_from_json(const json& j, const ModelConfig& base, bool strict) {
    if (!j.is_object()) throw_config("model config must be a JSON object");
    static const std::set<std::string> known = {
        "input_size", "encoder_channels", "decoder_channels", "conv_kernel", "conv_padding",
        "pool",       "tconv_kernel",     "tconv_stride",     "seed",        "lr",
        "beta1",      "beta2",            "eps",              "epochs",      "batch_size"};
    if (strict) {
        for (const auto& [key, _] : j.items())
            if (!known.count(key)) throw_config("unknown model config key: " + key);
    }
    ModelConfig c = base;
    try {
        if (j.contains("input_size")) c.input_size = j.at("input_size").get<int>();
        if (j.contains("encoder_channels"))
            c.encoder_channels = j.at("encoder_channels").get<std::array<int, 3>>();
        if (j.contains("decoder_channels"))
            c.decoder_channels = j.at("decoder_channels").get<std::array<int, 3>>();
        if (j.contains("conv_kernel")) c.conv_kernel = j.at("conv_kernel").get<int>();
        if (j.contains("conv_padding")) c.conv_padding = j.at("conv_padding").get<int>();
        if (j.contains("pool")) c.pool = j.at("pool").get<int>();
        if (j.contains("tconv_kernel")) c.tconv_kernel = j.at("tconv_kernel").get<int>();
        if (j.contains("tconv_stride")) c.tconv_stride = j.at("tconv_stride").get<int>();
        if (j.contains("seed")) c.seed = j.at("seed").get<uint64_t>();
        if (j.contains("lr")) c.lr = j.at("lr").get<double>();
        if (j.contains("beta1")) c.beta1 = j.at("beta1").get<double>();
        if (j.contains("beta2")) c.beta2 = j.at("beta2").get<double>();
        if (j.contains("eps")) c.eps = j.at("eps").get<double>();
        if (j.contains("epochs")) c.epochs = j.at("epochs").get<int>();
        if (j.contains("batch_size")) c.batch_size = j.at("batch_size").get<int>();
    } catch (const json::exception& e) {
        throw_config(std::string("bad model config value: ") + e.what());
    }
    return c;
}

} // namespace anomalnet
