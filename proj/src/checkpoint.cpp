#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "anomalnet/config_json.hpp"
#include "anomalnet/model.hpp"

namespace anomalnet {

namespace {

constexpr char kMagic[10] = {'A', 'N', 'O', 'M', 'A', 'L', 'N', 'E', 'T', '\0'};
constexpr uint8_t kVersion = 0x01;

void append_u32le(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back((uint8_t)(v & 0xff));
    out.push_back((uint8_t)((v >> 8) & 0xff));
    out.push_back((uint8_t)((v >> 16) & 0xff));
    out.push_back((uint8_t)((v >> 24) & 0xff));
}

void append_f32le(std::vector<uint8_t>& out, float f) {
    uint32_t bits;
    std::memcpy(&bits, &f, sizeof(bits));
    append_u32le(out, bits);
}

uint32_t read_u32le(const uint8_t* p) {
    return (uint32_t)p[0] | ((uint32_t)p[1] << 8) | ((uint32_t)p[2] << 16) |
           ((uint32_t)p[3] << 24);
}

float read_f32le(const uint8_t* p) {
    const uint32_t bits = read_u32le(p);
    float f;
    std::memcpy(&f, &bits, sizeof(f));
    return f;
}

} // namespace

void save_checkpoint(const Model& model, const std::string& path) {
    nlohmann::json header;
    header["config"] = model_config_to_json(model.config());
    header["seed"] = model.config().seed;
    header["epochs_trained"] = model.epochs_trained();
    nlohmann::json tensors = nlohmann::json::array();
    const auto names = model.params().tensor_names();
    const auto list = model.params().tensor_list();
    for (size_t i = 0; i < list.size(); ++i)
        tensors.push_back({{"name", names[i]}, {"shape", list[i]->shape()}});
    header["tensors"] = tensors;

    const std::string header_str = header.dump();

    std::vector<uint8_t> bytes;
    bytes.insert(bytes.end(), kMagic, kMagic + sizeof(kMagic));
    bytes.push_back(kVersion);
    append_u32le(bytes, (uint32_t)header_str.size());
    bytes.insert(bytes.end(), header_str.begin(), header_str.end());
    for (const Tensor<float>* t : list)
        for (int64_t i = 0; i < t->numel(); ++i) append_f32le(bytes, (*t)[i]);

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw_io("cannot open checkpoint for writing: " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()), (std::streamsize)bytes.size());
    if (!f) throw_io("checkpoint write failed: " + path);
}

Model load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw_io("cannot open checkpoint: " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                               std::istreambuf_iterator<char>());

    const size_t fixed = sizeof(kMagic) + 1 + 4;
    if (bytes.size() < sizeof(kMagic) ||
        std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
        throw_data("checkpoint has bad magic: " + path);
    if (bytes.size() < fixed) throw_data("checkpoint header is truncated: " + path);
    if (bytes[sizeof(kMagic)] != kVersion)
        throw_data("checkpoint has unsupported format version " +
                   std::to_string((int)bytes[sizeof(kMagic)]) + ": " + path);

    const uint32_t header_len = read_u32le(bytes.data() + sizeof(kMagic) + 1);
    if (bytes.size() < fixed + header_len)
        throw_data("checkpoint header is truncated: " + path);

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(bytes.begin() + (std::ptrdiff_t)fixed,
                                       bytes.begin() + (std::ptrdiff_t)(fixed + header_len));
    } catch (const nlohmann::json::exception&) {
        throw_data("checkpoint header is not valid JSON: " + path);
    }

    ModelConfig config;
    int64_t epochs_trained = 0;
    try {
        config = model_config_from_json(header.at("config"));
        if (header.contains("seed")) config.seed = header.at("seed").get<uint64_t>();
        epochs_trained = header.at("epochs_trained").get<int64_t>();
    } catch (const nlohmann::json::exception&) {
        throw_data("checkpoint header is malformed: " + path);
    }

    Model model(config);
    model.set_epochs_trained(epochs_trained);

    // header tensor metadata must agree with the shapes the config implies
    const auto names = model.params().tensor_names();
    const auto list = model.params().tensor_list();
    if (!header.contains("tensors") || !header["tensors"].is_array() ||
        header["tensors"].size() != list.size())
        throw_data("checkpoint tensor metadata does not match its config: " + path);
    int64_t total = 0;
    for (size_t i = 0; i < list.size(); ++i) {
        const auto& entry = header["tensors"][i];
        std::string name;
        std::vector<int64_t> shape;
        try {
            name = entry.at("name").get<std::string>();
            shape = entry.at("shape").get<std::vector<int64_t>>();
        } catch (const nlohmann::json::exception&) {
            throw_data("checkpoint header is malformed: " + path);
        }
        if (name != names[i] || shape != list[i]->shape())
            throw_data("checkpoint tensor metadata does not match its config: " + path);
        total += list[i]->numel();
    }

    const size_t payload_off = fixed + header_len;
    const size_t expected = payload_off + (size_t)total * 4;
    if (bytes.size() < expected) throw_data("checkpoint payload is truncated: " + path);
    if (bytes.size() > expected) throw_data("checkpoint payload has trailing bytes: " + path);

    size_t off = payload_off;
    for (Tensor<float>* t : list)
        for (int64_t i = 0; i < t->numel(); ++i, off += 4)
            (*t)[i] = read_f32le(bytes.data() + off);
    return model;
}

} // namespace anomalnet
