#include <doctest.h>

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <unistd.h>
#include <vector>

#include "anomalnet/model.hpp"
#include "gradcheck.hpp"

using namespace anomalnet;
namespace fs = std::filesystem;

namespace {

std::vector<uint8_t> slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    REQUIRE(f);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void spit(const std::string& path, const std::vector<uint8_t>& bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    REQUIRE(f);
    f.write(reinterpret_cast<const char*>(bytes.data()), (std::streamsize)bytes.size());
}

struct TempDir {
    fs::path dir;
    TempDir() {
        dir = fs::temp_directory_path() /
              ("anomalnet_ckpt_" + std::to_string(::getpid()) + "_" +
               std::to_string(counter()++));
        fs::create_directories(dir);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(dir, ec);
    }
    static int& counter() {
        static int c = 0;
        return c;
    }
    std::string file(const std::string& name) const { return (dir / name).string(); }
};

std::string error_message(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST_CASE("checkpoint: save -> load -> save is byte-identical") {
    TempDir tmp;
    ModelConfig cfg;
    cfg.seed = 2024;
    cfg.epochs = 7;
    Model model{cfg};
    model.init_parameters();
    model.set_epochs_trained(7);

    const std::string p1 = tmp.file("a.ckpt");
    const std::string p2 = tmp.file("b.ckpt");
    save_checkpoint(model, p1);
    Model loaded = load_checkpoint(p1);
    save_checkpoint(loaded, p2);

    CHECK(slurp(p1) == slurp(p2));
    CHECK(loaded.epochs_trained() == 7);
    CHECK(loaded.config().seed == 2024);
    CHECK(loaded.config().input_size == 32);

    auto la = model.params().tensor_list();
    auto lb = loaded.params().tensor_list();
    for (size_t i = 0; i < la.size(); ++i)
        CHECK(std::memcmp(la[i]->data(), lb[i]->data(),
                          sizeof(float) * (size_t)la[i]->numel()) == 0);
}

TEST_CASE("checkpoint payload length is 4 bytes per parameter element") {
    TempDir tmp;
    Model model{ModelConfig{}};
    model.init_parameters();
    const std::string path = tmp.file("m.ckpt");
    save_checkpoint(model, path);
    const std::vector<uint8_t> bytes = slurp(path);

    int64_t elems = 0;
    for (const Tensor<float>* t : model.params().tensor_list()) elems += t->numel();
    // weights 36+576+4608+2048+256+16, biases 4+16+32+16+4+1
    CHECK(elems == 7540 + 73);

    const uint32_t header_len = (uint32_t)bytes[11] | ((uint32_t)bytes[12] << 8) |
                                ((uint32_t)bytes[13] << 16) | ((uint32_t)bytes[14] << 24);
    CHECK(bytes.size() == 10 + 1 + 4 + header_len + (size_t)elems * 4);
    CHECK(std::memcmp(bytes.data(), "ANOMALNET\0", 10) == 0);
    CHECK(bytes[10] == 0x01);
}

TEST_CASE("checkpoint load rejects each corruption class with a distinct error") {
    TempDir tmp;
    ModelConfig cfg;
    cfg.seed = 5;
    Model model{cfg};
    model.init_parameters();
    const std::string good_path = tmp.file("good.ckpt");
    save_checkpoint(model, good_path);
    const std::vector<uint8_t> good = slurp(good_path);

    SUBCASE("bad magic") {
        std::vector<uint8_t> bad = good;
        bad[0] = 'X';
        spit(tmp.file("bad.ckpt"), bad);
        const std::string msg =
            error_message([&] { load_checkpoint(tmp.file("bad.ckpt")); });
        CHECK(msg.find("bad magic") != std::string::npos);
    }

    SUBCASE("version mismatch") {
        std::vector<uint8_t> bad = good;
        bad[10] = 0x02;
        spit(tmp.file("bad.ckpt"), bad);
        const std::string msg =
            error_message([&] { load_checkpoint(tmp.file("bad.ckpt")); });
        CHECK(msg.find("unsupported format version") != std::string::npos);
    }

    SUBCASE("truncated payload") {
        std::vector<uint8_t> bad(good.begin(), good.end() - 8);
        spit(tmp.file("bad.ckpt"), bad);
        const std::string msg =
            error_message([&] { load_checkpoint(tmp.file("bad.ckpt")); });
        CHECK(msg.find("payload is truncated") != std::string::npos);
    }

    SUBCASE("trailing bytes") {
        std::vector<uint8_t> bad = good;
        bad.push_back(0);
        spit(tmp.file("bad.ckpt"), bad);
        const std::string msg =
            error_message([&] { load_checkpoint(tmp.file("bad.ckpt")); });
        CHECK(msg.find("trailing bytes") != std::string::npos);
    }

    SUBCASE("shape metadata mismatch") {
        // flip a tensor name inside the JSON header
        std::vector<uint8_t> bad = good;
        const std::string needle = "enc1.weight";
        auto it = std::search(bad.begin(), bad.end(), needle.begin(), needle.end());
        REQUIRE(it != bad.end());
        *it = 'x';
        spit(tmp.file("bad.ckpt"), bad);
        const std::string msg =
            error_message([&] { load_checkpoint(tmp.file("bad.ckpt")); });
        CHECK(msg.find("tensor metadata does not match") != std::string::npos);
    }

    SUBCASE("truncated header") {
        std::vector<uint8_t> bad(good.begin(), good.begin() + 20);
        spit(tmp.file("bad.ckpt"), bad);
        const std::string msg =
            error_message([&] { load_checkpoint(tmp.file("bad.ckpt")); });
        CHECK(msg.find("header is truncated") != std::string::npos);
    }

    SUBCASE("missing file raises an io error") {
        try {
            load_checkpoint(tmp.file("nope.ckpt"));
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::io);
        }
    }
}
