#include "anomalnet/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <string>

#include "anomalnet/image.hpp"
#include "anomalnet/rng.hpp"

namespace fs = std::filesystem;

namespace anomalnet {

int64_t Manifest::count(Label l) const {
    int64_t n = 0;
    for (const auto& r : records)
        if (r.label == l) ++n;
    return n;
}

Manifest scan_dataset(const std::string& root_dir) {
    struct ClassDir {
        const char* name;
        Label label;
    };
    static constexpr ClassDir class_dirs[] = {{"Parasitized", Label::parasitized},
                                              {"Uninfected", Label::uninfected}};

    if (!fs::is_directory(root_dir)) throw_config("dataset root is not a directory: " + root_dir);

    Manifest m;
    for (const ClassDir& cd : class_dirs) {
        const fs::path dir = fs::path(root_dir) / cd.name;
        if (!fs::is_directory(dir))
            throw_config("dataset root is missing the " + std::string(cd.name) +
                         " subdirectory: " + root_dir);
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (!entry.is_regular_file()) continue;
            const std::string path = entry.path().string();
            if (is_image_file(path)) {
                m.records.push_back({path, cd.label, {}});
            } else {
                m.skipped += 1;
                m.skipped_paths.push_back(path);
            }
        }
    }
    std::sort(m.records.begin(), m.records.end(),
              [](const ImageRecord& a, const ImageRecord& b) { return a.path < b.path; });
    std::sort(m.skipped_paths.begin(), m.skipped_paths.end());
    return m;
}

Splits split_dataset(const Manifest& manifest, uint64_t seed, int64_t train_n, int64_t val_n,
                     const TestSpec& test_spec) {
    if (train_n < 0 || val_n < 0) throw_invalid_argument("split sizes must be non-negative");

    std::vector<ImageRecord> uninfected, parasitized;
    for (const auto& r : manifest.records)
        (r.label == Label::uninfected ? uninfected : parasitized).push_back(r);

    if ((int64_t)uninfected.size() < train_n + val_n)
        throw_data("insufficient uninfected records: need " + std::to_string(train_n + val_n) +
                   " for train+validation, have " + std::to_string(uninfected.size()));

    // one shuffle stream per class, both derived from the run seed
    SplitMix64 root(seed);
    const uint64_t uninfected_seed = root.next();
    const uint64_t parasitized_seed = root.next();
    seeded_shuffle(uninfected, uninfected_seed);
    seeded_shuffle(parasitized, parasitized_seed);

    const int64_t remaining_u = (int64_t)uninfected.size() - train_n - val_n;
    const int64_t test_u = test_spec.uninfected < 0 ? remaining_u : test_spec.uninfected;
    const int64_t test_p =
        test_spec.parasitized < 0 ? (int64_t)parasitized.size() : test_spec.parasitized;
    if (test_u > remaining_u)
        throw_data("insufficient uninfected records for the test set: need " +
                   std::to_string(test_u) + ", have " + std::to_string(remaining_u) +
                   " after train/validation");
    if (test_p > (int64_t)parasitized.size())
        throw_data("insufficient parasitized records for the test set: need " +
                   std::to_string(test_p) + ", have " + std::to_string(parasitized.size()));

    Splits s;
    s.train = {"train", {uninfected.begin(), uninfected.begin() + train_n}, seed};
    s.validation = {"validation",
                    {uninfected.begin() + train_n, uninfected.begin() + train_n + val_n},
                    seed};
    s.test.name = "test";
    s.test.seed = seed;
    s.test.records.assign(parasitized.begin(), parasitized.begin() + test_p);
    s.test.records.insert(s.test.records.end(), uninfected.begin() + train_n + val_n,
                          uninfected.begin() + train_n + val_n + test_u);
    return s;
}

void load_split_pixels(DatasetSplit& split, int image_size) {
    for (ImageRecord& r : split.records)
        if (r.pixels.numel() == 0) r.pixels = preprocess_image(r.path, image_size);
}

std::vector<std::vector<int64_t>> batch_indices(int64_t n, int64_t batch_size, uint64_t seed,
                                                int64_t epoch) {
    if (batch_size < 1) throw_invalid_argument("batch_size must be >= 1");
    std::vector<int64_t> perm(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) perm[(size_t)i] = i;
    seeded_shuffle(perm, derive_seed(seed, (uint64_t)epoch));

    std::vector<std::vector<int64_t>> out;
    for (int64_t start = 0; start < n; start += batch_size) {
        const int64_t end = std::min(n, start + batch_size);
        out.emplace_back(perm.begin() + start, perm.begin() + end);
    }
    return out;
}

std::vector<Tensor<float>> make_batches(const DatasetSplit& split, int64_t batch_size,
                                        uint64_t seed, int64_t epoch) {
    const int64_t n = (int64_t)split.records.size();
    std::vector<Tensor<float>> batches;
    if (n == 0) return batches;

    const auto& first = split.records.front().pixels;
    if (first.numel() == 0)
        throw_invalid_argument("split pixels not loaded; call load_split_pixels first");
    const int64_t s = first.dim(1);

    for (const auto& chunk : batch_indices(n, batch_size, seed, epoch)) {
        Tensor<float> batch({(int64_t)chunk.size(), 1, s, s});
        for (size_t b = 0; b < chunk.size(); ++b) {
            const Tensor<float>& px = split.records[(size_t)chunk[b]].pixels;
            if (px.numel() != s * s)
                throw_invalid_argument("split contains inconsistently sized images");
            std::copy(px.data(), px.data() + px.numel(), batch.data() + (int64_t)b * s * s);
        }
        batches.push_back(std::move(batch));
    }
    return batches;
}

} // namespace anomalnet
