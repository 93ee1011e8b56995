#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "anomalnet/tensor.hpp"

namespace anomalnet {

enum class Label { uninfected, parasitized };

inline const char* label_name(Label l) {
    return l == Label::parasitized ? "parasitized" : "uninfected";
}

// One dataset entry. `pixels` is empty until the record is preprocessed
// ([1,S,S], values in [0,1]); the label derives from the parent directory.
struct ImageRecord {
    std::string path;
    Label label = Label::uninfected;
    Tensor<float> pixels;
};

struct Manifest {
    std::vector<ImageRecord> records; // lexicographic path order
    int64_t skipped = 0;
    std::vector<std::string> skipped_paths;

    int64_t count(Label l) const;
};

// Scans root/Parasitized and root/Uninfected for decodable image files.
// Missing class directories raise config errors; unreadable or non-image
// files are skipped and counted.
Manifest scan_dataset(const std::string& root_dir);

// Test-set composition; negative means "all remaining records of the class".
struct TestSpec {
    int64_t parasitized = 2757;
    int64_t uninfected = 2755;
};

struct DatasetSplit {
    std::string name;
    std::vector<ImageRecord> records;
    uint64_t seed = 0;
};

struct Splits {
    DatasetSplit train;
    DatasetSplit validation;
    DatasetSplit test;
};

// Seeded Fisher-Yates shuffle of each class list; train and validation are
// drawn from uninfected records only, the test set from what remains
// (parasitized block first, then uninfected). Splits are disjoint by path and
// reproducible from the seed.
Splits split_dataset(const Manifest& manifest, uint64_t seed, int64_t train_n, int64_t val_n,
                     const TestSpec& test_spec = {});

// Preprocesses every record in place to [1,size,size] tensors in [0,1].
void load_split_pixels(DatasetSplit& split, int image_size);

// Per-epoch reshuffled partition of [0,n) into batch_size chunks (final
// partial chunk included). Keyed by (seed, epoch).
std::vector<std::vector<int64_t>> batch_indices(int64_t n, int64_t batch_size, uint64_t seed,
                                                int64_t epoch);

// Materialized [N,1,S,S] batches for one epoch; concatenating them is a
// permutation of the split.
std::vector<Tensor<float>> make_batches(const DatasetSplit& split, int64_t batch_size,
                                        uint64_t seed, int64_t epoch);

} // namespace anomalnet
