#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace anomalnet {

// splitmix64. All randomness in the project flows from explicit seeds through
// this generator, so runs are reproducible bit-for-bit across platforms.
class SplitMix64 {
public:
    explicit SplitMix64(uint64_t seed) : state_(seed) {}

    uint64_t next() {
        uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // uniform in [0,1), 53 random bits
    double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // uniform in [0,n) by modulo reduction (n > 0); the bias is immaterial for
    // the list sizes used here and keeps the draw sequence easy to reproduce
    uint64_t next_below(uint64_t n) { return next() % n; }

private:
    uint64_t state_;
};

// Derives an independent stream seed from (seed, key), e.g. per-epoch shuffles.
inline uint64_t derive_seed(uint64_t seed, uint64_t key) {
    SplitMix64 g(seed ^ (key + 0x9E3779B97F4A7C15ull + (seed << 6) + (seed >> 2)));
    return g.next();
}

// In-place seeded Fisher-Yates shuffle.
template <typename T>
void seeded_shuffle(std::vector<T>& items, uint64_t seed) {
    SplitMix64 g(seed);
    for (size_t i = items.size(); i > 1; --i) {
        size_t j = static_cast<size_t>(g.next_below(i));
        std::swap(items[i - 1], items[j]);
    }
}

} // namespace anomalnet
