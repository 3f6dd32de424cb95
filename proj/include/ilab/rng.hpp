#pragma once

#include <cstdint>

namespace ilab {

// Counter-based generator used everywhere randomness is needed.
// std::mt19937_64 output is standard-pinned, but the std distributions are
// not, so sampling goes through plain uniform doubles built from raw bits.
class RandomSource {
public:
    explicit RandomSource(std::uint64_t seed) : state_(seed) {
        // splitmix64 warmup so nearby seeds decorrelate
        next_u64();
        next_u64();
    }

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // index sampled from a discrete distribution given as n probabilities
    int sample(const double* probs, int n) {
        double u = next_double();
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            acc += probs[i];
            if (u < acc) return i;
        }
        return n - 1;  // guard against acc < 1 from rounding
    }

    // independent stream for a sub-task; detached from this source's state
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t index) {
        RandomSource r(seed ^ (0x9e3779b97f4a7c15ull + index * 0xd1b54a32d192ed03ull));
        return r.next_u64();
    }

private:
    std::uint64_t state_;
};

}  // namespace ilab
