// Counter-seeded random streams for reproducible Monte Carlo sampling. The
// hand-rolled Box-Muller keeps draws identical across platforms, unlike
// std::normal_distribution.
#pragma once

#include <cmath>
#include <cstdint>

namespace qupid::rng {

struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

// Independent stream for one draw index: the index is folded through the
// full avalanche, so neighboring draws are uncorrelated.
inline std::uint64_t substream(std::uint64_t master, std::uint64_t index) {
    SplitMix64 s(master ^ (0xA0761D6478BD642FULL * (index + 1)));
    return s.next();
}

class GaussianStream {
public:
    explicit GaussianStream(std::uint64_t seed) : stream_(seed) {}

    double next() {
        if (have_cache_) {
            have_cache_ = false;
            return cache_;
        }
        double u1 = stream_.uniform01();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        const double u2 = stream_.uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        cache_ = r * std::sin(a);
        have_cache_ = true;
        return r * std::cos(a);
    }

private:
    SplitMix64 stream_;
    bool have_cache_ = false;
    double cache_ = 0.0;
};

}  // namespace qupid::rng
