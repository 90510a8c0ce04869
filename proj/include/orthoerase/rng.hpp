#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace orthoerase {

// splitmix64 with a Box-Muller gaussian on top. The standard library's
// distributions are implementation-defined, so every random draw in this
// project goes through this generator to keep runs reproducible byte for
// byte on any toolchain.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double next_unit() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; generates in pairs and caches the spare.
    double next_gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        // u1 in (0, 1] so the log is always finite.
        const double u1 =
            static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
        const double u2 = next_unit();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

inline std::uint64_t fnv1a(const void* data, std::size_t len,
                           std::uint64_t h = 14695981039346656037ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::uint64_t fnv1a(std::string_view s,
                           std::uint64_t h = 14695981039346656037ULL) {
    return fnv1a(s.data(), s.size(), h);
}

// Derives an independent substream seed from a base seed, a stream tag and an
// index. Used to decorrelate token bases, layer parameters and latents.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag,
                                 std::uint64_t index = 0) {
    std::uint64_t h = fnv1a(tag);
    h = fnv1a(&seed, sizeof(seed), h);
    h = fnv1a(&index, sizeof(index), h);
    return h;
}

}  // namespace orthoerase
