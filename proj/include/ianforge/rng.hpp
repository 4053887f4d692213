#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "ianforge/tensor.hpp"

namespace ianforge {

// Deterministic PRNG: xoshiro256** seeded through splitmix64.
// Fixed algorithm so identical seeds give identical streams on every
// platform; std:: engines are not used anywhere in the library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& w : state_) w = splitmix64(x);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform double in [0,1), 53 mantissa bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) {
        if (!(lo < hi)) throw std::invalid_argument("uniform: requires lo < hi");
        return lo + (hi - lo) * uniform01();
    }

    // Box-Muller; draws two uniforms per call, the sine branch is discarded.
    double normal() {
        const double u1 = 1.0 - uniform01();  // (0,1]
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    // Independent substream, deterministic in (seed history, stream id).
    Rng derive(std::uint64_t stream) const {
        std::uint64_t h = state_[0] ^ (stream * 0x9e3779b97f4a7c15ULL + 0x5851f42d4c957f2dULL);
        return Rng(h);
    }

private:
    static std::uint64_t splitmix64(std::uint64_t& x) {
        std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    static std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

    std::array<std::uint64_t, 4> state_;
};

inline Tensor sample_uniform(Rng& rng, Shape shape, double lo, double hi) {
    if (!(lo < hi)) throw std::invalid_argument("sample_uniform: requires lo < hi");
    Tensor t = Tensor::zeros(std::move(shape));
    for (auto& v : t.data) v = lo + (hi - lo) * rng.uniform01();
    return t;
}

inline Tensor sample_normal(Rng& rng, Shape shape, double mean = 0.0, double stddev = 1.0) {
    Tensor t = Tensor::zeros(std::move(shape));
    for (auto& v : t.data) v = mean + stddev * rng.normal();
    return t;
}

}  // namespace ianforge
