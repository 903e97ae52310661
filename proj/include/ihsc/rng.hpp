#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "ihsc/digest.hpp"

namespace ihsc {

/// mt19937_64 with hand-rolled transforms so that draw sequences are fully
/// determined by the seed and identical across platforms (std distributions
/// are implementation-defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1).
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n).
    std::uint64_t uniform_below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    double uniform_range(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    double exponential(double mean) {
        return -mean * std::log(1.0 - uniform01());
    }

    bool bernoulli(double p) { return uniform01() < p; }

private:
    std::mt19937_64 engine_;
};

/// Stable sub-stream seed derived from a master seed and a label.
std::uint64_t derive_seed(std::uint64_t master, const std::string& label);

}  // namespace ihsc
