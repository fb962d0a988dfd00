#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace gridcodec::nd {

/// Seeded generator with platform-independent sampling transforms
/// (std distributions are implementation-defined, the engine is not).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in the open interval (0, 1).
    double uniform_open() {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform_open(); }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform_open()));
        const double phi = 2.0 * std::numbers::pi * uniform_open();
        spare_ = r * std::sin(phi);
        has_spare_ = true;
        return r * std::cos(phi);
    }

    double gumbel() { return -std::log(-std::log(uniform_open())); }

    std::size_t below(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }

    /// Derives an independent child stream.
    Rng fork(std::uint64_t salt) { return Rng(engine_() ^ (salt * 0x9E3779B97F4A7C15ULL)); }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace gridcodec::nd
