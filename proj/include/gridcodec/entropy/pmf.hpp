#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gridcodec/entropy/factorized.hpp"

namespace gridcodec::entropy {

inline constexpr unsigned kDefaultPrecisionBits = 16;
/// Supports wider than this fall back to escape coding.
inline constexpr int kMaxSupport = 4096;

/// Integer frequencies summing exactly to 2^precision_bits, every entry >= 1.
/// Floors the scaled probabilities, raises zeros to 1, then hands out the
/// remainder by largest fractional part (ties to the lower index) or takes
/// the excess back from the largest entries.
std::vector<std::uint32_t> quantize_pmf(std::span<const double> probabilities, unsigned precision_bits);

/// Coding table for one channel: symbols -support..support, then one escape symbol.
struct PmfTable {
    int support = 0;
    unsigned precision_bits = kDefaultPrecisionBits;
    std::vector<std::uint32_t> freq;  // 2 * support + 2 entries
    std::vector<std::uint32_t> cum;   // freq.size() + 1 entries, cum.back() == 2^precision_bits

    std::size_t symbols() const { return freq.size(); }
    std::size_t escape_symbol() const { return freq.size() - 1; }
    /// Rebuilds cum from freq and checks the table's invariants.
    void finalize();
    /// Model code length of value z under this table (escape values include their raw bits).
    double code_length_bits(std::int64_t z) const;
};

/// Table for `channel` with the escape symbol carrying the tail mass outside the support.
PmfTable build_pmf_table(const FactorizedDensity& density, std::size_t channel, int support,
                         unsigned precision_bits = kDefaultPrecisionBits);

std::vector<PmfTable> build_pmf_tables(const FactorizedDensity& density, std::span<const int> supports,
                                       unsigned precision_bits = kDefaultPrecisionBits);

}  // namespace gridcodec::entropy
