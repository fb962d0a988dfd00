#include "gridcodec/entropy/pmf.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace gridcodec::entropy {

namespace {
constexpr unsigned kEscapeRawBits = 32;
}

std::vector<std::uint32_t> quantize_pmf(std::span<const double> probabilities, unsigned precision_bits) {
    const std::size_t n = probabilities.size();
    if (precision_bits == 0 || precision_bits > 16) throw std::invalid_argument("quantize_pmf: precision 1..16 bits");
    const std::uint64_t total = 1ull << precision_bits;
    if (n == 0 || n > total) throw std::invalid_argument("quantize_pmf: alphabet does not fit the precision");
    double mass = 0.0;
    for (double p : probabilities) {
        if (!(p >= 0.0) || !std::isfinite(p)) throw std::invalid_argument("quantize_pmf: invalid probability");
        mass += p;
    }
    if (!(mass > 0.0)) throw std::invalid_argument("quantize_pmf: zero total mass");

    std::vector<std::uint32_t> freq(n);
    std::vector<double> frac(n);
    std::int64_t assigned = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double scaled = probabilities[i] / mass * static_cast<double>(total);
        const double fl = std::floor(scaled);
        freq[i] = std::max<std::uint32_t>(1, static_cast<std::uint32_t>(fl));
        frac[i] = scaled - fl;
        assigned += freq[i];
    }
    std::int64_t remainder = static_cast<std::int64_t>(total) - assigned;
    if (remainder > 0) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
        for (std::size_t k = 0; remainder > 0; k = (k + 1) % n, --remainder) ++freq[order[k]];
    }
    while (remainder < 0) {
        const auto it = std::max_element(freq.begin(), freq.end());
        --*it;
        ++remainder;
    }
    return freq;
}

void PmfTable::finalize() {
    if (freq.size() != static_cast<std::size_t>(2 * support + 2)) throw std::invalid_argument("pmf table size");
    cum.assign(freq.size() + 1, 0);
    for (std::size_t i = 0; i < freq.size(); ++i) {
        if (freq[i] == 0) throw std::invalid_argument("pmf table has a zero frequency");
        cum[i + 1] = cum[i] + freq[i];
    }
    if (cum.back() != (1u << precision_bits)) throw std::invalid_argument("pmf table does not sum to its precision");
}

double PmfTable::code_length_bits(std::int64_t z) const {
    const double total = static_cast<double>(1u << precision_bits);
    if (z >= -support && z <= support) return -std::log2(freq[static_cast<std::size_t>(z + support)] / total);
    return -std::log2(freq[escape_symbol()] / total) + kEscapeRawBits;
}

PmfTable build_pmf_table(const FactorizedDensity& density, std::size_t channel, int support,
                         unsigned precision_bits) {
    if (support < 0 || support > kMaxSupport) throw std::invalid_argument("pmf support out of range");
    std::vector<double> p;
    p.reserve(static_cast<std::size_t>(2 * support + 2));
    for (int z = -support; z <= support; ++z) p.push_back(density.likelihood(channel, z));
    const double tail = density.cdf(channel, -support - 0.5) + (1.0 - density.cdf(channel, support + 0.5));
    p.push_back(std::max(tail, 0.0));
    PmfTable t;
    t.support = support;
    t.precision_bits = precision_bits;
    t.freq = quantize_pmf(p, precision_bits);
    t.finalize();
    return t;
}

std::vector<PmfTable> build_pmf_tables(const FactorizedDensity& density, std::span<const int> supports,
                                       unsigned precision_bits) {
    if (supports.size() != density.channels()) throw std::invalid_argument("one support per channel required");
    std::vector<PmfTable> tables;
    for (std::size_t c = 0; c < supports.size(); ++c)
        tables.push_back(build_pmf_table(density, c, supports[c], precision_bits));
    return tables;
}

}  // namespace gridcodec::entropy
