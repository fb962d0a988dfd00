#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace gridcodec::entropy {

struct CorruptStreamError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// 32-bit range encoder with carry propagation through a cached byte
/// (the LZMA arrangement). Frequencies are integers summing to 2^total_bits.
class RangeEncoder {
public:
    void encode(std::uint32_t cum, std::uint32_t freq, unsigned total_bits);
    /// `bits` raw bits (at most 16) of `value`, coded at uniform probability.
    void encode_raw(std::uint32_t value, unsigned bits) { encode(value, 1, bits); }
    /// Flushes and returns the byte stream. The encoder must not be reused.
    std::vector<std::uint8_t> finish();

private:
    void shift_low();

    std::uint64_t low_ = 0;
    std::uint32_t range_ = 0xFFFFFFFFu;
    std::uint8_t cache_ = 0;
    std::uint64_t cache_size_ = 1;
    std::vector<std::uint8_t> out_;
};

class RangeDecoder {
public:
    explicit RangeDecoder(std::span<const std::uint8_t> bytes);

    /// Symbol whose interval [cum[s], cum[s+1]) holds the next target. `cum`
    /// has one more entry than there are symbols and ends at 2^total_bits.
    std::size_t decode(std::span<const std::uint32_t> cum, unsigned total_bits);
    std::uint32_t decode_raw(unsigned bits);

    /// True when every input byte has been consumed.
    bool at_end() const { return pos_ == bytes_.size(); }

private:
    std::uint8_t next_byte();
    void normalize();

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
    std::uint32_t code_ = 0;
    std::uint32_t range_ = 0xFFFFFFFFu;
};

}  // namespace gridcodec::entropy
