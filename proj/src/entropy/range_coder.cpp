#include "gridcodec/entropy/range_coder.hpp"

#include <algorithm>

namespace gridcodec::entropy {

namespace {
constexpr std::uint32_t kTop = 1u << 24;
}

void RangeEncoder::encode(std::uint32_t cum, std::uint32_t freq, unsigned total_bits) {
    if (freq == 0 || total_bits > 16 || static_cast<std::uint64_t>(cum) + freq > (1ull << total_bits))
        throw std::invalid_argument("range coder: invalid interval");
    const std::uint32_t r = range_ >> total_bits;
    low_ += static_cast<std::uint64_t>(r) * cum;
    range_ = r * freq;
    while (range_ < kTop) {
        range_ <<= 8;
        shift_low();
    }
}

void RangeEncoder::shift_low() {
    if (static_cast<std::uint32_t>(low_) < 0xFF000000u || (low_ >> 32) != 0) {
        const auto carry = static_cast<std::uint8_t>(low_ >> 32);
        std::uint8_t temp = cache_;
        do {
            out_.push_back(static_cast<std::uint8_t>(temp + carry));
            temp = 0xFF;
        } while (--cache_size_ != 0);
        cache_ = static_cast<std::uint8_t>(static_cast<std::uint32_t>(low_) >> 24);
    }
    ++cache_size_;
    low_ = (low_ & 0x00FFFFFFu) << 8;
}

std::vector<std::uint8_t> RangeEncoder::finish() {
    for (int i = 0; i < 5; ++i) shift_low();
    // The first byte is always the initial empty cache.
    out_.erase(out_.begin());
    return std::move(out_);
}

RangeDecoder::RangeDecoder(std::span<const std::uint8_t> bytes) : bytes_(bytes) {
    for (int i = 0; i < 4; ++i) code_ = (code_ << 8) | next_byte();
}

std::uint8_t RangeDecoder::next_byte() {
    if (pos_ >= bytes_.size()) throw CorruptStreamError("range decoder read past end of stream");
    return bytes_[pos_++];
}

void RangeDecoder::normalize() {
    while (range_ < kTop) {
        code_ = (code_ << 8) | next_byte();
        range_ <<= 8;
    }
}

std::size_t RangeDecoder::decode(std::span<const std::uint32_t> cum, unsigned total_bits) {
    const std::uint32_t r = range_ >> total_bits;
    const std::uint32_t target = code_ / r;
    if (target >= (1u << total_bits)) throw CorruptStreamError("range decoder target out of range");
    // Last s with cum[s] <= target.
    const auto it = std::upper_bound(cum.begin(), cum.end(), target);
    const auto s = static_cast<std::size_t>(it - cum.begin()) - 1;
    if (s + 1 >= cum.size() || cum[s + 1] == cum[s]) throw CorruptStreamError("range decoder hit an empty symbol");
    code_ -= r * cum[s];
    range_ = r * (cum[s + 1] - cum[s]);
    normalize();
    return s;
}

std::uint32_t RangeDecoder::decode_raw(unsigned bits) {
    const std::uint32_t r = range_ >> bits;
    const std::uint32_t v = code_ / r;
    if (v >= (1u << bits)) throw CorruptStreamError("range decoder raw value out of range");
    code_ -= r * v;
    range_ = r;
    normalize();
    return v;
}

}  // namespace gridcodec::entropy
