#include "gridcodec/entropy/latent_coding.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gridcodec/entropy/range_coder.hpp"

namespace gridcodec::entropy {

namespace {

std::int64_t as_integer(double v) {
    if (v != std::nearbyint(v) || std::abs(v) > 2147483647.0)
        throw std::invalid_argument("latents must be integer valued and fit in 32 bits");
    return static_cast<std::int64_t>(v);
}

std::uint32_t zigzag(std::int64_t v) {
    return static_cast<std::uint32_t>(v >= 0 ? 2 * v : -2 * v - 1);
}

std::int64_t unzigzag(std::uint32_t u) {
    return (u & 1u) ? -static_cast<std::int64_t>(u >> 1) - 1 : static_cast<std::int64_t>(u >> 1);
}

void check(const nd::Tensor& mask, std::size_t channels, std::span<const PmfTable> tables) {
    if (mask.rank() != 2) throw std::invalid_argument("mask must be H x W");
    if (tables.size() != channels) throw std::invalid_argument("one pmf table per channel required");
}

}  // namespace

std::vector<int> latent_supports(std::span<const nd::Tensor* const> latents) {
    if (latents.empty()) return {};
    const std::size_t channels = latents[0]->dim(0);
    std::vector<int> supports(channels, 1);
    for (const nd::Tensor* z : latents) {
        if (z->dim(0) != channels) throw std::invalid_argument("latent channel counts differ");
        const std::size_t area = z->numel() / channels;
        for (std::size_t c = 0; c < channels; ++c)
            for (std::size_t j = 0; j < area; ++j) {
                const std::int64_t v = std::abs(as_integer((*z)[c * area + j]));
                supports[c] = static_cast<int>(std::min<std::int64_t>(std::max<std::int64_t>(supports[c], v + 1),
                                                                      kMaxSupport));
            }
    }
    return supports;
}

std::vector<std::uint8_t> encode_latents(const nd::Tensor& latents, const nd::Tensor& mask,
                                         std::span<const PmfTable> tables) {
    check(mask, latents.dim(0), tables);
    if (latents.rank() != 3 || latents.dim(1) != mask.dim(0) || latents.dim(2) != mask.dim(1))
        throw std::invalid_argument("latents and mask disagree in shape");
    const std::size_t area = mask.numel();
    RangeEncoder enc;
    bool any = false;
    for (std::size_t c = 0; c < latents.dim(0); ++c) {
        const PmfTable& t = tables[c];
        for (std::size_t j = 0; j < area; ++j) {
            const std::int64_t v = as_integer(latents[c * area + j]);
            if (mask[j] == 0.0) {
                if (v != 0) throw std::invalid_argument("nonzero latent at a masked-out location");
                continue;
            }
            any = true;
            if (v >= -t.support && v <= t.support) {
                const auto s = static_cast<std::size_t>(v + t.support);
                enc.encode(t.cum[s], t.freq[s], t.precision_bits);
            } else {
                const std::size_t e = t.escape_symbol();
                enc.encode(t.cum[e], t.freq[e], t.precision_bits);
                const std::uint32_t u = zigzag(v);
                enc.encode_raw(u >> 16, 16);
                enc.encode_raw(u & 0xFFFFu, 16);
            }
        }
    }
    if (!any) return {};
    return enc.finish();
}

nd::Tensor decode_latents(std::span<const std::uint8_t> stream, const nd::Tensor& mask, std::size_t channels,
                          std::span<const PmfTable> tables) {
    check(mask, channels, tables);
    const std::size_t area = mask.numel();
    nd::Tensor out({channels, mask.dim(0), mask.dim(1)});
    const bool any = std::any_of(mask.storage().begin(), mask.storage().end(), [](double m) { return m != 0.0; });
    if (!any || channels == 0) {
        if (!stream.empty()) throw CorruptStreamError("latent stream present for an all-zero mask");
        return out;
    }
    RangeDecoder dec(stream);
    for (std::size_t c = 0; c < channels; ++c) {
        const PmfTable& t = tables[c];
        for (std::size_t j = 0; j < area; ++j) {
            if (mask[j] == 0.0) continue;
            const std::size_t s = dec.decode(t.cum, t.precision_bits);
            std::int64_t v;
            if (s == t.escape_symbol()) {
                const std::uint32_t hi = dec.decode_raw(16), lo = dec.decode_raw(16);
                v = unzigzag((hi << 16) | lo);
            } else {
                v = static_cast<std::int64_t>(s) - t.support;
            }
            out[c * area + j] = static_cast<double>(v);
        }
    }
    if (!dec.at_end()) throw CorruptStreamError("latent stream has trailing bytes");
    return out;
}

double table_code_length_bits(const nd::Tensor& latents, const nd::Tensor& mask, std::span<const PmfTable> tables) {
    check(mask, latents.dim(0), tables);
    const std::size_t area = mask.numel();
    double bits = 0.0;
    for (std::size_t c = 0; c < latents.dim(0); ++c)
        for (std::size_t j = 0; j < area; ++j)
            if (mask[j] != 0.0) bits += tables[c].code_length_bits(as_integer(latents[c * area + j]));
    return bits;
}

}  // namespace gridcodec::entropy
