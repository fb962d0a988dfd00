#include "gridcodec/container/lz77.hpp"

#include <algorithm>
#include <vector>

namespace gridcodec::container {

namespace {

constexpr std::size_t kHashBits = 15;
constexpr std::size_t kChainLimit = 64;
constexpr std::size_t kMaxLiteralRun = 128;
constexpr std::uint32_t kNone = 0xffffffffu;

std::uint32_t hash4(const std::uint8_t* p) {
    const std::uint32_t v = p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
    return (v * 2654435761u) >> (32 - kHashBits);
}

Bytes tokens(std::span<const std::uint8_t> in) {
    ByteWriter w;
    std::vector<std::uint32_t> head(std::size_t{1} << kHashBits, kNone), prev(in.size(), kNone);
    std::size_t literal_start = 0;
    auto flush_literals = [&](std::size_t end) {
        while (literal_start < end) {
            const std::size_t n = std::min(kMaxLiteralRun, end - literal_start);
            w.u8(static_cast<std::uint8_t>(n - 1));
            w.raw(in.subspan(literal_start, n));
            literal_start += n;
        }
    };
    auto insert = [&](std::size_t pos) {
        if (pos + kLzMinMatch > in.size()) return;
        const std::uint32_t h = hash4(&in[pos]);
        prev[pos] = head[h];
        head[h] = static_cast<std::uint32_t>(pos);
    };

    std::size_t pos = 0;
    while (pos < in.size()) {
        std::size_t best_len = 0, best_dist = 0;
        if (pos + kLzMinMatch <= in.size()) {
            const std::size_t limit = std::min(kLzMaxMatch, in.size() - pos);
            std::uint32_t cand = head[hash4(&in[pos])];
            for (std::size_t steps = 0; cand != kNone && steps < kChainLimit; ++steps, cand = prev[cand]) {
                const std::size_t dist = pos - cand;
                if (dist > kLzWindow) break;
                std::size_t len = 0;
                while (len < limit && in[cand + len] == in[pos + len]) ++len;
                if (len > best_len) {
                    best_len = len;
                    best_dist = dist;
                    if (len == limit) break;
                }
            }
        }
        if (best_len >= kLzMinMatch) {
            flush_literals(pos);
            w.u8(static_cast<std::uint8_t>(0x80 | (best_len - kLzMinMatch)));
            w.u16(static_cast<std::uint16_t>(best_dist - 1));
            for (std::size_t k = 0; k < best_len; ++k) insert(pos + k);
            pos += best_len;
            literal_start = pos;
        } else {
            insert(pos);
            ++pos;
        }
    }
    flush_literals(in.size());
    return w.take();
}

}  // namespace

Bytes lz_compress(std::span<const std::uint8_t> input) {
    if (input.size() > 0xffffffffu) throw std::invalid_argument("lz_compress: input too large");
    Bytes body = tokens(input);
    ByteWriter w;
    const bool stored = body.size() >= input.size();
    w.u8(stored ? 0 : 1);
    w.u32(static_cast<std::uint32_t>(input.size()));
    w.raw(stored ? input : std::span<const std::uint8_t>(body));
    return w.take();
}

Bytes lz_decompress(std::span<const std::uint8_t> stream) {
    ByteReader r(stream);
    const std::uint8_t mode = r.u8();
    const std::size_t size = r.u32();
    if (mode == 0) {
        const auto raw = r.raw(size);
        if (!r.at_end()) throw FormatError("lz: trailing bytes");
        return Bytes(raw.begin(), raw.end());
    }
    if (mode != 1) throw FormatError("lz: unknown mode");
    Bytes out;
    out.reserve(size);
    while (!r.at_end()) {
        const std::uint8_t t = r.u8();
        if (t < 0x80) {
            const auto lit = r.raw(std::size_t{t} + 1);
            out.insert(out.end(), lit.begin(), lit.end());
        } else {
            const std::size_t len = (t & 0x7f) + kLzMinMatch;
            const std::size_t dist = std::size_t{r.u16()} + 1;
            if (dist > out.size()) throw FormatError("lz: match before start of data");
            for (std::size_t k = 0; k < len; ++k) out.push_back(out[out.size() - dist]);
        }
        if (out.size() > size) throw FormatError("lz: output longer than declared");
    }
    if (out.size() != size) throw FormatError("lz: output shorter than declared");
    return out;
}

}  // namespace gridcodec::container
