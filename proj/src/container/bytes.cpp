#include "gridcodec/container/bytes.hpp"

#include <bit>
#include <fstream>
#include <iterator>

namespace gridcodec::container {

namespace {
constexpr std::size_t kMaxRank = 4;
constexpr std::size_t kMaxElements = std::size_t{1} << 28;
}  // namespace

void ByteWriter::f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
void ByteWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.insert(out_.end(), s.begin(), s.end());
}

void ByteWriter::tensor_f32(const nd::Tensor& t) {
    u8(static_cast<std::uint8_t>(t.rank()));
    for (std::size_t d : t.shape()) u32(static_cast<std::uint32_t>(d));
    for (double v : t.storage()) {
        const float f = static_cast<float>(v);
        if (static_cast<double>(f) != v) throw std::invalid_argument("tensor value is not float32-representable");
        f32(f);
    }
}

void ByteWriter::tensor_f64(const nd::Tensor& t) {
    u8(static_cast<std::uint8_t>(t.rank()));
    for (std::size_t d : t.shape()) u32(static_cast<std::uint32_t>(d));
    for (double v : t.storage()) f64(v);
}

std::uint64_t ByteReader::get(int n) {
    if (remaining() < static_cast<std::size_t>(n)) throw FormatError("unexpected end of data");
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(in_[pos_ + i]) << (8 * i);
    pos_ += n;
    return v;
}

float ByteReader::f32() { return std::bit_cast<float>(u32()); }
double ByteReader::f64() { return std::bit_cast<double>(u64()); }

std::string ByteReader::str() {
    const auto bytes = raw(u32());
    return {bytes.begin(), bytes.end()};
}

std::span<const std::uint8_t> ByteReader::raw(std::size_t n) {
    if (remaining() < n) throw FormatError("unexpected end of data");
    const auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
}

nd::Shape ByteReader::shape() {
    const std::size_t rank = u8();
    if (rank == 0 || rank > kMaxRank) throw FormatError("bad tensor rank");
    nd::Shape s(rank);
    std::size_t n = 1;
    for (auto& d : s) {
        d = u32();
        n *= d;
        if (d == 0 || n > kMaxElements) throw FormatError("bad tensor shape");
    }
    return s;
}

nd::Tensor ByteReader::tensor_f32() {
    nd::Tensor t(shape());
    if (remaining() < 4 * t.numel()) throw FormatError("unexpected end of data");
    for (double& v : t.storage()) v = f32();
    return t;
}

nd::Tensor ByteReader::tensor_f64() {
    nd::Tensor t(shape());
    if (remaining() < 8 * t.numel()) throw FormatError("unexpected end of data");
    for (double& v : t.storage()) v = f64();
    return t;
}

std::uint64_t fnv1a64(std::span<const std::uint8_t> data) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::uint8_t b : data) {
        h ^= b;
        h *= 0x100000001b3ull;
    }
    return h;
}

Bytes read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return Bytes(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::string& path, std::span<const std::uint8_t> data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace gridcodec::container
