#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gridcodec/nd/tensor.hpp"

namespace gridcodec::container {

using Bytes = std::vector<std::uint8_t>;

/// Any malformed, truncated or inconsistent byte stream.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Little-endian serializer.
class ByteWriter {
public:
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v) { put(v, 2); }
    void u32(std::uint32_t v) { put(v, 4); }
    void u64(std::uint64_t v) { put(v, 8); }
    void f32(float v);
    void f64(double v);
    void str(const std::string& s);
    void raw(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
    /// Rank, u32 dims, then float32 values. Throws if a value is not float32-representable.
    void tensor_f32(const nd::Tensor& t);
    /// Rank, u32 dims, then float64 values.
    void tensor_f64(const nd::Tensor& t);

    const Bytes& bytes() const { return out_; }
    Bytes take() { return std::move(out_); }

private:
    void put(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    Bytes out_;
};

/// Bounds-checked little-endian reader; every overrun throws FormatError.
class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

    std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
    std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
    std::uint64_t u64() { return get(8); }
    float f32();
    double f64();
    std::string str();
    std::span<const std::uint8_t> raw(std::size_t n);
    nd::Tensor tensor_f32();
    nd::Tensor tensor_f64();

    std::size_t remaining() const { return in_.size() - pos_; }
    bool at_end() const { return pos_ == in_.size(); }

private:
    std::uint64_t get(int n);
    nd::Shape shape();
    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::span<const std::uint8_t> data);

Bytes read_file(const std::string& path);
void write_file(const std::string& path, std::span<const std::uint8_t> data);

}  // namespace gridcodec::container
