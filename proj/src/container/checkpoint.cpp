#include "gridcodec/container/checkpoint.hpp"

#include <cstring>

#include "gridcodec/container/format.hpp"

namespace gridcodec::container {

namespace {
constexpr char kMagic[4] = {'G', 'C', 'F', 'D'};
constexpr std::uint16_t kVersion = 1;
}  // namespace

Bytes write_field(const field::RadianceField& f) {
    ByteWriter w;
    w.raw({reinterpret_cast<const std::uint8_t*>(kMagic), 4});
    w.u16(kVersion);
    const field::FieldConfig& c = f.config;
    for (std::size_t v : {c.plane_size, c.line_size, c.density_channels, c.appearance_channels, c.shader_hidden,
                          c.view_frequencies, c.samples_per_ray})
        w.u32(static_cast<std::uint32_t>(v));
    w.f64(c.density_scale);
    for (const auto& p : f.planes) w.tensor_f64(p);
    for (const auto& l : f.lines) w.tensor_f64(l);
    for (const nd::Tensor* t : f.shader.tensors()) w.tensor_f64(*t);
    w.u64(fnv1a64(w.bytes()));
    return w.take();
}

field::RadianceField read_field(std::span<const std::uint8_t> file) {
    if (file.size() < 14) throw FormatError("checkpoint too short");
    const auto body = file.first(file.size() - 8);
    ByteReader tail(file.last(8));
    if (std::memcmp(file.data(), kMagic, 4) != 0) throw FormatError("not a field checkpoint");
    if (tail.u64() != fnv1a64(body)) throw ChecksumError("checkpoint checksum mismatch");
    ByteReader r(body.subspan(4));
    if (r.u16() != kVersion) throw VersionError("unsupported checkpoint version");
    field::RadianceField f;
    field::FieldConfig& c = f.config;
    for (std::size_t* v : {&c.plane_size, &c.line_size, &c.density_channels, &c.appearance_channels, &c.shader_hidden,
                           &c.view_frequencies, &c.samples_per_ray})
        *v = r.u32();
    c.density_scale = r.f64();
    for (auto& p : f.planes) p = r.tensor_f64();
    for (auto& l : f.lines) l = r.tensor_f64();
    for (nd::Tensor* t : f.shader.tensors()) *t = r.tensor_f64();
    if (!r.at_end()) throw FormatError("checkpoint has trailing bytes");
    for (const auto& p : f.planes) {
        if (p.shape() != nd::Shape{c.plane_channels(), c.plane_size, c.plane_size})
            throw FormatError("checkpoint plane shape disagrees with its config");
    }
    return f;
}

}  // namespace gridcodec::container
