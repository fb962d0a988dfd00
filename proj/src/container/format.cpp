#include "gridcodec/container/format.hpp"

#include <array>
#include <cstring>
#include <vector>

#include "gridcodec/container/lz77.hpp"
#include "gridcodec/entropy/latent_coding.hpp"
#include "gridcodec/entropy/range_coder.hpp"

namespace gridcodec::container {

namespace {

constexpr char kMagic[4] = {'G', 'C', 'D', 'C'};
enum Tag : std::uint8_t { kConfig = 1, kMasks, kLatents, kDecoder, kOther };
constexpr std::size_t kMaxPlaneSide = 1 << 14;

void write_section(ByteWriter& file, Tag tag, const Bytes& payload) {
    if (payload.size() > 0xffffffffu) throw std::invalid_argument("section too large");
    file.u8(tag);
    file.u32(static_cast<std::uint32_t>(payload.size()));
    file.raw(payload);
    file.u64(fnv1a64(payload));
}

struct Sections {
    std::array<std::span<const std::uint8_t>, 5> payload;
    std::size_t file_size = 0;
};

Sections split(std::span<const std::uint8_t> file) {
    ByteReader r(file);
    const auto magic = r.raw(4);
    if (std::memcmp(magic.data(), kMagic, 4) != 0) throw FormatError("not a compressed scene file");
    const std::uint16_t version = r.u16();
    if (version != kFormatVersion) throw VersionError("unsupported format version " + std::to_string(version));
    Sections s;
    s.file_size = file.size();
    for (std::uint8_t expected = kConfig; expected <= kOther; ++expected) {
        const std::uint8_t tag = r.u8();
        if (tag != expected) throw FormatError("unexpected section tag " + std::to_string(tag));
        const auto payload = r.raw(r.u32());
        if (r.u64() != fnv1a64(payload))
            throw ChecksumError("checksum mismatch in section " + std::to_string(tag));
        s.payload[expected - kConfig] = payload;
    }
    if (!r.at_end()) throw FormatError("trailing bytes after last section");
    return s;
}

Bytes config_payload(const codec::CompressedScene& s) {
    const codec::CodecConfig& c = s.config;
    ByteWriter w;
    w.str(c.name);
    w.u32(static_cast<std::uint32_t>(c.latent_channels));
    w.u32(static_cast<std::uint32_t>(c.hidden_channels));
    w.f64(c.lambda);
    w.u64(c.iterations);
    w.u64(c.batch_rays);
    w.f64(c.latent_lr);
    w.f64(c.network_lr);
    w.f64(c.lr_end_ratio);
    w.u8(static_cast<std::uint8_t>(c.use_mask | (c.use_importance << 1) | (c.use_encoder << 2)));
    w.u8(static_cast<std::uint8_t>(c.init));
    w.u8(static_cast<std::uint8_t>(c.mode));
    w.f64(c.mask_logit_bias);
    w.f64(c.gaussian_init_std);
    w.f64(c.tau_start);
    w.f64(c.tau_end);
    w.u64(c.seed);
    w.u32(static_cast<std::uint32_t>(s.dims.channels));
    w.u32(static_cast<std::uint32_t>(s.dims.height));
    w.u32(static_cast<std::uint32_t>(s.dims.width));
    return w.take();
}

void read_config(std::span<const std::uint8_t> payload, codec::CompressedScene& s) {
    ByteReader r(payload);
    codec::CodecConfig& c = s.config;
    c.name = r.str();
    c.latent_channels = r.u32();
    c.hidden_channels = r.u32();
    c.lambda = r.f64();
    c.iterations = r.u64();
    c.batch_rays = r.u64();
    c.latent_lr = r.f64();
    c.network_lr = r.f64();
    c.lr_end_ratio = r.f64();
    const std::uint8_t flags = r.u8();
    c.use_mask = flags & 1;
    c.use_importance = flags & 2;
    c.use_encoder = flags & 4;
    const std::uint8_t init = r.u8(), mode = r.u8();
    if (init > 1 || mode > 1 || flags > 7) throw FormatError("bad config enums");
    c.init = static_cast<codec::LatentInit>(init);
    c.mode = static_cast<codec::TrainingMode>(mode);
    c.mask_logit_bias = r.f64();
    c.gaussian_init_std = r.f64();
    c.tau_start = r.f64();
    c.tau_end = r.f64();
    c.seed = r.u64();
    s.dims.channels = r.u32();
    s.dims.height = r.u32();
    s.dims.width = r.u32();
    if (!r.at_end()) throw FormatError("config section has trailing bytes");
    if (c.latent_channels == 0 || s.dims.channels == 0 || s.dims.height == 0 || s.dims.width == 0 ||
        s.dims.height > kMaxPlaneSide || s.dims.width > kMaxPlaneSide)
        throw FormatError("bad dimensions");
}

Bytes masks_payload(const codec::CompressedScene& s) {
    Bytes bits;
    for (const auto& m : s.masks) {
        const std::size_t start = bits.size();
        bits.resize(start + (m.numel() + 7) / 8, 0);
        for (std::size_t j = 0; j < m.numel(); ++j) {
            if (m[j] != 0.0) bits[start + j / 8] |= static_cast<std::uint8_t>(1u << (j % 8));
        }
    }
    return lz_compress(bits);
}

void read_masks(std::span<const std::uint8_t> payload, codec::CompressedScene& s) {
    const Bytes bits = lz_decompress(payload);
    const std::size_t h = s.dims.latent_height(), w = s.dims.latent_width(), per_plane = (h * w + 7) / 8;
    if (bits.size() != 3 * per_plane) throw FormatError("mask section has the wrong size");
    for (std::size_t i = 0; i < 3; ++i) {
        s.masks[i] = nd::Tensor({h, w});
        for (std::size_t j = 0; j < h * w; ++j) s.masks[i][j] = (bits[i * per_plane + j / 8] >> (j % 8)) & 1u;
    }
}

Bytes latents_payload(const codec::CompressedScene& s, std::span<const entropy::PmfTable> tables) {
    ByteWriter w;
    w.u16(static_cast<std::uint16_t>(s.supports.size()));
    for (int L : s.supports) w.u16(static_cast<std::uint16_t>(L));
    for (std::size_t i = 0; i < 3; ++i) {
        const Bytes stream = entropy::encode_latents(s.latents[i], s.masks[i], tables);
        w.u32(static_cast<std::uint32_t>(s.masks[i].sum() * s.latents[i].dim(0)));
        w.u32(static_cast<std::uint32_t>(stream.size()));
        w.raw(stream);
    }
    return w.take();
}

Bytes decoder_payload(const codec::CompressedScene& s) {
    ByteWriter w;
    for (const nd::Tensor* t : s.decoder.tensors()) w.tensor_f32(*t);
    return lz_compress(w.bytes());
}

Bytes other_payload(const codec::CompressedScene& s) {
    const field::FieldConfig& f = s.field_config;
    ByteWriter w;
    for (std::size_t v : {f.plane_size, f.line_size, f.density_channels, f.appearance_channels, f.shader_hidden,
                          f.view_frequencies, f.samples_per_ray})
        w.u32(static_cast<std::uint32_t>(v));
    w.f64(f.density_scale);
    for (const auto& l : s.lines) w.tensor_f32(l);
    for (const nd::Tensor* t : s.shader.tensors()) w.tensor_f32(*t);
    w.tensor_f32(s.density.params());
    return lz_compress(w.bytes());
}

void read_other(std::span<const std::uint8_t> payload, codec::CompressedScene& s) {
    const Bytes raw = lz_decompress(payload);
    ByteReader r(raw);
    field::FieldConfig& f = s.field_config;
    for (std::size_t* v : {&f.plane_size, &f.line_size, &f.density_channels, &f.appearance_channels, &f.shader_hidden,
                           &f.view_frequencies, &f.samples_per_ray})
        *v = r.u32();
    f.density_scale = r.f64();
    for (auto& l : s.lines) l = r.tensor_f32();
    for (nd::Tensor* t : s.shader.tensors()) *t = r.tensor_f32();
    nd::Tensor theta = r.tensor_f32();
    if (!r.at_end()) throw FormatError("other section has trailing bytes");
    if (theta.rank() != 2 || theta.dim(0) != s.config.latent_channels ||
        theta.dim(1) != entropy::FactorizedDensity::kParamsPerChannel)
        throw FormatError("entropy model has the wrong shape");
    if (f.plane_size != s.dims.height || f.plane_size != s.dims.width || f.plane_channels() != s.dims.channels)
        throw FormatError("field config disagrees with plane dims");
    for (const auto& l : s.lines) {
        if (l.rank() != 2 || l.dim(0) != s.dims.channels || l.dim(1) != f.line_size)
            throw FormatError("line vector has the wrong shape");
    }
    const nd::Shape shader_shapes[6] = {{f.shader_inputs(), f.shader_hidden}, {f.shader_hidden},
                                        {f.shader_hidden, f.shader_hidden},   {f.shader_hidden},
                                        {f.shader_hidden, 3},                 {3}};
    const auto shader = s.shader.tensors();
    for (std::size_t i = 0; i < 6; ++i) {
        if (shader[i]->shape() != shader_shapes[i]) throw FormatError("shader tensor has the wrong shape");
    }
    s.density = entropy::FactorizedDensity(std::move(theta));
}

void read_decoder(std::span<const std::uint8_t> payload, codec::CompressedScene& s) {
    const Bytes raw = lz_decompress(payload);
    ByteReader r(raw);
    for (nd::Tensor* t : s.decoder.tensors()) *t = r.tensor_f32();
    if (!r.at_end()) throw FormatError("decoder section has trailing bytes");
    const std::size_t lc = s.config.latent_channels, hc = s.config.hidden_channels, c = s.dims.channels;
    if (s.decoder.w1.shape() != nd::Shape{lc, hc, 3, 3} || s.decoder.b1.shape() != nd::Shape{hc} ||
        s.decoder.w2.shape() != nd::Shape{hc, c, 3, 3} || s.decoder.b2.shape() != nd::Shape{c})
        throw FormatError("decoder tensors have the wrong shape");
}

void read_latents(std::span<const std::uint8_t> payload, codec::CompressedScene& s) {
    ByteReader r(payload);
    const std::size_t channels = r.u16();
    if (channels != s.config.latent_channels) throw FormatError("support header disagrees with channel count");
    s.supports.resize(channels);
    for (int& L : s.supports) {
        L = r.u16();
        if (L < 1 || L > entropy::kMaxSupport) throw FormatError("bad support");
    }
    const auto tables = s.tables();
    try {
        for (std::size_t i = 0; i < 3; ++i) {
            const std::size_t symbols = r.u32();
            if (symbols != static_cast<std::size_t>(s.masks[i].sum()) * channels)
                throw FormatError("symbol count disagrees with mask");
            const auto stream = r.raw(r.u32());
            s.latents[i] = entropy::decode_latents(stream, s.masks[i], channels, tables);
        }
    } catch (const entropy::CorruptStreamError& e) {
        throw FormatError(std::string("latent stream: ") + e.what());
    }
    if (!r.at_end()) throw FormatError("latent section has trailing bytes");
}

}  // namespace

Bytes write_container(const codec::CompressedScene& scene) {
    const auto tables = scene.tables();
    ByteWriter file;
    file.raw({reinterpret_cast<const std::uint8_t*>(kMagic), 4});
    file.u16(kFormatVersion);
    write_section(file, kConfig, config_payload(scene));
    write_section(file, kMasks, masks_payload(scene));
    write_section(file, kLatents, latents_payload(scene, tables));
    write_section(file, kDecoder, decoder_payload(scene));
    write_section(file, kOther, other_payload(scene));
    return file.take();
}

codec::CompressedScene read_container(std::span<const std::uint8_t> file) {
    const Sections sec = split(file);
    codec::CompressedScene s;
    read_config(sec.payload[0], s);
    read_masks(sec.payload[1], s);
    read_other(sec.payload[4], s);
    read_decoder(sec.payload[3], s);
    read_latents(sec.payload[2], s);
    return s;
}

SizeReport size_report(std::span<const std::uint8_t> file) {
    const Sections sec = split(file);
    SizeReport r;
    r.config = sec.payload[0].size();
    r.masks = sec.payload[1].size();
    r.latents = sec.payload[2].size();
    r.decoder = sec.payload[3].size();
    r.other = sec.payload[4].size();
    r.framing = kMagicBytes + 5 * kSectionFramingBytes;
    r.total = sec.file_size;
    return r;
}

}  // namespace gridcodec::container
