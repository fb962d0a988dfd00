#include "gridcodec/eval/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace gridcodec::eval {

namespace {

unsigned char to_byte(double v) { return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    return out;
}

}  // namespace

void write_ppm(const std::string& path, const Image& image) {
    auto out = open_out(path);
    out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
    for (double v : image.rgb) out.put(static_cast<char>(to_byte(v)));
}

Image read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string magic;
    std::size_t w = 0, h = 0, maxval = 0;
    in >> magic >> w >> h >> maxval;
    if (magic != "P6" || maxval != 255 || w == 0 || h == 0) throw std::runtime_error(path + ": not an 8-bit P6 image");
    in.get();
    Image img(w, h);
    for (double& v : img.rgb) {
        const int c = in.get();
        if (c == EOF) throw std::runtime_error(path + ": truncated image");
        v = c / 255.0;
    }
    return img;
}

void write_pgm(const std::string& path, const nd::Tensor& map, double lo, double hi) {
    if (map.rank() != 2) throw std::invalid_argument("write_pgm: expected an H x W tensor");
    if (!(hi > lo)) throw std::invalid_argument("write_pgm: empty value range");
    auto out = open_out(path);
    out << "P5\n" << map.dim(1) << ' ' << map.dim(0) << "\n255\n";
    for (double v : map.storage()) out.put(static_cast<char>(to_byte((v - lo) / (hi - lo))));
}

Image quantized_8bit(const Image& image) {
    Image q = image;
    for (double& v : q.rgb) v = to_byte(v) / 255.0;
    return q;
}

}  // namespace gridcodec::eval
