#include "gridcodec/eval/rd.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "gridcodec/eval/image_io.hpp"
#include "gridcodec/eval/metrics.hpp"
#include "gridcodec/field/render.hpp"
#include "gridcodec/nd/tensor.hpp"

namespace gridcodec::eval {

ViewQuality test_view_quality(const field::RadianceField& f, const field::ViewSet& views, bool quantize) {
    auto indices = views.test_indices();
    if (indices.empty()) indices = views.train_indices();
    const auto tensors = field::FieldTensors::of(f);
    ViewQuality q;
    for (std::size_t v : indices) {
        Image img = field::render_view(f.config, tensors, views.cameras[v]);
        if (quantize) img = quantized_8bit(img);
        q.psnr += psnr(img, views.images[v]);
        q.ssim += ssim(img, views.images[v]);
    }
    q.psnr /= static_cast<double>(indices.size());
    q.ssim /= static_cast<double>(indices.size());
    return q;
}

std::string config_id(const codec::CodecConfig& c) {
    std::string id = c.name;
    if (!c.use_mask) id += "+nomask";
    if (!c.use_importance) id += "+noimp";
    if (c.use_encoder) id += "+enc";
    if (c.init == codec::LatentInit::gaussian) id += "+gauss";
    if (c.mode == codec::TrainingMode::end_to_end) id += "+e2e";
    return id;
}

RdRun run_rd_point(const field::RadianceField& pretrained, const field::ViewSet& views,
                   const codec::CodecConfig& config) {
    RdRun run;
    RdPoint& p = run.point;
    p.config_id = config_id(config);
    p.lambda = config.lambda;
    p.seed = config.seed;
    const auto start = std::chrono::steady_clock::now();
    try {
        const codec::CompressionResult res = codec::compress_scene(pretrained, views, config);
        run.file = container::write_container(res.scene);
        const field::RadianceField decoded = container::read_container(run.file).reconstruct();
        const container::SizeReport sizes = container::size_report(run.file);
        p.bytes_total = sizes.total;
        p.bytes_latents = sizes.feature_planes();
        p.bytes_decoder = sizes.decoder;
        p.bytes_other = sizes.other_components() + sizes.framing;
        const ViewQuality q = test_view_quality(decoded, views);
        p.psnr = q.psnr;
        p.ssim = q.ssim;
        p.iterations = res.report.iterations;
        p.final_loss = res.report.final_loss;
    } catch (const nd::NonFiniteError& e) {
        p.failed = true;
        p.error = e.what();
        run.file.clear();
    }
    p.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return run;
}

std::vector<RdPoint> rd_sweep(const field::RadianceField& pretrained, const field::ViewSet& views,
                              const codec::CodecConfig& config, std::vector<double> lambdas,
                              const std::function<void(const RdPoint&)>& on_point) {
    std::sort(lambdas.begin(), lambdas.end());
    std::vector<RdPoint> points;
    for (double lambda : lambdas) {
        codec::CodecConfig c = config;
        c.lambda = lambda;
        points.push_back(run_rd_point(pretrained, views, c).point);
        if (on_point) on_point(points.back());
    }
    return points;
}

std::size_t size_inversions(std::span<const RdPoint> points) {
    std::vector<RdPoint> ok;
    for (const RdPoint& p : points)
        if (!p.failed) ok.push_back(p);
    std::sort(ok.begin(), ok.end(), [](const RdPoint& a, const RdPoint& b) { return a.lambda < b.lambda; });
    std::size_t n = 0;
    for (std::size_t i = 1; i < ok.size(); ++i) n += ok[i].bytes_total > ok[i - 1].bytes_total;
    return n;
}

std::string rd_csv(std::span<const RdPoint> points, bool include_wall_time) {
    std::ostringstream out;
    out.precision(10);
    out << kCsvHeader << '\n';
    for (const RdPoint& p : points) {
        out << p.config_id << ',' << p.lambda << ',' << p.seed << ',';
        if (p.failed) {
            out << ",,,,,,,";
        } else {
            out << p.bytes_total << ',' << p.bytes_latents << ',' << p.bytes_decoder << ',' << p.bytes_other << ','
                << p.psnr << ',' << p.ssim << ',' << p.iterations << ',';
        }
        if (include_wall_time) out << p.wall_seconds;
        out << '\n';
    }
    return out.str();
}

std::string rd_svg(std::span<const std::vector<RdPoint>> curves) {
    constexpr double kPanelW = 360, kPanelH = 260, kMargin = 50;
    static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    double xlo = INFINITY, xhi = -INFINITY, plo = INFINITY, phi = -INFINITY, slo = INFINITY, shi = -INFINITY;
    for (const auto& c : curves)
        for (const RdPoint& p : c) {
            if (p.failed) continue;
            const double mb = p.bytes_total / 1e6;
            xlo = std::min(xlo, mb), xhi = std::max(xhi, mb);
            plo = std::min(plo, p.psnr), phi = std::max(phi, p.psnr);
            slo = std::min(slo, p.ssim), shi = std::max(shi, p.ssim);
        }
    if (!(xhi >= xlo)) xlo = 0, xhi = 1, plo = 0, phi = 1, slo = 0, shi = 1;
    auto pad = [](double& lo, double& hi) {
        const double d = hi > lo ? 0.05 * (hi - lo) : 0.5;
        lo -= d, hi += d;
    };
    pad(xlo, xhi), pad(plo, phi), pad(slo, shi);

    std::ostringstream out;
    out.precision(6);
    const double width = 2 * (kPanelW + 2 * kMargin);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << kPanelH + 2 * kMargin
        << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    for (int panel = 0; panel < 2; ++panel) {
        const double ox = panel * (kPanelW + 2 * kMargin) + kMargin, oy = kMargin;
        const double ylo = panel == 0 ? plo : slo, yhi = panel == 0 ? phi : shi;
        auto sx = [&](double mb) { return ox + (mb - xlo) / (xhi - xlo) * kPanelW; };
        auto sy = [&](double v) { return oy + kPanelH - (v - ylo) / (yhi - ylo) * kPanelH; };
        out << "<rect x=\"" << ox << "\" y=\"" << oy << "\" width=\"" << kPanelW << "\" height=\"" << kPanelH
            << "\" fill=\"none\" stroke=\"black\"/>\n";
        out << "<text x=\"" << ox + kPanelW / 2 << "\" y=\"" << oy + kPanelH + 35
            << "\" text-anchor=\"middle\">size (MB)</text>\n";
        out << "<text x=\"" << ox - 38 << "\" y=\"" << oy + kPanelH / 2 << "\" transform=\"rotate(-90 " << ox - 38
            << ' ' << oy + kPanelH / 2 << ")\" text-anchor=\"middle\">" << (panel == 0 ? "PSNR (dB)" : "SSIM")
            << "</text>\n";
        for (int t = 0; t <= 4; ++t) {
            const double xv = xlo + t * (xhi - xlo) / 4, yv = ylo + t * (yhi - ylo) / 4;
            out << "<text x=\"" << sx(xv) << "\" y=\"" << oy + kPanelH + 15 << "\" text-anchor=\"middle\">" << xv
                << "</text>\n";
            out << "<text x=\"" << ox - 5 << "\" y=\"" << sy(yv) + 4 << "\" text-anchor=\"end\">" << yv << "</text>\n";
        }
        for (std::size_t k = 0; k < curves.size(); ++k) {
            std::vector<RdPoint> pts;
            for (const RdPoint& p : curves[k])
                if (!p.failed) pts.push_back(p);
            std::sort(pts.begin(), pts.end(), [](auto& a, auto& b) { return a.bytes_total < b.bytes_total; });
            const char* color = kColors[k % std::size(kColors)];
            out << "<polyline fill=\"none\" stroke=\"" << color << "\" points=\"";
            for (const RdPoint& p : pts) out << sx(p.bytes_total / 1e6) << ',' << sy(panel == 0 ? p.psnr : p.ssim) << ' ';
            out << "\"/>\n";
            for (const RdPoint& p : pts)
                out << "<circle r=\"3\" fill=\"" << color << "\" cx=\"" << sx(p.bytes_total / 1e6) << "\" cy=\""
                    << sy(panel == 0 ? p.psnr : p.ssim) << "\"/>\n";
            if (panel == 0 && !pts.empty())
                out << "<text x=\"" << ox + 8 << "\" y=\"" << oy + 15 + 14 * k << "\" fill=\"" << color << "\">"
                    << pts.front().config_id << "</text>\n";
        }
    }
    out << "</svg>\n";
    return out.str();
}

}  // namespace gridcodec::eval
