// Command-line front end: scene generation, pretraining, compression, decoding,
// rendering, evaluation and rate-distortion sweeps.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "gridcodec/codec/compress.hpp"
#include "gridcodec/codec/config.hpp"
#include "gridcodec/container/checkpoint.hpp"
#include "gridcodec/container/format.hpp"
#include "gridcodec/eval/image_io.hpp"
#include "gridcodec/eval/rd.hpp"
#include "gridcodec/field/pretrain.hpp"
#include "gridcodec/field/render.hpp"
#include "gridcodec/field/scene.hpp"

namespace fs = std::filesystem;
using namespace gridcodec;

namespace {

struct Options {
    std::uint64_t seed = 1;
    std::string config_path;
    std::string out_dir = ".";
    std::optional<double> lambda;  // unset keeps the preset or config-file value
    std::string preset = "desk-small";
    bool no_mask = false, no_importance = false, with_encoder = false;
    std::string init = "zeros", mode = "two-stage";

    std::string scene_path, field_path, input_path;
    std::size_t pretrain_iterations = field::PretrainOptions{}.iterations;
    std::string lambdas = "0.02,0.001,0.0001";
    bool quantize_8bit = false;
};

fs::path out(const Options& o, const std::string& name) {
    fs::create_directories(o.out_dir);
    return fs::path(o.out_dir) / name;
}

field::ToySceneSpec load_scene(const Options& o) {
    if (o.scene_path.empty()) return field::make_toy_scene(o.seed);
    std::ifstream in(o.scene_path);
    if (!in) throw std::runtime_error("cannot open scene file " + o.scene_path);
    return field::parse_scene_spec(in);
}

codec::CodecConfig codec_config(const Options& o) {
    codec::CodecConfig c = codec::preset(o.preset);
    if (!o.config_path.empty()) {
        std::ifstream in(o.config_path);
        if (!in) throw std::runtime_error("cannot open config file " + o.config_path);
        codec::apply_config_text(c, in);
    }
    if (o.lambda) c.lambda = *o.lambda;
    c.seed = o.seed;
    if (o.no_mask) c.use_mask = false;
    if (o.no_importance) c.use_importance = false;
    if (o.with_encoder) c.use_encoder = true;
    c.init = codec::parse_latent_init(o.init);
    c.mode = codec::parse_training_mode(o.mode);
    c.validate();
    return c;
}

field::RadianceField load_field(const std::string& path) {
    if (path.empty()) throw std::runtime_error("--field is required");
    return container::read_field(container::read_file(path));
}

// A field from --field (checkpoint) or --in (container), whichever was given.
field::RadianceField field_from_inputs(const Options& o) {
    if (!o.input_path.empty()) return container::read_container(container::read_file(o.input_path)).reconstruct();
    return load_field(o.field_path);
}

void print_sizes(const container::SizeReport& r) {
    std::printf("size: total %zu B (feature planes %zu = masks %zu + latents %zu, decoder %zu, other %zu, config %zu, "
                "framing %zu)\n",
                r.total, r.feature_planes(), r.masks, r.latents, r.decoder, r.other, r.config, r.framing);
}

void cmd_generate(const Options& o) {
    const field::ToySceneSpec spec = load_scene(o);
    std::ofstream(out(o, "scene.txt")) << field::format_scene_spec(spec);
    const field::ViewSet views = field::generate_scene(spec);
    fs::create_directories(out(o, "views"));
    for (std::size_t v = 0; v < views.images.size(); ++v) {
        char name[64];
        std::snprintf(name, sizeof name, "views/%s_%02zu.ppm", views.is_test[v] ? "test" : "train", v);
        eval::write_ppm(out(o, name).string(), views.images[v]);
    }
    std::printf("wrote %zu views and scene.txt to %s\n", views.images.size(), o.out_dir.c_str());
}

void cmd_pretrain(const Options& o) {
    const field::ViewSet views = field::generate_scene(load_scene(o));
    nd::Rng rng(o.seed);
    field::RadianceField f = field::RadianceField::random_init({}, rng);
    field::PretrainOptions po;
    po.iterations = o.pretrain_iterations;
    po.seed = o.seed;
    const auto report = field::pretrain_field(f, views, po, [&](std::size_t it, double loss) {
        if ((it + 1) % 500 == 0) std::printf("  iteration %zu loss %.5f\n", it + 1, loss);
    });
    container::write_file(out(o, "field.gcf").string(), container::write_field(f));
    std::printf("pretrained %zu iterations: train PSNR %.3f dB, test PSNR %.3f dB\n", report.iterations,
                report.train_psnr, report.test_psnr);
}

void cmd_compress(const Options& o) {
    const field::ViewSet views = field::generate_scene(load_scene(o));
    const field::RadianceField f = load_field(o.field_path);
    const codec::CodecConfig cfg = codec_config(o);
    const auto res = codec::compress_scene(f, views, cfg, [&](std::size_t it, const codec::CompressionReport& r) {
        if ((it + 1) % 100 == 0)
            std::printf("  iteration %zu render %.4f recon %.3f bits %.0f\n", it + 1, r.last_render, r.last_recon,
                        r.last_bits);
    });
    const container::Bytes file = container::write_container(res.scene);
    container::write_file(out(o, "scene.gcdc").string(), file);
    const eval::ViewQuality q = eval::test_view_quality(res.reconstruction, views);
    print_sizes(container::size_report(file));
    std::printf("compressed (lambda %g): test PSNR %.3f dB, SSIM %.4f, final loss %.4f\n", cfg.lambda, q.psnr, q.ssim,
                res.report.final_loss);
}

void cmd_decompress(const Options& o) {
    if (o.input_path.empty()) throw std::runtime_error("--in is required");
    const field::RadianceField f = container::read_container(container::read_file(o.input_path)).reconstruct();
    container::write_file(out(o, "decoded.gcf").string(), container::write_field(f));
    std::printf("decoded field written to %s\n", out(o, "decoded.gcf").c_str());
}

void cmd_render(const Options& o) {
    const field::ToySceneSpec spec = load_scene(o);
    const field::RadianceField f = field_from_inputs(o);
    const auto tensors = field::FieldTensors::of(f);
    const auto cameras = field::ring_cameras(spec);
    fs::create_directories(out(o, "render"));
    for (std::size_t v = 0; v < cameras.size(); ++v) {
        char name[64];
        std::snprintf(name, sizeof name, "render/view_%02zu.ppm", v);
        eval::write_ppm(out(o, name).string(), field::render_view(f.config, tensors, cameras[v]));
    }
    std::printf("rendered %zu views to %s\n", cameras.size(), out(o, "render").c_str());
}

void cmd_evaluate(const Options& o) {
    const field::ViewSet views = field::generate_scene(load_scene(o));
    const field::RadianceField f = field_from_inputs(o);
    const eval::ViewQuality q = eval::test_view_quality(f, views, o.quantize_8bit);
    if (!o.input_path.empty()) print_sizes(container::size_report(container::read_file(o.input_path)));
    std::printf("test PSNR %.3f dB, SSIM %.4f\n", q.psnr, q.ssim);
}

std::vector<double> parse_lambdas(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    if (out.empty()) throw std::runtime_error("--lambdas is empty");
    return out;
}

void cmd_rd_sweep(const Options& o) {
    const field::ViewSet views = field::generate_scene(load_scene(o));
    const field::RadianceField f = load_field(o.field_path);
    const auto points = eval::rd_sweep(f, views, codec_config(o), parse_lambdas(o.lambdas), [](const eval::RdPoint& p) {
        if (p.failed)
            std::printf("  lambda %g failed: %s\n", p.lambda, p.error.c_str());
        else
            std::printf("  lambda %g: %zu B, PSNR %.3f dB, SSIM %.4f\n", p.lambda, p.bytes_total, p.psnr, p.ssim);
    });
    std::ofstream(out(o, "rd.csv")) << eval::rd_csv(points);
    const std::vector<std::vector<eval::RdPoint>> curves{points};
    std::ofstream(out(o, "rd.svg")) << eval::rd_svg(curves);
    if (const std::size_t inv = eval::size_inversions(points))
        std::printf("warning: %zu size inversion(s) across lambda\n", inv);
    std::printf("wrote rd.csv and rd.svg to %s\n", o.out_dir.c_str());
}

void cmd_masks_dump(const Options& o) {
    if (o.input_path.empty()) throw std::runtime_error("--in is required");
    const codec::CompressedScene s = container::read_container(container::read_file(o.input_path));
    for (std::size_t i = 0; i < 3; ++i) {
        const std::string name = "mask_" + std::to_string(i) + ".pgm";
        eval::write_pgm(out(o, name).string(), s.masks[i]);
        std::printf("%s: %.0f of %zu locations kept\n", name.c_str(), s.masks[i].sum(), s.masks[i].numel());
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Per-scene neural compression of radiance-field feature planes"};
    app.require_subcommand(1);
    app.fallthrough();
    Options o;
    app.add_option("--seed", o.seed, "Random seed");
    app.add_option("--config", o.config_path, "Codec config file (key = value lines)");
    app.add_option("--out-dir", o.out_dir, "Output directory");
    app.add_option("--lambda", o.lambda, "Rate-distortion trade-off (default from preset/config)");
    app.add_option("--preset", o.preset, "Codec size preset")
        ->check(CLI::IsMember({"low", "high", "desk-small", "desk-large"}));
    app.add_flag("--no-mask", o.no_mask, "Disable the masked entropy model");
    app.add_flag("--no-importance", o.no_importance, "Unweighted reconstruction loss");
    app.add_flag("--with-encoder", o.with_encoder, "Infer latents with a convolutional encoder");
    app.add_option("--init", o.init, "Latent initialization")->check(CLI::IsMember({"zeros", "gaussian"}));
    app.add_option("--mode", o.mode, "Training mode")->check(CLI::IsMember({"two-stage", "end-to-end"}));

    auto* generate = app.add_subcommand("generate", "Write the scene file and ground-truth views");
    auto* pretrain = app.add_subcommand("pretrain", "Fit a radiance field to the training views");
    auto* compress = app.add_subcommand("compress", "Compress a pretrained field into a container");
    auto* decompress = app.add_subcommand("decompress", "Decode a container into a field checkpoint");
    auto* render = app.add_subcommand("render", "Render every ring view of a field or container");
    auto* evaluate = app.add_subcommand("evaluate", "Test-view PSNR/SSIM and size of a field or container");
    auto* sweep = app.add_subcommand("rd-sweep", "Compress at several lambdas; write CSV and SVG");
    auto* masks = app.add_subcommand("masks-dump", "Write the container's masks as PGM images");

    for (auto* sub : {generate, pretrain, compress, render, evaluate, sweep})
        sub->add_option("--scene", o.scene_path, "Scene file (default: toy scene from --seed)");
    for (auto* sub : {compress, render, evaluate, sweep})
        sub->add_option("--field", o.field_path, "Field checkpoint");
    for (auto* sub : {decompress, render, evaluate, masks}) sub->add_option("--in", o.input_path, "Container file");
    pretrain->add_option("--iterations", o.pretrain_iterations, "Pretraining iterations");
    sweep->add_option("--lambdas", o.lambdas, "Comma-separated lambda list");
    evaluate->add_flag("--8bit", o.quantize_8bit, "Quantize renders to 8 bits before measuring");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*generate) cmd_generate(o);
        if (*pretrain) cmd_pretrain(o);
        if (*compress) cmd_compress(o);
        if (*decompress) cmd_decompress(o);
        if (*render) cmd_render(o);
        if (*evaluate) cmd_evaluate(o);
        if (*sweep) cmd_rd_sweep(o);
        if (*masks) cmd_masks_dump(o);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
