#include "gridcodec/codec/config.hpp"

#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace gridcodec::codec {

void CodecConfig::validate() const {
    if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
    if (iterations == 0) throw std::invalid_argument("iterations must be positive");
    if (latent_channels == 0 || hidden_channels == 0) throw std::invalid_argument("channel counts must be positive");
    if (batch_rays == 0) throw std::invalid_argument("batch_rays must be positive");
    if (!(tau_start > 0.0 && tau_end > 0.0)) throw std::invalid_argument("temperatures must be positive");
}

CodecConfig preset(const std::string& name) {
    CodecConfig c;
    c.name = name;
    if (name == "high") {
        c.latent_channels = 192;
        c.hidden_channels = 96;
    } else if (name == "low") {
        c.latent_channels = 384;
        c.hidden_channels = 192;
    } else if (name == "desk-small") {
        c.latent_channels = 32;
        c.hidden_channels = 16;
        c.iterations = 600;
    } else if (name == "desk-large") {
        c.latent_channels = 64;
        c.hidden_channels = 32;
        c.iterations = 1000;
    } else {
        throw std::invalid_argument("unknown preset '" + name + "'");
    }
    if (name.starts_with("desk")) {
        // Few iterations: latents must move fast to outgrow the unit quantization step.
        c.latent_lr = 0.3;
        c.network_lr = 1e-2;
    }
    return c;
}

void apply_config_text(CodecConfig& c, std::istream& in) {
    auto size = [](std::size_t& field) { return [&field](std::istream& v) { v >> field; }; };
    auto real = [](double& field) { return [&field](std::istream& v) { v >> field; }; };
    auto flag = [](bool& field) { return [&field](std::istream& v) { v >> std::boolalpha >> field; }; };
    const std::map<std::string, std::function<void(std::istream&)>> setters{
        {"latent_channels", size(c.latent_channels)},
        {"hidden_channels", size(c.hidden_channels)},
        {"lambda", real(c.lambda)},
        {"iterations", size(c.iterations)},
        {"batch_rays", size(c.batch_rays)},
        {"latent_lr", real(c.latent_lr)},
        {"network_lr", real(c.network_lr)},
        {"lr_end_ratio", real(c.lr_end_ratio)},
        {"use_mask", flag(c.use_mask)},
        {"use_importance", flag(c.use_importance)},
        {"use_encoder", flag(c.use_encoder)},
        {"mask_logit_bias", real(c.mask_logit_bias)},
        {"gaussian_init_std", real(c.gaussian_init_std)},
        {"tau_start", real(c.tau_start)},
        {"tau_end", real(c.tau_end)},
        {"seed", [&c](std::istream& v) { v >> c.seed; }},
        {"init", [&c](std::istream& v) { std::string s; v >> s; c.init = parse_latent_init(s); }},
        {"mode", [&c](std::istream& v) { std::string s; v >> s; c.mode = parse_training_mode(s); }},
    };
    std::string line;
    while (std::getline(in, line)) {
        line = line.substr(0, line.find('#'));
        const auto eq = line.find('=');
        std::istringstream key_in(line.substr(0, eq));
        std::string key;
        if (!(key_in >> key)) continue;
        if (eq == std::string::npos) throw std::invalid_argument("config line without '=': " + line);
        const auto it = setters.find(key);
        if (it == setters.end()) throw std::invalid_argument("unknown config key '" + key + "'");
        std::istringstream value(line.substr(eq + 1));
        it->second(value);
        std::string rest;
        if (value.fail() || value >> rest) throw std::invalid_argument("bad value for '" + key + "'");
    }
}

std::string to_string(LatentInit v) { return v == LatentInit::zeros ? "zeros" : "gaussian"; }
std::string to_string(TrainingMode v) { return v == TrainingMode::two_stage ? "two-stage" : "end-to-end"; }

LatentInit parse_latent_init(const std::string& s) {
    if (s == "zeros") return LatentInit::zeros;
    if (s == "gaussian") return LatentInit::gaussian;
    throw std::invalid_argument("unknown latent init '" + s + "'");
}

TrainingMode parse_training_mode(const std::string& s) {
    if (s == "two-stage") return TrainingMode::two_stage;
    if (s == "end-to-end") return TrainingMode::end_to_end;
    throw std::invalid_argument("unknown training mode '" + s + "'");
}

}  // namespace gridcodec::codec
