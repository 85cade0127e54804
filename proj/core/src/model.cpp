#include "choreo/model.hpp"

#include "choreo/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace choreo {

namespace {

template <typename T>
typename Tape<T>::Var cdhc_on_tape(Tape<T>& tape, typename Tape<T>::Var input, typename Tape<T>::Var weight,
                                   typename Tape<T>::Var bias, std::size_t dilation) {
    const std::size_t channels = tape.value(input).channels();
    const ConvSpec spec{channels, 2 * channels, 3, dilation};
    const auto h = tape.conv1d(input, weight, bias, spec);
    const auto gate = tape.activate(tape.slice_channels(h, 0, channels), Activation::Tanh);
    const auto body = tape.activate(tape.slice_channels(h, channels, channels), Activation::Relu);
    const auto carry = tape.scale_shift(gate, T{-1}, T{1});
    return tape.add(tape.multiply(gate, body), tape.multiply(carry, input));
}

void add_layer(std::vector<ParamShape>& out, const std::string& name, std::size_t rows, std::size_t in,
               std::size_t kernel) {
    out.push_back({name + ".weight", rows, in * kernel, in * kernel});
    out.push_back({name + ".bias", rows, 1, in * kernel});
}

std::string block_name(const std::string& prefix, std::size_t i) { return prefix + ".block" + std::to_string(i); }

}  // namespace

ModelConfig ModelConfig::with_widths(std::size_t encoder_channels, std::size_t decoder_channels) {
    ModelConfig c;
    c.encoder_channels = encoder_channels;
    c.decoder_channels = decoder_channels;
    return c;
}

void ModelConfig::validate() const {
    if (skeleton_dim == 0 || mel_dim == 0 || encoder_channels == 0 || decoder_channels == 0) {
        throw InvalidArgument("model config: widths must be positive");
    }
    if (encoder_channels != 2 * decoder_channels) {
        throw InvalidArgument("model config: encoder width must be twice the decoder width");
    }
    if (encoder_dilations.empty() || decoder_dilations.empty()) {
        throw InvalidArgument("model config: empty dilation schedule");
    }
    for (std::size_t d : encoder_dilations) {
        if (d == 0) throw InvalidArgument("model config: zero dilation");
    }
    for (std::size_t d : decoder_dilations) {
        if (d == 0) throw InvalidArgument("model config: zero dilation");
    }
}

std::size_t ModelConfig::receptive_field() const {
    const auto enc = std::accumulate(encoder_dilations.begin(), encoder_dilations.end(), std::size_t{0});
    const auto dec = std::accumulate(decoder_dilations.begin(), decoder_dilations.end(), std::size_t{0});
    return 1 + 2 * (enc + dec);
}

std::vector<ParamShape> parameter_layout(const ModelConfig& config) {
    config.validate();
    const std::size_t E = config.encoder_channels;
    const std::size_t D = config.decoder_channels;
    std::vector<ParamShape> out;
    for (const auto& [prefix, in] : {std::pair<std::string, std::size_t>{"skeleton_encoder", config.skeleton_dim},
                                     std::pair<std::string, std::size_t>{"audio_encoder", config.mel_dim}}) {
        add_layer(out, prefix + ".stem0", E, in, 1);
        add_layer(out, prefix + ".stem1", E, E, 1);
        add_layer(out, prefix + ".stem2", E, E, 1);
        for (std::size_t i = 0; i < config.encoder_dilations.size(); ++i) add_layer(out, block_name(prefix, i), 2 * E, E, 3);
    }
    add_layer(out, "decoder.fuse_h1", D, E, 1);
    add_layer(out, "decoder.fuse_h2", D, E, 1);
    for (std::size_t i = 0; i < config.decoder_dilations.size(); ++i) add_layer(out, block_name("decoder", i), 2 * D, D, 3);
    for (std::size_t i = 0; i < config.decoder_tail_layers; ++i) {
        add_layer(out, "decoder.tail" + std::to_string(i), D, D, 1);
    }
    add_layer(out, "decoder.output", config.skeleton_dim, D, 1);
    return out;
}

ModelParams ModelParams::initialize(const ModelConfig& config, std::uint64_t seed) {
    ModelParams p{config, {}};
    std::mt19937_64 rng(seed);
    for (const auto& shape : parameter_layout(config)) {
        const double bound = std::sqrt(1.0 / static_cast<double>(shape.fan_in));
        std::uniform_real_distribution<double> dist(-bound, bound);
        Tensor t(shape.rows, shape.cols);
        for (auto& v : t.data()) v = static_cast<float>(dist(rng));
        p.tensors.emplace(shape.name, std::move(t));
    }
    return p;
}

void ModelParams::validate() const {
    const auto layout = parameter_layout(config);
    if (layout.size() != tensors.size()) throw FormatError("model params: unexpected parameter count");
    for (const auto& shape : layout) {
        const auto it = tensors.find(shape.name);
        if (it == tensors.end()) throw FormatError("model params: missing '" + shape.name + "'");
        if (it->second.channels() != shape.rows || it->second.frames() != shape.cols) {
            throw DimensionError("model params: wrong shape for '" + shape.name + "'");
        }
        require_finite(it->second, shape.name.c_str());
    }
}

std::size_t ModelParams::parameter_count() const {
    std::size_t n = 0;
    for (const auto& [name, t] : tensors) n += t.size();
    return n;
}

template <typename T>
NetworkGraph<T>::NetworkGraph(Tape<T>& tape, const ModelConfig& config, const NamedTensors<T>& params)
    : tape_(tape), config_(config) {
    for (const auto& shape : parameter_layout(config)) {
        const auto it = params.find(shape.name);
        if (it == params.end()) throw InvalidArgument("network: missing parameter '" + shape.name + "'");
        if (it->second.channels() != shape.rows || it->second.frames() != shape.cols) {
            throw DimensionError("network: wrong shape for '" + shape.name + "'");
        }
        vars_.emplace_back(shape.name, tape_.parameter(shape.name, it->second));
    }
}

template <typename T>
typename NetworkGraph<T>::Var NetworkGraph<T>::param(const std::string& name) const {
    for (const auto& [n, v] : vars_) {
        if (n == name) return v;
    }
    throw InvalidArgument("network: unknown parameter '" + name + "'");
}

template <typename T>
typename NetworkGraph<T>::Var NetworkGraph<T>::conv(Var input, const std::string& name, std::size_t kernel,
                                                    std::size_t dilation) {
    const auto w = param(name + ".weight");
    const std::size_t in = tape_.value(input).channels();
    const ConvSpec spec{in, tape_.value(w).channels(), kernel, dilation};
    return tape_.conv1d(input, w, param(name + ".bias"), spec);
}

template <typename T>
typename NetworkGraph<T>::Var NetworkGraph<T>::cdhc(Var input, const std::string& prefix, std::size_t dilation) {
    return cdhc_on_tape(tape_, input, param(prefix + ".weight"), param(prefix + ".bias"), dilation);
}

template <typename T>
typename NetworkGraph<T>::Var NetworkGraph<T>::encode(Var input, const std::string& prefix, std::size_t input_dim) {
    if (tape_.value(input).channels() != input_dim) {
        throw DimensionError(prefix + ": expected " + std::to_string(input_dim) + " input channels, got " +
                             std::to_string(tape_.value(input).channels()));
    }
    auto x = conv(input, prefix + ".stem0", 1, 1);
    x = conv(x, prefix + ".stem1", 1, 1);
    x = conv(x, prefix + ".stem2", 1, 1);
    for (std::size_t i = 0; i < config_.encoder_dilations.size(); ++i) {
        x = cdhc(x, block_name(prefix, i), config_.encoder_dilations[i]);
    }
    return x;
}

template <typename T>
typename NetworkGraph<T>::Var NetworkGraph<T>::encode_skeleton(Var skeleton) {
    return encode(skeleton, "skeleton_encoder", config_.skeleton_dim);
}

template <typename T>
typename NetworkGraph<T>::Var NetworkGraph<T>::encode_audio(Var mel) {
    return encode(mel, "audio_encoder", config_.mel_dim);
}

template <typename T>
typename NetworkGraph<T>::Var NetworkGraph<T>::decode(Var skeleton_code, Var audio_code) {
    const auto& es = tape_.value(skeleton_code);
    const auto& ea = tape_.value(audio_code);
    const std::size_t E = config_.encoder_channels;
    const std::size_t D = config_.decoder_channels;
    if (es.channels() != E || ea.channels() != E) throw DimensionError("decode: encodings must have encoder width");
    if (es.frames() != ea.frames()) throw DimensionError("decode: encodings differ in length");

    const auto h1 = tape_.add(conv(skeleton_code, "decoder.fuse_h1", 1, 1), tape_.slice_channels(audio_code, 0, D));
    const auto h2 = tape_.add(conv(skeleton_code, "decoder.fuse_h2", 1, 1), tape_.slice_channels(audio_code, D, D));
    auto x = tape_.multiply(tape_.activate(h1, Activation::Sigmoid), tape_.activate(h2, Activation::Tanh));
    for (std::size_t i = 0; i < config_.decoder_dilations.size(); ++i) {
        x = cdhc(x, block_name("decoder", i), config_.decoder_dilations[i]);
    }
    for (std::size_t i = 0; i < config_.decoder_tail_layers; ++i) {
        x = tape_.activate(conv(x, "decoder.tail" + std::to_string(i), 1, 1), Activation::Tanh);
    }
    return tape_.activate(conv(x, "decoder.output", 1, 1), Activation::Sigmoid);
}

template <typename T>
typename NetworkGraph<T>::Var NetworkGraph<T>::forward(Var skeleton, Var mel) {
    if (tape_.value(skeleton).frames() != tape_.value(mel).frames()) {
        throw DimensionError("forward: skeleton and mel differ in length");
    }
    return decode(encode_skeleton(skeleton), encode_audio(mel));
}

template <typename T>
Tensor2D<T> cdhc_forward(const CdhcBlock<T>& block, const Tensor2D<T>& input) {
    if (input.channels() != block.channels) throw DimensionError("cdhc: channel mismatch");
    Tape<T> tape(false);
    const auto x = tape.constant(input);
    const auto w = tape.parameter("weight", block.weight);
    const auto b = tape.parameter("bias", block.bias);
    return tape.value(cdhc_on_tape(tape, x, w, b, block.dilation));
}

template <typename T>
Tensor2D<T> encode_skeleton(const ModelConfig& config, const NamedTensors<T>& params, const Tensor2D<T>& skeleton) {
    Tape<T> tape(false);
    NetworkGraph<T> net(tape, config, params);
    return tape.value(net.encode_skeleton(tape.constant(skeleton)));
}

template <typename T>
Tensor2D<T> encode_audio(const ModelConfig& config, const NamedTensors<T>& params, const Tensor2D<T>& mel) {
    Tape<T> tape(false);
    NetworkGraph<T> net(tape, config, params);
    return tape.value(net.encode_audio(tape.constant(mel)));
}

template <typename T>
Tensor2D<T> decode(const ModelConfig& config, const NamedTensors<T>& params, const Tensor2D<T>& skeleton_code,
                   const Tensor2D<T>& audio_code) {
    Tape<T> tape(false);
    NetworkGraph<T> net(tape, config, params);
    return tape.value(net.decode(tape.constant(skeleton_code), tape.constant(audio_code)));
}

template <typename T>
Tensor2D<T> teacher_forced_forward(const ModelConfig& config, const NamedTensors<T>& params,
                                   const Tensor2D<T>& skeleton, const Tensor2D<T>& mel) {
    Tape<T> tape(false);
    NetworkGraph<T> net(tape, config, params);
    return tape.value(net.forward(tape.constant(skeleton), tape.constant(mel)));
}

template <typename T>
Tensor2D<T> generate(const ModelConfig& config, const NamedTensors<T>& params, std::span<const T> seed_pose,
                     const Tensor2D<T>& mel, const GenerateOptions<T>& options) {
    if (seed_pose.size() != config.skeleton_dim) throw DimensionError("generate: seed pose has wrong length");
    if (mel.channels() != config.mel_dim) throw DimensionError("generate: mel has wrong channel count");
    for (T v : seed_pose) {
        if (!(v >= T{0} && v <= T{1})) throw InvalidArgument("generate: seed pose must lie in [0, 1]");
    }
    const std::size_t total = mel.frames();
    if (options.teacher != nullptr &&
        (options.teacher->channels() != config.skeleton_dim || options.teacher->frames() < total)) {
        throw DimensionError("generate: teacher frames do not cover the mel");
    }

    Tensor2D<T> out(config.skeleton_dim, total);
    out.set_column(0, seed_pose);
    const Tensor2D<T>& history = options.teacher != nullptr ? *options.teacher : out;
    const std::size_t field = config.receptive_field();

    for (std::size_t k = 1; k < total; ++k) {
        const std::size_t start = options.windowed && k > field ? k - field : 0;
        const std::size_t len = k - start;
        Tape<T> tape(false);
        NetworkGraph<T> net(tape, config, params);
        const auto skel = tape.constant(history.slice_frames(start, len));
        const auto audio = tape.constant(mel.slice_frames(start, len));
        const auto& pred = tape.value(net.forward(skel, audio));
        for (std::size_t c = 0; c < config.skeleton_dim; ++c) out(c, k) = pred(c, len - 1);
    }
    return out;
}

Tensor teacher_forced_forward(const ModelParams& params, const Tensor& skeleton, const Tensor& mel) {
    return teacher_forced_forward(params.config, params.tensors, skeleton, mel);
}

Tensor generate(const ModelParams& params, std::span<const float> seed_pose, const Tensor& mel,
                const GenerateOptions<float>& options) {
    return generate(params.config, params.tensors, seed_pose, mel, options);
}

#define CHOREO_INSTANTIATE_MODEL(T)                                                                              \
    template class NetworkGraph<T>;                                                                              \
    template Tensor2D<T> cdhc_forward(const CdhcBlock<T>&, const Tensor2D<T>&);                                  \
    template Tensor2D<T> encode_skeleton(const ModelConfig&, const NamedTensors<T>&, const Tensor2D<T>&);        \
    template Tensor2D<T> encode_audio(const ModelConfig&, const NamedTensors<T>&, const Tensor2D<T>&);           \
    template Tensor2D<T> decode(const ModelConfig&, const NamedTensors<T>&, const Tensor2D<T>&,                  \
                                const Tensor2D<T>&);                                                             \
    template Tensor2D<T> teacher_forced_forward(const ModelConfig&, const NamedTensors<T>&, const Tensor2D<T>&,  \
                                                const Tensor2D<T>&);                                             \
    template Tensor2D<T> generate(const ModelConfig&, const NamedTensors<T>&, std::span<const T>,                \
                                  const Tensor2D<T>&, const GenerateOptions<T>&);

CHOREO_INSTANTIATE_MODEL(float)
CHOREO_INSTANTIATE_MODEL(double)

#undef CHOREO_INSTANTIATE_MODEL

}  // namespace choreo
