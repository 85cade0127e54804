#pragma once

#include "choreo/tape.hpp"
#include "choreo/tensor.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace choreo {

/// Widths and dilation schedules of the encoder-decoder network.
struct ModelConfig {
    std::size_t skeleton_dim = 44;
    std::size_t mel_dim = 80;
    std::size_t encoder_channels = 256;
    std::size_t decoder_channels = 128;
    std::vector<std::size_t> encoder_dilations{1, 3, 9, 27, 1, 3, 9, 27, 3, 3};
    std::vector<std::size_t> decoder_dilations{1, 3, 9, 27, 3, 3};
    std::size_t decoder_tail_layers = 3;

    /// Same schedules at smaller widths (encoder must be twice the decoder).
    static ModelConfig with_widths(std::size_t encoder_channels, std::size_t decoder_channels);

    /// Throws InvalidArgument on zero sizes or encoder != 2 * decoder width.
    void validate() const;
    /// Frames of input that can reach one output frame:
    /// 1 + 2 * (sum of encoder dilations + sum of decoder dilations).
    std::size_t receptive_field() const;

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Name, shape and fan-in of one parameter tensor.
struct ParamShape {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t fan_in = 0;
};

std::vector<ParamShape> parameter_layout(const ModelConfig& config);

struct ModelParams {
    ModelConfig config;
    NamedTensors<float> tensors;

    /// Uniform(-sqrt(1/fan_in), sqrt(1/fan_in)) for weights and biases.
    static ModelParams initialize(const ModelConfig& config, std::uint64_t seed);
    /// Throws unless names and shapes match the layout and values are finite.
    void validate() const;
    std::size_t parameter_count() const;
};

/// Causal dilated highway convolution block:
/// out = tanh(H1) * relu(H2) + (1 - tanh(H1)) * in, [H1; H2] = conv(in).
template <typename T>
struct CdhcBlock {
    std::size_t channels = 0;
    std::size_t dilation = 1;
    Tensor2D<T> weight;  // 2C x 3C
    Tensor2D<T> bias;    // 2C x 1
};

/// Builds the network on a tape. All parameters are registered on
/// construction, so gradients cover the full parameter set.
template <typename T>
class NetworkGraph {
public:
    using Var = typename Tape<T>::Var;

    NetworkGraph(Tape<T>& tape, const ModelConfig& config, const NamedTensors<T>& params);

    Var cdhc(Var input, const std::string& prefix, std::size_t dilation);
    Var encode_skeleton(Var skeleton);
    Var encode_audio(Var mel);
    Var decode(Var skeleton_code, Var audio_code);
    /// Prediction at column t estimates skeleton frame t + 1.
    Var forward(Var skeleton, Var mel);

private:
    Var encode(Var input, const std::string& prefix, std::size_t input_dim);
    Var param(const std::string& name) const;
    Var conv(Var input, const std::string& name, std::size_t kernel, std::size_t dilation);

    Tape<T>& tape_;
    const ModelConfig& config_;
    std::vector<std::pair<std::string, Var>> vars_;
};

template <typename T>
Tensor2D<T> cdhc_forward(const CdhcBlock<T>& block, const Tensor2D<T>& input);

template <typename T>
Tensor2D<T> encode_skeleton(const ModelConfig& config, const NamedTensors<T>& params, const Tensor2D<T>& skeleton);
template <typename T>
Tensor2D<T> encode_audio(const ModelConfig& config, const NamedTensors<T>& params, const Tensor2D<T>& mel);
template <typename T>
Tensor2D<T> decode(const ModelConfig& config, const NamedTensors<T>& params, const Tensor2D<T>& skeleton_code,
                   const Tensor2D<T>& audio_code);
template <typename T>
Tensor2D<T> teacher_forced_forward(const ModelConfig& config, const NamedTensors<T>& params,
                                   const Tensor2D<T>& skeleton, const Tensor2D<T>& mel);

template <typename T>
struct GenerateOptions {
    /// Feed only the last receptive_field() frames to each step. Produces
    /// the same bits as recomputing the whole prefix.
    bool windowed = true;
    /// When set, prefixes are taken from these frames instead of the
    /// model's own outputs (column 0 is then the seed).
    const Tensor2D<T>* teacher = nullptr;
};

/// Autoregressive generation: column 0 is the seed pose, column k is the
/// model's prediction from frames 0..k-1 and mel columns 0..k-1.
template <typename T>
Tensor2D<T> generate(const ModelConfig& config, const NamedTensors<T>& params, std::span<const T> seed_pose,
                     const Tensor2D<T>& mel, const GenerateOptions<T>& options = {});

// float conveniences
Tensor teacher_forced_forward(const ModelParams& params, const Tensor& skeleton, const Tensor& mel);
Tensor generate(const ModelParams& params, std::span<const float> seed_pose, const Tensor& mel,
                const GenerateOptions<float>& options = {});

}  // namespace choreo
