#include "choreo/checkpoint.hpp"

#include "choreo/error.hpp"
#include "choreo/pose_io.hpp"
#include "choreo/tensor_io.hpp"

#include <json.hpp>

#include <array>
#include <fstream>
#include <sstream>

namespace choreo {

namespace {

using nlohmann::json;

constexpr std::array<char, 4> kMagic{'L', '2', 'D', 'C'};
const std::string kModelPrefix = "model/";
const std::string kFirstMomentPrefix = "adam.m/";
const std::string kSecondMomentPrefix = "adam.v/";

json config_to_json(const ModelConfig& c) {
    return {{"skeleton_dim", c.skeleton_dim},         {"mel_dim", c.mel_dim},
            {"encoder_channels", c.encoder_channels}, {"decoder_channels", c.decoder_channels},
            {"encoder_dilations", c.encoder_dilations}, {"decoder_dilations", c.decoder_dilations},
            {"decoder_tail_layers", c.decoder_tail_layers}};
}

ModelConfig config_from_json(const json& j) {
    ModelConfig c;
    c.skeleton_dim = j.at("skeleton_dim").get<std::size_t>();
    c.mel_dim = j.at("mel_dim").get<std::size_t>();
    c.encoder_channels = j.at("encoder_channels").get<std::size_t>();
    c.decoder_channels = j.at("decoder_channels").get<std::size_t>();
    c.encoder_dilations = j.at("encoder_dilations").get<std::vector<std::size_t>>();
    c.decoder_dilations = j.at("decoder_dilations").get<std::vector<std::size_t>>();
    c.decoder_tail_layers = j.at("decoder_tail_layers").get<std::size_t>();
    return c;
}

bool starts_with(const std::string& s, const std::string& prefix) { return s.rfind(prefix, 0) == 0; }

}  // namespace

void write_tensor_archive(std::ostream& out, const NamedTensors<float>& tensors) {
    out.write(kMagic.data(), kMagic.size());
    detail::write_u32(out, kCheckpointVersion);
    detail::write_u32(out, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& [name, tensor] : tensors) {
        detail::write_u32(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_l2d(out, tensor);
    }
    if (!out) throw IoError("failed writing L2DC archive");
}

NamedTensors<float> read_tensor_archive(std::istream& in) {
    std::array<char, 4> magic{};
    if (!in.read(magic.data(), 4) || magic != kMagic) throw FormatError("missing L2DC magic");
    const auto version = detail::read_u32(in);
    if (version != kCheckpointVersion) throw FormatError("unsupported L2DC version " + std::to_string(version));
    const auto count = detail::read_u32(in);
    NamedTensors<float> out;
    for (std::uint32_t n = 0; n < count; ++n) {
        const auto len = detail::read_u32(in);
        if (len > 4096) throw FormatError("L2DC tensor name too long");
        std::string name(len, '\0');
        if (!in.read(name.data(), len)) throw FormatError("truncated L2DC tensor name");
        if (!out.emplace(name, read_l2d(in)).second) throw FormatError("duplicate L2DC tensor '" + name + "'");
    }
    return out;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
    checkpoint.model.validate();
    NamedTensors<float> tensors;
    for (const auto& [name, t] : checkpoint.model.tensors) tensors.emplace(kModelPrefix + name, t);

    json meta = {
        {"format", "L2DC"},
        {"version", kCheckpointVersion},
        {"model", config_to_json(checkpoint.model.config)},
        {"norm_meta",
         {{"x_min", checkpoint.corpus_norm.x_min},
          {"x_max", checkpoint.corpus_norm.x_max},
          {"y_min", checkpoint.corpus_norm.y_min},
          {"y_max", checkpoint.corpus_norm.y_max}}},
        {"mean_pose", checkpoint.mean_pose},
        {"fps", checkpoint.fps},
        {"sample_rate", checkpoint.sample_rate},
        {"hyperparameters", checkpoint.hyperparameters},
    };
    if (checkpoint.optimizer) {
        const auto& adam = checkpoint.optimizer->adam;
        for (const auto& [name, t] : adam.first_moment) tensors.emplace(kFirstMomentPrefix + name, t);
        for (const auto& [name, t] : adam.second_moment) tensors.emplace(kSecondMomentPrefix + name, t);
        meta["optimizer"] = {{"step", adam.step},
                             {"learning_rate", adam.config.learning_rate},
                             {"beta1", adam.config.beta1},
                             {"beta2", adam.config.beta2},
                             {"epsilon", adam.config.epsilon},
                             {"rng_state", checkpoint.optimizer->rng_state}};
    }

    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + path.string() + " for writing");
        write_tensor_archive(out, tensors);
    }
    std::ofstream side(sidecar_path(path), std::ios::trunc);
    if (!side) throw IoError("cannot open " + sidecar_path(path).string() + " for writing");
    side << meta.dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    NamedTensors<float> tensors;
    {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot open " + path.string());
        try {
            tensors = read_tensor_archive(in);
        } catch (const FormatError& e) {
            throw FormatError(path.string() + ": " + e.what());
        }
    }
    std::ifstream side(sidecar_path(path));
    if (!side) throw IoError("missing checkpoint sidecar " + sidecar_path(path).string());

    Checkpoint ck;
    try {
        const json meta = json::parse(side);
        ck.model.config = config_from_json(meta.at("model"));
        const auto& n = meta.at("norm_meta");
        ck.corpus_norm = {n.at("x_min").get<double>(), n.at("x_max").get<double>(), n.at("y_min").get<double>(),
                          n.at("y_max").get<double>()};
        ck.mean_pose = meta.at("mean_pose").get<std::vector<float>>();
        ck.fps = meta.at("fps").get<double>();
        ck.sample_rate = meta.at("sample_rate").get<double>();
        ck.hyperparameters = meta.value("hyperparameters", std::map<std::string, double>{});
        if (meta.contains("optimizer")) {
            const auto& o = meta.at("optimizer");
            OptimizerSnapshot snap;
            snap.adam.step = o.at("step").get<std::uint64_t>();
            snap.adam.config = {o.at("learning_rate").get<double>(), o.at("beta1").get<double>(),
                                o.at("beta2").get<double>(), o.at("epsilon").get<double>()};
            snap.rng_state = o.at("rng_state").get<std::string>();
            ck.optimizer = std::move(snap);
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(sidecar_path(path).string() + ": " + e.what());
    }

    for (auto& [name, t] : tensors) {
        if (starts_with(name, kModelPrefix)) {
            ck.model.tensors.emplace(name.substr(kModelPrefix.size()), std::move(t));
        } else if (ck.optimizer && starts_with(name, kFirstMomentPrefix)) {
            ck.optimizer->adam.first_moment.emplace(name.substr(kFirstMomentPrefix.size()), std::move(t));
        } else if (ck.optimizer && starts_with(name, kSecondMomentPrefix)) {
            ck.optimizer->adam.second_moment.emplace(name.substr(kSecondMomentPrefix.size()), std::move(t));
        } else {
            throw FormatError(path.string() + ": unexpected tensor '" + name + "'");
        }
    }
    ck.model.validate();
    if (ck.mean_pose.size() != ck.model.config.skeleton_dim) {
        throw FormatError(path.string() + ": mean pose has wrong length");
    }
    return ck;
}

}  // namespace choreo
