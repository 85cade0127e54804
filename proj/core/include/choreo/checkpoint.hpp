#pragma once

#include "choreo/adam.hpp"
#include "choreo/model.hpp"
#include "choreo/skeleton.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace choreo {

// L2DC layout: "L2DC", u32 LE format version, u32 LE tensor count, then per
// tensor a u32 LE byte length + UTF-8 name followed by an embedded L2D1
// tensor. Metadata lives in a JSON sidecar next to the file.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_tensor_archive(std::ostream& out, const NamedTensors<float>& tensors);
NamedTensors<float> read_tensor_archive(std::istream& in);

/// Optimizer and sampler state needed to resume training bit-exactly.
struct OptimizerSnapshot {
    AdamState adam;
    std::string rng_state;
};

struct Checkpoint {
    ModelParams model;
    NormMeta corpus_norm;
    std::vector<float> mean_pose;  // 44 values
    double fps = 30.0;
    double sample_rate = 22050.0;
    std::map<std::string, double> hyperparameters;
    std::optional<OptimizerSnapshot> optimizer;
};

/// Writes `path` and `path` + ".json".
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace choreo
