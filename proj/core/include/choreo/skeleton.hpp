#pragma once

#include "choreo/tensor.hpp"

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace choreo {

inline constexpr std::size_t kJointCount = 15;
inline constexpr std::size_t kLimbCount = 14;
inline constexpr std::size_t kCoordDims = 2 * kJointCount;         // 30
inline constexpr std::size_t kFrameDims = kCoordDims + kLimbCount;  // 44
/// Limb lengths are stored divided by sqrt(2), the unit-square diagonal.
inline constexpr double kLimbScale = 0.70710678118654752440;

enum class Joint : std::size_t {
    Head, Neck, RShoulder, RElbow, RWrist, LShoulder, LElbow, LWrist,
    Chest, RHip, RKnee, RAnkle, LHip, LKnee, LAnkle
};

using Limb = std::pair<std::size_t, std::size_t>;

/// Joint names and the 14-edge limb tree, in storage order.
struct SkeletonTopology {
    static constexpr int kVersion = 1;

    std::array<std::string_view, kJointCount> joint_names;
    std::array<Limb, kLimbCount> limbs;

    /// Throws InvalidArgument unless the limbs form a spanning tree.
    void validate() const;
};

const SkeletonTopology& default_topology();

struct JointObservation {
    double x = 0.0;
    double y = 0.0;
    bool present = false;
};

using JointFrame = std::array<JointObservation, kJointCount>;
/// x0, y0, ..., x14, y14.
using PoseCoords = std::array<double, kCoordDims>;

/// Per-axis extent used for min-max normalization of one clip.
struct NormMeta {
    double x_min = 0.0;
    double x_max = 1.0;
    double y_min = 0.0;
    double y_max = 1.0;

    friend bool operator==(const NormMeta&, const NormMeta&) = default;
};

/// Fills every absent (joint, frame) by linear interpolation in time between
/// the nearest present neighbours; leading/trailing gaps hold the nearest
/// present value. Throws DegenerateInputError if some joint is never present.
std::vector<JointFrame> interpolate_missing(std::vector<JointFrame> frames);

/// Per-axis min-max over all joints and frames. Requires every joint present.
std::pair<std::vector<JointFrame>, NormMeta> minmax_normalize(const std::vector<JointFrame>& frames);

PoseCoords denormalize(const PoseCoords& normalized, const NormMeta& meta);
PoseCoords normalize(const PoseCoords& raw, const NormMeta& meta);

std::array<double, kLimbCount> limb_lengths(std::span<const double, kCoordDims> coords,
                                            const SkeletonTopology& topology = default_topology());

/// 44 x T skeleton features: 30 normalized coordinates, then 14 limb
/// lengths scaled by 1/sqrt(2).
struct SkeletonSequence {
    Tensor frames;
    NormMeta norm;
    double fps = 30.0;

    std::size_t length() const { return frames.frames(); }
    PoseCoords coords(std::size_t t) const;
};

SkeletonSequence build_sequence(const std::vector<JointFrame>& normalized, const NormMeta& meta, double fps,
                                const SkeletonTopology& topology = default_topology());

/// Builds a 44-dim frame vector from 30 normalized coordinates.
std::array<float, kFrameDims> frame_vector(const PoseCoords& coords,
                                           const SkeletonTopology& topology = default_topology());

/// ingest -> interpolate -> normalize -> build.
SkeletonSequence skeleton_pipeline(const std::vector<JointFrame>& raw, double fps);

}  // namespace choreo
