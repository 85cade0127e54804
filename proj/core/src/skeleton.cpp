#include "choreo/skeleton.hpp"

#include "choreo/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace choreo {

namespace {

constexpr std::size_t idx(Joint j) { return static_cast<std::size_t>(j); }

}  // namespace

void SkeletonTopology::validate() const {
    // Union-find: 14 edges over 15 nodes with no cycle is a spanning tree.
    std::array<std::size_t, kJointCount> parent{};
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    };
    for (const auto& [a, b] : limbs) {
        if (a >= kJointCount || b >= kJointCount) throw InvalidArgument("topology: joint index out of range");
        const auto ra = find(a);
        const auto rb = find(b);
        if (ra == rb) throw InvalidArgument("topology: limbs contain a cycle");
        parent[ra] = rb;
    }
    const auto root = find(0);
    for (std::size_t j = 1; j < kJointCount; ++j) {
        if (find(j) != root) throw InvalidArgument("topology: limbs do not connect every joint");
    }
}

const SkeletonTopology& default_topology() {
    static const SkeletonTopology topology = [] {
        SkeletonTopology t{
            {"Head", "Neck", "RShoulder", "RElbow", "RWrist", "LShoulder", "LElbow", "LWrist",
             "Chest", "RHip", "RKnee", "RAnkle", "LHip", "LKnee", "LAnkle"},
            {{
                {idx(Joint::Head), idx(Joint::Neck)},
                {idx(Joint::Neck), idx(Joint::RShoulder)},
                {idx(Joint::RShoulder), idx(Joint::RElbow)},
                {idx(Joint::RElbow), idx(Joint::RWrist)},
                {idx(Joint::Neck), idx(Joint::LShoulder)},
                {idx(Joint::LShoulder), idx(Joint::LElbow)},
                {idx(Joint::LElbow), idx(Joint::LWrist)},
                {idx(Joint::Neck), idx(Joint::Chest)},
                {idx(Joint::Chest), idx(Joint::RHip)},
                {idx(Joint::RHip), idx(Joint::RKnee)},
                {idx(Joint::RKnee), idx(Joint::RAnkle)},
                {idx(Joint::Chest), idx(Joint::LHip)},
                {idx(Joint::LHip), idx(Joint::LKnee)},
                {idx(Joint::LKnee), idx(Joint::LAnkle)},
            }}};
        t.validate();
        return t;
    }();
    return topology;
}

std::vector<JointFrame> interpolate_missing(std::vector<JointFrame> frames) {
    const std::size_t n = frames.size();
    for (std::size_t j = 0; j < kJointCount; ++j) {
        std::vector<std::size_t> present;
        for (std::size_t t = 0; t < n; ++t) {
            if (frames[t][j].present) present.push_back(t);
        }
        if (present.empty()) {
            throw DegenerateInputError("interpolate_missing: joint " + std::string(default_topology().joint_names[j]) +
                                       " is never detected");
        }
        if (present.size() == n) continue;

        for (std::size_t t = 0; t < present.front(); ++t) {
            frames[t][j] = {frames[present.front()][j].x, frames[present.front()][j].y, true};
        }
        for (std::size_t t = present.back() + 1; t < n; ++t) {
            frames[t][j] = {frames[present.back()][j].x, frames[present.back()][j].y, true};
        }
        for (std::size_t p = 0; p + 1 < present.size(); ++p) {
            const std::size_t a = present[p];
            const std::size_t b = present[p + 1];
            const JointObservation& va = frames[a][j];
            const JointObservation& vb = frames[b][j];
            for (std::size_t t = a + 1; t < b; ++t) {
                const double w = static_cast<double>(t - a) / static_cast<double>(b - a);
                frames[t][j] = {va.x + w * (vb.x - va.x), va.y + w * (vb.y - va.y), true};
            }
        }
    }
    return frames;
}

std::pair<std::vector<JointFrame>, NormMeta> minmax_normalize(const std::vector<JointFrame>& frames) {
    if (frames.empty()) throw InvalidArgument("minmax_normalize: no frames");
    NormMeta meta{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
                  std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const auto& frame : frames) {
        for (const auto& j : frame) {
            if (!j.present) throw InvalidArgument("minmax_normalize: missing joint; interpolate first");
            meta.x_min = std::min(meta.x_min, j.x);
            meta.x_max = std::max(meta.x_max, j.x);
            meta.y_min = std::min(meta.y_min, j.y);
            meta.y_max = std::max(meta.y_max, j.y);
        }
    }
    if (!(meta.x_max > meta.x_min)) throw DegenerateInputError("minmax_normalize: x axis has no extent");
    if (!(meta.y_max > meta.y_min)) throw DegenerateInputError("minmax_normalize: y axis has no extent");

    std::vector<JointFrame> out = frames;
    for (auto& frame : out) {
        for (auto& j : frame) {
            j.x = (j.x - meta.x_min) / (meta.x_max - meta.x_min);
            j.y = (j.y - meta.y_min) / (meta.y_max - meta.y_min);
        }
    }
    return {std::move(out), meta};
}

PoseCoords denormalize(const PoseCoords& normalized, const NormMeta& meta) {
    PoseCoords out{};
    for (std::size_t j = 0; j < kJointCount; ++j) {
        out[2 * j] = normalized[2 * j] * (meta.x_max - meta.x_min) + meta.x_min;
        out[2 * j + 1] = normalized[2 * j + 1] * (meta.y_max - meta.y_min) + meta.y_min;
    }
    return out;
}

PoseCoords normalize(const PoseCoords& raw, const NormMeta& meta) {
    PoseCoords out{};
    for (std::size_t j = 0; j < kJointCount; ++j) {
        out[2 * j] = (raw[2 * j] - meta.x_min) / (meta.x_max - meta.x_min);
        out[2 * j + 1] = (raw[2 * j + 1] - meta.y_min) / (meta.y_max - meta.y_min);
    }
    return out;
}

std::array<double, kLimbCount> limb_lengths(std::span<const double, kCoordDims> coords,
                                            const SkeletonTopology& topology) {
    std::array<double, kLimbCount> out{};
    for (std::size_t e = 0; e < kLimbCount; ++e) {
        const auto [a, b] = topology.limbs[e];
        out[e] = std::hypot(coords[2 * a] - coords[2 * b], coords[2 * a + 1] - coords[2 * b + 1]);
    }
    return out;
}

PoseCoords SkeletonSequence::coords(std::size_t t) const {
    PoseCoords out{};
    for (std::size_t c = 0; c < kCoordDims; ++c) out[c] = frames(c, t);
    return out;
}

std::array<float, kFrameDims> frame_vector(const PoseCoords& coords, const SkeletonTopology& topology) {
    std::array<float, kFrameDims> out{};
    for (std::size_t c = 0; c < kCoordDims; ++c) out[c] = static_cast<float>(coords[c]);
    const auto lengths = limb_lengths(coords, topology);
    for (std::size_t e = 0; e < kLimbCount; ++e) {
        out[kCoordDims + e] = static_cast<float>(std::min(1.0, lengths[e] * kLimbScale));
    }
    return out;
}

SkeletonSequence build_sequence(const std::vector<JointFrame>& normalized, const NormMeta& meta, double fps,
                                const SkeletonTopology& topology) {
    if (normalized.empty()) throw InvalidArgument("build_sequence: no frames");
    SkeletonSequence seq{Tensor(kFrameDims, normalized.size()), meta, fps};
    for (std::size_t t = 0; t < normalized.size(); ++t) {
        PoseCoords coords{};
        for (std::size_t j = 0; j < kJointCount; ++j) {
            coords[2 * j] = normalized[t][j].x;
            coords[2 * j + 1] = normalized[t][j].y;
        }
        const auto v = frame_vector(coords, topology);
        seq.frames.set_column(t, v);
    }
    return seq;
}

SkeletonSequence skeleton_pipeline(const std::vector<JointFrame>& raw, double fps) {
    auto filled = interpolate_missing(raw);
    auto [normalized, meta] = minmax_normalize(filled);
    return build_sequence(normalized, meta, fps);
}

}  // namespace choreo
