#pragma once

#include "choreo/skeleton.hpp"

#include <filesystem>
#include <vector>

namespace choreo {

/// Keypoints with confidence below this are treated as undetected.
inline constexpr double kMinConfidence = 0.1;

/// Reads one OpenPose-style JSON file per frame from `directory` (frames in
/// filename order). The first person of each frame is mapped from the 18- or
/// 25-keypoint layout onto the 15-joint topology; a frame with no people
/// yields all joints absent.
std::vector<JointFrame> ingest_openpose(const std::filesystem::path& directory);

/// Parses one frame's JSON text (exposed for tests).
JointFrame parse_openpose_frame(const std::string& json_text);

/// Canonical CSV: T rows of 45 columns, (x, y, confidence) per joint in
/// topology order. A non-numeric first line is treated as a header.
std::vector<JointFrame> read_pose_csv(const std::filesystem::path& path);

/// Directory -> OpenPose frames, *.csv -> canonical CSV.
std::vector<JointFrame> read_pose_source(const std::filesystem::path& path);

/// Writes `path` (L2D1, 44 x T) and `path` + ".json" (fps, norm_meta,
/// topology version).
void write_skeleton_sequence(const std::filesystem::path& path, const SkeletonSequence& seq);
/// Reads a sequence; the sidecar is optional (identity norm_meta, 30 fps).
SkeletonSequence read_skeleton_sequence(const std::filesystem::path& path);

/// Coordinate CSV with header x0,y0,...,x14,y14 and one row per frame.
void write_coords_csv(const std::filesystem::path& path, const std::vector<PoseCoords>& rows);
std::vector<PoseCoords> read_coords_csv(const std::filesystem::path& path);

std::filesystem::path sidecar_path(const std::filesystem::path& path);

}  // namespace choreo
