#pragma once

#include "choreo/analysis.hpp"
#include "choreo/skeleton.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace choreo {

/// JSON document with correlogram arrays, peaks and verdicts per axis.
std::string report_to_json(const MotionAutocorrReport& report);

/// Two stacked panels (x, y) plotting the correlogram against lag with
/// vertical lines at the beat lags.
std::string render_correlogram_svg(const MotionAutocorrReport& report);

/// Axis-aligned box shared by every rendered frame.
struct ViewBox {
    double x = 0.0;
    double y = 0.0;
    double width = 1.0;
    double height = 1.0;
};

/// Bounding box of all joints with a margin; degenerate extents fall back to
/// a unit box around the points.
ViewBox fit_view_box(const std::vector<PoseCoords>& poses, double margin_fraction = 0.1);

/// One frame as SVG: a <line> per limb and a <circle> per joint.
std::string render_pose_svg(const PoseCoords& pose, const ViewBox& box,
                            const SkeletonTopology& topology = default_topology());

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace choreo
