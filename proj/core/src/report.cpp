#include "choreo/report.hpp"

#include "choreo/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace choreo {

namespace {

using nlohmann::json;

json axis_json(const AxisReport& axis) {
    if (!axis.correlogram) return {{"degenerate", true}};
    const auto& v = axis.verdict;
    json verdict = {{"status", to_string(v.status)}};
    if (v.status != AlignmentStatus::NoPeak) {
        verdict["peak_index"] = v.peak_index;
        verdict["peak_lag"] = v.peak_lag;
        verdict["beat_multiple"] = v.beat_multiple;
        verdict["offset"] = v.offset;
    }
    return {{"degenerate", false},
            {"correlogram", axis.correlogram->values},
            {"peaks", axis.correlogram->peak_lags},
            {"verdict", verdict}};
}

std::vector<double> beat_lags(const MotionAutocorrReport& report) {
    std::vector<double> lags;
    const double limit = static_cast<double>(report.max_lag);
    if (!report.grid.beats.empty()) {
        for (double b : report.grid.beats) {
            const double lag = b - report.grid.beats.front();
            if (lag > 0.0 && lag <= limit) lags.push_back(lag);
        }
    } else {
        for (double lag = report.grid.period; lag <= limit; lag += report.grid.period) lags.push_back(lag);
    }
    return lags;
}

std::string fmt(double v) {
    std::ostringstream ss;
    ss.precision(6);
    ss << v;
    return ss.str();
}

}  // namespace

std::string report_to_json(const MotionAutocorrReport& report) {
    json doc = {
        {"fps", report.fps},
        {"max_lag", report.max_lag},
        {"tolerance", report.tolerance},
        {"beat_period", report.grid.period},
        {"beat_source", report.grid.beats.empty() ? "bpm" : "beats"},
        {"axes", {{"x", axis_json(report.x)}, {"y", axis_json(report.y)}}},
    };
    if (!report.grid.beats.empty()) doc["beats"] = report.grid.beats;
    return doc.dump(2) + "\n";
}

std::string render_correlogram_svg(const MotionAutocorrReport& report) {
    constexpr double kWidth = 640.0;
    constexpr double kPanel = 200.0;
    constexpr double kPad = 30.0;
    const double lag_max = std::max<double>(1.0, static_cast<double>(report.max_lag));
    const auto lags = beat_lags(report);

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << 2 * (kPanel + kPad) + kPad << "\" viewBox=\"0 0 " << kWidth << ' ' << 2 * (kPanel + kPad) + kPad
        << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    int panel = 0;
    for (const auto& [name, axis] : {std::pair<const char*, const AxisReport*>{"x", &report.x}, {"y", &report.y}}) {
        const double top = kPad + panel * (kPanel + kPad);
        const double left = kPad;
        const double plot_w = kWidth - 2 * kPad;
        auto px = [&](double lag) { return left + plot_w * lag / lag_max; };
        auto py = [&](double r) { return top + kPanel * (1.0 - (std::clamp(r, -1.0, 1.0) + 1.0) / 2.0); };

        svg << "<g id=\"axis-" << name << "\">\n";
        svg << "<text x=\"" << left << "\" y=\"" << top - 8 << "\" font-size=\"12\">" << name
            << " autocorrelation</text>\n";
        svg << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << plot_w << "\" height=\"" << kPanel
            << "\" fill=\"none\" stroke=\"black\"/>\n";
        svg << "<line x1=\"" << left << "\" y1=\"" << py(0) << "\" x2=\"" << left + plot_w << "\" y2=\"" << py(0)
            << "\" stroke=\"gray\" stroke-dasharray=\"2,2\"/>\n";
        for (double lag : lags) {
            svg << "<line class=\"beat\" x1=\"" << fmt(px(lag)) << "\" y1=\"" << top << "\" x2=\"" << fmt(px(lag))
                << "\" y2=\"" << top + kPanel << "\" stroke=\"blue\"/>\n";
        }
        if (axis->correlogram) {
            svg << "<polyline fill=\"none\" stroke=\"black\" points=\"";
            const auto& values = axis->correlogram->values;
            for (std::size_t l = 0; l < values.size(); ++l) {
                svg << (l ? " " : "") << fmt(px(static_cast<double>(l))) << ',' << fmt(py(values[l]));
            }
            svg << "\"/>\n";
        } else {
            svg << "<text x=\"" << left + 10 << "\" y=\"" << top + kPanel / 2 << "\" font-size=\"12\">no motion</text>\n";
        }
        svg << "</g>\n";
        ++panel;
    }
    svg << "</svg>\n";
    return svg.str();
}

ViewBox fit_view_box(const std::vector<PoseCoords>& poses, double margin_fraction) {
    double x0 = std::numeric_limits<double>::infinity(), y0 = x0;
    double x1 = -x0, y1 = -x0;
    for (const auto& p : poses) {
        for (std::size_t j = 0; j < kJointCount; ++j) {
            x0 = std::min(x0, p[2 * j]);
            x1 = std::max(x1, p[2 * j]);
            y0 = std::min(y0, p[2 * j + 1]);
            y1 = std::max(y1, p[2 * j + 1]);
        }
    }
    if (poses.empty()) return {};
    double w = x1 - x0;
    double h = y1 - y0;
    const double extent = std::max({w, h, 0.0});
    if (!(extent > 0.0)) {
        return {x0 - 0.5, y0 - 0.5, 1.0, 1.0};
    }
    w = std::max(w, extent * 0.1);
    h = std::max(h, extent * 0.1);
    const double cx = (x0 + x1) / 2.0;
    const double cy = (y0 + y1) / 2.0;
    const double mw = w * (1.0 + 2.0 * margin_fraction);
    const double mh = h * (1.0 + 2.0 * margin_fraction);
    return {cx - mw / 2.0, cy - mh / 2.0, mw, mh};
}

std::string render_pose_svg(const PoseCoords& pose, const ViewBox& box, const SkeletonTopology& topology) {
    const double unit = std::max(box.width, box.height);
    const double stroke = unit * 0.01;
    const double radius = unit * 0.012;
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"480\" height=\"480\" viewBox=\"" << fmt(box.x) << ' '
        << fmt(box.y) << ' ' << fmt(box.width) << ' ' << fmt(box.height) << "\">\n";
    svg << "<rect x=\"" << fmt(box.x) << "\" y=\"" << fmt(box.y) << "\" width=\"" << fmt(box.width) << "\" height=\""
        << fmt(box.height) << "\" fill=\"white\"/>\n";
    for (const auto& [a, b] : topology.limbs) {
        svg << "<line x1=\"" << fmt(pose[2 * a]) << "\" y1=\"" << fmt(pose[2 * a + 1]) << "\" x2=\"" << fmt(pose[2 * b])
            << "\" y2=\"" << fmt(pose[2 * b + 1]) << "\" stroke=\"black\" stroke-width=\"" << fmt(stroke)
            << "\" stroke-linecap=\"round\"/>\n";
    }
    for (std::size_t j = 0; j < kJointCount; ++j) {
        svg << "<circle cx=\"" << fmt(pose[2 * j]) << "\" cy=\"" << fmt(pose[2 * j + 1]) << "\" r=\"" << fmt(radius)
            << "\" fill=\"red\"><title>" << topology.joint_names[j] << "</title></circle>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace choreo
