#include "choreo/analysis.hpp"
#include "choreo/error.hpp"
#include "choreo/report.hpp"

#include <doctest.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

using namespace choreo;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Joints oscillate on y with per-joint periods; x holds still unless `sway`.
SkeletonSequence periodic_sequence(std::size_t frames, const std::vector<double>& periods, bool sway = false) {
    SkeletonSequence s;
    s.frames = Tensor(kFrameDims, frames);
    for (std::size_t j = 0; j < kJointCount; ++j) {
        const double period = periods[j % periods.size()];
        for (std::size_t t = 0; t < frames; ++t) {
            const double phase = kTwoPi * static_cast<double>(t) / period + 0.3 * static_cast<double>(j);
            s.frames(2 * j, t) = static_cast<float>(sway ? 0.5 + 0.2 * std::cos(phase) : 0.1 * double(j) / 15.0);
            s.frames(2 * j + 1, t) = static_cast<float>(0.5 + 0.4 * std::sin(phase));
        }
    }
    return s;
}

std::vector<double> brute_autocorr(const std::vector<double>& x, std::size_t max_lag) {
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    double denom = 0.0;
    for (double v : x) denom += (v - mean) * (v - mean);
    std::vector<double> r(max_lag + 1);
    for (std::size_t l = 0; l <= max_lag; ++l) {
        double num = 0.0;
        for (std::size_t t = 0; t + l < x.size(); ++t) num += (x[t] - mean) * (x[t + l] - mean);
        r[l] = num / denom;
    }
    return r;
}

std::vector<double> averaged_y_oracle(const SkeletonSequence& s, std::size_t max_lag) {
    std::vector<double> avg(max_lag + 1, 0.0);
    for (std::size_t j = 0; j < kJointCount; ++j) {
        std::vector<double> traj(s.length());
        for (std::size_t t = 0; t < s.length(); ++t) traj[t] = s.frames(2 * j + 1, t);
        const auto r = brute_autocorr(traj, max_lag);
        for (std::size_t l = 0; l <= max_lag; ++l) avg[l] += r[l] / double(kJointCount);
    }
    return avg;
}

Correlogram with_peaks(std::vector<std::size_t> lags) {
    Correlogram c;
    c.values.assign(100, 0.0);
    c.peak_lags = std::move(lags);
    return c;
}

bool contains(const std::vector<std::size_t>& v, std::size_t x) { return std::find(v.begin(), v.end(), x) != v.end(); }

std::size_t count_of(const std::string& text, const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
    return n;
}

}  // namespace

TEST_CASE("beat grid from tempo and from beat frames") {
    CHECK(BeatGrid::from_bpm(60, 30).period == doctest::Approx(30.0));
    CHECK(BeatGrid::from_bpm(120, 30).period == doctest::Approx(15.0));
    const auto g = BeatGrid::from_beats({10, 40, 70, 100});
    CHECK(g.period == doctest::Approx(30.0));
    CHECK(g.beats.size() == 4);

    CHECK_THROWS_AS(BeatGrid::from_bpm(0, 30), InvalidArgument);
    CHECK_THROWS_AS(BeatGrid::from_bpm(-5, 30), InvalidArgument);
    CHECK_THROWS_AS(BeatGrid::from_bpm(60, 0), InvalidArgument);
    CHECK_THROWS_AS(BeatGrid::from_bpm(3600, 30), InvalidArgument);  // period 0.5 frames
    CHECK_THROWS_AS(BeatGrid::from_beats({5}), InvalidArgument);
    CHECK_THROWS_AS(BeatGrid::from_beats({10, 40, 40, 70}), InvalidArgument);
    CHECK_THROWS_AS(BeatGrid::from_beats({40, 10}), InvalidArgument);
}

TEST_CASE("y-only motion peaks at its period and leaves x degenerate") {
    const auto s = periodic_sequence(300, {30});
    const auto y = axis_autocorrelation(s, Axis::Y, 90);
    REQUIRE_FALSE(y.peak_lags.empty());
    CHECK(y.peak_lags.front() == 30);
    CHECK(y.values[0] == doctest::Approx(1.0));

    const auto oracle = averaged_y_oracle(s, 90);
    for (std::size_t l = 0; l <= 90; ++l) CHECK(y.values[l] == doctest::Approx(oracle[l]).epsilon(1e-9));

    CHECK_THROWS_AS(axis_autocorrelation(s, Axis::X, 90), DegenerateInputError);
    CHECK_THROWS_AS(motion_autocorrelation(s, 90), DegenerateInputError);
    CHECK_THROWS_AS(axis_autocorrelation(s, Axis::Y, 300), InvalidArgument);
}

TEST_CASE("time reversal leaves the correlogram unchanged") {
    const auto s = periodic_sequence(240, {17, 23}, true);
    SkeletonSequence r = s;
    for (std::size_t c = 0; c < kFrameDims; ++c) {
        for (std::size_t t = 0; t < s.length(); ++t) r.frames(c, t) = s.frames(c, s.length() - 1 - t);
    }
    const auto a = motion_autocorrelation(s, 60);
    const auto b = motion_autocorrelation(r, 60);
    for (std::size_t l = 0; l <= 60; ++l) {
        CHECK(a.x.values[l] == doctest::Approx(b.x.values[l]).epsilon(1e-12));
        CHECK(a.y.values[l] == doctest::Approx(b.y.values[l]).epsilon(1e-12));
    }
    CHECK(a.x.peak_lags == b.x.peak_lags);
    CHECK(a.y.peak_lags == b.y.peak_lags);
}

TEST_CASE("mixed periods average into peaks at both lags") {
    // ten joints at P, five at 2P
    std::vector<double> periods(kJointCount, 40.0);
    for (std::size_t j = 10; j < kJointCount; ++j) periods[j] = 80.0;
    const auto s = periodic_sequence(600, periods);
    const auto y = axis_autocorrelation(s, Axis::Y, 120);
    const auto oracle = averaged_y_oracle(s, 120);
    for (std::size_t l = 0; l <= 120; ++l) CHECK(y.values[l] == doctest::Approx(oracle[l]).epsilon(1e-9));
    CHECK(contains(y.peak_lags, 40));
    CHECK(contains(y.peak_lags, 80));
    CHECK(y.values[80] > y.values[40]);
}

TEST_CASE("beat alignment verdicts") {
    const auto grid = BeatGrid::from_bpm(60, 30);

    auto v = beat_alignment(with_peaks({30, 60}), grid);
    CHECK(v.status == AlignmentStatus::Matched);
    CHECK(v.peak_index == 1);
    CHECK(v.beat_multiple == 1);
    CHECK(v.offset == 0.0);

    v = beat_alignment(with_peaks({33}), grid, 2.0);
    CHECK(v.status == AlignmentStatus::Unmatched);
    CHECK(v.offset == doctest::Approx(3.0));
    CHECK(v.peak_lag == 33);

    v = beat_alignment(with_peaks({60}), grid);
    CHECK(v.status == AlignmentStatus::Matched);
    CHECK(v.beat_multiple == 2);
    CHECK(v.offset == 0.0);

    v = beat_alignment(with_peaks({11, 31}), grid);
    CHECK(v.status == AlignmentStatus::Matched);
    CHECK(v.peak_index == 2);
    CHECK(v.offset == doctest::Approx(1.0));

    v = beat_alignment(with_peaks({11, 17, 30}), grid);  // only the first two peaks count
    CHECK(v.status == AlignmentStatus::Unmatched);

    v = beat_alignment(with_peaks({28}), grid, 2.0);
    CHECK(v.status == AlignmentStatus::Matched);
    CHECK(v.offset == doctest::Approx(-2.0));

    v = beat_alignment(with_peaks({}), grid);
    CHECK(v.status == AlignmentStatus::NoPeak);
    CHECK(v.peak_index == 0);
}

TEST_CASE("sinusoidal motion matches its tempo across periods") {
    for (std::size_t p = 8; p <= 64; ++p) {
        CAPTURE(p);
        const auto s = periodic_sequence(400, {double(p)}, true);
        const auto grid = BeatGrid::from_bpm(60.0 * 30.0 / double(p), 30);
        const auto report = analyze_motion(s, grid, static_cast<std::size_t>(std::ceil(3.0 * double(p))));
        REQUIRE(report.y.correlogram.has_value());
        CHECK(report.y.verdict.status == AlignmentStatus::Matched);
        CHECK(std::abs(report.y.verdict.offset) < 1e-9);
        CHECK(report.x.verdict.status == AlignmentStatus::Matched);
    }
}

TEST_CASE("analyze reports a motionless axis instead of throwing") {
    const auto s = periodic_sequence(300, {30});
    const auto report = analyze_motion(s, BeatGrid::from_bpm(60, 30), 90);
    CHECK_FALSE(report.x.correlogram.has_value());
    CHECK(report.x.verdict.status == AlignmentStatus::NoPeak);
    REQUIRE(report.y.correlogram.has_value());
    CHECK(report.y.verdict.status == AlignmentStatus::Matched);
    CHECK(report.max_lag == 90);
    CHECK(report.grid.period == doctest::Approx(30.0));
}

TEST_CASE("status names") {
    CHECK(to_string(AlignmentStatus::Matched) == "matched");
    CHECK(to_string(AlignmentStatus::Unmatched) == "unmatched");
    CHECK(to_string(AlignmentStatus::NoPeak) == "no_peak");
}

TEST_CASE("report json layout") {
    const auto s = periodic_sequence(300, {30});
    const auto report = analyze_motion(s, BeatGrid::from_beats({0, 30, 60, 90}), 90);
    const auto doc = nlohmann::json::parse(report_to_json(report));
    CHECK(doc["max_lag"] == 90);
    CHECK(doc["beat_source"] == "beats");
    CHECK(doc["beat_period"].get<double>() == doctest::Approx(30.0));
    CHECK(doc["beats"].size() == 4);
    CHECK(doc["axes"]["x"]["degenerate"] == true);
    const auto& y = doc["axes"]["y"];
    CHECK(y["degenerate"] == false);
    CHECK(y["correlogram"].size() == 91);
    CHECK(y["peaks"][0] == 30);
    CHECK(y["verdict"]["status"] == "matched");
    CHECK(y["verdict"]["peak_lag"] == 30);
    CHECK(y["verdict"]["beat_multiple"] == 1);

    const auto svg = render_correlogram_svg(report);
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(count_of(svg, "class=\"beat\"") == 2 * 3);
    CHECK(count_of(svg, "<polyline") == 1);
    CHECK(svg.find("no motion") != std::string::npos);
}

TEST_CASE("pose svg draws every limb and joint") {
    PoseCoords pose{};
    for (std::size_t j = 0; j < kJointCount; ++j) {
        pose[2 * j] = 0.3 + 0.02 * double(j);
        pose[2 * j + 1] = 0.1 + 0.05 * double(j);
    }
    const auto box = fit_view_box({pose});
    CHECK(box.x < 0.3);
    CHECK(box.y < 0.1);
    CHECK(box.x + box.width > 0.58);
    CHECK(box.y + box.height > 0.8);
    const auto svg = render_pose_svg(pose, box);
    CHECK(count_of(svg, "<line") == kLimbCount);
    CHECK(count_of(svg, "<circle") == kJointCount);
    CHECK(svg.find("Head") != std::string::npos);

    PoseCoords point{};
    point.fill(0.5);
    const auto unit = fit_view_box({point});
    CHECK(unit.width == 1.0);
    CHECK(unit.height == 1.0);
    const auto dot = render_pose_svg(point, unit);
    CHECK(count_of(dot, "<circle") == kJointCount);
    CHECK(dot.find("nan") == std::string::npos);
    CHECK(dot.find("inf") == std::string::npos);
}
