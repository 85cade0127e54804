#include "choreo/error.hpp"
#include "choreo/pose_io.hpp"
#include "choreo/skeleton.hpp"

#include "synthetic.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

using namespace choreo;
using choreo::testing::ScratchDir;

namespace {

JointFrame uniform_frame(double x, double y) {
    JointFrame f{};
    for (auto& j : f) j = {x, y, true};
    return f;
}

std::vector<JointFrame> random_frames(std::size_t n, std::uint64_t seed, double lo = -3, double hi = 7) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<JointFrame> out(n);
    for (auto& f : out) {
        for (auto& j : f) j = {u(rng), u(rng), true};
    }
    return out;
}

// Keypoint k sits at (100 + k, 200 + k) so every mapped joint reveals its source.
std::string keypoint_json(std::size_t count, double confidence, std::size_t low_index = 999) {
    std::ostringstream s;
    s << R"({"version":1.3,"people":[{"person_id":[-1],"pose_keypoints_2d":[)";
    for (std::size_t k = 0; k < count; ++k) {
        if (k) s << ',';
        s << 100 + k << ',' << 200 + k << ',' << (k == low_index ? 0.05 : confidence);
    }
    s << R"(]},{"person_id":[-1],"pose_keypoints_2d":[)";
    for (std::size_t k = 0; k < count; ++k) s << (k ? "," : "") << "1,1,1";
    s << "]}]}";
    return s.str();
}

void check_source(const JointFrame& f, Joint joint, double k) {
    const auto& o = f[static_cast<std::size_t>(joint)];
    CHECK(o.present);
    CHECK(o.x == 100 + k);
    CHECK(o.y == 200 + k);
}

}  // namespace

TEST_SUITE("topology") {
    TEST_CASE("default topology is the documented spanning tree") {
        const auto& t = default_topology();
        CHECK_NOTHROW(t.validate());
        CHECK(t.joint_names[0] == "Head");
        CHECK(t.joint_names[8] == "Chest");
        CHECK(t.joint_names[14] == "LAnkle");
        CHECK(t.limbs[0] == Limb{0, 1});
        CHECK(t.limbs[7] == Limb{1, 8});
        CHECK(t.limbs[13] == Limb{13, 14});
    }

    TEST_CASE("cycles and disconnected joints are rejected") {
        auto t = default_topology();
        t.limbs[13] = {0, 2};
        CHECK_THROWS_AS(t.validate(), InvalidArgument);
        t = default_topology();
        t.limbs[0] = {1, 1};
        CHECK_THROWS_AS(t.validate(), InvalidArgument);
    }
}

TEST_SUITE("interpolation") {
    TEST_CASE("interior gap is linear") {
        std::vector<JointFrame> f{uniform_frame(0, 0), uniform_frame(9, 9), uniform_frame(1, 2)};
        f[1][4].present = false;
        const auto out = interpolate_missing(f);
        CHECK(out[1][4].present);
        CHECK(out[1][4].x == 0.5);
        CHECK(out[1][4].y == 1.0);
        CHECK(out[1][3].x == 9.0);
    }

    TEST_CASE("long gap interpolates proportionally") {
        std::vector<JointFrame> f(5, uniform_frame(0, 0));
        f[4] = uniform_frame(8, -4);
        for (std::size_t t = 1; t < 4; ++t) f[t][0].present = false;
        const auto out = interpolate_missing(f);
        for (std::size_t t = 1; t < 4; ++t) {
            CHECK(out[t][0].x == doctest::Approx(2.0 * t));
            CHECK(out[t][0].y == doctest::Approx(-1.0 * t));
        }
    }

    TEST_CASE("boundary runs hold the nearest value") {
        std::vector<JointFrame> f{uniform_frame(0, 0), uniform_frame(3, 4), uniform_frame(5, 6), uniform_frame(7, 8)};
        f[0][2].present = false;
        f[2][2].present = false;
        f[3][2].present = false;
        const auto out = interpolate_missing(f);
        CHECK(out[0][2].x == 3.0);
        CHECK(out[3][2].x == 3.0);
        CHECK(out[3][2].y == 4.0);
    }

    TEST_CASE("complete input is returned unchanged and interpolation is idempotent") {
        const auto full = random_frames(12, 1);
        const auto same = interpolate_missing(full);
        for (std::size_t t = 0; t < full.size(); ++t) {
            for (std::size_t j = 0; j < kJointCount; ++j) {
                CHECK(same[t][j].x == full[t][j].x);
                CHECK(same[t][j].y == full[t][j].y);
            }
        }
        std::mt19937_64 rng(2);
        auto holes = full;
        for (auto& f : holes) {
            for (auto& j : f) j.present = rng() % 3 != 0;
        }
        for (std::size_t j = 0; j < kJointCount; ++j) holes[5][j].present = true;
        const auto once = interpolate_missing(holes);
        const auto twice = interpolate_missing(once);
        for (std::size_t t = 0; t < once.size(); ++t) {
            for (std::size_t j = 0; j < kJointCount; ++j) {
                CHECK(once[t][j].x == twice[t][j].x);
                CHECK(once[t][j].y == twice[t][j].y);
            }
        }
    }

    TEST_CASE("a joint never observed is an error") {
        std::vector<JointFrame> f(3, uniform_frame(1, 1));
        for (auto& fr : f) fr[11].present = false;
        CHECK_THROWS_AS(interpolate_missing(f), DegenerateInputError);
    }
}

TEST_SUITE("normalization") {
    TEST_CASE("per-axis min-max") {
        auto f = random_frames(4, 3, 2, 10);
        f[0][0] = {2, 5, true};
        f[1][1] = {10, -1, true};
        f[2][2] = {6, 3, true};
        const auto [norm, meta] = minmax_normalize(f);
        CHECK(meta.x_min == 2.0);
        CHECK(meta.x_max == 10.0);
        CHECK(norm[2][2].x == 0.5);
        for (const auto& fr : norm) {
            for (const auto& j : fr) {
                CHECK(j.x >= 0.0);
                CHECK(j.x <= 1.0);
                CHECK(j.y >= 0.0);
                CHECK(j.y <= 1.0);
            }
        }
    }

    TEST_CASE("unit-range input with extremes attained is unchanged") {
        auto f = random_frames(3, 4, 0, 1);
        f[0][0] = {0, 0, true};
        f[2][14] = {1, 1, true};
        const auto [norm, meta] = minmax_normalize(f);
        for (std::size_t t = 0; t < f.size(); ++t) {
            for (std::size_t j = 0; j < kJointCount; ++j) {
                CHECK(norm[t][j].x == f[t][j].x);
                CHECK(norm[t][j].y == f[t][j].y);
            }
        }
    }

    TEST_CASE("round trip within 1e-6") {
        const auto f = random_frames(20, 5, -400, 1900);
        const auto [norm, meta] = minmax_normalize(f);
        for (std::size_t t = 0; t < f.size(); ++t) {
            PoseCoords n{};
            for (std::size_t j = 0; j < kJointCount; ++j) {
                n[2 * j] = norm[t][j].x;
                n[2 * j + 1] = norm[t][j].y;
            }
            const auto back = denormalize(n, meta);
            for (std::size_t j = 0; j < kJointCount; ++j) {
                CHECK(std::abs(back[2 * j] - f[t][j].x) < 1e-6);
                CHECK(std::abs(back[2 * j + 1] - f[t][j].y) < 1e-6);
            }
            const auto again = normalize(back, meta);
            for (std::size_t c = 0; c < kCoordDims; ++c) CHECK(again[c] == doctest::Approx(n[c]).epsilon(1e-12));
        }
    }

    TEST_CASE("order is preserved per axis") {
        const auto f = random_frames(30, 6);
        const auto [norm, meta] = minmax_normalize(f);
        for (std::size_t a = 0; a < 40; ++a) {
            const std::size_t t1 = a % 30, t2 = (a * 7 + 3) % 30, j1 = a % 15, j2 = (a * 4 + 1) % 15;
            if (f[t1][j1].x < f[t2][j2].x) CHECK(norm[t1][j1].x < norm[t2][j2].x);
            if (f[t1][j1].y < f[t2][j2].y) CHECK(norm[t1][j1].y < norm[t2][j2].y);
        }
    }

    TEST_CASE("scaling invariance") {
        const auto f = random_frames(10, 7);
        const auto [base, meta] = minmax_normalize(f);
        // power-of-two scale without offset: exact
        auto g = f;
        for (auto& fr : g) {
            for (auto& j : fr) {
                j.x *= 4.0;
                j.y *= 0.5;
            }
        }
        const auto [scaled, m2] = minmax_normalize(g);
        // general affine map: equal up to rounding
        auto h = f;
        for (auto& fr : h) {
            for (auto& j : fr) {
                j.x = 3.7 * j.x - 12.1;
                j.y = 0.3 * j.y + 800.0;
            }
        }
        const auto [affine, m3] = minmax_normalize(h);
        for (std::size_t t = 0; t < f.size(); ++t) {
            for (std::size_t j = 0; j < kJointCount; ++j) {
                CHECK(scaled[t][j].x == base[t][j].x);
                CHECK(scaled[t][j].y == base[t][j].y);
                CHECK(affine[t][j].x == doctest::Approx(base[t][j].x).epsilon(1e-12));
                CHECK(affine[t][j].y == doctest::Approx(base[t][j].y).epsilon(1e-12));
            }
        }
    }

    TEST_CASE("degenerate axis and missing joints") {
        std::vector<JointFrame> f(3, uniform_frame(1, 2));
        f[1][0].y = 5;
        CHECK_THROWS_AS(minmax_normalize(f), DegenerateInputError);
        f[1][0].x = 2;
        f[2][3].present = false;
        CHECK_THROWS_AS(minmax_normalize(f), InvalidArgument);
    }
}

TEST_SUITE("limbs and sequences") {
    TEST_CASE("limb length arithmetic") {
        PoseCoords c{};
        c[2] = 3;
        c[3] = 4;
        CHECK(limb_lengths(c)[0] == 5.0);
        const auto zero = limb_lengths(PoseCoords{});
        for (double l : zero) CHECK(l == 0.0);
    }

    TEST_CASE("translation invariance") {
        std::mt19937_64 rng(8);
        std::uniform_real_distribution<double> u(-5, 5);
        PoseCoords c;
        for (auto& v : c) v = u(rng);
        auto moved = c;
        for (std::size_t j = 0; j < kJointCount; ++j) {
            moved[2 * j] += 1.25;
            moved[2 * j + 1] -= 3.5;
        }
        const auto a = limb_lengths(c), b = limb_lengths(moved);
        for (std::size_t e = 0; e < kLimbCount; ++e) CHECK(a[e] == doctest::Approx(b[e]).epsilon(1e-12));
    }

    TEST_CASE("corner-to-corner limb stores 1") {
        PoseCoords c{};
        c[2] = 1;
        c[3] = 1;  // Neck at (1, 1), Head at (0, 0)
        const auto v = frame_vector(c);
        CHECK(v[kCoordDims] == doctest::Approx(1.0).epsilon(1e-7));
    }

    TEST_CASE("pipeline output shape, range and length identity") {
        const auto raw = choreo::testing::dance_motion(40, 12.0);
        const auto seq = skeleton_pipeline(raw, 25.0);
        CHECK(seq.frames.channels() == 44);
        CHECK(seq.frames.frames() == 40);
        CHECK(seq.fps == 25.0);
        for (float v : seq.frames.data()) {
            CHECK(v >= 0.0f);
            CHECK(v <= 1.0f);
        }
        for (std::size_t t = 0; t < seq.length(); ++t) {
            const auto lengths = limb_lengths(seq.coords(t));
            for (std::size_t e = 0; e < kLimbCount; ++e) {
                CHECK(std::abs(seq.frames(kCoordDims + e, t) / kLimbScale - lengths[e]) < 1e-5);
            }
        }
    }

    TEST_CASE("pipeline fills gaps before normalizing") {
        auto raw = random_frames(6, 9);
        raw[2][7].present = false;
        raw[0][0].present = false;
        const auto seq = skeleton_pipeline(raw, 30);
        CHECK(seq.frames.all_finite());
        CHECK(seq.length() == 6);
    }
}

TEST_SUITE("pose_io") {
    TEST_CASE("18-keypoint layout maps onto the topology") {
        const auto f = parse_openpose_frame(keypoint_json(18, 0.9));
        check_source(f, Joint::Head, 0);
        check_source(f, Joint::Neck, 1);
        check_source(f, Joint::RShoulder, 2);
        check_source(f, Joint::RElbow, 3);
        check_source(f, Joint::RWrist, 4);
        check_source(f, Joint::LShoulder, 5);
        check_source(f, Joint::LElbow, 6);
        check_source(f, Joint::LWrist, 7);
        check_source(f, Joint::RHip, 8);
        check_source(f, Joint::RKnee, 9);
        check_source(f, Joint::RAnkle, 10);
        check_source(f, Joint::LHip, 11);
        check_source(f, Joint::LKnee, 12);
        check_source(f, Joint::LAnkle, 13);
        const auto& chest = f[static_cast<std::size_t>(Joint::Chest)];
        CHECK(chest.present);
        CHECK(chest.x == 109.5);  // midpoint of RHip (108) and LHip (111)
        CHECK(chest.y == 209.5);
    }

    TEST_CASE("25-keypoint layout takes Chest from MidHip") {
        const auto f = parse_openpose_frame(keypoint_json(25, 0.9));
        check_source(f, Joint::Head, 0);
        check_source(f, Joint::Neck, 1);
        check_source(f, Joint::RWrist, 4);
        check_source(f, Joint::LWrist, 7);
        check_source(f, Joint::Chest, 8);
        check_source(f, Joint::RHip, 9);
        check_source(f, Joint::RKnee, 10);
        check_source(f, Joint::RAnkle, 11);
        check_source(f, Joint::LHip, 12);
        check_source(f, Joint::LKnee, 13);
        check_source(f, Joint::LAnkle, 14);
    }

    TEST_CASE("confidence threshold and empty frames") {
        const auto low = parse_openpose_frame(keypoint_json(25, 0.9, 4));
        CHECK_FALSE(low[static_cast<std::size_t>(Joint::RWrist)].present);
        CHECK(low[static_cast<std::size_t>(Joint::RElbow)].present);
        const auto hip = parse_openpose_frame(keypoint_json(18, 0.9, 11));
        CHECK_FALSE(hip[static_cast<std::size_t>(Joint::Chest)].present);
        for (const auto& j : parse_openpose_frame(R"({"version":1.3,"people":[]})")) CHECK_FALSE(j.present);
        CHECK_THROWS_AS(parse_openpose_frame("{not json"), FormatError);
        CHECK_THROWS_AS(parse_openpose_frame(R"({"people":[{"pose_keypoints_2d":[1,2,3]}]})"), FormatError);
    }

    TEST_CASE("directory ingestion in frame order") {
        ScratchDir dir("openpose");
        for (std::size_t i : {2, 0, 1}) {
            std::ostringstream name;
            name << "clip_" << std::setw(12) << std::setfill('0') << i << "_keypoints.json";
            std::string text = keypoint_json(18, 0.5 + 0.1 * i);
            std::ofstream(dir / name.str()) << text;
        }
        std::ofstream(dir / "notes.txt") << "ignored";
        const auto frames = ingest_openpose(dir.path());
        CHECK(frames.size() == 3);
        ScratchDir empty("openpose-empty");
        CHECK_THROWS_AS(ingest_openpose(empty.path()), FormatError);
    }

    TEST_CASE("canonical CSV with and without header") {
        ScratchDir dir("posecsv");
        std::ostringstream body;
        for (int t = 0; t < 3; ++t) {
            for (std::size_t j = 0; j < kJointCount; ++j) {
                body << (j ? "," : "") << t + j << ',' << 2 * t << ',' << (j == 5 && t == 1 ? 0.0 : 1.0);
            }
            body << '\n';
        }
        std::ofstream(dir / "a.csv") << body.str();
        std::ofstream(dir / "b.csv") << "x0,y0,c0,...\n" << body.str();
        const auto a = read_pose_csv(dir / "a.csv");
        const auto b = read_pose_csv(dir / "b.csv");
        REQUIRE(a.size() == 3);
        REQUIRE(b.size() == 3);
        CHECK(a[2][4].x == 6.0);
        CHECK(a[2][4].y == 4.0);
        CHECK_FALSE(a[1][5].present);
        CHECK(b[1][5].present == a[1][5].present);
        std::ofstream(dir / "bad.csv") << "1,2,3\n";
        CHECK_THROWS_AS(read_pose_csv(dir / "bad.csv"), FormatError);
        CHECK_THROWS_AS(read_pose_source(dir / "missing.csv"), IoError);
    }

    TEST_CASE("skeleton sequence files round trip") {
        ScratchDir dir("seqio");
        const auto seq = skeleton_pipeline(choreo::testing::dance_motion(20, 10), 24);
        write_skeleton_sequence(dir / "s.l2d", seq);
        CHECK(std::filesystem::exists(dir / "s.l2d.json"));
        const auto back = read_skeleton_sequence(dir / "s.l2d");
        CHECK(back.frames == seq.frames);
        CHECK(back.fps == 24);
        CHECK(back.norm.x_min == doctest::Approx(seq.norm.x_min).epsilon(1e-15));
        CHECK(back.norm.y_max == doctest::Approx(seq.norm.y_max).epsilon(1e-15));
    }

    TEST_CASE("coordinate CSV round trip is exact") {
        ScratchDir dir("coords");
        std::mt19937_64 rng(10);
        std::uniform_real_distribution<double> u(-1000, 1000);
        std::vector<PoseCoords> rows(5);
        for (auto& r : rows) {
            for (auto& v : r) v = u(rng);
        }
        write_coords_csv(dir / "c.csv", rows);
        CHECK(choreo::testing::read_file(dir / "c.csv").rfind("x0,y0,x1,y1,", 0) == 0);
        const auto back = read_coords_csv(dir / "c.csv");
        REQUIRE(back.size() == rows.size());
        for (std::size_t t = 0; t < rows.size(); ++t) CHECK(back[t] == rows[t]);
    }
}
