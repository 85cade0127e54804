#include "choreo/pose_io.hpp"

#include "choreo/error.hpp"
#include "choreo/tensor_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace choreo {

namespace {

using nlohmann::json;

constexpr std::size_t kNone = static_cast<std::size_t>(-1);

// Source keypoint index for each of our joints; Chest in the 18-point layout
// is synthesised from the two hips.
constexpr std::array<std::size_t, kJointCount> kCoco18{0, 1, 2, 3, 4, 5, 6, 7, kNone, 8, 9, 10, 11, 12, 13};
constexpr std::array<std::size_t, kJointCount> kBody25{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14};
constexpr std::size_t kCocoRHip = 8;
constexpr std::size_t kCocoLHip = 11;

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
}

bool parse_double(std::string cell, double& out) {
    cell.erase(0, cell.find_first_not_of(" \t\r"));
    cell.erase(cell.find_last_not_of(" \t\r") + 1);
    if (cell.empty()) return false;
    const auto* end = cell.data() + cell.size();
    const auto [ptr, ec] = std::from_chars(cell.data(), end, out);
    return ec == std::errc() && ptr == end;
}

std::vector<std::vector<double>> read_numeric_csv(const std::filesystem::path& path, std::size_t columns) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto cells = split_csv(line);
        std::vector<double> row(cells.size());
        bool numeric = cells.size() == columns;
        for (std::size_t i = 0; numeric && i < cells.size(); ++i) numeric = parse_double(cells[i], row[i]);
        if (!numeric) {
            if (rows.empty() && line_no == 1) continue;  // header
            throw FormatError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                              std::to_string(columns) + " numeric columns");
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
    return std::filesystem::path(path.string() + ".json");
}

JointFrame parse_openpose_frame(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("openpose: invalid JSON: ") + e.what());
    }
    JointFrame frame{};
    const auto people = doc.find("people");
    if (people == doc.end() || !people->is_array() || people->empty()) return frame;

    const json& person = people->front();
    const json* keypoints = nullptr;
    for (const char* key : {"pose_keypoints_2d", "pose_keypoints"}) {
        if (person.contains(key)) {
            keypoints = &person.at(key);
            break;
        }
    }
    if (keypoints == nullptr || !keypoints->is_array()) throw FormatError("openpose: person without pose keypoints");

    std::vector<double> values;
    values.reserve(keypoints->size());
    for (const auto& v : *keypoints) {
        if (!v.is_number()) throw FormatError("openpose: non-numeric keypoint value");
        values.push_back(v.get<double>());
    }
    const std::size_t count = values.size() / 3;
    if (values.size() % 3 != 0 || (count != 18 && count != 25)) {
        throw FormatError("openpose: expected 18 or 25 keypoints, got " + std::to_string(values.size()) + " values");
    }

    auto keypoint = [&](std::size_t k) {
        JointObservation o{values[3 * k], values[3 * k + 1], values[3 * k + 2] >= kMinConfidence};
        return o;
    };
    const auto& map = count == 18 ? kCoco18 : kBody25;
    for (std::size_t j = 0; j < kJointCount; ++j) {
        if (map[j] != kNone) {
            frame[j] = keypoint(map[j]);
            continue;
        }
        const auto r = keypoint(kCocoRHip);
        const auto l = keypoint(kCocoLHip);
        frame[j] = {(r.x + l.x) / 2.0, (r.y + l.y) / 2.0, r.present && l.present};
    }
    return frame;
}

std::vector<JointFrame> ingest_openpose(const std::filesystem::path& directory) {
    if (!std::filesystem::is_directory(directory)) throw IoError(directory.string() + " is not a directory");
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(directory)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
    }
    if (files.empty()) throw FormatError(directory.string() + ": no keypoint JSON frames");
    std::sort(files.begin(), files.end());

    std::vector<JointFrame> frames;
    frames.reserve(files.size());
    for (const auto& f : files) {
        try {
            frames.push_back(parse_openpose_frame(read_text(f)));
        } catch (const FormatError& e) {
            throw FormatError(f.string() + ": " + e.what());
        }
    }
    return frames;
}

std::vector<JointFrame> read_pose_csv(const std::filesystem::path& path) {
    const auto rows = read_numeric_csv(path, 3 * kJointCount);
    if (rows.empty()) throw FormatError(path.string() + ": no pose rows");
    std::vector<JointFrame> frames(rows.size());
    for (std::size_t t = 0; t < rows.size(); ++t) {
        for (std::size_t j = 0; j < kJointCount; ++j) {
            frames[t][j] = {rows[t][3 * j], rows[t][3 * j + 1], rows[t][3 * j + 2] >= kMinConfidence};
        }
    }
    return frames;
}

std::vector<JointFrame> read_pose_source(const std::filesystem::path& path) {
    if (std::filesystem::is_directory(path)) return ingest_openpose(path);
    if (!std::filesystem::exists(path)) throw IoError(path.string() + " does not exist");
    return read_pose_csv(path);
}

void write_skeleton_sequence(const std::filesystem::path& path, const SkeletonSequence& seq) {
    write_l2d(path, seq.frames);
    const json meta = {
        {"channels", seq.frames.channels()},
        {"frames", seq.frames.frames()},
        {"fps", seq.fps},
        {"norm_meta",
         {{"x_min", seq.norm.x_min}, {"x_max", seq.norm.x_max}, {"y_min", seq.norm.y_min}, {"y_max", seq.norm.y_max}}},
        {"topology_version", SkeletonTopology::kVersion},
    };
    std::ofstream out(sidecar_path(path), std::ios::trunc);
    if (!out) throw IoError("cannot write " + sidecar_path(path).string());
    out << meta.dump(2) << '\n';
}

SkeletonSequence read_skeleton_sequence(const std::filesystem::path& path) {
    SkeletonSequence seq{read_l2d(path), NormMeta{}, 30.0};
    if (seq.frames.channels() != kFrameDims) {
        throw DimensionError(path.string() + ": expected 44-channel skeleton tensor");
    }
    const auto side = sidecar_path(path);
    if (std::filesystem::exists(side)) {
        try {
            const json meta = json::parse(read_text(side));
            seq.fps = meta.at("fps").get<double>();
            const auto& n = meta.at("norm_meta");
            seq.norm = {n.at("x_min").get<double>(), n.at("x_max").get<double>(), n.at("y_min").get<double>(),
                        n.at("y_max").get<double>()};
            if (meta.value("topology_version", SkeletonTopology::kVersion) != SkeletonTopology::kVersion) {
                throw FormatError("unsupported topology version");
            }
        } catch (const json::exception& e) {
            throw FormatError(side.string() + ": " + e.what());
        }
    }
    return seq;
}

void write_coords_csv(const std::filesystem::path& path, const std::vector<PoseCoords>& rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    for (std::size_t j = 0; j < kJointCount; ++j) out << (j ? "," : "") << 'x' << j << ",y" << j;
    out << '\n';
    char buf[64];
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < kCoordDims; ++c) {
            const auto res = std::to_chars(buf, buf + sizeof buf, row[c]);
            if (c) out << ',';
            out.write(buf, res.ptr - buf);
        }
        out << '\n';
    }
    if (!out) throw IoError("failed writing " + path.string());
}

std::vector<PoseCoords> read_coords_csv(const std::filesystem::path& path) {
    const auto rows = read_numeric_csv(path, kCoordDims);
    if (rows.empty()) throw FormatError(path.string() + ": no coordinate rows");
    std::vector<PoseCoords> out(rows.size());
    for (std::size_t t = 0; t < rows.size(); ++t) std::copy(rows[t].begin(), rows[t].end(), out[t].begin());
    return out;
}

}  // namespace choreo
