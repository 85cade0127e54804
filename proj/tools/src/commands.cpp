#include "choreo/cli.hpp"

#include "choreo/analysis.hpp"
#include "choreo/audio.hpp"
#include "choreo/checkpoint.hpp"
#include "choreo/error.hpp"
#include "choreo/pose_io.hpp"
#include "choreo/report.hpp"
#include "choreo/skeleton.hpp"
#include "choreo/tensor_io.hpp"
#include "choreo/training.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

namespace choreo::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string fmt(double v) {
    std::ostringstream s;
    s << std::setprecision(6) << v;
    return s.str();
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

void write_json(const fs::path& path, const json& doc) { write_text_file(path, doc.dump(2) + "\n"); }

struct Globals {
    double fps = 30.0;
    double sample_rate = 22050.0;
    std::uint64_t seed = 1;
    CLI::Option* fps_opt = nullptr;
    CLI::Option* rate_opt = nullptr;
    CLI::Option* seed_opt = nullptr;
};

// ---- prepare ---------------------------------------------------------------

struct ClipEntry {
    std::string name;
    fs::path skeleton;
    fs::path audio;
    double fps = 30.0;
};

std::vector<ClipEntry> load_manifest(const fs::path& path, double default_fps) {
    const json doc = read_json(path);
    if (!doc.is_object() || !doc.contains("clips") || !doc["clips"].is_array()) {
        throw FormatError("manifest: expected an object with a \"clips\" array");
    }
    fs::path root = path.parent_path();
    if (doc.contains("root")) root = root / doc["root"].get<std::string>();

    std::vector<ClipEntry> clips;
    std::set<std::string> names;
    for (const auto& c : doc["clips"]) {
        ClipEntry e;
        try {
            e.name = c.at("name").get<std::string>();
            e.skeleton = root / c.at("skeleton").get<std::string>();
            e.audio = root / c.at("audio").get<std::string>();
            e.fps = c.value("fps", default_fps);
        } catch (const json::exception& ex) {
            throw FormatError(std::string("manifest entry: ") + ex.what());
        }
        if (e.name.empty() || e.name.find_first_of("/\\") != std::string::npos) {
            throw FormatError("manifest: invalid clip name \"" + e.name + "\"");
        }
        if (!names.insert(e.name).second) throw FormatError("manifest: duplicate clip name " + e.name);
        if (!(e.fps > 0.0)) throw FormatError("manifest: clip " + e.name + " has non-positive fps");
        clips.push_back(std::move(e));
    }
    return clips;
}

int cmd_prepare(const fs::path& manifest, const fs::path& out_dir, const Globals& g, std::ostream& out,
                std::ostream& err) {
    const auto clips = load_manifest(manifest, g.fps);
    fs::create_directories(out_dir);

    json entries = json::array();
    std::size_t failed = 0;
    for (const auto& c : clips) {
        try {
            auto skeleton = skeleton_pipeline(read_pose_source(c.skeleton), c.fps);
            auto mel = audio_features(c.audio, c.fps, g.sample_rate);
            const std::size_t skeleton_frames = skeleton.length();
            const std::size_t mel_frames = mel.features.frames();
            const auto pair = align_clip(c.name, std::move(skeleton), std::move(mel));

            const std::string skeleton_file = c.name + ".skeleton.l2d";
            const std::string mel_file = c.name + ".mel.l2d";
            write_skeleton_sequence(out_dir / skeleton_file, pair.skeleton);
            write_mel_sequence(out_dir / mel_file, pair.mel);
            entries.push_back({{"name", c.name},
                               {"skeleton", skeleton_file},
                               {"mel", mel_file},
                               {"frames", pair.length()},
                               {"fps", c.fps}});
            out << "clip " << c.name << " skeleton " << skeleton_frames << " mel " << mel_frames << " frames "
                << pair.length() << '\n';
        } catch (const std::exception& e) {
            ++failed;
            err << "clip " << c.name << " failed: " << e.what() << '\n';
        }
    }
    write_json(out_dir / "dataset.json", json{{"sample_rate", g.sample_rate}, {"clips", entries}});
    out << "prepared " << entries.size() << " of " << clips.size() << " clips\n";
    return failed == 0 ? kExitOk : kExitFailure;
}

// ---- train -----------------------------------------------------------------

struct TrainArgs {
    fs::path dataset;
    fs::path out_dir;
    TrainingConfig config;
    std::size_t encoder_channels = 256;
    std::size_t decoder_channels = 128;
    std::size_t log_every = 10;
    std::string resume;
    std::vector<std::string> holdout;
};

std::vector<ClipPair> load_dataset(const fs::path& dir) {
    const json doc = read_json(dir / "dataset.json");
    std::vector<ClipPair> pairs;
    for (const auto& c : doc.at("clips")) {
        auto skeleton = read_skeleton_sequence(dir / c.at("skeleton").get<std::string>());
        auto mel = read_mel_sequence(dir / c.at("mel").get<std::string>());
        pairs.push_back(align_clip(c.at("name").get<std::string>(), std::move(skeleton), std::move(mel)));
    }
    return pairs;
}

int cmd_train(TrainArgs a, const Globals& g, std::ostream& out) {
    auto pairs = load_dataset(a.dataset);
    std::vector<ClipPair> holdout;
    for (const auto& name : a.holdout) {
        auto it = std::find_if(pairs.begin(), pairs.end(), [&](const ClipPair& p) { return p.name == name; });
        if (it == pairs.end()) throw InvalidArgument("unknown holdout clip " + name);
        holdout.push_back(std::move(*it));
        pairs.erase(it);
    }

    a.config.rng_seed = g.seed;
    FitOptions options;
    options.model = ModelConfig{}.with_widths(a.encoder_channels, a.decoder_channels);
    options.init_seed = g.seed;
    options.out_dir = a.out_dir;
    options.holdout = std::move(holdout);
    if (!a.resume.empty()) options.resume = load_checkpoint(a.resume);
    const std::size_t last = a.config.max_steps;
    options.on_step = [&](const LossRecord& r) {
        if (r.step % a.log_every == 0 || r.step == last) {
            out << "step " << r.step << " total " << fmt(r.total) << " l1 " << fmt(r.l1) << " limb " << fmt(r.limb)
                << std::endl;
        }
    };

    const auto result = fit(pairs, a.config, options);
    if (result.holdout_loss) {
        const auto& h = *result.holdout_loss;
        out << "holdout total " << fmt(h.total) << " l1 " << fmt(h.l1) << " limb " << fmt(h.limb) << '\n';
    }
    out << "wrote " << (a.out_dir / "final.l2dc").string() << '\n';
    return kExitOk;
}

// ---- generate --------------------------------------------------------------

std::vector<float> seed_from_file(const fs::path& path, const NormMeta& norm) {
    if (path.extension() == ".csv") {
        const auto rows = read_coords_csv(path);
        if (rows.empty()) throw FormatError(path.string() + ": no coordinate rows");
        PoseCoords c = normalize(rows.front(), norm);
        for (auto& v : c) v = std::clamp(v, 0.0, 1.0);
        const auto f = frame_vector(c);
        return {f.begin(), f.end()};
    }
    const auto seq = read_skeleton_sequence(path);
    if (seq.frames.channels() != kFrameDims) throw DimensionError("seed pose must have 44 channels");
    const auto col = seq.frames.column(0);
    return {col.begin(), col.end()};
}

int cmd_generate(const fs::path& checkpoint, const fs::path& audio, const std::string& seed_pose, fs::path out_prefix,
                 const Globals& g, std::ostream& out) {
    const auto ck = load_checkpoint(checkpoint);
    const double fps = g.fps_opt->count() > 0 ? g.fps : ck.fps;
    const double rate = g.rate_opt->count() > 0 ? g.sample_rate : ck.sample_rate;
    const auto mel = audio_features(audio, fps, rate);
    const auto seed = seed_pose == "mean" ? ck.mean_pose : seed_from_file(seed_pose, ck.corpus_norm);

    SkeletonSequence seq;
    seq.frames = generate(ck.model, seed, mel.features);
    seq.norm = ck.corpus_norm;
    seq.fps = fps;

    if (out_prefix.extension() == ".l2d" || out_prefix.extension() == ".csv") out_prefix.replace_extension();
    if (out_prefix.has_parent_path()) fs::create_directories(out_prefix.parent_path());
    const fs::path l2d = fs::path(out_prefix.string() + ".l2d");
    const fs::path csv = fs::path(out_prefix.string() + ".csv");
    write_skeleton_sequence(l2d, seq);
    std::vector<PoseCoords> rows;
    rows.reserve(seq.length());
    for (std::size_t t = 0; t < seq.length(); ++t) rows.push_back(denormalize(seq.coords(t), seq.norm));
    write_coords_csv(csv, rows);
    out << "generated " << seq.length() << " frames -> " << l2d.string() << ", " << csv.string() << '\n';
    return kExitOk;
}

// ---- analyze ---------------------------------------------------------------

std::vector<double> read_beat_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<double> beats;
    std::string line;
    while (std::getline(in, line)) {
        line = line.substr(0, line.find('#'));
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream fields(line);
        std::string token;
        while (fields >> token) {
            try {
                std::size_t used = 0;
                beats.push_back(std::stod(token, &used));
                if (used != token.size()) throw std::invalid_argument(token);
            } catch (const std::exception&) {
                throw FormatError(path.string() + ": bad beat value '" + token + "'");
            }
        }
    }
    return beats;
}

SkeletonSequence load_motion(const fs::path& path, double fps) {
    if (path.extension() != ".csv") return read_skeleton_sequence(path);
    const auto rows = read_coords_csv(path);
    if (rows.empty()) throw FormatError(path.string() + ": no coordinate rows");
    SkeletonSequence seq;
    seq.frames = Tensor(kFrameDims, rows.size());
    seq.fps = fps;
    for (std::size_t t = 0; t < rows.size(); ++t) {
        for (std::size_t c = 0; c < kCoordDims; ++c) seq.frames(c, t) = static_cast<float>(rows[t][c]);
    }
    return seq;
}

struct AnalyzeArgs {
    fs::path motion;
    std::optional<double> bpm;
    std::string beats;
    fs::path out;
    std::string plot;
    std::size_t max_lag = 0;
    double tolerance = 2.0;
};

int cmd_analyze(const AnalyzeArgs& a, const Globals& g, std::ostream& out) {
    auto seq = load_motion(a.motion, g.fps);
    if (g.fps_opt->count() > 0) seq.fps = g.fps;
    const BeatGrid grid = a.bpm ? BeatGrid::from_bpm(*a.bpm, seq.fps) : BeatGrid::from_beats(read_beat_file(a.beats));
    grid.validate();

    if (seq.length() < 2) throw DegenerateInputError("analyze: motion needs at least two frames");
    std::size_t max_lag = a.max_lag;
    if (max_lag == 0) max_lag = static_cast<std::size_t>(std::ceil(3.0 * grid.period));
    max_lag = std::min(max_lag, seq.length() - 1);

    const auto report = analyze_motion(seq, grid, max_lag, a.tolerance);
    if (a.out.has_parent_path()) fs::create_directories(a.out.parent_path());
    write_text_file(a.out, report_to_json(report));
    if (!a.plot.empty()) write_text_file(a.plot, render_correlogram_svg(report));

    out << "beat period " << fmt(grid.period) << " frames\n";
    const auto line = [&](const char* axis, const AxisReport& r) {
        out << axis << ' ';
        if (!r.correlogram) {
            out << "degenerate\n";
            return;
        }
        out << to_string(r.verdict.status);
        if (r.verdict.status != AlignmentStatus::NoPeak) {
            out << " peak " << r.verdict.peak_index << " lag " << r.verdict.peak_lag << " x" << r.verdict.beat_multiple
                << " offset " << fmt(r.verdict.offset);
        }
        out << '\n';
    };
    line("x", report.x);
    line("y", report.y);
    return kExitOk;
}

// ---- render ----------------------------------------------------------------

int cmd_render(const fs::path& coords, const fs::path& out_dir, const std::string& format, std::ostream& out) {
    const auto rows = read_coords_csv(coords);
    if (rows.empty()) throw FormatError(coords.string() + ": no coordinate rows");
    fs::create_directories(out_dir);

    if (format == "csv") {
        const auto& topo = default_topology();
        std::ostringstream s;
        s << std::setprecision(9) << "frame,joint,name,x,y\n";
        for (std::size_t t = 0; t < rows.size(); ++t) {
            for (std::size_t j = 0; j < kJointCount; ++j) {
                s << t << ',' << j << ',' << topo.joint_names[j] << ',' << rows[t][2 * j] << ','
                  << rows[t][2 * j + 1] << '\n';
            }
        }
        write_text_file(out_dir / "frames.csv", s.str());
        out << "wrote " << rows.size() << " frames to " << (out_dir / "frames.csv").string() << '\n';
        return kExitOk;
    }

    const ViewBox box = fit_view_box(rows);
    for (std::size_t t = 0; t < rows.size(); ++t) {
        std::ostringstream name;
        name << "frame_" << std::setw(6) << std::setfill('0') << t << ".svg";
        write_text_file(out_dir / name.str(), render_pose_svg(rows[t], box));
    }
    out << "rendered " << rows.size() << " frames to " << out_dir.string() << '\n';
    return kExitOk;
}

}  // namespace

void write_mel_sequence(const fs::path& path, const MelSequence& mel) {
    write_l2d(path, mel.features);
    write_json(sidecar_path(path), json{{"channels", mel.features.channels()},
                                        {"frames", mel.features.frames()},
                                        {"fps", mel.fps},
                                        {"sample_rate", mel.sample_rate}});
}

MelSequence read_mel_sequence(const fs::path& path) {
    MelSequence mel;
    mel.features = read_l2d(path);
    const json meta = read_json(sidecar_path(path));
    mel.fps = meta.at("fps").get<double>();
    mel.sample_rate = meta.at("sample_rate").get<double>();
    return mel;
}

MelSequence audio_features(const fs::path& wav, double fps, double sample_rate) {
    AudioClip audio = read_wav(wav);
    if (audio.sample_rate != sample_rate) audio = resample_linear(audio, sample_rate);
    return mel_spectrogram(audio, fps);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Music-conditioned dance motion toolkit", "choreo"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    g.fps_opt = app.add_option("--fps", g.fps, "Frame rate (frames per second)")
                    ->capture_default_str()
                    ->check(CLI::PositiveNumber);
    g.rate_opt = app.add_option("--sample-rate", g.sample_rate, "Audio sample rate in Hz")
                     ->capture_default_str()
                     ->check(CLI::PositiveNumber);
    g.seed_opt = app.add_option("--seed", g.seed, "Random seed")->capture_default_str();

    fs::path manifest, prepare_out;
    auto* prepare = app.add_subcommand("prepare", "Build aligned skeleton/mel features from a clip manifest");
    prepare->add_option("manifest", manifest, "Manifest JSON")->required();
    prepare->add_option("out_dir", prepare_out, "Output directory")->required();

    TrainArgs ta;
    auto* train = app.add_subcommand("train", "Train a model on a prepared dataset");
    train->add_option("dataset", ta.dataset, "Prepared dataset directory")->required();
    train->add_option("--out", ta.out_dir, "Directory for checkpoints and loss.csv")->required();
    train->add_option("--steps", ta.config.max_steps, "Total optimizer steps")->capture_default_str();
    train->add_option("--window", ta.config.window_length, "Training window length in frames")
        ->capture_default_str();
    train->add_option("--batch", ta.config.batch_size, "Windows per step")->capture_default_str();
    train->add_option("--lr", ta.config.learning_rate, "Adam learning rate")->capture_default_str();
    train->add_option("--limb-weight", ta.config.limb_loss_weight, "Weight of the limb-length loss")
        ->capture_default_str();
    train->add_option("--checkpoint-every", ta.config.checkpoint_interval, "Steps between checkpoints")
        ->capture_default_str();
    train->add_option("--threads", ta.config.threads, "Worker threads per step")->capture_default_str();
    train->add_option("--encoder-channels", ta.encoder_channels, "Encoder width")->capture_default_str();
    train->add_option("--decoder-channels", ta.decoder_channels, "Decoder width")->capture_default_str();
    train->add_option("--log-every", ta.log_every, "Steps between loss lines")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    train->add_option("--resume", ta.resume, "Checkpoint to resume from");
    train->add_option("--holdout-clips", ta.holdout, "Clip names excluded from training and evaluated at the end")
        ->delimiter(',');

    fs::path gen_checkpoint, gen_audio, gen_out;
    std::string seed_pose = "mean";
    auto* gen = app.add_subcommand("generate", "Generate motion for an audio file");
    gen->add_option("checkpoint", gen_checkpoint, "Model checkpoint (.l2dc)")->required();
    gen->add_option("audio", gen_audio, "WAV file")->required();
    gen->add_option("--seed-pose", seed_pose, "Initial pose: 'mean', a skeleton .l2d or a coordinate .csv")
        ->capture_default_str();
    gen->add_option("--out", gen_out, "Output prefix; writes <out>.l2d and <out>.csv")->required();

    AnalyzeArgs aa;
    double bpm = 0.0;
    auto* analyze = app.add_subcommand("analyze", "Autocorrelation beat analysis of a motion sequence");
    analyze->add_option("motion", aa.motion, "Skeleton .l2d or coordinate .csv")->required();
    auto* bpm_opt = analyze->add_option("--bpm", bpm, "Tempo in beats per minute")->check(CLI::PositiveNumber);
    auto* beats_opt = analyze->add_option("--beats", aa.beats, "Text file of beat frame indices");
    bpm_opt->excludes(beats_opt);
    analyze->add_option("--out", aa.out, "Report JSON path")->required();
    analyze->add_option("--plot", aa.plot, "Optional correlogram SVG path");
    analyze->add_option("--max-lag", aa.max_lag, "Largest lag (default: three beat periods)");
    analyze->add_option("--tolerance", aa.tolerance, "Peak-to-beat tolerance in frames")->capture_default_str();

    fs::path render_in, render_out;
    std::string render_format = "svg";
    auto* render = app.add_subcommand("render", "Render coordinate rows as stick figures");
    render->add_option("coords", render_in, "Coordinate CSV (x0,y0,...,x14,y14)")->required();
    render->add_option("--out", render_out, "Output directory")->required();
    render->add_option("--format", render_format, "svg (one file per frame) or csv")
        ->capture_default_str()
        ->check(CLI::IsMember({"svg", "csv"}));

    std::vector<const char*> argv{"choreo"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
        if (analyze->parsed() && bpm_opt->count() == 0 && beats_opt->count() == 0) {
            throw CLI::RequiredError("analyze needs --bpm or --beats");
        }
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }
    if (bpm_opt->count() > 0) aa.bpm = bpm;

    try {
        if (prepare->parsed()) return cmd_prepare(manifest, prepare_out, g, out, err);
        if (train->parsed()) return cmd_train(std::move(ta), g, out);
        if (gen->parsed()) return cmd_generate(gen_checkpoint, gen_audio, seed_pose, gen_out, g, out);
        if (analyze->parsed()) return cmd_analyze(aa, g, out);
        if (render->parsed()) return cmd_render(render_in, render_out, render_format, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitUsage;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    std::vector<std::string> args(argv + (argc > 0 ? 1 : 0), argv + argc);
    return run(args, out, err);
}

}  // namespace choreo::cli
