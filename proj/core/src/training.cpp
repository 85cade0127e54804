#include "choreo/training.hpp"

#include "choreo/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <future>
#include <iomanip>
#include <sstream>

namespace choreo {

namespace {

std::vector<std::pair<std::size_t, std::size_t>> limb_pairs(const SkeletonTopology& topology) {
    return {topology.limbs.begin(), topology.limbs.end()};
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string checkpoint_name(std::uint64_t step) {
    std::ostringstream ss;
    ss << "checkpoint_" << std::setw(6) << std::setfill('0') << step << ".l2dc";
    return ss.str();
}

}  // namespace

void TrainingConfig::validate() const {
    if (window_length < 2) throw InvalidArgument("training: window length must be at least 2");
    if (batch_size == 0) throw InvalidArgument("training: batch size must be positive");
    if (!(learning_rate > 0.0)) throw InvalidArgument("training: learning rate must be positive");
    if (!(limb_loss_weight >= 0.0)) throw InvalidArgument("training: limb loss weight must be non-negative");
    if (checkpoint_interval == 0) throw InvalidArgument("training: checkpoint interval must be positive");
    if (threads == 0) throw InvalidArgument("training: thread count must be positive");
}

ClipPair align_clip(std::string name, SkeletonSequence skeleton, MelSequence mel) {
    if (std::abs(skeleton.fps - mel.fps) > 1e-9) {
        throw InvalidArgument("clip '" + name + "': skeleton and mel frame rates differ");
    }
    const std::size_t frames = std::min(skeleton.length(), mel.features.frames());
    if (skeleton.length() != frames) skeleton.frames = skeleton.frames.slice_frames(0, frames);
    if (mel.features.frames() != frames) mel.features = mel.features.slice_frames(0, frames);
    return ClipPair{std::move(name), std::move(skeleton), std::move(mel)};
}

std::vector<Window> sample_windows(const std::vector<ClipPair>& pairs, std::size_t window_length, std::size_t count,
                                   Rng& rng) {
    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (pairs[i].length() >= window_length) eligible.push_back(i);
    }
    if (eligible.empty()) {
        throw InvalidArgument("sample_windows: every clip is shorter than the window (" +
                              std::to_string(window_length) + " frames)");
    }
    std::vector<Window> out;
    out.reserve(count);
    for (std::size_t n = 0; n < count; ++n) {
        std::uniform_int_distribution<std::size_t> pick_clip(0, eligible.size() - 1);
        const std::size_t clip = eligible[pick_clip(rng)];
        const auto& pair = pairs[clip];
        std::uniform_int_distribution<std::size_t> pick_offset(0, pair.length() - window_length);
        const std::size_t offset = pick_offset(rng);
        out.push_back(Window{pair.skeleton.frames.slice_frames(offset, window_length),
                             pair.mel.features.slice_frames(offset, window_length), clip, offset});
    }
    return out;
}

std::string rng_state(const Rng& rng) {
    std::ostringstream ss;
    ss << rng;
    return ss.str();
}

void restore_rng(Rng& rng, const std::string& state) {
    std::istringstream ss(state);
    ss >> rng;
    if (!ss) throw FormatError("invalid random generator state");
}

template <typename T>
LossTerms compute_loss(const Tensor2D<T>& predictions, const Tensor2D<T>& target, double limb_weight,
                       const SkeletonTopology& topology) {
    if (predictions.channels() != kFrameDims || target.channels() != kFrameDims ||
        predictions.frames() != target.frames()) {
        throw DimensionError("compute_loss: predictions and target must both be 44 x W");
    }
    const std::size_t w = predictions.frames();
    if (w < 2) throw InvalidArgument("compute_loss: need at least two frames");

    double l1 = 0.0;
    for (std::size_t c = 0; c < kFrameDims; ++c) {
        for (std::size_t t = 0; t + 1 < w; ++t) {
            l1 += std::abs(static_cast<double>(predictions(c, t)) - static_cast<double>(target(c, t + 1)));
        }
    }
    l1 /= static_cast<double>(kFrameDims * (w - 1));

    double limb = 0.0;
    for (std::size_t e = 0; e < kLimbCount; ++e) {
        const auto [a, b] = topology.limbs[e];
        for (std::size_t t = 0; t + 1 < w; ++t) {
            const double dx = static_cast<double>(predictions(2 * a, t)) - predictions(2 * b, t);
            const double dy = static_cast<double>(predictions(2 * a + 1, t)) - predictions(2 * b + 1, t);
            const double len = std::sqrt(dx * dx + dy * dy) * kLimbScale;
            limb += std::abs(len - static_cast<double>(target(kCoordDims + e, t + 1)));
        }
    }
    limb /= static_cast<double>(kLimbCount * (w - 1));
    return LossTerms{l1 + limb_weight * limb, l1, limb};
}

LossTerms identity_baseline(const Tensor& skeleton, double limb_weight) {
    return compute_loss(skeleton, skeleton, limb_weight);
}

template <typename T>
LossVars<T> build_loss(Tape<T>& tape, typename Tape<T>::Var predictions, const Tensor2D<T>& target,
                       double limb_weight, const SkeletonTopology& topology) {
    const auto& pred = tape.value(predictions);
    if (pred.channels() != kFrameDims || target.channels() != kFrameDims || pred.frames() != target.frames()) {
        throw DimensionError("build_loss: predictions and target must both be 44 x W");
    }
    const std::size_t w = pred.frames();
    if (w < 2) throw InvalidArgument("build_loss: need at least two frames");

    const auto shifted = tape.slice_frames(predictions, 0, w - 1);
    const auto next = target.slice_frames(1, w - 1);
    const auto l1 = tape.l1_loss(shifted, tape.constant(next));
    const auto pairs = limb_pairs(topology);
    const auto lengths =
        tape.pair_distances(tape.slice_channels(shifted, 0, kCoordDims), pairs, static_cast<T>(kLimbScale));
    const auto limb = tape.l1_loss(lengths, tape.constant(next.slice_channels(kCoordDims, kLimbCount)));
    const auto total = tape.add(l1, tape.scale_shift(limb, static_cast<T>(limb_weight), T{0}));
    return {total, l1, limb};
}

template <typename T>
std::pair<LossTerms, Gradients<T>> loss_and_gradients(const ModelConfig& config, const NamedTensors<T>& params,
                                                      const Tensor2D<T>& skeleton, const Tensor2D<T>& mel,
                                                      double limb_weight) {
    Tape<T> tape;
    NetworkGraph<T> net(tape, config, params);
    const auto pred = net.forward(tape.constant(skeleton), tape.constant(mel));
    const auto loss = build_loss(tape, pred, skeleton, limb_weight);
    const double l1 = tape.scalar(loss.l1);
    const double limb = tape.scalar(loss.limb);
    return {LossTerms{l1 + limb_weight * limb, l1, limb}, tape.backward(loss.total)};
}

LossRecord train_step(ModelParams& params, AdamState& state, const std::vector<Window>& batch,
                      const TrainingConfig& config) {
    if (batch.empty()) throw InvalidArgument("train_step: empty batch");
    using Result = std::pair<LossTerms, Gradients<float>>;
    std::vector<Result> results(batch.size());

    auto run = [&](std::size_t i) {
        results[i] = loss_and_gradients(params.config, params.tensors, batch[i].skeleton, batch[i].mel,
                                        config.limb_loss_weight);
    };
    if (config.threads <= 1 || batch.size() == 1) {
        for (std::size_t i = 0; i < batch.size(); ++i) run(i);
    } else {
        for (std::size_t first = 0; first < batch.size(); first += config.threads) {
            std::vector<std::future<void>> jobs;
            for (std::size_t i = first; i < std::min(batch.size(), first + config.threads); ++i) {
                jobs.push_back(std::async(std::launch::async, run, i));
            }
            for (auto& j : jobs) j.get();
        }
    }

    const double inv = 1.0 / static_cast<double>(batch.size());
    LossRecord record{state.step + 1, 0.0, 0.0, 0.0};
    Gradients<float> grads = std::move(results[0].second);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        record.l1 += results[i].first.l1;
        record.limb += results[i].first.limb;
        if (i == 0) continue;
        for (auto& [name, g] : grads) {
            const auto other = results[i].second.at(name).data();
            auto dst = g.data();
            for (std::size_t n = 0; n < dst.size(); ++n) dst[n] += other[n];
        }
    }
    record.l1 *= inv;
    record.limb *= inv;
    record.total = record.l1 + config.limb_loss_weight * record.limb;
    if (!std::isfinite(record.total)) {
        throw NumericError("train_step " + std::to_string(record.step) + ": non-finite loss (l1=" +
                           format_double(record.l1) + ", limb=" + format_double(record.limb) + ")");
    }
    for (auto& [name, g] : grads) {
        for (auto& v : g.data()) v = static_cast<float>(v * inv);
    }
    adam_step(params.tensors, grads, state);
    return record;
}

LossTerms evaluate_windows(const ModelParams& params, const std::vector<ClipPair>& pairs, std::size_t window_length,
                           double limb_weight) {
    LossTerms sum;
    std::size_t count = 0;
    for (const auto& pair : pairs) {
        for (std::size_t offset = 0; offset + window_length <= pair.length(); offset += window_length) {
            const auto skel = pair.skeleton.frames.slice_frames(offset, window_length);
            const auto mel = pair.mel.features.slice_frames(offset, window_length);
            const auto terms = compute_loss(teacher_forced_forward(params, skel, mel), skel, limb_weight);
            sum.l1 += terms.l1;
            sum.limb += terms.limb;
            ++count;
        }
    }
    if (count == 0) throw InvalidArgument("evaluate_windows: no clip covers a full window");
    sum.l1 /= static_cast<double>(count);
    sum.limb /= static_cast<double>(count);
    sum.total = sum.l1 + limb_weight * sum.limb;
    return sum;
}

std::vector<float> mean_pose(const std::vector<ClipPair>& pairs) {
    std::vector<double> sum(kFrameDims, 0.0);
    std::size_t frames = 0;
    for (const auto& p : pairs) {
        for (std::size_t t = 0; t < p.length(); ++t) {
            for (std::size_t c = 0; c < kFrameDims; ++c) sum[c] += p.skeleton.frames(c, t);
        }
        frames += p.length();
    }
    if (frames == 0) throw InvalidArgument("mean_pose: no frames");
    std::vector<float> out(kFrameDims);
    for (std::size_t c = 0; c < kFrameDims; ++c) out[c] = static_cast<float>(sum[c] / static_cast<double>(frames));
    return out;
}

NormMeta corpus_norm(const std::vector<ClipPair>& pairs) {
    if (pairs.empty()) throw InvalidArgument("corpus_norm: no clips");
    NormMeta m{0.0, 0.0, 0.0, 0.0};
    for (const auto& p : pairs) {
        m.x_min += p.skeleton.norm.x_min;
        m.x_max += p.skeleton.norm.x_max;
        m.y_min += p.skeleton.norm.y_min;
        m.y_max += p.skeleton.norm.y_max;
    }
    const auto n = static_cast<double>(pairs.size());
    return {m.x_min / n, m.x_max / n, m.y_min / n, m.y_max / n};
}

void write_loss_log(const std::filesystem::path& path, const std::vector<LossRecord>& log) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << "step,total,l1,limb\n";
    for (const auto& r : log) {
        out << r.step << ',' << format_double(r.total) << ',' << format_double(r.l1) << ',' << format_double(r.limb)
            << '\n';
    }
    if (!out) throw IoError("failed writing " + path.string());
}

std::vector<LossRecord> read_loss_log(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<LossRecord> log;
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        LossRecord r;
        char c1 = 0, c2 = 0, c3 = 0;
        std::istringstream ss(line);
        if (!(ss >> r.step >> c1 >> r.total >> c2 >> r.l1 >> c3 >> r.limb)) {
            throw FormatError(path.string() + ": malformed loss row '" + line + "'");
        }
        log.push_back(r);
    }
    return log;
}

FitResult fit(const std::vector<ClipPair>& pairs, const TrainingConfig& config, const FitOptions& options) {
    config.validate();
    if (pairs.empty()) throw InvalidArgument("fit: empty dataset");

    FitResult result;
    Checkpoint& ck = result.final;
    Rng rng(config.rng_seed);
    AdamState adam;
    adam.config.learning_rate = config.learning_rate;

    if (options.resume) {
        ck = *options.resume;
        if (!ck.optimizer) throw InvalidArgument("fit: resume checkpoint carries no optimizer state");
        adam = ck.optimizer->adam;
        restore_rng(rng, ck.optimizer->rng_state);
    } else {
        ck.model = ModelParams::initialize(options.model, options.init_seed);
        ck.fps = pairs.front().skeleton.fps;
        ck.sample_rate = pairs.front().mel.sample_rate;
    }
    ck.corpus_norm = corpus_norm(pairs);
    ck.mean_pose = mean_pose(pairs);
    ck.hyperparameters = {{"window_length", static_cast<double>(config.window_length)},
                          {"batch_size", static_cast<double>(config.batch_size)},
                          {"learning_rate", config.learning_rate},
                          {"limb_loss_weight", config.limb_loss_weight},
                          {"max_steps", static_cast<double>(config.max_steps)},
                          {"rng_seed", static_cast<double>(config.rng_seed)}};

    const bool write = !options.out_dir.empty();
    if (write) {
        std::filesystem::create_directories(options.out_dir);
        const auto log_path = options.out_dir / "loss.csv";
        if (options.resume && std::filesystem::exists(log_path)) {
            for (const auto& r : read_loss_log(log_path)) {
                if (r.step <= adam.step) result.log.push_back(r);
            }
        }
    }

    auto snapshot = [&] {
        ck.optimizer = OptimizerSnapshot{adam, rng_state(rng)};
    };

    while (adam.step < config.max_steps) {
        const auto batch = sample_windows(pairs, config.window_length, config.batch_size, rng);
        const auto record = train_step(ck.model, adam, batch, config);
        result.log.push_back(record);
        if (options.on_step) options.on_step(record);
        if (write && adam.step % config.checkpoint_interval == 0) {
            snapshot();
            save_checkpoint(options.out_dir / checkpoint_name(adam.step), ck);
            write_loss_log(options.out_dir / "loss.csv", result.log);
        }
    }

    snapshot();
    if (!options.holdout.empty()) {
        result.holdout_loss = evaluate_windows(ck.model, options.holdout, config.window_length, config.limb_loss_weight);
    }
    if (write) {
        save_checkpoint(options.out_dir / "final.l2dc", ck);
        write_loss_log(options.out_dir / "loss.csv", result.log);
    }
    return result;
}

template LossTerms compute_loss(const Tensor2D<float>&, const Tensor2D<float>&, double, const SkeletonTopology&);
template LossTerms compute_loss(const Tensor2D<double>&, const Tensor2D<double>&, double, const SkeletonTopology&);
template LossVars<float> build_loss(Tape<float>&, Tape<float>::Var, const Tensor2D<float>&, double,
                                    const SkeletonTopology&);
template LossVars<double> build_loss(Tape<double>&, Tape<double>::Var, const Tensor2D<double>&, double,
                                     const SkeletonTopology&);
template std::pair<LossTerms, Gradients<float>> loss_and_gradients(const ModelConfig&, const NamedTensors<float>&,
                                                                   const Tensor2D<float>&, const Tensor2D<float>&,
                                                                   double);
template std::pair<LossTerms, Gradients<double>> loss_and_gradients(const ModelConfig&, const NamedTensors<double>&,
                                                                    const Tensor2D<double>&, const Tensor2D<double>&,
                                                                    double);

}  // namespace choreo
