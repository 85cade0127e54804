#pragma once

#include "choreo/adam.hpp"
#include "choreo/checkpoint.hpp"
#include "choreo/mel.hpp"
#include "choreo/model.hpp"
#include "choreo/skeleton.hpp"
#include "choreo/tape.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace choreo {

struct TrainingConfig {
    std::size_t window_length = 128;
    std::size_t batch_size = 8;
    double learning_rate = 2e-4;
    double limb_loss_weight = 1.0;
    std::size_t max_steps = 1000;
    std::size_t checkpoint_interval = 500;
    std::uint64_t rng_seed = 1;
    /// Worker threads for per-sample forward/backward. Results are reduced in
    /// sample order, so the thread count never changes the numbers.
    std::size_t threads = 1;

    void validate() const;
};

/// Time-aligned skeleton and mel features of one clip.
struct ClipPair {
    std::string name;
    SkeletonSequence skeleton;
    MelSequence mel;

    std::size_t length() const { return skeleton.length(); }
};

/// Truncates both streams to the shorter one; throws InvalidArgument if the
/// frame rates differ.
ClipPair align_clip(std::string name, SkeletonSequence skeleton, MelSequence mel);

struct Window {
    Tensor skeleton;  // 44 x W
    Tensor mel;       // 80 x W
    std::size_t clip = 0;
    std::size_t offset = 0;
};

using Rng = std::mt19937_64;

/// Draws `count` windows: a uniformly random clip among those with at least
/// W frames, then a uniformly random start offset.
std::vector<Window> sample_windows(const std::vector<ClipPair>& pairs, std::size_t window_length, std::size_t count,
                                   Rng& rng);

std::string rng_state(const Rng& rng);
void restore_rng(Rng& rng, const std::string& state);

struct LossTerms {
    double total = 0.0;
    double l1 = 0.0;
    double limb = 0.0;
};

/// Prediction column t is compared with target column t + 1: an L1 term over
/// all 44 dims and an L1 term between limb lengths recomputed from the
/// predicted coordinates (scaled by 1/sqrt(2)) and the target length block.
/// total = l1 + limb_weight * limb.
template <typename T>
LossTerms compute_loss(const Tensor2D<T>& predictions, const Tensor2D<T>& target, double limb_weight,
                       const SkeletonTopology& topology = default_topology());

/// Loss of the predictor that repeats the current frame.
LossTerms identity_baseline(const Tensor& skeleton, double limb_weight);

template <typename T>
struct LossVars {
    typename Tape<T>::Var total;
    typename Tape<T>::Var l1;
    typename Tape<T>::Var limb;
};

template <typename T>
LossVars<T> build_loss(Tape<T>& tape, typename Tape<T>::Var predictions, const Tensor2D<T>& target,
                       double limb_weight, const SkeletonTopology& topology = default_topology());

/// Teacher-forced loss of one window and its parameter gradients.
template <typename T>
std::pair<LossTerms, Gradients<T>> loss_and_gradients(const ModelConfig& config, const NamedTensors<T>& params,
                                                      const Tensor2D<T>& skeleton, const Tensor2D<T>& mel,
                                                      double limb_weight);

struct LossRecord {
    std::uint64_t step = 0;
    double total = 0.0;
    double l1 = 0.0;
    double limb = 0.0;
};

/// Mean loss over the batch, one backward pass per sample, one Adam update.
/// Throws NumericError if the loss is not finite.
LossRecord train_step(ModelParams& params, AdamState& state, const std::vector<Window>& batch,
                      const TrainingConfig& config);

/// Mean teacher-forced loss over consecutive non-overlapping windows.
LossTerms evaluate_windows(const ModelParams& params, const std::vector<ClipPair>& pairs, std::size_t window_length,
                           double limb_weight);

struct FitOptions {
    ModelConfig model;
    std::uint64_t init_seed = 1;
    /// Empty disables file output.
    std::filesystem::path out_dir;
    std::optional<Checkpoint> resume;
    std::vector<ClipPair> holdout;
    std::function<void(const LossRecord&)> on_step;
};

struct FitResult {
    std::vector<LossRecord> log;
    Checkpoint final;
    std::optional<LossTerms> holdout_loss;
};

/// Runs train_step until config.max_steps, writing
/// checkpoint_<step>.l2dc every checkpoint_interval steps, final.l2dc and
/// loss.csv into out_dir.
FitResult fit(const std::vector<ClipPair>& pairs, const TrainingConfig& config, const FitOptions& options);

/// Mean over every skeleton frame of the corpus (44 values).
std::vector<float> mean_pose(const std::vector<ClipPair>& pairs);
/// Average of the per-clip normalization extents.
NormMeta corpus_norm(const std::vector<ClipPair>& pairs);

void write_loss_log(const std::filesystem::path& path, const std::vector<LossRecord>& log);
std::vector<LossRecord> read_loss_log(const std::filesystem::path& path);

}  // namespace choreo
