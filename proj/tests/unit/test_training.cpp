#include "choreo/checkpoint.hpp"
#include "choreo/error.hpp"
#include "choreo/mel.hpp"
#include "choreo/training.hpp"

#include "synthetic.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

using namespace choreo;
using choreo::testing::random_tensor;
using choreo::testing::ScratchDir;

namespace {

ClipPair toy_clip(std::size_t frames, std::uint64_t seed, std::string name = "toy") {
    std::mt19937_64 rng(seed);
    SkeletonSequence s = skeleton_pipeline(choreo::testing::dance_motion(frames, 16.0, 1.0 + 0.1 * double(seed % 5)), 30);
    MelSequence m{random_tensor<float>(kMelBands, frames, rng), 30, 22050};
    return align_clip(std::move(name), std::move(s), std::move(m));
}

TrainingConfig small_training(std::size_t steps) {
    TrainingConfig c;
    c.window_length = 16;
    c.batch_size = 2;
    c.max_steps = steps;
    c.checkpoint_interval = 3;
    c.rng_seed = 5;
    return c;
}

FitOptions small_fit(const std::filesystem::path& out = {}) {
    FitOptions o;
    o.model = ModelConfig::with_widths(8, 4);
    o.init_seed = 2;
    o.out_dir = out;
    return o;
}

}  // namespace

TEST_SUITE("windows") {
    TEST_CASE("alignment truncates to the shorter stream") {
        std::mt19937_64 rng(1);
        SkeletonSequence s{random_tensor<float>(44, 31, rng), {}, 30};
        MelSequence m{random_tensor<float>(80, 30, rng), 30, 22050};
        const auto p = align_clip("a", s, m);
        CHECK(p.length() == 30);
        CHECK(p.mel.features.frames() == 30);
        CHECK(p.skeleton.frames == s.frames.slice_frames(0, 30));
        m.fps = 25;
        CHECK_THROWS_AS(align_clip("b", s, m), InvalidArgument);
    }

    TEST_CASE("a clip of exactly W frames is always sampled whole") {
        const std::vector<ClipPair> pairs{toy_clip(16, 1)};
        Rng rng(3);
        for (const auto& w : sample_windows(pairs, 16, 20, rng)) {
            CHECK(w.offset == 0);
            CHECK(w.skeleton == pairs[0].skeleton.frames);
            CHECK(w.mel == pairs[0].mel.features);
        }
    }

    TEST_CASE("short clips are skipped and all-short datasets rejected") {
        const std::vector<ClipPair> pairs{toy_clip(10, 1, "short"), toy_clip(40, 2, "long")};
        Rng rng(4);
        for (const auto& w : sample_windows(pairs, 16, 30, rng)) CHECK(w.clip == 1);
        CHECK_THROWS_AS(sample_windows(pairs, 41, 1, rng), InvalidArgument);
    }

    TEST_CASE("seeded sampling is reproducible and the state round-trips") {
        const std::vector<ClipPair> pairs{toy_clip(50, 1), toy_clip(70, 2)};
        Rng a(9), b(9);
        const auto wa = sample_windows(pairs, 16, 12, a);
        const auto wb = sample_windows(pairs, 16, 12, b);
        for (std::size_t i = 0; i < wa.size(); ++i) {
            CHECK(wa[i].clip == wb[i].clip);
            CHECK(wa[i].offset == wb[i].offset);
        }
        const auto saved = rng_state(a);
        Rng c;
        restore_rng(c, saved);
        CHECK(c() == a());
        CHECK_THROWS_AS(restore_rng(c, "garbage"), FormatError);
    }

    TEST_CASE("offsets are uniform (chi-square, 10k draws)") {
        const std::vector<ClipPair> pairs{toy_clip(100, 1)};
        Rng rng(2024);
        const std::size_t bins = 100 - 10 + 1;
        std::vector<double> counts(bins, 0.0);
        const std::size_t draws = 10000;
        for (const auto& w : sample_windows(pairs, 10, draws, rng)) counts[w.offset] += 1;
        const double expected = double(draws) / double(bins);
        double chi2 = 0;
        for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
        // 90 degrees of freedom: the 0.1% upper critical value is 137.2
        CHECK(chi2 < 137.2);
        CHECK(chi2 > 55.0);
    }
}

TEST_SUITE("loss") {
    TEST_CASE("perfect shifted predictions give zero") {
        const auto clip = toy_clip(20, 3);
        const auto& s = clip.skeleton.frames;
        Tensor pred(44, 20);
        for (std::size_t t = 0; t + 1 < 20; ++t) pred.set_column(t, s.column(t + 1));
        const auto loss = compute_loss(pred, s, 1.0);
        CHECK(loss.l1 == 0.0);
        CHECK(loss.limb < 1e-7);
    }

    TEST_CASE("hand-built two-frame case") {
        const Tensor pred(44, 2, 0.5f);
        const Tensor target(44, 2, 0.6f);
        const auto loss = compute_loss(pred, target, 1.0);
        CHECK(std::abs(loss.l1 - 0.1) < 1e-7);
        CHECK(std::abs(loss.limb - 0.6) < 1e-7);
        CHECK(loss.total == loss.l1 + loss.limb);
        const auto no_limb = compute_loss(pred, target, 0.0);
        CHECK(no_limb.total == no_limb.l1);
    }

    TEST_CASE("limb term uses scaled coordinate distances") {
        Tensor pred(44, 2, 0.0f);
        pred(2, 0) = 0.3f;  // Neck x
        pred(3, 0) = 0.4f;  // Neck y
        Tensor target(44, 2, 0.0f);
        target(30, 1) = 0.25f;  // Head-Neck stored length
        const auto loss = compute_loss(pred, target, 2.0);
        // four limbs touch the Neck; only Head-Neck has a nonzero target
        const double head_neck = std::abs(0.5 * kLimbScale - 0.25);
        CHECK(loss.limb == doctest::Approx((head_neck + 3 * 0.5 * kLimbScale) / 14.0).epsilon(1e-6));
        CHECK(loss.total == doctest::Approx(loss.l1 + 2.0 * loss.limb));
    }

    TEST_CASE("identity baseline is the mean one-frame difference") {
        const auto clip = toy_clip(40, 4);
        const auto& s = clip.skeleton.frames;
        double diff = 0;
        for (std::size_t c = 0; c < 44; ++c) {
            for (std::size_t t = 0; t + 1 < 40; ++t) diff += std::abs(double(s(c, t + 1)) - double(s(c, t)));
        }
        const auto base = identity_baseline(s, 1.0);
        CHECK(base.l1 == doctest::Approx(diff / (44.0 * 39.0)).epsilon(1e-12));
        CHECK(base.total >= base.l1);
    }

    TEST_CASE("tape loss agrees with the direct loss") {
        std::mt19937_64 rng(5);
        const auto pred = random_tensor<double>(44, 9, rng);
        const auto target = random_tensor<double>(44, 9, rng);
        Tape<double> tape;
        const auto vars = build_loss(tape, tape.constant(pred), target, 0.7);
        const auto direct = compute_loss(pred, target, 0.7);
        CHECK(tape.scalar(vars.l1) == doctest::Approx(direct.l1).epsilon(1e-12));
        CHECK(tape.scalar(vars.limb) == doctest::Approx(direct.limb).epsilon(1e-12));
        CHECK(tape.scalar(vars.total) == doctest::Approx(direct.total).epsilon(1e-12));
    }

    TEST_CASE("shape errors") {
        CHECK_THROWS_AS(compute_loss(Tensor(44, 3), Tensor(44, 4), 1.0), DimensionError);
        CHECK_THROWS_AS(compute_loss(Tensor(43, 3), Tensor(43, 3), 1.0), DimensionError);
        CHECK_THROWS_AS(compute_loss(Tensor(44, 1), Tensor(44, 1), 1.0), InvalidArgument);
    }
}

TEST_SUITE("train_step") {
    TEST_CASE("fixed-batch loss decreases on a constant-target task") {
        auto params = ModelParams::initialize(ModelConfig::with_widths(16, 8), 3);
        std::mt19937_64 rng(3);
        std::vector<Window> batch;
        for (int i = 0; i < 2; ++i) batch.push_back({Tensor(44, 16, 0.3f), random_tensor<float>(80, 16, rng), 0, 0});
        TrainingConfig cfg;
        AdamState state;
        double last = std::numeric_limits<double>::infinity();
        for (int i = 0; i < 10; ++i) {
            const auto r = train_step(params, state, batch, cfg);
            CHECK(r.step == std::uint64_t(i + 1));
            CHECK(r.total < last);
            last = r.total;
        }
    }

    TEST_CASE("perfect predictions leave parameters unchanged") {
        auto params = ModelParams::initialize(ModelConfig::with_widths(8, 4), 4);
        auto& w = params.tensors.at("decoder.output.weight");
        w = Tensor(w.channels(), w.frames());
        std::mt19937_64 rng(4);
        const auto mel = random_tensor<float>(80, 12, rng);
        const auto out = teacher_forced_forward(params, Tensor(44, 12, 0.5f), mel);
        Tensor target(44, 12);
        for (std::size_t t = 0; t < 12; ++t) target.set_column(t, out.column(0));
        CHECK(teacher_forced_forward(params, target, mel) == target);

        const auto before = params.tensors;
        AdamState state;
        TrainingConfig cfg;
        cfg.limb_loss_weight = 0.0;
        const auto r = train_step(params, state, {Window{target, mel, 0, 0}}, cfg);
        CHECK(r.l1 == 0.0);
        double worst = 0;
        for (const auto& [name, t] : params.tensors) {
            for (std::size_t i = 0; i < t.size(); ++i) {
                worst = std::max(worst, double(std::abs(t.data()[i] - before.at(name).data()[i])));
            }
        }
        CHECK(worst < 1e-9);
    }

    TEST_CASE("worker threads do not change the result") {
        const std::vector<ClipPair> pairs{toy_clip(40, 6)};
        auto run = [&](std::size_t threads) {
            auto params = ModelParams::initialize(ModelConfig::with_widths(8, 4), 6);
            AdamState state;
            TrainingConfig cfg = small_training(3);
            cfg.batch_size = 4;
            cfg.threads = threads;
            Rng rng(6);
            std::vector<double> losses;
            for (int i = 0; i < 3; ++i) losses.push_back(train_step(params, state, sample_windows(pairs, 16, 4, rng), cfg).total);
            return std::make_pair(losses, params.tensors);
        };
        CHECK(run(1) == run(3));
    }

    TEST_CASE("non-finite loss aborts") {
        auto params = ModelParams::initialize(ModelConfig::with_widths(8, 4), 7);
        AdamState state;
        Tensor skel(44, 8, 0.5f);
        skel(31, 4) = std::numeric_limits<float>::infinity();
        CHECK_THROWS_AS(train_step(params, state, {Window{skel, Tensor(80, 8), 0, 0}}, TrainingConfig{}), NumericError);
        CHECK_THROWS_AS(train_step(params, state, {}, TrainingConfig{}), InvalidArgument);
    }
}

TEST_SUITE("fit and checkpoints") {
    TEST_CASE("identical seeds give identical trajectories") {
        const std::vector<ClipPair> pairs{toy_clip(40, 1)};
        const auto a = fit(pairs, small_training(4), small_fit());
        const auto b = fit(pairs, small_training(4), small_fit());
        REQUIRE(a.log.size() == 4);
        for (std::size_t i = 0; i < 4; ++i) CHECK(a.log[i].total == b.log[i].total);
        CHECK(a.final.model.tensors == b.final.model.tensors);
    }

    TEST_CASE("resume is bit-identical to a straight run") {
        ScratchDir straight("fit-straight"), resumed("fit-resumed");
        const std::vector<ClipPair> pairs{toy_clip(40, 2, "a"), toy_clip(33, 3, "b")};
        const auto full = fit(pairs, small_training(7), small_fit(straight.path()));
        CHECK(std::filesystem::exists(straight / "checkpoint_000003.l2dc"));
        CHECK(std::filesystem::exists(straight / "checkpoint_000006.l2dc"));
        CHECK(std::filesystem::exists(straight / "final.l2dc"));

        auto opts = small_fit(resumed.path());
        opts.resume = load_checkpoint(straight / "checkpoint_000003.l2dc");
        const auto rest = fit(pairs, small_training(7), opts);
        REQUIRE(rest.log.size() == 4);
        for (std::size_t i = 0; i < 4; ++i) {
            CHECK(rest.log[i].step == full.log[3 + i].step);
            CHECK(rest.log[i].total == full.log[3 + i].total);
            CHECK(rest.log[i].l1 == full.log[3 + i].l1);
        }
        CHECK(rest.final.model.tensors == full.final.model.tensors);
    }

    TEST_CASE("resuming into the same directory keeps a complete log") {
        ScratchDir dir("fit-log");
        const std::vector<ClipPair> pairs{toy_clip(40, 2)};
        fit(pairs, small_training(5), small_fit(dir.path()));
        auto opts = small_fit(dir.path());
        opts.resume = load_checkpoint(dir / "checkpoint_000003.l2dc");
        fit(pairs, small_training(8), opts);
        const auto log = read_loss_log(dir / "loss.csv");
        REQUIRE(log.size() == 8);
        for (std::size_t i = 0; i < log.size(); ++i) CHECK(log[i].step == i + 1);
    }

    TEST_CASE("checkpoint round trip keeps forward outputs bit-identical") {
        ScratchDir dir("ckpt");
        const std::vector<ClipPair> pairs{toy_clip(40, 4)};
        const auto result = fit(pairs, small_training(2), small_fit(dir.path()));
        const auto back = load_checkpoint(dir / "final.l2dc");
        CHECK(back.model.config == result.final.model.config);
        CHECK(back.model.tensors == result.final.model.tensors);
        CHECK(back.corpus_norm == result.final.corpus_norm);
        CHECK(back.mean_pose == result.final.mean_pose);
        CHECK(back.fps == 30);
        CHECK(back.hyperparameters == result.final.hyperparameters);
        REQUIRE(back.optimizer);
        CHECK(back.optimizer->adam.step == 2);
        CHECK(back.optimizer->adam.first_moment == result.final.optimizer->adam.first_moment);
        CHECK(back.optimizer->adam.second_moment == result.final.optimizer->adam.second_moment);
        CHECK(back.optimizer->rng_state == result.final.optimizer->rng_state);
        const auto& s = pairs[0].skeleton.frames;
        const auto& m = pairs[0].mel.features;
        CHECK(teacher_forced_forward(back.model, s, m) == teacher_forced_forward(result.final.model, s, m));
    }

    TEST_CASE("mean pose and corpus norm") {
        const std::vector<ClipPair> pairs{toy_clip(20, 1), toy_clip(30, 2)};
        const auto mean = mean_pose(pairs);
        REQUIRE(mean.size() == 44);
        double x0 = 0;
        for (const auto& p : pairs) {
            for (std::size_t t = 0; t < p.length(); ++t) x0 += p.skeleton.frames(0, t);
        }
        CHECK(mean[0] == doctest::Approx(x0 / 50.0).epsilon(1e-6));
        const auto norm = corpus_norm(pairs);
        CHECK(norm.x_min == doctest::Approx((pairs[0].skeleton.norm.x_min + pairs[1].skeleton.norm.x_min) / 2));
    }

    TEST_CASE("malformed archives") {
        std::istringstream bad("L2DX");
        CHECK_THROWS_AS(read_tensor_archive(bad), FormatError);
        std::stringstream io;
        write_tensor_archive(io, {{"a", Tensor(1, 2, 1.0f)}, {"b/c", Tensor(3, 1, 2.0f)}});
        const auto back = read_tensor_archive(io);
        CHECK(back.size() == 2);
        CHECK(back.at("b/c") == Tensor(3, 1, 2.0f));
        CHECK_THROWS_AS(load_checkpoint("/nonexistent/final.l2dc"), IoError);
    }

    TEST_CASE("fit preconditions") {
        CHECK_THROWS_AS(fit({}, small_training(1), small_fit()), InvalidArgument);
        auto cfg = small_training(1);
        cfg.window_length = 1;
        CHECK_THROWS_AS(fit({toy_clip(20, 1)}, cfg, small_fit()), InvalidArgument);
        auto opts = small_fit();
        Checkpoint no_optimizer;
        no_optimizer.model = ModelParams::initialize(ModelConfig::with_widths(8, 4), 1);
        opts.resume = no_optimizer;
        CHECK_THROWS_AS(fit({toy_clip(20, 1)}, small_training(1), opts), InvalidArgument);
    }
}

TEST_SUITE("evaluation") {
    TEST_CASE("non-overlapping windows are averaged") {
        const std::vector<ClipPair> pairs{toy_clip(35, 8)};
        const auto params = ModelParams::initialize(ModelConfig::with_widths(8, 4), 8);
        const auto got = evaluate_windows(params, pairs, 16, 1.0);
        double l1 = 0;
        for (std::size_t off : {0, 16}) {
            const auto s = pairs[0].skeleton.frames.slice_frames(off, 16);
            const auto m = pairs[0].mel.features.slice_frames(off, 16);
            l1 += compute_loss(teacher_forced_forward(params, s, m), s, 1.0).l1;
        }
        CHECK(got.l1 == doctest::Approx(l1 / 2).epsilon(1e-12));
        CHECK_THROWS_AS(evaluate_windows(params, pairs, 36, 1.0), InvalidArgument);
    }
}
