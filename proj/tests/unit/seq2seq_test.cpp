#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "deer/data/samples.hpp"
#include "deer/envs/registry.hpp"
#include "deer/s2s/model.hpp"
#include "deer/s2s/training.hpp"

using namespace deer;
using delay::InformationState;
using nn::Matrix;
using nn::Vector;

namespace {

s2s::Seq2SeqConfig small_config(double p = 0.5) {
    s2s::Seq2SeqConfig c;
    c.state_dim = 3;
    c.action_dim = 2;
    c.hidden = 16;
    c.embed = 8;
    c.max_delay = 4;
    c.teacher_forcing = p;
    return c;
}

Vector random_vector(int n, nn::Rng& rng) {
    std::normal_distribution<double> d(0.0, 1.0);
    Vector v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

InformationState random_info(int z, nn::Rng& rng) {
    InformationState info{random_vector(3, rng), {}, z};
    for (int i = 0; i < z; ++i) info.actions.push_back(random_vector(2, rng));
    return info;
}

data::TrainingSample random_sample(int delay, int max_delay, nn::Rng& rng) {
    data::TrainingSample s;
    s.delay = delay;
    s.anchor_state = random_vector(3, rng);
    for (int k = 0; k < max_delay; ++k) {
        const bool real = k < delay;
        s.actions.push_back(real ? random_vector(2, rng) : Vector::Zero(2));
        s.labels.push_back(real ? random_vector(3, rng) : Vector::Zero(3));
        s.mask.push_back(real ? 1 : 0);
    }
    return s;
}

struct LinearData {
    std::unique_ptr<envs::Environment> env;
    data::TrajectoryStore store;
    std::vector<data::SampleRef> train, test;
};

LinearData linear_data(int trajectories, int max_delay) {
    LinearData d;
    d.env = envs::make_environment({{"name", "linear_system"}, {"horizon", 30}});
    d.store = data::collect(*d.env, data::CollectPolicy::random, trajectories, 5);
    auto refs = data::make_samples(d.store, max_delay, data::full_delay_set(max_delay));
    std::tie(d.train, d.test) = data::split(refs, 0.9, 1);
    return d;
}

}  // namespace

TEST(Encode, SingleActionRunsTwoGruSteps) {
    const auto model = s2s::Seq2SeqModel::create(small_config(), 3);
    nn::Rng rng(1);
    const auto info = random_info(1, rng);
    const Vector h1 = model.encoder_gru.step(model.state_embed.forward(info.base_state), Vector::Zero(16));
    const Vector h2 = model.encoder_gru.step(model.action_embed.forward(info.actions[0]), h1);
    const auto rep = model.encode(info);
    EXPECT_EQ(rep.delay, 1);
    EXPECT_LT((rep.values - h2).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Encode, LengthIsK1ForEveryDelay) {
    const auto model = s2s::Seq2SeqModel::create(small_config(), 3);
    nn::Rng rng(2);
    for (int z = 1; z <= 4; ++z) {
        const auto rep = model.encode(random_info(z, rng));
        EXPECT_EQ(rep.values.size(), 16);
        EXPECT_TRUE(rep.values.allFinite());
    }
}

TEST(Encode, RepeatedCallsAreBitIdentical) {
    const auto model = s2s::Seq2SeqModel::create(small_config(), 3);
    nn::Rng rng(4);
    const auto info = random_info(3, rng);
    EXPECT_EQ(model.encode(info).values, model.encode(info).values);
}

TEST(Encode, MalformedInformationStatesThrow) {
    const auto model = s2s::Seq2SeqModel::create(small_config(), 3);
    nn::Rng rng(5);
    auto info = random_info(1, rng);
    info.actions.clear();
    info.z = 0;
    EXPECT_THROW(model.encode(info), std::invalid_argument);
    info = random_info(2, rng);
    info.z = 3;
    EXPECT_THROW(model.encode(info), std::invalid_argument);
    info = random_info(2, rng);
    info.base_state = Vector::Zero(4);
    EXPECT_THROW(model.encode(info), nn::ShapeError);
}

TEST(DecodeTrain, PaddedTailIsNeverRead) {
    const auto model = s2s::Seq2SeqModel::create(small_config(1.0), 8);
    nn::Rng rng(6);
    const auto sample = random_sample(2, 4, rng);
    auto garbage = sample;
    garbage.actions[3] = Vector::Constant(2, 50.0);
    garbage.labels[2] = Vector::Constant(3, -7.0);
    nn::Rng r1(0), r2(0);
    const auto a = s2s::decode_train(model, sample, r1);
    const auto b = s2s::decode_train(model, garbage, r2);
    EXPECT_EQ(a.second, b.second);
    ASSERT_EQ(a.first.size(), 2u);
    for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(a.first[i], b.first[i]);
}

TEST(DecodeTrain, ZeroProbabilityFeedsGroundTruth) {
    const auto model = s2s::Seq2SeqModel::create(small_config(0.0), 8);
    nn::Rng rng(7);
    const auto sample = random_sample(4, 4, rng);
    const auto batch = s2s::make_batch(model, sample);
    const auto teacher = s2s::forward(model, batch, Matrix::Zero(4, 1));
    nn::Rng r(3);
    const auto [states, loss] = s2s::decode_train(model, sample, r);
    EXPECT_EQ(loss, teacher.loss);

    // Step 3 is fed label 2: changing it moves step 3 and later but not earlier steps.
    auto moved = sample;
    moved.labels[1] = Vector::Constant(3, 9.0);
    nn::Rng r2(3);
    const auto again = s2s::decode_train(model, moved, r2).first;
    EXPECT_EQ(states[0], again[0]);
    EXPECT_EQ(states[1], again[1]);
    EXPECT_NE(states[2], again[2]);
}

TEST(DecodeTrain, FullProbabilityIsAutoregressive) {
    auto model = s2s::Seq2SeqModel::create(small_config(1.0), 9);
    model.trained = true;
    nn::Rng rng(8);
    const auto sample = random_sample(3, 4, rng);
    nn::Rng r(1);
    const auto states = s2s::decode_train(model, sample, r).first;
    InformationState info{sample.anchor_state, {sample.actions[0], sample.actions[1], sample.actions[2]}, 3};
    const auto predicted = model.predict_states(info);
    ASSERT_EQ(predicted.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_LT((states[i] - predicted[i]).cwiseAbs().maxCoeff(), 1e-12);

    // Labels do not enter the autoregressive path.
    auto other = sample;
    for (int k = 0; k < 3; ++k) other.labels[static_cast<std::size_t>(k)] = Vector::Constant(3, 4.0);
    nn::Rng r2(1);
    const auto states2 = s2s::decode_train(model, other, r2).first;
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(states[i], states2[i]);
}

TEST(DecodeTrain, TeacherAndAutoregressiveAgreeOnPerfectLabels) {
    auto model = s2s::Seq2SeqModel::create(small_config(), 10);
    nn::Rng rng(9);
    auto sample = random_sample(4, 4, rng);
    const auto batch = s2s::make_batch(model, sample);
    const auto free_run = s2s::forward(model, batch, Matrix::Ones(4, 1));
    auto perfect = batch;
    perfect.labels = free_run.predictions;
    const auto teacher = s2s::forward(model, perfect, Matrix::Zero(4, 1));
    const auto autoreg = s2s::forward(model, perfect, Matrix::Ones(4, 1));
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(teacher.predictions[i], autoreg.predictions[i]);
    EXPECT_EQ(autoreg.loss, 0.0);
}

TEST(DecodeTrain, ZeroParametersGiveMeanSquaredLabel) {
    const auto model = s2s::Seq2SeqModel::zeros(small_config());
    nn::Rng rng(10);
    for (int d = 1; d <= 4; ++d) {
        const auto sample = random_sample(d, 4, rng);
        double sum = 0.0;
        for (int k = 0; k < d; ++k) sum += sample.labels[static_cast<std::size_t>(k)].squaredNorm();
        nn::Rng r(0);
        EXPECT_NEAR(s2s::decode_train(model, sample, r).second, sum / (3.0 * d), 1e-15);
    }
}

TEST(DecodeTrain, NonFiniteLossAborts) {
    auto model = s2s::Seq2SeqModel::create(small_config(), 11);
    nn::Rng rng(11);
    auto sample = random_sample(2, 4, rng);
    sample.labels[1][0] = std::numeric_limits<double>::quiet_NaN();
    auto batch = s2s::make_batch(model, sample);
    auto grad = model.zeros_like();
    EXPECT_THROW(s2s::loss_and_gradient(model, batch, Matrix::Zero(2, 1), grad), nn::NonFiniteError);
}

TEST(FeedMask, FirstRowIsUnusedAndRateFollowsP) {
    nn::Rng rng(12);
    const Matrix m = s2s::draw_feed_mask(5, 4000, 0.3, rng);
    EXPECT_TRUE(m.row(0).isZero(0.0));
    EXPECT_NEAR(m.bottomRows(4).mean(), 0.3, 0.02);
    EXPECT_TRUE(s2s::draw_feed_mask(3, 10, 0.0, rng).isZero(0.0));
    EXPECT_TRUE(s2s::draw_feed_mask(3, 10, 1.0, rng).bottomRows(2).isOnes(0.0));
}

TEST(MakeBatches, GroupsShareOneDelay) {
    std::vector<data::SampleRef> refs;
    for (std::uint32_t i = 0; i < 50; ++i) refs.push_back({0, i, static_cast<std::uint16_t>(1 + i % 3)});
    nn::Rng rng(0);
    const auto batches = s2s::make_batches(refs, 7, rng);
    std::size_t total = 0;
    for (const auto& b : batches) {
        EXPECT_LE(b.size(), 7u);
        for (auto i : b) EXPECT_EQ(refs[i].delay, refs[b.front()].delay);
        total += b.size();
    }
    EXPECT_EQ(total, 50u);
}

TEST(Pretrain, ZeroEpochsLeaveTheModelUnchanged) {
    auto d = linear_data(4, 2);
    auto cfg = small_config();
    cfg.state_dim = 4;
    auto model = s2s::Seq2SeqModel::create(cfg, 1);
    const auto before = model.to_checkpoint().to_bytes();
    s2s::PretrainConfig pc;
    pc.epochs = 0;
    const auto result = s2s::pretrain(model, d.store, d.train, d.test, pc);
    EXPECT_TRUE(result.train_curve.empty());
    EXPECT_TRUE(result.test_curve.empty());
    EXPECT_EQ(model.to_checkpoint().to_bytes(), before);
}

TEST(Pretrain, EmptySetsAreRejected) {
    auto d = linear_data(2, 2);
    auto cfg = small_config();
    cfg.state_dim = 4;
    auto model = s2s::Seq2SeqModel::create(cfg, 1);
    EXPECT_THROW(s2s::pretrain(model, d.store, {}, d.test, {}), std::invalid_argument);
}

TEST(Pretrain, SameSeedSameCurveAndLossDrops) {
    auto d = linear_data(20, 3);
    auto cfg = small_config();
    cfg.state_dim = 4;
    cfg.max_delay = 3;
    s2s::PretrainConfig pc;
    pc.epochs = 4;
    pc.batch_size = 32;
    pc.seed = 3;
    std::vector<std::string> bytes;
    std::vector<s2s::PretrainResult> results;
    for (int rep = 0; rep < 2; ++rep) {
        auto model = s2s::Seq2SeqModel::create(cfg, 2);
        model.normalizer = s2s::Normalizer::fit(d.store, d.env->spec());
        results.push_back(s2s::pretrain(model, d.store, d.train, d.test, pc));
        EXPECT_TRUE(model.trained);
        bytes.push_back(model.to_checkpoint().to_bytes());
    }
    EXPECT_EQ(results[0].train_curve, results[1].train_curve);
    EXPECT_EQ(results[0].test_curve, results[1].test_curve);
    EXPECT_EQ(bytes[0], bytes[1]);
    EXPECT_LT(results[0].test_curve.back(), results[0].test_curve.front());
}

TEST(PredictStates, LengthMatchesZ) {
    auto model = s2s::Seq2SeqModel::create(small_config(), 1);
    model.trained = true;
    nn::Rng rng(13);
    for (int z = 1; z <= 4; ++z) {
        const auto info = random_info(z, rng);
        const auto a = model.predict_states(info);
        EXPECT_EQ(static_cast<int>(a.size()), z);
        const auto b = model.predict_states(info);
        for (int i = 0; i < z; ++i) EXPECT_EQ(a[static_cast<std::size_t>(i)], b[static_cast<std::size_t>(i)]);
    }
}

TEST(PredictStates, UntrainedModelWarnsWithoutThrowing) {
    int warnings = 0;
    s2s::set_untrained_warning_handler([&](const std::string&) { ++warnings; });
    auto model = s2s::Seq2SeqModel::create(small_config(), 1);
    nn::Rng rng(14);
    const auto info = random_info(2, rng);
    EXPECT_NO_THROW(model.predict_states(info));
    EXPECT_EQ(warnings, 1);
    model.trained = true;
    model.predict_states(info);
    EXPECT_EQ(warnings, 1);
    s2s::set_untrained_warning_handler({});
}

TEST(Seq2SeqCheckpoint, RoundTripKeepsEncodings) {
    auto d = linear_data(3, 2);
    auto cfg = small_config();
    cfg.state_dim = 4;
    auto model = s2s::Seq2SeqModel::create(cfg, 21);
    model.normalizer = s2s::Normalizer::fit(d.store, d.env->spec());
    model.trained = true;
    const auto back = s2s::Seq2SeqModel::from_checkpoint(nn::Checkpoint::from_bytes(model.to_checkpoint().to_bytes()));
    EXPECT_EQ(back.config.hidden, 16);
    EXPECT_EQ(back.config.max_delay, 4);
    EXPECT_TRUE(back.trained);
    nn::Rng rng(15);
    InformationState info{random_vector(4, rng), {random_vector(2, rng), random_vector(2, rng)}, 2};
    EXPECT_EQ(back.encode(info).values, model.encode(info).values);
}

TEST(Normalizer, FitStandardizesStates) {
    auto d = linear_data(10, 1);
    const auto n = s2s::Normalizer::fit(d.store, d.env->spec());
    Matrix all(4, 0);
    for (const auto& t : d.store.trajectories)
        for (std::size_t i = 0; i < t.num_states(); ++i) {
            all.conservativeResize(4, all.cols() + 1);
            all.col(all.cols() - 1) = t.state(i);
        }
    const Matrix z = n.state(all);
    EXPECT_LT(z.rowwise().mean().cwiseAbs().maxCoeff(), 1e-10);
    const Vector var = z.cwiseAbs2().rowwise().mean();
    EXPECT_LT((var.array() - 1.0).abs().maxCoeff(), 1e-10);
    EXPECT_LT((n.unstate(z) - all).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Seq2SeqConfig, Validation) {
    auto c = small_config();
    c.teacher_forcing = 1.5;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = small_config();
    c.max_delay = 0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
}
