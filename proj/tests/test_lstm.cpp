#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "core/common.hpp"
#include "core/lstm.hpp"
#include "core/trainer.hpp"
#include "support/naive_lstm.hpp"
#include "support/tempdir.hpp"

using namespace rhythmlab;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

std::vector<MatrixXd> random_inputs(int steps, int dim, std::mt19937_64& rng, int batch = 1) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<MatrixXd> inputs(static_cast<size_t>(steps));
    for (auto& x : inputs) {
        x.resize(batch, dim);
        for (Index i = 0; i < x.size(); ++i) x.data()[i] = unit(rng);
    }
    return inputs;
}

FeatureSequence features_from(const std::vector<MatrixXd>& inputs) {
    FeatureSequence f;
    const Index steps = static_cast<Index>(inputs.size());
    f.levels.resize(steps, 3);
    f.deltas.resize(steps, 3);
    for (Index t = 0; t < steps; ++t) {
        for (int c = 0; c < 3; ++c) {
            f.levels(t, c) = inputs[static_cast<size_t>(t)](0, c);
            f.deltas(t, c) = inputs[static_cast<size_t>(t)](0, 3 + c);
        }
    }
    return f;
}

double forward_loss(const LstmModel& model, const std::vector<MatrixXd>& inputs, int label,
                    BatchMasks* masks) {
    LstmState state;
    state.reset(1, model.hidden());
    std::vector<MatrixXd> probs;
    lstm_forward_steps(model, inputs, masks ? ForwardMode::train : ForwardMode::eval, masks,
                       nullptr, state, nullptr, &probs);
    MatrixXd seq_probs(static_cast<Index>(probs.size()), model.num_labels());
    for (size_t t = 0; t < probs.size(); ++t) seq_probs.row(static_cast<Index>(t)) = probs[t].row(0);
    return sequence_loss(seq_probs, label, 1.0);
}

// Max relative error between analytic and central finite-difference gradients.
double gradient_check(uint64_t seed, BatchMasks* masks) {
    LstmModel model = init_model({"a", "b", "c"}, 4, seed);
    model.dropout = {0.0, 0.0, 0.0};
    auto rng = make_rng(mix_seed(seed, 17));
    const auto inputs = random_inputs(3, 6, rng);
    const int label = static_cast<int>(seed % 3);

    SliceTape tape;
    LstmState state;
    state.reset(1, model.hidden());
    lstm_forward_steps(model, inputs, masks ? ForwardMode::train : ForwardMode::eval, masks,
                       nullptr, state, &tape, nullptr);
    ParamTensors grads = ParamTensors::like(model);
    VectorXd weight = VectorXd::Ones(1);
    lstm_slice_backward(model, tape, masks, {label}, weight, grads);

    auto model_refs = tensor_refs(model);
    auto grad_refs = tensor_refs(grads);
    const double h = 1e-5;
    double worst = 0.0;
    for (size_t k = 0; k < model_refs.size(); ++k) {
        const Index n = model_refs[k].rows * model_refs[k].cols;
        for (Index i = 0; i < n; ++i) {
            double& theta = model_refs[k].data[i];
            const double saved = theta;
            theta = saved + h;
            const double up = forward_loss(model, inputs, label, masks);
            theta = saved - h;
            const double down = forward_loss(model, inputs, label, masks);
            theta = saved;
            const double fd = (up - down) / (2.0 * h);
            const double analytic = grad_refs[k].data[i];
            const double scale = std::max({std::abs(fd), std::abs(analytic), 1e-4});
            worst = std::max(worst, std::abs(fd - analytic) / scale);
        }
    }
    return worst;
}

BatchMasks ones_masks(const LstmModel& model, int steps) {
    BatchMasks masks;
    masks.rec1 = MatrixXd::Ones(1, model.hidden());
    masks.rec2 = MatrixXd::Ones(1, model.hidden());
    for (int t = 0; t < steps; ++t) {
        masks.between.push_back(MatrixXd::Ones(1, model.hidden()));
        masks.dense.push_back(MatrixXd::Ones(1, model.hidden()));
    }
    return masks;
}

}  // namespace

TEST_CASE("init_model determinism and construction") {
    const LstmModel a = init_model({"x", "y", "z"}, 150, 42);
    const LstmModel b = init_model({"x", "y", "z"}, 150, 42);
    CHECK((a.layer1.w - b.layer1.w).norm() == 0.0);
    CHECK((a.dense_w - b.dense_w).norm() == 0.0);
    const LstmModel c = init_model({"x", "y", "z"}, 150, 43);
    CHECK((a.layer1.w - c.layer1.w).norm() > 0.0);

    // forget-gate biases are 1, everything else 0
    for (int j = 0; j < 150; ++j) {
        CHECK(a.layer1.b(kGateForget * 150 + j) == 1.0);
        CHECK(a.layer2.b(kGateForget * 150 + j) == 1.0);
        CHECK(a.layer1.b(kGateInput * 150 + j) == 0.0);
        CHECK(a.layer1.b(kGateOutput * 150 + j) == 0.0);
    }

    std::vector<std::string> labels21;
    for (int i = 0; i < 21; ++i) labels21.push_back("l" + std::to_string(i));
    const LstmModel wide = init_model(labels21, 150, 1);
    CHECK(wide.dense_w.rows() == 150);
    CHECK(wide.dense_w.cols() == 21);

    CHECK_THROWS_AS(init_model({"only"}, 150, 1), Error);
}

TEST_CASE("zero model emits uniform distributions") {
    LstmModel model = init_model({"a", "b", "c"}, 5, 0);
    model.layer1.setZero();
    model.layer2.setZero();
    model.dense_w.setZero();
    model.dense_b.setZero();
    auto rng = make_rng(1);
    const auto inputs = random_inputs(4, 6, rng);
    const ForwardResult fwd = forward(model, features_from(inputs), ForwardMode::eval);
    for (Index t = 0; t < fwd.probs.rows(); ++t)
        for (Index c = 0; c < 3; ++c)
            CHECK(fwd.probs(t, c) == doctest::Approx(1.0 / 3).epsilon(1e-12));
    // and zero weights give zero hidden states
    CHECK(fwd.hidden1.norm() == 0.0);
    CHECK(fwd.hidden2.norm() == 0.0);
}

TEST_CASE("forward matches a hand-evaluated single-unit cell") {
    LstmModel model = init_model({"a", "b"}, 1, 0);
    model.layer1.w.setConstant(0.3);
    model.layer1.u.setConstant(-0.2);
    model.layer1.b << 0.1, 0.5, -0.3, 0.2;  // i, f, g, o
    model.layer2.w.setConstant(0.7);
    model.layer2.u.setConstant(0.1);
    model.layer2.b << 0.0, 1.0, 0.0, 0.0;
    model.dense_w.setConstant(1.0);
    model.dense_b.setZero();

    std::vector<MatrixXd> inputs(2, MatrixXd(1, 6));
    inputs[0] << 0.5, 0.1, 1.0, 0.0, 0.0, 0.0;
    inputs[1] << 0.2, 0.9, 0.0, -0.3, 0.8, -1.0;

    auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
    double h1 = 0, c1 = 0, h2 = 0, c2 = 0;
    std::vector<double> expected_h2;
    for (const MatrixXd& x : inputs) {
        const double sum_x = x.sum();
        double i = sig(0.3 * sum_x - 0.2 * h1 + 0.1);
        double f = sig(0.3 * sum_x - 0.2 * h1 + 0.5);
        double g = std::tanh(0.3 * sum_x - 0.2 * h1 - 0.3);
        double o = sig(0.3 * sum_x - 0.2 * h1 + 0.2);
        c1 = f * c1 + i * g;
        h1 = o * std::tanh(c1);
        i = sig(0.7 * h1 + 0.1 * h2 + 0.0);
        f = sig(0.7 * h1 + 0.1 * h2 + 1.0);
        g = std::tanh(0.7 * h1 + 0.1 * h2);
        o = sig(0.7 * h1 + 0.1 * h2);
        c2 = f * c2 + i * g;
        h2 = o * std::tanh(c2);
        expected_h2.push_back(h2);
    }

    const ForwardResult fwd = forward(model, features_from(inputs), ForwardMode::eval);
    CHECK(fwd.hidden2(0, 0) == doctest::Approx(expected_h2[0]).epsilon(1e-12));
    CHECK(fwd.hidden2(1, 0) == doctest::Approx(expected_h2[1]).epsilon(1e-12));
}

TEST_CASE("batched forward agrees with the scalar reference") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 5; ++trial) {
        const LstmModel model = init_model({"a", "b", "c", "d"}, 7, 100 + trial);
        const auto inputs = random_inputs(9, 6, rng);
        std::vector<std::vector<double>> naive_in;
        for (const MatrixXd& x : inputs)
            naive_in.emplace_back(x.data(), x.data() + x.size());
        const auto want = test_support::naive_lstm_forward(model, naive_in);
        const ForwardResult got = forward(model, features_from(inputs), ForwardMode::eval);
        for (Index t = 0; t < 9; ++t) {
            for (int k = 0; k < 4; ++k)
                CHECK(got.probs(t, k) ==
                      doctest::Approx(want.probs[static_cast<size_t>(t)][static_cast<size_t>(k)])
                          .epsilon(1e-12));
            for (int j = 0; j < 7; ++j)
                CHECK(got.hidden2(t, j) ==
                      doctest::Approx(want.hidden2[static_cast<size_t>(t)][static_cast<size_t>(j)])
                          .epsilon(1e-12));
        }
    }
}

TEST_CASE("eval forward is deterministic; analysis is seed-deterministic") {
    const LstmModel model = init_model({"a", "b", "c"}, 6, 9);
    auto rng = make_rng(5);
    const FeatureSequence f = features_from(random_inputs(12, 6, rng));
    const ForwardResult e1 = forward(model, f, ForwardMode::eval);
    const ForwardResult e2 = forward(model, f, ForwardMode::eval);
    CHECK((e1.probs - e2.probs).norm() == 0.0);

    auto r1 = make_rng(77), r2 = make_rng(77), r3 = make_rng(78);
    const ForwardResult a1 = forward(model, f, ForwardMode::analysis, &r1);
    const ForwardResult a2 = forward(model, f, ForwardMode::analysis, &r2);
    const ForwardResult a3 = forward(model, f, ForwardMode::analysis, &r3);
    CHECK((a1.probs - a2.probs).norm() == 0.0);
    CHECK((a1.probs - a3.probs).norm() > 0.0);
}

TEST_CASE("sequence_loss values") {
    MatrixXd uniform(5, 21);
    uniform.setConstant(1.0 / 21);
    CHECK(sequence_loss(uniform, 3, 1.0) == doctest::Approx(std::log(21.0)).epsilon(1e-12));
    CHECK(sequence_loss(uniform, 3, 0.0) == 0.0);

    MatrixXd onehot = MatrixXd::Zero(4, 3);
    onehot.col(1).setOnes();
    CHECK(sequence_loss(onehot, 1, 1.0) == 0.0);
    CHECK(sequence_loss(onehot, 0, 1.0) > 20.0);  // clamped, finite
    CHECK(std::isfinite(sequence_loss(onehot, 0, 1.0)));
}

TEST_CASE("analytic gradients match central finite differences") {
    for (uint64_t seed : {1ULL, 2ULL, 3ULL, 4ULL, 5ULL}) {
        CHECK(gradient_check(seed, nullptr) < 1e-6);
    }
}

TEST_CASE("gradients respect pinned dropout masks") {
    LstmModel model = init_model({"a", "b", "c"}, 4, 11);
    model.dropout = {0.1, 0.1, 0.2};
    BatchMasks masks = ones_masks(model, 3);
    // drop hidden unit 2 everywhere it feeds forward
    masks.rec1.col(2).setZero();
    masks.rec2.col(2).setZero();
    for (auto& m : masks.between) m.col(2).setZero();
    for (auto& m : masks.dense) m.col(2).setZero();

    CHECK(gradient_check(11, &masks) < 1e-6);

    auto rng = make_rng(18);
    const auto inputs = random_inputs(3, 6, rng);
    SliceTape tape;
    LstmState state;
    state.reset(1, 4);
    lstm_forward_steps(model, inputs, ForwardMode::train, &masks, nullptr, state, &tape, nullptr);
    ParamTensors grads = ParamTensors::like(model);
    lstm_slice_backward(model, tape, &masks, {1}, VectorXd::Ones(1), grads);
    // the dense row fed by the dropped unit never sees a gradient
    CHECK(grads.dense_w.row(2).norm() == 0.0);
    // recurrent columns reading the dropped unit's output are dead too
    CHECK(grads.layer2.u.row(2).norm() == 0.0);
}

TEST_CASE("dense bias gradient of a zero model is softmax minus one-hot") {
    LstmModel model = init_model({"a", "b", "c"}, 4, 0);
    model.layer1.setZero();
    model.layer2.setZero();
    model.dense_w.setZero();
    model.dense_b.setZero();

    std::vector<MatrixXd> inputs(5, MatrixXd::Zero(1, 6));
    SliceTape tape;
    LstmState state;
    state.reset(1, 4);
    lstm_forward_steps(model, inputs, ForwardMode::eval, nullptr, nullptr, state, &tape, nullptr);
    ParamTensors grads = ParamTensors::like(model);
    lstm_slice_backward(model, tape, nullptr, {2}, VectorXd::Ones(1), grads);

    CHECK(grads.dense_b(0) == doctest::Approx(1.0 / 3).epsilon(1e-12));
    CHECK(grads.dense_b(1) == doctest::Approx(1.0 / 3).epsilon(1e-12));
    CHECK(grads.dense_b(2) == doctest::Approx(1.0 / 3 - 1.0).epsilon(1e-12));
}

TEST_CASE("hidden states carry across slices exactly") {
    const LstmModel model = init_model({"a", "b", "c"}, 10, 21);
    auto rng = make_rng(4);
    const auto inputs = random_inputs(64, 6, rng);

    LstmState full;
    full.reset(1, 10);
    std::vector<MatrixXd> probs_full;
    lstm_forward_steps(model, inputs, ForwardMode::eval, nullptr, nullptr, full, nullptr,
                       &probs_full);

    LstmState sliced;
    sliced.reset(1, 10);
    const std::vector<MatrixXd> first(inputs.begin(), inputs.begin() + 32);
    const std::vector<MatrixXd> second(inputs.begin() + 32, inputs.end());
    std::vector<MatrixXd> probs_a, probs_b;
    lstm_forward_steps(model, first, ForwardMode::eval, nullptr, nullptr, sliced, nullptr, &probs_a);
    lstm_forward_steps(model, second, ForwardMode::eval, nullptr, nullptr, sliced, nullptr, &probs_b);

    CHECK((full.h2 - sliced.h2).norm() < 1e-12);
    CHECK((full.c2 - sliced.c2).norm() < 1e-12);
    CHECK((probs_full.back() - probs_b.back()).norm() < 1e-12);

    // slice-mean losses average to the full-sequence mean when slices align
    MatrixXd pf(64, 3), pa(32, 3), pb(32, 3);
    for (int t = 0; t < 64; ++t) pf.row(t) = probs_full[static_cast<size_t>(t)].row(0);
    for (int t = 0; t < 32; ++t) pa.row(t) = probs_a[static_cast<size_t>(t)].row(0);
    for (int t = 0; t < 32; ++t) pb.row(t) = probs_b[static_cast<size_t>(t)].row(0);
    const double full_loss = sequence_loss(pf, 1, 1.0);
    const double sliced_loss = 0.5 * (sequence_loss(pa, 1, 1.0) + sequence_loss(pb, 1, 1.0));
    CHECK(full_loss == doctest::Approx(sliced_loss).epsilon(1e-12));
}

TEST_CASE("expectation over sampled dropout matches eval scaling") {
    LstmModel model = init_model({"a", "b", "c"}, 8, 33);
    model.dropout = {0.1, 0.1, 0.2};
    auto rng = make_rng(9);
    const FeatureSequence f = features_from(random_inputs(10, 6, rng));

    const ForwardResult eval_fwd = forward(model, f, ForwardMode::eval);
    const Eigen::RowVectorXd eval_probe = eval_fwd.hidden2.row(9);

    Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(8);
    const int samples = 10000;
    for (int s = 0; s < samples; ++s) {
        auto sample_rng = make_rng(mix_seed(100, static_cast<uint64_t>(s)));
        const ForwardResult fwd = forward(model, f, ForwardMode::analysis, &sample_rng);
        mean += fwd.hidden2.row(9);
    }
    mean /= samples;
    CHECK((mean - eval_probe).norm() / eval_probe.norm() < 0.01);
}

TEST_CASE("checkpoint round trip") {
    test_support::TempDir dir;
    LstmModel model = init_model({"de", "en", "fr"}, 12, 77);
    model.epoch = 13;
    model.train_config = {{"seed", 7}, {"test_fraction", 0.08}};

    const std::string p1 = dir.path("m.rlm");
    save_checkpoint(model, p1);
    const LstmModel loaded = load_checkpoint(p1);
    CHECK(loaded.labels == model.labels);
    CHECK(loaded.epoch == 13);
    CHECK(loaded.train_config["seed"] == 7);
    CHECK((loaded.layer1.w.cast<float>() - model.layer1.w.cast<float>()).norm() == 0.0f);

    // a second save of the loaded model is byte-identical
    const std::string p2 = dir.path("m2.rlm");
    save_checkpoint(loaded, p2);
    std::ifstream a(p1, std::ios::binary), b(p2, std::ios::binary);
    const std::string bytes_a((std::istreambuf_iterator<char>(a)), {});
    const std::string bytes_b((std::istreambuf_iterator<char>(b)), {});
    CHECK(bytes_a == bytes_b);

    // behavioral round trip: reloading does not change predictions
    auto rng = make_rng(50);
    const FeatureSequence f = features_from(random_inputs(20, 6, rng));
    const LstmModel reloaded = load_checkpoint(p2);
    const ForwardResult x = forward(loaded, f, ForwardMode::eval);
    const ForwardResult y = forward(reloaded, f, ForwardMode::eval);
    CHECK((x.probs - y.probs).norm() == 0.0);

    const std::string bad = dir.file("bad.rlm", "NOPE000000000000");
    CHECK_THROWS_WITH_AS(load_checkpoint(bad), doctest::Contains("magic"), Error);
    const std::string truncated = dir.file("t.rlm", bytes_a.substr(0, bytes_a.size() / 2));
    CHECK_THROWS_AS(load_checkpoint(truncated), Error);
}

namespace {

std::vector<SegmentRecord> labeled_segments(const std::vector<int>& labels, int steps,
                                            uint64_t seed) {
    std::vector<SegmentRecord> segments;
    auto rng = make_rng(seed);
    for (int label : labels) {
        SegmentRecord r;
        r.language = label;
        r.speaker_id = "spk";
        r.features = features_from(random_inputs(steps, 6, rng));
        segments.push_back(std::move(r));
    }
    return segments;
}

}  // namespace

TEST_CASE("evaluate bookkeeping with a constructed perfect classifier") {
    // hidden size 1; class identity is encoded as a constant input level and
    // the dense layer is set so the logit lines separate the three values.
    LstmModel model = init_model({"a", "b", "c"}, 1, 5);
    model.dropout = {0.0, 0.0, 0.0};

    std::vector<SegmentRecord> segments;
    const double levels[3] = {0.05, 0.5, 0.95};
    for (int cls = 0; cls < 3; ++cls) {
        for (int k = 0; k < 4; ++k) {
            SegmentRecord r;
            r.language = cls;
            r.speaker_id = "s";
            r.features.levels = MatrixXd::Constant(30, 3, levels[cls]);
            r.features.recompute_deltas();
            segments.push_back(std::move(r));
        }
    }

    // find the final hidden value per class, then place the decision lines
    double h_final[3];
    for (int cls = 0; cls < 3; ++cls) {
        const ForwardResult fwd = forward(model, segments[static_cast<size_t>(cls * 4)].features,
                                          ForwardMode::eval);
        h_final[cls] = fwd.hidden2(29, 0);
    }
    REQUIRE(std::abs(h_final[0] - h_final[1]) > 1e-6);
    REQUIRE(std::abs(h_final[1] - h_final[2]) > 1e-6);
    // order the classes by hidden value, then use slopes -s, 0, +s with offsets
    int order[3] = {0, 1, 2};
    std::sort(order, order + 3, [&](int x, int y) { return h_final[x] < h_final[y]; });
    const double mid = h_final[order[1]];
    const double slope = 1000.0;
    model.dense_w.setZero();
    model.dense_b.setZero();
    model.dense_w(0, order[0]) = -slope;
    model.dense_w(0, order[2]) = slope;
    model.dense_b(order[0]) = slope * (h_final[order[0]] + mid) / 2.0;
    model.dense_b(order[1]) = 0.0;
    model.dense_b(order[2]) = -slope * (h_final[order[2]] + mid) / 2.0;

    std::vector<size_t> all;
    for (size_t i = 0; i < segments.size(); ++i) all.push_back(i);
    const EvalResult result = evaluate(model, segments, all);
    CHECK(result.accuracy == 1.0);
    CHECK(result.top3 == 1.0);
    const MatrixXd norm = result.confusion_normalized();
    for (int c = 0; c < 3; ++c) CHECK(norm(c, c) == doctest::Approx(1.0));
}

TEST_CASE("uniform model scores at chance on random labels") {
    LstmModel model = init_model({"l", "l", "l"}, 2, 1);  // placeholder, rebuilt below
    std::vector<std::string> labels;
    for (int i = 0; i < 21; ++i) labels.push_back("g" + std::to_string(i));
    model = init_model(labels, 2, 1);
    model.layer1.setZero();
    model.layer2.setZero();
    model.dense_w.setZero();
    model.dense_b.setZero();

    std::vector<int> y(2100);
    std::mt19937_64 rng(31);
    std::uniform_int_distribution<int> pick(0, 20);
    for (int& v : y) v = pick(rng);
    const auto segments = labeled_segments(y, 4, 8);
    std::vector<size_t> all;
    for (size_t i = 0; i < segments.size(); ++i) all.push_back(i);

    const EvalResult result = evaluate(model, segments, all);
    const double p1 = 1.0 / 21, p3 = 3.0 / 21;
    const double sd1 = std::sqrt(p1 * (1 - p1) / 2100), sd3 = std::sqrt(p3 * (1 - p3) / 2100);
    CHECK(std::abs(result.accuracy - p1) < 2 * sd1 + 1e-9);
    CHECK(std::abs(result.top3 - p3) < 2 * sd3 + 1e-9);

    // rows of the normalized confusion matrix sum to 1
    const MatrixXd norm = result.confusion_normalized();
    for (Index r = 0; r < norm.rows(); ++r) CHECK(norm.row(r).sum() == doctest::Approx(1.0));
}

TEST_CASE("argmax and top-k break ties toward the lowest index") {
    Eigen::RowVectorXd p(5);
    p << 0.2, 0.3, 0.3, 0.1, 0.1;
    CHECK(argmax_label(p) == 1);
    const auto top = top_k_labels(p, 3);
    REQUIRE(top.size() == 3);
    CHECK(top[0] == 1);
    CHECK(top[1] == 2);
    CHECK(top[2] == 0);
}

TEST_CASE("training learns a separable toy problem and is reproducible") {
    // two classes distinguished by the mean of channel 0
    std::vector<SegmentRecord> segments;
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> noise(-0.05, 0.05);
    for (int cls = 0; cls < 2; ++cls) {
        for (int k = 0; k < 30; ++k) {
            SegmentRecord r;
            r.language = cls;
            r.speaker_id = "spk" + std::to_string(k % 6);
            r.features.levels.resize(40, 3);
            for (Index t = 0; t < 40; ++t) {
                r.features.levels(t, 0) = std::clamp(0.25 + 0.5 * cls + noise(rng), 0.0, 1.0);
                r.features.levels(t, 1) = std::clamp(0.5 + noise(rng), 0.0, 1.0);
                r.features.levels(t, 2) = (t % 2 == 0) ? 1.0 : 0.0;
            }
            r.features.recompute_deltas();
            segments.push_back(std::move(r));
        }
    }
    std::vector<size_t> all;
    for (size_t i = 0; i < segments.size(); ++i) all.push_back(i);
    const std::vector<double> weights = compute_sample_weights(segments, all);

    TrainConfig config;
    config.epochs = 8;
    config.batch_size = 16;
    config.tbptt_len = 16;
    config.seed = 12;

    LstmModel m1 = init_model({"lo", "hi"}, 8, 12);
    const auto log1 = train(m1, segments, all, weights, config);
    CHECK(log1.size() == 8);
    CHECK(log1.back().loss < log1.front().loss);
    const EvalResult result = evaluate(m1, segments, all);
    CHECK(result.accuracy > 0.9);

    // lr schedule is geometric
    CHECK(log1[0].lr == doctest::Approx(0.2));
    CHECK(log1[5].lr == doctest::Approx(0.2 * std::pow(0.93, 5)).epsilon(1e-12));

    LstmModel m2 = init_model({"lo", "hi"}, 8, 12);
    const auto log2 = train(m2, segments, all, weights, config);
    CHECK(log2[0].loss == log1[0].loss);  // identical seed, identical first epoch
    CHECK((m1.layer2.u - m2.layer2.u).norm() == 0.0);
}

TEST_CASE("non-finite loss aborts with a diagnostic") {
    std::vector<SegmentRecord> segments = labeled_segments({0, 1, 0, 1}, 8, 3);
    std::vector<size_t> all{0, 1, 2, 3};
    const std::vector<double> weights(4, 1.0);
    TrainConfig config;
    config.epochs = 1;
    config.lr0 = 1e9;  // guaranteed blow-up
    config.augment = false;
    LstmModel model = init_model({"a", "b"}, 6, 2);
    CHECK_THROWS_WITH_AS(train(model, segments, all, weights, config),
                         doctest::Contains("non-finite"), Error);
}
