#include "core/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "core/common.hpp"

namespace rhythmlab {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

nlohmann::json TrainConfig::to_json() const {
    return {{"lr0", lr0},
            {"lr_decay", lr_decay},
            {"momentum", momentum},
            {"tbptt_len", tbptt_len},
            {"epochs", epochs},
            {"batch_size", batch_size},
            {"dropout",
             {{"recurrent", dropout.recurrent},
              {"between_layers", dropout.between_layers},
              {"dense", dropout.dense}}},
            {"augment", augment},
            {"normalize_weights", normalize_weights},
            {"seed", seed}};
}

namespace {

void nesterov_update(LstmModel& model, ParamTensors& grads, ParamTensors& velocity, double lr,
                     double momentum) {
    auto model_refs = tensor_refs(model);
    auto grad_refs = tensor_refs(grads);
    auto vel_refs = tensor_refs(velocity);
    for (size_t k = 0; k < model_refs.size(); ++k) {
        const Index n = model_refs[k].rows * model_refs[k].cols;
        Eigen::Map<Eigen::ArrayXd> theta(model_refs[k].data, n);
        Eigen::Map<Eigen::ArrayXd> g(grad_refs[k].data, n);
        Eigen::Map<Eigen::ArrayXd> v(vel_refs[k].data, n);
        v = momentum * v - lr * g;
        theta += momentum * v - lr * g;
    }
}

}  // namespace

std::vector<EpochLog> train(LstmModel& model, const std::vector<SegmentRecord>& segments,
                            const std::vector<size_t>& subset, const std::vector<double>& weights,
                            const TrainConfig& config) {
    if (subset.empty()) throw Error::validation("empty training set");
    if (weights.size() != subset.size())
        throw Error::invalid("one weight per training segment required");
    if (config.tbptt_len < 1) throw Error::invalid("tbptt_len must be positive");

    model.dropout = config.dropout;
    model.train_config = config.to_json();

    std::vector<double> w = weights;
    if (config.normalize_weights) {
        const double mean = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(w.size());
        if (mean > 0.0)
            for (double& x : w) x /= mean;
    }

    const int hidden = model.hidden();
    ParamTensors grads = ParamTensors::like(model);
    ParamTensors velocity = ParamTensors::like(model);

    std::vector<EpochLog> log;
    SliceTape tape;
    LstmState state;
    BatchMasks masks;
    std::vector<MatrixXd> inputs;
    std::vector<FeatureSequence> batch_feats;
    std::vector<FeatureSequence*> batch_ptrs;

    for (int e = 0; e < config.epochs; ++e) {
        const auto t0 = std::chrono::steady_clock::now();
        const double lr = config.lr0 * std::pow(config.lr_decay, model.epoch);
        auto rng = make_rng(mix_seed(config.seed, mix_seed(hash_tag("epoch"),
                                                           static_cast<uint64_t>(model.epoch))));

        std::vector<size_t> order(subset.size());
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);

        double loss_sum = 0.0, loss_steps = 0.0;
        long correct = 0, correct3 = 0, counted = 0;

        for (size_t start = 0; start < order.size(); start += static_cast<size_t>(config.batch_size)) {
            const size_t end = std::min(order.size(), start + static_cast<size_t>(config.batch_size));
            const Index batch = static_cast<Index>(end - start);

            batch_feats.resize(static_cast<size_t>(batch));
            batch_ptrs.resize(static_cast<size_t>(batch));
            std::vector<int> labels(static_cast<size_t>(batch));
            VectorXd batch_weights(batch);
            Index frames = -1;
            for (Index s = 0; s < batch; ++s) {
                const size_t pos = order[start + static_cast<size_t>(s)];
                const SegmentRecord& record = segments[subset[pos]];
                batch_feats[static_cast<size_t>(s)] = record.features;
                batch_ptrs[static_cast<size_t>(s)] = &batch_feats[static_cast<size_t>(s)];
                labels[static_cast<size_t>(s)] = record.language;
                batch_weights(s) = w[pos];
                frames = (frames < 0) ? record.features.frames()
                                      : std::min(frames, record.features.frames());
            }
            if (config.augment) augment_batch(batch_ptrs, config.distortion, rng);

            std::vector<std::mt19937_64*> row_rngs(static_cast<size_t>(batch), &rng);
            masks.sample_recurrent(config.dropout, static_cast<int>(batch), hidden, row_rngs.data());
            state.reset(static_cast<int>(batch), hidden);

            for (Index slice_start = 0; slice_start < frames; slice_start += config.tbptt_len) {
                const Index slice_len = std::min<Index>(config.tbptt_len, frames - slice_start);
                inputs.resize(static_cast<size_t>(slice_len));
                for (Index t = 0; t < slice_len; ++t) {
                    MatrixXd& x = inputs[static_cast<size_t>(t)];
                    x.resize(batch, kInputDim);
                    for (Index s = 0; s < batch; ++s)
                        x.row(s) = batch_feats[static_cast<size_t>(s)].input_row(slice_start + t);
                }
                masks.between.clear();
                masks.dense.clear();
                lstm_forward_steps(model, inputs, ForwardMode::train, &masks, row_rngs.data(),
                                   state, &tape, nullptr);
                grads.setZero();
                const double loss =
                    lstm_slice_backward(model, tape, &masks, labels, batch_weights, grads);
                if (!std::isfinite(loss)) {
                    throw Error::numeric(strfmt(
                        "non-finite loss at epoch %d, batch %zu, lr %.6g", model.epoch,
                        start / static_cast<size_t>(config.batch_size), lr));
                }
                loss_sum += loss * static_cast<double>(batch * slice_len);
                loss_steps += static_cast<double>(batch * slice_len);
                nesterov_update(model, grads, velocity, lr, config.momentum);
            }

            const MatrixXd& final_probs = tape.steps.back().probs;
            for (Index s = 0; s < batch; ++s) {
                const int truth = labels[static_cast<size_t>(s)];
                if (argmax_label(final_probs.row(s)) == truth) ++correct;
                for (int c : top_k_labels(final_probs.row(s), 3))
                    if (c == truth) { ++correct3; break; }
                ++counted;
            }
        }

        EpochLog entry;
        entry.epoch = model.epoch;
        entry.lr = lr;
        entry.loss = loss_sum / std::max(1.0, loss_steps);
        entry.accuracy = static_cast<double>(correct) / std::max<long>(1, counted);
        entry.top3 = static_cast<double>(correct3) / std::max<long>(1, counted);
        entry.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        log.push_back(entry);
        log_info(strfmt("epoch %d: lr %.5f loss %.4f acc %.4f top3 %.4f (%.1fs)", entry.epoch,
                        entry.lr, entry.loss, entry.accuracy, entry.top3, entry.seconds));
        model.epoch += 1;
    }
    return log;
}

Eigen::MatrixXd EvalResult::confusion_normalized() const {
    MatrixXd out = confusion;
    for (Index r = 0; r < out.rows(); ++r) {
        const double total = out.row(r).sum();
        if (total > 0.0) out.row(r) /= total;
    }
    return out;
}

EvalResult evaluate(const LstmModel& model, const std::vector<SegmentRecord>& segments,
                    const std::vector<size_t>& subset) {
    const int n_labels = model.num_labels();
    EvalResult result;
    result.confusion = MatrixXd::Zero(n_labels, n_labels);
    if (subset.empty()) return result;

    for (size_t i : subset) {
        if (segments[i].language < 0 || segments[i].language >= n_labels)
            throw Error::validation("segment label outside the model's label space");
    }

    // Batch segments of equal length together.
    std::vector<size_t> idx(subset.begin(), subset.end());
    std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
        return segments[a].features.frames() < segments[b].features.frames();
    });

    const int hidden = model.hidden();
    LstmState state;
    std::vector<MatrixXd> inputs, probs;
    long correct = 0, correct3 = 0;

    size_t pos = 0;
    while (pos < idx.size()) {
        const Index frames = segments[idx[pos]].features.frames();
        size_t end = pos;
        while (end < idx.size() && segments[idx[end]].features.frames() == frames &&
               end - pos < 64)
            ++end;
        const Index batch = static_cast<Index>(end - pos);

        inputs.assign(static_cast<size_t>(frames), MatrixXd(batch, kInputDim));
        for (Index t = 0; t < frames; ++t)
            for (Index s = 0; s < batch; ++s)
                inputs[static_cast<size_t>(t)].row(s) =
                    segments[idx[pos + static_cast<size_t>(s)]].features.input_row(t);

        state.reset(static_cast<int>(batch), hidden);
        lstm_forward_steps(model, inputs, ForwardMode::eval, nullptr, nullptr, state, nullptr,
                           &probs);

        const MatrixXd& final_probs = probs.back();
        for (Index s = 0; s < batch; ++s) {
            const int truth = segments[idx[pos + static_cast<size_t>(s)]].language;
            const int pred = argmax_label(final_probs.row(s));
            result.confusion(truth, pred) += 1.0;
            if (pred == truth) ++correct;
            for (int c : top_k_labels(final_probs.row(s), 3))
                if (c == truth) { ++correct3; break; }
        }
        pos = end;
    }

    result.accuracy = static_cast<double>(correct) / static_cast<double>(idx.size());
    result.top3 = static_cast<double>(correct3) / static_cast<double>(idx.size());
    return result;
}

}  // namespace rhythmlab
