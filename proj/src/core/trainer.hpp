#pragma once

#include <cstdint>
#include <vector>

#include "core/augment.hpp"
#include "core/corpus.hpp"
#include "core/lstm.hpp"

namespace rhythmlab {

struct TrainConfig {
    double lr0 = 0.2;
    double lr_decay = 0.93;      // per epoch
    double momentum = 0.9;       // Nesterov
    int tbptt_len = 32;
    int epochs = 25;
    int batch_size = 64;
    DropoutConfig dropout;
    DistortionConfig distortion;
    bool augment = true;
    // Sample weights are rescaled to mean 1 over the training set so the
    // stated learning rate is meaningful regardless of corpus shape.
    bool normalize_weights = true;
    uint64_t seed = 0;

    nlohmann::json to_json() const;
};

struct EpochLog {
    int epoch = 0;
    double lr = 0.0;
    double loss = 0.0;      // weighted mean cross-entropy per step
    double accuracy = 0.0;  // train-mode, final-step argmax
    double top3 = 0.0;
    double seconds = 0.0;
};

// Mini-batch TBPTT training: whole segments per batch, states carried across
// 32-step slices, one Nesterov update per slice. Mutates `model` in place.
std::vector<EpochLog> train(LstmModel& model, const std::vector<SegmentRecord>& segments,
                            const std::vector<size_t>& subset, const std::vector<double>& weights,
                            const TrainConfig& config);

struct EvalResult {
    double accuracy = 0.0;
    double top3 = 0.0;
    Eigen::MatrixXd confusion;  // counts, row = true label, column = prediction

    Eigen::MatrixXd confusion_normalized() const;  // rows scaled to sum 1
};

// Decisions use only the output at the last step of each segment.
EvalResult evaluate(const LstmModel& model, const std::vector<SegmentRecord>& segments,
                    const std::vector<size_t>& subset);

}  // namespace rhythmlab
