#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "core/features.hpp"

namespace rhythmlab {

inline constexpr int kInputDim = 6;
inline constexpr int kDefaultHidden = 150;

// Gate order inside the concatenated 4H-wide matrices.
enum Gate { kGateInput = 0, kGateForget = 1, kGateCandidate = 2, kGateOutput = 3 };

struct LstmLayer {
    Eigen::MatrixXd w;   // in_dim x 4H
    Eigen::MatrixXd u;   // H x 4H
    Eigen::RowVectorXd b;  // 4H

    int hidden() const { return static_cast<int>(u.rows()); }
    int input_dim() const { return static_cast<int>(w.rows()); }
    void setZero();
};

struct DropoutConfig {
    double recurrent = 0.1;
    double between_layers = 0.1;
    double dense = 0.2;
};

struct LstmModel {
    LstmLayer layer1, layer2;
    Eigen::MatrixXd dense_w;    // H x L
    Eigen::RowVectorXd dense_b;  // L
    std::vector<std::string> labels;
    DropoutConfig dropout;
    int epoch = 0;
    nlohmann::json train_config;  // snapshot persisted in the checkpoint

    int hidden() const { return layer1.hidden(); }
    int num_labels() const { return static_cast<int>(dense_w.cols()); }
    int input_dim() const { return layer1.input_dim(); }
};

// Gradient / velocity container with the model's tensor shapes.
struct ParamTensors {
    LstmLayer layer1, layer2;
    Eigen::MatrixXd dense_w;
    Eigen::RowVectorXd dense_b;

    static ParamTensors like(const LstmModel& model);
    void setZero();
};

struct TensorRef {
    std::string name;
    double* data;
    Eigen::Index rows, cols;
};

// Canonical tensor order shared by the optimizer, the checkpoint format and
// the finite-difference tests.
std::vector<TensorRef> tensor_refs(LstmModel& model);
std::vector<TensorRef> tensor_refs(ParamTensors& tensors);

// Uniform(+-1/sqrt(fan_in)) weights, zero biases except forget-gate bias 1.
LstmModel init_model(const std::vector<std::string>& labels, int hidden, uint64_t seed,
                     int input_dim = kInputDim);

enum class ForwardMode { train, eval, analysis };

// Dropout masks for one batch. Recurrent masks are drawn once per sequence;
// the per-step masks are sampled inside the forward pass and kept for the
// backward pass. Mask values are 0 or 1/keep (inverted dropout).
struct BatchMasks {
    Eigen::MatrixXd rec1, rec2;                     // B x H
    std::vector<Eigen::MatrixXd> between, dense;    // per step, B x H

    void sample_recurrent(const DropoutConfig& dropout, int batch, int hidden,
                          std::mt19937_64** row_rngs);
};

struct LstmState {
    Eigen::MatrixXd h1, c1, h2, c2;  // B x H
    void reset(int batch, int hidden);
};

struct StepTape {
    Eigen::MatrixXd x;                              // B x in_dim
    Eigen::MatrixXd i1, f1, g1, o1, c1, tc1, h1;
    Eigen::MatrixXd z;                              // layer-2 input (dropped h1)
    Eigen::MatrixXd i2, f2, g2, o2, c2, tc2, h2;
    Eigen::MatrixXd d;                              // dense input (dropped h2)
    Eigen::MatrixXd probs;                          // B x L
};

struct SliceTape {
    Eigen::MatrixXd h1_0, c1_0, h2_0, c2_0;  // states entering the slice
    std::vector<StepTape> steps;
};

// Advances `state` over inputs[0..T). Per-step dropout masks are drawn from
// row_rngs when mode != eval (one generator per batch row; rows of each mask
// are drawn in row order). When tape != nullptr all intermediates are stored.
void lstm_forward_steps(const LstmModel& model, const std::vector<Eigen::MatrixXd>& inputs,
                        ForwardMode mode, BatchMasks* masks, std::mt19937_64** row_rngs,
                        LstmState& state, SliceTape* tape,
                        std::vector<Eigen::MatrixXd>* probs_out);

// Weighted mean cross-entropy of the slice and its exact parameter gradients.
// The loss is (1/B) * sum_s weight[s] * mean_t(-log probs[t](s, label[s]));
// states entering the slice are treated as constants.
double lstm_slice_backward(const LstmModel& model, const SliceTape& tape, const BatchMasks* masks,
                           const std::vector<int>& labels, const Eigen::VectorXd& weights,
                           ParamTensors& grads);

struct ForwardResult {
    Eigen::MatrixXd probs;    // T x L
    Eigen::MatrixXd hidden1;  // T x H
    Eigen::MatrixXd hidden2;  // T x H
};

// Whole-sequence forward for a single recording. rng is required for
// train/analysis modes and unused in eval mode.
ForwardResult forward(const LstmModel& model, const FeatureSequence& features, ForwardMode mode,
                      std::mt19937_64* rng = nullptr);

// weight * mean over steps of -log(probs(t, label)), probabilities clamped
// at 1e-12.
double sequence_loss(const Eigen::MatrixXd& probs, int label, double weight);

int argmax_label(const Eigen::RowVectorXd& probs);                  // ties -> lowest index
std::vector<int> top_k_labels(const Eigen::RowVectorXd& probs, int k);

// Checkpoint: "RLM1", u32 version, u32 length + JSON metadata, then named
// float32 tensors, little-endian.
void save_checkpoint(const LstmModel& model, const std::string& path);
LstmModel load_checkpoint(const std::string& path);

}  // namespace rhythmlab
