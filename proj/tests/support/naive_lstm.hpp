#pragma once

// Scalar reference implementation of the two-layer LSTM forward pass, written
// with plain loops and no shared code with the library's batched version.

#include <cmath>
#include <vector>

#include "core/lstm.hpp"

namespace test_support {

struct NaiveForward {
    std::vector<std::vector<double>> probs;    // T x L
    std::vector<std::vector<double>> hidden1;  // T x H
    std::vector<std::vector<double>> hidden2;  // T x H
};

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// No dropout (eval mode). inputs: T x input_dim.
inline NaiveForward naive_lstm_forward(const rhythmlab::LstmModel& m,
                                       const std::vector<std::vector<double>>& inputs) {
    const int h = m.hidden();
    const int l = m.num_labels();
    std::vector<double> h1(h, 0.0), c1(h, 0.0), h2(h, 0.0), c2(h, 0.0);

    auto cell = [&](const rhythmlab::LstmLayer& layer, const std::vector<double>& x,
                    std::vector<double>& hs, std::vector<double>& cs) {
        const int in = layer.input_dim();
        std::vector<double> pre(4 * h, 0.0);
        for (int g = 0; g < 4 * h; ++g) {
            double acc = layer.b(g);
            for (int i = 0; i < in; ++i) acc += x[static_cast<size_t>(i)] * layer.w(i, g);
            for (int j = 0; j < h; ++j) acc += hs[static_cast<size_t>(j)] * layer.u(j, g);
            pre[static_cast<size_t>(g)] = acc;
        }
        std::vector<double> out(h);
        for (int j = 0; j < h; ++j) {
            const double gi = sigmoid(pre[static_cast<size_t>(rhythmlab::kGateInput * h + j)]);
            const double gf = sigmoid(pre[static_cast<size_t>(rhythmlab::kGateForget * h + j)]);
            const double gg = std::tanh(pre[static_cast<size_t>(rhythmlab::kGateCandidate * h + j)]);
            const double go = sigmoid(pre[static_cast<size_t>(rhythmlab::kGateOutput * h + j)]);
            cs[static_cast<size_t>(j)] = gf * cs[static_cast<size_t>(j)] + gi * gg;
            out[static_cast<size_t>(j)] = go * std::tanh(cs[static_cast<size_t>(j)]);
        }
        hs = out;
    };

    NaiveForward result;
    for (const auto& x : inputs) {
        cell(m.layer1, x, h1, c1);
        cell(m.layer2, h1, h2, c2);
        std::vector<double> logits(l, 0.0);
        for (int k = 0; k < l; ++k) {
            double acc = m.dense_b(k);
            for (int j = 0; j < h; ++j) acc += h2[static_cast<size_t>(j)] * m.dense_w(j, k);
            logits[static_cast<size_t>(k)] = acc;
        }
        double zmax = logits[0];
        for (double v : logits) zmax = std::max(zmax, v);
        double zsum = 0.0;
        for (double& v : logits) {
            v = std::exp(v - zmax);
            zsum += v;
        }
        for (double& v : logits) v /= zsum;
        result.probs.push_back(logits);
        result.hidden1.push_back(h1);
        result.hidden2.push_back(h2);
    }
    return result;
}

}  // namespace test_support
