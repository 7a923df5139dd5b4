#include "core/lstm.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "core/common.hpp"

namespace rhythmlab {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

void LstmLayer::setZero() {
    w.setZero();
    u.setZero();
    b.setZero();
}

ParamTensors ParamTensors::like(const LstmModel& model) {
    ParamTensors t;
    t.layer1.w.resize(model.layer1.w.rows(), model.layer1.w.cols());
    t.layer1.u.resize(model.layer1.u.rows(), model.layer1.u.cols());
    t.layer1.b.resize(model.layer1.b.cols());
    t.layer2.w.resize(model.layer2.w.rows(), model.layer2.w.cols());
    t.layer2.u.resize(model.layer2.u.rows(), model.layer2.u.cols());
    t.layer2.b.resize(model.layer2.b.cols());
    t.dense_w.resize(model.dense_w.rows(), model.dense_w.cols());
    t.dense_b.resize(model.dense_b.cols());
    t.setZero();
    return t;
}

void ParamTensors::setZero() {
    layer1.setZero();
    layer2.setZero();
    dense_w.setZero();
    dense_b.setZero();
}

namespace {

const char* const kGateTags[4] = {"i", "f", "g", "o"};

template <class Layer>
void push_layer_refs(const std::string& prefix, Layer& layer, std::vector<TensorRef>& out) {
    const Index h = layer.u.rows();
    for (int g = 0; g < 4; ++g) {
        out.push_back({prefix + ".w_" + kGateTags[g], layer.w.data() + g * h * layer.w.rows(),
                       layer.w.rows(), h});
        out.push_back({prefix + ".u_" + kGateTags[g], layer.u.data() + g * h * layer.u.rows(),
                       layer.u.rows(), h});
        out.push_back({prefix + ".b_" + kGateTags[g], layer.b.data() + g * h, 1, h});
    }
}

template <class T>
std::vector<TensorRef> collect_refs(T& t) {
    std::vector<TensorRef> refs;
    push_layer_refs("lstm1", t.layer1, refs);
    push_layer_refs("lstm2", t.layer2, refs);
    refs.push_back({"dense.w", t.dense_w.data(), t.dense_w.rows(), t.dense_w.cols()});
    refs.push_back({"dense.b", t.dense_b.data(), 1, t.dense_b.cols()});
    return refs;
}

inline void sigmoid_inplace(Eigen::Ref<MatrixXd> m) {
    m = ((m.array() * -1.0).exp() + 1.0).inverse();
}

void softmax_rows(MatrixXd& m) {
    const VectorXd rowmax = m.rowwise().maxCoeff();
    m.colwise() -= rowmax;
    m = m.array().exp();
    const VectorXd rowsum = m.rowwise().sum();
    m.array().colwise() /= rowsum.array();
}

void sample_mask_rows(MatrixXd& mask, double rate, std::mt19937_64** row_rngs) {
    const double keep = 1.0 - rate;
    const double scale = 1.0 / keep;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (Index s = 0; s < mask.rows(); ++s) {
        std::mt19937_64& rng = *row_rngs[s];
        for (Index j = 0; j < mask.cols(); ++j)
            mask(s, j) = (unit(rng) < keep) ? scale : 0.0;
    }
}

}  // namespace

std::vector<TensorRef> tensor_refs(LstmModel& model) { return collect_refs(model); }
std::vector<TensorRef> tensor_refs(ParamTensors& tensors) { return collect_refs(tensors); }

LstmModel init_model(const std::vector<std::string>& labels, int hidden, uint64_t seed,
                     int input_dim) {
    if (labels.size() < 2) throw Error::invalid("need at least 2 languages");
    if (hidden < 1) throw Error::invalid("hidden size must be positive");
    const int n_labels = static_cast<int>(labels.size());

    LstmModel m;
    m.labels = labels;
    m.layer1.w.resize(input_dim, 4 * hidden);
    m.layer1.u.resize(hidden, 4 * hidden);
    m.layer1.b.setZero(4 * hidden);
    m.layer2.w.resize(hidden, 4 * hidden);
    m.layer2.u.resize(hidden, 4 * hidden);
    m.layer2.b.setZero(4 * hidden);
    m.dense_w.resize(hidden, n_labels);
    m.dense_b.setZero(n_labels);

    auto rng = make_rng(seed);
    auto fill_uniform = [&](MatrixXd& mat) {
        const double lim = 1.0 / std::sqrt(static_cast<double>(mat.rows()));
        std::uniform_real_distribution<double> dist(-lim, lim);
        double* p = mat.data();
        for (Index i = 0; i < mat.size(); ++i) p[i] = dist(rng);
    };
    fill_uniform(m.layer1.w);
    fill_uniform(m.layer1.u);
    fill_uniform(m.layer2.w);
    fill_uniform(m.layer2.u);
    fill_uniform(m.dense_w);

    m.layer1.b.segment(kGateForget * hidden, hidden).setOnes();
    m.layer2.b.segment(kGateForget * hidden, hidden).setOnes();
    return m;
}

void BatchMasks::sample_recurrent(const DropoutConfig& dropout, int batch, int hidden,
                                  std::mt19937_64** row_rngs) {
    rec1.resize(batch, hidden);
    rec2.resize(batch, hidden);
    if (dropout.recurrent > 0.0) {
        sample_mask_rows(rec1, dropout.recurrent, row_rngs);
        sample_mask_rows(rec2, dropout.recurrent, row_rngs);
    } else {
        rec1.setOnes();
        rec2.setOnes();
    }
    between.clear();
    dense.clear();
}

void LstmState::reset(int batch, int hidden) {
    h1.setZero(batch, hidden);
    c1.setZero(batch, hidden);
    h2.setZero(batch, hidden);
    c2.setZero(batch, hidden);
}

namespace {

struct CellScratch {
    MatrixXd hdrop, pre;

    // One LSTM cell step for a whole batch. Gate activations land in the
    // i/f/g/o blocks, the new states in h/c.
    void step(const LstmLayer& layer, const MatrixXd& x, const MatrixXd* rec_mask, MatrixXd& h,
              MatrixXd& c, MatrixXd& gi, MatrixXd& gf, MatrixXd& gg, MatrixXd& go, MatrixXd& tc) {
        const Index hsz = layer.u.rows();
        if (rec_mask) {
            hdrop = h.cwiseProduct(*rec_mask);
        } else {
            hdrop = h;
        }
        pre.noalias() = x * layer.w;
        pre.noalias() += hdrop * layer.u;
        pre.rowwise() += layer.b;

        gi = pre.middleCols(kGateInput * hsz, hsz);
        sigmoid_inplace(gi);
        gf = pre.middleCols(kGateForget * hsz, hsz);
        sigmoid_inplace(gf);
        gg = pre.middleCols(kGateCandidate * hsz, hsz).array().tanh().matrix();
        go = pre.middleCols(kGateOutput * hsz, hsz);
        sigmoid_inplace(go);

        c = gf.cwiseProduct(c) + gi.cwiseProduct(gg);
        tc = c.array().tanh().matrix();
        h = go.cwiseProduct(tc);
    }
};

}  // namespace

void lstm_forward_steps(const LstmModel& model, const std::vector<MatrixXd>& inputs,
                        ForwardMode mode, BatchMasks* masks, std::mt19937_64** row_rngs,
                        LstmState& state, SliceTape* tape, std::vector<MatrixXd>* probs_out) {
    const bool stochastic = mode != ForwardMode::eval;
    const Index batch = state.h1.rows();
    const Index hidden = state.h1.cols();
    if (stochastic && (!masks || masks->rec1.rows() != batch))
        throw Error::invalid("train/analysis forward requires sampled recurrent masks");

    if (tape) {
        tape->h1_0 = state.h1;
        tape->c1_0 = state.c1;
        tape->h2_0 = state.h2;
        tape->c2_0 = state.c2;
        tape->steps.resize(inputs.size());
    }
    if (probs_out) probs_out->resize(inputs.size());

    // Pre-filled per-step masks (one per input step) are used as-is; this is
    // how tests pin a dropout pattern.
    const bool masks_given = stochastic && masks->between.size() == inputs.size() &&
                             masks->dense.size() == inputs.size();

    CellScratch cell1, cell2;
    MatrixXd z, d, logits;
    MatrixXd i1, f1, g1, o1, tc1, i2, f2, g2, o2, tc2;
    MatrixXd between_mask, dense_mask;

    for (size_t t = 0; t < inputs.size(); ++t) {
        const MatrixXd& x = inputs[t];
        if (x.rows() != batch || x.cols() != model.input_dim())
            throw Error::invalid(strfmt("input step %zu has shape %ldx%ld, expected %ldx%d",
                                        t, x.rows(), x.cols(), batch, model.input_dim()));

        cell1.step(model.layer1, x, stochastic ? &masks->rec1 : nullptr, state.h1, state.c1,
                   i1, f1, g1, o1, tc1);

        if (masks_given) {
            between_mask = masks->between[t];
        } else if (stochastic && model.dropout.between_layers > 0.0) {
            between_mask.resize(batch, hidden);
            sample_mask_rows(between_mask, model.dropout.between_layers, row_rngs);
        } else {
            between_mask.resize(0, 0);
        }
        z = between_mask.size() > 0 ? state.h1.cwiseProduct(between_mask) : state.h1;

        cell2.step(model.layer2, z, stochastic ? &masks->rec2 : nullptr, state.h2, state.c2,
                   i2, f2, g2, o2, tc2);

        if (masks_given) {
            dense_mask = masks->dense[t];
        } else if (stochastic && model.dropout.dense > 0.0) {
            dense_mask.resize(batch, hidden);
            sample_mask_rows(dense_mask, model.dropout.dense, row_rngs);
        } else {
            dense_mask.resize(0, 0);
        }
        d = dense_mask.size() > 0 ? state.h2.cwiseProduct(dense_mask) : state.h2;

        logits.noalias() = d * model.dense_w;
        logits.rowwise() += model.dense_b;
        softmax_rows(logits);

        if (masks && !masks_given) {
            masks->between.push_back(between_mask);
            masks->dense.push_back(dense_mask);
        }
        if (tape) {
            StepTape& st = tape->steps[t];
            st.x = x;
            st.i1 = i1; st.f1 = f1; st.g1 = g1; st.o1 = o1;
            st.c1 = state.c1; st.tc1 = tc1; st.h1 = state.h1;
            st.z = z;
            st.i2 = i2; st.f2 = f2; st.g2 = g2; st.o2 = o2;
            st.c2 = state.c2; st.tc2 = tc2; st.h2 = state.h2;
            st.d = d;
            st.probs = logits;
        }
        if (probs_out) (*probs_out)[t] = logits;
    }
}

double lstm_slice_backward(const LstmModel& model, const SliceTape& tape, const BatchMasks* masks,
                           const std::vector<int>& labels, const VectorXd& weights,
                           ParamTensors& grads) {
    const Index steps = static_cast<Index>(tape.steps.size());
    if (steps == 0) return 0.0;
    const Index batch = tape.steps[0].x.rows();
    const Index hidden = model.hidden();

    VectorXd scale(batch);
    for (Index s = 0; s < batch; ++s)
        scale(s) = weights(s) / static_cast<double>(batch * steps);

    MatrixXd dh1next = MatrixXd::Zero(batch, hidden);
    MatrixXd dc1next = MatrixXd::Zero(batch, hidden);
    MatrixXd dh2next = MatrixXd::Zero(batch, hidden);
    MatrixXd dc2next = MatrixXd::Zero(batch, hidden);

    MatrixXd dlogits, dd, dh, dc, dout, dcand, din, dforget;
    MatrixXd da1, da2;
    double loss = 0.0;

    for (Index t = steps - 1; t >= 0; --t) {
        const StepTape& st = tape.steps[static_cast<size_t>(t)];
        const MatrixXd& h1p = (t == 0) ? tape.h1_0 : tape.steps[static_cast<size_t>(t - 1)].h1;
        const MatrixXd& c1p = (t == 0) ? tape.c1_0 : tape.steps[static_cast<size_t>(t - 1)].c1;
        const MatrixXd& h2p = (t == 0) ? tape.h2_0 : tape.steps[static_cast<size_t>(t - 1)].h2;
        const MatrixXd& c2p = (t == 0) ? tape.c2_0 : tape.steps[static_cast<size_t>(t - 1)].c2;

        dlogits = st.probs;
        for (Index s = 0; s < batch; ++s) {
            const int label = labels[static_cast<size_t>(s)];
            loss -= scale(s) * std::log(std::max(st.probs(s, label), 1e-12));
            dlogits(s, label) -= 1.0;
            dlogits.row(s) *= scale(s);
        }

        grads.dense_w.noalias() += st.d.transpose() * dlogits;
        grads.dense_b += dlogits.colwise().sum();
        dd.noalias() = dlogits * model.dense_w.transpose();

        const bool has_dense_mask = masks && masks->dense[static_cast<size_t>(t)].size() > 0;
        dh = dh2next;
        if (has_dense_mask) dh += dd.cwiseProduct(masks->dense[static_cast<size_t>(t)]);
        else dh += dd;

        // layer 2
        dout = dh.cwiseProduct(st.tc2);
        dc = dc2next + dh.cwiseProduct(st.o2).cwiseProduct(
                           (1.0 - st.tc2.array().square()).matrix());
        din = dc.cwiseProduct(st.g2);
        dforget = dc.cwiseProduct(c2p);
        dcand = dc.cwiseProduct(st.i2);
        dc2next = dc.cwiseProduct(st.f2);

        da2.resize(batch, 4 * hidden);
        da2.middleCols(kGateInput * hidden, hidden) =
            (din.array() * st.i2.array() * (1.0 - st.i2.array())).matrix();
        da2.middleCols(kGateForget * hidden, hidden) =
            (dforget.array() * st.f2.array() * (1.0 - st.f2.array())).matrix();
        da2.middleCols(kGateCandidate * hidden, hidden) =
            (dcand.array() * (1.0 - st.g2.array().square())).matrix();
        da2.middleCols(kGateOutput * hidden, hidden) =
            (dout.array() * st.o2.array() * (1.0 - st.o2.array())).matrix();

        grads.layer2.w.noalias() += st.z.transpose() * da2;
        if (masks) {
            grads.layer2.u.noalias() += h2p.cwiseProduct(masks->rec2).transpose() * da2;
        } else {
            grads.layer2.u.noalias() += h2p.transpose() * da2;
        }
        grads.layer2.b += da2.colwise().sum();

        dh2next.noalias() = da2 * model.layer2.u.transpose();
        if (masks) dh2next = dh2next.cwiseProduct(masks->rec2);

        dd.noalias() = da2 * model.layer2.w.transpose();  // gradient into z
        const bool has_between_mask = masks && masks->between[static_cast<size_t>(t)].size() > 0;
        dh = dh1next;
        if (has_between_mask) dh += dd.cwiseProduct(masks->between[static_cast<size_t>(t)]);
        else dh += dd;

        // layer 1
        dout = dh.cwiseProduct(st.tc1);
        dc = dc1next + dh.cwiseProduct(st.o1).cwiseProduct(
                           (1.0 - st.tc1.array().square()).matrix());
        din = dc.cwiseProduct(st.g1);
        dforget = dc.cwiseProduct(c1p);
        dcand = dc.cwiseProduct(st.i1);
        dc1next = dc.cwiseProduct(st.f1);

        da1.resize(batch, 4 * hidden);
        da1.middleCols(kGateInput * hidden, hidden) =
            (din.array() * st.i1.array() * (1.0 - st.i1.array())).matrix();
        da1.middleCols(kGateForget * hidden, hidden) =
            (dforget.array() * st.f1.array() * (1.0 - st.f1.array())).matrix();
        da1.middleCols(kGateCandidate * hidden, hidden) =
            (dcand.array() * (1.0 - st.g1.array().square())).matrix();
        da1.middleCols(kGateOutput * hidden, hidden) =
            (dout.array() * st.o1.array() * (1.0 - st.o1.array())).matrix();

        grads.layer1.w.noalias() += st.x.transpose() * da1;
        if (masks) {
            grads.layer1.u.noalias() += h1p.cwiseProduct(masks->rec1).transpose() * da1;
        } else {
            grads.layer1.u.noalias() += h1p.transpose() * da1;
        }
        grads.layer1.b += da1.colwise().sum();

        dh1next.noalias() = da1 * model.layer1.u.transpose();
        if (masks) dh1next = dh1next.cwiseProduct(masks->rec1);
    }
    return loss;
}

ForwardResult forward(const LstmModel& model, const FeatureSequence& features, ForwardMode mode,
                      std::mt19937_64* rng) {
    if (model.input_dim() != 6)
        throw Error::invalid("model input dimension mismatch (expected 6-channel features)");
    if (mode != ForwardMode::eval && rng == nullptr)
        throw Error::invalid("train/analysis forward requires an rng");
    const Index frames = features.frames();
    if (frames == 0) throw Error::invalid("empty feature sequence");

    std::vector<MatrixXd> inputs(static_cast<size_t>(frames));
    for (Index t = 0; t < frames; ++t) inputs[static_cast<size_t>(t)] = features.input_row(t);

    LstmState state;
    state.reset(1, model.hidden());
    BatchMasks masks;
    std::mt19937_64* row_rngs[1] = {rng};
    if (mode != ForwardMode::eval) masks.sample_recurrent(model.dropout, 1, model.hidden(), row_rngs);

    SliceTape tape;
    lstm_forward_steps(model, inputs, mode, mode != ForwardMode::eval ? &masks : nullptr, row_rngs,
                       state, &tape, nullptr);

    ForwardResult result;
    result.probs.resize(frames, model.num_labels());
    result.hidden1.resize(frames, model.hidden());
    result.hidden2.resize(frames, model.hidden());
    for (Index t = 0; t < frames; ++t) {
        const StepTape& st = tape.steps[static_cast<size_t>(t)];
        result.probs.row(t) = st.probs.row(0);
        result.hidden1.row(t) = st.h1.row(0);
        result.hidden2.row(t) = st.h2.row(0);
    }
    return result;
}

double sequence_loss(const MatrixXd& probs, int label, double weight) {
    if (label < 0 || label >= probs.cols()) throw Error::invalid("label out of range");
    double acc = 0.0;
    for (Index t = 0; t < probs.rows(); ++t)
        acc -= std::log(std::max(probs(t, label), 1e-12));
    return weight * acc / static_cast<double>(probs.rows());
}

int argmax_label(const RowVectorXd& probs) {
    int best = 0;
    for (int i = 1; i < probs.size(); ++i)
        if (probs(i) > probs(best)) best = i;
    return best;
}

std::vector<int> top_k_labels(const RowVectorXd& probs, int k) {
    std::vector<int> idx(static_cast<size_t>(probs.size()));
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return probs(a) > probs(b); });
    idx.resize(static_cast<size_t>(std::min<int>(k, static_cast<int>(probs.size()))));
    return idx;
}

namespace {

constexpr char kCheckpointMagic[4] = {'R', 'L', 'M', '1'};
constexpr uint32_t kCheckpointVersion = 1;

void put_u32(std::ofstream& out, uint32_t v) {
    uint8_t b[4] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8),
                    static_cast<uint8_t>(v >> 16), static_cast<uint8_t>(v >> 24)};
    out.write(reinterpret_cast<char*>(b), 4);
}

uint32_t get_u32(std::ifstream& in, const std::string& path) {
    uint8_t b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw Error::format("truncated checkpoint: " + path);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

}  // namespace

void save_checkpoint(const LstmModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error::io("cannot write checkpoint: " + path);

    nlohmann::json meta;
    meta["labels"] = model.labels;
    meta["epoch"] = model.epoch;
    meta["hidden"] = model.hidden();
    meta["input_dim"] = model.input_dim();
    meta["dropout"] = {{"recurrent", model.dropout.recurrent},
                       {"between_layers", model.dropout.between_layers},
                       {"dense", model.dropout.dense}};
    meta["train_config"] = model.train_config;
    const std::string meta_str = meta.dump();

    out.write(kCheckpointMagic, 4);
    put_u32(out, kCheckpointVersion);
    put_u32(out, static_cast<uint32_t>(meta_str.size()));
    out.write(meta_str.data(), static_cast<std::streamsize>(meta_str.size()));

    auto refs = tensor_refs(const_cast<LstmModel&>(model));
    put_u32(out, static_cast<uint32_t>(refs.size()));
    std::vector<float> buf;
    for (const TensorRef& ref : refs) {
        put_u32(out, static_cast<uint32_t>(ref.name.size()));
        out.write(ref.name.data(), static_cast<std::streamsize>(ref.name.size()));
        put_u32(out, static_cast<uint32_t>(ref.rows));
        put_u32(out, static_cast<uint32_t>(ref.cols));
        const size_t n = static_cast<size_t>(ref.rows * ref.cols);
        buf.resize(n);
        for (size_t i = 0; i < n; ++i) buf[i] = static_cast<float>(ref.data[i]);
        out.write(reinterpret_cast<const char*>(buf.data()),
                  static_cast<std::streamsize>(n * sizeof(float)));
    }
    if (!out) throw Error::io("short write: " + path);
}

LstmModel load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error::io("cannot open checkpoint: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kCheckpointMagic, 4) != 0)
        throw Error::format("bad checkpoint magic in " + path);
    const uint32_t version = get_u32(in, path);
    if (version != kCheckpointVersion)
        throw Error::format(strfmt("%s: unsupported checkpoint version %u", path.c_str(), version));

    const uint32_t meta_len = get_u32(in, path);
    std::string meta_str(meta_len, '\0');
    in.read(meta_str.data(), meta_len);
    if (!in) throw Error::format("truncated checkpoint: " + path);
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(meta_str);
    } catch (const nlohmann::json::exception& e) {
        throw Error::format(strfmt("%s: bad metadata: %s", path.c_str(), e.what()));
    }

    LstmModel model = init_model(meta.at("labels").get<std::vector<std::string>>(),
                                 meta.at("hidden").get<int>(), 0,
                                 meta.at("input_dim").get<int>());
    model.epoch = meta.value("epoch", 0);
    if (meta.contains("dropout")) {
        model.dropout.recurrent = meta["dropout"].value("recurrent", 0.1);
        model.dropout.between_layers = meta["dropout"].value("between_layers", 0.1);
        model.dropout.dense = meta["dropout"].value("dense", 0.2);
    }
    model.train_config = meta.value("train_config", nlohmann::json::object());

    const uint32_t n_tensors = get_u32(in, path);
    auto refs = tensor_refs(model);
    if (n_tensors != refs.size())
        throw Error::format(strfmt("%s: expected %zu tensors, found %u", path.c_str(), refs.size(),
                                   n_tensors));
    std::vector<float> buf;
    for (TensorRef& ref : refs) {
        const uint32_t name_len = get_u32(in, path);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        const uint32_t rows = get_u32(in, path);
        const uint32_t cols = get_u32(in, path);
        if (!in || name != ref.name || rows != static_cast<uint32_t>(ref.rows) ||
            cols != static_cast<uint32_t>(ref.cols)) {
            throw Error::format(strfmt("%s: tensor mismatch at \"%s\"", path.c_str(), name.c_str()));
        }
        const size_t n = static_cast<size_t>(ref.rows * ref.cols);
        buf.resize(n);
        in.read(reinterpret_cast<char*>(buf.data()),
                static_cast<std::streamsize>(n * sizeof(float)));
        if (!in) throw Error::format("truncated checkpoint: " + path);
        for (size_t i = 0; i < n; ++i) ref.data[i] = static_cast<double>(buf[i]);
    }
    return model;
}

}  // namespace rhythmlab
