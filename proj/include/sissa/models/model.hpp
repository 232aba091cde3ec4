#pragma once

#include <string>

#include "sissa/nn/attention.hpp"
#include "sissa/nn/graph.hpp"
#include "sissa/util/rng.hpp"

namespace sissa::models {

enum class Variant : uint8_t { C, CA, R, RA, L, LA };

const char* variant_name(Variant v);
Variant variant_from_name(const std::string& name);
bool variant_has_attention(Variant v);

struct ModelConfig {
    Variant variant = Variant::LA;
    int window = 32;      // n
    int feat_dim = 21;    // d
    int mapped_dim = 64;  // d', packet mapping output width
    int hidden = 128;     // h
    std::vector<int> conv_channels = {16, 32};
    int classes = 7;
};

struct NamedTensor {
    std::string name;
    nn::Tensor tensor;
};

class SpecMismatchError : public RuntimeError {
public:
    explicit SpecMismatchError(const std::string& what)
        : RuntimeError(what) {}
};

// One SISSA variant: packet mapping block, a CNN/RNN/LSTM backbone, an
// optional residual self-attention block before pooling, and a linear
// head to the 7 class logits. Parameters are canonical float; forward can
// be instantiated on float (training/inference) or double (gradcheck).
class Model {
public:
    Model(ModelConfig cfg, uint64_t seed);

    const ModelConfig& config() const { return cfg_; }
    std::vector<NamedTensor>& params() { return params_; }
    const std::vector<NamedTensor>& params() const { return params_; }
    std::vector<nn::BnStats>& bn_stats() { return bn_stats_; }
    const std::vector<nn::BnStats>& bn_stats() const { return bn_stats_; }

    int64_t count_params() const;

    nn::Tensor& param(const std::string& name);
    const nn::Tensor& param(const std::string& name) const;

    // Builds the forward graph for a batch x of shape (B, n, d) and
    // returns the logits Var (B, classes). When param_vars is given the
    // parameters are uploaded with gradients enabled and their Vars are
    // returned in params() order.
    template <typename R>
    typename nn::GraphT<R>::Var forward(
        nn::GraphT<R>& g, nn::TensorT<R> x, bool training,
        std::vector<typename nn::GraphT<R>::Var>* param_vars = nullptr);

    // Inference on `count` encoded windows (count*n*d floats): argmax
    // labels and softmax probabilities (count*classes).
    void predict(const float* features, size_t count,
                 std::vector<uint8_t>* labels,
                 std::vector<float>* probabilities);

private:
    size_t pidx(const std::string& name) const;

    ModelConfig cfg_;
    std::vector<NamedTensor> params_;
    std::vector<nn::BnStats> bn_stats_;
};

// ---- template definitions ----

template <typename R>
typename nn::GraphT<R>::Var Model::forward(
    nn::GraphT<R>& g, nn::TensorT<R> x, bool training,
    std::vector<typename nn::GraphT<R>::Var>* param_vars) {
    using Var = typename nn::GraphT<R>::Var;
    nn::require_shape(x.rank() == 3 && x.dim(1) == cfg_.window &&
                          x.dim(2) == cfg_.feat_dim,
                      "model input must be (B," +
                          std::to_string(cfg_.window) + "," +
                          std::to_string(cfg_.feat_dim) + "), got " +
                          nn::shape_str(x.shape));
    const int64_t B = x.dim(0);
    const bool with_grad = param_vars != nullptr;

    std::vector<Var> P;
    P.reserve(params_.size());
    for (auto& p : params_)
        P.push_back(g.input(p.tensor.template cast<R>(), with_grad));
    if (param_vars) *param_vars = P;
    auto pv = [&](const std::string& name) { return P[pidx(name)]; };

    Var h = g.input(std::move(x), false);
    // Packet mapping: two per-row affine+ReLU maps, d -> dmid -> d'.
    h = g.relu_(g.affine(h, pv("pmb.fc1.w"), pv("pmb.fc1.b")));
    h = g.relu_(g.affine(h, pv("pmb.fc2.w"), pv("pmb.fc2.b")));

    const bool attn = variant_has_attention(cfg_.variant);
    auto rsab = [&](Var tokens) {
        return nn::residual_self_attention(g, tokens, pv("rsab.wq"),
                                           pv("rsab.bq"), pv("rsab.wk"),
                                           pv("rsab.bk"), pv("rsab.wv"),
                                           pv("rsab.bv"));
    };

    Var pooled;
    switch (cfg_.variant) {
        case Variant::C:
        case Variant::CA: {
            const int64_t n = cfg_.window;
            Var z = g.reshape(h, {B, 1, n, cfg_.mapped_dim});
            z = g.resize_width(z, n);
            for (size_t i = 0; i < cfg_.conv_channels.size(); ++i) {
                const std::string tag = std::to_string(i + 1);
                z = g.conv2d(z, pv("conv" + tag + ".w"),
                             pv("conv" + tag + ".b"), 1, 1);
                z = g.maxpool2d(z, 2);
                z = g.batchnorm2d(z, pv("bn" + tag + ".gamma"),
                                  pv("bn" + tag + ".beta"), bn_stats_[i],
                                  training);
            }
            z = g.relu_(g.conv2d(z, pv("chanmix.w"), pv("chanmix.b"), 1, 0));
            if (attn) {
                const int64_t C = g.val(z).dim(1);
                const int64_t HW = g.val(z).dim(2) * g.val(z).dim(3);
                Var tokens =
                    g.transpose_last2(g.reshape(z, {B, C, HW}));
                pooled = g.mean_time(rsab(tokens));
            } else {
                pooled = g.mean_spatial(z);
            }
            break;
        }
        case Variant::R:
        case Variant::RA: {
            auto rnn_layer = [&](Var seq, const std::string& name) {
                const int64_t hdim = g.val(pv(name + ".wh")).dim(0);
                Var state = g.input(nn::TensorT<R>({B, hdim}), false);
                std::vector<Var> outs;
                for (int t = 0; t < cfg_.window; ++t) {
                    Var xt = g.slice_time(seq, t);
                    Var pre = g.add(
                        g.affine(xt, pv(name + ".wx"), pv(name + ".b")),
                        g.matmul(state, pv(name + ".wh")));
                    state = g.tanh_(pre);
                    outs.push_back(state);
                }
                return outs;
            };
            auto h1 = rnn_layer(h, "rnn1");
            auto h2 = rnn_layer(g.stack_time(h1), "rnn2");
            if (attn) {
                Var seq = rsab(g.stack_time(h2));
                pooled = g.slice_time(seq, cfg_.window - 1);
            } else {
                pooled = h2.back();
            }
            break;
        }
        case Variant::L:
        case Variant::LA: {
            auto lstm_layer = [&](Var seq, const std::string& name) {
                const int64_t hdim = g.val(pv(name + ".b")).dim(0) / 4;
                Var hs = g.input(nn::TensorT<R>({B, hdim}), false);
                Var cs = g.input(nn::TensorT<R>({B, hdim}), false);
                std::vector<Var> outs;
                for (int t = 0; t < cfg_.window; ++t) {
                    Var xt = g.slice_time(seq, t);
                    Var zt = g.affine(g.concat_last(hs, xt),
                                      pv(name + ".w"), pv(name + ".b"));
                    Var f = g.sigmoid_(g.slice_last(zt, 0, hdim));
                    Var i = g.sigmoid_(g.slice_last(zt, hdim, hdim));
                    Var gg = g.tanh_(g.slice_last(zt, 2 * hdim, hdim));
                    Var o = g.sigmoid_(g.slice_last(zt, 3 * hdim, hdim));
                    cs = g.add(g.mul(f, cs), g.mul(i, gg));
                    hs = g.mul(o, g.tanh_(cs));
                    outs.push_back(hs);
                }
                return outs;
            };
            auto h1 = lstm_layer(h, "lstm1");
            Var seq2 = g.stack_time(lstm_layer(g.stack_time(h1), "lstm2"));
            if (attn) seq2 = rsab(seq2);
            pooled = g.mean_time(seq2);
            break;
        }
    }
    return g.affine(pooled, pv("head.w"), pv("head.b"));
}

}  // namespace sissa::models
