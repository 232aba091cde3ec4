#include "sissa/models/model.hpp"

#include <map>

#include "sissa/nn/init.hpp"
#include "sissa/nn/kernels.hpp"

namespace sissa::models {

const char* variant_name(Variant v) {
    switch (v) {
        case Variant::C: return "C";
        case Variant::CA: return "C-A";
        case Variant::R: return "R";
        case Variant::RA: return "R-A";
        case Variant::L: return "L";
        case Variant::LA: return "L-A";
    }
    return "?";
}

Variant variant_from_name(const std::string& name) {
    static const std::map<std::string, Variant> table = {
        {"C", Variant::C},     {"C-A", Variant::CA}, {"R", Variant::R},
        {"R-A", Variant::RA},  {"L", Variant::L},    {"L-A", Variant::LA},
        {"c", Variant::C},     {"c-a", Variant::CA}, {"r", Variant::R},
        {"r-a", Variant::RA},  {"l", Variant::L},    {"l-a", Variant::LA}};
    auto it = table.find(name);
    if (it == table.end())
        throw ConfigError("unknown model variant: " + name);
    return it->second;
}

bool variant_has_attention(Variant v) {
    return v == Variant::CA || v == Variant::RA || v == Variant::LA;
}

Model::Model(ModelConfig cfg, uint64_t seed) : cfg_(std::move(cfg)) {
    if (cfg_.window < 8)
        throw ConfigError("window must be >= 8");
    if (cfg_.mapped_dim < cfg_.feat_dim)
        throw ConfigError("mapped width d' must be >= feature width d");
    if (cfg_.hidden <= 0 || cfg_.classes <= 0)
        throw ConfigError("hidden width and class count must be positive");

    const bool is_cnn = cfg_.variant == Variant::C || cfg_.variant == Variant::CA;
    if (is_cnn) {
        int divisor = 1;
        for (size_t i = 0; i < cfg_.conv_channels.size(); ++i) divisor *= 2;
        if (cfg_.window % divisor != 0)
            throw ConfigError("CNN variants need window divisible by " +
                              std::to_string(divisor));
    }

    size_t index = 0;
    auto add = [&](const std::string& name, nn::Tensor t) {
        params_.push_back({name, std::move(t)});
        ++index;
    };
    auto next_rng = [&] { return Rng(derive_seed(seed, "init", index)); };

    const int64_t d = cfg_.feat_dim;
    const int64_t dm = std::max<int64_t>(1, cfg_.mapped_dim / 2);
    const int64_t dp = cfg_.mapped_dim;
    const int64_t h = cfg_.hidden;

    {
        Rng r = next_rng();
        add("pmb.fc1.w", nn::kaiming_uniform({d, dm}, d, r));
    }
    add("pmb.fc1.b", nn::Tensor({dm}));
    {
        Rng r = next_rng();
        add("pmb.fc2.w", nn::kaiming_uniform({dm, dp}, dm, r));
    }
    add("pmb.fc2.b", nn::Tensor({dp}));

    int64_t head_in = 0;
    int64_t attn_dim = 0;
    switch (cfg_.variant) {
        case Variant::C:
        case Variant::CA: {
            int64_t in_ch = 1;
            for (size_t i = 0; i < cfg_.conv_channels.size(); ++i) {
                const int64_t oc = cfg_.conv_channels[i];
                const std::string tag = std::to_string(i + 1);
                {
                    Rng r = next_rng();
                    add("conv" + tag + ".w",
                        nn::kaiming_uniform({oc, in_ch, 3, 3}, in_ch * 9, r));
                }
                add("conv" + tag + ".b", nn::Tensor({oc}));
                add("bn" + tag + ".gamma", nn::Tensor::full({oc}, 1.0f));
                add("bn" + tag + ".beta", nn::Tensor({oc}));
                nn::BnStats stats;
                stats.mean.assign(static_cast<size_t>(oc), 0.0f);
                stats.var.assign(static_cast<size_t>(oc), 1.0f);
                bn_stats_.push_back(std::move(stats));
                in_ch = oc;
            }
            {
                Rng r = next_rng();
                add("chanmix.w",
                    nn::kaiming_uniform({in_ch, in_ch, 1, 1}, in_ch, r));
            }
            add("chanmix.b", nn::Tensor({in_ch}));
            head_in = in_ch;
            attn_dim = in_ch;
            break;
        }
        case Variant::R:
        case Variant::RA: {
            int64_t in = dp;
            for (int layer = 1; layer <= 2; ++layer) {
                const std::string tag = "rnn" + std::to_string(layer);
                {
                    Rng r = next_rng();
                    add(tag + ".wx", nn::kaiming_uniform({in, h}, in, r));
                }
                {
                    Rng r = next_rng();
                    add(tag + ".wh", nn::recurrent_uniform({h, h}, h, r));
                }
                add(tag + ".b", nn::Tensor({h}));
                in = h;
            }
            head_in = h;
            attn_dim = h;
            break;
        }
        case Variant::L:
        case Variant::LA: {
            int64_t in = dp;
            for (int layer = 1; layer <= 2; ++layer) {
                const std::string tag = "lstm" + std::to_string(layer);
                {
                    Rng r = next_rng();
                    add(tag + ".w",
                        nn::recurrent_uniform({h + in, 4 * h}, h + in, r));
                }
                // Forget-gate bias starts at +1 so early training does not
                // flush the cell state.
                nn::Tensor b({4 * h});
                for (int64_t j = 0; j < h; ++j) b.data[j] = 1.0f;
                add(tag + ".b", std::move(b));
                in = h;
            }
            head_in = h;
            attn_dim = h;
            break;
        }
    }

    if (variant_has_attention(cfg_.variant)) {
        {
            Rng r = next_rng();
            add("rsab.wq",
                nn::kaiming_uniform({attn_dim, attn_dim}, attn_dim, r));
        }
        add("rsab.bq", nn::Tensor({attn_dim}));
        {
            Rng r = next_rng();
            add("rsab.wk",
                nn::kaiming_uniform({attn_dim, attn_dim}, attn_dim, r));
        }
        add("rsab.bk", nn::Tensor({attn_dim}));
        // Zero-initialized value projection: the block starts as an exact
        // identity and learns its way off it.
        add("rsab.wv", nn::Tensor({attn_dim, attn_dim}));
        add("rsab.bv", nn::Tensor({attn_dim}));
    }

    {
        Rng r = next_rng();
        add("head.w",
            nn::kaiming_uniform({head_in, cfg_.classes}, head_in, r));
    }
    add("head.b", nn::Tensor({cfg_.classes}));
}

size_t Model::pidx(const std::string& name) const {
    for (size_t i = 0; i < params_.size(); ++i)
        if (params_[i].name == name) return i;
    throw RuntimeError("model parameter not found: " + name);
}

nn::Tensor& Model::param(const std::string& name) {
    return params_[pidx(name)].tensor;
}

const nn::Tensor& Model::param(const std::string& name) const {
    return params_[pidx(name)].tensor;
}

int64_t Model::count_params() const {
    int64_t total = 0;
    for (const auto& p : params_) total += p.tensor.numel();
    return total;
}

void Model::predict(const float* features, size_t count,
                    std::vector<uint8_t>* labels,
                    std::vector<float>* probabilities) {
    const int64_t n = cfg_.window, d = cfg_.feat_dim, K = cfg_.classes;
    if (labels) labels->assign(count, 0);
    if (probabilities) probabilities->assign(count * K, 0.0f);

    const size_t batch = 256;
    for (size_t off = 0; off < count; off += batch) {
        const size_t B = std::min(batch, count - off);
        nn::Tensor x({static_cast<int64_t>(B), n, d});
        std::copy(features + off * n * d, features + (off + B) * n * d,
                  x.data.begin());
        nn::Graph g;
        auto logits = forward<float>(g, std::move(x), /*training=*/false);
        const nn::Tensor& z = g.val(logits);
        std::vector<float> probs(B * K);
        nn::kernels::softmax_rows(z.ptr(), probs.data(),
                                  static_cast<int64_t>(B), K);
        for (size_t b = 0; b < B; ++b) {
            if (probabilities)
                std::copy(probs.begin() + b * K, probs.begin() + (b + 1) * K,
                          probabilities->begin() + (off + b) * K);
            if (labels) {
                int best = 0;
                for (int j = 1; j < K; ++j)
                    if (probs[b * K + j] > probs[b * K + best]) best = j;
                (*labels)[off + b] = static_cast<uint8_t>(best);
            }
        }
    }
}

}  // namespace sissa::models
