// SPDX-License-Identifier: Apache-2.0
//
// cefkit: channel estimation and CSI feedback simulation toolkit
// Copyright (C) 2026 cefkit authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef CEF_NETS_HPP
#define CEF_NETS_HPP

#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "cef/common.hpp"
#include "cef/nn.hpp"
#include "cef/xform.hpp"
#include "json.hpp"

namespace cef::nets {

enum class Variant { kCefnet, kPfnet, kCfOnly, kCeOnly };

inline std::string to_string(Variant v) {
    switch (v) {
        case Variant::kCefnet: return "cefnet";
        case Variant::kPfnet: return "pfnet";
        case Variant::kCfOnly: return "cf_only";
        case Variant::kCeOnly: return "ce_only";
    }
    return "?";
}

inline Variant variant_from_string(const std::string &s) {
    if (s == "cefnet") return Variant::kCefnet;
    if (s == "pfnet") return Variant::kPfnet;
    if (s == "cf_only") return Variant::kCfOnly;
    if (s == "ce_only") return Variant::kCeOnly;
    throw ConfigError("unknown model variant '" + s + "'");
}

/// One convolutional stage: stride 1, zero padding preserving H x W.
struct ConvLayerSpec {
    int in_channels = 0;
    int out_channels = 0;
    int kernel = 3;
    int stride = 1;
    bool batch_norm = false;
    nn::Act activation = nn::Act::kNone;
};

/// Estimation refiner: 64@9x9+ReLU, 32@1x1+ReLU, 2@5x5.
inline std::vector<ConvLayerSpec> build_ce_subnet() {
    return {
        {2, 64, 9, 1, false, nn::Act::kRelu},
        {64, 32, 1, 1, false, nn::Act::kRelu},
        {32, 2, 5, 1, false, nn::Act::kNone},
    };
}

/// Residual refinement stack of the decoder: L conv layers total
/// (head 3x3 + (L-2) x [3x3+BN] + tail 3x3).
inline std::vector<ConvLayerSpec> build_decoder_convs(int nf = 64, int depth = 16) {
    if (depth < 2) throw ConfigError("decoder depth must be >= 2");
    std::vector<ConvLayerSpec> layers;
    layers.push_back({2, nf, 3, 1, false, nn::Act::kRelu});
    for (int i = 0; i < depth - 2; ++i) layers.push_back({nf, nf, 3, 1, true, nn::Act::kRelu});
    layers.push_back({nf, 2, 3, 1, false, nn::Act::kNone});
    return layers;
}

/// Full declarative architecture; default sizes follow the reference setting
/// (32x32 truncated channels, 16-layer decoder, 64 filters).
struct ModelSpec {
    Variant variant = Variant::kCefnet;
    int K = 32;
    int Nt = 32;
    int M = 512;
    int L = 16;
    int nf = 64;
    std::vector<ConvLayerSpec> ce_layers;
    std::vector<ConvLayerSpec> decoder_layers;

    int n() const { return 2 * K * Nt; }
    bool has_ce() const { return variant == Variant::kCefnet || variant == Variant::kCeOnly; }
    bool has_cf() const { return variant != Variant::kCeOnly; }
};

inline ModelSpec assemble(Variant variant, int M, int K = 32, int Nt = 32, int L = 16,
                          int nf = 64) {
    if (M < 1) throw ConfigError("codeword length M must be >= 1");
    ModelSpec s;
    s.variant = variant;
    s.K = K;
    s.Nt = Nt;
    s.M = M;
    s.L = L;
    s.nf = nf;
    if (s.has_ce()) s.ce_layers = build_ce_subnet();
    if (s.has_cf()) s.decoder_layers = build_decoder_convs(nf, L);
    return s;
}

/// Build the CF fragment only (encoder FC(N->M)+BN+tanh, decoder FC(M->N)+
/// BN+ReLU plus the residual conv stack).
inline ModelSpec build_cf_subnet(int M, int L = 16, int K = 32, int Nt = 32, int nf = 64) {
    return assemble(Variant::kCfOnly, M, K, Nt, L, nf);
}

// ---- receptive fields ----

/// Three-layer stack, stride 1: R = f1 + f2 + f3 - 2.
inline int receptive_field_ce(int f1, int f2, int f3) {
    if (f1 < 1 || f2 < 1 || f3 < 1) throw ConfigError("filter sizes must be >= 1");
    return f1 + f2 + f3 - 2;
}

/// L stacked 3x3 layers: side 2L + 1.
inline int receptive_field_cf(int depth) {
    if (depth < 1) throw ConfigError("depth must be >= 1");
    return 2 * depth + 1;
}

/// Layer-by-layer recursion R_l = (R_{l+1} - 1) * s_l + f_l from the output.
inline int receptive_field_layers(const std::vector<ConvLayerSpec> &layers) {
    int r = 1;
    for (auto it = layers.rbegin(); it != layers.rend(); ++it) r = (r - 1) * it->stride + it->kernel;
    return r;
}

/// False flags "input not fully covered" for the given input side.
inline bool receptive_field_covers(int rf_side, int input_side) { return rf_side >= input_side; }

// ---- parameter counting (weight-only convention: kernels and FC matrices,
//      excluding biases and batch-norm parameters/statistics) ----

inline int64_t weight_count(const std::vector<ConvLayerSpec> &layers) {
    int64_t n = 0;
    for (const auto &l : layers)
        n += int64_t(l.out_channels) * l.in_channels * l.kernel * l.kernel;
    return n;
}

inline int64_t weight_count(const ModelSpec &s) {
    int64_t n = weight_count(s.ce_layers);
    if (s.has_cf()) {
        n += int64_t(s.n()) * s.M;  // encoder FC
        n += int64_t(s.M) * s.n();  // decoder FC
        n += weight_count(s.decoder_layers);
    }
    return n;
}

/// Feedback payload: tanh output, every component in (-1, 1).
struct Codeword {
    std::vector<float> values;
};

struct Provenance {
    uint64_t seed = 0;
    std::string dataset_id;
    std::string strategy;
};

// ---------------------------------------------------------------------------
// Runtime model. Templated on scalar so double instantiations can be used for
// finite-difference verification; training and serialization use float.
// ---------------------------------------------------------------------------
template <typename T>
class Model {
  public:
    struct Out {
        Tensor<T> codeword;  // [B, M] (empty for ce_only)
        Tensor<T> output;    // [B, 2, K, Nt]
    };

    explicit Model(ModelSpec spec) : spec_(std::move(spec)) {
        if (spec_.has_ce()) {
            if (spec_.ce_layers.empty()) spec_.ce_layers = build_ce_subnet();
            int idx = 1;
            for (const auto &l : spec_.ce_layers) {
                ce_convs_.push_back(std::make_unique<nn::Conv2d<T>>(
                    "ce.conv" + std::to_string(idx), l.in_channels, l.out_channels, l.kernel));
                ce_acts_.emplace_back(l.activation);
                ++idx;
            }
        }
        if (spec_.has_cf()) {
            if (spec_.decoder_layers.empty())
                spec_.decoder_layers = build_decoder_convs(spec_.nf, spec_.L);
            enc_fc_ = std::make_unique<nn::Dense<T>>("enc.fc", spec_.n(), spec_.M);
            enc_bn_ = std::make_unique<nn::BatchNorm<T>>("enc.bn", spec_.M);
            dec_fc_ = std::make_unique<nn::Dense<T>>("dec.fc", spec_.M, spec_.n());
            dec_bn_ = std::make_unique<nn::BatchNorm<T>>("dec.bn", spec_.n());
            int idx = 1;
            for (const auto &l : spec_.decoder_layers) {
                dec_convs_.push_back(std::make_unique<nn::Conv2d<T>>(
                    "dec.conv" + std::to_string(idx), l.in_channels, l.out_channels, l.kernel));
                dec_acts_.emplace_back(l.activation);
                if (l.batch_norm)
                    dec_bns_.push_back(std::make_unique<nn::BatchNorm<T>>(
                        "dec.bn" + std::to_string(idx), l.out_channels));
                else
                    dec_bns_.push_back(nullptr);
                ++idx;
            }
        }
    }

    const ModelSpec &spec() const { return spec_; }

    void init(uint64_t seed) {
        uint64_t block = 0;
        for (auto *conv_holder : {&ce_convs_, &dec_convs_})
            for (auto &c : *conv_holder) {
                Rng r = Rng::for_sample(seed, block++, 0x494E4954ull);
                c->init(r);
            }
        for (auto *fc : {enc_fc_.get(), dec_fc_.get()})
            if (fc) {
                Rng r = Rng::for_sample(seed, block++, 0x494E4954ull);
                fc->init(r);
            }
    }

    /// Estimation-refinement stage; identity for variants without it.
    Tensor<T> ce_forward(const Tensor<T> &x, bool training) {
        if (!spec_.has_ce()) return x;
        Tensor<T> h = x;
        for (size_t i = 0; i < ce_convs_.size(); ++i) {
            h = ce_convs_[i]->forward(h, training);
            h = ce_acts_[i].forward(h, training);
        }
        return h;
    }

    Tensor<T> ce_backward(const Tensor<T> &dy) {
        Tensor<T> d = dy;
        for (size_t i = ce_convs_.size(); i-- > 0;) {
            d = ce_acts_[i].backward(d);
            d = ce_convs_[i]->backward(d);
        }
        return d;
    }

    /// Encoder half on the feedback-stage input: flatten -> FC -> BN -> tanh.
    Tensor<T> encode_cf(const Tensor<T> &x, bool training) {
        if (!spec_.has_cf()) throw ConfigError("variant has no feedback stage");
        Tensor<T> flat = x.reshaped({x.dim(0), spec_.n()});
        return enc_tanh_.forward(enc_bn_->forward(enc_fc_->forward(flat, training), training),
                                 training);
    }

    /// Decoder half: FC coarse estimate plus residual refinement correction.
    Tensor<T> decode(const Tensor<T> &code, bool training) {
        if (!spec_.has_cf()) throw ConfigError("variant has no feedback stage");
        const int64_t b = code.dim(0);
        Tensor<T> coarse_flat =
            dec_relu_.forward(dec_bn_->forward(dec_fc_->forward(code, training), training), training);
        Tensor<T> h = coarse_flat.reshaped({b, 2, spec_.K, spec_.Nt});
        Tensor<T> coarse = h;
        for (size_t i = 0; i < dec_convs_.size(); ++i) {
            h = dec_convs_[i]->forward(h, training);
            if (dec_bns_[i]) h = dec_bns_[i]->forward(h, training);
            h = dec_acts_[i].forward(h, training);
        }
        for (size_t i = 0; i < h.v.size(); ++i) h.v[i] += coarse.v[i];
        return h;
    }

    /// Codeword from the raw model input (through the estimation stage when
    /// the variant has one).
    Tensor<T> encode(const Tensor<T> &x, bool training) {
        return encode_cf(ce_forward(x, training && !freeze_ce), training);
    }

    Out cf_forward(const Tensor<T> &x, bool training) {
        Out out;
        out.codeword = encode_cf(x, training);
        out.output = decode(out.codeword, training);
        return out;
    }

    Tensor<T> cf_backward(const Tensor<T> &dout) {
        const int64_t b = dout.dim(0);
        Tensor<T> d = dout;
        for (size_t i = dec_convs_.size(); i-- > 0;) {
            d = dec_acts_[i].backward(d);
            if (dec_bns_[i]) d = dec_bns_[i]->backward(d);
            d = dec_convs_[i]->backward(d);
        }
        for (size_t i = 0; i < d.v.size(); ++i) d.v[i] += dout.v[i];  // skip path
        Tensor<T> dflat = d.reshaped({b, spec_.n()});
        dflat = dec_fc_->backward(dec_bn_->backward(dec_relu_.backward(dflat)));
        dflat = enc_fc_->backward(enc_bn_->backward(enc_tanh_.backward(dflat)));
        return dflat.reshaped({b, 2, spec_.K, spec_.Nt});
    }

    Out forward(const Tensor<T> &x, bool training) {
        if (spec_.variant == Variant::kCeOnly) {
            Out o;
            o.output = ce_forward(x, training);
            return o;
        }
        return cf_forward(ce_forward(x, training && !freeze_ce), training);
    }

    /// Backward for the composed model. With freeze_ce (or no CE stage) the
    /// gradient stops at the feedback-stage input and CE blocks never
    /// accumulate anything.
    Tensor<T> backward(const Tensor<T> &dout) {
        if (spec_.variant == Variant::kCeOnly) return ce_backward(dout);
        Tensor<T> d = cf_backward(dout);
        if (spec_.has_ce() && !freeze_ce) d = ce_backward(d);
        return d;
    }

    std::vector<nn::ParamBlock<T> *> ce_params() {
        std::vector<nn::ParamBlock<T> *> out;
        for (auto &c : ce_convs_)
            for (auto *p : c->params()) out.push_back(p);
        return out;
    }

    std::vector<nn::ParamBlock<T> *> cf_params() {
        std::vector<nn::ParamBlock<T> *> out;
        auto push = [&out](std::vector<nn::ParamBlock<T> *> ps) {
            for (auto *p : ps) out.push_back(p);
        };
        if (enc_fc_) {
            push(enc_fc_->params());
            push(enc_bn_->params());
            push(dec_fc_->params());
            push(dec_bn_->params());
            for (size_t i = 0; i < dec_convs_.size(); ++i) {
                push(dec_convs_[i]->params());
                if (dec_bns_[i]) push(dec_bns_[i]->params());
            }
        }
        return out;
    }

    std::vector<nn::ParamBlock<T> *> params() {
        auto out = ce_params();
        for (auto *p : cf_params()) out.push_back(p);
        return out;
    }

    /// Trainable blocks honoring freeze_ce.
    std::vector<nn::ParamBlock<T> *> trainable_params() {
        std::vector<nn::ParamBlock<T> *> out;
        if (!freeze_ce)
            for (auto *p : ce_params())
                if (p->trainable) out.push_back(p);
        for (auto *p : cf_params())
            if (p->trainable) out.push_back(p);
        return out;
    }

    void zero_grad() {
        for (auto *p : params()) p->zero_grad();
    }

    xform::NormMeta norm;
    Provenance prov;
    bool freeze_ce = false;

  private:
    ModelSpec spec_;
    std::vector<std::unique_ptr<nn::Conv2d<T>>> ce_convs_;
    std::vector<nn::Activation<T>> ce_acts_;
    std::unique_ptr<nn::Dense<T>> enc_fc_;
    std::unique_ptr<nn::BatchNorm<T>> enc_bn_;
    nn::Activation<T> enc_tanh_{nn::Act::kTanh};
    std::unique_ptr<nn::Dense<T>> dec_fc_;
    std::unique_ptr<nn::BatchNorm<T>> dec_bn_;
    nn::Activation<T> dec_relu_{nn::Act::kRelu};
    std::vector<std::unique_ptr<nn::Conv2d<T>>> dec_convs_;
    std::vector<std::unique_ptr<nn::BatchNorm<T>>> dec_bns_;
    std::vector<nn::Activation<T>> dec_acts_;
};

// ---- model container: "CEFM" + JSON header + raw binary32 LE arrays ----

inline constexpr char kModelMagic[4] = {'C', 'E', 'F', 'M'};

inline nlohmann::json spec_to_json(const ModelSpec &s) {
    return {{"variant", to_string(s.variant)}, {"K", s.K}, {"Nt", s.Nt},
            {"M", s.M},                        {"L", s.L}, {"nf", s.nf}};
}

inline ModelSpec spec_from_json(const nlohmann::json &j) {
    return assemble(variant_from_string(j.at("variant").get<std::string>()), j.at("M").get<int>(),
                    j.at("K").get<int>(), j.at("Nt").get<int>(), j.at("L").get<int>(),
                    j.at("nf").get<int>());
}

template <typename T>
void save_model(Model<T> &m, const std::string &path) {
    nlohmann::json meta;
    meta["version"] = 1;
    meta["spec"] = spec_to_json(m.spec());
    meta["norm"] = {{"offset", m.norm.offset}, {"scale", m.norm.scale}};
    meta["provenance"] = {{"seed", m.prov.seed},
                          {"dataset_id", m.prov.dataset_id},
                          {"strategy", m.prov.strategy}};
    nlohmann::json blocks = nlohmann::json::array();
    for (auto *p : m.params())
        blocks.push_back({{"name", p->name}, {"shape", p->shape}, {"trainable", p->trainable}});
    meta["blocks"] = blocks;
    std::string header = meta.dump();

    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write model file: " + path);
    write_bytes(f, kModelMagic, 4);
    write_le<uint32_t>(f, 1);
    write_le<uint64_t>(f, header.size());
    write_bytes(f, header.data(), header.size());
    for (auto *p : m.params())
        for (T x : p->w) write_le<float>(f, static_cast<float>(x));
    if (!f) throw std::runtime_error("model write failed: " + path);
}

template <typename T = float>
Model<T> load_model(const std::string &path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw MissingArtifact("model file not found: " + path +
                              " (train it with the `train` subcommand)");
    char magic[4];
    read_bytes(f, magic, 4);
    if (std::memcmp(magic, kModelMagic, 4) != 0)
        throw std::runtime_error("bad model magic in " + path);
    uint32_t version = read_le<uint32_t>(f);
    if (version != 1) throw std::runtime_error("unsupported model version");
    uint64_t hlen = read_le<uint64_t>(f);
    std::string header(hlen, '\0');
    read_bytes(f, header.data(), hlen);
    nlohmann::json meta = nlohmann::json::parse(header);

    Model<T> m(spec_from_json(meta.at("spec")));
    m.norm.offset = meta.at("norm").at("offset").get<double>();
    m.norm.scale = meta.at("norm").at("scale").get<double>();
    m.prov.seed = meta.at("provenance").at("seed").get<uint64_t>();
    m.prov.dataset_id = meta.at("provenance").at("dataset_id").get<std::string>();
    m.prov.strategy = meta.at("provenance").at("strategy").get<std::string>();

    auto blocks = m.params();
    const auto &jblocks = meta.at("blocks");
    if (jblocks.size() != blocks.size()) throw std::runtime_error("model block count mismatch");
    for (size_t i = 0; i < blocks.size(); ++i) {
        if (jblocks[i].at("name").get<std::string>() != blocks[i]->name)
            throw std::runtime_error("model block order mismatch at " + blocks[i]->name);
        for (auto &x : blocks[i]->w) x = static_cast<T>(read_le<float>(f));
    }
    return m;
}

}  // namespace cef::nets

#endif  // CEF_NETS_HPP
