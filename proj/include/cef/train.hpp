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

#ifndef CEF_TRAIN_HPP
#define CEF_TRAIN_HPP

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "cef/chanmodel.hpp"
#include "cef/common.hpp"
#include "cef/container.hpp"
#include "cef/estimate.hpp"
#include "cef/nets.hpp"
#include "cef/xform.hpp"

namespace cef::train {

using bench::Container;
using bench::TensorEntry;

// ---------------------------------------------------------------------------
// Dataset assembly
// ---------------------------------------------------------------------------

/// Sizes default to desk scale; paper_scale() switches to the reference
/// 100k/30k/20k splits.
struct DatasetSpec {
    chanmodel::ScenarioPreset scenario;
    int P = 32;
    int num_subcarriers = chanmodel::kDefaultSubcarriers;
    int Nt = chanmodel::kDefaultAntennas;
    int K = 32;
    std::vector<double> snr_levels_db = {0, 5, 10, 15, 20, 25, 30};
    std::vector<int> proportions = {2, 2, 2, 1, 1, 1, 1};
    int64_t n_train = 10000;
    int64_t n_val = 3000;
    int64_t n_test = 2000;
    uint64_t seed = 1;
    estimate::InterpMethod interp = estimate::InterpMethod::kDftInterp;

    void paper_scale() {
        n_train = 100000;
        n_val = 30000;
        n_test = 20000;
    }

    void validate() const {
        scenario.validate(num_subcarriers);
        if (snr_levels_db.empty()) throw ConfigError("at least one SNR level required");
        if (proportions.size() != snr_levels_db.size())
            throw ConfigError("proportions length must equal the number of SNR levels");
        for (int p : proportions)
            if (p < 1) throw ConfigError("proportions must be positive");
        if (n_train < 1 || n_val < 1 || n_test < 1) throw ConfigError("split sizes must be >= 1");
        if (K < 1 || K > num_subcarriers) throw ConfigError("K out of range");
        if (num_subcarriers % P != 0) throw ConfigError("P must divide the subcarrier count");
    }

    nlohmann::json to_json() const {
        return {{"scenario", chanmodel::to_string(scenario.name)},
                {"carrier_hz", scenario.carrier_hz},
                {"max_delay_taps", scenario.max_delay_taps},
                {"num_clusters", scenario.num_clusters},
                {"paths_per_cluster", scenario.paths_per_cluster},
                {"delay_spread_taps", scenario.delay_spread_taps},
                {"angular_spread_rad", scenario.angular_spread_rad},
                {"area_side_m", scenario.area_side_m},
                {"P", P},
                {"num_subcarriers", num_subcarriers},
                {"Nt", Nt},
                {"K", K},
                {"snr_levels_db", snr_levels_db},
                {"proportions", proportions},
                {"n_train", n_train},
                {"n_val", n_val},
                {"n_test", n_test},
                {"seed", seed},
                {"interp", estimate::to_string(interp)}};
    }

    uint64_t hash() const { return fnv1a(to_json().dump()); }

    /// Short stable identifier used in file names and provenance.
    std::string id() const {
        std::string snr = snr_levels_db.size() == 1
                              ? "snr" + std::to_string(static_cast<int>(snr_levels_db[0]))
                              : "snrmix";
        return chanmodel::to_string(scenario.name) + "_P" + std::to_string(P) + "_" + snr +
               "_s" + std::to_string(seed) + "_n" + std::to_string(n_train);
    }
};

/// Per-level sample counts for one split: floor allocation by proportions,
/// remainder distributed from the first level on.
inline std::vector<int64_t> snr_level_counts(const DatasetSpec &spec, int64_t n) {
    int64_t total = 0;
    for (int p : spec.proportions) total += p;
    std::vector<int64_t> counts(spec.proportions.size());
    int64_t assigned = 0;
    for (size_t i = 0; i < counts.size(); ++i) {
        counts[i] = n * spec.proportions[i] / total;
        assigned += counts[i];
    }
    for (size_t i = 0; assigned < n; i = (i + 1) % counts.size()) {
        ++counts[i];
        ++assigned;
    }
    return counts;
}

inline double snr_for_index(const DatasetSpec &spec, const std::vector<int64_t> &counts,
                            int64_t idx_in_split) {
    int64_t cum = 0;
    for (size_t l = 0; l < counts.size(); ++l) {
        cum += counts[l];
        if (idx_in_split < cum) return spec.snr_levels_db[l];
    }
    return spec.snr_levels_db.back();
}

struct DatasetPaths {
    std::string train, val, test;
};

namespace detail {

inline void append_planes(std::vector<float> &dst, const xform::AngleDelayChannel &a) {
    for (double v : a.planes) dst.push_back(static_cast<float>(v));
}

}  // namespace detail

/// Build one split. Sample `g` (global index across splits) is a pure
/// function of (spec, g): channel stream and noise stream are derived from
/// seed ^ g, so regeneration is byte-identical and order-independent.
inline Container build_split(const DatasetSpec &spec, const std::string &split_name,
                             int64_t global_offset, int64_t n, xform::NormMeta *norm_in_out) {
    spec.validate();
    const auto grid = chanmodel::make_pilot_grid(spec.P, spec.num_subcarriers, spec.Nt);
    const bool covered = grid.covers_delay(spec.scenario);
    const auto counts = snr_level_counts(spec, n);
    const int64_t plane = int64_t(2) * spec.K * spec.Nt;

    std::vector<float> target, input_ce, input_pf, snrs;
    target.reserve(n * plane);
    input_ce.reserve(n * plane);
    input_pf.reserve(n * plane);
    snrs.reserve(n);

    for (int64_t i = 0; i < n; ++i) {
        const uint64_t sample_seed = spec.seed ^ static_cast<uint64_t>(global_offset + i);
        const double snr_db = snr_for_index(spec, counts, i);
        auto ch = chanmodel::generate_channel(spec.scenario, sample_seed, spec.num_subcarriers,
                                              spec.Nt);
        auto h_da = xform::to_angle_delay(ch.h_fs);
        detail::append_planes(target, xform::truncate(h_da, spec.K));

        auto rx = chanmodel::synthesize_received_pilots(ch, grid, snr_db, sample_seed);
        auto ls = estimate::ls_estimate(rx, grid);
        auto interp = estimate::interpolate(ls, spec.num_subcarriers, spec.interp);
        detail::append_planes(input_ce, xform::truncate(xform::to_angle_delay(interp), spec.K));

        auto zf = estimate::zero_filled_pilot_grid(rx, grid);
        detail::append_planes(input_pf, xform::truncate(xform::to_angle_delay(zf), spec.K));

        snrs.push_back(static_cast<float>(snr_db));
    }

    if (norm_in_out->scale == 1.0 && norm_in_out->offset == 0.0 && split_name == "train") {
        // dataset-level affine map to [0,1], fit on the training targets
        float lo = target[0], hi = target[0];
        for (float v : target) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        norm_in_out->offset = lo;
        norm_in_out->scale = (hi > lo) ? (hi - lo) : 1.0;
    }

    Container c;
    c.tensors.push_back({"target", {n, 2, spec.K, spec.Nt}, std::move(target)});
    c.tensors.push_back({"input_ce", {n, 2, spec.K, spec.Nt}, std::move(input_ce)});
    c.tensors.push_back({"input_pf", {n, 2, spec.K, spec.Nt}, std::move(input_pf)});
    c.tensors.push_back({"snr_db", {n}, std::move(snrs)});
    c.meta = {{"spec", spec.to_json()},
              {"spec_hash", hex64(spec.hash())},
              {"id", spec.id()},
              {"split", split_name},
              {"seed", spec.seed},
              {"pilots_cover_delay", covered},
              {"norm", {{"offset", norm_in_out->offset}, {"scale", norm_in_out->scale}}}};
    return c;
}

/// Build and write the three disjoint splits (train/val/test in that order of
/// the global index range).
inline DatasetPaths build_dataset(const DatasetSpec &spec, const std::string &out_dir) {
    spec.validate();
    const auto grid = chanmodel::make_pilot_grid(spec.P, spec.num_subcarriers, spec.Nt);
    if (!grid.covers_delay(spec.scenario))
        std::cerr << "[gen-data] warning: P=" << spec.P << " is below the delay support "
                  << spec.scenario.max_delay_taps << "; estimation is under-determined\n";

    xform::NormMeta norm;
    DatasetPaths paths;
    std::string base = out_dir + "/" + spec.id();
    Container tr = build_split(spec, "train", 0, spec.n_train, &norm);
    paths.train = base + "_train.cefd";
    bench::write_container(paths.train, tr);
    Container va = build_split(spec, "val", spec.n_train, spec.n_val, &norm);
    paths.val = base + "_val.cefd";
    bench::write_container(paths.val, va);
    Container te = build_split(spec, "test", spec.n_train + spec.n_val, spec.n_test, &norm);
    paths.test = base + "_test.cefd";
    bench::write_container(paths.test, te);
    return paths;
}

inline xform::NormMeta norm_from_meta(const Container &c) {
    xform::NormMeta n;
    n.offset = c.meta.at("norm").at("offset").get<double>();
    n.scale = c.meta.at("norm").at("scale").get<double>();
    return n;
}

// ---------------------------------------------------------------------------
// Optimizer and training loops
// ---------------------------------------------------------------------------

struct TrainConfig {
    int batch_size = 200;
    double lr_init = 0.01;
    int max_epochs = 200;
    int plateau_patience = 10;    // epochs without val improvement before lr halving
    int early_stop_patience = 25;  // epochs without val improvement before stopping
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    uint64_t seed = 1;
    std::string strategy = "two_step";  // or "end_to_end_frozen_ce"
    std::string log_path;               // JSONL epoch records, optional
    bool verbose = false;
    int64_t val_subset = 0;  // cap validation samples per epoch (0 = all)
};

template <typename T>
class Adam {
  public:
    Adam(double b1, double b2, double eps) : b1_(b1), b2_(b2), eps_(eps) {}

    void step(std::vector<nn::ParamBlock<T> *> &blocks, double lr) {
        if (m_.empty()) {
            m_.resize(blocks.size());
            v_.resize(blocks.size());
            for (size_t i = 0; i < blocks.size(); ++i) {
                m_[i].assign(blocks[i]->w.size(), T(0));
                v_[i].assign(blocks[i]->w.size(), T(0));
            }
        }
        ++t_;
        const double bc1 = 1.0 - std::pow(b1_, t_);
        const double bc2 = 1.0 - std::pow(b2_, t_);
        for (size_t i = 0; i < blocks.size(); ++i) {
            auto &p = *blocks[i];
            for (size_t j = 0; j < p.w.size(); ++j) {
                double g = p.g[j];
                double m = b1_ * m_[i][j] + (1 - b1_) * g;
                double v = b2_ * v_[i][j] + (1 - b2_) * g * g;
                m_[i][j] = static_cast<T>(m);
                v_[i][j] = static_cast<T>(v);
                p.w[j] -= static_cast<T>(lr * (m / bc1) / (std::sqrt(v / bc2) + eps_));
            }
        }
    }

  private:
    double b1_, b2_, eps_;
    int64_t t_ = 0;
    std::vector<std::vector<T>> m_, v_;
};

struct EpochRecord {
    int epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_nmse_db = 0.0;
};

struct TrainLog {
    std::vector<EpochRecord> epochs;
    double best_val_loss = 0.0;
    int best_epoch = -1;
    int lr_halvings = 0;

    nlohmann::json to_json() const {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto &e : epochs)
            rows.push_back({{"epoch", e.epoch},
                            {"lr", e.lr},
                            {"train_loss", e.train_loss},
                            {"val_loss", e.val_loss},
                            {"val_nmse_db", e.val_nmse_db}});
        return {{"epochs", rows},
                {"best_val_loss", best_val_loss},
                {"best_epoch", best_epoch},
                {"lr_halvings", lr_halvings}};
    }
};

/// Normalized [S,2,K,Nt] tensor from a container entry.
inline Tensor<float> normalized_tensor(const Container &c, const std::string &name,
                                       const xform::NormMeta &norm) {
    const TensorEntry &e = c.get(name);
    Tensor<float> t;
    t.shape = e.shape;
    t.v.resize(e.data.size());
    for (size_t i = 0; i < e.data.size(); ++i)
        t.v[i] = static_cast<float>(norm.normalize(e.data[i]));
    return t;
}

inline Tensor<float> slice_samples(const Tensor<float> &t, const std::vector<int64_t> &idx,
                                   int64_t from, int64_t to) {
    const int64_t per = t.size() / t.dim(0);
    std::vector<int64_t> shape = t.shape;
    shape[0] = to - from;
    Tensor<float> out(shape);
    for (int64_t i = from; i < to; ++i)
        std::memcpy(out.data() + (i - from) * per, t.data() + idx[i] * per, sizeof(float) * per);
    return out;
}

/// Forward a large set in inference mode, batched.
inline Tensor<float> forward_eval(nets::Model<float> &model, const Tensor<float> &inputs,
                                  int batch = 256) {
    const int64_t s = inputs.dim(0);
    const int64_t per = inputs.size() / s;
    Tensor<float> out;
    std::vector<int64_t> ident(s);
    for (int64_t i = 0; i < s; ++i) ident[i] = i;
    for (int64_t b0 = 0; b0 < s; b0 += batch) {
        int64_t b1 = std::min<int64_t>(s, b0 + batch);
        Tensor<float> x = slice_samples(inputs, ident, b0, b1);
        auto o = model.forward(x, false);
        if (out.v.empty()) {
            out.shape = o.output.shape;
            out.shape[0] = s;
            out.v.resize(s * (o.output.size() / o.output.dim(0)));
        }
        std::memcpy(out.data() + b0 * per, o.output.data(),
                    sizeof(float) * o.output.v.size());
    }
    return out;
}

/// Denormalized NMSE of model outputs against container targets.
inline xform::NMSEReport evaluate_nmse(nets::Model<float> &model, const Container &c,
                                       const std::string &input_name, int batch = 256) {
    Tensor<float> inputs = normalized_tensor(c, input_name, model.norm);
    Tensor<float> pred = forward_eval(model, inputs, batch);
    for (auto &v : pred.v) v = static_cast<float>(model.norm.denormalize(v));
    const TensorEntry &target = c.get("target");
    return xform::nmse_flat(target.data.data(), pred.data(), pred.size() / pred.dim(0),
                            pred.dim(0));
}

/// Supervised loop with plateau lr-halving, early stopping and
/// best-checkpoint restore. Inputs/targets are already normalized.
inline TrainLog fit(nets::Model<float> &model, const Tensor<float> &x, const Tensor<float> &y,
                    const Tensor<float> &xv, const Tensor<float> &yv, const TrainConfig &cfg) {
    TrainLog log;
    Adam<float> opt(cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
    auto trainable = model.trainable_params();
    auto all_blocks = model.params();

    const int64_t s = x.dim(0);
    std::vector<int64_t> order(s);
    for (int64_t i = 0; i < s; ++i) order[i] = i;

    Tensor<float> xv_used = xv, yv_used = yv;
    if (cfg.val_subset > 0 && cfg.val_subset < xv.dim(0)) {
        std::vector<int64_t> ident(xv.dim(0));
        for (int64_t i = 0; i < xv.dim(0); ++i) ident[i] = i;
        xv_used = slice_samples(xv, ident, 0, cfg.val_subset);
        yv_used = slice_samples(yv, ident, 0, cfg.val_subset);
    }

    double lr = cfg.lr_init;
    double best_val = std::numeric_limits<double>::infinity();
    std::vector<std::vector<float>> best_snapshot;
    int since_best = 0;

    std::ofstream log_file;
    if (!cfg.log_path.empty()) log_file.open(cfg.log_path, std::ios::app);

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        // deterministic shuffle
        Rng shuffle_rng = Rng::for_sample(cfg.seed, static_cast<uint64_t>(epoch), 0x53485546ull);
        for (int64_t i = s - 1; i > 0; --i)
            std::swap(order[i], order[shuffle_rng.uniform_index(i + 1)]);

        double epoch_loss = 0.0;
        int64_t nbatches = 0;
        for (int64_t b0 = 0; b0 < s; b0 += cfg.batch_size) {
            int64_t b1 = std::min<int64_t>(s, b0 + cfg.batch_size);
            Tensor<float> xb = slice_samples(x, order, b0, b1);
            Tensor<float> yb = slice_samples(y, order, b0, b1);
            auto out = model.forward(xb, true);
            Tensor<float> dpred;
            double loss = nn::mse_loss(out.output, yb, &dpred);
            if (!std::isfinite(loss))
                throw DivergenceError("training loss is not finite at epoch " +
                                      std::to_string(epoch) + ", batch " +
                                      std::to_string(nbatches));
            model.zero_grad();
            model.backward(dpred);
            opt.step(trainable, lr);
            epoch_loss += loss;
            ++nbatches;
        }
        epoch_loss /= std::max<int64_t>(1, nbatches);

        // validation (inference mode)
        double val_loss = 0.0;
        xform::NMSEReport vr;
        {
            Tensor<float> pred = forward_eval(model, xv_used, std::max(cfg.batch_size, 64));
            val_loss = nn::mse_loss(pred, yv_used, static_cast<Tensor<float> *>(nullptr));
            Tensor<float> predd = pred, yd = yv_used;
            for (auto &v : predd.v) v = static_cast<float>(model.norm.denormalize(v));
            for (auto &v : yd.v) v = static_cast<float>(model.norm.denormalize(v));
            vr = xform::nmse_flat(yd.data(), predd.data(), predd.size() / predd.dim(0),
                                  predd.dim(0));
        }

        EpochRecord rec{epoch, lr, epoch_loss, val_loss, vr.nmse_db};
        log.epochs.push_back(rec);
        if (log_file)
            log_file << nlohmann::json({{"epoch", epoch},
                                        {"lr", lr},
                                        {"train_loss", epoch_loss},
                                        {"val_loss", val_loss},
                                        {"val_nmse_db", vr.nmse_db}})
                            .dump()
                     << "\n"
                     << std::flush;
        if (cfg.verbose)
            std::cerr << "epoch " << epoch << " lr " << lr << " train " << epoch_loss << " val "
                      << val_loss << " val_nmse " << vr.nmse_db << " dB\n";

        if (val_loss < best_val) {
            best_val = val_loss;
            log.best_epoch = epoch;
            since_best = 0;
            best_snapshot.clear();
            for (auto *p : all_blocks) best_snapshot.push_back(p->w);
        } else {
            ++since_best;
            if (since_best >= cfg.early_stop_patience) break;
            if (since_best % cfg.plateau_patience == 0) {
                lr *= 0.5;
                ++log.lr_halvings;
            }
        }
    }

    if (!best_snapshot.empty())
        for (size_t i = 0; i < all_blocks.size(); ++i) all_blocks[i]->w = best_snapshot[i];
    log.best_val_loss = best_val;
    return log;
}

/// Replace "input_ce" with the trained estimator's refined outputs
/// (physical scale), producing the phase-2 training set.
inline Container materialize_ce_outputs(nets::Model<float> &ce, const Container &c) {
    Container out = c;
    Tensor<float> inputs = normalized_tensor(c, "input_ce", ce.norm);
    Tensor<float> pred = forward_eval(ce, inputs);
    for (auto &v : pred.v) v = static_cast<float>(ce.norm.denormalize(v));
    for (auto &t : out.tensors)
        if (t.name == "input_ce") t.data.assign(pred.v.begin(), pred.v.end());
    out.meta["derived"] = "ce_materialized";
    return out;
}

struct FitResult {
    nets::Model<float> model;
    TrainLog log;
};

/// Phase 1: estimation subnet on (interpolated LS -> ideal). Used standalone
/// and as the first step of the two-step strategy.
inline FitResult train_ce_subnet(const Container &train_c, const Container &val_c,
                                 const TrainConfig &cfg, int K = 32, int Nt = 32) {
    nets::Model<float> ce(nets::assemble(nets::Variant::kCeOnly, /*M=*/1, K, Nt));
    ce.init(cfg.seed);
    ce.norm = norm_from_meta(train_c);
    ce.prov = {cfg.seed, train_c.meta.at("id").get<std::string>() + "#" +
                             train_c.meta.at("spec_hash").get<std::string>(),
               "ce_subnet"};
    Tensor<float> x = normalized_tensor(train_c, "input_ce", ce.norm);
    Tensor<float> y = normalized_tensor(train_c, "target", ce.norm);
    Tensor<float> xv = normalized_tensor(val_c, "input_ce", ce.norm);
    Tensor<float> yv = normalized_tensor(val_c, "target", ce.norm);
    TrainLog log = fit(ce, x, y, xv, yv, cfg);
    return {std::move(ce), std::move(log)};
}

/// Feedback-only model on a chosen input tensor ("input_ce" materialized CE
/// outputs, "input_pf" pilot images, or "target" for the ideal-input case).
inline FitResult train_cf(const Container &train_c, const Container &val_c,
                          const std::string &input_name, nets::Variant variant, int M,
                          const TrainConfig &cfg, int K = 32, int Nt = 32, int L = 16) {
    nets::Model<float> cf(nets::assemble(variant, M, K, Nt, L));
    cf.init(cfg.seed);
    cf.norm = norm_from_meta(train_c);
    cf.prov = {cfg.seed, train_c.meta.at("id").get<std::string>() + "#" +
                             train_c.meta.at("spec_hash").get<std::string>(),
               cfg.strategy};
    Tensor<float> x = normalized_tensor(train_c, input_name, cf.norm);
    Tensor<float> y = normalized_tensor(train_c, "target", cf.norm);
    Tensor<float> xv = normalized_tensor(val_c, input_name, cf.norm);
    Tensor<float> yv = normalized_tensor(val_c, "target", cf.norm);
    TrainLog log = fit(cf, x, y, xv, yv, cfg);
    return {std::move(cf), std::move(log)};
}

template <typename T>
void copy_params(std::vector<nn::ParamBlock<T> *> dst, std::vector<nn::ParamBlock<T> *> src) {
    if (dst.size() != src.size()) throw std::runtime_error("parameter block count mismatch");
    for (size_t i = 0; i < dst.size(); ++i) {
        if (dst[i]->w.size() != src[i]->w.size())
            throw std::runtime_error("parameter block size mismatch at " + dst[i]->name);
        dst[i]->w = src[i]->w;
    }
}

struct TwoStepResult {
    nets::Model<float> cefnet;
    TrainLog ce_log;
    TrainLog cf_log;
};

/// Strategy 1: train the estimation subnet, materialize its outputs, train
/// the feedback subnet on them, then assemble the joint network.
inline TwoStepResult train_two_step(const Container &train_c, const Container &val_c, int M,
                                    const TrainConfig &cfg, int K = 32, int Nt = 32, int L = 16) {
    auto ce = train_ce_subnet(train_c, val_c, cfg, K, Nt);
    Container train2 = materialize_ce_outputs(ce.model, train_c);
    Container val2 = materialize_ce_outputs(ce.model, val_c);
    auto cf = train_cf(train2, val2, "input_ce", nets::Variant::kCfOnly, M, cfg, K, Nt, L);

    nets::Model<float> cef(nets::assemble(nets::Variant::kCefnet, M, K, Nt, L));
    copy_params(cef.ce_params(), ce.model.params());
    copy_params(cef.cf_params(), cf.model.params());
    cef.norm = ce.model.norm;
    cef.prov = {cfg.seed, ce.model.prov.dataset_id, "two_step"};
    return {std::move(cef), std::move(ce.log), std::move(cf.log)};
}

/// Strategy 2: assemble the joint network with the pretrained estimation
/// subnet loaded and frozen; only the feedback parameters update.
inline FitResult train_end_to_end_frozen_ce(const Container &train_c, const Container &val_c,
                                            nets::Model<float> &pretrained_ce, int M,
                                            const TrainConfig &cfg, int K = 32, int Nt = 32,
                                            int L = 16) {
    if (!pretrained_ce.spec().has_ce())
        throw MissingArtifact("end_to_end_frozen_ce needs a pretrained estimation subnet");
    nets::Model<float> cef(nets::assemble(nets::Variant::kCefnet, M, K, Nt, L));
    cef.init(cfg.seed);
    copy_params(cef.ce_params(), pretrained_ce.ce_params());
    cef.freeze_ce = true;
    cef.norm = norm_from_meta(train_c);
    cef.prov = {cfg.seed, train_c.meta.at("id").get<std::string>() + "#" +
                              train_c.meta.at("spec_hash").get<std::string>(),
                "end_to_end_frozen_ce"};
    Tensor<float> x = normalized_tensor(train_c, "input_ce", cef.norm);
    Tensor<float> y = normalized_tensor(train_c, "target", cef.norm);
    Tensor<float> xv = normalized_tensor(val_c, "input_ce", cef.norm);
    Tensor<float> yv = normalized_tensor(val_c, "target", cef.norm);
    TrainLog log = fit(cef, x, y, xv, yv, cfg);
    return {std::move(cef), std::move(log)};
}

/// Direct pilot compression: same architecture and procedure as the feedback
/// subnet, with pilot images as inputs.
inline FitResult train_pfnet(const Container &train_c, const Container &val_c, int M,
                             const TrainConfig &cfg, int K = 32, int Nt = 32, int L = 16) {
    return train_cf(train_c, val_c, "input_pf", nets::Variant::kPfnet, M, cfg, K, Nt, L);
}

}  // namespace cef::train

#endif  // CEF_TRAIN_HPP
