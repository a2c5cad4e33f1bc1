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

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "catch_amalgamated.hpp"
#include "cef/train.hpp"

using namespace cef;
using namespace cef::train;

namespace {

DatasetSpec tiny_spec() {
    DatasetSpec spec;
    spec.scenario = chanmodel::ScenarioPreset::indoor();
    spec.P = 8;
    spec.num_subcarriers = 64;
    spec.Nt = 8;
    spec.K = 8;
    spec.n_train = 24;
    spec.n_val = 10;
    spec.n_test = 10;
    spec.seed = 5;
    return spec;
}

std::string file_bytes(const std::string &path) {
    std::ifstream f(path, std::ios::binary);
    REQUIRE(f.good());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

TrainConfig tiny_cfg(int epochs = 30) {
    TrainConfig cfg;
    cfg.batch_size = 8;
    cfg.lr_init = 2e-3;
    cfg.max_epochs = epochs;
    cfg.seed = 3;
    return cfg;
}

}  // namespace

TEST_CASE("mse loss against a hand-computed oracle") {
    Tensor<float> pred({2, 2, 1, 1}), target({2, 2, 1, 1});
    pred.v = {1.0f, 2.0f, 3.0f, 4.0f};
    target.v = {0.5f, 2.5f, 2.0f, 6.0f};
    // sum of squared diffs = 0.25 + 0.25 + 1 + 4 = 5.5; over batch of 2 -> 2.75
    REQUIRE(nn::mse_loss(pred, target, static_cast<Tensor<float> *>(nullptr)) ==
            Catch::Approx(2.75));

    SECTION("zero for identical tensors") {
        REQUIRE(nn::mse_loss(pred, pred, static_cast<Tensor<float> *>(nullptr)) == 0.0);
    }
    SECTION("quadratic scaling") {
        Tensor<float> p2 = pred, t2 = target;
        for (auto &v : p2.v) v *= 3.0f;
        for (auto &v : t2.v) v *= 3.0f;
        REQUIRE(nn::mse_loss(p2, t2, static_cast<Tensor<float> *>(nullptr)) ==
                Catch::Approx(9.0 * 2.75));
    }
    SECTION("gradient is 2(p-t)/batch") {
        Tensor<float> d;
        nn::mse_loss(pred, target, &d);
        REQUIRE(d.v[0] == Catch::Approx(2.0 * 0.5 / 2));
        REQUIRE(d.v[3] == Catch::Approx(2.0 * -2.0 / 2));
    }
}

TEST_CASE("multi-SNR proportions produce the documented per-level counts") {
    DatasetSpec spec;
    auto counts = snr_level_counts(spec, 10000);
    REQUIRE(counts == std::vector<int64_t>{2000, 2000, 2000, 1000, 1000, 1000, 1000});
    // level lookup is block-contiguous
    REQUIRE(snr_for_index(spec, counts, 0) == 0.0);
    REQUIRE(snr_for_index(spec, counts, 1999) == 0.0);
    REQUIRE(snr_for_index(spec, counts, 2000) == 5.0);
    REQUIRE(snr_for_index(spec, counts, 9999) == 30.0);
}

TEST_CASE("dataset build writes three disjoint deterministic splits") {
    namespace fs = std::filesystem;
    fs::create_directories("tt_work");
    auto spec = tiny_spec();
    auto paths = build_dataset(spec, "tt_work");

    auto tr = bench::read_container(paths.train);
    auto va = bench::read_container(paths.val);
    auto te = bench::read_container(paths.test);
    REQUIRE(tr.get("target").shape == std::vector<int64_t>{24, 2, 8, 8});
    REQUIRE(tr.get("input_ce").shape == std::vector<int64_t>{24, 2, 8, 8});
    REQUIRE(tr.get("input_pf").shape == std::vector<int64_t>{24, 2, 8, 8});
    REQUIRE(tr.get("snr_db").shape == std::vector<int64_t>{24});
    REQUIRE(va.get("target").shape[0] == 10);
    REQUIRE(te.get("target").shape[0] == 10);

    // same normalization metadata in all splits
    REQUIRE(tr.meta.at("norm") == va.meta.at("norm"));
    REQUIRE(tr.meta.at("norm") == te.meta.at("norm"));
    REQUIRE(tr.meta.at("spec_hash") == te.meta.at("spec_hash"));

    // disjoint by construction: first test sample differs from every train sample
    const auto &t0 = te.get("target").data;
    const auto &trd = tr.get("target").data;
    const int64_t per = 2 * 8 * 8;
    for (int64_t s = 0; s < 24; ++s) {
        bool same = std::equal(t0.begin(), t0.begin() + per, trd.begin() + s * per);
        REQUIRE_FALSE(same);
    }

    SECTION("rebuild is byte-identical") {
        std::string before = file_bytes(paths.train);
        auto paths2 = build_dataset(spec, "tt_work");
        REQUIRE(file_bytes(paths2.train) == before);
    }
    SECTION("a different seed changes the data") {
        auto spec2 = spec;
        spec2.seed = 6;
        auto paths2 = build_dataset(spec2, "tt_work");
        REQUIRE(file_bytes(paths2.train) != file_bytes(paths.train));
    }
}

TEST_CASE("normalization maps training targets into [0,1]") {
    namespace fs = std::filesystem;
    fs::create_directories("tt_work");
    auto spec = tiny_spec();
    auto paths = build_dataset(spec, "tt_work");
    auto tr = bench::read_container(paths.train);
    auto norm = norm_from_meta(tr);
    Tensor<float> t = normalized_tensor(tr, "target", norm);
    float lo = 1e9f, hi = -1e9f;
    for (float v : t.v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    REQUIRE(lo == Catch::Approx(0.0).margin(1e-6));
    REQUIRE(hi == Catch::Approx(1.0).margin(1e-6));
}

TEST_CASE("single-threaded training is bitwise deterministic") {
    namespace fs = std::filesystem;
    fs::create_directories("tt_work");
    auto paths = build_dataset(tiny_spec(), "tt_work");
    auto tr = bench::read_container(paths.train);
    auto va = bench::read_container(paths.val);

    auto run = [&]() {
        auto cfg = tiny_cfg(6);
        auto res = train_cf(tr, va, "input_ce", nets::Variant::kCfOnly, 16, cfg, 8, 8, 3);
        std::vector<float> flat;
        for (auto *p : res.model.params()) flat.insert(flat.end(), p->w.begin(), p->w.end());
        return flat;
    };
    auto a = run();
    auto b = run();
    REQUIRE(a == b);
}

TEST_CASE("training reduces the loss and retains the best checkpoint") {
    namespace fs = std::filesystem;
    fs::create_directories("tt_work");
    auto paths = build_dataset(tiny_spec(), "tt_work");
    auto tr = bench::read_container(paths.train);
    auto va = bench::read_container(paths.val);

    auto cfg = tiny_cfg(40);
    cfg.log_path = "tt_work/train_log.jsonl";
    std::remove(cfg.log_path.c_str());
    auto res = train_ce_subnet(tr, va, cfg, 8, 8);
    const auto &log = res.log;
    REQUIRE(log.epochs.size() >= 5);
    REQUIRE(log.epochs.back().train_loss < log.epochs.front().train_loss);
    REQUIRE(log.best_epoch >= 0);

    // best checkpoint: recorded best is never above any epoch's val loss
    for (const auto &e : log.epochs) REQUIRE(log.best_val_loss <= e.val_loss + 1e-12);

    // lr is non-increasing and halvings are counted
    for (size_t i = 1; i < log.epochs.size(); ++i)
        REQUIRE(log.epochs[i].lr <= log.epochs[i - 1].lr);

    // the restored model reproduces the best validation loss
    Tensor<float> xv = normalized_tensor(va, "input_ce", res.model.norm);
    Tensor<float> yv = normalized_tensor(va, "target", res.model.norm);
    Tensor<float> pred = forward_eval(res.model, xv);
    double val = nn::mse_loss(pred, yv, static_cast<Tensor<float> *>(nullptr));
    REQUIRE(val == Catch::Approx(log.best_val_loss).epsilon(1e-6));

    // JSONL log: one parseable record per epoch
    std::ifstream lf(cfg.log_path);
    std::string line;
    size_t rows = 0;
    while (std::getline(lf, line)) {
        auto j = nlohmann::json::parse(line);
        REQUIRE(j.contains("epoch"));
        REQUIRE(j.contains("lr"));
        REQUIRE(j.contains("train_loss"));
        REQUIRE(j.contains("val_loss"));
        REQUIRE(j.contains("val_nmse_db"));
        ++rows;
    }
    REQUIRE(rows == log.epochs.size());
}

TEST_CASE("two-step strategy materializes phase-1 outputs exactly") {
    namespace fs = std::filesystem;
    fs::create_directories("tt_work");
    auto paths = build_dataset(tiny_spec(), "tt_work");
    auto tr = bench::read_container(paths.train);
    auto va = bench::read_container(paths.val);

    auto cfg = tiny_cfg(4);
    auto ce = train_ce_subnet(tr, va, cfg, 8, 8);
    Container tr2 = materialize_ce_outputs(ce.model, tr);

    // byte-compare the materialized tensor against applying the model again
    Tensor<float> inputs = normalized_tensor(tr, "input_ce", ce.model.norm);
    Tensor<float> pred = forward_eval(ce.model, inputs);
    for (auto &v : pred.v) v = static_cast<float>(ce.model.norm.denormalize(v));
    REQUIRE(tr2.get("input_ce").data == std::vector<float>(pred.v.begin(), pred.v.end()));
    REQUIRE(tr2.get("target").data == tr.get("target").data);

    auto ts = train_two_step(tr, va, 16, cfg, 8, 8, 3);
    REQUIRE(ts.cefnet.spec().variant == nets::Variant::kCefnet);
    REQUIRE(ts.cefnet.prov.strategy == "two_step");

    // assembled joint net = phase-1 estimator composed with phase-2 feedback
    Tensor<float> x = normalized_tensor(va, "input_ce", ts.cefnet.norm);
    auto joint = ts.cefnet.forward(x, false);
    REQUIRE(joint.output.shape == std::vector<int64_t>{10, 2, 8, 8});
}

TEST_CASE("frozen estimation stage stays byte-identical through training") {
    namespace fs = std::filesystem;
    fs::create_directories("tt_work");
    auto paths = build_dataset(tiny_spec(), "tt_work");
    auto tr = bench::read_container(paths.train);
    auto va = bench::read_container(paths.val);

    auto cfg = tiny_cfg(4);
    auto ce = train_ce_subnet(tr, va, cfg, 8, 8);
    std::vector<std::vector<float>> before;
    for (auto *p : ce.model.ce_params()) before.push_back(p->w);

    auto res = train_end_to_end_frozen_ce(tr, va, ce.model, 16, cfg, 8, 8, 3);
    auto after = res.model.ce_params();
    REQUIRE(after.size() == before.size());
    for (size_t i = 0; i < after.size(); ++i) REQUIRE(after[i]->w == before[i]);
    REQUIRE(res.model.prov.strategy == "end_to_end_frozen_ce");

    // missing pretrained estimator is rejected
    nets::Model<float> headless(nets::assemble(nets::Variant::kPfnet, 16, 8, 8, 3));
    REQUIRE_THROWS_AS(train_end_to_end_frozen_ce(tr, va, headless, 16, cfg, 8, 8, 3),
                      MissingArtifact);
}

TEST_CASE("pilot-image training uses the pilot tensor and the CF architecture") {
    namespace fs = std::filesystem;
    fs::create_directories("tt_work");
    auto paths = build_dataset(tiny_spec(), "tt_work");
    auto tr = bench::read_container(paths.train);
    auto va = bench::read_container(paths.val);

    auto cfg = tiny_cfg(3);
    auto pf = train_pfnet(tr, va, 16, cfg, 8, 8, 3);
    REQUIRE(pf.model.spec().variant == nets::Variant::kPfnet);
    auto cef = nets::assemble(nets::Variant::kCefnet, 16, 8, 8, 3);
    REQUIRE(nets::weight_count(cef) - nets::weight_count(pf.model.spec()) == 14016);
}

TEST_CASE("non-finite loss aborts with a divergence error") {
    namespace fs = std::filesystem;
    fs::create_directories("tt_work");
    auto paths = build_dataset(tiny_spec(), "tt_work");
    auto tr = bench::read_container(paths.train);
    auto va = bench::read_container(paths.val);

    Container poisoned = tr;
    for (auto &t : poisoned.tensors)
        if (t.name == "target") t.data[0] = std::numeric_limits<float>::quiet_NaN();
    auto cfg = tiny_cfg(2);
    REQUIRE_THROWS_AS(train_ce_subnet(poisoned, va, cfg, 8, 8), DivergenceError);
}

TEST_CASE("tiny overfit run memorizes the training set") {
    namespace fs = std::filesystem;
    fs::create_directories("tt_work");
    auto spec = tiny_spec();
    spec.snr_levels_db = {20.0};
    spec.proportions = {1};
    auto paths = build_dataset(spec, "tt_work");
    auto tr = bench::read_container(paths.train);

    auto cfg = tiny_cfg(250);
    cfg.batch_size = 24;
    cfg.lr_init = 5e-3;
    cfg.early_stop_patience = 1000;  // no early stop: pure memorization check
    cfg.plateau_patience = 60;
    // validate on the training set itself: the loss floor is memorization
    auto res = train_cf(tr, tr, "input_ce", nets::Variant::kCfOnly, 32, cfg, 8, 8, 3);
    REQUIRE(res.log.epochs.back().train_loss < 0.05 * res.log.epochs.front().train_loss);
}
