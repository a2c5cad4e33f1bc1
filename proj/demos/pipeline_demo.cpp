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
//
// Miniature end-to-end walk-through: synthesize channels and pilots, build a
// dataset, train the two-step joint network at toy scale, evaluate, and push
// one codeword through the quantizer. Runs in seconds on a laptop.

#include <filesystem>
#include <iostream>
#include <sstream>

#include "cef/bench.hpp"
#include "cef/quant.hpp"
#include "cef/train.hpp"

using namespace cef;

int main() {
    namespace fs = std::filesystem;
    fs::create_directories("demo_work");

    // 1. a toy dataset: 64 subcarriers, 8 antennas, 8 retained delay taps
    train::DatasetSpec ds;
    ds.scenario = chanmodel::ScenarioPreset::indoor();
    ds.P = 16;
    ds.num_subcarriers = 64;
    ds.Nt = 8;
    ds.K = 8;
    ds.n_train = 200;
    ds.n_val = 40;
    ds.n_test = 40;
    ds.seed = 11;
    auto paths = train::build_dataset(ds, "demo_work");
    auto tr = bench::read_container(paths.train);
    auto va = bench::read_container(paths.val);
    auto te = bench::read_container(paths.test);
    std::cout << "dataset: " << tr.meta.at("id").get<std::string>() << " with "
              << tr.get("target").shape[0] << "/" << va.get("target").shape[0] << "/"
              << te.get("target").shape[0] << " samples\n";

    // 2. the raw interpolated-LS estimate quality (network input)
    {
        const auto &t = te.get("target");
        const auto &e = te.get("input_ce");
        auto r = xform::nmse_flat(t.data.data(), e.data.data(), t.count() / t.shape[0],
                                  t.shape[0]);
        std::cout << "LS + DFT interpolation: " << r.nmse_db << " dB NMSE\n";
    }

    // 3. two-step training of the joint network at M=32 (CR = 4 for this size)
    train::TrainConfig tc;
    tc.batch_size = 20;
    tc.lr_init = 2e-3;
    tc.max_epochs = 40;
    tc.seed = 11;
    const int m = 32;
    auto res = train::train_two_step(tr, va, m, tc, ds.K, ds.Nt, /*L=*/4);
    auto rep = train::evaluate_nmse(res.cefnet, te, "input_ce");
    std::cout << "joint network (M=" << m
              << ", CR=" << xform::compression_ratio(ds.K, ds.Nt, m) << "): " << rep.nmse_db
              << " dB NMSE after " << res.cf_log.epochs.size() << " feedback epochs\n";

    // 4. quantize one codeword into a wire bitstream and back
    Tensor<float> x = train::normalized_tensor(te, "input_ce", res.cefnet.norm);
    x.shape[0] = 1;
    x.v.resize(size_t(2) * ds.K * ds.Nt);
    Tensor<float> code = res.cefnet.encode(x, false);
    std::vector<float> cw(code.v.begin(), code.v.end());
    double mu = quant::select_mu(std::vector<std::vector<float>>{cw}, 4);
    auto bs = quant::quantize(cw, quant::QuantizerConfig{4, mu});
    std::ostringstream wire;
    quant::serialize(bs, wire);
    std::cout << "codeword of " << cw.size() << " components -> " << wire.str().size()
              << "-byte bitstream (B=4, mu=" << mu << ")\n";

    return 0;
}
