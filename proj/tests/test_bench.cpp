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

#include <filesystem>
#include <fstream>

#include "catch_amalgamated.hpp"
#include "cef/bench.hpp"

using namespace cef;
using namespace cef::bench;

namespace {

ExperimentConfig tiny_config(const std::string &variant) {
    ExperimentConfig cfg;
    cfg.scenario = chanmodel::Scenario::kIndoor;
    cfg.P = 8;
    cfg.num_subcarriers = 64;
    cfg.Nt = 8;
    cfg.K = 8;
    cfg.CR = 8;  // M = 16
    cfg.L = 3;
    cfg.variant = variant;
    cfg.n_train = 24;
    cfg.n_val = 10;
    cfg.n_test = 10;
    cfg.seed = 5;
    cfg.work_dir = "tb_work";
    return cfg;
}

void ensure_tiny_dataset() {
    namespace fs = std::filesystem;
    fs::create_directories("tb_work");
    auto ds = tiny_config("ls").dataset_spec();
    if (!fs::exists(dataset_path("tb_work", ds, "test"))) train::build_dataset(ds, "tb_work");
}

std::string file_bytes(const std::string &path) {
    std::ifstream f(path, std::ios::binary);
    REQUIRE(f.good());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::vector<ReportRow> sample_rows() {
    std::vector<ReportRow> rows;
    for (int i = 0; i < 3; ++i) {
        ReportRow r;
        r.variant = i == 0 ? "ls" : "lmmse";
        r.scenario = "indoor";
        r.P = 8 << i;
        r.CR = 4;
        r.M = 512;
        r.B = 0;
        r.snr = std::to_string(i * 10);
        r.nmse_db = -8.5 - i;
        r.n_samples = 100;
        r.wall_time_s = 0.25 * i;
        r.dataset_id = "indoor_P" + std::to_string(8 << i);
        r.dataset_hash = "aaaa";
        r.provenance = "unit";
        rows.push_back(r);
    }
    return rows;
}

}  // namespace

TEST_CASE("container round trip is byte-identical") {
    namespace fs = std::filesystem;
    fs::create_directories("tb_work");
    Container c;
    c.tensors.push_back({"a", {2, 3}, {1, 2, 3, 4, 5, 6}});
    c.tensors.push_back({"b", {4}, {0.5f, -0.5f, 9.0f, 1e-20f}});
    c.meta = {{"id", "unit"}, {"norm", {{"offset", 0.0}, {"scale", 1.0}}}};
    write_container("tb_work/rt.cefd", c);
    auto r = read_container("tb_work/rt.cefd");
    REQUIRE(r.tensors.size() == 2);
    REQUIRE(r.get("a").data == c.get("a").data);
    REQUIRE(r.get("b").shape == std::vector<int64_t>{4});
    REQUIRE(r.meta.at("id") == "unit");
    write_container("tb_work/rt2.cefd", r);
    REQUIRE(file_bytes("tb_work/rt.cefd") == file_bytes("tb_work/rt2.cefd"));

    REQUIRE_THROWS_AS(read_container("tb_work/absent.cefd"), MissingArtifact);
}

TEST_CASE("table emit/parse round trip is byte-identical") {
    auto rows = sample_rows();
    std::string t1 = emit_table(rows);
    auto parsed = parse_table(t1);
    REQUIRE(parsed.size() == rows.size());
    std::string t2 = emit_table(parsed);
    REQUIRE(t1 == t2);
    // header + 3 lines
    REQUIRE(std::count(t1.begin(), t1.end(), '\n') == 4);

    std::vector<ReportRow> none;
    REQUIRE_THROWS_AS(emit_table(none), ConfigError);

    // structured form carries the same fields
    auto j = rows_to_json(rows);
    REQUIRE(j.size() == 3);
    auto back = row_from_json(j[1]);
    REQUIRE(back.nmse_db == rows[1].nmse_db);
    REQUIRE(back.dataset_id == rows[1].dataset_id);
}

TEST_CASE("report refuses mismatched dataset hashes") {
    auto rows = sample_rows();
    check_dataset_consistency(rows);  // distinct ids are fine
    rows[1].dataset_id = rows[0].dataset_id;
    rows[1].dataset_hash = "bbbb";
    REQUIRE_THROWS_AS(check_dataset_consistency(rows), ConfigError);
}

TEST_CASE("plot emission covers every SNR tick") {
    auto rows = sample_rows();
    std::string svg = emit_plot(rows);
    REQUIRE(svg.find("<svg") != std::string::npos);
    REQUIRE(svg.find("SNR (dB)") != std::string::npos);
    REQUIRE(svg.find("NMSE (dB)") != std::string::npos);
    for (const char *tick : {">0<", ">10<", ">20<"}) REQUIRE(svg.find(tick) != std::string::npos);
    REQUIRE(svg.find("polyline") != std::string::npos);

    std::vector<ReportRow> aggregate_only(1, rows[0]);
    aggregate_only[0].snr = "all";
    REQUIRE_THROWS_AS(emit_plot(aggregate_only), ConfigError);
}

TEST_CASE("experiment config validation") {
    auto cfg = tiny_config("ls");
    cfg.validate();
    REQUIRE(cfg.M() == 16);

    auto bad = cfg;
    bad.variant = "magic";
    REQUIRE_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.B = 3;  // quantization without codewords
    REQUIRE_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.CR = 7;
    REQUIRE_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.snr_policy = "sometimes";
    REQUIRE_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.variant = "cefnet";
    bad.B = 4;
    bad.validate();
}

TEST_CASE("ls experiment runs from the container and is deterministic") {
    ensure_tiny_dataset();
    auto cfg = tiny_config("ls");
    auto rows1 = run_experiment(cfg);
    auto rows2 = run_experiment(cfg);
    REQUIRE(!rows1.empty());
    REQUIRE(rows1[0].snr == "all");
    REQUIRE(std::isfinite(rows1[0].nmse_db));
    REQUIRE(rows1[0].nmse_db == rows2[0].nmse_db);  // identical to the last digit
    REQUIRE(rows1[0].n_samples == 10);
    // multi-SNR test split yields per-level rows
    REQUIRE(rows1.size() == 1 + 7);
}

TEST_CASE("lmmse and lasso experiments produce finite rows") {
    ensure_tiny_dataset();
    for (const char *variant : {"lmmse", "lasso"}) {
        auto cfg = tiny_config(variant);
        auto rows = run_experiment(cfg);
        REQUIRE(std::isfinite(rows[0].nmse_db));
        REQUIRE(rows[0].nmse_db < 0.0);
    }
}

TEST_CASE("model-backed experiment with and without quantization") {
    ensure_tiny_dataset();
    auto cfg = tiny_config("cf_only_ideal");
    auto ds = cfg.dataset_spec();
    auto tr = read_container(dataset_path("tb_work", ds, "train"));
    auto va = read_container(dataset_path("tb_work", ds, "val"));

    train::TrainConfig tc;
    tc.batch_size = 8;
    tc.lr_init = 2e-3;
    tc.max_epochs = 8;
    tc.seed = 2;
    auto fitres = train::train_cf(tr, va, "target", nets::Variant::kCfOnly, cfg.M(), tc, cfg.K,
                                  cfg.Nt, cfg.L);
    nets::save_model(fitres.model, model_path(cfg));

    auto rows = run_experiment(cfg);
    REQUIRE(std::isfinite(rows[0].nmse_db));

    auto qcfg = cfg;
    qcfg.B = 3;
    auto qrows = run_experiment(qcfg);
    REQUIRE(std::isfinite(qrows[0].nmse_db));
    // quantization can only lose information
    REQUIRE(qrows[0].nmse_db >= rows[0].nmse_db - 1e-9);
    REQUIRE(qrows[0].provenance.find("+Q") != std::string::npos);
}

TEST_CASE("missing artifacts raise actionable errors") {
    namespace fs = std::filesystem;
    fs::create_directories("tb_empty");
    auto cfg = tiny_config("ls");
    cfg.work_dir = "tb_empty";
    try {
        run_experiment(cfg);
        FAIL("expected MissingArtifact");
    } catch (const MissingArtifact &e) {
        REQUIRE(std::string(e.what()).find("gen-data") != std::string::npos);
    }

    ensure_tiny_dataset();
    auto mcfg = tiny_config("cefnet");
    try {
        run_experiment(mcfg);
        FAIL("expected MissingArtifact");
    } catch (const MissingArtifact &e) {
        REQUIRE(std::string(e.what()).find("train") != std::string::npos);
    }
}

TEST_CASE("stale dataset hash is surfaced") {
    ensure_tiny_dataset();
    auto cfg = tiny_config("ls");
    auto ds = cfg.dataset_spec();
    auto te = read_container(dataset_path("tb_work", ds, "test"));
    auto meta = te.meta;
    te.meta["spec_hash"] = "0000000000000000";
    write_container(dataset_path("tb_work", ds, "test"), te);
    REQUIRE_THROWS_AS(run_experiment(cfg), MissingArtifact);
    te.meta = meta;
    write_container(dataset_path("tb_work", ds, "test"), te);  // restore
}
