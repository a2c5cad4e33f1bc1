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
// Command-line front end: dataset generation, training, evaluation,
// quantization sweeps and report emission.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "cef/bench.hpp"
#include "cef/train.hpp"

namespace fs = std::filesystem;
using namespace cef;

namespace {

struct CommonOpts {
    std::string scenario = "indoor";
    std::string preset_file;
    int pilots = 32;
    int cr = 4;
    int subcarriers = chanmodel::kDefaultSubcarriers;
    int nt = chanmodel::kDefaultAntennas;
    int k = 32;
    int depth = 16;
    std::string snr_policy = "multi";
    uint64_t seed = 1;
    int64_t n_train = 10000, n_val = 3000, n_test = 2000;
    bool paper_scale = false;
    std::string work_dir = "work";

    void add_to(CLI::App *cmd) {
        cmd->add_option("--scenario", scenario, "indoor or outdoor")
            ->check(CLI::IsMember({"indoor", "outdoor"}));
        cmd->add_option("--preset-file", preset_file,
                        "scenario preset file (flat key=value), overrides --scenario");
        cmd->add_option("-P,--pilots", pilots, "number of pilot subcarriers");
        cmd->add_option("--cr", cr, "compression ratio (M = 2*K*Nt/CR)");
        cmd->add_option("--subcarriers", subcarriers, "OFDM subcarriers (K~)");
        cmd->add_option("--nt", nt, "transmit antennas");
        cmd->add_option("-K,--taps", k, "retained delay rows");
        cmd->add_option("-L,--depth", depth, "decoder conv depth");
        cmd->add_option("--snr-policy", snr_policy, "multi or single:<dB>");
        cmd->add_option("--seed", seed, "dataset/train seed");
        cmd->add_option("--n-train", n_train, "training samples");
        cmd->add_option("--n-val", n_val, "validation samples");
        cmd->add_option("--n-test", n_test, "test samples");
        cmd->add_flag("--paper-scale", paper_scale, "use the 100k/30k/20k split sizes");
        cmd->add_option("-w,--work-dir", work_dir, "artifact directory");
    }

    bench::ExperimentConfig experiment(const std::string &variant, int bits = 0) const {
        bench::ExperimentConfig cfg;
        cfg.scenario = chanmodel::scenario_from_string(scenario);
        cfg.P = pilots;
        cfg.CR = cr;
        cfg.variant = variant;
        cfg.B = bits;
        cfg.snr_policy = snr_policy;
        cfg.seed = seed;
        cfg.n_train = paper_scale ? 100000 : n_train;
        cfg.n_val = paper_scale ? 30000 : n_val;
        cfg.n_test = paper_scale ? 20000 : n_test;
        cfg.K = k;
        cfg.Nt = nt;
        cfg.L = depth;
        cfg.num_subcarriers = subcarriers;
        cfg.work_dir = work_dir;
        return cfg;
    }

    train::DatasetSpec dataset() const {
        auto ds = experiment("ls").dataset_spec();
        if (!preset_file.empty()) ds.scenario = chanmodel::load_preset(preset_file);
        return ds;
    }
};

void append_rows(const std::string &work_dir, const std::vector<bench::ReportRow> &rows) {
    fs::create_directories(work_dir);
    std::ofstream f(work_dir + "/report.jsonl", std::ios::app);
    for (const auto &r : rows) f << bench::rows_to_json({r})[0].dump() << "\n";
}

std::vector<bench::ReportRow> load_rows(const std::string &work_dir) {
    std::ifstream f(work_dir + "/report.jsonl");
    if (!f)
        throw MissingArtifact("no report rows at " + work_dir +
                              "/report.jsonl (run `eval` or `quant-sweep` first)");
    std::vector<bench::ReportRow> rows;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        rows.push_back(bench::row_from_json(nlohmann::json::parse(line)));
    }
    return rows;
}

int cmd_gen_data(const CommonOpts &opt) {
    auto ds = opt.dataset();
    fs::create_directories(opt.work_dir);
    std::cerr << "[gen-data] building " << ds.id() << " (" << ds.n_train << "/" << ds.n_val << "/"
              << ds.n_test << ")\n";
    auto paths = train::build_dataset(ds, opt.work_dir);
    std::cout << paths.train << "\n" << paths.val << "\n" << paths.test << "\n";
    return kExitOk;
}

int cmd_train(const CommonOpts &opt, const std::string &variant, const std::string &strategy,
              std::string pretrained_ce, train::TrainConfig tc) {
    auto ds = opt.dataset();
    tc.strategy = strategy;
    auto cfg = opt.experiment(variant == "cf_only"   ? "cf_only_ideal"
                              : variant == "ce_only" ? "ce_subnet"
                                                     : variant);
    auto tr = bench::read_container(bench::dataset_path(opt.work_dir, ds, "train"));
    auto va = bench::read_container(bench::dataset_path(opt.work_dir, ds, "val"));
    const std::string out = bench::model_path(cfg);
    if (tc.log_path.empty())
        tc.log_path = opt.work_dir + "/train_" + fs::path(out).stem().string() + ".jsonl";

    if (variant == "ce_only") {
        auto res = train::train_ce_subnet(tr, va, tc, opt.k, opt.nt);
        nets::save_model(res.model, out);
    } else if (variant == "pfnet") {
        auto res = train::train_pfnet(tr, va, cfg.M(), tc, opt.k, opt.nt, opt.depth);
        nets::save_model(res.model, out);
    } else if (variant == "cf_only") {
        auto res = train::train_cf(tr, va, "target", nets::Variant::kCfOnly, cfg.M(), tc, opt.k,
                                   opt.nt, opt.depth);
        nets::save_model(res.model, out);
    } else if (variant == "cefnet") {
        if (strategy == "two_step") {
            auto res = train::train_two_step(tr, va, cfg.M(), tc, opt.k, opt.nt, opt.depth);
            nets::save_model(res.cefnet, out);
        } else {
            if (pretrained_ce.empty()) {
                auto ce_cfg = opt.experiment("ce_subnet");
                pretrained_ce = bench::model_path(ce_cfg);
            }
            auto ce = nets::load_model<float>(pretrained_ce);
            auto res = train::train_end_to_end_frozen_ce(tr, va, ce, cfg.M(), tc, opt.k, opt.nt,
                                                         opt.depth);
            nets::save_model(res.model, out);
        }
    } else {
        throw ConfigError("trainable variants: cefnet, pfnet, cf_only, ce_only");
    }
    std::cout << out << "\n";
    return kExitOk;
}

int cmd_eval(const CommonOpts &opt, const std::string &variant, int bits,
             const std::string &model_override) {
    auto cfg = opt.experiment(variant, bits);
    cfg.model_path_override = model_override;
    auto rows = bench::run_experiment(cfg);
    append_rows(opt.work_dir, rows);
    std::cout << bench::emit_table(rows);
    return kExitOk;
}

int cmd_quant_sweep(const CommonOpts &opt, const std::string &variant, std::vector<int> bits,
                    const std::string &model_override) {
    std::vector<bench::ReportRow> all;
    auto unq = opt.experiment(variant, 0);
    unq.model_path_override = model_override;
    for (auto &r : bench::run_experiment(unq)) all.push_back(r);
    for (int b : bits) {
        auto cfg = opt.experiment(variant, b);
        cfg.model_path_override = model_override;
        for (auto &r : bench::run_experiment(cfg)) all.push_back(r);
    }
    append_rows(opt.work_dir, all);
    std::cout << bench::emit_table(all);
    return kExitOk;
}

int cmd_report(const CommonOpts &opt, const std::string &out_prefix, bool plot) {
    auto rows = load_rows(opt.work_dir);
    if (rows.empty()) throw MissingArtifact("report log is empty");
    bench::check_dataset_consistency(rows);
    std::string tsv = bench::emit_table(rows);
    std::ofstream(out_prefix + ".tsv") << tsv;
    std::ofstream(out_prefix + ".json") << bench::rows_to_json(rows).dump(2) << "\n";
    std::cout << tsv;
    if (plot) {
        std::ofstream(out_prefix + ".svg") << bench::emit_plot(rows);
        std::cerr << "[report] wrote " << out_prefix << ".svg\n";
    }
    std::cerr << "[report] wrote " << out_prefix << ".tsv and " << out_prefix << ".json\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"cefkit: channel estimation, compression and feedback benchmark"};
    app.set_config("--config", "", "read options from a config file");
    app.require_subcommand(1);

    CommonOpts opt;

    auto *gen = app.add_subcommand("gen-data", "generate dataset containers");
    opt.add_to(gen);

    auto *trn = app.add_subcommand("train", "train a model on a generated dataset");
    opt.add_to(trn);
    std::string variant = "cefnet", strategy = "two_step", pretrained_ce, model_override;
    train::TrainConfig tc;
    trn->add_option("--variant", variant, "cefnet | pfnet | cf_only | ce_only")
        ->check(CLI::IsMember({"cefnet", "pfnet", "cf_only", "ce_only"}));
    trn->add_option("--strategy", strategy, "two_step | end_to_end_frozen_ce")
        ->check(CLI::IsMember({"two_step", "end_to_end_frozen_ce"}));
    trn->add_option("--pretrained-ce", pretrained_ce, "pretrained estimation subnet model file");
    trn->add_option("--epochs", tc.max_epochs, "maximum training epochs");
    trn->add_option("--batch-size", tc.batch_size, "SGD batch size");
    trn->add_option("--lr", tc.lr_init, "initial Adam learning rate");
    trn->add_option("--plateau-patience", tc.plateau_patience, "epochs before lr halving");
    trn->add_option("--early-stop-patience", tc.early_stop_patience, "epochs before stopping");
    trn->add_option("--val-subset", tc.val_subset, "cap validation samples per epoch (0 = all)");
    trn->add_flag("--verbose", tc.verbose, "per-epoch progress on stderr");

    auto *ev = app.add_subcommand("eval", "evaluate a variant on the test split");
    opt.add_to(ev);
    std::string ev_variant = "ls";
    int ev_bits = 0;
    ev->add_option("--variant", ev_variant,
                   "cefnet | pfnet | cf_only_ideal | ce_subnet | ls | lmmse | lasso");
    ev->add_option("-B,--bits", ev_bits, "quantization bits (0 = none)");
    ev->add_option("--model", model_override, "evaluate a specific model file");

    auto *qs = app.add_subcommand("quant-sweep", "unquantized + quantized rows over bit widths");
    opt.add_to(qs);
    std::string qs_variant = "cefnet";
    std::vector<int> qs_bits{3, 4, 5};
    qs->add_option("--variant", qs_variant, "codeword-producing variant");
    qs->add_option("--bits", qs_bits, "bit widths to sweep")->delimiter(',');
    qs->add_option("--model", model_override, "evaluate a specific model file");

    auto *rp = app.add_subcommand("report", "aggregate logged rows into tables and a plot");
    opt.add_to(rp);
    std::string out_prefix = "report";
    bool plot = false;
    rp->add_option("--out", out_prefix, "output file prefix");
    rp->add_flag("--plot", plot, "emit the NMSE-vs-SNR SVG plot");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen_data(opt);
        if (trn->parsed()) {
            tc.seed = opt.seed;
            return cmd_train(opt, variant, strategy, pretrained_ce, tc);
        }
        if (ev->parsed()) return cmd_eval(opt, ev_variant, ev_bits, model_override);
        if (qs->parsed()) return cmd_quant_sweep(opt, qs_variant, qs_bits, model_override);
        if (rp->parsed()) return cmd_report(opt, out_prefix, plot);
    } catch (const ConfigError &e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const MissingArtifact &e) {
        std::cerr << "missing artifact: " << e.what() << "\n";
        return kExitMissingArtifact;
    } catch (const DivergenceError &e) {
        std::cerr << "training diverged: " << e.what() << "\n";
        return kExitDiverged;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}
