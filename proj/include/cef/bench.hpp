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

#ifndef CEF_BENCH_HPP
#define CEF_BENCH_HPP

#include <chrono>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cef/container.hpp"
#include "cef/csbaseline.hpp"
#include "cef/estimate.hpp"
#include "cef/quant.hpp"
#include "cef/train.hpp"

namespace cef::bench {

inline const std::vector<std::string> kVariants = {
    "cefnet", "pfnet", "cf_only_ideal", "ce_subnet", "ls", "lmmse", "lasso"};

struct ExperimentConfig {
    chanmodel::Scenario scenario = chanmodel::Scenario::kIndoor;
    int P = 32;
    int CR = 4;
    std::string variant = "cefnet";
    int B = 0;  // quantization bits per component; 0 = unquantized
    std::string snr_policy = "multi";  // "multi" or "single:<dB>"
    uint64_t seed = 1;
    int64_t n_train = 10000;
    int64_t n_val = 3000;
    int64_t n_test = 2000;
    int K = 32;
    int Nt = 32;
    int L = 16;
    int num_subcarriers = chanmodel::kDefaultSubcarriers;
    std::string work_dir = "work";
    std::string model_path_override;  // evaluate a specific model artifact

    int M() const { return 2 * K * Nt / CR; }

    bool produces_codewords() const {
        return variant == "cefnet" || variant == "pfnet" || variant == "cf_only_ideal";
    }

    void validate() const {
        bool known = false;
        for (const auto &v : kVariants) known |= (v == variant);
        if (!known) throw ConfigError("unknown experiment variant '" + variant + "'");
        if (CR < 1 || (2 * K * Nt) % CR != 0)
            throw ConfigError("CR must divide 2*K*Nt=" + std::to_string(2 * K * Nt));
        if (B != 0 && B < 2) throw ConfigError("quantization bits must be >= 2");
        if (B != 0 && !produces_codewords())
            throw ConfigError("quantization applies only to codeword-producing variants");
        if (snr_policy != "multi" && snr_policy.rfind("single:", 0) != 0)
            throw ConfigError("snr policy must be 'multi' or 'single:<dB>'");
    }

    train::DatasetSpec dataset_spec() const {
        if (snr_policy != "multi" && snr_policy.rfind("single:", 0) != 0)
            throw ConfigError("snr policy must be 'multi' or 'single:<dB>'");
        train::DatasetSpec d;
        d.scenario = chanmodel::ScenarioPreset::by_name(scenario);
        d.P = P;
        d.num_subcarriers = num_subcarriers;
        d.Nt = Nt;
        d.K = K;
        d.n_train = n_train;
        d.n_val = n_val;
        d.n_test = n_test;
        d.seed = seed;
        if (snr_policy.rfind("single:", 0) == 0) {
            d.snr_levels_db = {std::stod(snr_policy.substr(7))};
            d.proportions = {1};
        }
        return d;
    }

    nlohmann::json to_json() const {
        return {{"scenario", chanmodel::to_string(scenario)},
                {"P", P},
                {"CR", CR},
                {"variant", variant},
                {"B", B},
                {"snr_policy", snr_policy},
                {"seed", seed},
                {"n_train", n_train},
                {"n_val", n_val},
                {"n_test", n_test},
                {"K", K},
                {"Nt", Nt},
                {"L", L}};
    }

    uint64_t hash() const { return fnv1a(to_json().dump()); }
};

struct ReportRow {
    std::string variant;
    std::string scenario;
    int P = 0;
    int CR = 0;
    int M = 0;
    int B = 0;
    std::string snr = "all";  // "all" or a dB value
    double nmse_db = 0.0;
    int64_t n_samples = 0;
    double wall_time_s = 0.0;
    std::string dataset_id;
    std::string dataset_hash;
    std::string provenance;
};

// ---- artifact naming ----

inline std::string dataset_path(const std::string &work_dir, const train::DatasetSpec &ds,
                                const std::string &split) {
    return work_dir + "/" + ds.id() + "_" + split + ".cefd";
}

inline std::string model_variant_for(const std::string &experiment_variant) {
    if (experiment_variant == "cefnet") return "cefnet";
    if (experiment_variant == "pfnet") return "pfnet";
    if (experiment_variant == "cf_only_ideal") return "cf_only";
    if (experiment_variant == "ce_subnet") return "ce_only";
    throw ConfigError("variant '" + experiment_variant + "' has no model artifact");
}

inline std::string model_path(const ExperimentConfig &cfg) {
    if (!cfg.model_path_override.empty()) return cfg.model_path_override;
    std::string mv = model_variant_for(cfg.variant);
    std::string name = mv == "ce_only" ? mv : mv + "_M" + std::to_string(cfg.M());
    return cfg.work_dir + "/model_" + name + "_" + cfg.dataset_spec().id() + ".cefm";
}

// ---- experiment execution ----

namespace detail {

inline std::string fmt_db(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

/// Aggregate row plus one row per SNR level present in the test set.
inline std::vector<ReportRow> rows_from_predictions(const ExperimentConfig &cfg,
                                                    const Container &test,
                                                    const std::vector<float> &pred,
                                                    const std::string &provenance,
                                                    double wall_time_s) {
    const TensorEntry &target = test.get("target");
    const TensorEntry &snrs = test.get("snr_db");
    const int64_t n = target.shape[0];
    const int64_t per = target.count() / n;

    ReportRow base;
    base.variant = cfg.variant;
    base.scenario = chanmodel::to_string(cfg.scenario);
    base.P = cfg.P;
    base.CR = cfg.CR;
    base.M = cfg.produces_codewords() ? cfg.M() : 0;
    base.B = cfg.B;
    base.dataset_id = test.meta.at("id").get<std::string>();
    base.dataset_hash = test.meta.at("spec_hash").get<std::string>();
    base.provenance = provenance;
    base.wall_time_s = wall_time_s;

    std::vector<ReportRow> rows;
    auto r = xform::nmse_flat(target.data.data(), pred.data(), per, n);
    base.snr = "all";
    base.nmse_db = r.nmse_db;
    base.n_samples = r.n_samples;
    rows.push_back(base);

    std::set<float> levels(snrs.data.begin(), snrs.data.end());
    if (levels.size() > 1) {
        for (float lv : levels) {
            std::vector<float> t_sub, p_sub;
            for (int64_t i = 0; i < n; ++i) {
                if (snrs.data[i] != lv) continue;
                t_sub.insert(t_sub.end(), target.data.begin() + i * per,
                             target.data.begin() + (i + 1) * per);
                p_sub.insert(p_sub.end(), pred.begin() + i * per, pred.begin() + (i + 1) * per);
            }
            auto rs = xform::nmse_flat(t_sub.data(), p_sub.data(), per,
                                       static_cast<int64_t>(t_sub.size() / per));
            ReportRow row = base;
            row.snr = fmt_db(lv);
            row.nmse_db = rs.nmse_db;
            row.n_samples = rs.n_samples;
            row.wall_time_s = 0.0;  // accounted once in the aggregate row
            rows.push_back(row);
        }
    } else if (levels.size() == 1) {
        rows.front().snr = fmt_db(*levels.begin());
    }
    return rows;
}

/// LMMSE needs full-grid channels; the container stores only truncated
/// planes, so the deterministic generator is replayed for the covariance fit
/// (training range) and the test range.
inline std::vector<float> lmmse_predictions(const ExperimentConfig &cfg, const Container &test) {
    train::DatasetSpec ds = cfg.dataset_spec();
    const auto grid = chanmodel::make_pilot_grid(ds.P, ds.num_subcarriers, ds.Nt);

    const int64_t fit_n = std::min<int64_t>(ds.n_train, 1000);
    std::vector<Eigen::MatrixXcd> fit;
    fit.reserve(fit_n);
    for (int64_t i = 0; i < fit_n; ++i) {
        uint64_t s = ds.seed ^ static_cast<uint64_t>(i);
        fit.push_back(chanmodel::generate_channel(ds.scenario, s, ds.num_subcarriers, ds.Nt).h_fs);
    }
    Eigen::MatrixXcd R = estimate::fit_frequency_covariance(fit);
    fit.clear();

    const TensorEntry &snrs = test.get("snr_db");
    const int64_t n = snrs.shape[0];
    const int64_t offset = ds.n_train + ds.n_val;
    const int64_t per = int64_t(2) * ds.K * ds.Nt;
    std::vector<float> pred;
    pred.reserve(n * per);
    std::map<double, estimate::LmmseConfig> by_noise;
    for (int64_t i = 0; i < n; ++i) {
        uint64_t s = ds.seed ^ static_cast<uint64_t>(offset + i);
        auto ch = chanmodel::generate_channel(ds.scenario, s, ds.num_subcarriers, ds.Nt);
        auto rx = chanmodel::synthesize_received_pilots(ch, grid, snrs.data[i], s);
        auto it = by_noise.find(rx.noise_var);
        if (it == by_noise.end())
            it = by_noise.emplace(rx.noise_var, estimate::make_lmmse_config(R, rx.noise_var)).first;
        auto h_full = estimate::lmmse_estimate(rx, grid, it->second);
        auto planes = xform::truncate(xform::to_angle_delay(h_full), ds.K).planes;
        for (double v : planes) pred.push_back(static_cast<float>(v));
    }
    return pred;
}

inline std::vector<float> lasso_predictions(const ExperimentConfig &cfg, const Container &test,
                                            const Container &val, double *lambda_out) {
    const TensorEntry &target = test.get("target");
    const int64_t n = target.shape[0];
    const int64_t per = target.count() / n;

    csbaseline::LassoConfig lcfg;
    lcfg.A = csbaseline::make_sensing_matrix(cfg.M(), static_cast<int>(per),
                                             0x4C4153u /* shared across runs */);
    lcfg.ensure_lipschitz();

    const TensorEntry &vt = val.get("target");
    const int64_t vn = std::min<int64_t>(vt.shape[0], 64);
    std::vector<Eigen::VectorXd> vsel(vn);
    for (int64_t i = 0; i < vn; ++i)
        vsel[i] = Eigen::Map<const Eigen::VectorXf>(vt.data.data() + i * per, per).cast<double>();
    lcfg.lambda = csbaseline::select_lambda(vsel, lcfg);
    if (lambda_out) *lambda_out = lcfg.lambda;

    std::vector<float> pred(n * per);
    for (int64_t i = 0; i < n; ++i) {
        Eigen::VectorXd x =
            Eigen::Map<const Eigen::VectorXf>(target.data.data() + i * per, per).cast<double>();
        Eigen::VectorXd s = lcfg.A * x;
        auto res = csbaseline::lasso_reconstruct(s, lcfg);
        Eigen::Map<Eigen::VectorXf>(pred.data() + i * per, per) = res.x.cast<float>();
    }
    return pred;
}

/// Model predictions on the physical scale, optionally with the mu-law
/// quantizer in the feedback path (mu fitted on validation codewords).
inline std::vector<float> model_predictions(const ExperimentConfig &cfg, const Container &test,
                                            const Container *val, std::string *provenance) {
    nets::Model<float> model = nets::load_model<float>(model_path(cfg));
    if (provenance)
        *provenance = model.prov.strategy + "@" + model.prov.dataset_id + "#s" +
                      std::to_string(model.prov.seed);
    std::string input_name = cfg.variant == "cefnet"          ? "input_ce"
                             : cfg.variant == "pfnet"         ? "input_pf"
                             : cfg.variant == "cf_only_ideal" ? "target"
                                                              : "input_ce";  // ce_subnet
    Tensor<float> inputs = train::normalized_tensor(test, input_name, model.norm);
    Tensor<float> out;
    if (cfg.B == 0 || cfg.variant == "ce_subnet") {
        out = train::forward_eval(model, inputs);
    } else {
        if (!val) throw MissingArtifact("quantized evaluation needs the validation split");
        // fit mu on validation codewords
        Tensor<float> vin = train::normalized_tensor(*val, input_name, model.norm);
        const int64_t vn = std::min<int64_t>(vin.dim(0), 1000);
        Tensor<float> vsub = vin;
        vsub.shape[0] = vn;
        vsub.v.resize(vn * (vin.size() / vin.dim(0)));
        Tensor<float> vcodes = model.encode(vsub, false);
        std::vector<std::vector<float>> sample_codes(vn);
        const int64_t m = vcodes.dim(1);
        for (int64_t i = 0; i < vn; ++i)
            sample_codes[i].assign(vcodes.data() + i * m, vcodes.data() + (i + 1) * m);
        double mu = quant::select_mu(sample_codes, cfg.B);
        quant::QuantizerConfig qcfg{cfg.B, mu};

        Tensor<float> codes = model.encode(inputs, false);
        const int64_t tn = codes.dim(0);
        for (int64_t i = 0; i < tn; ++i) {
            std::vector<float> cw(codes.data() + i * m, codes.data() + (i + 1) * m);
            auto bs = quant::quantize(cw, qcfg);
            auto rec = quant::dequantize(bs);
            std::copy(rec.begin(), rec.end(), codes.data() + i * m);
        }
        out = model.decode(codes, false);
        if (provenance) *provenance += "+Q(mu=" + detail::fmt_db(mu) + ")";
    }
    for (auto &v : out.v) v = static_cast<float>(model.norm.denormalize(v));
    return std::vector<float>(out.v.begin(), out.v.end());
}

}  // namespace detail

/// Run one experiment configuration against its test split. Returns the
/// aggregate row first, then per-SNR rows when the test set mixes SNRs.
inline std::vector<ReportRow> run_experiment(const ExperimentConfig &cfg) {
    cfg.validate();
    auto t0 = std::chrono::steady_clock::now();
    train::DatasetSpec ds = cfg.dataset_spec();

    Container test = read_container(dataset_path(cfg.work_dir, ds, "test"));
    if (test.meta.at("spec_hash").get<std::string>() != hex64(ds.hash()))
        throw MissingArtifact("dataset on disk does not match the requested configuration; "
                              "regenerate it with `gen-data`");

    std::vector<float> pred;
    std::string provenance = "deterministic";
    if (cfg.variant == "ls") {
        const TensorEntry &e = test.get("input_ce");
        pred = e.data;
        provenance = "ls+" + estimate::to_string(ds.interp);
    } else if (cfg.variant == "lmmse") {
        pred = detail::lmmse_predictions(cfg, test);
        provenance = "lmmse_wiener";
    } else if (cfg.variant == "lasso") {
        Container val = read_container(dataset_path(cfg.work_dir, ds, "val"));
        double lambda = 0;
        pred = detail::lasso_predictions(cfg, test, val, &lambda);
        provenance = "fista_lambda=" + detail::fmt_db(lambda);
    } else {
        if (cfg.B > 0) {
            Container val = read_container(dataset_path(cfg.work_dir, ds, "val"));
            pred = detail::model_predictions(cfg, test, &val, &provenance);
        } else {
            pred = detail::model_predictions(cfg, test, nullptr, &provenance);
        }
    }

    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return detail::rows_from_predictions(cfg, test, pred, provenance, wall);
}

// ---- tables ----

inline const char *kTableHeader =
    "variant\tscenario\tP\tCR\tM\tB\tsnr\tnmse_db\tn_samples\twall_time_s\tdataset_id\tdataset_"
    "hash\tprovenance";

inline std::string emit_table(const std::vector<ReportRow> &rows) {
    if (rows.empty()) throw ConfigError("emit_table: no rows");
    std::ostringstream os;
    os << kTableHeader << "\n";
    char buf[64];
    for (const auto &r : rows) {
        os << r.variant << '\t' << r.scenario << '\t' << r.P << '\t' << r.CR << '\t' << r.M << '\t'
           << r.B << '\t' << r.snr << '\t';
        std::snprintf(buf, sizeof(buf), "%.6f", r.nmse_db);
        os << buf << '\t' << r.n_samples << '\t';
        std::snprintf(buf, sizeof(buf), "%.3f", r.wall_time_s);
        os << buf << '\t' << r.dataset_id << '\t' << r.dataset_hash << '\t' << r.provenance
           << "\n";
    }
    return os.str();
}

inline std::vector<ReportRow> parse_table(const std::string &text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line) || line != kTableHeader)
        throw std::runtime_error("bad table header");
    std::vector<ReportRow> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::istringstream ls(line);
        std::string tok;
        while (std::getline(ls, tok, '\t')) f.push_back(tok);
        if (f.size() != 13) throw std::runtime_error("bad table row: " + line);
        ReportRow r;
        r.variant = f[0];
        r.scenario = f[1];
        r.P = std::stoi(f[2]);
        r.CR = std::stoi(f[3]);
        r.M = std::stoi(f[4]);
        r.B = std::stoi(f[5]);
        r.snr = f[6];
        r.nmse_db = std::stod(f[7]);
        r.n_samples = std::stoll(f[8]);
        r.wall_time_s = std::stod(f[9]);
        r.dataset_id = f[10];
        r.dataset_hash = f[11];
        r.provenance = f[12];
        rows.push_back(std::move(r));
    }
    return rows;
}

inline nlohmann::json rows_to_json(const std::vector<ReportRow> &rows) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto &r : rows)
        j.push_back({{"variant", r.variant},
                     {"scenario", r.scenario},
                     {"P", r.P},
                     {"CR", r.CR},
                     {"M", r.M},
                     {"B", r.B},
                     {"snr", r.snr},
                     {"nmse_db", r.nmse_db},
                     {"n_samples", r.n_samples},
                     {"wall_time_s", r.wall_time_s},
                     {"dataset_id", r.dataset_id},
                     {"dataset_hash", r.dataset_hash},
                     {"provenance", r.provenance}});
    return j;
}

inline ReportRow row_from_json(const nlohmann::json &j) {
    ReportRow r;
    r.variant = j.at("variant").get<std::string>();
    r.scenario = j.at("scenario").get<std::string>();
    r.P = j.at("P").get<int>();
    r.CR = j.at("CR").get<int>();
    r.M = j.at("M").get<int>();
    r.B = j.at("B").get<int>();
    r.snr = j.at("snr").get<std::string>();
    r.nmse_db = j.at("nmse_db").get<double>();
    r.n_samples = j.at("n_samples").get<int64_t>();
    r.wall_time_s = j.at("wall_time_s").get<double>();
    r.dataset_id = j.at("dataset_id").get<std::string>();
    r.dataset_hash = j.at("dataset_hash").get<std::string>();
    r.provenance = j.at("provenance").get<std::string>();
    return r;
}

/// A dataset id must map to exactly one hash across all rows being reported.
inline void check_dataset_consistency(const std::vector<ReportRow> &rows) {
    std::map<std::string, std::string> seen;
    for (const auto &r : rows) {
        auto it = seen.find(r.dataset_id);
        if (it == seen.end())
            seen.emplace(r.dataset_id, r.dataset_hash);
        else if (it->second != r.dataset_hash)
            throw ConfigError("report mixes rows from mismatched builds of dataset '" +
                              r.dataset_id + "' (" + it->second + " vs " + r.dataset_hash + ")");
    }
}

// ---- NMSE-vs-SNR plot (SVG) ----

inline std::string emit_plot(const std::vector<ReportRow> &rows) {
    std::vector<ReportRow> pts;
    for (const auto &r : rows)
        if (r.snr != "all") pts.push_back(r);
    if (pts.empty()) throw ConfigError("emit_plot: no per-SNR rows");

    std::set<double> xs;
    double ymin = 1e9, ymax = -1e9;
    std::map<std::string, std::vector<std::pair<double, double>>> series;
    for (const auto &r : pts) {
        double x = std::stod(r.snr);
        xs.insert(x);
        ymin = std::min(ymin, r.nmse_db);
        ymax = std::max(ymax, r.nmse_db);
        series[r.variant + " P" + std::to_string(r.P)].push_back({x, r.nmse_db});
    }
    if (ymax == ymin) {
        ymax += 1;
        ymin -= 1;
    }
    double pad = 0.05 * (ymax - ymin);
    ymin -= pad;
    ymax += pad;

    const int w = 720, h = 480, ml = 70, mr = 190, mt = 30, mb = 55;
    const double x0 = *xs.begin(), x1 = *xs.rbegin();
    auto px = [&](double x) {
        return ml + (x1 > x0 ? (x - x0) / (x1 - x0) : 0.5) * (w - ml - mr);
    };
    auto py = [&](double y) { return mt + (ymax - y) / (ymax - ymin) * (h - mt - mb); };

    static const char *palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
    std::ostringstream os;
    os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h << "'>\n";
    os << "<rect width='" << w << "' height='" << h << "' fill='white'/>\n";
    // axes
    os << "<line x1='" << ml << "' y1='" << h - mb << "' x2='" << w - mr << "' y2='" << h - mb
       << "' stroke='black'/>\n";
    os << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << h - mb
       << "' stroke='black'/>\n";
    for (double x : xs) {
        os << "<line x1='" << px(x) << "' y1='" << h - mb << "' x2='" << px(x) << "' y2='"
           << h - mb + 5 << "' stroke='black'/>\n";
        os << "<text x='" << px(x) << "' y='" << h - mb + 20
           << "' text-anchor='middle' font-size='12'>" << detail::fmt_db(x) << "</text>\n";
    }
    for (int i = 0; i <= 5; ++i) {
        double y = ymin + i * (ymax - ymin) / 5;
        os << "<line x1='" << ml - 5 << "' y1='" << py(y) << "' x2='" << ml << "' y2='" << py(y)
           << "' stroke='black'/>\n";
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.1f", y);
        os << "<text x='" << ml - 8 << "' y='" << py(y) + 4
           << "' text-anchor='end' font-size='12'>" << buf << "</text>\n";
    }
    os << "<text x='" << (ml + w - mr) / 2 << "' y='" << h - 12
       << "' text-anchor='middle' font-size='13'>SNR (dB)</text>\n";
    os << "<text x='18' y='" << (mt + h - mb) / 2
       << "' text-anchor='middle' font-size='13' transform='rotate(-90 18 "
       << (mt + h - mb) / 2 << ")'>NMSE (dB)</text>\n";

    int ci = 0, ly = mt + 10;
    for (auto &[label, data] : series) {
        std::sort(data.begin(), data.end());
        const char *color = palette[ci % 8];
        os << "<polyline fill='none' stroke='" << color << "' stroke-width='1.5' points='";
        for (auto &[x, y] : data) os << px(x) << "," << py(y) << " ";
        os << "'/>\n";
        for (auto &[x, y] : data)
            os << "<circle cx='" << px(x) << "' cy='" << py(y) << "' r='3' fill='" << color
               << "'/>\n";
        os << "<line x1='" << w - mr + 10 << "' y1='" << ly << "' x2='" << w - mr + 34 << "' y2='"
           << ly << "' stroke='" << color << "' stroke-width='2'/>\n";
        os << "<text x='" << w - mr + 40 << "' y='" << ly + 4 << "' font-size='12'>" << label
           << "</text>\n";
        ly += 20;
        ++ci;
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace cef::bench

#endif  // CEF_BENCH_HPP
