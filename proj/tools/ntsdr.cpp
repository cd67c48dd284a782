// ntsdr — nonlinear sufficient dimension reduction for matrix predictors.
// Subcommands: simulate | fit | predict | tune | bench.
// Exit codes: 0 ok, 1 filesystem trouble, 2 bad arguments or configs,
// 3 estimator failures (degenerate data, singular systems, tuning dead ends).

#include "ntsdr/io.hpp"
#include "ntsdr/errors.hpp"
#include "ntsdr/threading.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace {

using namespace ntsdr;
using nlohmann::json;

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double guarded_log1p(double s) { return std::log1p(s < -1.0 + 1e-6 ? -1.0 + 1e-6 : s); }

Vector to_vec(const std::vector<double>& v) {
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

json reg_json(const RegularizationParams& reg) {
    return json{{"eta_u", reg.eta_u}, {"eta_v", reg.eta_v}, {"eps_u", reg.eps_u},
                {"eps_v", reg.eps_v}};
}

// ---- simulate ----------------------------------------------------------

struct SimulateArgs {
    std::string config, out_dir, storage = "bin";
};

int cmd_simulate(const SimulateArgs& a) {
    SimConfig cfg = parse_sim_config_file(a.config);
    std::vector<Matrix> xs = gen_predictors(cfg, 0);
    ResponseSet resp = gen_response(cfg, xs, 0);

    SampleSet train;
    train.X.assign(xs.begin(), xs.begin() + cfg.n);
    train.y.assign(resp.y.begin(), resp.y.begin() + cfg.n);
    write_dataset(a.out_dir, train, a.storage);

    json report{{"dir", a.out_dir},
                {"setting", setting_name(cfg.setting)},
                {"design", design_name(cfg.design)},
                {"n", cfg.n},
                {"p", cfg.p},
                {"q", cfg.q},
                {"sigma2", resp.sigma2},
                {"guard_clips", resp.guard_clips},
                {"storage", a.storage}};
    std::cout << report.dump(2) << "\n";
    return 0;
}

// ---- fit / tune --------------------------------------------------------

struct FitArgs {
    std::string data_dir, out, method;
    Eigen::Index s = 1, t = 1, d = 1;
    bool tune = false;
    RegularizationParams reg;
    std::vector<double> eta_grid, eps_grid;
    double rho_u = 1.0, rho_v = 1.0, rho_y = 1.0;
    unsigned long long seed = 1;
    std::string link = "none";
    bool krr = false;
    double krr_rho = 1.0, krr_eps = 1e-3;
};

TuningGrid make_grid(const FitArgs& a) {
    TuningGrid grid;
    if (!a.eta_grid.empty()) grid.eta_grid = a.eta_grid;
    if (!a.eps_grid.empty()) grid.eps_grid = a.eps_grid;
    return grid;
}

FitOptions make_opts(const FitArgs& a) {
    FitOptions opts;
    opts.reg = a.reg;
    opts.rho_u = a.rho_u;
    opts.rho_v = a.rho_v;
    opts.rho_y = a.rho_y;
    opts.init_seed = a.seed;
    return opts;
}

// Sufficient predictors of already-fitted models as one dim x n block,
// computed through the same out-of-sample path predict uses.
Matrix predictor_block(const StoredModel& sm, const std::vector<Matrix>& xs) {
    if (sm.method == "tucker") {
        const Eigen::Index s = sm.tucker.s, t = sm.tucker.t;
        std::vector<Matrix> preds = evaluate_tucker(sm.tucker, xs);
        Matrix z(s * t, static_cast<Eigen::Index>(preds.size()));
        for (std::size_t b = 0; b < preds.size(); ++b)
            for (Eigen::Index k = 0; k < s; ++k)
                for (Eigen::Index l = 0; l < t; ++l)
                    z(k * t + l, static_cast<Eigen::Index>(b)) = preds[b](k, l);
        return z;
    }
    if (sm.method == "cp") return evaluate_cp(sm.cp, xs).transpose();
    return evaluate_gsir(sm.gsir, xs).transpose();
}

int cmd_fit(const FitArgs& a) {
    SampleSet data = read_dataset(a.data_dir);
    Timer timer;

    StoredModel sm;
    sm.method = a.method;
    sm.link = a.link;
    json report{{"method", a.method}, {"seed", a.seed}, {"data_dir", a.data_dir}};

    if (a.method == "gsir") {
        if (a.tune) throw InvalidArgument("fit: --tune supports tucker and cp only");
        sm.gsir = fit_gsir(data, a.d, a.rho_u, a.rho_y, a.reg.eps_u);
        report["d"] = a.d;
        report["eps"] = a.reg.eps_u;
        report["rho"] = json{{"x", a.rho_u}, {"y", a.rho_y}};
        report["objective_trace"] =
            std::vector<double>(sm.gsir.eigenvalues.data(),
                                sm.gsir.eigenvalues.data() + sm.gsir.eigenvalues.size());
    } else {
        SvdFeatureSet features = extract_features(data);
        GramSet gram = build_grams_auto(features, data.y, a.rho_u, a.rho_v, a.rho_y);
        report["rho"] = json{{"u", a.rho_u}, {"v", a.rho_v}, {"y", a.rho_y}};
        report["rank"] = features.r;

        if (a.method == "tucker") {
            report["s"] = a.s;
            report["t"] = a.t;
            TuckerModel model;
            if (a.tune) {
                TuckerTuning tuned = tune_tucker(features, gram, a.s, a.t, make_grid(a),
                                                 make_opts(a));
                model = tuned.model;
                report["tuning"] = json{{"eta_score", tuned.report.eta_score},
                                        {"eps_score", tuned.report.eps_score},
                                        {"eta_evaluations", tuned.report.eta_evaluations},
                                        {"eps_evaluations", tuned.report.eps_evaluations}};
            } else {
                model = fit_tucker_prepared(features, gram, a.s, a.t, make_opts(a));
            }
            model.rho_u = a.rho_u;
            model.rho_v = a.rho_v;
            model.rho_y = a.rho_y;
            report["reg"] = reg_json(model.reg);
            report["objective_trace"] = model.objective_trace;
            report["iterations"] = model.iterations;
            report["converged"] = model.converged;
            sm.tucker = model;
        } else {
            report["d"] = a.d;
            CpModel model;
            if (a.tune) {
                CpTuning tuned = tune_cp(features, gram, a.d, make_grid(a), make_opts(a));
                model = tuned.model;
                report["tuning"] = json{{"eta_score", tuned.report.eta_score},
                                        {"eps_score", tuned.report.eps_score},
                                        {"eta_evaluations", tuned.report.eta_evaluations},
                                        {"eps_evaluations", tuned.report.eps_evaluations}};
            } else {
                model = fit_cp_prepared(features, gram, a.d, make_opts(a));
            }
            model.rho_u = a.rho_u;
            model.rho_v = a.rho_v;
            model.rho_y = a.rho_y;
            report["reg"] = reg_json(model.reg);
            report["objective_trace"] = model.pair_values;
            report["pairs_kept"] = model.d;
            sm.cp = model;
        }
    }

    if (a.krr) sm.krr = fit_krr(predictor_block(sm, data.X), to_vec(data.y), a.krr_rho,
                                a.krr_eps);

    report["wall_time_sec"] = timer.seconds();
    save_model(a.out, sm);
    report["model"] = a.out;
    std::cout << report.dump(2) << "\n";
    return 0;
}

int cmd_tune(const FitArgs& a) {
    SampleSet data = read_dataset(a.data_dir);
    Timer timer;
    if (a.method != "tucker" && a.method != "cp")
        throw InvalidArgument("tune: method must be tucker or cp");

    SvdFeatureSet features = extract_features(data);
    GramSet gram = build_grams_auto(features, data.y, a.rho_u, a.rho_v, a.rho_y);

    TuningReport rep;
    json dims;
    if (a.method == "tucker") {
        rep = tune_tucker(features, gram, a.s, a.t, make_grid(a), make_opts(a)).report;
        dims = json{{"s", a.s}, {"t", a.t}};
    } else {
        rep = tune_cp(features, gram, a.d, make_grid(a), make_opts(a)).report;
        dims = json{{"d", a.d}};
    }

    json out{{"method", a.method},
             {"dims", dims},
             {"reg", reg_json(rep.reg)},
             {"eta_score", rep.eta_score},
             {"eps_score", rep.eps_score},
             {"eta_evaluations", rep.eta_evaluations},
             {"eps_evaluations", rep.eps_evaluations},
             {"rho", json{{"u", a.rho_u}, {"v", a.rho_v}, {"y", a.rho_y}}},
             {"wall_time_sec", timer.seconds()}};
    std::ofstream f(a.out, std::ios::binary);
    if (!f) throw IoError("cannot write " + a.out);
    f << out.dump(2) << "\n";
    if (!f.flush()) throw IoError("short write to " + a.out);
    std::cout << out.dump(2) << "\n";
    return 0;
}

// ---- predict -----------------------------------------------------------

struct PredictArgs {
    std::string model, data_dir, out;
};

int cmd_predict(const PredictArgs& a) {
    StoredModel sm = load_model(a.model);
    SampleSet data = read_dataset(a.data_dir);

    std::vector<std::string> cols;
    if (sm.method == "tucker") {
        for (Eigen::Index k = 0; k < sm.tucker.s; ++k)
            for (Eigen::Index l = 0; l < sm.tucker.t; ++l)
                cols.push_back("p_" + std::to_string(k + 1) + "_" + std::to_string(l + 1));
    } else if (sm.method == "cp") {
        for (Eigen::Index k = 0; k < sm.cp.d; ++k) cols.push_back("p_" + std::to_string(k + 1));
    } else {
        for (Eigen::Index k = 0; k < sm.gsir.d; ++k) cols.push_back("z_" + std::to_string(k + 1));
    }
    const bool want_yhat = sm.krr.active || sm.link == "log1p";

    std::ofstream f(a.out, std::ios::binary);
    if (!f) throw IoError("cannot write " + a.out);
    for (std::size_t c = 0; c < cols.size(); ++c) f << (c ? "," : "") << cols[c];
    if (want_yhat) f << (cols.empty() ? "" : ",") << "yhat";
    f << "\n";

    if (data.n() > 0) {
        Matrix z = predictor_block(sm, data.X); // dim x n
        Vector yhat;
        if (sm.krr.active) {
            yhat = krr_predict(sm.krr, z);
        } else if (want_yhat) {
            yhat.resize(z.cols());
            for (Eigen::Index b = 0; b < z.cols(); ++b) yhat(b) = guarded_log1p(z.col(b).sum());
        }
        for (Eigen::Index b = 0; b < z.cols(); ++b) {
            for (Eigen::Index c = 0; c < z.rows(); ++c) f << (c ? "," : "") << fmt17(z(c, b));
            if (want_yhat) f << (z.rows() ? "," : "") << fmt17(yhat(b));
            f << "\n";
        }
    }
    if (!f.flush()) throw IoError("short write to " + a.out);
    return 0;
}

// ---- bench -------------------------------------------------------------

struct BenchArgs {
    std::string config, out;
};

int cmd_bench(const BenchArgs& a) {
    std::vector<BenchCell> cells = parse_bench_config_file(a.config);
    std::vector<ResultRow> rows;
    std::size_t dead_cells = 0;

    for (std::size_t c = 0; c < cells.size(); ++c) {
        const SimConfig& cfg = cells[c].cfg;
        std::vector<MethodConfig> methods =
            cells[c].methods.empty() ? default_methods(cfg) : cells[c].methods;
        std::cerr << "[cell " << c + 1 << "/" << cells.size() << "] setting "
                  << setting_name(cfg.setting) << "/" << design_name(cfg.design) << " n="
                  << cfg.n << " p=" << cfg.p << " q=" << cfg.q << " reps=" << cfg.n_reps
                  << " threads=" << thread_count() << "\n";
        bool alive = false;
        try {
            ExperimentResult res = run_experiment(cfg, methods);
            for (const std::string& msg : res.errors) std::cerr << "  failure: " << msg << "\n";
            std::vector<ResultRow> cell_rows = experiment_rows(cfg, res);
            for (const ResultRow& row : cell_rows) {
                if (row.score.n_reps > 0) alive = true;
                rows.push_back(row);
            }
        } catch (const std::exception& e) {
            std::cerr << "  cell failed: " << e.what() << "\n";
        }
        if (!alive) ++dead_cells;
    }

    write_results_csv(a.out, rows);
    if (!cells.empty() && dead_cells == cells.size()) {
        std::cerr << "all cells failed\n";
        return 3;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Nonlinear sufficient dimension reduction for matrix-valued predictors"};
    app.require_subcommand(1);

    SimulateArgs sim;
    CLI::App* c_sim = app.add_subcommand("simulate", "Generate a synthetic dataset directory");
    c_sim->add_option("config", sim.config, "Simulation config JSON")->required();
    c_sim->add_option("out_dir", sim.out_dir, "Output dataset directory")->required();
    c_sim->add_option("--storage", sim.storage, "Payload format")
        ->check(CLI::IsMember({"bin", "csv"}));

    auto add_fit_flags = [](CLI::App* cmd, FitArgs& fa, bool fitting) {
        cmd->add_option("data_dir", fa.data_dir, "Dataset directory")->required();
        cmd->add_option("--method", fa.method, "Estimator")
            ->required()
            ->check(CLI::IsMember(fitting ? std::vector<std::string>{"tucker", "cp", "gsir"}
                                          : std::vector<std::string>{"tucker", "cp"}));
        cmd->add_option("-o,--out", fa.out, "Output file")->required();
        cmd->add_option("--s", fa.s, "Tucker U-side dimension");
        cmd->add_option("--t", fa.t, "Tucker V-side dimension");
        cmd->add_option("--d", fa.d, "CP pairs / GSIR directions");
        cmd->add_option("--rho-u", fa.rho_u, "U-kernel bandwidth multiplier");
        cmd->add_option("--rho-v", fa.rho_v, "V-kernel bandwidth multiplier");
        cmd->add_option("--rho-y", fa.rho_y, "Y-kernel bandwidth multiplier");
        cmd->add_option("--seed", fa.seed, "Initialization seed");
        cmd->add_option("--eta-grid", fa.eta_grid, "Tuning grid for eta")->expected(-1);
        cmd->add_option("--eps-grid", fa.eps_grid, "Tuning grid for eps")->expected(-1);
        if (fitting) {
            CLI::Option* tune = cmd->add_flag("--tune", fa.tune, "Two-stage GCV tuning");
            CLI::Option* eu = cmd->add_option("--eta-u", fa.reg.eta_u, "Regression ridge, U side");
            CLI::Option* ev = cmd->add_option("--eta-v", fa.reg.eta_v, "Regression ridge, V side");
            CLI::Option* pu = cmd->add_option("--eps-u", fa.reg.eps_u, "Update ridge, U side");
            CLI::Option* pv = cmd->add_option("--eps-v", fa.reg.eps_v, "Update ridge, V side");
            tune->excludes(eu)->excludes(ev)->excludes(pu)->excludes(pv);
            cmd->add_option("--link", fa.link, "Response link for yhat")
                ->check(CLI::IsMember({"none", "log1p"}));
            cmd->add_flag("--krr", fa.krr, "Attach post-hoc kernel ridge regressor");
            cmd->add_option("--krr-rho", fa.krr_rho, "KRR bandwidth multiplier");
            cmd->add_option("--krr-eps", fa.krr_eps, "KRR ridge");
        }
    };

    FitArgs fit;
    CLI::App* c_fit = app.add_subcommand("fit", "Fit an estimator and save the model");
    add_fit_flags(c_fit, fit, true);

    FitArgs tune;
    CLI::App* c_tune = app.add_subcommand("tune", "Run the two-stage tuner and save the report");
    add_fit_flags(c_tune, tune, false);

    PredictArgs pred;
    CLI::App* c_pred = app.add_subcommand("predict", "Evaluate a saved model on a dataset");
    c_pred->add_option("model", pred.model, "Model JSON file")->required();
    c_pred->add_option("data_dir", pred.data_dir, "Dataset directory")->required();
    c_pred->add_option("-o,--out", pred.out, "Output CSV")->required();

    BenchArgs bench;
    CLI::App* c_bench = app.add_subcommand("bench", "Run benchmark cells and write results CSV");
    c_bench->add_option("config", bench.config, "Benchmark config JSON")->required();
    c_bench->add_option("-o,--out", bench.out, "Results CSV path")->required();

    try {
        app.parse(argc, argv);
        if (app.got_subcommand(c_sim)) return cmd_simulate(sim);
        if (app.got_subcommand(c_fit)) return cmd_fit(fit);
        if (app.got_subcommand(c_tune)) return cmd_tune(tune);
        if (app.got_subcommand(c_pred)) return cmd_predict(pred);
        return cmd_bench(bench);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return 2;
    } catch (const ntsdr::InvalidArgument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ntsdr::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ntsdr::DegenerateData& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const ntsdr::SingularMatrix& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const ntsdr::NumericalFailure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const ntsdr::TuningFailure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
