// latentstitch: command-line front end for stitching grids, probe suites,
// training-dynamics runs and the synthetic model harness.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "latentstitch/config.hpp"
#include "latentstitch/data.hpp"
#include "latentstitch/error.hpp"
#include "latentstitch/mapfit.hpp"
#include "latentstitch/metrics.hpp"
#include "latentstitch/pipeline.hpp"
#include "latentstitch/probes.hpp"
#include "latentstitch/report.hpp"
#include "latentstitch/synth.hpp"

namespace fs = std::filesystem;
namespace ls = latentstitch;
using ls::pipeline::CsvTable;
using ls::pipeline::format_number;

namespace {

struct Globals {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out = ".";
    int threads = 1;
};

struct SplitFlags {
    std::optional<Eigen::Index> train;
    std::optional<Eigen::Index> holdout;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--train", train, "rows in the train split (stored order)");
        cmd->add_option("--holdout", holdout, "rows in the holdout split that follows");
    }
    void apply(ls::data::SplitSpec& s) const {
        if (train) s.n_train = *train;
        if (holdout) s.n_holdout = *holdout;
        ls::require(s.n_train >= 1 && s.n_holdout >= 0, ls::ErrorCode::ConfigError,
                    "--train must be >= 1 and --holdout >= 0");
    }
};

ls::pipeline::ExperimentConfig load(const Globals& g, bool required) {
    ls::pipeline::ExperimentConfig cfg;
    if (!g.config.empty()) {
        cfg = ls::pipeline::load_config(g.config);
    } else if (required) {
        ls::fail(ls::ErrorCode::ConfigError, "this command needs --config");
    }
    if (g.seed) cfg.seed = *g.seed;
    return cfg;
}

ls::pipeline::RunOptions run_options(const Globals& g) {
    ls::require(g.threads >= 1, ls::ErrorCode::ConfigError, "--threads must be >= 1");
    return {g.threads, g.out};
}

void make_out_dir(const Globals& g) {
    std::error_code ec;
    fs::create_directories(g.out, ec);
    if (ec) ls::fail(ls::ErrorCode::IoError, "cannot create " + g.out + ": " + ec.message());
}

void report_failures(const std::vector<ls::pipeline::CellFailure>& failures) {
    for (const auto& f : failures)
        std::cerr << "warning: " << f.stage << " failed for " << f.row << " / " << f.col << ": " << f.message
                  << "\n";
}

// ---------------------------------------------------------------------------

struct FitMapArgs {
    std::string source, target, map_path;
    std::optional<double> alpha;
    SplitFlags split;
};

int cmd_fit_map(const Globals& g, const FitMapArgs& a) {
    auto cfg = load(g, false);
    a.split.apply(cfg.split);
    const auto src = ls::data::read_latents(a.source);
    const auto dst = ls::data::read_latents(a.target);
    if (a.alpha) cfg.alphas.set(src.model_id, dst.model_id, *a.alpha);
    ls::require(cfg.alphas.lookup(src.model_id, dst.model_id) >= 0, ls::ErrorCode::ConfigError,
                "--alpha must be >= 0");

    const auto [s, t] = ls::data::align(src, dst);
    const auto rows = ls::data::split_rows(s.size(), cfg.split);
    const auto fit = ls::pipeline::fit_stitch_map(src, dst, cfg);
    std::optional<double> mse;
    if (!rows.holdout.empty())
        mse = ls::mapfit::latent_mse(ls::mapfit::apply_map(fit.map, ls::data::take_rows(s, rows.holdout).to_double()),
                                     ls::data::take_rows(t, rows.holdout).to_double());

    make_out_dir(g);
    const fs::path map_path =
        a.map_path.empty() ? fs::path(g.out) / (src.model_id + "__" + dst.model_id + ".lmap") : fs::path(a.map_path);
    ls::mapfit::write_map(fit.map, map_path);

    CsvTable t_out;
    t_out.header = {"source", "target", "alpha", "d_in", "d_out", "n_train", "n_holdout", "holdout_latent_mse",
                    "lstsq_fallback"};
    t_out.rows.push_back({src.model_id, dst.model_id, format_number(fit.map.alpha),
                          std::to_string(fit.map.input_dim()), std::to_string(fit.map.output_dim()),
                          std::to_string(rows.train.size()), std::to_string(rows.holdout.size()),
                          mse ? format_number(*mse) : std::string{}, fit.used_lstsq_fallback ? "1" : "0"});
    ls::pipeline::emit_csv(t_out, fs::path(g.out) / "fit_map.csv");
    std::cout << "map " << map_path.string() << "\n";
    if (mse) std::cout << "holdout_latent_mse " << format_number(*mse) << "\n";
    return 0;
}

int cmd_stitch_grid(const Globals& g) {
    const auto cfg = load(g, true);
    make_out_dir(g);
    const auto res = ls::pipeline::run_stitch_grid(cfg, run_options(g));
    report_failures(res.failures);
    std::cout << "cells " << res.latent_mse.count_present() << "/" << res.latent_mse.values.size()
              << " latent, " << res.pixel_rmse.count_present() << " pixel; failures " << res.failures.size()
              << "\n";
    return 0;
}

struct TrainProbeArgs {
    std::string latents, attributes, attribute, probe_path;
    std::optional<double> alpha;
    std::optional<int> max_iter;
    bool standardize = false;
    SplitFlags split;
};

int cmd_train_probe(const Globals& g, const TrainProbeArgs& a) {
    auto cfg = load(g, false);
    const auto latents = ls::data::read_latents(a.latents);
    const fs::path attr_path = a.attributes.empty() ? cfg.attributes : fs::path(a.attributes);
    ls::require(!attr_path.empty(), ls::ErrorCode::ConfigError, "train-probe needs --attributes");
    const auto table = ls::data::read_attribute_table(attr_path);
    if (g.config.empty() && !a.split.train) {
        // Standalone use: the whole file is the pool.
        cfg.split.n_train = latents.size();
        cfg.split.n_holdout = 0;
    }
    a.split.apply(cfg.split);
    if (a.standardize) cfg.probe_standardize = true;
    if (a.max_iter) cfg.probe_max_iter = *a.max_iter;

    std::vector<std::string> warnings;
    const double alpha = a.alpha ? *a.alpha : ls::pipeline::probe_alpha_for(cfg, latents.model_id, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    const auto tp = ls::pipeline::train_probe(latents, table, a.attribute, alpha, cfg);

    make_out_dir(g);
    const fs::path probe_path = a.probe_path.empty()
                                    ? fs::path(g.out) / (latents.model_id + "__" + a.attribute + ".lprb")
                                    : fs::path(a.probe_path);
    ls::probes::write_probe(tp.probe, probe_path);
    ls::pipeline::ProbeRecord rec{latents.model_id, a.attribute, alpha, tp.train.per_class, tp.accuracy};
    ls::pipeline::emit_csv(ls::pipeline::probe_report_table({rec}), fs::path(g.out) / "train_probe.csv");
    std::cout << "probe " << probe_path.string() << "\n"
              << "train_per_class " << tp.train.per_class << "\nholdout_accuracy " << format_number(tp.accuracy)
              << "\n";
    return 0;
}

int cmd_probe_suite(const Globals& g) {
    const auto cfg = load(g, true);
    make_out_dir(g);
    const auto res = ls::pipeline::run_probe_suite(cfg, run_options(g));
    report_failures(res.failures);
    std::cout << "probes " << res.accuracy.count_present() << "/" << res.accuracy.values.size() << "; failures "
              << res.failures.size() << "\n";
    return 0;
}

struct DynamicsArgs {
    std::vector<std::string> checkpoints;
    std::optional<double> eps;
    std::optional<double> alpha;
};

int cmd_dynamics(const Globals& g, const DynamicsArgs& a) {
    auto cfg = load(g, true);
    if (a.eps) {
        ls::require(*a.eps >= 0, ls::ErrorCode::ConfigError, "--eps must be >= 0");
        cfg.plateau_eps = *a.eps;
    }
    if (a.alpha) cfg.dynamics_alpha = *a.alpha;
    std::vector<ls::pipeline::Checkpoint> cps;
    for (const auto& p : a.checkpoints) {
        ls::require(fs::exists(p), ls::ErrorCode::ConfigError, "checkpoint file not found: " + p);
        cps.push_back({fs::path(p).stem().string(), p});
    }
    make_out_dir(g);
    const auto series = ls::pipeline::run_dynamics(cfg, cps, run_options(g));
    report_failures(series.failures);
    if (!series.attributes.empty())
        std::cout << "plateau " << series.checkpoints[series.overall_plateau()] << " (index "
                  << series.overall_plateau() << ")\n";
    return 0;
}

struct SynthArgs {
    Eigen::Index n = 2200;
    Eigen::Index k = 8;
    Eigen::Index d_pix = 256;
    bool sigmoid = false;
    SplitFlags split;
};

int cmd_synth_gen(const Globals& g, const SynthArgs& a) {
    ls::data::SplitSpec split{2000, 200};
    a.split.apply(split);
    ls::require(split.n_train + split.n_holdout <= a.n, ls::ErrorCode::ConfigError,
                "--train + --holdout exceeds --n");
    const std::uint64_t seed = g.seed.value_or(0);
    const auto world = ls::synth::gen_world(a.n, a.k, a.d_pix, seed,
                                            a.sigmoid ? ls::synth::Squash::Sigmoid : ls::synth::Squash::Affine);
    make_out_dir(g);
    const auto files = ls::synth::emit_datasets(world, ls::synth::default_roster(a.k, seed), g.out, split);
    std::cout << "config " << files.config.string() << "\n";
    return 0;
}

struct PairArgs {
    std::string a, b;
};

int cmd_fid(const Globals& g, const PairArgs& p) {
    const auto a = ls::data::read_latents(p.a);
    const auto b = ls::data::read_latents(p.b);
    const double v = ls::metrics::fid(a.to_double(), b.to_double());
    make_out_dir(g);
    CsvTable t;
    t.header = {"a", "b", "n_a", "n_b", "d", "fid"};
    t.rows.push_back({fs::path(p.a).filename().string(), fs::path(p.b).filename().string(), std::to_string(a.size()),
                      std::to_string(b.size()), std::to_string(a.dim()), format_number(v)});
    ls::pipeline::emit_csv(t, fs::path(g.out) / "fid.csv");
    std::cout << "fid " << format_number(v) << "\n";
    return 0;
}

int cmd_rmse(const Globals& g, const PairArgs& p) {
    const auto a = ls::data::read_images(p.a);
    const auto b = ls::data::read_images(p.b);
    const double v = ls::metrics::pixel_rmse(a, b);
    make_out_dir(g);
    CsvTable t;
    t.header = {"a", "b", "n", "rmse"};
    t.rows.push_back({fs::path(p.a).filename().string(), fs::path(p.b).filename().string(), std::to_string(a.size()),
                      format_number(v)});
    ls::pipeline::emit_csv(t, fs::path(g.out) / "rmse.csv");
    std::cout << "rmse " << format_number(v) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Latent-space stitching and probing toolkit"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--config", g.config, "experiment config (key = value lines)");
    app.add_option("--seed", g.seed, "seed override");
    app.add_option("--out", g.out, "output directory");
    app.add_option("--threads", g.threads, "worker threads");

    FitMapArgs fit_args;
    auto* fit = app.add_subcommand("fit-map", "fit one stitching map between two latent files");
    fit->add_option("--source", fit_args.source, "source latents (LSF)")->required();
    fit->add_option("--target", fit_args.target, "target latents (LSF)")->required();
    fit->add_option("--alpha", fit_args.alpha, "ridge strength (default: registry)");
    fit->add_option("--map", fit_args.map_path, "output LMAP path");
    fit_args.split.add_to(fit);

    auto* grid = app.add_subcommand("stitch-grid", "all ordered encoder/decoder pairs");

    TrainProbeArgs tp_args;
    auto* tp = app.add_subcommand("train-probe", "train one lasso probe");
    tp->add_option("--latents", tp_args.latents, "latents (LSF)")->required();
    tp->add_option("--attributes", tp_args.attributes, "attribute table");
    tp->add_option("--attribute", tp_args.attribute, "attribute name")->required();
    tp->add_option("--alpha", tp_args.alpha, "lasso strength");
    tp->add_option("--probe", tp_args.probe_path, "output LPRB path");
    tp->add_option("--max-iter", tp_args.max_iter, "coordinate-descent sweep limit");
    tp->add_flag("--standardize", tp_args.standardize, "fit on unit-variance features");
    tp_args.split.add_to(tp);

    auto* suite = app.add_subcommand("probe-suite", "probes for every model and attribute, plus match/delta grids");

    DynamicsArgs dyn_args;
    auto* dyn = app.add_subcommand("dynamics", "probe accuracy across training checkpoints");
    dyn->add_option("checkpoints", dyn_args.checkpoints, "checkpoint latents in epoch order");
    dyn->add_option("--eps", dyn_args.eps, "plateau threshold");
    dyn->add_option("--alpha", dyn_args.alpha, "lasso strength");

    SynthArgs syn_args;
    auto* syn = app.add_subcommand("synth-gen", "emit a synthetic world and model roster");
    syn->add_option("--n", syn_args.n, "samples");
    syn->add_option("--k", syn_args.k, "factors");
    syn->add_option("--d-pix", syn_args.d_pix, "pixel dimension");
    syn->add_flag("--sigmoid", syn_args.sigmoid, "saturating pixel squash");
    syn_args.split.add_to(syn);

    PairArgs fid_args;
    auto* fid = app.add_subcommand("fid", "Frechet distance between two feature files");
    fid->add_option("a", fid_args.a, "features (LSF)")->required();
    fid->add_option("b", fid_args.b, "features (LSF)")->required();

    PairArgs rmse_args;
    auto* rmse = app.add_subcommand("rmse", "pixel RMSE between two image files");
    rmse->add_option("a", rmse_args.a, "images (LSF)")->required();
    rmse->add_option("b", rmse_args.b, "images (LSF)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (*fit) return cmd_fit_map(g, fit_args);
        if (*grid) return cmd_stitch_grid(g);
        if (*tp) return cmd_train_probe(g, tp_args);
        if (*suite) return cmd_probe_suite(g);
        if (*dyn) return cmd_dynamics(g, dyn_args);
        if (*syn) return cmd_synth_gen(g, syn_args);
        if (*fid) return cmd_fid(g, fid_args);
        if (*rmse) return cmd_rmse(g, rmse_args);
    } catch (const ls::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return ls::exit_status(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
