#include "latentstitch/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

#include "binary_io.hpp"
#include "latentstitch/metrics.hpp"
#include "latentstitch/rng.hpp"

namespace latentstitch::pipeline {

namespace {

namespace fs = std::filesystem;
using data::Index;

struct Inputs {
    std::vector<data::LatentDataset> latents;  // config model order
    std::optional<data::ImageDataset> images;
    std::optional<data::AttributeTable> attributes;
};

data::LatentDataset load_latents(const fs::path& path, const std::string& id) {
    data::LatentDataset ds = data::read_latents(path);
    ds.model_id = id;
    return ds;
}

Inputs load_inputs(const ExperimentConfig& cfg, bool need_attributes) {
    Inputs in;
    for (const auto& m : cfg.models) in.latents.push_back(load_latents(m.latents, m.id));
    if (!cfg.pixels.empty()) in.images = data::read_images(cfg.pixels);
    if (need_attributes) {
        require(!cfg.attributes.empty(), ErrorCode::ConfigError, "config has no attributes file");
        in.attributes = data::read_attribute_table(cfg.attributes);
    }
    return in;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
}

void write_lines(const fs::path& path, const std::vector<std::string>& lines) {
    std::string text;
    for (const auto& l : lines) text += l + "\n";
    detail::spit(path, text);
}

std::string pair_name(const std::string& a, const std::string& b) { return a + "__" + b; }

CellFailure failure(std::string row, std::string col, std::string stage, const std::exception& e) {
    const auto* err = dynamic_cast<const Error*>(&e);
    return {std::move(row), std::move(col), std::move(stage),
            err ? err->code() : ErrorCode::IoError, e.what()};
}

std::vector<std::string> attribute_list(const ExperimentConfig& cfg, const data::AttributeTable& t) {
    if (cfg.attribute_subset.empty()) return t.names;
    for (const auto& a : cfg.attribute_subset)
        require(t.column_index(a).has_value(), ErrorCode::ConfigError, "unknown attribute '" + a + "'");
    return cfg.attribute_subset;
}

void schedule_metadata(const ExperimentConfig& cfg, std::vector<std::string>& meta) {
    for (const auto& m : cfg.models) {
        if (!m.synth || m.synth->kind != synth::ModelKind::Noising) continue;
        const auto& s = m.synth->schedule;
        meta.push_back("noising." + m.id + ".schedule=linear_beta total_steps=" +
                       std::to_string(s.total_steps) + " steps_used=" + std::to_string(s.steps_used) +
                       " beta_start=" + format_number(s.beta_start) +
                       " beta_end=" + format_number(s.beta_end));
        meta.push_back("noising." + m.id + ".timestep=" + std::to_string(m.synth->timestep) +
                       " alphabar=" + format_number(s.alphabar(m.synth->timestep)));
    }
}

// ---------------------------------------------------------------------------

struct StitchCell {
    std::optional<double> latent_mse;
    std::optional<double> rmse;
    std::optional<double> fid;
    std::vector<CellFailure> failures;
    std::vector<std::string> metadata;
};

void pixel_metrics(const data::ImageDataset& decoded, const data::ImageDataset& images,
                   const ExperimentConfig& cfg, StitchCell& cell) {
    const auto al = data::align_ids(decoded.ids, images.ids);
    require(al.size() == decoded.ids.size(), ErrorCode::InconsistentIds,
            "pixel file lacks some decoded samples");
    require(decoded.pixels.cols() == images.pixels.cols(), ErrorCode::DimensionMismatch,
            "decoded images and target images differ in size");
    const metrics::Matrix out = data::take_rows(decoded, al.rows_a).pixels.cast<double>();
    const metrics::Matrix ref = data::take_rows(images, al.rows_b).pixels.cast<double>();
    cell.rmse = metrics::pixel_rmse(out, ref);
    if (cfg.fid_enabled && out.rows() >= 2) cell.fid = metrics::fid(out, ref);
}

StitchCell compute_stitch_cell(const ExperimentConfig& cfg, const Inputs& in, std::size_t ei,
                               std::size_t di, const RunOptions& opt) {
    StitchCell cell;
    const ModelEntry& enc = cfg.models[ei];
    const ModelEntry& dec = cfg.models[di];
    const std::string pname = pair_name(enc.id, dec.id);

    data::LatentDataset mapped;
    try {
        const auto [src, dst] = data::align(in.latents[ei], in.latents[di]);
        const auto rows = data::split_rows(src.size(), cfg.split);
        const double alpha = cfg.alphas.lookup(enc.id, dec.id);
        const auto fit = mapfit::fit_map(data::take_rows(src, rows.train),
                                         data::take_rows(dst, rows.train), alpha);
        if (alpha != 0.0)
            cell.metadata.push_back("alpha." + enc.id + "." + dec.id + "=" + format_number(alpha));
        if (fit.used_lstsq_fallback)
            cell.metadata.push_back("lstsq_fallback." + enc.id + "." + dec.id + "=1");

        const auto holdout_src = data::take_rows(src, rows.holdout);
        const auto holdout_dst = data::take_rows(dst, rows.holdout);
        const mapfit::Matrix predicted = mapfit::apply_map(fit.map, holdout_src.to_double());
        if (!rows.holdout.empty())
            cell.latent_mse = mapfit::latent_mse(predicted, holdout_dst.to_double());
        mapped = {dec.id, holdout_src.ids, predicted.cast<float>()};

        if (!opt.out_dir.empty()) mapfit::write_map(fit.map, opt.out_dir / "maps" / (pname + ".lmap"));
    } catch (const std::exception& e) {
        cell.failures.push_back(failure(enc.id, dec.id, "map", e));
        return cell;
    }
    if (mapped.ids.empty()) return cell;

    try {
        if (dec.synth) {
            if (synth::decodable(*dec.synth) && in.images) {
                pixel_metrics(synth::decode(*dec.synth, mapped, in.images->shape), *in.images, cfg, cell);
            }
        } else {
            if (!opt.out_dir.empty()) data::write_latents(mapped, opt.out_dir / "mapped" / (pname + ".lsf"));
            if (const auto it = cfg.decoded.find({enc.id, dec.id}); it != cfg.decoded.end() && in.images) {
                pixel_metrics(data::read_images(it->second), *in.images, cfg, cell);
            }
        }
    } catch (const std::exception& e) {
        cell.failures.push_back(failure(enc.id, dec.id, "pixels", e));
    }
    return cell;
}

}  // namespace

// ---------------------------------------------------------------------------

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& task) {
    const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, threads)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    task(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

mapfit::FitReport fit_stitch_map(const data::LatentDataset& source, const data::LatentDataset& target,
                                 const ExperimentConfig& cfg) {
    const auto [src, dst] = data::align(source, target);
    const auto rows = data::split_rows(src.size(), cfg.split);
    return mapfit::fit_map(data::take_rows(src, rows.train), data::take_rows(dst, rows.train),
                           cfg.alphas.lookup(source.model_id, target.model_id));
}

StitchGridResult run_stitch_grid(const ExperimentConfig& cfg, const RunOptions& opt) {
    require(cfg.models.size() >= 2, ErrorCode::ConfigError, "stitch grid needs at least 2 models");
    const Inputs in = load_inputs(cfg, false);
    if (!opt.out_dir.empty()) {
        ensure_dir(opt.out_dir / "maps");
        ensure_dir(opt.out_dir / "mapped");
    }

    std::vector<std::string> ids;
    for (const auto& m : cfg.models) ids.push_back(m.id);
    const std::size_t n = ids.size();

    std::vector<StitchCell> cells(n * n);
    parallel_for(cells.size(), opt.threads, [&](std::size_t c) {
        cells[c] = compute_stitch_cell(cfg, in, c / n, c % n, opt);
    });

    StitchGridResult res;
    res.latent_mse = MetricGrid("latent_mse", "encoder\\decoder", ids, ids);
    res.pixel_rmse = MetricGrid("pixel_rmse", "encoder\\decoder", ids, ids);
    res.fid = MetricGrid("fid", "encoder\\decoder", ids, ids);
    if (!cfg.lpips.empty()) res.lpips = MetricGrid("lpips", "encoder\\decoder", ids, ids);

    res.metadata = {"grid.rows=encoder", "grid.cols=decoder",
                    "latent_mse=mean squared error per latent entry over the holdout split",
                    "pixel_rmse=root mean squared error per pixel value in [0,1] over the holdout split",
                    "fid.features=flattened pixels",
                    "fid.covariance_ridge=1e-6*mean(diag) added when n < d",
                    "fid.n=" + std::to_string(cfg.split.n_holdout),
                    "split.train=" + std::to_string(cfg.split.n_train),
                    "split.holdout=" + std::to_string(cfg.split.n_holdout),
                    "seed=" + std::to_string(cfg.seed)};
    schedule_metadata(cfg, res.metadata);

    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
            StitchCell& cell = cells[r * n + c];
            res.latent_mse.at(r, c) = cell.latent_mse;
            res.pixel_rmse.at(r, c) = cell.rmse;
            res.fid.at(r, c) = cell.fid;
            if (res.lpips)
                if (const auto it = cfg.lpips.find({ids[r], ids[c]}); it != cfg.lpips.end())
                    res.lpips->at(r, c) = it->second;
            for (auto& f : cell.failures) res.failures.push_back(std::move(f));
            for (auto& m : cell.metadata) res.metadata.push_back(std::move(m));
        }
    }

    if (!opt.out_dir.empty()) {
        emit_csv(res.latent_mse, opt.out_dir / "latent_mse.csv");
        emit_csv(res.pixel_rmse, opt.out_dir / "pixel_rmse.csv");
        emit_csv(res.fid, opt.out_dir / "fid.csv");
        if (res.lpips) emit_csv(*res.lpips, opt.out_dir / "lpips.csv");
        emit_csv(failures_table(res.failures), opt.out_dir / "stitch_failures.csv");
        write_lines(opt.out_dir / "stitch_metadata.txt", res.metadata);
    }
    return res;
}

// ---------------------------------------------------------------------------

TrainedProbe train_probe(const data::LatentDataset& latents, const data::AttributeTable& table,
                         const std::string& attribute, double alpha, const ExperimentConfig& cfg) {
    const auto [aligned, attrs] = data::align(latents, table);
    const auto rows = data::split_rows(aligned.size(), cfg.split);
    const auto pool = data::take_rows(aligned, rows.train);
    const auto pool_values = data::take_rows(attrs, rows.train).column(attribute);

    const std::uint64_t seed = mix_seed(cfg.seed, attribute);
    TrainedProbe out;
    out.train = probes::balanced_subset(pool.ids, pool_values, seed);
    out.holdout = probes::balanced_holdout(pool.ids, pool_values, out.train,
                                           cfg.probe_holdout_per_class, seed);
    if (!rows.holdout.empty()) {
        const auto held = data::take_rows(aligned, rows.holdout);
        const auto held_values = data::take_rows(attrs, rows.holdout).column(attribute);
        const bool both = std::count(held_values.begin(), held_values.end(), 1) > 0 &&
                          std::count(held_values.begin(), held_values.end(), -1) > 0;
        if (both)
            out.evaluation = probes::balanced_holdout(held.ids, held_values, {}, cfg.probe_holdout_per_class,
                                                      mix_seed(seed, "evaluation"));
    }

    auto gather = [&](const probes::BalancedSubset& s, std::vector<int>& labels) {
        const auto ids = s.all_ids();
        const auto al = data::align_ids(ids, pool.ids);
        labels.assign(s.positive.size(), 1);
        labels.resize(ids.size(), 0);
        return data::take_rows(pool, al.rows_b).to_double();
    };
    std::vector<int> train_labels, holdout_labels;
    const probes::Matrix x_train = gather(out.train, train_labels);
    const probes::Matrix x_holdout = gather(out.holdout, holdout_labels);

    probes::LassoOptions lasso;
    lasso.standardize = cfg.probe_standardize;
    lasso.max_iter = cfg.probe_max_iter;
    out.probe = probes::fit_lasso(x_train, train_labels, alpha, lasso);
    out.probe.attribute = attribute;
    out.probe.model_id = latents.model_id;
    out.accuracy = probes::accuracy(out.probe, x_holdout, holdout_labels);
    return out;
}


ProbeSuiteResult run_probe_suite(const ExperimentConfig& cfg, const RunOptions& opt) {
    const Inputs in = load_inputs(cfg, true);
    const auto& table = *in.attributes;
    const auto attributes = attribute_list(cfg, table);
    if (!opt.out_dir.empty()) ensure_dir(opt.out_dir / "probes");

    ProbeSuiteResult res;
    std::vector<std::size_t> probed;
    for (std::size_t i = 0; i < cfg.models.size(); ++i)
        if (!cfg.models[i].decoder_only) probed.push_back(i);

    std::vector<std::string> warnings;
    std::vector<double> alphas;
    for (std::size_t m : probed) alphas.push_back(probe_alpha_for(cfg, cfg.models[m].id, &warnings));

    // Probes: one task per (model, attribute).
    const std::size_t na = attributes.size();
    std::vector<std::optional<TrainedProbe>> trained(probed.size() * na);
    std::vector<std::optional<CellFailure>> probe_fail(trained.size());
    parallel_for(trained.size(), opt.threads, [&](std::size_t t) {
        const std::size_t mi = t / na;
        const std::string& model_id = cfg.models[probed[mi]].id;
        try {
            trained[t] = train_probe(in.latents[probed[mi]], table, attributes[t % na], alphas[mi], cfg);
            if (!opt.out_dir.empty())
                probes::write_probe(trained[t]->probe,
                                    opt.out_dir / "probes" / (pair_name(model_id, attributes[t % na]) + ".lprb"));
        } catch (const std::exception& e) {
            probe_fail[t] = failure(model_id, attributes[t % na], "probe", e);
        }
    });

    std::vector<std::string> model_rows;
    for (std::size_t m : probed) model_rows.push_back(cfg.models[m].id);
    res.accuracy = MetricGrid("probe_accuracy", "model\\attribute", model_rows, attributes);
    for (std::size_t t = 0; t < trained.size(); ++t) {
        ProbeRecord rec{model_rows[t / na], attributes[t % na], alphas[t / na], 0, std::nullopt};
        if (trained[t]) {
            rec.train_per_class = trained[t]->train.per_class;
            rec.holdout_accuracy = trained[t]->accuracy;
            res.accuracy.at(t / na, t % na) = trained[t]->accuracy;
        }
        res.records.push_back(rec);
        if (probe_fail[t]) res.failures.push_back(*probe_fail[t]);
    }

    // Stitching maps into every probed space.
    struct PairTask {
        std::size_t source;
        std::size_t target_slot;  // index into `probed`
    };
    std::vector<PairTask> pairs;
    std::vector<std::string> pair_rows;
    for (std::size_t ti = 0; ti < probed.size(); ++ti)
        for (std::size_t s = 0; s < cfg.models.size(); ++s)
            if (s != probed[ti]) {
                pairs.push_back({s, ti});
                pair_rows.push_back(cfg.models[s].id + "->" + cfg.models[probed[ti]].id);
            }
    std::vector<std::optional<mapfit::LinearMap>> maps(pairs.size());
    std::vector<std::optional<CellFailure>> map_fail(pairs.size());
    parallel_for(pairs.size(), opt.threads, [&](std::size_t p) {
        const auto& src = in.latents[pairs[p].source];
        const auto& dst = in.latents[probed[pairs[p].target_slot]];
        try {
            maps[p] = fit_stitch_map(src, dst, cfg).map;
        } catch (const std::exception& e) {
            map_fail[p] = failure(src.model_id, dst.model_id, "map", e);
        }
    });

    res.match = MetricGrid("probe_match_percent", "map\\attribute", pair_rows, attributes);
    res.delta = MetricGrid("probe_accuracy_delta_percent", "map\\attribute", pair_rows, attributes);
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        if (map_fail[p]) {
            res.failures.push_back(*map_fail[p]);
            continue;
        }
        const auto& src = in.latents[pairs[p].source];
        const auto& dst = in.latents[probed[pairs[p].target_slot]];
        for (std::size_t a = 0; a < na; ++a) {
            const auto& tp = trained[pairs[p].target_slot * na + a];
            if (!tp) continue;
            try {
                require(tp->evaluation.has_value(), ErrorCode::SingleClassPool,
                        "stitching holdout split lacks one of the classes");
                const auto& eval = *tp->evaluation;
                const auto eval_ids = eval.all_ids();
                std::vector<int> labels(eval.positive.size(), 1);
                labels.resize(eval_ids.size(), 0);
                // Keep holdout samples present in both spaces.
                const auto in_src = data::align_ids(eval_ids, src.ids);
                const auto in_dst = data::align_ids(eval_ids, dst.ids);
                std::vector<Index> keep_src, keep_dst;
                std::vector<int> keep_labels;
                std::size_t j = 0;
                for (std::size_t i = 0; i < in_src.size(); ++i) {
                    while (j < in_dst.size() && in_dst.rows_a[j] < in_src.rows_a[i]) ++j;
                    if (j < in_dst.size() && in_dst.rows_a[j] == in_src.rows_a[i]) {
                        keep_src.push_back(in_src.rows_b[i]);
                        keep_dst.push_back(in_dst.rows_b[j]);
                        keep_labels.push_back(labels[static_cast<std::size_t>(in_src.rows_a[i])]);
                    }
                }
                require(!keep_src.empty(), ErrorCode::EmptyIntersection,
                        "no evaluation samples shared by source and target");
                const probes::Matrix native = data::take_rows(dst, keep_dst).to_double();
                const probes::Matrix mapped =
                    mapfit::apply_map(*maps[p], data::take_rows(src, keep_src).to_double());
                res.match.at(p, a) = probes::match_percent(tp->probe, native, mapped);
                res.delta.at(p, a) = probes::accuracy_delta(probes::accuracy(tp->probe, native, keep_labels),
                                                            probes::accuracy(tp->probe, mapped, keep_labels));
            } catch (const std::exception& e) {
                res.failures.push_back(failure(pair_rows[p], attributes[a], "probe-metrics", e));
            }
        }
    }

    res.metadata = {"probe.model=lasso regression on labels {-1->0,+1->1}",
                    "probe.threshold=0.5 (ties classify as 1)",
                    "probe.train=80% of min(#pos,#neg) per class over the train split",
                    "probe.holdout_per_class=" + std::to_string(cfg.probe_holdout_per_class),
                    "probe.standardize=" + std::string(cfg.probe_standardize ? "true" : "false"),
                    "accuracy_delta=signed percent change 100*(mapped-native)/native",
                    "probe.accuracy=balanced holdout drawn from the train split rows the probe did not train on",
                    "match=percent of equal predictions on native and mapped latents over a balanced draw "
                    "from the stitching holdout split",
                    "split.train=" + std::to_string(cfg.split.n_train),
                    "seed=" + std::to_string(cfg.seed)};
    for (const auto& w : warnings) res.metadata.push_back("warning=" + w);

    if (!opt.out_dir.empty()) {
        emit_csv(probe_report_table(res.records), opt.out_dir / "probe_report.csv");
        emit_csv(res.accuracy, opt.out_dir / "probe_accuracy.csv");
        emit_csv(res.match, opt.out_dir / "probe_match.csv");
        emit_csv(res.delta, opt.out_dir / "probe_delta.csv");
        emit_csv(failures_table(res.failures), opt.out_dir / "probe_failures.csv");
        write_lines(opt.out_dir / "probe_metadata.txt", res.metadata);
    }
    return res;
}

// ---------------------------------------------------------------------------

std::size_t plateau_index(std::span<const double> series, double eps) {
    require(!series.empty(), ErrorCode::EmptySet, "plateau of an empty series");
    std::size_t i = series.size() - 1;
    while (i > 0 && series[i] - series[i - 1] < eps) --i;
    return i;
}

std::size_t DynamicsSeries::overall_plateau() const {
    std::size_t out = 0;
    for (auto p : plateau) out = std::max(out, p);
    return out;
}

DynamicsSeries run_dynamics(const ExperimentConfig& cfg, std::vector<Checkpoint> checkpoints,
                            const RunOptions& opt) {
    if (checkpoints.empty()) checkpoints = cfg.checkpoints;
    require(checkpoints.size() >= 2, ErrorCode::ConfigError, "dynamics needs at least 2 checkpoints");
    require(!cfg.attributes.empty(), ErrorCode::ConfigError, "config has no attributes file");
    const auto table = data::read_attribute_table(cfg.attributes);

    std::vector<data::LatentDataset> latents;
    for (const auto& c : checkpoints) {
        latents.push_back(data::read_latents(c.latents));
        if (latents.size() > 1) {
            const auto& first = latents.front();
            auto& cur = latents.back();
            std::set<std::string> a(first.ids.begin(), first.ids.end());
            std::set<std::string> b(cur.ids.begin(), cur.ids.end());
            require(a == b, ErrorCode::InconsistentIds,
                    "checkpoint " + c.label + " covers different samples than " + checkpoints.front().label);
            cur = data::take_rows(cur, data::align_ids(first.ids, cur.ids).rows_b);
        }
    }

    std::vector<std::string> warnings;
    const double alpha = cfg.dynamics_alpha ? *cfg.dynamics_alpha
                                            : probe_alpha_for(cfg, latents.front().model_id, &warnings);
    const auto attributes = attribute_list(cfg, table);
    const std::size_t na = attributes.size();
    const std::size_t nc = checkpoints.size();

    std::vector<std::optional<double>> acc(na * nc);
    std::vector<std::optional<CellFailure>> fails(na * nc);
    parallel_for(acc.size(), opt.threads, [&](std::size_t t) {
        const std::size_t a = t / nc;
        const std::size_t c = t % nc;
        try {
            acc[t] = train_probe(latents[c], table, attributes[a], alpha, cfg).accuracy;
        } catch (const std::exception& e) {
            fails[t] = failure(attributes[a], checkpoints[c].label, "probe", e);
        }
    });

    DynamicsSeries series;
    for (const auto& c : checkpoints) series.checkpoints.push_back(c.label);
    for (std::size_t a = 0; a < na; ++a) {
        std::vector<double> row;
        bool complete = true;
        for (std::size_t c = 0; c < nc; ++c) {
            if (fails[a * nc + c]) {
                series.failures.push_back(*fails[a * nc + c]);
                complete = false;
            } else {
                row.push_back(*acc[a * nc + c]);
            }
        }
        if (!complete) continue;
        series.plateau.push_back(plateau_index(row, cfg.plateau_eps));
        series.attributes.push_back(attributes[a]);
        series.accuracy.push_back(std::move(row));
    }

    if (!opt.out_dir.empty()) {
        ensure_dir(opt.out_dir);
        emit_csv(dynamics_grid(series), opt.out_dir / "dynamics.csv");
        emit_csv(plateau_table(series, cfg.plateau_eps), opt.out_dir / "dynamics_plateau.csv");
        emit_csv(failures_table(series.failures), opt.out_dir / "dynamics_failures.csv");
        std::vector<std::string> meta = {"plateau.eps=" + format_number(cfg.plateau_eps),
                                         "plateau.rule=first checkpoint after which every increment < eps",
                                         "probe.alpha=" + format_number(alpha),
                                         "seed=" + std::to_string(cfg.seed)};
        for (const auto& w : warnings) meta.push_back("warning=" + w);
        write_lines(opt.out_dir / "dynamics_metadata.txt", meta);
    }
    return series;
}

// ---------------------------------------------------------------------------

CsvTable probe_report_table(const std::vector<ProbeRecord>& records) {
    CsvTable t;
    t.header = {"model", "attribute", "alpha", "train_n_per_class", "holdout_accuracy"};
    for (const auto& r : records)
        t.rows.push_back({r.model, r.attribute, format_number(r.alpha), std::to_string(r.train_per_class),
                          r.holdout_accuracy ? format_number(*r.holdout_accuracy) : std::string{}});
    return t;
}

CsvTable failures_table(const std::vector<CellFailure>& failures) {
    CsvTable t;
    t.header = {"row", "col", "stage", "error", "message"};
    for (const auto& f : failures)
        t.rows.push_back({f.row, f.col, f.stage, std::string(to_string(f.code)), f.message});
    return t;
}

MetricGrid dynamics_grid(const DynamicsSeries& series) {
    MetricGrid g("probe_accuracy_by_checkpoint", "attribute\\checkpoint", series.attributes,
                 series.checkpoints);
    for (std::size_t a = 0; a < series.attributes.size(); ++a)
        for (std::size_t c = 0; c < series.checkpoints.size(); ++c) g.at(a, c) = series.accuracy[a][c];
    return g;
}

CsvTable plateau_table(const DynamicsSeries& series, double eps) {
    CsvTable t;
    t.header = {"attribute", "plateau_index", "plateau_checkpoint", "eps"};
    for (std::size_t a = 0; a < series.attributes.size(); ++a)
        t.rows.push_back({series.attributes[a], std::to_string(series.plateau[a]),
                          series.checkpoints[series.plateau[a]], format_number(eps)});
    if (!series.attributes.empty()) {
        const auto all = series.overall_plateau();
        t.rows.push_back({"*all*", std::to_string(all), series.checkpoints[all], format_number(eps)});
    }
    return t;
}

}  // namespace latentstitch::pipeline
