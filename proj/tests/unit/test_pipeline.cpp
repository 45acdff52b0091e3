#include "helpers.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <stdexcept>

#include "latentstitch/pipeline.hpp"
#include "latentstitch/synth.hpp"

using namespace latentstitch;
using namespace latentstitch::pipeline;
using namespace testing;

namespace {

struct Experiment {
    std::filesystem::path dir;
    synth::FactorWorld world;
    synth::EmittedFiles files;
};

Experiment make_experiment(const std::string& name, Eigen::Index n = 300, std::uint64_t seed = 3) {
    Experiment e;
    e.dir = temp_dir(name);
    e.world = synth::gen_world(n, 4, 16, seed);
    e.files = synth::emit_datasets(e.world, synth::default_roster(4, seed), e.dir, {250, 50});
    return e;
}

void append(const std::filesystem::path& cfg, const std::string& lines) {
    std::ofstream(cfg, std::ios::app) << lines;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

std::size_t index_of(const std::vector<std::string>& v, const std::string& s) {
    const auto it = std::find(v.begin(), v.end(), s);
    REQUIRE(it != v.end());
    return static_cast<std::size_t>(it - v.begin());
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("plateau_index") {
    const std::vector<double> rising{0.5, 0.7, 0.8, 0.805, 0.81};
    CHECK(plateau_index(rising, 0.01) == 2);
    CHECK(plateau_index(rising, 0.15) == 1);
    CHECK(plateau_index(rising, 0.001) == 4);
    const std::vector<double> flat{0.6, 0.6, 0.6};
    CHECK(plateau_index(flat, 0.01) == 0);
    const std::vector<double> one{0.9};
    CHECK(plateau_index(one, 0.01) == 0);
    // a late jump resets the plateau
    const std::vector<double> jump{0.5, 0.5, 0.5, 0.7};
    CHECK(plateau_index(jump, 0.01) == 3);
    // drops count as below eps
    const std::vector<double> drop{0.5, 0.8, 0.7, 0.75};
    CHECK(plateau_index(drop, 0.1) == 1);
    CHECK_ERROR(plateau_index(std::vector<double>{}, 0.01), ErrorCode::EmptySet);
}

TEST_CASE("plateau_index brute-force oracle") {
    std::mt19937_64 eng(5);
    std::uniform_real_distribution<double> u(-0.05, 0.2);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> s{0.5};
        const int len = 1 + static_cast<int>(eng() % 8);
        for (int i = 1; i < len; ++i) s.push_back(s.back() + u(eng));
        const double eps = 0.05;
        std::size_t oracle = 0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            bool ok = true;
            for (std::size_t j = i + 1; j < s.size(); ++j) ok = ok && (s[j] - s[j - 1] < eps);
            if (ok) {
                oracle = i;
                break;
            }
        }
        CHECK(plateau_index(s, eps) == oracle);
    }
}

TEST_CASE("parallel_for covers every index once and rethrows") {
    for (int threads : {1, 2, 4}) {
        std::vector<std::atomic<int>> hits(37);
        parallel_for(hits.size(), threads, [&](std::size_t i) { hits[i]++; });
        for (auto& h : hits) CHECK(h.load() == 1);
    }
    CHECK_THROWS_AS(parallel_for(10, 3,
                                 [](std::size_t i) {
                                     if (i == 4) throw std::runtime_error("boom");
                                 }),
                    std::runtime_error);
    parallel_for(0, 4, [](std::size_t) { FAIL("no tasks expected"); });
}

TEST_CASE("stitch grid on identical datasets is exact") {
    const auto dir = temp_dir("grid_same");
    const auto world = synth::gen_world(120, 3, 8, 1);
    auto lat = data::random_encoder(world.ids, 6, 2, "A");
    data::write_latents(lat, dir / "a.lsf");
    data::write_latents(lat, dir / "b.lsf");
    std::ofstream(dir / "exp.cfg") << "model.A.latents = a.lsf\nmodel.B.latents = b.lsf\n"
                                      "split.train = 100\nsplit.holdout = 20\n";
    const auto cfg = load_config(dir / "exp.cfg");
    const auto res = run_stitch_grid(cfg);
    CHECK(res.failures.empty());
    CHECK(res.latent_mse.count_present() == 4);
    for (const auto& v : res.latent_mse.values) CHECK(*v <= 1e-20);
    CHECK(res.pixel_rmse.count_present() == 0);
}

TEST_CASE("stitch grid over the synthetic roster") {
    const auto e = make_experiment("grid_roster");
    const auto cfg = load_config(e.files.config);
    const auto out = e.dir / "out";
    const auto res = run_stitch_grid(cfg, {1, out});
    CHECK(res.failures.empty());
    CHECK(res.latent_mse.count_present() == 25);
    CHECK(res.pixel_rmse.count_present() == 20);
    CHECK(res.fid.count_present() == 20);
    CHECK_FALSE(res.lpips.has_value());
    const auto& ids = res.latent_mse.rows;
    const auto a = index_of(ids, "ortho_a");
    const auto b = index_of(ids, "ortho_b");
    const auto rnd = index_of(ids, "random");
    const auto lossy = index_of(ids, "lossy");
    CHECK(*res.latent_mse.at(a, b) <= 1e-9);
    CHECK(*res.pixel_rmse.at(a, b) <= 1e-4);
    CHECK(*res.pixel_rmse.at(a, lossy) > *res.pixel_rmse.at(a, b));
    CHECK(*res.pixel_rmse.at(rnd, a) > *res.pixel_rmse.at(lossy, a));
    for (std::size_t r = 0; r < ids.size(); ++r) CHECK_FALSE(res.pixel_rmse.at(r, rnd).has_value());

    for (const char* f : {"latent_mse.csv", "pixel_rmse.csv", "fid.csv", "stitch_failures.csv",
                          "stitch_metadata.txt", "maps/ortho_a__lossy.lmap"})
        CHECK(std::filesystem::exists(out / f));
    const auto csv = parse_grid_csv(slurp(out / "latent_mse.csv"));
    CHECK(csv.corner == "encoder\\decoder");
    CHECK(csv.count_present() == 25);
    const auto meta = slurp(out / "stitch_metadata.txt");
    CHECK(meta.find("grid.rows=encoder") != std::string::npos);
    CHECK(meta.find("noising.noising.timestep=10") != std::string::npos);
    CHECK(meta.find("seed=3") != std::string::npos);
}

TEST_CASE("stitch grid latent MSE can be recomputed from the written map") {
    const auto e = make_experiment("grid_offline");
    const auto cfg = load_config(e.files.config);
    const auto out = e.dir / "out";
    const auto res = run_stitch_grid(cfg, {1, out});
    const auto map = mapfit::read_map(out / "maps" / "lossy__ortho_a.lmap");
    const auto src = data::read_latents(e.dir / "lossy.lsf");
    const auto dst = data::read_latents(e.dir / "ortho_a.lsf");
    const auto rows = data::split_rows(src.size(), cfg.split);
    const auto xs = data::take_rows(src, rows.holdout).to_double();
    const auto ys = data::take_rows(dst, rows.holdout).to_double();
    const double mse = mapfit::latent_mse(mapfit::apply_map(map, xs), ys);
    const auto& ids = res.latent_mse.rows;
    CHECK(mse == doctest::Approx(*res.latent_mse.at(index_of(ids, "lossy"), index_of(ids, "ortho_a")))
                     .epsilon(1e-12));
}

TEST_CASE("stitch grid is deterministic across thread counts") {
    const auto e = make_experiment("grid_threads");
    const auto cfg = load_config(e.files.config);
    const auto one = run_stitch_grid(cfg, {1, e.dir / "t1"});
    const auto four = run_stitch_grid(cfg, {4, e.dir / "t4"});
    CHECK(format_csv(one.latent_mse) == format_csv(four.latent_mse));
    CHECK(format_csv(one.pixel_rmse) == format_csv(four.pixel_rmse));
    CHECK(format_csv(one.fid) == format_csv(four.fid));
    CHECK(one.metadata == four.metadata);
    for (const char* f : {"latent_mse.csv", "pixel_rmse.csv", "fid.csv", "stitch_metadata.txt"})
        CHECK(slurp(e.dir / "t1" / f) == slurp(e.dir / "t4" / f));
}

TEST_CASE("stitch grid isolates failing cells") {
    const auto e = make_experiment("grid_fail");
    // a model covering too few samples for the split
    auto short_lat = data::random_encoder(std::vector<std::string>(e.world.ids.begin(), e.world.ids.begin() + 100),
                                          8, 1, "short");
    data::write_latents(short_lat, e.dir / "short.lsf");
    append(e.files.config, "model.short.latents = short.lsf\n");
    const auto cfg = load_config(e.files.config);
    const auto res = run_stitch_grid(cfg);
    CHECK(res.latent_mse.count_present() == 25);
    CHECK(res.failures.size() == 11);
    for (const auto& f : res.failures) {
        CHECK(f.stage == "map");
        CHECK(f.code == ErrorCode::InsufficientRows);
        CHECK((f.row == "short" || f.col == "short"));
    }
    const auto table = failures_table(res.failures);
    CHECK(table.header == std::vector<std::string>{"row", "col", "stage", "error", "message"});
    CHECK(table.rows.size() == 11);
}

TEST_CASE("stitch grid re-ingests externally decoded images") {
    const auto e = make_experiment("grid_external");
    // an external model with ortho_a's latents, decoded perfectly by "someone else"
    auto lat = data::read_latents(e.dir / "ortho_a.lsf");
    lat.model_id = "ext";
    data::write_latents(lat, e.dir / "ext.lsf");
    const auto rows = data::split_rows(e.world.size(), {250, 50});
    data::write_images(data::take_rows(e.world.images, rows.holdout), e.dir / "decoded.lsf");
    append(e.files.config,
           "model.ext.latents = ext.lsf\ndecoded.ortho_b.ext = decoded.lsf\nlpips.ortho_b.ext = 0.25\n");
    const auto cfg = load_config(e.files.config);
    const auto out = e.dir / "out";
    const auto res = run_stitch_grid(cfg, {1, out});
    CHECK(res.failures.empty());
    const auto& ids = res.pixel_rmse.rows;
    const auto b = index_of(ids, "ortho_b");
    const auto ext = index_of(ids, "ext");
    CHECK(*res.pixel_rmse.at(b, ext) == 0.0);
    CHECK(std::abs(*res.fid.at(b, ext)) <= 1e-6);
    CHECK_FALSE(res.pixel_rmse.at(index_of(ids, "ortho_a"), ext).has_value());
    REQUIRE(res.lpips.has_value());
    CHECK(res.lpips->count_present() == 1);
    CHECK(*res.lpips->at(b, ext) == 0.25);
    CHECK(std::filesystem::exists(out / "lpips.csv"));
    const auto mapped = data::read_latents(out / "mapped" / "ortho_b__ext.lsf");
    CHECK(mapped.size() == 50);
    CHECK(mapped.model_id == "ext");
}

TEST_CASE("train_probe follows the balanced protocol") {
    const auto e = make_experiment("probe_one", 600);
    auto cfg = load_config(e.files.config);
    cfg.split = {500, 100};
    const auto lat = data::read_latents(e.dir / "ortho_a.lsf");
    const auto t = train_probe(lat, e.world.attributes, "factor_0", synth::kSynthProbeAlpha, cfg);
    // pool is the 500 training rows
    int pos = 0;
    for (Eigen::Index i = 0; i < 500; ++i) pos += e.world.attributes.at(i, 0) > 0;
    const int minority = std::min(pos, 500 - pos);
    CHECK(t.train.per_class == (8 * minority) / 10);
    CHECK(t.holdout.per_class == std::min<Eigen::Index>(100, minority - t.train.per_class));
    std::set<std::string> train_ids;
    for (const auto& id : t.train.all_ids()) train_ids.insert(id);
    for (const auto& id : t.holdout.all_ids()) {
        CHECK(train_ids.count(id) == 0);
        CHECK(id < std::string("s000500"));
    }
    // evaluation set comes from the stitching holdout rows
    REQUIRE(t.evaluation.has_value());
    CHECK(t.evaluation->per_class > 0);
    CHECK(t.evaluation->per_class <= 50);
    for (const auto& id : t.evaluation->all_ids()) CHECK(id >= std::string("s000500"));
    CHECK(t.probe.attribute == "factor_0");
    CHECK(t.probe.model_id == "ortho_a");
    CHECK(t.accuracy >= 0.9);

    const auto again = train_probe(lat, e.world.attributes, "factor_0", synth::kSynthProbeAlpha, cfg);
    CHECK(again.probe.weight == t.probe.weight);
    CHECK(again.accuracy == t.accuracy);
}

TEST_CASE("probe suite over the synthetic roster") {
    const auto e = make_experiment("probe_suite", 600);
    append(e.files.config, "split.train = 500\nsplit.holdout = 100\nprobe.attributes = factor_0, factor_1\n");
    const auto cfg = load_config(e.files.config);
    const auto out = e.dir / "out";
    const auto res = run_probe_suite(cfg, {2, out});
    CHECK(res.failures.empty());
    CHECK(res.records.size() == 10);
    CHECK(res.accuracy.count_present() == 10);
    CHECK(res.match.rows.size() == 20);
    CHECK(res.match.count_present() == 40);
    const auto ab = index_of(res.match.rows, "ortho_a->ortho_b");
    CHECK(*res.match.at(ab, 0) == 100.0);
    CHECK(*res.delta.at(ab, 0) == 0.0);
    const auto ra = index_of(res.match.rows, "random->ortho_a");
    CHECK(*res.match.at(ra, 0) < 80.0);
    const auto acc = res.accuracy;
    CHECK(*acc.at(index_of(acc.rows, "ortho_a"), 0) >= 0.9);
    CHECK(*acc.at(index_of(acc.rows, "random"), 0) <= 0.75);
    for (const char* f : {"probe_report.csv", "probe_accuracy.csv", "probe_match.csv", "probe_delta.csv",
                          "probe_failures.csv", "probe_metadata.txt", "probes/ortho_a__factor_0.lprb"})
        CHECK(std::filesystem::exists(out / f));
    const auto report = parse_csv(slurp(out / "probe_report.csv"));
    CHECK(report.header.size() == 5);
    CHECK(report.rows.size() == 10);
}

TEST_CASE("probe suite skips decoder-only models and records single-class attributes") {
    const auto e = make_experiment("probe_skip", 600);
    auto table = e.world.attributes;
    // add a constant attribute column
    std::vector<std::int8_t> values;
    for (Eigen::Index i = 0; i < table.size(); ++i) {
        for (Eigen::Index j = 0; j < table.num_attributes(); ++j) values.push_back(table.at(i, j));
        values.push_back(1);
    }
    table.names.push_back("constant");
    table.values = values;
    data::write_attribute_table(table, e.files.attributes);
    append(e.files.config, "split.train = 500\nsplit.holdout = 100\n"
                           "probe.attributes = factor_2, constant\nmodel.lossy.decoder_only = true\n");
    const auto cfg = load_config(e.files.config);
    const auto res = run_probe_suite(cfg);
    CHECK(res.accuracy.rows.size() == 4);
    for (const auto& r : res.records) CHECK(r.model != "lossy");
    std::size_t single = 0;
    for (const auto& f : res.failures) {
        CHECK(f.col == "constant");
        single += f.code == ErrorCode::SingleClassPool;
    }
    CHECK(single == 4);
    CHECK(res.accuracy.count_present() == 4);
    // lossy still appears as a map source
    index_of(res.match.rows, "lossy->ortho_a");
}

TEST_CASE("dynamics over noising checkpoints") {
    const auto e = make_experiment("dynamics", 600);
    std::string lines = "split.train = 500\nsplit.holdout = 100\nprobe.attributes = factor_0, factor_1\n"
                        "dynamics.alpha = 0.001\n";
    for (int t : {20, 10, 5, 0}) {
        synth::SynthModelSpec spec;
        spec.model_id = "ck";
        spec.kind = synth::ModelKind::Noising;
        spec.timestep = t;
        spec.seed = 11;
        const auto name = "ck" + std::to_string(t) + ".lsf";
        data::write_latents(synth::encode(spec, e.world.images), e.dir / name);
        lines += "checkpoint.t" + std::to_string(t) + " = " + name + "\n";
    }
    append(e.files.config, lines);
    const auto cfg = load_config(e.files.config);
    const auto out = e.dir / "out";
    const auto series = run_dynamics(cfg, {}, {1, out});
    CHECK(series.checkpoints == std::vector<std::string>{"t20", "t10", "t5", "t0"});
    REQUIRE(series.attributes.size() == 2);
    for (const auto& row : series.accuracy) CHECK(row.back() > row.front());
    CHECK(series.overall_plateau() <= 3);
    for (const char* f : {"dynamics.csv", "dynamics_plateau.csv", "dynamics_failures.csv", "dynamics_metadata.txt"})
        CHECK(std::filesystem::exists(out / f));
    const auto plateau = parse_csv(slurp(out / "dynamics_plateau.csv"));
    CHECK(plateau.rows.size() == 3);
    CHECK(plateau.rows.back()[0] == "*all*");

    // a reordered checkpoint gives the same numbers
    auto shuffled = data::read_latents(e.dir / "ck5.lsf");
    std::vector<Eigen::Index> rev(static_cast<std::size_t>(shuffled.size()));
    std::iota(rev.rbegin(), rev.rend(), 0);
    data::write_latents(data::take_rows(shuffled, rev), e.dir / "ck5_rev.lsf");
    auto ck = cfg.checkpoints;
    ck[2].latents = e.dir / "ck5_rev.lsf";
    const auto again = run_dynamics(cfg, ck);
    CHECK(again.accuracy == series.accuracy);
}

TEST_CASE("dynamics errors") {
    const auto e = make_experiment("dynamics_err");
    auto cfg = load_config(e.files.config);
    CHECK_ERROR(run_dynamics(cfg), ErrorCode::ConfigError);
    CHECK_ERROR(run_dynamics(cfg, {{"a", e.dir / "ortho_a.lsf"}}), ErrorCode::ConfigError);

    auto partial = data::read_latents(e.dir / "ortho_b.lsf");
    std::vector<Eigen::Index> first(280);
    std::iota(first.begin(), first.end(), 0);
    data::write_latents(data::take_rows(partial, first), e.dir / "partial.lsf");
    CHECK_ERROR(run_dynamics(cfg, {{"a", e.dir / "ortho_a.lsf"}, {"b", e.dir / "partial.lsf"}}),
                ErrorCode::InconsistentIds);
}

}  // TEST_SUITE
