#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "latentstitch/data.hpp"
#include "latentstitch/error.hpp"
#include "latentstitch/mapfit.hpp"
#include "latentstitch/metrics.hpp"
#include "latentstitch/pipeline.hpp"
#include "latentstitch/probes.hpp"
#include "latentstitch/synth.hpp"

namespace py = pybind11;
namespace ls = latentstitch;
using ls::linalg::Matrix;

PYBIND11_MODULE(_core, m) {
    m.doc() = "Latent-space stitching, probes and reconstruction metrics";

    // messages start with the error code name, e.g. "NotSPD: ..."
    py::register_exception<ls::Error>(m, "LatentStitchError");

    // maps
    py::class_<ls::mapfit::LinearMap>(m, "LinearMap")
        .def_readonly("source_model", &ls::mapfit::LinearMap::source_model)
        .def_readonly("target_model", &ls::mapfit::LinearMap::target_model)
        .def_readonly("weight", &ls::mapfit::LinearMap::weight)
        .def_readonly("bias", &ls::mapfit::LinearMap::bias)
        .def_readonly("alpha", &ls::mapfit::LinearMap::alpha)
        .def("__call__", [](const ls::mapfit::LinearMap& map, const Matrix& x) { return ls::mapfit::apply_map(map, x); });

    m.def("fit_ridge", &ls::mapfit::fit_ridge, py::arg("x"), py::arg("y"), py::arg("alpha"));
    m.def("fit_lstsq", &ls::mapfit::fit_lstsq, py::arg("x"), py::arg("y"));
    m.def(
        "fit_map",
        [](const Matrix& x, const Matrix& y, double alpha) {
            const auto r = ls::mapfit::fit_map(x, y, alpha);
            return py::make_tuple(r.map, r.used_lstsq_fallback);
        },
        py::arg("x"), py::arg("y"), py::arg("alpha") = 0.0,
        "Returns (map, used_lstsq_fallback).");
    m.def(
        "apply_map", [](const ls::mapfit::LinearMap& map, const Matrix& x) { return ls::mapfit::apply_map(map, x); },
        py::arg("map"), py::arg("x"));
    m.def("latent_mse", &ls::mapfit::latent_mse, py::arg("predicted"), py::arg("target"));
    m.def("read_map", &ls::mapfit::read_map, py::arg("path"));
    m.def("write_map", &ls::mapfit::write_map, py::arg("map"), py::arg("path"));
    m.def(
        "default_alpha",
        [](const std::string& source, const std::string& target) {
            return ls::mapfit::default_alphas().lookup(source, target);
        },
        py::arg("source"), py::arg("target"));

    // probes
    py::class_<ls::probes::Probe>(m, "Probe")
        .def_readonly("attribute", &ls::probes::Probe::attribute)
        .def_readonly("model_id", &ls::probes::Probe::model_id)
        .def_readonly("weight", &ls::probes::Probe::weight)
        .def_readonly("bias", &ls::probes::Probe::bias)
        .def_readonly("alpha", &ls::probes::Probe::alpha)
        .def_readonly("threshold", &ls::probes::Probe::threshold);

    m.def(
        "fit_lasso",
        [](const Matrix& x, const std::vector<int>& y, double alpha, double tol, int max_iter, bool standardize) {
            ls::probes::LassoOptions opt;
            opt.tol = tol;
            opt.max_iter = max_iter;
            opt.standardize = standardize;
            return ls::probes::fit_lasso(x, y, alpha, opt);
        },
        py::arg("x"), py::arg("labels"), py::arg("alpha"), py::arg("tol") = 1e-6, py::arg("max_iter") = 10000,
        py::arg("standardize") = false);
    m.def(
        "lasso_alpha_max", [](const Matrix& x, const std::vector<int>& y) { return ls::probes::lasso_alpha_max(x, y); },
        py::arg("x"), py::arg("labels"));
    m.def(
        "predict", [](const ls::probes::Probe& p, const Matrix& x) { return ls::probes::predict(p, x); },
        py::arg("probe"), py::arg("x"));
    m.def(
        "accuracy",
        [](const ls::probes::Probe& p, const Matrix& x, const std::vector<int>& y) {
            return ls::probes::accuracy(p, x, y);
        },
        py::arg("probe"), py::arg("x"), py::arg("labels"));
    m.def(
        "match_percent",
        [](const ls::probes::Probe& p, const Matrix& native, const Matrix& mapped) {
            return ls::probes::match_percent(p, native, mapped);
        },
        py::arg("probe"), py::arg("native"), py::arg("mapped"));
    m.def("accuracy_delta", &ls::probes::accuracy_delta, py::arg("acc_native"), py::arg("acc_mapped"));
    m.def(
        "balanced_subset",
        [](const std::vector<std::string>& ids, const std::vector<std::int8_t>& labels, std::uint64_t seed) {
            const auto s = ls::probes::balanced_subset(ids, labels, seed);
            return py::make_tuple(s.positive, s.negative);
        },
        py::arg("ids"), py::arg("labels"), py::arg("seed"), "Returns (positive_ids, negative_ids).");
    m.def("read_probe", &ls::probes::read_probe, py::arg("path"));

    // metrics
    m.def(
        "pixel_rmse", [](const Matrix& a, const Matrix& b) { return ls::metrics::pixel_rmse(a, b); }, py::arg("a"),
        py::arg("b"));
    m.def(
        "fid", [](const Matrix& a, const Matrix& b) { return ls::metrics::fid(a, b); }, py::arg("features_p"),
        py::arg("features_q"));
    m.def(
        "plateau_index", [](const std::vector<double>& s, double eps) { return ls::pipeline::plateau_index(s, eps); },
        py::arg("series"), py::arg("eps"));

    // files
    m.def(
        "read_latents",
        [](const std::filesystem::path& path) {
            const auto ds = ls::data::read_latents(path);
            return py::make_tuple(ds.model_id, ds.ids, ds.to_double());
        },
        py::arg("path"), "Returns (model_id, ids, values).");
    m.def(
        "write_latents",
        [](const std::filesystem::path& path, const std::string& model_id, const std::vector<std::string>& ids,
           const Matrix& values) {
            ls::data::write_latents({model_id, ids, values.cast<float>()}, path);
        },
        py::arg("path"), py::arg("model_id"), py::arg("ids"), py::arg("values"));
    m.def(
        "generate_synthetic",
        [](const std::filesystem::path& out, Eigen::Index n, Eigen::Index k, Eigen::Index d_pix, std::uint64_t seed,
           Eigen::Index n_train, Eigen::Index n_holdout) {
            const auto world = ls::synth::gen_world(n, k, d_pix, seed);
            return ls::synth::emit_datasets(world, ls::synth::default_roster(k, seed), out, {n_train, n_holdout})
                .config;
        },
        py::arg("out_dir"), py::arg("n") = 2200, py::arg("k") = 8, py::arg("d_pix") = 256, py::arg("seed") = 0,
        py::arg("n_train") = 2000, py::arg("n_holdout") = 200, "Writes a synthetic experiment; returns its config path.");
}
