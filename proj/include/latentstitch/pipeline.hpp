#pragma once

// Experiment orchestration: stitching grids over ordered encoder/decoder
// pairs, probe suites, training-dynamics runs and their CSV reports.

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "latentstitch/config.hpp"
#include "latentstitch/error.hpp"
#include "latentstitch/mapfit.hpp"
#include "latentstitch/probes.hpp"
#include "latentstitch/report.hpp"

namespace latentstitch::pipeline {

struct RunOptions {
    int threads = 1;
    /// Reports, maps and probes are written here when non-empty.
    std::filesystem::path out_dir;
};

/// A cell (or probe) that failed; other cells are unaffected.
struct CellFailure {
    std::string row;
    std::string col;
    std::string stage;
    ErrorCode code;
    std::string message;
};

/// Runs task(i) for i in [0, count) on up to `threads` workers. Results must
/// be written to per-index slots; the first exception is rethrown.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& task);

/// Fits the stitching map for an ordered pair exactly as the grid does:
/// align by id, take the stored-order train split, ridge alpha from the
/// registry (least-squares fallback when alpha = 0 is singular).
mapfit::FitReport fit_stitch_map(const data::LatentDataset& source, const data::LatentDataset& target,
                                 const ExperimentConfig& config);

struct StitchGridResult {
    MetricGrid latent_mse;
    MetricGrid pixel_rmse;
    MetricGrid fid;
    std::optional<MetricGrid> lpips;
    std::vector<CellFailure> failures;
    std::vector<std::string> metadata;  // "key=value" lines
};

/// Every ordered (encoder, decoder) pair, diagonal included. Latent MSE is
/// measured on the holdout split against the decoder's own latents; pixel
/// metrics need a decoder (in-process or re-ingested external decodes).
StitchGridResult run_stitch_grid(const ExperimentConfig& config, const RunOptions& options = {});

struct ProbeRecord {
    std::string model;
    std::string attribute;
    double alpha = 0.0;
    Eigen::Index train_per_class = 0;
    std::optional<double> holdout_accuracy;
};

struct ProbeSuiteResult {
    std::vector<ProbeRecord> records;
    MetricGrid accuracy;  // model x attribute
    MetricGrid match;     // "source->target" x attribute, percent
    MetricGrid delta;     // "source->target" x attribute, signed percent
    std::vector<CellFailure> failures;
    std::vector<std::string> metadata;
};

struct TrainedProbe {
    probes::Probe probe;
    probes::BalancedSubset train;
    probes::BalancedSubset holdout;
    double accuracy = 0.0;  // on `holdout`
    /// Balanced draw from the stitching holdout split (rows no map is fitted
    /// on); match and accuracy delta are measured here. Empty when that split
    /// lacks one of the classes.
    std::optional<probes::BalancedSubset> evaluation;
};

/// One probe as the suite trains it: the pool is the train split of the
/// latents aligned with the attribute table; the balanced train set, the
/// holdout and the evaluation set are drawn with the seed
/// mix_seed(config.seed, attribute).
TrainedProbe train_probe(const data::LatentDataset& latents, const data::AttributeTable& table,
                         const std::string& attribute, double alpha, const ExperimentConfig& config);

ProbeSuiteResult run_probe_suite(const ExperimentConfig& config, const RunOptions& options = {});

/// First index i such that every later increment series[j] - series[j-1]
/// (j > i) is below eps. A series of length 1 plateaus at 0.
std::size_t plateau_index(std::span<const double> series, double eps);

struct DynamicsSeries {
    std::vector<std::string> checkpoints;
    std::vector<std::string> attributes;
    std::vector<std::vector<double>> accuracy;  // [attribute][checkpoint]
    std::vector<std::size_t> plateau;           // per attribute
    std::vector<CellFailure> failures;

    /// Checkpoint index by which every attribute has plateaued.
    std::size_t overall_plateau() const;
};

/// Retrains probes at each checkpoint. Checkpoints come from `checkpoints`
/// when given, else from config.checkpoints. Throws InconsistentIds when
/// checkpoints cover different samples.
DynamicsSeries run_dynamics(const ExperimentConfig& config, std::vector<Checkpoint> checkpoints = {},
                            const RunOptions& options = {});

CsvTable probe_report_table(const std::vector<ProbeRecord>& records);
CsvTable failures_table(const std::vector<CellFailure>& failures);
MetricGrid dynamics_grid(const DynamicsSeries& series);
CsvTable plateau_table(const DynamicsSeries& series, double eps);

}  // namespace latentstitch::pipeline
