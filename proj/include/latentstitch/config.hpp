#pragma once

// Line-oriented "key = value" experiment configuration. '#' starts a comment.
// Relative paths resolve against the config file's directory.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "latentstitch/data.hpp"
#include "latentstitch/mapfit.hpp"
#include "latentstitch/synth.hpp"

namespace latentstitch::pipeline {

using ModelPair = std::pair<std::string, std::string>;

struct ModelEntry {
    std::string id;
    std::filesystem::path latents;
    /// Decoder-only models (GAN-style) have latents only for their own
    /// generated samples and get no probes.
    bool decoder_only = false;
    /// Present when the model decodes in-process (synthetic harness).
    std::optional<synth::SynthModelSpec> synth;
};

struct Checkpoint {
    std::string label;
    std::filesystem::path latents;
};

struct ExperimentConfig {
    std::vector<ModelEntry> models;
    std::filesystem::path pixels;
    std::filesystem::path attributes;
    data::SplitSpec split;
    mapfit::AlphaRegistry alphas = mapfit::default_alphas();
    std::map<std::string, double> probe_alpha;
    std::vector<std::string> attribute_subset;
    std::uint64_t seed = 0;
    double plateau_eps = 0.01;
    Eigen::Index probe_holdout_per_class = 100;
    bool probe_standardize = false;
    int probe_max_iter = 10000;
    bool fid_enabled = true;
    std::map<ModelPair, std::filesystem::path> decoded;
    std::map<ModelPair, double> lpips;
    std::vector<Checkpoint> checkpoints;
    std::optional<double> dynamics_alpha;

    const ModelEntry* find_model(std::string_view id) const;
};

/// Throws ConfigError with the offending line number.
ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
/// Also checks that every referenced file exists.
ExperimentConfig load_config(const std::filesystem::path& path);
void check_files_exist(const ExperimentConfig& config);

/// Lasso strength for probes on a latent space: explicit config entry, else
/// VAE/VQVAE 0.005, DM 0.02, NF 0.1, else 0.01 (and a warning is appended).
double probe_alpha_for(const ExperimentConfig& config, const std::string& model_id,
                       std::vector<std::string>* warnings = nullptr);

}  // namespace latentstitch::pipeline
