#pragma once

// Synthetic "generative models" over a known factor world. Every image is an
// affine function of k Gaussian factors, and every attribute is the sign of
// one factor, so stitchability and probe accuracy have exact expectations.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "latentstitch/data.hpp"
#include "latentstitch/linalg.hpp"

namespace latentstitch::synth {

using linalg::Matrix;
using linalg::Vector;
using Index = Eigen::Index;

enum class Squash {
    Affine,   // 0.5 + s * signal, s chosen so the world fits in [0, 1]
    Sigmoid,  // logistic of the signal in units of its RMS
};

struct FactorWorld {
    std::vector<std::string> ids;
    Matrix factors;  // n x k, standard Gaussian
    Matrix mixing;   // d_pix x k, orthonormal columns
    data::AttributeTable attributes;
    data::ImageDataset images;
    Squash squash = Squash::Affine;
    double pixel_scale = 0.0;
    std::uint64_t seed = 0;

    Index size() const { return factors.rows(); }
    Index num_factors() const { return factors.cols(); }
    Index pixel_dim() const { return mixing.rows(); }
};

/// Deterministic in (n, k, d_pix, seed). Ids are "s000000", "s000001", ...
FactorWorld gen_world(Index n, Index k, Index d_pix, std::uint64_t seed,
                      Squash squash = Squash::Affine);

enum class ModelKind { Orthogonal, Lossy, Random, Noising };

std::string_view to_string(ModelKind kind) noexcept;
/// Throws ConfigError for an unknown name.
ModelKind parse_kind(std::string_view name);

/// Linear-beta forward process. `timestep` t in [0, steps_used] indexes the
/// DDIM-style grid; the underlying diffusion step is t * total_steps / steps_used.
struct NoisingSchedule {
    int total_steps = 1000;
    int steps_used = 50;
    double beta_start = 1e-4;
    double beta_end = 0.02;

    double beta(int step) const;  // step in [1, total_steps]
    int diffusion_step(int timestep) const;
    double alphabar(int timestep) const;  // prod_{s <= step} (1 - beta_s); 1 at t = 0
};

struct SynthModelSpec {
    std::string model_id;
    ModelKind kind = ModelKind::Orthogonal;
    Index dim = 0;  // 0 means "pixel dimension" for orthogonal / noising, 512 for random
    std::uint64_t seed = 0;
    Index rank = 0;  // lossy only
    int timestep = 0;  // noising only
    NoisingSchedule schedule;
    bool decoder_only = false;

    /// Latent dimension once the pixel dimension is known.
    Index latent_dim(Index pixel_dim) const;
};

/// Orthogonal kind: d x d_pix with orthonormal rows.
Matrix orthogonal_rows(const SynthModelSpec& spec, Index pixel_dim);
/// Lossy kind: pixel basis (d_pix x r) and latent embedding (d x r), both
/// with orthonormal columns.
std::pair<Matrix, Matrix> lossy_bases(const SynthModelSpec& spec, Index pixel_dim);

/// Double-precision kernels behind encode/decode. `ids` seed the noise of
/// the noising kind and the vectors of the random kind; decode_values clamps
/// to [0, 1] and throws Undecodable for the random kind.
Matrix encode_values(const SynthModelSpec& spec, const Eigen::Ref<const Matrix>& pixels,
                     std::span<const std::string> ids);
Matrix decode_values(const SynthModelSpec& spec, const Eigen::Ref<const Matrix>& latents, Index pixel_dim);

/// orthogonal: x Q^T; lossy: (x - 0.5) B E^T; random: data::random_encoder;
/// noising: sqrt(abar) x + sqrt(1 - abar) eps with eps seeded per sample id.
data::LatentDataset encode(const SynthModelSpec& spec, const data::ImageDataset& images);

/// Linear inverse of encode (0.5 + z E B^T for lossy, 1/sqrt(abar) rescale
/// for noising), clamped to [0, 1]. Random kind throws Undecodable.
data::ImageDataset decode(const SynthModelSpec& spec, const data::LatentDataset& latents,
                          const data::ImageShape& shape);

bool decodable(const SynthModelSpec& spec) noexcept;

struct EmittedFiles {
    std::filesystem::path images;
    std::filesystem::path attributes;
    std::filesystem::path manifest;
    std::filesystem::path config;
    std::vector<std::filesystem::path> latents;  // one per spec, same order
};

/// Writes <id>.lsf per spec, pixels.lsf, attributes.txt (CelebA layout),
/// manifest.txt and experiment.cfg (a ready-to-run pipeline config).
EmittedFiles emit_datasets(const FactorWorld& world, const std::vector<SynthModelSpec>& specs,
                           const std::filesystem::path& out_dir, const data::SplitSpec& split);

/// Probe lasso strength written into emitted configs. Synthetic latents
/// correlate with each label by about 1e-2 per coordinate, so the defaults
/// tuned for real latent spaces would shrink most of the signal away.
inline constexpr double kSynthProbeAlpha = 1e-3;

/// A five-model roster: two orthogonal spaces, a lossy one, a noising one
/// and the random-encoder baseline.
std::vector<SynthModelSpec> default_roster(Index num_factors, std::uint64_t seed);

}  // namespace latentstitch::synth
