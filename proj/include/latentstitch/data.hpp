#pragma once

// Dataset ingestion: LSF latent/pixel files, CelebA-style attribute tables,
// id alignment, the stored-order train/holdout split and the random-encoder
// baseline.

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "latentstitch/linalg.hpp"

namespace latentstitch::data {

using Index = Eigen::Index;
using FloatMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr std::uint32_t kLsfVersion = 1;
inline constexpr std::string_view kPixelsModelId = "pixels";

/// n x d latent vectors of one model, one row per sample id.
struct LatentDataset {
    std::string model_id;
    std::vector<std::string> ids;
    FloatMatrix values;

    Index size() const { return values.rows(); }
    Index dim() const { return values.cols(); }
    linalg::Matrix to_double() const { return values.cast<double>(); }

    /// Throws on |ids| != n, duplicate ids, non-finite values or d == 0.
    void validate() const;
};

struct ImageShape {
    std::uint16_t height = 64;
    std::uint16_t width = 64;
    std::uint16_t channels = 3;

    Index size() const { return Index{height} * width * channels; }
    bool operator==(const ImageShape&) const = default;

    /// Picks (s, s, 3), then (s, s, 1), then (n, 1, 1) for a flat pixel count.
    static ImageShape for_pixel_count(Index count);
};

/// Flattened images in [0, 1], n x (H*W*C).
struct ImageDataset {
    std::vector<std::string> ids;
    FloatMatrix pixels;
    ImageShape shape;

    Index size() const { return pixels.rows(); }
    void validate() const;
};

/// Binary annotations in {-1, +1}, stored row-major (n x k) exactly as read.
struct AttributeTable {
    std::vector<std::string> names;
    std::vector<std::string> ids;
    std::vector<std::int8_t> values;

    Index size() const { return static_cast<Index>(ids.size()); }
    Index num_attributes() const { return static_cast<Index>(names.size()); }
    std::int8_t at(Index row, Index col) const {
        return values[static_cast<std::size_t>(row * num_attributes() + col)];
    }
    std::optional<Index> column_index(std::string_view name) const;
    /// Throws ConfigError for an unknown attribute name.
    std::vector<std::int8_t> column(std::string_view name) const;
};

// LSF: "LSF1", u32 version, u32 n, u32 d, u16+utf8 model id, [u16 H, W, C
// when model id is "pixels"], n x (u16+utf8 id), n*d little-endian float32.
std::string encode_latents(const LatentDataset& ds);
LatentDataset decode_latents(std::string_view bytes);
LatentDataset read_latents(const std::filesystem::path& path);
void write_latents(const LatentDataset& ds, const std::filesystem::path& path);

std::string encode_images(const ImageDataset& ds);
ImageDataset decode_images(std::string_view bytes);
ImageDataset read_images(const std::filesystem::path& path);
void write_images(const ImageDataset& ds, const std::filesystem::path& path);

/// CelebA list-attr layout: count line, names line, then "id v1 ... vk" rows.
AttributeTable parse_attribute_table(std::string_view text);
std::string format_attribute_table(const AttributeTable& table);
AttributeTable read_attribute_table(const std::filesystem::path& path);
void write_attribute_table(const AttributeTable& table, const std::filesystem::path& path);

/// Row indices pairing two id lists; ordered by `a`, restricted to the
/// intersection. Throws EmptyIntersection.
struct Alignment {
    std::vector<Index> rows_a;
    std::vector<Index> rows_b;

    std::size_t size() const { return rows_a.size(); }
    bool is_identity(Index n_a, Index n_b) const;
};

Alignment align_ids(std::span<const std::string> a, std::span<const std::string> b);

LatentDataset take_rows(const LatentDataset& ds, std::span<const Index> rows);
ImageDataset take_rows(const ImageDataset& ds, std::span<const Index> rows);
AttributeTable take_rows(const AttributeTable& table, std::span<const Index> rows);

std::pair<LatentDataset, LatentDataset> align(const LatentDataset& a, const LatentDataset& b);
std::pair<LatentDataset, AttributeTable> align(const LatentDataset& a, const AttributeTable& b);
std::pair<LatentDataset, ImageDataset> align(const LatentDataset& a, const ImageDataset& b);

struct SplitSpec {
    Index n_train = 9000;
    Index n_holdout = 100;
};

/// Train = first n_train rows as stored, holdout = the next n_holdout.
struct RowSplit {
    std::vector<Index> train;
    std::vector<Index> holdout;
};

RowSplit split_rows(Index n, const SplitSpec& spec);
std::pair<LatentDataset, LatentDataset> split(const LatentDataset& ds, const SplitSpec& spec);

/// Per-id standard Gaussian vectors seeded by (seed, hash(id)); the vector
/// for an id does not depend on its position in `ids`.
LatentDataset random_encoder(std::span<const std::string> ids, Index dim = 512,
                             std::uint64_t seed = 0, std::string model_id = "random");

/// Standard normal draws for one id; shared by the random encoder and the
/// synthetic noising model.
void fill_gaussian(std::span<float> out, std::uint64_t seed, std::string_view id);
void fill_gaussian(std::span<double> out, std::uint64_t seed, std::string_view id);

}  // namespace latentstitch::data
