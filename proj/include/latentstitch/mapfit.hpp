#pragma once

// Affine stitching maps between latent spaces, fitted in closed form.

#include <filesystem>
#include <map>
#include <string>
#include <utility>

#include "latentstitch/data.hpp"
#include "latentstitch/linalg.hpp"

namespace latentstitch::mapfit {

using linalg::Matrix;
using linalg::Vector;

/// y = W x + b, W is d_out x d_in.
struct LinearMap {
    std::string source_model;
    std::string target_model;
    Matrix weight;
    Vector bias;
    double alpha = 0.0;

    Eigen::Index input_dim() const { return weight.cols(); }
    Eigen::Index output_dim() const { return weight.rows(); }
};

/// Ridge strength per ordered (source, target) pair; unlisted pairs are 0.
class AlphaRegistry {
public:
    void set(const std::string& source, const std::string& target, double alpha);
    double lookup(const std::string& source, const std::string& target) const;
    const std::map<std::pair<std::string, std::string>, double>& entries() const { return entries_; }

private:
    std::map<std::pair<std::string, std::string>, double> entries_;
};

/// Hand-tuned strengths for maps out of the DM and NF latent spaces.
AlphaRegistry default_alphas();

/// Minimizes ||Y - X W^T - 1 b^T||_F^2 + alpha ||W||_F^2 with b unpenalized,
/// solving (Xc^T Xc + alpha I) W^T = Xc^T Yc on column-centered data.
/// alpha == 0 is ordinary least squares; rank deficiency surfaces as NotSPD.
LinearMap fit_ridge(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& y,
                    double alpha);
LinearMap fit_ols(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& y);

/// Minimum-norm least squares through a complete orthogonal decomposition of
/// Xc. Used when fit_ols reports NotSPD.
LinearMap fit_lstsq(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& y);

struct FitReport {
    LinearMap map;
    bool used_lstsq_fallback = false;
};

/// fit_ridge, falling back to fit_lstsq when alpha == 0 and the normal
/// equations are singular.
FitReport fit_map(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& y,
                  double alpha);

/// Fits on row-aligned datasets and stamps the model ids onto the map.
FitReport fit_map(const data::LatentDataset& source, const data::LatentDataset& target,
                  double alpha);

Matrix apply_map(const LinearMap& m, const Eigen::Ref<const Matrix>& x);
data::LatentDataset apply_map(const LinearMap& m, const data::LatentDataset& source);

/// The affine map x -> second(first(x)).
LinearMap compose(const LinearMap& first, const LinearMap& second);

/// Mean over all n*d entries of the squared difference.
double latent_mse(const Eigen::Ref<const Matrix>& predicted, const Eigen::Ref<const Matrix>& target);

// LMAP: "LMAP", u32 version, u16+utf8 source, u16+utf8 target, f64 alpha,
// u32 d_in, u32 d_out, d_out f64 bias, d_out*d_in f64 weight row-major.
inline constexpr std::uint32_t kLmapVersion = 1;
std::string encode_map(const LinearMap& m);
LinearMap decode_map(std::string_view bytes);
void write_map(const LinearMap& m, const std::filesystem::path& path);
LinearMap read_map(const std::filesystem::path& path);

}  // namespace latentstitch::mapfit
