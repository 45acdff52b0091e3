#pragma once

// Reconstruction metrics: pixel RMSE and the Frechet distance between
// Gaussian summaries of two feature sets.

#include "latentstitch/data.hpp"
#include "latentstitch/linalg.hpp"

namespace latentstitch::metrics {

using linalg::Matrix;
using linalg::Vector;

/// sqrt of the mean squared difference over every sample, pixel and channel.
double pixel_rmse(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b);
/// Same, after aligning `b` to `a` by sample id. Shapes must agree.
double pixel_rmse(const data::ImageDataset& a, const data::ImageDataset& b);

struct GaussianSummary {
    Vector mean;
    Matrix covariance;  // unbiased, divisor n - 1
    Eigen::Index count = 0;
};

GaussianSummary summarize(const Eigen::Ref<const Matrix>& features);

/// ||mu_p - mu_q||^2 + tr(S_p + S_q - 2 (S_p^1/2 S_q S_p^1/2)^1/2).
///
/// When either summary has fewer samples than dimensions, each covariance
/// gets eps*I with eps = 1e-6 * its mean diagonal. Small negative results
/// (rounding, relative to 1 + tr S_p + tr S_q) are clamped to 0.
double fid(const GaussianSummary& p, const GaussianSummary& q);
double fid(const Eigen::Ref<const Matrix>& features_p, const Eigen::Ref<const Matrix>& features_q);

}  // namespace latentstitch::metrics
