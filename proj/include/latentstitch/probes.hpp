#pragma once

// Lasso linear probes for binary attributes, and the probe-based similarity
// metrics (match percentage, accuracy delta).

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "latentstitch/data.hpp"
#include "latentstitch/linalg.hpp"

namespace latentstitch::probes {

using linalg::Matrix;
using linalg::Vector;

/// Lasso regressor on {0, 1} labels, read as a classifier: label 1 iff
/// x.w + b >= threshold (ties go to 1).
struct Probe {
    std::string attribute;
    std::string model_id;
    Vector weight;
    double bias = 0.0;
    double alpha = 0.0;
    double threshold = 0.5;

    Eigen::Index dim() const { return weight.size(); }
};

/// Equal-size positive and negative id lists, each sorted.
struct BalancedSubset {
    std::vector<std::string> positive;
    std::vector<std::string> negative;
    Eigen::Index per_class = 0;

    std::vector<std::string> all_ids() const;
};

/// {-1, +1} annotations to {0, 1} labels.
std::vector<int> to_binary_labels(std::span<const std::int8_t> values);

/// Draws floor(0.8 * min(#pos, #neg)) samples per class without replacement.
/// `labels` are in {-1, +1} (or {0, 1}); the result depends only on the set
/// of (id, label) pairs and the seed, not on their order.
BalancedSubset balanced_subset(std::span<const std::string> ids, std::span<const std::int8_t> labels,
                               std::uint64_t seed);

/// Balanced evaluation set of min(per_class, available) per class, drawn
/// from the pool minus `exclude`.
BalancedSubset balanced_holdout(std::span<const std::string> ids, std::span<const std::int8_t> labels,
                                const BalancedSubset& exclude, Eigen::Index per_class,
                                std::uint64_t seed);

struct LassoOptions {
    double tol = 1e-6;
    int max_iter = 10000;
    /// Fit on unit-variance columns, then map the weights back to raw units.
    bool standardize = false;
    /// Called after every sweep with the objective (1/2n)||r||^2 + alpha||w||_1.
    std::function<void(int sweep, double objective)> on_sweep;
};

struct LassoFit {
    Probe probe;
    int sweeps = 0;
    /// Largest subgradient-optimality violation over columns, in the
    /// (centered, optionally standardized) coordinates that were optimized.
    double kkt_violation = 0.0;
    std::vector<Eigen::Index> skipped_columns;
};

/// Cyclic coordinate descent with soft-thresholding on
/// (1/2n)||y - X w - b||^2 + alpha ||w||_1, intercept unpenalized.
/// Zero-variance columns keep w_j = 0. Stops once a sweep moves no
/// coordinate by tol or more and the KKT violation is at most 10 * tol;
/// throws NoConvergence (message carries the final KKT violation) when
/// max_iter sweeps are exhausted.
LassoFit fit_lasso_detailed(const Eigen::Ref<const Matrix>& x, std::span<const int> labels,
                            double alpha, const LassoOptions& options = {});
Probe fit_lasso(const Eigen::Ref<const Matrix>& x, std::span<const int> labels, double alpha,
                const LassoOptions& options = {});

/// max_j |<x_j - mean, y - mean(y)>| / n: the smallest alpha with w = 0.
double lasso_alpha_max(const Eigen::Ref<const Matrix>& x, std::span<const int> labels);

Vector decision_values(const Probe& p, const Eigen::Ref<const Matrix>& x);
std::vector<int> predict(const Probe& p, const Eigen::Ref<const Matrix>& x);
double accuracy(const Probe& p, const Eigen::Ref<const Matrix>& x, std::span<const int> labels);

/// 100 * fraction of rows where predictions on native and mapped latents agree.
double match_percent(const Probe& p, const Eigen::Ref<const Matrix>& native,
                     const Eigen::Ref<const Matrix>& mapped);

/// Signed percent change 100 * (mapped - native) / native.
double accuracy_delta(double acc_native, double acc_mapped);

inline constexpr std::uint32_t kLprbVersion = 1;
std::string encode_probe(const Probe& p);
Probe decode_probe(std::string_view bytes);
void write_probe(const Probe& p, const std::filesystem::path& path);
Probe read_probe(const std::filesystem::path& path);

}  // namespace latentstitch::probes
