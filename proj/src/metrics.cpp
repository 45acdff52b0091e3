#include "latentstitch/metrics.hpp"

#include <cmath>

#include "latentstitch/error.hpp"

namespace latentstitch::metrics {

double pixel_rmse(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b) {
    require(a.rows() == b.rows() && a.cols() == b.cols(), ErrorCode::DimensionMismatch,
            "pixel_rmse: shapes differ");
    require(a.size() > 0, ErrorCode::EmptySet, "pixel_rmse: empty input");
    return std::sqrt((a - b).squaredNorm() / static_cast<double>(a.size()));
}

double pixel_rmse(const data::ImageDataset& a, const data::ImageDataset& b) {
    require(a.shape == b.shape, ErrorCode::DimensionMismatch, "pixel_rmse: image shapes differ");
    const auto al = data::align_ids(a.ids, b.ids);
    require(al.size() == a.ids.size() && al.size() == b.ids.size(), ErrorCode::InconsistentIds,
            "pixel_rmse: image sets cover different samples");
    const auto pa = data::take_rows(a, al.rows_a);
    const auto pb = data::take_rows(b, al.rows_b);
    return pixel_rmse(pa.pixels.cast<double>(), pb.pixels.cast<double>());
}

GaussianSummary summarize(const Eigen::Ref<const Matrix>& features) {
    require(features.rows() >= 2, ErrorCode::TooFewSamples,
            "summarize needs at least 2 samples, got " + std::to_string(features.rows()));
    require(features.allFinite(), ErrorCode::NonFiniteValue, "feature matrix");
    GaussianSummary s;
    s.count = features.rows();
    s.mean = features.colwise().mean().transpose();
    const Matrix centered = features.rowwise() - s.mean.transpose();
    const Eigen::Index d = features.cols();
    s.covariance = Matrix::Zero(d, d);
    s.covariance.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose(),
                                                            1.0 / static_cast<double>(s.count - 1));
    s.covariance.triangularView<Eigen::StrictlyUpper>() = s.covariance.transpose();
    return s;
}

double fid(const GaussianSummary& p, const GaussianSummary& q) {
    const Eigen::Index d = p.mean.size();
    require(q.mean.size() == d && p.covariance.rows() == d && q.covariance.rows() == d,
            ErrorCode::DimensionMismatch, "fid: summaries have different dimensions");

    Matrix sp = p.covariance;
    Matrix sq = q.covariance;
    if (p.count < d || q.count < d) {
        sp.diagonal().array() += 1e-6 * sp.diagonal().mean();
        sq.diagonal().array() += 1e-6 * sq.diagonal().mean();
    }

    const Matrix root_p = linalg::psd_sqrt(sp);
    Matrix inner = root_p * sq * root_p;
    inner = 0.5 * (inner + inner.transpose());
    const double cross = linalg::psd_sqrt(inner).trace();

    const double value = (p.mean - q.mean).squaredNorm() + sp.trace() + sq.trace() - 2.0 * cross;
    if (value < 0.0) {
        require(value >= -1e-6 * (1.0 + sp.trace() + sq.trace()), ErrorCode::NotPSD,
                "fid: trace term went negative (" + std::to_string(value) + ")");
        return 0.0;
    }
    return value;
}

double fid(const Eigen::Ref<const Matrix>& features_p, const Eigen::Ref<const Matrix>& features_q) {
    return fid(summarize(features_p), summarize(features_q));
}

}  // namespace latentstitch::metrics
