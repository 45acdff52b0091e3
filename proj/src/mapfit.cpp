#include "latentstitch/mapfit.hpp"

#include <cmath>
#include <cstring>

#include "binary_io.hpp"
#include "latentstitch/error.hpp"

namespace latentstitch::mapfit {

namespace {

constexpr char kLmapMagic[4] = {'L', 'M', 'A', 'P'};

void check_pair(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& y) {
    require(x.rows() == y.rows(), ErrorCode::DimensionMismatch,
            "design has " + std::to_string(x.rows()) + " rows, target has " +
                std::to_string(y.rows()));
    require(x.rows() >= 1 && x.cols() >= 1 && y.cols() >= 1, ErrorCode::DimensionMismatch,
            "empty design or target");
    require(x.allFinite() && y.allFinite(), ErrorCode::NonFiniteValue, "map fit input");
}

struct Centered {
    Matrix x;
    Matrix y;
    Vector x_mean;
    Vector y_mean;
};

Centered center(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& y) {
    Centered c;
    c.x_mean = x.colwise().mean().transpose();
    c.y_mean = y.colwise().mean().transpose();
    c.x = x.rowwise() - c.x_mean.transpose();
    c.y = y.rowwise() - c.y_mean.transpose();
    return c;
}

LinearMap from_transposed_weight(const Matrix& weight_t, const Centered& c, double alpha) {
    LinearMap m;
    m.weight = weight_t.transpose();
    m.bias = c.y_mean - m.weight * c.x_mean;
    m.alpha = alpha;
    return m;
}

}  // namespace

// ---------------------------------------------------------------------------

void AlphaRegistry::set(const std::string& source, const std::string& target, double alpha) {
    require(std::isfinite(alpha) && alpha >= 0.0, ErrorCode::ConfigError,
            "ridge alpha for " + source + "->" + target + " must be finite and >= 0");
    entries_[{source, target}] = alpha;
}

double AlphaRegistry::lookup(const std::string& source, const std::string& target) const {
    const auto it = entries_.find({source, target});
    return it == entries_.end() ? 0.0 : it->second;
}

AlphaRegistry default_alphas() {
    AlphaRegistry r;
    r.set("DM", "GAN", 2000);
    r.set("DM", "VAE", 100);
    r.set("DM", "VQVAE", 5000);
    r.set("DM", "NF", 5000);
    r.set("NF", "GAN", 50000);
    r.set("NF", "VAE", 5000);
    r.set("NF", "VQVAE", 50000);
    r.set("NF", "DM", 50000);
    return r;
}

// ---------------------------------------------------------------------------

LinearMap fit_ridge(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& y,
                    double alpha) {
    check_pair(x, y);
    require(std::isfinite(alpha) && alpha >= 0.0, ErrorCode::ConfigError,
            "ridge alpha must be finite and >= 0");
    const Centered c = center(x, y);

    const Eigen::Index d_in = x.cols();
    Matrix gram = Matrix::Zero(d_in, d_in);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(c.x.transpose());
    gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
    gram.diagonal().array() += alpha;

    const Matrix cross = c.x.transpose() * c.y;
    return from_transposed_weight(linalg::spd_solve(gram, cross), c, alpha);
}

LinearMap fit_ols(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& y) {
    return fit_ridge(x, y, 0.0);
}

LinearMap fit_lstsq(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& y) {
    check_pair(x, y);
    const Centered c = center(x, y);
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(c.x);
    return from_transposed_weight(cod.solve(c.y), c, 0.0);
}

FitReport fit_map(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& y,
                  double alpha) {
    try {
        return {fit_ridge(x, y, alpha), false};
    } catch (const Error& e) {
        if (e.code() != ErrorCode::NotSPD || alpha != 0.0) throw;
    }
    return {fit_lstsq(x, y), true};
}

FitReport fit_map(const data::LatentDataset& source, const data::LatentDataset& target,
                  double alpha) {
    require(source.ids == target.ids, ErrorCode::InconsistentIds,
            "map fit needs row-aligned datasets (" + source.model_id + ", " + target.model_id + ")");
    FitReport report = fit_map(source.to_double(), target.to_double(), alpha);
    report.map.source_model = source.model_id;
    report.map.target_model = target.model_id;
    return report;
}

// ---------------------------------------------------------------------------

Matrix apply_map(const LinearMap& m, const Eigen::Ref<const Matrix>& x) {
    require(x.cols() == m.input_dim(), ErrorCode::DimensionMismatch,
            "map expects " + std::to_string(m.input_dim()) + " input dims, got " +
                std::to_string(x.cols()));
    Matrix out = x * m.weight.transpose();
    out.rowwise() += m.bias.transpose();
    return out;
}

data::LatentDataset apply_map(const LinearMap& m, const data::LatentDataset& source) {
    return {m.target_model, source.ids, apply_map(m, source.to_double()).cast<float>()};
}

LinearMap compose(const LinearMap& first, const LinearMap& second) {
    require(second.input_dim() == first.output_dim(), ErrorCode::DimensionMismatch,
            "cannot compose maps with mismatched inner dimension");
    LinearMap out;
    out.source_model = first.source_model;
    out.target_model = second.target_model;
    out.weight = second.weight * first.weight;
    out.bias = second.weight * first.bias + second.bias;
    return out;
}

double latent_mse(const Eigen::Ref<const Matrix>& predicted, const Eigen::Ref<const Matrix>& target) {
    require(predicted.rows() == target.rows() && predicted.cols() == target.cols(),
            ErrorCode::DimensionMismatch, "latent_mse: shape mismatch");
    require(predicted.size() > 0, ErrorCode::EmptySet, "latent_mse: empty input");
    return (predicted - target).squaredNorm() / static_cast<double>(predicted.size());
}

// ---------------------------------------------------------------------------

std::string encode_map(const LinearMap& m) {
    require(m.bias.size() == m.output_dim(), ErrorCode::DimensionMismatch, "map bias size");
    require(m.weight.allFinite() && m.bias.allFinite(), ErrorCode::NonFiniteValue, "map parameters");
    detail::ByteWriter w;
    w.put_bytes(kLmapMagic, 4);
    w.put(kLmapVersion);
    w.put_string16(m.source_model);
    w.put_string16(m.target_model);
    w.put(m.alpha);
    w.put(static_cast<std::uint32_t>(m.input_dim()));
    w.put(static_cast<std::uint32_t>(m.output_dim()));
    w.put_bytes(m.bias.data(), static_cast<std::size_t>(m.bias.size()) * sizeof(double));
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = m.weight;
    w.put_bytes(rows.data(), static_cast<std::size_t>(rows.size()) * sizeof(double));
    return w.take();
}

LinearMap decode_map(std::string_view bytes) {
    detail::ByteReader r(bytes);
    if (std::memcmp(r.get_bytes(4).data(), kLmapMagic, 4) != 0)
        fail(ErrorCode::BadMagic, "not an LMAP file");
    const auto version = r.get<std::uint32_t>();
    if (version != kLmapVersion)
        fail(ErrorCode::VersionUnsupported, "LMAP version " + std::to_string(version));
    LinearMap m;
    m.source_model = r.get_string16();
    m.target_model = r.get_string16();
    m.alpha = r.get<double>();
    const auto d_in = r.get<std::uint32_t>();
    const auto d_out = r.get<std::uint32_t>();
    const std::size_t need = (std::size_t{d_out} + std::size_t{d_out} * d_in) * sizeof(double);
    if (r.remaining() != need)
        fail(ErrorCode::TruncatedFile, "LMAP payload has " + std::to_string(r.remaining()) +
                                           " bytes, expected " + std::to_string(need));
    m.bias.resize(d_out);
    std::memcpy(m.bias.data(), r.get_bytes(d_out * sizeof(double)).data(), d_out * sizeof(double));
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows(d_out, d_in);
    const std::size_t wbytes = std::size_t{d_out} * d_in * sizeof(double);
    std::memcpy(rows.data(), r.get_bytes(wbytes).data(), wbytes);
    m.weight = rows;
    require(m.weight.allFinite() && m.bias.allFinite() && std::isfinite(m.alpha),
            ErrorCode::NonFiniteValue, "LMAP parameters");
    return m;
}

void write_map(const LinearMap& m, const std::filesystem::path& path) {
    detail::spit(path, encode_map(m));
}

LinearMap read_map(const std::filesystem::path& path) { return decode_map(detail::slurp(path)); }

}  // namespace latentstitch::mapfit
