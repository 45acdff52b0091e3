#include "latentstitch/probes.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <unordered_set>

#include "binary_io.hpp"
#include "latentstitch/error.hpp"
#include "latentstitch/rng.hpp"

namespace latentstitch::probes {

namespace {

constexpr char kLprbMagic[4] = {'L', 'P', 'R', 'B'};

struct ClassPools {
    std::vector<std::string> positive;
    std::vector<std::string> negative;
};

ClassPools partition(std::span<const std::string> ids, std::span<const std::int8_t> labels,
                     const std::unordered_set<std::string>* exclude) {
    require(ids.size() == labels.size(), ErrorCode::DimensionMismatch,
            "balanced sampling: ids and labels differ in length");
    ClassPools pools;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (exclude && exclude->count(ids[i])) continue;
        if (labels[i] > 0)
            pools.positive.push_back(ids[i]);
        else if (labels[i] == -1 || labels[i] == 0)
            pools.negative.push_back(ids[i]);
        else
            fail(ErrorCode::UnknownValue, "label must be in {-1, 0, +1}");
    }
    std::sort(pools.positive.begin(), pools.positive.end());
    std::sort(pools.negative.begin(), pools.negative.end());
    return pools;
}

std::vector<std::string> draw(std::vector<std::string> pool, Eigen::Index count,
                              std::uint64_t seed) {
    Engine engine(seed);
    std::shuffle(pool.begin(), pool.end(), engine);
    pool.resize(static_cast<std::size_t>(count));
    std::sort(pool.begin(), pool.end());
    return pool;
}

BalancedSubset draw_balanced(ClassPools pools, Eigen::Index per_class, std::uint64_t seed) {
    BalancedSubset out;
    out.per_class = per_class;
    out.positive = draw(std::move(pools.positive), per_class, mix_seed(seed, "positive"));
    out.negative = draw(std::move(pools.negative), per_class, mix_seed(seed, "negative"));
    return out;
}

void check_labels(std::span<const int> labels, Eigen::Index rows) {
    require(static_cast<Eigen::Index>(labels.size()) == rows, ErrorCode::DimensionMismatch,
            "labels: " + std::to_string(labels.size()) + " for " + std::to_string(rows) + " rows");
    bool seen[2] = {false, false};
    for (int v : labels) {
        require(v == 0 || v == 1, ErrorCode::UnknownValue, "probe labels must be 0 or 1");
        seen[v] = true;
    }
    require(seen[0] && seen[1], ErrorCode::SingleClassPool, "probe training needs both classes");
}

double soft_threshold(double z, double t) {
    if (z > t) return z - t;
    if (z < -t) return z + t;
    return 0.0;
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<std::string> BalancedSubset::all_ids() const {
    std::vector<std::string> out = positive;
    out.insert(out.end(), negative.begin(), negative.end());
    return out;
}

std::vector<int> to_binary_labels(std::span<const std::int8_t> values) {
    std::vector<int> out;
    out.reserve(values.size());
    for (auto v : values) {
        require(v == -1 || v == 1, ErrorCode::UnknownValue, "attribute value must be -1 or +1");
        out.push_back(v > 0 ? 1 : 0);
    }
    return out;
}

BalancedSubset balanced_subset(std::span<const std::string> ids, std::span<const std::int8_t> labels,
                               std::uint64_t seed) {
    ClassPools pools = partition(ids, labels, nullptr);
    require(!pools.positive.empty() && !pools.negative.empty(), ErrorCode::SingleClassPool,
            "pool has " + std::to_string(pools.positive.size()) + " positive and " +
                std::to_string(pools.negative.size()) + " negative samples");
    const auto minority = static_cast<Eigen::Index>(std::min(pools.positive.size(), pools.negative.size()));
    // floor(0.8 * m) in integers, avoiding 0.8's binary rounding.
    const Eigen::Index per_class = (minority * 4) / 5;
    return draw_balanced(std::move(pools), per_class, seed);
}

BalancedSubset balanced_holdout(std::span<const std::string> ids, std::span<const std::int8_t> labels,
                                const BalancedSubset& exclude, Eigen::Index per_class,
                                std::uint64_t seed) {
    require(per_class > 0, ErrorCode::ConfigError, "holdout size per class must be positive");
    std::unordered_set<std::string> used(exclude.positive.begin(), exclude.positive.end());
    used.insert(exclude.negative.begin(), exclude.negative.end());
    ClassPools pools = partition(ids, labels, &used);
    const auto available =
        static_cast<Eigen::Index>(std::min(pools.positive.size(), pools.negative.size()));
    require(available > 0, ErrorCode::EmptySet, "no balanced holdout samples left after training draw");
    return draw_balanced(std::move(pools), std::min(per_class, available), mix_seed(seed, "holdout"));
}

// ---------------------------------------------------------------------------

double lasso_alpha_max(const Eigen::Ref<const Matrix>& x, std::span<const int> labels) {
    check_labels(labels, x.rows());
    const Eigen::Index n = x.rows();
    Vector y(n);
    for (Eigen::Index i = 0; i < n; ++i) y(i) = labels[static_cast<std::size_t>(i)];
    const Vector r = y.array() - y.mean();
    const Vector x_mean = x.colwise().mean().transpose();
    const Matrix xc = x.rowwise() - x_mean.transpose();
    // Same arithmetic as the first coordinate-descent sweep, so a fit at
    // exactly this alpha thresholds every coordinate to zero.
    const double inv_n = 1.0 / static_cast<double>(n);
    double out = 0.0;
    for (Eigen::Index j = 0; j < x.cols(); ++j) out = std::max(out, std::abs(xc.col(j).dot(r) * inv_n));
    return out;
}

LassoFit fit_lasso_detailed(const Eigen::Ref<const Matrix>& x, std::span<const int> labels,
                            double alpha, const LassoOptions& options) {
    check_labels(labels, x.rows());
    require(std::isfinite(alpha) && alpha >= 0.0, ErrorCode::ConfigError, "lasso alpha must be >= 0");
    require(x.allFinite(), ErrorCode::NonFiniteValue, "lasso design");
    require(options.tol > 0.0 && options.max_iter > 0, ErrorCode::ConfigError,
            "lasso tol and max_iter must be positive");

    const Eigen::Index n = x.rows();
    const Eigen::Index d = x.cols();
    const double inv_n = 1.0 / static_cast<double>(n);

    Vector y(n);
    for (Eigen::Index i = 0; i < n; ++i) y(i) = labels[static_cast<std::size_t>(i)];
    const double y_mean = y.mean();

    const Vector x_mean = x.colwise().mean().transpose();
    Matrix xc = x.rowwise() - x_mean.transpose();

    Vector scale = Vector::Ones(d);
    Vector col_sq(d);
    LassoFit fit;
    std::vector<char> active(static_cast<std::size_t>(d), 1);
    for (Eigen::Index j = 0; j < d; ++j) {
        const double raw_moment = x.col(j).squaredNorm() * inv_n;
        double c = xc.col(j).squaredNorm() * inv_n;
        if (!(c > 1e-14 * raw_moment)) {
            active[static_cast<std::size_t>(j)] = 0;
            fit.skipped_columns.push_back(j);
            col_sq(j) = 0.0;
            continue;
        }
        if (options.standardize) {
            scale(j) = std::sqrt(c);
            xc.col(j) /= scale(j);
            c = 1.0;
        }
        col_sq(j) = c;
    }

    Vector w = Vector::Zero(d);
    Vector r = y.array() - y_mean;

    auto objective = [&] { return 0.5 * inv_n * r.squaredNorm() + alpha * w.lpNorm<1>(); };
    auto kkt_violation = [&] {
        double worst = 0.0;
        for (Eigen::Index j = 0; j < d; ++j) {
            if (!active[static_cast<std::size_t>(j)]) continue;
            const double g = xc.col(j).dot(r) * inv_n;
            const double v = w(j) != 0.0 ? std::abs(g - alpha * (w(j) > 0 ? 1.0 : -1.0))
                                         : std::max(0.0, std::abs(g) - alpha);
            worst = std::max(worst, v);
        }
        return worst;
    };

    bool converged = false;
    for (int sweep = 1; sweep <= options.max_iter; ++sweep) {
        double max_delta = 0.0;
        for (Eigen::Index j = 0; j < d; ++j) {
            if (!active[static_cast<std::size_t>(j)]) continue;
            const double rho = xc.col(j).dot(r) * inv_n + col_sq(j) * w(j);
            const double updated = soft_threshold(rho, alpha) / col_sq(j);
            const double delta = updated - w(j);
            if (delta != 0.0) {
                r.noalias() -= delta * xc.col(j);
                w(j) = updated;
                max_delta = std::max(max_delta, std::abs(delta));
            }
        }
        fit.sweeps = sweep;
        if (options.on_sweep) options.on_sweep(sweep, objective());
        if (max_delta < options.tol) {
            fit.kkt_violation = kkt_violation();
            if (fit.kkt_violation <= 10.0 * options.tol) {
                converged = true;
                break;
            }
        }
    }
    if (!converged) {
        fit.kkt_violation = kkt_violation();
        char buf[96];
        std::snprintf(buf, sizeof buf, "lasso: %d sweeps, KKT violation %.3g", options.max_iter,
                      fit.kkt_violation);
        fail(ErrorCode::NoConvergence, buf);
    }

    fit.probe.weight = w.cwiseQuotient(scale);
    fit.probe.bias = y_mean - x_mean.dot(fit.probe.weight);
    fit.probe.alpha = alpha;
    return fit;
}

Probe fit_lasso(const Eigen::Ref<const Matrix>& x, std::span<const int> labels, double alpha,
                const LassoOptions& options) {
    return fit_lasso_detailed(x, labels, alpha, options).probe;
}

// ---------------------------------------------------------------------------

Vector decision_values(const Probe& p, const Eigen::Ref<const Matrix>& x) {
    require(x.cols() == p.dim(), ErrorCode::DimensionMismatch,
            "probe expects " + std::to_string(p.dim()) + " dims, got " + std::to_string(x.cols()));
    Vector s = x * p.weight;
    s.array() += p.bias;
    return s;
}

std::vector<int> predict(const Probe& p, const Eigen::Ref<const Matrix>& x) {
    const Vector s = decision_values(p, x);
    std::vector<int> out(static_cast<std::size_t>(s.size()));
    for (Eigen::Index i = 0; i < s.size(); ++i)
        out[static_cast<std::size_t>(i)] = s(i) >= p.threshold ? 1 : 0;
    return out;
}

double accuracy(const Probe& p, const Eigen::Ref<const Matrix>& x, std::span<const int> labels) {
    require(x.rows() > 0, ErrorCode::EmptySet, "accuracy on empty set");
    require(static_cast<Eigen::Index>(labels.size()) == x.rows(), ErrorCode::DimensionMismatch,
            "accuracy: label count differs from row count");
    const auto pred = predict(p, x);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == labels[i];
    return static_cast<double>(hits) / static_cast<double>(pred.size());
}

double match_percent(const Probe& p, const Eigen::Ref<const Matrix>& native,
                     const Eigen::Ref<const Matrix>& mapped) {
    require(native.rows() == mapped.rows() && native.cols() == mapped.cols(),
            ErrorCode::DimensionMismatch, "match_percent: native and mapped shapes differ");
    require(native.rows() > 0, ErrorCode::EmptySet, "match_percent on empty set");
    const auto a = predict(p, native);
    const auto b = predict(p, mapped);
    std::size_t same = 0;
    for (std::size_t i = 0; i < a.size(); ++i) same += a[i] == b[i];
    return 100.0 * static_cast<double>(same) / static_cast<double>(a.size());
}

double accuracy_delta(double acc_native, double acc_mapped) {
    require(acc_native > 0.0, ErrorCode::ZeroBaseline, "native accuracy is zero");
    return 100.0 * (acc_mapped - acc_native) / acc_native;
}

// ---------------------------------------------------------------------------

std::string encode_probe(const Probe& p) {
    require(p.weight.allFinite() && std::isfinite(p.bias), ErrorCode::NonFiniteValue, "probe");
    detail::ByteWriter w;
    w.put_bytes(kLprbMagic, 4);
    w.put(kLprbVersion);
    w.put_string16(p.attribute);
    w.put_string16(p.model_id);
    w.put(p.alpha);
    w.put(p.threshold);
    w.put(static_cast<std::uint32_t>(p.dim()));
    w.put(p.bias);
    w.put_bytes(p.weight.data(), static_cast<std::size_t>(p.dim()) * sizeof(double));
    return w.take();
}

Probe decode_probe(std::string_view bytes) {
    detail::ByteReader r(bytes);
    if (std::memcmp(r.get_bytes(4).data(), kLprbMagic, 4) != 0)
        fail(ErrorCode::BadMagic, "not an LPRB file");
    const auto version = r.get<std::uint32_t>();
    if (version != kLprbVersion)
        fail(ErrorCode::VersionUnsupported, "LPRB version " + std::to_string(version));
    Probe p;
    p.attribute = r.get_string16();
    p.model_id = r.get_string16();
    p.alpha = r.get<double>();
    p.threshold = r.get<double>();
    const auto d = r.get<std::uint32_t>();
    p.bias = r.get<double>();
    if (r.remaining() != std::size_t{d} * sizeof(double))
        fail(ErrorCode::TruncatedFile, "LPRB weight block size");
    p.weight.resize(d);
    std::memcpy(p.weight.data(), r.get_bytes(std::size_t{d} * sizeof(double)).data(),
                std::size_t{d} * sizeof(double));
    require(p.weight.allFinite() && std::isfinite(p.bias), ErrorCode::NonFiniteValue, "probe");
    return p;
}

void write_probe(const Probe& p, const std::filesystem::path& path) {
    detail::spit(path, encode_probe(p));
}

Probe read_probe(const std::filesystem::path& path) { return decode_probe(detail::slurp(path)); }

}  // namespace latentstitch::probes
