#include "latentstitch/synth.hpp"

#include <cmath>
#include <cstdio>
#include <random>

#include "binary_io.hpp"
#include "latentstitch/error.hpp"
#include "latentstitch/rng.hpp"

namespace latentstitch::synth {

namespace {

// Lossy models project the image around mid-grey so dropped directions
// decode to 0.5 rather than to black.
constexpr double kLossyCenter = 0.5;

Matrix gaussian_matrix(Index rows, Index cols, std::uint64_t seed) {
    Engine engine(seed);
    std::normal_distribution<double> normal;
    Matrix m(rows, cols);
    // Fill row by row so the draw order is independent of storage order.
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) m(i, j) = normal(engine);
    return m;
}

/// rows x cols with orthonormal columns (rows >= cols), from a seeded QR.
Matrix orthonormal_columns(Index rows, Index cols, std::uint64_t seed) {
    Eigen::HouseholderQR<Matrix> qr(gaussian_matrix(rows, cols, seed));
    Matrix q = qr.householderQ() * Matrix::Identity(rows, cols);
    // Fix signs so Q does not depend on QR sign conventions.
    const Matrix r = qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
    for (Index j = 0; j < cols; ++j)
        if (r(j, j) < 0) q.col(j) = -q.col(j);
    return q;
}

std::string exact_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string sample_id(Index i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "s%06lld", static_cast<long long>(i));
    return buf;
}

}  // namespace

// ---------------------------------------------------------------------------

FactorWorld gen_world(Index n, Index k, Index d_pix, std::uint64_t seed, Squash squash) {
    require(n >= 1 && k >= 1 && d_pix >= k, ErrorCode::BadDims,
            "gen_world needs n >= 1, k >= 1 and d_pix >= k");
    FactorWorld w;
    w.seed = seed;
    w.squash = squash;
    w.factors = gaussian_matrix(n, k, mix_seed(seed, "factors"));
    w.mixing = orthonormal_columns(d_pix, k, mix_seed(seed, "mixing"));
    w.ids.reserve(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) w.ids.push_back(sample_id(i));

    w.attributes.ids = w.ids;
    for (Index j = 0; j < k; ++j) w.attributes.names.push_back("factor_" + std::to_string(j));
    w.attributes.values.reserve(static_cast<std::size_t>(n * k));
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < k; ++j) w.attributes.values.push_back(w.factors(i, j) >= 0.0 ? 1 : -1);

    const Matrix signal = w.factors * w.mixing.transpose();
    Matrix pixels;
    if (squash == Squash::Affine) {
        const double peak = signal.cwiseAbs().maxCoeff();
        w.pixel_scale = peak > 0.0 ? 0.5 / peak : 1.0;
        pixels = (signal * w.pixel_scale).array() + 0.5;
    } else {
        const double rms = std::sqrt(signal.squaredNorm() / static_cast<double>(signal.size()));
        w.pixel_scale = rms > 0.0 ? 1.0 / rms : 1.0;
        pixels = 1.0 / (1.0 + (-w.pixel_scale * signal.array()).exp());
    }
    w.images.ids = w.ids;
    w.images.pixels = pixels.cast<float>();
    w.images.shape = data::ImageShape::for_pixel_count(d_pix);
    return w;
}

// ---------------------------------------------------------------------------

std::string_view to_string(ModelKind kind) noexcept {
    switch (kind) {
        case ModelKind::Orthogonal: return "orthogonal";
        case ModelKind::Lossy: return "lossy";
        case ModelKind::Random: return "random";
        case ModelKind::Noising: return "noising";
    }
    return "unknown";
}

ModelKind parse_kind(std::string_view name) {
    for (auto kind : {ModelKind::Orthogonal, ModelKind::Lossy, ModelKind::Random, ModelKind::Noising})
        if (name == to_string(kind)) return kind;
    fail(ErrorCode::ConfigError, "unknown synthetic model kind '" + std::string(name) + "'");
}

double NoisingSchedule::beta(int step) const {
    if (total_steps == 1) return beta_start;
    return beta_start + (beta_end - beta_start) * (step - 1) / (total_steps - 1);
}

int NoisingSchedule::diffusion_step(int timestep) const {
    require(total_steps >= 1 && steps_used >= 1 && steps_used <= total_steps, ErrorCode::ConfigError,
            "noising schedule needs 1 <= steps_used <= total_steps");
    require(timestep >= 0 && timestep <= steps_used, ErrorCode::ConfigError,
            "timestep " + std::to_string(timestep) + " outside [0, " + std::to_string(steps_used) + "]");
    return static_cast<int>(static_cast<long long>(timestep) * total_steps / steps_used);
}

double NoisingSchedule::alphabar(int timestep) const {
    const int step = diffusion_step(timestep);
    double product = 1.0;
    for (int s = 1; s <= step; ++s) product *= 1.0 - beta(s);
    return product;
}

Index SynthModelSpec::latent_dim(Index pixel_dim) const {
    switch (kind) {
        case ModelKind::Orthogonal:
        case ModelKind::Noising:
            return dim > 0 ? dim : pixel_dim;
        case ModelKind::Lossy:
            return dim > 0 ? dim : rank;
        case ModelKind::Random:
            return dim > 0 ? dim : 512;
    }
    return dim;
}

Matrix orthogonal_rows(const SynthModelSpec& spec, Index pixel_dim) {
    const Index d = spec.latent_dim(pixel_dim);
    require(d >= 1 && d <= pixel_dim, ErrorCode::BadDims,
            spec.model_id + ": orthogonal latent dim must be in [1, d_pix]");
    return orthonormal_columns(pixel_dim, d, mix_seed(spec.seed, "orthogonal")).transpose();
}

std::pair<Matrix, Matrix> lossy_bases(const SynthModelSpec& spec, Index pixel_dim) {
    const Index d = spec.latent_dim(pixel_dim);
    require(spec.rank >= 1 && spec.rank <= pixel_dim && spec.rank <= d, ErrorCode::BadDims,
            spec.model_id + ": lossy rank must satisfy 1 <= r <= min(d, d_pix)");
    return {orthonormal_columns(pixel_dim, spec.rank, mix_seed(spec.seed, "lossy-pixels")),
            orthonormal_columns(d, spec.rank, mix_seed(spec.seed, "lossy-embed"))};
}

bool decodable(const SynthModelSpec& spec) noexcept { return spec.kind != ModelKind::Random; }

Matrix encode_values(const SynthModelSpec& spec, const Eigen::Ref<const Matrix>& pixels,
                     std::span<const std::string> ids) {
    const Index pixel_dim = pixels.cols();
    const Index d = spec.latent_dim(pixel_dim);
    switch (spec.kind) {
        case ModelKind::Orthogonal:
            return pixels * orthogonal_rows(spec, pixel_dim).transpose();
        case ModelKind::Lossy: {
            const auto [basis, embed] = lossy_bases(spec, pixel_dim);
            const Matrix centered = pixels.array() - kLossyCenter;
            return centered * basis * embed.transpose();
        }
        case ModelKind::Random:
            return data::random_encoder(ids, d, spec.seed, spec.model_id).to_double();
        case ModelKind::Noising: {
            require(d == pixel_dim, ErrorCode::BadDims, spec.model_id + ": noising latents are pixel-sized");
            require(static_cast<Index>(ids.size()) == pixels.rows(), ErrorCode::DimensionMismatch,
                    spec.model_id + ": one id per pixel row is needed for the noise draw");
            const double abar = spec.schedule.alphabar(spec.timestep);
            const double signal = std::sqrt(abar);
            const double noise = std::sqrt(1.0 - abar);
            Matrix out(pixels.rows(), d);
            Vector eps(d);
            for (Index i = 0; i < pixels.rows(); ++i) {
                data::fill_gaussian(std::span<double>(eps.data(), static_cast<std::size_t>(d)),
                                    mix_seed(spec.seed, "noise"), ids[static_cast<std::size_t>(i)]);
                out.row(i) = signal * pixels.row(i) + noise * eps.transpose();
            }
            return out;
        }
    }
    fail(ErrorCode::BadDims, spec.model_id + ": unknown model kind");
}

Matrix decode_values(const SynthModelSpec& spec, const Eigen::Ref<const Matrix>& latents, Index pixel_dim) {
    require(latents.cols() == spec.latent_dim(pixel_dim), ErrorCode::BadDims,
            spec.model_id + ": latent dimension mismatch for decode");
    Matrix x;
    switch (spec.kind) {
        case ModelKind::Orthogonal:
            x = latents * orthogonal_rows(spec, pixel_dim);
            break;
        case ModelKind::Lossy: {
            const auto [basis, embed] = lossy_bases(spec, pixel_dim);
            x = (latents * embed * basis.transpose()).array() + kLossyCenter;
            break;
        }
        case ModelKind::Random:
            fail(ErrorCode::Undecodable, spec.model_id + ": random-kind latents have no decoder");
        case ModelKind::Noising:
            x = latents / std::sqrt(spec.schedule.alphabar(spec.timestep));
            break;
    }
    return x.cwiseMax(0.0).cwiseMin(1.0);
}

data::LatentDataset encode(const SynthModelSpec& spec, const data::ImageDataset& images) {
    if (spec.kind == ModelKind::Random)
        return data::random_encoder(images.ids, spec.latent_dim(images.pixels.cols()), spec.seed, spec.model_id);
    data::LatentDataset out;
    out.model_id = spec.model_id;
    out.ids = images.ids;
    out.values = encode_values(spec, images.pixels.cast<double>(), images.ids).cast<float>();
    return out;
}

data::ImageDataset decode(const SynthModelSpec& spec, const data::LatentDataset& latents,
                          const data::ImageShape& shape) {
    data::ImageDataset out;
    out.ids = latents.ids;
    out.pixels = decode_values(spec, latents.to_double(), shape.size()).cast<float>();
    out.shape = shape;
    return out;
}

// ---------------------------------------------------------------------------

std::vector<SynthModelSpec> default_roster(Index num_factors, std::uint64_t seed) {
    std::vector<SynthModelSpec> roster;
    SynthModelSpec a;
    a.model_id = "ortho_a";
    a.kind = ModelKind::Orthogonal;
    a.seed = mix_seed(seed, a.model_id);
    roster.push_back(a);

    SynthModelSpec b = a;
    b.model_id = "ortho_b";
    b.seed = mix_seed(seed, b.model_id);
    roster.push_back(b);

    SynthModelSpec lossy;
    lossy.model_id = "lossy";
    lossy.kind = ModelKind::Lossy;
    lossy.rank = std::max<Index>(1, num_factors / 2);
    lossy.dim = 64;
    lossy.seed = mix_seed(seed, lossy.model_id);
    roster.push_back(lossy);

    SynthModelSpec noisy;
    noisy.model_id = "noising";
    noisy.kind = ModelKind::Noising;
    noisy.timestep = 10;
    noisy.seed = mix_seed(seed, noisy.model_id);
    roster.push_back(noisy);

    SynthModelSpec random;
    random.model_id = "random";
    random.kind = ModelKind::Random;
    random.dim = 512;
    random.seed = mix_seed(seed, random.model_id);
    roster.push_back(random);
    return roster;
}

EmittedFiles emit_datasets(const FactorWorld& world, const std::vector<SynthModelSpec>& specs,
                           const std::filesystem::path& out_dir, const data::SplitSpec& split) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) fail(ErrorCode::IoError, "cannot create " + out_dir.string() + ": " + ec.message());

    EmittedFiles files;
    files.images = out_dir / "pixels.lsf";
    files.attributes = out_dir / "attributes.txt";
    files.manifest = out_dir / "manifest.txt";
    files.config = out_dir / "experiment.cfg";

    data::write_images(world.images, files.images);
    data::write_attribute_table(world.attributes, files.attributes);

    std::string manifest = "world.n=" + std::to_string(world.size()) +
                           "\nworld.k=" + std::to_string(world.num_factors()) +
                           "\nworld.d_pix=" + std::to_string(world.pixel_dim()) +
                           "\nworld.seed=" + std::to_string(world.seed) +
                           "\nworld.squash=" + (world.squash == Squash::Affine ? "affine" : "sigmoid") +
                           "\npixels=" + files.images.filename().string() +
                           "\nattributes=" + files.attributes.filename().string() + "\n";
    std::string config = "# synthetic factor world, seed " + std::to_string(world.seed) + "\n" +
                         "pixels = " + files.images.filename().string() + "\n" +
                         "attributes = " + files.attributes.filename().string() + "\n" +
                         "seed = " + std::to_string(world.seed) + "\n" +
                         "split.train = " + std::to_string(split.n_train) + "\n" +
                         "split.holdout = " + std::to_string(split.n_holdout) + "\n";

    for (const auto& spec : specs) {
        require(!spec.model_id.empty() && spec.model_id.find_first_of("/\\. =") == std::string::npos,
                ErrorCode::ConfigError, "model id '" + spec.model_id + "' is not file-safe");
        const auto path = out_dir / (spec.model_id + ".lsf");
        data::write_latents(encode(spec, world.images), path);
        files.latents.push_back(path);

        const std::string p = "model." + spec.model_id + ".";
        manifest += p + "latents=" + path.filename().string() + "\n" + p + "kind=" +
                    std::string(to_string(spec.kind)) + "\n" + p + "seed=" + std::to_string(spec.seed) + "\n";
        config += p + "latents = " + path.filename().string() + "\n";
        config += p + "synth = " + std::string(to_string(spec.kind)) + "\n";
        config += p + "seed = " + std::to_string(spec.seed) + "\n";
        config += p + "dim = " + std::to_string(spec.latent_dim(world.pixel_dim())) + "\n";
        if (spec.kind == ModelKind::Lossy) config += p + "rank = " + std::to_string(spec.rank) + "\n";
        if (spec.kind == ModelKind::Noising) {
            config += p + "timestep = " + std::to_string(spec.timestep) + "\n";
            char buf[160];
            std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g", spec.schedule.total_steps,
                          spec.schedule.steps_used, spec.schedule.beta_start, spec.schedule.beta_end);
            config += p + "schedule = " + buf + "\n";
        }
        if (spec.decoder_only) config += p + "decoder_only = true\n";
        config += "probe_alpha." + spec.model_id + " = " + exact_number(kSynthProbeAlpha) + "\n";
    }
    detail::spit(files.manifest, manifest);
    detail::spit(files.config, config);
    return files;
}

}  // namespace latentstitch::synth
