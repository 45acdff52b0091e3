#include "latentstitch/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>

#include "binary_io.hpp"
#include "latentstitch/error.hpp"

namespace latentstitch::pipeline {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.emplace_back(s.substr(start, pos == std::string_view::npos ? pos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

class LineContext {
public:
    LineContext(std::size_t line, std::string key) : line_(line), key_(std::move(key)) {}

    [[noreturn]] void error(const std::string& what) const {
        fail(ErrorCode::ConfigError, "line " + std::to_string(line_) + " (" + key_ + "): " + what);
    }

    double number(std::string_view v) const {
        const std::string s(v);
        char* end = nullptr;
        const double out = std::strtod(s.c_str(), &end);
        if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(out))
            error("expected a number, got '" + s + "'");
        return out;
    }

    template <class Int>
    Int integer(std::string_view v) const {
        Int out{};
        const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc{} || ptr != v.data() + v.size())
            error("expected an integer, got '" + std::string(v) + "'");
        return out;
    }

    bool boolean(std::string_view v) const {
        if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
        if (v == "false" || v == "0" || v == "no" || v == "off") return false;
        error("expected a boolean, got '" + std::string(v) + "'");
    }

private:
    std::size_t line_;
    std::string key_;
};

bool valid_id(std::string_view id) {
    return !id.empty() && id.find_first_of(" \t/\\") == std::string_view::npos;
}

}  // namespace

const ModelEntry* ExperimentConfig::find_model(std::string_view id) const {
    for (const auto& m : models)
        if (m.id == id) return &m;
    return nullptr;
}

ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
    ExperimentConfig cfg;
    auto resolve = [&](std::string_view v) {
        std::filesystem::path p{std::string(v)};
        return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
    };
    auto model = [&](const std::string& id) -> ModelEntry& {
        for (auto& m : cfg.models)
            if (m.id == id) return m;
        cfg.models.push_back(ModelEntry{id, {}, false, std::nullopt});
        return cfg.models.back();
    };
    auto synth_spec = [&](ModelEntry& m) -> synth::SynthModelSpec& {
        if (!m.synth) {
            m.synth.emplace();
            m.synth->model_id = m.id;
        }
        return *m.synth;
    };

    std::vector<std::string> synth_kind_given;

    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto nl = text.find('\n', start);
        std::string_view line = text.substr(start, nl == std::string_view::npos ? nl : nl - start);
        start = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            fail(ErrorCode::ConfigError, "line " + std::to_string(line_no) + ": expected key = value");
        const std::string key(trim(line.substr(0, eq)));
        const std::string_view value = trim(line.substr(eq + 1));
        const LineContext ctx(line_no, key);
        const auto parts = split(key, '.');
        for (const auto& p : parts)
            if (!valid_id(p)) ctx.error("malformed key");

        if (key == "pixels") {
            cfg.pixels = resolve(value);
        } else if (key == "attributes") {
            cfg.attributes = resolve(value);
        } else if (key == "seed") {
            cfg.seed = ctx.integer<std::uint64_t>(value);
        } else if (key == "split.train") {
            cfg.split.n_train = ctx.integer<Eigen::Index>(value);
        } else if (key == "split.holdout") {
            cfg.split.n_holdout = ctx.integer<Eigen::Index>(value);
        } else if (key == "plateau.eps") {
            cfg.plateau_eps = ctx.number(value);
            if (cfg.plateau_eps < 0) ctx.error("must be >= 0");
        } else if (key == "fid") {
            cfg.fid_enabled = ctx.boolean(value);
        } else if (key == "probe.attributes") {
            cfg.attribute_subset.clear();
            for (const auto& a : split(value, ','))
                if (auto t = trim(a); !t.empty()) cfg.attribute_subset.emplace_back(t);
        } else if (key == "probe.holdout_per_class") {
            cfg.probe_holdout_per_class = ctx.integer<Eigen::Index>(value);
            if (cfg.probe_holdout_per_class < 1) ctx.error("must be >= 1");
        } else if (key == "probe.max_iter") {
            cfg.probe_max_iter = ctx.integer<int>(value);
            if (cfg.probe_max_iter < 1) ctx.error("must be >= 1");
        } else if (key == "probe.standardize") {
            cfg.probe_standardize = ctx.boolean(value);
        } else if (key == "dynamics.alpha") {
            cfg.dynamics_alpha = ctx.number(value);
        } else if (parts.size() == 3 && parts[0] == "alpha") {
            const double a = ctx.number(value);
            if (a < 0) ctx.error("ridge alpha must be >= 0");
            cfg.alphas.set(parts[1], parts[2], a);
        } else if (parts.size() == 2 && parts[0] == "probe_alpha") {
            const double a = ctx.number(value);
            if (a < 0) ctx.error("lasso alpha must be >= 0");
            cfg.probe_alpha[parts[1]] = a;
        } else if (parts.size() == 3 && parts[0] == "decoded") {
            cfg.decoded[{parts[1], parts[2]}] = resolve(value);
        } else if (parts.size() == 3 && parts[0] == "lpips") {
            cfg.lpips[{parts[1], parts[2]}] = ctx.number(value);
        } else if (parts.size() == 2 && parts[0] == "checkpoint") {
            cfg.checkpoints.push_back({parts[1], resolve(value)});
        } else if (parts.size() == 3 && parts[0] == "model") {
            ModelEntry& m = model(parts[1]);
            const auto& field = parts[2];
            if (field == "latents") {
                m.latents = resolve(value);
            } else if (field == "decoder_only") {
                m.decoder_only = ctx.boolean(value);
            } else if (field == "synth") {
                synth_spec(m).kind = synth::parse_kind(value);
                synth_kind_given.push_back(m.id);
            } else if (field == "seed") {
                synth_spec(m).seed = ctx.integer<std::uint64_t>(value);
            } else if (field == "dim") {
                synth_spec(m).dim = ctx.integer<Eigen::Index>(value);
            } else if (field == "rank") {
                synth_spec(m).rank = ctx.integer<Eigen::Index>(value);
            } else if (field == "timestep") {
                synth_spec(m).timestep = ctx.integer<int>(value);
            } else if (field == "schedule") {
                const auto f = split(value, ',');
                if (f.size() != 4) ctx.error("expected total_steps,steps_used,beta_start,beta_end");
                auto& s = synth_spec(m).schedule;
                s.total_steps = ctx.integer<int>(trim(f[0]));
                s.steps_used = ctx.integer<int>(trim(f[1]));
                s.beta_start = ctx.number(trim(f[2]));
                s.beta_end = ctx.number(trim(f[3]));
            } else {
                ctx.error("unknown model field '" + field + "'");
            }
        } else {
            ctx.error("unknown key");
        }
    }

    for (auto& m : cfg.models) {
        if (m.latents.empty())
            fail(ErrorCode::ConfigError, "model '" + m.id + "' has no latents path");
        if (m.synth) {
            if (std::find(synth_kind_given.begin(), synth_kind_given.end(), m.id) == synth_kind_given.end())
                fail(ErrorCode::ConfigError, "model '" + m.id + "' sets synthetic fields without model." +
                                                 m.id + ".synth");
            m.synth->decoder_only = m.decoder_only;
            m.synth->schedule.diffusion_step(m.synth->timestep);
        }
    }
    if (cfg.split.n_train < 1 || cfg.split.n_holdout < 0)
        fail(ErrorCode::ConfigError, "split.train must be >= 1 and split.holdout >= 0");
    return cfg;
}

void check_files_exist(const ExperimentConfig& cfg) {
    auto check = [](const std::filesystem::path& p, const std::string& what) {
        if (!p.empty() && !std::filesystem::exists(p))
            fail(ErrorCode::ConfigError, what + " file not found: " + p.string());
    };
    for (const auto& m : cfg.models) check(m.latents, "latents of " + m.id);
    check(cfg.pixels, "pixels");
    check(cfg.attributes, "attributes");
    for (const auto& [pair, p] : cfg.decoded) check(p, "decoded " + pair.first + "->" + pair.second);
    for (const auto& c : cfg.checkpoints) check(c.latents, "checkpoint " + c.label);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::string text;
    try {
        text = detail::slurp(path);
    } catch (const Error& e) {
        fail(ErrorCode::ConfigError, e.what());
    }
    ExperimentConfig cfg = parse_config(text, path.parent_path());
    check_files_exist(cfg);
    return cfg;
}

double probe_alpha_for(const ExperimentConfig& cfg, const std::string& model_id,
                       std::vector<std::string>* warnings) {
    if (const auto it = cfg.probe_alpha.find(model_id); it != cfg.probe_alpha.end()) return it->second;
    if (model_id == "VAE" || model_id == "VQVAE") return 0.005;
    if (model_id == "DM") return 0.02;
    if (model_id == "NF") return 0.1;
    if (warnings)
        warnings->push_back("no probe alpha for latent space '" + model_id + "', using 0.01");
    return 0.01;
}

}  // namespace latentstitch::pipeline
