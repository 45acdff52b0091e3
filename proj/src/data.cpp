#include "latentstitch/data.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <limits>
#include <unordered_map>
#include <unordered_set>

#include "binary_io.hpp"
#include "latentstitch/error.hpp"
#include "latentstitch/rng.hpp"

namespace latentstitch::data {

static_assert(std::endian::native == std::endian::little,
              "LSF readers assume a little-endian host");

using detail::ByteReader;
using detail::ByteWriter;
using detail::slurp;
using detail::spit;

namespace {

constexpr char kLsfMagic[4] = {'L', 'S', 'F', '1'};

struct LsfPayload {
    std::string model_id;
    std::optional<ImageShape> shape;
    std::vector<std::string> ids;
    FloatMatrix values;
};

std::string encode_lsf(std::string_view model_id, const std::optional<ImageShape>& shape,
                       const std::vector<std::string>& ids, const FloatMatrix& values) {
    require(values.rows() <= std::numeric_limits<std::uint32_t>::max() &&
                values.cols() <= std::numeric_limits<std::uint32_t>::max(),
            ErrorCode::BadDims, "LSF dimensions exceed u32");
    ByteWriter w;
    w.put_bytes(kLsfMagic, 4);
    w.put(kLsfVersion);
    w.put(static_cast<std::uint32_t>(values.rows()));
    w.put(static_cast<std::uint32_t>(values.cols()));
    w.put_string16(model_id);
    if (model_id == kPixelsModelId) {
        const ImageShape s = shape.value_or(ImageShape::for_pixel_count(values.cols()));
        w.put(s.height);
        w.put(s.width);
        w.put(s.channels);
    }
    for (const auto& id : ids) w.put_string16(id);
    w.put_bytes(values.data(), static_cast<std::size_t>(values.size()) * sizeof(float));
    return w.take();
}

LsfPayload decode_lsf(std::string_view bytes) {
    ByteReader r(bytes);
    const auto magic = r.get_bytes(4);
    if (std::memcmp(magic.data(), kLsfMagic, 4) != 0)
        fail(ErrorCode::BadMagic, "not an LSF file");
    const auto version = r.get<std::uint32_t>();
    if (version != kLsfVersion)
        fail(ErrorCode::VersionUnsupported, "LSF version " + std::to_string(version));
    const auto n = r.get<std::uint32_t>();
    const auto d = r.get<std::uint32_t>();

    LsfPayload out;
    out.model_id = r.get_string16();
    if (out.model_id == kPixelsModelId) {
        ImageShape s;
        s.height = r.get<std::uint16_t>();
        s.width = r.get<std::uint16_t>();
        s.channels = r.get<std::uint16_t>();
        out.shape = s;
    }
    out.ids.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) out.ids.push_back(r.get_string16());

    const std::size_t value_bytes = std::size_t{n} * std::size_t{d} * sizeof(float);
    if (r.remaining() < value_bytes)
        fail(ErrorCode::TruncatedFile, "value block needs " + std::to_string(value_bytes) +
                                           " bytes, " + std::to_string(r.remaining()) + " left");
    const auto block = r.get_bytes(value_bytes);
    if (r.remaining() != 0)
        fail(ErrorCode::IoError, std::to_string(r.remaining()) + " trailing bytes after LSF data");
    out.values.resize(n, d);
    std::memcpy(out.values.data(), block.data(), value_bytes);
    if (!out.values.allFinite()) fail(ErrorCode::NonFiniteValue, "LSF value block");
    return out;
}

void check_unique(const std::vector<std::string>& ids, const char* what) {
    std::unordered_set<std::string_view> seen;
    seen.reserve(ids.size());
    for (const auto& id : ids)
        if (!seen.insert(id).second) fail(ErrorCode::DuplicateId, std::string(what) + ": id " + id);
}

template <class Pred>
std::vector<std::string_view> tokenize(std::string_view line, Pred is_space) {
    std::vector<std::string_view> tokens;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && is_space(line[i])) ++i;
        const std::size_t start = i;
        while (i < line.size() && !is_space(line[i])) ++i;
        if (i > start) tokens.push_back(line.substr(start, i - start));
    }
    return tokens;
}

std::vector<std::string_view> split_ws(std::string_view line) {
    return tokenize(line, [](char c) { return c == ' ' || c == '\t' || c == '\r'; });
}

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto nl = text.find('\n', start);
        const auto end = nl == std::string_view::npos ? text.size() : nl;
        lines.push_back(text.substr(start, end - start));
        if (nl == std::string_view::npos) break;
        start = nl + 1;
    }
    return lines;
}

bool blank(std::string_view line) { return split_ws(line).empty(); }

}  // namespace

// ---------------------------------------------------------------------------

void LatentDataset::validate() const {
    require(static_cast<Index>(ids.size()) == values.rows(), ErrorCode::CountMismatch,
            "latents: " + std::to_string(ids.size()) + " ids for " +
                std::to_string(values.rows()) + " rows");
    require(values.cols() > 0, ErrorCode::BadDims, "latents: dimension must be positive");
    require(values.allFinite(), ErrorCode::NonFiniteValue, "latents of " + model_id);
    check_unique(ids, "latents");
}

ImageShape ImageShape::for_pixel_count(Index count) {
    constexpr Index kMax = std::numeric_limits<std::uint16_t>::max();
    auto exact_root = [](Index v) -> Index {
        const auto r = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(v))));
        return r * r == v ? r : 0;
    };
    if (count % 3 == 0)
        if (const Index s = exact_root(count / 3); s > 0 && s <= kMax)
            return {static_cast<std::uint16_t>(s), static_cast<std::uint16_t>(s), 3};
    if (const Index s = exact_root(count); s > 0 && s <= kMax)
        return {static_cast<std::uint16_t>(s), static_cast<std::uint16_t>(s), 1};
    require(count > 0 && count <= kMax, ErrorCode::BadDims,
            "no image shape for " + std::to_string(count) + " pixels");
    return {static_cast<std::uint16_t>(count), 1, 1};
}

void ImageDataset::validate() const {
    require(static_cast<Index>(ids.size()) == pixels.rows(), ErrorCode::CountMismatch,
            "images: " + std::to_string(ids.size()) + " ids for " +
                std::to_string(pixels.rows()) + " rows");
    require(shape.size() == pixels.cols(), ErrorCode::BadDims,
            "images: shape does not match pixel count");
    require(pixels.allFinite(), ErrorCode::NonFiniteValue, "images");
    require(pixels.size() == 0 || (pixels.minCoeff() >= 0.0f && pixels.maxCoeff() <= 1.0f),
            ErrorCode::UnknownValue, "images: pixels outside [0, 1]");
    check_unique(ids, "images");
}

std::optional<Index> AttributeTable::column_index(std::string_view name) const {
    for (std::size_t j = 0; j < names.size(); ++j)
        if (names[j] == name) return static_cast<Index>(j);
    return std::nullopt;
}

std::vector<std::int8_t> AttributeTable::column(std::string_view name) const {
    const auto j = column_index(name);
    require(j.has_value(), ErrorCode::ConfigError, "unknown attribute " + std::string(name));
    std::vector<std::int8_t> out(ids.size());
    for (Index i = 0; i < size(); ++i) out[static_cast<std::size_t>(i)] = at(i, *j);
    return out;
}

// ---------------------------------------------------------------------------

std::string encode_latents(const LatentDataset& ds) {
    ds.validate();
    return encode_lsf(ds.model_id, std::nullopt, ds.ids, ds.values);
}

LatentDataset decode_latents(std::string_view bytes) {
    auto payload = decode_lsf(bytes);
    LatentDataset ds{std::move(payload.model_id), std::move(payload.ids), std::move(payload.values)};
    ds.validate();
    return ds;
}

LatentDataset read_latents(const std::filesystem::path& path) { return decode_latents(slurp(path)); }

void write_latents(const LatentDataset& ds, const std::filesystem::path& path) {
    spit(path, encode_latents(ds));
}

std::string encode_images(const ImageDataset& ds) {
    ds.validate();
    return encode_lsf(kPixelsModelId, ds.shape, ds.ids, ds.pixels);
}

ImageDataset decode_images(std::string_view bytes) {
    auto payload = decode_lsf(bytes);
    require(payload.shape.has_value(), ErrorCode::BadDims,
            "LSF model id '" + payload.model_id + "' is not a pixel file");
    ImageDataset ds{std::move(payload.ids), std::move(payload.values), *payload.shape};
    ds.validate();
    return ds;
}

ImageDataset read_images(const std::filesystem::path& path) { return decode_images(slurp(path)); }

void write_images(const ImageDataset& ds, const std::filesystem::path& path) {
    spit(path, encode_images(ds));
}

// ---------------------------------------------------------------------------

AttributeTable parse_attribute_table(std::string_view text) {
    const auto lines = split_lines(text);
    std::size_t li = 0;
    auto next_nonblank = [&]() -> std::optional<std::string_view> {
        while (li < lines.size() && blank(lines[li])) ++li;
        if (li == lines.size()) return std::nullopt;
        return lines[li++];
    };

    const auto count_line = next_nonblank();
    require(count_line.has_value(), ErrorCode::CountMismatch, "attribute file is empty");
    const auto count_tokens = split_ws(*count_line);
    std::size_t declared = 0;
    {
        const auto tok = count_tokens.empty() ? std::string_view{} : count_tokens.front();
        const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), declared);
        require(count_tokens.size() == 1 && ec == std::errc{} && ptr == tok.data() + tok.size(),
                ErrorCode::CountMismatch, "first line must be the sample count");
    }

    const auto names_line = next_nonblank();
    require(names_line.has_value(), ErrorCode::RaggedRow, "missing attribute name line");
    AttributeTable table;
    for (auto name : split_ws(*names_line)) table.names.emplace_back(name);
    require(!table.names.empty(), ErrorCode::RaggedRow, "no attribute names");
    check_unique(table.names, "attribute names");

    const std::size_t k = table.names.size();
    table.ids.reserve(declared);
    table.values.reserve(declared * k);
    for (; li < lines.size(); ++li) {
        if (blank(lines[li])) continue;
        const auto tokens = split_ws(lines[li]);
        require(tokens.size() == k + 1, ErrorCode::RaggedRow,
                "line " + std::to_string(li + 1) + ": expected " + std::to_string(k + 1) +
                    " fields, got " + std::to_string(tokens.size()));
        table.ids.emplace_back(tokens[0]);
        for (std::size_t j = 1; j <= k; ++j) {
            if (tokens[j] == "1" || tokens[j] == "+1")
                table.values.push_back(1);
            else if (tokens[j] == "-1")
                table.values.push_back(-1);
            else
                fail(ErrorCode::UnknownValue, "line " + std::to_string(li + 1) + ": value '" +
                                                  std::string(tokens[j]) + "'");
        }
    }
    require(table.ids.size() == declared, ErrorCode::CountMismatch,
            "declared " + std::to_string(declared) + " samples, found " +
                std::to_string(table.ids.size()));
    check_unique(table.ids, "attributes");
    return table;
}

std::string format_attribute_table(const AttributeTable& table) {
    std::string out = std::to_string(table.ids.size()) + "\n";
    for (std::size_t j = 0; j < table.names.size(); ++j) {
        if (j) out += ' ';
        out += table.names[j];
    }
    out += '\n';
    for (Index i = 0; i < table.size(); ++i) {
        out += table.ids[static_cast<std::size_t>(i)];
        for (Index j = 0; j < table.num_attributes(); ++j) out += table.at(i, j) > 0 ? "  1" : " -1";
        out += '\n';
    }
    return out;
}

AttributeTable read_attribute_table(const std::filesystem::path& path) {
    return parse_attribute_table(slurp(path));
}

void write_attribute_table(const AttributeTable& table, const std::filesystem::path& path) {
    spit(path, format_attribute_table(table));
}

// ---------------------------------------------------------------------------

bool Alignment::is_identity(Index n_a, Index n_b) const {
    if (static_cast<Index>(size()) != n_a || n_a != n_b) return false;
    for (std::size_t i = 0; i < size(); ++i)
        if (rows_a[i] != static_cast<Index>(i) || rows_b[i] != static_cast<Index>(i)) return false;
    return true;
}

Alignment align_ids(std::span<const std::string> a, std::span<const std::string> b) {
    std::unordered_map<std::string_view, Index> index_b;
    index_b.reserve(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) index_b.emplace(b[i], static_cast<Index>(i));
    Alignment out;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (auto it = index_b.find(a[i]); it != index_b.end()) {
            out.rows_a.push_back(static_cast<Index>(i));
            out.rows_b.push_back(it->second);
        }
    }
    require(out.size() > 0, ErrorCode::EmptyIntersection, "id lists share no samples");
    return out;
}

namespace {

std::vector<std::string> pick(const std::vector<std::string>& ids, std::span<const Index> rows) {
    std::vector<std::string> out;
    out.reserve(rows.size());
    for (Index r : rows) out.push_back(ids[static_cast<std::size_t>(r)]);
    return out;
}

FloatMatrix pick(const FloatMatrix& m, std::span<const Index> rows) {
    FloatMatrix out(static_cast<Index>(rows.size()), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = m.row(rows[i]);
    return out;
}

}  // namespace

LatentDataset take_rows(const LatentDataset& ds, std::span<const Index> rows) {
    return {ds.model_id, pick(ds.ids, rows), pick(ds.values, rows)};
}

ImageDataset take_rows(const ImageDataset& ds, std::span<const Index> rows) {
    return {pick(ds.ids, rows), pick(ds.pixels, rows), ds.shape};
}

AttributeTable take_rows(const AttributeTable& table, std::span<const Index> rows) {
    AttributeTable out;
    out.names = table.names;
    out.ids = pick(table.ids, rows);
    const Index k = table.num_attributes();
    out.values.reserve(rows.size() * static_cast<std::size_t>(k));
    for (Index r : rows)
        for (Index j = 0; j < k; ++j) out.values.push_back(table.at(r, j));
    return out;
}

std::pair<LatentDataset, LatentDataset> align(const LatentDataset& a, const LatentDataset& b) {
    const auto al = align_ids(a.ids, b.ids);
    return {take_rows(a, al.rows_a), take_rows(b, al.rows_b)};
}

std::pair<LatentDataset, AttributeTable> align(const LatentDataset& a, const AttributeTable& b) {
    const auto al = align_ids(a.ids, b.ids);
    return {take_rows(a, al.rows_a), take_rows(b, al.rows_b)};
}

std::pair<LatentDataset, ImageDataset> align(const LatentDataset& a, const ImageDataset& b) {
    const auto al = align_ids(a.ids, b.ids);
    return {take_rows(a, al.rows_a), take_rows(b, al.rows_b)};
}

// ---------------------------------------------------------------------------

RowSplit split_rows(Index n, const SplitSpec& spec) {
    require(spec.n_train >= 0 && spec.n_holdout >= 0, ErrorCode::ConfigError,
            "split sizes must be non-negative");
    require(spec.n_train + spec.n_holdout <= n, ErrorCode::InsufficientRows,
            "split " + std::to_string(spec.n_train) + "+" + std::to_string(spec.n_holdout) +
                " exceeds " + std::to_string(n) + " rows");
    RowSplit out;
    out.train.resize(static_cast<std::size_t>(spec.n_train));
    out.holdout.resize(static_cast<std::size_t>(spec.n_holdout));
    for (Index i = 0; i < spec.n_train; ++i) out.train[static_cast<std::size_t>(i)] = i;
    for (Index i = 0; i < spec.n_holdout; ++i)
        out.holdout[static_cast<std::size_t>(i)] = spec.n_train + i;
    return out;
}

std::pair<LatentDataset, LatentDataset> split(const LatentDataset& ds, const SplitSpec& spec) {
    const auto rows = split_rows(ds.size(), spec);
    return {take_rows(ds, rows.train), take_rows(ds, rows.holdout)};
}

// ---------------------------------------------------------------------------

void fill_gaussian(std::span<double> out, std::uint64_t seed, std::string_view id) {
    Engine engine(mix_seed(seed, id));
    std::normal_distribution<double> normal;
    for (auto& v : out) v = normal(engine);
}

void fill_gaussian(std::span<float> out, std::uint64_t seed, std::string_view id) {
    Engine engine(mix_seed(seed, id));
    std::normal_distribution<double> normal;
    for (auto& v : out) v = static_cast<float>(normal(engine));
}

LatentDataset random_encoder(std::span<const std::string> ids, Index dim, std::uint64_t seed,
                             std::string model_id) {
    require(dim > 0, ErrorCode::BadDims, "random encoder dimension must be positive");
    LatentDataset ds{std::move(model_id), {ids.begin(), ids.end()}, FloatMatrix(ids.size(), dim)};
    check_unique(ds.ids, "random encoder");
    for (std::size_t i = 0; i < ids.size(); ++i)
        fill_gaussian(std::span<float>(ds.values.row(static_cast<Index>(i)).data(),
                                       static_cast<std::size_t>(dim)),
                      seed, ids[i]);
    return ds;
}

}  // namespace latentstitch::data
