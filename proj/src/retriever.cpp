#include "drpg/retriever.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "binary_io.hpp"
#include "drpg/json_util.hpp"
#include "drpg/text.hpp"

namespace drpg {

void to_json(nlohmann::json& j, const RetrievedContext& c) {
    j = nlohmann::json{{"point_index", c.point_index},
                       {"paragraph_indices", c.paragraph_indices},
                       {"similarities", c.similarities}};
}

void from_json(const nlohmann::json& j, RetrievedContext& c) {
    c.point_index = json_util::get<std::size_t>(j, "point_index");
    c.paragraph_indices = json_util::get<std::vector<std::size_t>>(j, "paragraph_indices");
    c.similarities = json_util::get<std::vector<double>>(j, "similarities");
    if (c.paragraph_indices.size() != c.similarities.size()) {
        throw Error(ErrorCode::SchemaViolation, "paragraph_indices and similarities differ in length");
    }
}

}  // namespace drpg

namespace drpg::retriever {

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim()) {
        throw Error(ErrorCode::DimensionMismatch,
                    "cosine of vectors with dims " + std::to_string(a.dim()) + " and " + std::to_string(b.dim()));
    }
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.dim(); ++i) {
        dot += a.values[i] * b.values[i];
        na += a.values[i] * a.values[i];
        nb += b.values[i] * b.values[i];
    }
    if (na == 0 || nb == 0) throw Error(ErrorCode::ZeroVector, "cosine of an all-zero vector");
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

std::uint64_t paper_fingerprint(const Paper& paper) {
    std::uint64_t h = text::fnv1a64(paper.id);
    for (const auto& p : paper.paragraphs) h = text::fnv1a64(p.text, h);
    return h;
}

EmbeddingIndex build_index(const Paper& paper, Embedder& embedder) {
    validate(paper);
    std::vector<std::string> texts;
    texts.reserve(paper.paragraphs.size());
    for (const auto& p : paper.paragraphs) texts.push_back(p.text);
    EmbeddingIndex index;
    index.paper_id = paper.id;
    index.encoder = embedder.name();
    index.dim = embedder.dim();
    index.fingerprint = paper_fingerprint(paper);
    index.vectors = embedder.embed(texts);
    return index;
}

RetrievedContext top_k(std::size_t point_index, const EmbeddingVector& query, const EmbeddingIndex& index,
                       std::size_t k) {
    if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
    const std::size_t n = index.vectors.size();
    std::vector<double> sims(n);
    for (std::size_t j = 0; j < n; ++j) sims[j] = cosine(query, index.vectors[j]);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t take = std::min(k, n);
    std::partial_sort(order.begin(), order.begin() + static_cast<long>(take), order.end(),
                      [&](std::size_t a, std::size_t b) { return sims[a] > sims[b] || (sims[a] == sims[b] && a < b); });
    RetrievedContext ctx;
    ctx.point_index = point_index;
    for (std::size_t i = 0; i < take; ++i) {
        ctx.paragraph_indices.push_back(order[i]);
        ctx.similarities.push_back(sims[order[i]]);
    }
    return ctx;
}

RetrievedContext retrieve(const ReviewPoint& point, const EmbeddingIndex& index, std::size_t k, Embedder& embedder) {
    if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
    return top_k(point.index, embedder.embed_one(point.text), index, k);
}

std::vector<RetrievedContext> retrieve_all(const std::vector<ReviewPoint>& points, const EmbeddingIndex& index,
                                           std::size_t k, Embedder& embedder) {
    if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
    std::vector<std::string> texts;
    for (const auto& p : points) texts.push_back(p.text);
    auto vecs = embedder.embed(texts);
    std::vector<RetrievedContext> out;
    out.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) out.push_back(top_k(points[i].index, vecs[i], index, k));
    return out;
}

double reduction_ratio(const Paper& paper, const RetrievedContext& context) {
    const auto total = paper.total_chars();
    if (total == 0) return 0.0;
    std::size_t selected = 0;
    for (auto idx : context.paragraph_indices) {
        if (idx >= paper.paragraphs.size()) {
            throw Error(ErrorCode::IndexOutOfRange, "context paragraph " + std::to_string(idx) + " not in paper");
        }
        selected += paper.paragraphs[idx].char_len;
    }
    return 1.0 - static_cast<double>(selected) / static_cast<double>(total);
}

// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'D', 'R', 'P', 'G', 'I', 'D', 'X', '1'};
constexpr std::uint32_t kVersion = 1;

using binary_io::get_le;
using binary_io::get_str;
using binary_io::put_le;
using binary_io::put_str;

}  // namespace

void save_index(const EmbeddingIndex& index, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
    out.write(kMagic, sizeof kMagic);
    put_le<std::uint32_t>(out, kVersion);
    put_str(out, index.paper_id);
    put_str(out, index.encoder);
    put_le<std::uint64_t>(out, index.fingerprint);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(index.dim));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(index.vectors.size()));
    for (std::size_t i = 0; i < index.vectors.size(); ++i) {
        if (index.vectors[i].dim() != index.dim) throw Error(ErrorCode::DimensionMismatch, "index row width mismatch");
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(i));
        for (double x : index.vectors[i].values) binary_io::put_f64(out, x);
    }
    if (!out) throw Error(ErrorCode::IoFailure, "write error on " + path.string());
}

EmbeddingIndex load_index(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
    char magic[sizeof kMagic];
    if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
        throw Error(ErrorCode::SchemaViolation, path.string() + " is not an index file");
    }
    if (get_le<std::uint32_t>(in) != kVersion) throw Error(ErrorCode::SchemaViolation, "unsupported index version");
    EmbeddingIndex index;
    index.paper_id = get_str(in);
    index.encoder = get_str(in);
    index.fingerprint = get_le<std::uint64_t>(in);
    index.dim = get_le<std::uint32_t>(in);
    const auto count = get_le<std::uint32_t>(in);
    index.vectors.resize(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        auto row = get_le<std::uint32_t>(in);
        if (row >= count) throw Error(ErrorCode::SchemaViolation, "index row out of range");
        auto& v = index.vectors[row].values;
        v.resize(index.dim);
        for (auto& x : v) x = binary_io::get_f64(in);
    }
    return index;
}

std::filesystem::path IndexCache::path_for(const std::string& paper_id, const std::string& encoder,
                                           std::size_t dim) const {
    std::string name;
    for (char c : paper_id + "__" + encoder) {
        name.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.' ? c : '_');
    }
    return dir_ / (name + "__" + std::to_string(dim) + ".idx");
}

EmbeddingIndex IndexCache::get_or_build(const Paper& paper, Embedder& embedder) {
    const auto path = path_for(paper.id, embedder.name(), embedder.dim());
    if (std::filesystem::exists(path)) {
        try {
            auto cached = load_index(path);
            if (cached.fingerprint == paper_fingerprint(paper) && cached.dim == embedder.dim() &&
                cached.vectors.size() == paper.paragraphs.size()) {
                return cached;
            }
        } catch (const Error&) {
            // unreadable entry: rebuild below
        }
    }
    auto index = build_index(paper, embedder);
    save_index(index, path);
    return index;
}

}  // namespace drpg::retriever
