#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "drpg/providers.hpp"
#include "drpg/types.hpp"

namespace drpg {

struct RetrievedContext {
    std::size_t point_index = 0;
    std::vector<std::size_t> paragraph_indices;  // most similar first
    std::vector<double> similarities;            // parallel, non-increasing

    friend bool operator==(const RetrievedContext&, const RetrievedContext&) = default;
};

struct EmbeddingIndex {
    std::string paper_id;
    std::string encoder;
    std::size_t dim = 0;
    std::uint64_t fingerprint = 0;  // hash of the paragraph texts
    std::vector<EmbeddingVector> vectors;  // aligned to paragraph index

    friend bool operator==(const EmbeddingIndex&, const EmbeddingIndex&) = default;
};

void to_json(nlohmann::json& j, const RetrievedContext& c);
void from_json(const nlohmann::json& j, RetrievedContext& c);

}  // namespace drpg

namespace drpg::retriever {

// dot(a, b) / (|a| |b|), clamped to [-1, 1].
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

std::uint64_t paper_fingerprint(const Paper& paper);

EmbeddingIndex build_index(const Paper& paper, Embedder& embedder);

// Top min(k, N_p) paragraphs by cosine to the query; ties go to the lower
// paragraph index.
RetrievedContext top_k(std::size_t point_index, const EmbeddingVector& query, const EmbeddingIndex& index,
                       std::size_t k);

RetrievedContext retrieve(const ReviewPoint& point, const EmbeddingIndex& index, std::size_t k, Embedder& embedder);

// Embeds all points in one batch, then ranks each.
std::vector<RetrievedContext> retrieve_all(const std::vector<ReviewPoint>& points, const EmbeddingIndex& index,
                                           std::size_t k, Embedder& embedder);

// 1 - (selected characters / total characters).
double reduction_ratio(const Paper& paper, const RetrievedContext& context);

// Binary index file, little-endian:
//   "DRPGIDX1"  u32 version  str paper_id  str encoder  u64 fingerprint
//   u32 dim  u32 count  then count rows of (u32 paragraph_index, dim x f64)
// where str is a u32 byte length followed by UTF-8 bytes.
void save_index(const EmbeddingIndex& index, const std::filesystem::path& path);
EmbeddingIndex load_index(const std::filesystem::path& path);

// On-disk cache keyed by (paper id, encoder name, dim). An entry whose
// fingerprint no longer matches the paper is rebuilt.
class IndexCache {
public:
    explicit IndexCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

    std::filesystem::path path_for(const std::string& paper_id, const std::string& encoder, std::size_t dim) const;
    EmbeddingIndex get_or_build(const Paper& paper, Embedder& embedder);

private:
    std::filesystem::path dir_;
};

}  // namespace drpg::retriever
