#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "kgqa/corpus.hpp"
#include "kgqa/metrics.hpp"

namespace kgqa::vdb {

struct EmbeddingVector {
    std::string id;
    std::vector<double> values;
};

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::size_t dim() const = 0;
    virtual std::vector<double> embed(const std::string& txt) = 0;
};

// Bundled reference embedder: signed hashed term frequency (FNV-1a 64-bit,
// bucket h % dim, sign from bit 32), L2-normalized. Deterministic, no model.
class HashedTfEmbedder : public EmbeddingProvider {
public:
    explicit HashedTfEmbedder(std::size_t dim = 768);
    std::size_t dim() const override { return dim_; }
    std::vector<double> embed(const std::string& txt) override;

private:
    std::size_t dim_;
};

// Unit-L2 vector from the provider; throws on dimension mismatch or a text
// with no tokens (zero vector cannot be normalized).
EmbeddingVector embed_text(const std::string& txt, EmbeddingProvider& provider,
                           const std::string& id = "query");

struct SearchResult {
    std::string id;
    double score = 0.0;
};

class VectorIndex {
public:
    // One entry per document (id -> vector over the document text); strict
    // mode aborts on any embed failure, lenient skips with a warning.
    static VectorIndex build(const std::vector<corpus::Document>& docs,
                             EmbeddingProvider& provider, bool strict = true,
                             std::vector<std::string>* warnings = nullptr);

    // Exact brute-force cosine top-k; scores descending, ties by
    // lexicographic id; min(k, size) results.
    std::vector<SearchResult> top_k(const EmbeddingVector& query, std::size_t k = 5) const;

    void persist(const std::string& dir) const;
    static VectorIndex load(const std::string& dir);

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return entries_.size(); }
    const std::string& doc_text(const std::string& id) const;
    const std::vector<double>& vector_of(const std::string& id) const;
    std::vector<std::string> ids() const;

    void add(const std::string& id, std::vector<double> vec, std::string doc_text);

private:
    std::size_t dim_ = 0;
    std::map<std::string, std::vector<double>> entries_;  // sorted ids: stable persistence
    std::map<std::string, std::string> texts_;
};

// 5 x cosine of reference embeddings; unclamped (STS fallback convention).
class EmbedderSts : public metrics::StsProvider {
public:
    explicit EmbedderSts(EmbeddingProvider& e) : embedder_(e) {}
    double score(const std::string& answer, const std::string& gold) override;

private:
    EmbeddingProvider& embedder_;
};

}  // namespace kgqa::vdb
