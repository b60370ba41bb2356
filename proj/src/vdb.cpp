#include "kgqa/vdb.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "kgqa/text.hpp"

namespace kgqa::vdb {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

double l2_norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace

HashedTfEmbedder::HashedTfEmbedder(std::size_t dim) : dim_(dim) {
    if (dim == 0) throw std::invalid_argument("embedding dimension must be positive");
}

std::vector<double> HashedTfEmbedder::embed(const std::string& txt) {
    std::vector<double> v(dim_, 0.0);
    for (const auto& tok : text::tokenize(txt)) {
        const std::uint64_t h = fnv1a(tok);
        const std::size_t bucket = static_cast<std::size_t>(h % dim_);
        const double sign = ((h >> 32) & 1ULL) != 0 ? 1.0 : -1.0;
        v[bucket] += sign;
    }
    return v;
}

EmbeddingVector embed_text(const std::string& txt, EmbeddingProvider& provider,
                           const std::string& id) {
    std::vector<double> v = provider.embed(txt);
    if (v.size() != provider.dim())
        throw std::runtime_error("embedding provider returned wrong dimension");
    const double n = l2_norm(v);
    if (n == 0.0)
        throw std::runtime_error("cannot embed text with no tokens: \"" + txt + "\"");
    for (double& x : v) x /= n;
    return {id, std::move(v)};
}

void VectorIndex::add(const std::string& id, std::vector<double> vec, std::string doc_text) {
    if (entries_.empty())
        dim_ = vec.size();
    else if (vec.size() != dim_)
        throw std::runtime_error("vector dimension mismatch for id \"" + id + "\"");
    if (!entries_.emplace(id, std::move(vec)).second)
        throw std::runtime_error("duplicate index id \"" + id + "\"");
    texts_.emplace(id, std::move(doc_text));
}

VectorIndex VectorIndex::build(const std::vector<corpus::Document>& docs,
                               EmbeddingProvider& provider, bool strict,
                               std::vector<std::string>* warnings) {
    if (docs.empty()) throw std::runtime_error("empty corpus");
    VectorIndex index;
    for (const auto& d : docs) {
        try {
            index.add(d.id, embed_text(d.text, provider, d.id).values, d.text);
        } catch (const std::exception& e) {
            if (strict) throw;
            if (warnings) warnings->push_back(std::string("skipping ") + d.id + ": " + e.what());
        }
    }
    if (index.size() == 0) throw std::runtime_error("empty corpus");
    return index;
}

std::vector<SearchResult> VectorIndex::top_k(const EmbeddingVector& query, std::size_t k) const {
    if (query.values.size() != dim_)
        throw std::runtime_error("query dimension mismatch");
    if (k < 1) throw std::invalid_argument("top_k: k must be >= 1");
    std::vector<SearchResult> all;
    all.reserve(entries_.size());
    for (const auto& [id, vec] : entries_) {
        double dot = 0.0;
        for (std::size_t i = 0; i < dim_; ++i) dot += vec[i] * query.values[i];
        all.push_back({id, dot});
    }
    std::sort(all.begin(), all.end(), [](const SearchResult& a, const SearchResult& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.id < b.id;
    });
    if (all.size() > k) all.resize(k);
    return all;
}

const std::string& VectorIndex::doc_text(const std::string& id) const {
    const auto it = texts_.find(id);
    if (it == texts_.end()) throw std::runtime_error("unknown index id \"" + id + "\"");
    return it->second;
}

const std::vector<double>& VectorIndex::vector_of(const std::string& id) const {
    const auto it = entries_.find(id);
    if (it == entries_.end()) throw std::runtime_error("unknown index id \"" + id + "\"");
    return it->second;
}

std::vector<std::string> VectorIndex::ids() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& [id, _] : entries_) out.push_back(id);
    return out;
}

void VectorIndex::persist(const std::string& dir) const {
    fs::create_directories(dir);
    {
        std::ofstream out(fs::path(dir) / "vectors.jsonl");
        if (!out) throw std::runtime_error("cannot write vectors file in " + dir);
        out << json{{"dim", dim_}, {"count", entries_.size()}}.dump() << "\n";
        for (const auto& [id, vec] : entries_)
            out << json{{"id", id}, {"vector", vec}}.dump() << "\n";
    }
    {
        std::ofstream out(fs::path(dir) / "texts.jsonl");
        if (!out) throw std::runtime_error("cannot write texts file in " + dir);
        for (const auto& [id, txt] : texts_)
            out << json{{"id", id}, {"text", txt}}.dump() << "\n";
    }
}

VectorIndex VectorIndex::load(const std::string& dir) {
    VectorIndex index;
    std::ifstream in(fs::path(dir) / "vectors.jsonl");
    if (!in) throw std::runtime_error("cannot open vectors file in " + dir);
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("vectors file: missing metadata line");
    json meta = json::parse(line, nullptr, false);
    if (meta.is_discarded() || !meta.contains("dim") || !meta.contains("count"))
        throw std::runtime_error("vectors file: bad metadata line");
    const std::size_t dim = meta.at("dim").get<std::size_t>();
    const std::size_t count = meta.at("count").get<std::size_t>();

    std::map<std::string, std::string> texts;
    {
        std::ifstream tin(fs::path(dir) / "texts.jsonl");
        if (tin) {
            std::string tline;
            while (std::getline(tin, tline)) {
                if (text::trim(tline).empty()) continue;
                json j = json::parse(tline, nullptr, false);
                if (j.is_discarded() || !j.contains("id") || !j.contains("text"))
                    throw std::runtime_error("texts file: bad record");
                texts[j.at("id").get<std::string>()] = j.at("text").get<std::string>();
            }
        }
    }

    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.contains("id") || !j.contains("vector"))
            throw std::runtime_error("vectors file: bad record at line " + std::to_string(lineno));
        const std::string id = j.at("id").get<std::string>();
        std::vector<double> vec = j.at("vector").get<std::vector<double>>();
        if (vec.size() != dim)
            throw std::runtime_error("vectors file: dimension mismatch at line " +
                                     std::to_string(lineno));
        auto it = texts.find(id);
        index.add(id, std::move(vec), it == texts.end() ? std::string{} : it->second);
    }
    if (index.size() != count)
        throw std::runtime_error("vectors file: count mismatch (expected " +
                                 std::to_string(count) + ", got " + std::to_string(index.size()) +
                                 ")");
    index.dim_ = dim;
    return index;
}

double EmbedderSts::score(const std::string& answer, const std::string& gold) {
    const auto a = embed_text(answer, embedder_, "a");
    const auto g = embed_text(gold, embedder_, "g");
    double dot = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) dot += a.values[i] * g.values[i];
    return 5.0 * dot;
}

}  // namespace kgqa::vdb
