#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "kgqa/metrics.hpp"
#include "kgqa/rng.hpp"
#include "kgqa/vdb.hpp"

using namespace kgqa;
namespace fs = std::filesystem;

namespace {

corpus::Document doc(const std::string& id, const std::string& text) {
    return {id, "X", "overview", text, "fixture"};
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("kgqa_vdb_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() { std::error_code ec; fs::remove_all(path, ec); }
    std::string str() const { return path.string(); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

double l2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace

TEST_CASE("HashedTfEmbedder frozen bucket and sign assignments") {
    // FNV-1a 64: "a" -> 0xaf63dc4c8601ec8c (bucket 12 of 16, bit 32 clear),
    // "cat" -> 0xf5e307190ce4a327 (bucket 7, bit 32 set),
    // "dog" -> 0xcaaf3b18f47478e9 (bucket 9, bit 32 clear).
    vdb::HashedTfEmbedder e(16);
    const auto a = e.embed("a");
    REQUIRE(a.size() == 16);
    CHECK(a[12] == -1.0);
    for (std::size_t i = 0; i < 16; ++i)
        if (i != 12) CHECK(a[i] == 0.0);

    const auto mix = e.embed("cat cat dog");
    CHECK(mix[7] == 2.0);
    CHECK(mix[9] == -1.0);
}

TEST_CASE("embed_text L2-normalizes the raw counts") {
    vdb::HashedTfEmbedder e(16);
    const auto v = vdb::embed_text("cat cat dog", e);
    CHECK(v.id == "query");
    CHECK(l2(v.values) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(v.values[7] == doctest::Approx(2.0 / std::sqrt(5.0)));
    CHECK(v.values[9] == doctest::Approx(-1.0 / std::sqrt(5.0)));
}

TEST_CASE("embed_text is deterministic") {
    vdb::HashedTfEmbedder e(64);
    CHECK(vdb::embed_text("some disease text", e).values ==
          vdb::embed_text("some disease text", e).values);
}

TEST_CASE("embed_text rejects tokenless input") {
    vdb::HashedTfEmbedder e(16);
    CHECK_THROWS_AS(vdb::embed_text("", e), std::runtime_error);
    CHECK_THROWS_AS(vdb::embed_text("...", e), std::runtime_error);
}

TEST_CASE("HashedTfEmbedder rejects dimension zero") {
    CHECK_THROWS_AS(vdb::HashedTfEmbedder(0), std::invalid_argument);
}

TEST_CASE("disjoint vocabularies stay near-orthogonal at dim 768") {
    vdb::HashedTfEmbedder e(768);
    Rng rng(3476);
    for (int pair = 0; pair < 50; ++pair) {
        std::string a, b;
        for (int j = 0; j < 30; ++j) {
            for (int side = 0; side < 2; ++side) {
                std::string w = side == 0 ? "q" : "z";  // distinct prefixes: no shared tokens
                const std::size_t len = 5 + rng.below(6);
                for (std::size_t c = 0; c < len; ++c)
                    w += static_cast<char>('a' + rng.below(26));
                (side == 0 ? a : b) += w + " ";
            }
        }
        const double c = metrics::cosine(vdb::embed_text(a, e).values,
                                         vdb::embed_text(b, e).values);
        CHECK(std::abs(c) < 0.05);
    }
}

TEST_CASE("top_k orders the hand-built 2-D vectors by cosine") {
    vdb::VectorIndex index;
    index.add("a", {1.0, 0.0}, "doc a");
    index.add("b", {0.0, 1.0}, "doc b");
    index.add("c", {0.6, 0.8}, "doc c");
    const auto hits = index.top_k({"q", {1.0, 0.0}}, 5);
    REQUIRE(hits.size() == 3);
    CHECK(hits[0].id == "a");
    CHECK(hits[0].score == doctest::Approx(1.0));
    CHECK(hits[1].id == "c");
    CHECK(hits[1].score == doctest::Approx(0.6));
    CHECK(hits[2].id == "b");
    CHECK(hits[2].score == doctest::Approx(0.0));
}

TEST_CASE("top_k breaks score ties by lexicographic id") {
    vdb::VectorIndex index;
    index.add("zeta", {1.0, 0.0}, "");
    index.add("alpha", {1.0, 0.0}, "");
    index.add("mid", {0.0, 1.0}, "");
    const auto hits = index.top_k({"q", {1.0, 0.0}}, 2);
    REQUIRE(hits.size() == 2);
    CHECK(hits[0].id == "alpha");
    CHECK(hits[1].id == "zeta");
}

TEST_CASE("top_k truncates to k and validates the query") {
    vdb::VectorIndex index;
    index.add("a", {1.0, 0.0}, "");
    index.add("b", {0.0, 1.0}, "");
    CHECK(index.top_k({"q", {1.0, 0.0}}, 1).size() == 1);
    CHECK(index.top_k({"q", {1.0, 0.0}}, 9).size() == 2);
    CHECK_THROWS_AS(index.top_k({"q", {1.0, 0.0, 0.0}}, 2), std::runtime_error);
    CHECK_THROWS_AS(index.top_k({"q", {1.0, 0.0}}, 0), std::invalid_argument);
}

TEST_CASE("a stored document is its own best match") {
    vdb::HashedTfEmbedder e(128);
    const std::vector<corpus::Document> docs{
        doc("d1", "anemia causes fatigue and pale skin"),
        doc("d2", "arthritis makes joints stiff"),
        doc("d3", "diabetes raises blood sugar"),
    };
    const auto index = vdb::VectorIndex::build(docs, e);
    CHECK(index.size() == 3);
    CHECK(index.dim() == 128);
    const auto hits = index.top_k({"q", index.vector_of("d2")}, 1);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].id == "d2");
    CHECK(hits[0].score == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("build rejects an empty corpus and duplicate ids") {
    vdb::HashedTfEmbedder e(16);
    CHECK_THROWS_WITH_AS(vdb::VectorIndex::build({}, e), doctest::Contains("empty corpus"),
                         std::runtime_error);
    CHECK_THROWS_AS(vdb::VectorIndex::build({doc("d", "text one"), doc("d", "text two")}, e),
                    std::runtime_error);
}

TEST_CASE("build strictness governs embed failures") {
    vdb::HashedTfEmbedder e(16);
    const std::vector<corpus::Document> docs{doc("good", "real text"), doc("bad", "...")};
    CHECK_THROWS_AS(vdb::VectorIndex::build(docs, e, true), std::runtime_error);
    std::vector<std::string> warnings;
    const auto index = vdb::VectorIndex::build(docs, e, false, &warnings);
    CHECK(index.size() == 1);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("bad") != std::string::npos);
}

TEST_CASE("persist and load round-trip") {
    vdb::HashedTfEmbedder e(32);
    const auto index = vdb::VectorIndex::build(
        {doc("d1", "one two three"), doc("d2", "four five six")}, e);
    TempDir dir;
    index.persist(dir.str());
    const auto back = vdb::VectorIndex::load(dir.str());
    CHECK(back.size() == 2);
    CHECK(back.dim() == 32);
    CHECK(back.ids() == index.ids());
    CHECK(back.vector_of("d1") == index.vector_of("d1"));
    CHECK(back.doc_text("d2") == "four five six");
    CHECK_THROWS_AS(back.doc_text("missing"), std::runtime_error);
}

TEST_CASE("re-building from the same docs persists byte-identically") {
    const std::vector<corpus::Document> docs{
        doc("d1", "anemia causes fatigue"), doc("d2", "arthritis stiffens joints")};
    TempDir a, b;
    {
        vdb::HashedTfEmbedder e(64);
        vdb::VectorIndex::build(docs, e).persist(a.str());
    }
    {
        vdb::HashedTfEmbedder e(64);
        vdb::VectorIndex::build(docs, e).persist(b.str());
    }
    CHECK(slurp(a.path / "vectors.jsonl") == slurp(b.path / "vectors.jsonl"));
    CHECK(slurp(a.path / "texts.jsonl") == slurp(b.path / "texts.jsonl"));
    CHECK_FALSE(slurp(a.path / "vectors.jsonl").empty());
}

TEST_CASE("load rejects malformed vector files") {
    TempDir dir;
    std::ofstream(dir.path / "vectors.jsonl") << "{\"dim\": 4}\n";
    CHECK_THROWS_AS(vdb::VectorIndex::load(dir.str()), std::runtime_error);
    CHECK_THROWS_AS(vdb::VectorIndex::load("/nonexistent/nowhere"), std::runtime_error);
}

TEST_CASE("EmbedderSts scales cosine into the 0-5 convention") {
    vdb::HashedTfEmbedder e(256);
    vdb::EmbedderSts sts(e);
    CHECK(sts.score("iron deficiency anemia", "iron deficiency anemia") ==
          doctest::Approx(5.0).epsilon(1e-9));
    const double far = sts.score("completely unrelated words here", "iron deficiency anemia");
    CHECK(std::abs(far) < 1.0);
}
