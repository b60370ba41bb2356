#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "kgqa/corpus.hpp"
#include "kgqa/text.hpp"

using namespace kgqa;
namespace fs = std::filesystem;

namespace {

struct TempFile {
    fs::path path;
    explicit TempFile(const std::string& content) {
        path = fs::temp_directory_path() /
               ("kgqa_test_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)) + ".jsonl");
        std::ofstream out(path);
        out << content;
    }
    ~TempFile() { std::error_code ec; fs::remove(path, ec); }
    std::string str() const { return path.string(); }
};

const char* kTwoDocs =
    R"({"id": "d1", "disease": "Anemia", "section": "symptoms", "text": "Fatigue; Weakness", "source": "fixture"})"
    "\n"
    "\n"  // blank lines are skipped
    R"({"id": "d2", "disease": "Anemia", "section": "causes", "text": "Iron deficiency", "source": "fixture"})"
    "\n";

}  // namespace

TEST_CASE("load_documents reads valid records") {
    TempFile f(kTwoDocs);
    const auto r = corpus::load_documents(f.str());
    REQUIRE(r.documents.size() == 2);
    CHECK(r.warnings.empty());
    CHECK(r.documents[0].id == "d1");
    CHECK(r.documents[0].disease == "Anemia");
    CHECK(r.documents[0].section == "symptoms");
    CHECK(r.documents[0].text == "Fatigue; Weakness");
    CHECK(r.documents[0].source == "fixture");
    CHECK(r.documents[1].id == "d2");
}

TEST_CASE("load_documents rejects duplicate ids in both modes") {
    TempFile f(
        R"({"id": "dup", "disease": "X", "section": "causes", "text": "a", "source": "s"})"
        "\n"
        R"({"id": "dup", "disease": "Y", "section": "causes", "text": "b", "source": "s"})"
        "\n");
    CHECK_THROWS_WITH_AS(corpus::load_documents(f.str()),
                         doctest::Contains("dup"), std::runtime_error);
    CHECK_THROWS_AS(corpus::load_documents(f.str(), corpus::LoadMode::Lenient),
                    std::runtime_error);
}

TEST_CASE("load_documents strict throws on a bad record with its line number") {
    TempFile f(
        R"({"id": "d1", "disease": "X", "section": "causes", "text": "a", "source": "s"})"
        "\n"
        R"({"id": "d2", "disease": "X", "section": "causes", "source": "s"})"
        "\n");
    CHECK_THROWS_WITH_AS(corpus::load_documents(f.str()),
                         doctest::Contains("line 2"), std::runtime_error);
}

TEST_CASE("load_documents lenient turns bad records into warnings") {
    TempFile f(
        R"({"id": "d1", "disease": "X", "section": "causes", "text": "a", "source": "s"})"
        "\n"
        R"({"id": "d2", "disease": "X", "section": "causes", "source": "s"})"
        "\n"
        "not json at all\n");
    const auto r = corpus::load_documents(f.str(), corpus::LoadMode::Lenient);
    CHECK(r.documents.size() == 1);
    CHECK(r.warnings.size() == 2);
}

TEST_CASE("load_documents rejects empty text") {
    TempFile f(
        R"({"id": "d1", "disease": "X", "section": "causes", "text": "   ", "source": "s"})"
        "\n");
    CHECK_THROWS_AS(corpus::load_documents(f.str()), std::runtime_error);
    const auto r = corpus::load_documents(f.str(), corpus::LoadMode::Lenient);
    CHECK(r.documents.empty());
    CHECK(r.warnings.size() == 1);
}

TEST_CASE("load_documents on a missing file") {
    CHECK_THROWS_AS(corpus::load_documents("/nonexistent/nowhere.jsonl"), std::runtime_error);
}

TEST_CASE("expand_abbreviations replaces later standalone mentions") {
    const auto r = corpus::expand_abbreviations(
        "atopic dermatitis (AD) is itchy. AD affects skin.");
    CHECK(r.text == "atopic dermatitis (AD) is itchy. atopic dermatitis affects skin.");
    REQUIRE(r.definitions.size() == 1);
    CHECK(r.definitions.at("AD") == "atopic dermatitis");
}

TEST_CASE("expand_abbreviations is a no-op without definitions") {
    const auto r = corpus::expand_abbreviations("no abbreviations here");
    CHECK(r.text == "no abbreviations here");
    CHECK(r.definitions.empty());
}

TEST_CASE("expand_abbreviations handles multiple definitions and is idempotent") {
    const std::string src =
        "chronic kidney disease (CKD) and atopic dermatitis (AD) differ. "
        "CKD harms kidneys. AD harms skin.";
    const auto once = corpus::expand_abbreviations(src);
    CHECK(once.definitions.size() == 2);
    CHECK(once.definitions.at("CKD") == "chronic kidney disease");
    CHECK(once.definitions.at("AD") == "atopic dermatitis");
    CHECK(once.text.find("chronic kidney disease harms kidneys.") != std::string::npos);
    CHECK(once.text.find("atopic dermatitis harms skin.") != std::string::npos);
    const auto twice = corpus::expand_abbreviations(once.text);
    CHECK(twice.text == once.text);
}

TEST_CASE("expand_abbreviations requires short-form letters in order in the long form") {
    const auto r = corpus::expand_abbreviations("some phrase (XYZ) appears. XYZ again.");
    CHECK(r.definitions.empty());
    CHECK(r.text == "some phrase (XYZ) appears. XYZ again.");
}

TEST_CASE("expand_abbreviations does not touch substrings of larger words") {
    const auto r = corpus::expand_abbreviations(
        "atopic dermatitis (AD) is itchy. ADVANCED cases are worse.");
    CHECK(r.text.find("ADVANCED") != std::string::npos);
    CHECK(r.text.find("atopic dermatitisVANCED") == std::string::npos);
}

TEST_CASE("resolve_coreferences rewrites sentence-initial pronouns after a mention") {
    const auto out = corpus::resolve_coreferences(
        "Eczema is a prevalent disease in Asia. It is particularly found in infants.",
        "Eczema");
    CHECK(out ==
          "Eczema is a prevalent disease in Asia. Eczema is particularly found in infants.");
}

TEST_CASE("resolve_coreferences handles This and They too") {
    const auto out = corpus::resolve_coreferences(
        "Anemia is common. This condition is treatable. They said so.", "Anemia");
    CHECK(out.find("Anemia condition is treatable.") != std::string::npos);
    CHECK(out.find("They said so.") == std::string::npos);
}

TEST_CASE("resolve_coreferences leaves text without pronouns unchanged") {
    const std::string s = "Anemia is common. Doctors treat anemia.";
    CHECK(corpus::resolve_coreferences(s, "Anemia") == s);
}

TEST_CASE("resolve_coreferences needs a prior mention") {
    const std::string s = "It is common. Anemia affects many.";
    CHECK(corpus::resolve_coreferences(s, "Anemia") == s);
}

TEST_CASE("resolve_coreferences rejects an empty entity") {
    CHECK_THROWS_AS(corpus::resolve_coreferences("It is fine.", ""), std::invalid_argument);
}

namespace {
class UpperCoref : public corpus::CorefProvider {
public:
    std::string resolve(const std::string& txt, const std::string& entity) override {
        return entity + ": " + txt;
    }
};
}  // namespace

TEST_CASE("resolve_coreferences defers to a configured provider") {
    UpperCoref provider;
    const auto out = corpus::resolve_coreferences("It is fine.", "Anemia", &provider);
    CHECK(out == "Anemia: It is fine.");
}

TEST_CASE("chunk_paragraphs splits on blank lines") {
    corpus::Document d{"d1", "X", "overview", "First block here.\n\nSecond block here.", "s"};
    const auto ps = corpus::chunk_paragraphs({d}, 1000);
    REQUIRE(ps.size() == 2);
    CHECK(ps[0].doc_id == "d1");
    CHECK(ps[0].ordinal == 0);
    CHECK(ps[1].ordinal == 1);
    CHECK(ps[0].text == "First block here.");
    CHECK(ps[1].text == "Second block here.");
    CHECK(ps[0].token_count == 3);
}

TEST_CASE("chunk_paragraphs yields nothing for empty text") {
    corpus::Document d{"d1", "X", "overview", "   \n\n  ", "s"};
    CHECK(corpus::chunk_paragraphs({d}, 100).empty());
}

TEST_CASE("chunk_paragraphs re-splits long blocks at sentence boundaries") {
    std::string block;
    for (int i = 0; i < 30; ++i) block += "one two three four five six seven eight nine ten. ";
    corpus::Document d{"d1", "X", "overview", block, "s"};
    const auto ps = corpus::chunk_paragraphs({d}, 100);
    CHECK(ps.size() >= 3);
    std::string joined;
    for (std::size_t i = 0; i < ps.size(); ++i) {
        CHECK(ps[i].token_count <= 100);
        CHECK(ps[i].token_count == text::tokenize(ps[i].text).size());
        CHECK(ps[i].ordinal == i);
        joined += ps[i].text;
        joined += " ";
    }
    CHECK(text::normalize(joined) == text::normalize(block));
}

TEST_CASE("chunk_paragraphs hard-splits a single oversized sentence") {
    corpus::Document d{"d1", "X", "overview",
                       "alpha beta gamma delta epsilon zeta eta theta iota kappa", "s"};
    const auto ps = corpus::chunk_paragraphs({d}, 3);
    REQUIRE(ps.size() == 4);
    for (const auto& p : ps) CHECK(p.token_count <= 3);
    std::string joined;
    for (const auto& p : ps) { joined += p.text; joined += " "; }
    CHECK(text::normalize(joined) == "alpha beta gamma delta epsilon zeta eta theta iota kappa");
}

TEST_CASE("chunk_paragraphs restarts ordinals per document") {
    corpus::Document a{"a", "X", "overview", "One.\n\nTwo.", "s"};
    corpus::Document b{"b", "X", "overview", "Three.", "s"};
    const auto ps = corpus::chunk_paragraphs({a, b}, 100);
    REQUIRE(ps.size() == 3);
    CHECK(ps[0].ordinal == 0);
    CHECK(ps[1].ordinal == 1);
    CHECK(ps[2].doc_id == "b");
    CHECK(ps[2].ordinal == 0);
}

TEST_CASE("chunk_paragraphs validates the cap") {
    CHECK_THROWS_AS(corpus::chunk_paragraphs({}, 0), std::invalid_argument);
}

TEST_CASE("qa pairs round-trip") {
    TempFile f("");
    const std::vector<corpus::QAPair> pairs{
        {"What causes anemia?", "Iron deficiency.", "d1+0"},
        {"Is it treatable?", "Yes.", "d1+1"},
    };
    corpus::save_qa_pairs(pairs, f.str());
    const auto back = corpus::load_qa_pairs(f.str());
    REQUIRE(back.size() == 2);
    CHECK(back[0].question == pairs[0].question);
    CHECK(back[0].answer == pairs[0].answer);
    CHECK(back[0].source == pairs[0].source);
    CHECK(back[1].question == pairs[1].question);
}

TEST_CASE("save_paragraphs writes one record per paragraph") {
    TempFile f("");
    corpus::Document d{"d1", "X", "overview", "One block.\n\nAnother block.", "s"};
    corpus::save_paragraphs(corpus::chunk_paragraphs({d}, 100), f.str());
    std::ifstream in(f.str());
    std::string line;
    std::size_t lines = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++lines;
    CHECK(lines == 2);
}
