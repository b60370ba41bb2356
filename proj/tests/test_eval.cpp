#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "kgqa/eval.hpp"
#include "kgqa/metrics.hpp"
#include "kgqa/vdb.hpp"

using namespace kgqa;
namespace fs = std::filesystem;

namespace {

struct TempFile {
    fs::path path;
    explicit TempFile(const std::string& content) {
        path = fs::temp_directory_path() /
               ("kgqa_eval_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)) + ".jsonl");
        std::ofstream out(path);
        out << content;
    }
    ~TempFile() { std::error_code ec; fs::remove(path, ec); }
    std::string str() const { return path.string(); }
};

std::vector<eval::TestQuestion> tiny_testset() {
    return {
        {"q1", "what are the symptoms of anemia?", eval::Category::Symptom,
         "Fatigue and pale skin."},
        {"q2", "how is anemia treated?", eval::Category::Treatment,
         "Iron supplements treat anemia."},
        {"q3", "what causes anemia?", eval::Category::Cause, "Iron deficiency causes anemia."},
    };
}

std::map<std::string, std::string> echo_answers() {
    return {
        {"q1", "Fatigue and pale skin."},
        {"q2", "Iron supplements treat anemia."},
        {"q3", "Iron deficiency causes anemia."},
    };
}

struct Providers {
    vdb::HashedTfEmbedder embedder{64};
    vdb::EmbedderSts sts{embedder};
    metrics::StubNliProvider nli;
    eval::EvalProviders handles{&embedder, &sts, &nli, 0.95};
};

std::vector<eval::EvalRecord> one_system(const std::string& system,
                                         const std::vector<double>& values,
                                         const std::string& metric = "rouge_l") {
    std::vector<eval::EvalRecord> out;
    for (std::size_t i = 0; i < values.size(); ++i)
        out.push_back({"q" + std::to_string(i + 1), system, metric, values[i]});
    return out;
}

}  // namespace

TEST_CASE("category names round-trip") {
    using eval::Category;
    const std::vector<std::pair<Category, std::string>> expected{
        {Category::AboutDisease, "about_disease"},
        {Category::AtRisk, "at_risk"},
        {Category::Cause, "cause"},
        {Category::DiagnosisAndTest, "diagnosis_and_test"},
        {Category::Symptom, "symptom"},
        {Category::Treatment, "treatment"},
        {Category::Other, "other"},
    };
    for (const auto& [cat, name] : expected) {
        CHECK(eval::category_name(cat) == name);
        CHECK(eval::category_from_name(name) == cat);
    }
    CHECK_THROWS_AS(eval::category_from_name("nonsense"), std::runtime_error);
}

TEST_CASE("load_testset reads records and validates them") {
    TempFile good(
        R"({"id": "q1", "question": "what?", "category": "symptom", "gold_answer": "Ans."})"
        "\n"
        R"({"id": "q2", "question": "how?", "category": "other", "gold_answer": "So."})"
        "\n");
    const auto ts = eval::load_testset(good.str());
    REQUIRE(ts.size() == 2);
    CHECK(ts[0].id == "q1");
    CHECK(ts[0].category == eval::Category::Symptom);
    CHECK(ts[1].gold_answer == "So.");

    TempFile dup(
        R"({"id": "q1", "question": "a?", "category": "other", "gold_answer": "x"})"
        "\n"
        R"({"id": "q1", "question": "b?", "category": "other", "gold_answer": "y"})"
        "\n");
    CHECK_THROWS_WITH_AS(eval::load_testset(dup.str()), doctest::Contains("q1"),
                         std::runtime_error);

    TempFile empty_gold(
        R"({"id": "q1", "question": "a?", "category": "other", "gold_answer": ""})"
        "\n");
    CHECK_THROWS_AS(eval::load_testset(empty_gold.str()), std::runtime_error);

    TempFile bad("{broken\n");
    CHECK_THROWS_WITH_AS(eval::load_testset(bad.str()), doctest::Contains(":1:"),
                         std::runtime_error);
}

TEST_CASE("answers round-trip through save and load") {
    TempFile f("");
    const std::map<std::string, std::string> answers{{"q1", "first"}, {"q2", "second"}};
    eval::save_answers(answers, f.str());
    CHECK(eval::load_answers(f.str()) == answers);
}

TEST_CASE("run_evaluation emits one record per question and metric") {
    Providers p;
    const auto records = eval::run_evaluation(tiny_testset(), "echo", echo_answers(),
                                              {"rouge_l", "flesch"}, p.handles);
    REQUIRE(records.size() == 6);
    for (const auto& r : records) {
        CHECK(r.system == "echo");
        CHECK((r.metric == "rouge_l" || r.metric == "flesch"));
    }
    // echoing the gold answer scores a perfect rouge
    for (const auto& r : records)
        if (r.metric == "rouge_l") CHECK(r.value == doctest::Approx(1.0));
}

TEST_CASE("run_evaluation metric values match the metric library") {
    Providers p;
    const auto testset = tiny_testset();
    const auto answers = echo_answers();
    const auto records = eval::run_evaluation(testset, "echo", answers,
                                              {"flesch", "bertscore", "sts"}, p.handles);
    for (const auto& r : records) {
        if (r.question_id != "q2") continue;
        if (r.metric == "flesch")
            CHECK(r.value ==
                  doctest::Approx(metrics::flesch_reading_ease(answers.at("q2")).clamped));
        if (r.metric == "bertscore") CHECK(r.value == doctest::Approx(1.0));
        if (r.metric == "sts") CHECK(r.value == doctest::Approx(5.0));
    }
}

TEST_CASE("contradiction metric is an indicator") {
    Providers p;
    p.nli.set("Iron supplements treat anemia.", "Iron does not help.", {0.01, 0.02, 0.97});
    const auto records = eval::run_evaluation(
        tiny_testset(), "sys",
        {{"q1", "Fatigue and pale skin."},
         {"q2", "Iron does not help."},
         {"q3", "Iron deficiency causes anemia."}},
        {"contradiction"}, p.handles);
    REQUIRE(records.size() == 3);
    for (const auto& r : records) {
        if (r.question_id == "q2")
            CHECK(r.value == 1.0);
        else
            CHECK(r.value == 0.0);
    }
}

TEST_CASE("run_evaluation rejects unknown metrics") {
    Providers p;
    CHECK_THROWS_WITH_AS(eval::run_evaluation(tiny_testset(), "echo", echo_answers(),
                                              {"rouge_l", "bleu"}, p.handles),
                         doctest::Contains("bleu"), std::runtime_error);
}

TEST_CASE("run_evaluation strictness on missing answers") {
    Providers p;
    auto answers = echo_answers();
    answers.erase("q2");
    CHECK_THROWS_AS(
        eval::run_evaluation(tiny_testset(), "echo", answers, {"rouge_l"}, p.handles, true),
        std::runtime_error);
    std::vector<std::string> warnings;
    const auto records = eval::run_evaluation(tiny_testset(), "echo", answers, {"rouge_l"},
                                              p.handles, false, &warnings);
    CHECK(records.size() == 2);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("q2") != std::string::npos);
}

TEST_CASE("known_metrics lists the five registry entries") {
    CHECK(eval::known_metrics() == std::vector<std::string>{"rouge_l", "flesch", "bertscore",
                                                            "sts", "contradiction"});
}

TEST_CASE("summarize_scores computes the summary statistics") {
    const auto table = eval::summarize_scores(one_system("sys", {1.0, 2.0, 3.0, 4.0}),
                                              eval::GroupBy::Overall, {});
    REQUIRE(table.cells.size() == 1);
    const auto& c = table.cells[0];
    CHECK(c.metric == "rouge_l");
    CHECK(c.group == "overall");
    CHECK(c.system == "sys");
    CHECK(c.n == 4);
    CHECK(c.min == doctest::Approx(1.0));
    CHECK(c.max == doctest::Approx(4.0));
    CHECK(c.median == doctest::Approx(2.5));
    CHECK(c.mean == doctest::Approx(2.5));
    REQUIRE(c.std_dev.has_value());
    CHECK(*c.std_dev == doctest::Approx(1.2909944487358056));
    CHECK_FALSE(c.p_value.has_value());
}

TEST_CASE("summarize_scores omits the std of a single observation") {
    const auto table =
        eval::summarize_scores(one_system("sys", {0.5}), eval::GroupBy::Overall, {});
    REQUIRE(table.cells.size() == 1);
    CHECK_FALSE(table.cells[0].std_dev.has_value());
}

TEST_CASE("summarize_scores attaches p-values against the reference") {
    auto records = one_system("joint", {0.5, 0.6, 0.7});
    const auto baseline = one_system("baseline", {0.5, 0.6, 0.7});
    records.insert(records.end(), baseline.begin(), baseline.end());
    const auto table = eval::summarize_scores(records, eval::GroupBy::Overall, {},
                                              std::string("joint"));
    REQUIRE(table.cells.size() == 2);
    // systems sort ascending: baseline first, then the reference itself
    CHECK(table.cells[0].system == "baseline");
    REQUIRE(table.cells[0].p_value.has_value());
    CHECK(*table.cells[0].p_value == doctest::Approx(1.0));  // identical samples
    CHECK(table.cells[1].system == "joint");
    CHECK_FALSE(table.cells[1].p_value.has_value());  // no p against itself
}

TEST_CASE("p-values need two observations on both sides") {
    std::vector<eval::EvalRecord> records{
        {"q1", "joint", "rouge_l", 0.5},
        {"q2", "joint", "rouge_l", 0.6},
        {"q1", "baseline", "rouge_l", 0.4},
    };
    const auto table = eval::summarize_scores(records, eval::GroupBy::Overall, {},
                                              std::string("joint"));
    for (const auto& c : table.cells) CHECK_FALSE(c.p_value.has_value());
}

TEST_CASE("summarize_scores orders cells by metric, group, then system") {
    std::vector<eval::EvalRecord> records;
    const std::map<std::string, eval::Category> cats{
        {"q1", eval::Category::Symptom}, {"q2", eval::Category::Cause}};
    for (const auto& sys : {"b_sys", "a_sys"}) {
        records.push_back({"q1", sys, "sts", 1.0});
        records.push_back({"q2", sys, "sts", 2.0});
        records.push_back({"q1", sys, "rouge_l", 0.1});
        records.push_back({"q2", sys, "rouge_l", 0.2});
    }
    std::vector<std::string> warnings;
    const auto table =
        eval::summarize_scores(records, eval::GroupBy::Both, cats, std::nullopt, &warnings);
    // 2 metrics x (overall + cause + symptom) x 2 systems
    REQUIRE(table.cells.size() == 12);
    CHECK(table.cells[0].metric == "rouge_l");
    CHECK(table.cells[0].group == "overall");
    CHECK(table.cells[0].system == "a_sys");
    CHECK(table.cells[1].system == "b_sys");
    CHECK(table.cells[2].group == "cause");  // enum order puts cause before symptom
    CHECK(table.cells[4].group == "symptom");
    CHECK(table.cells[6].metric == "sts");
    // five categories have no records for each metric: warned and omitted
    CHECK(warnings.size() == 10);
    CHECK(warnings[0].find("omitted") != std::string::npos);
}

TEST_CASE("summarize_scores is insensitive to record order") {
    auto records = one_system("sys", {0.2, 0.9, 0.5});
    auto reversed = records;
    std::reverse(reversed.begin(), reversed.end());
    const auto a = eval::summarize_scores(records, eval::GroupBy::Overall, {});
    const auto b = eval::summarize_scores(reversed, eval::GroupBy::Overall, {});
    CHECK(a.cells[0].median == b.cells[0].median);
    CHECK(a.cells[0].mean == b.cells[0].mean);
    CHECK(a.cells[0].min == b.cells[0].min);
}

TEST_CASE("summarize_scores requires records and known categories") {
    CHECK_THROWS_AS(eval::summarize_scores({}, eval::GroupBy::Overall, {}),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        eval::summarize_scores(one_system("sys", {0.5}), eval::GroupBy::Both, {}),
        std::runtime_error);
}

TEST_CASE("render_summary formats sections, stats, and dashes") {
    auto records = one_system("joint", {0.5, 0.6, 0.7});
    const auto single = one_system("single", {0.4});
    records.insert(records.end(), single.begin(), single.end());
    records.push_back({"q1", "joint", "sts", 3.0});
    const auto table = eval::summarize_scores(records, eval::GroupBy::Overall, {},
                                              std::string("joint"));
    const auto text = eval::render_summary(table);
    CHECK(text.find("== rouge_l ==") != std::string::npos);
    CHECK(text.find("== sts ==") != std::string::npos);
    CHECK(text.find("group") != std::string::npos);      // header row
    CHECK(text.find("0.6000") != std::string::npos);     // joint mean/median
    CHECK(text.find("overall") != std::string::npos);
    CHECK(text.find("-") != std::string::npos);          // omitted std / p markers
    // single-observation row: std and p columns are dashes
    const auto pos = text.find("single");
    REQUIRE(pos != std::string::npos);
    const auto line = text.substr(pos, text.find('\n', pos) - pos);
    CHECK(line.find("0.4000") != std::string::npos);
    CHECK(line.find("-") != std::string::npos);
}

TEST_CASE("length_filter keeps answers within the word budget") {
    std::string w150, w151;
    for (int i = 0; i < 150; ++i) w150 += "word ";
    w151 = w150 + "extra";
    const std::map<std::string, std::string> answers{
        {"short", "brief answer"}, {"exact", w150}, {"long", w151}};
    const auto r = eval::length_filter(answers, 150);
    CHECK(r.kept_ids == std::vector<std::string>{"exact", "short"});
    CHECK(r.answers.size() == 2);
    CHECK(r.answers.count("long") == 0);
    CHECK_THROWS_AS(eval::length_filter(answers, 0), std::invalid_argument);
}

TEST_CASE("save_records writes one line per record") {
    TempFile f("");
    eval::save_records(one_system("sys", {0.1, 0.2}), f.str());
    std::ifstream in(f.str());
    std::string line;
    std::size_t lines = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++lines;
    CHECK(lines == 2);
}
