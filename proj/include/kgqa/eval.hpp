#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kgqa/metrics.hpp"
#include "kgqa/vdb.hpp"

namespace kgqa::eval {

enum class Category {
    AboutDisease,
    AtRisk,
    Cause,
    DiagnosisAndTest,
    Symptom,
    Treatment,
    Other,
};

std::string category_name(Category c);
Category category_from_name(const std::string& s);

struct TestQuestion {
    std::string id;
    std::string question;
    Category category = Category::Other;
    std::string gold_answer;
};

// Line records {"id","question","category","gold_answer"}.
std::vector<TestQuestion> load_testset(const std::string& path);

// Line records {"id","answer"}.
std::map<std::string, std::string> load_answers(const std::string& path);
void save_answers(const std::map<std::string, std::string>& answers, const std::string& path);

struct EvalRecord {
    std::string question_id;
    std::string system;
    std::string metric;
    double value = 0.0;
};

void save_records(const std::vector<EvalRecord>& records, const std::string& path);

// Hooks needed by the metric registry. token_embedder supplies per-token
// vectors for bertscore; sts scores on the 0-5 scale.
struct EvalProviders {
    vdb::EmbeddingProvider* token_embedder = nullptr;
    metrics::StsProvider* sts = nullptr;
    metrics::NliProvider* nli = nullptr;
    double entailment_threshold = 0.95;
};

const std::vector<std::string>& known_metrics();  // rouge_l flesch bertscore sts contradiction

// One record per (question, metric). Strict mode errors on a missing system
// answer; lenient skips it with a warning.
std::vector<EvalRecord> run_evaluation(const std::vector<TestQuestion>& testset,
                                       const std::string& system_name,
                                       const std::map<std::string, std::string>& answers,
                                       const std::vector<std::string>& metrics,
                                       const EvalProviders& providers, bool strict = true,
                                       std::vector<std::string>* warnings = nullptr);

struct SummaryCell {
    std::string metric;
    std::string group;  // "overall" or a category name
    std::string system;
    std::size_t n = 0;
    double min = 0.0;
    double max = 0.0;
    double median = 0.0;
    double mean = 0.0;
    std::optional<double> std_dev;  // sample std, reported only when n >= 2
    std::optional<double> p_value;  // vs the reference system, same metric/group
};

enum class GroupBy { Overall, Category, Both };

struct SummaryTable {
    std::vector<SummaryCell> cells;
    std::optional<std::string> reference_system;
};

// Cells ordered by metric (asc), then group (overall first, then category
// enum order), then system (asc). Empty groups are omitted with a warning.
SummaryTable summarize_scores(const std::vector<EvalRecord>& records, GroupBy group_by,
                              const std::map<std::string, Category>& category_of,
                              const std::optional<std::string>& reference_system = std::nullopt,
                              std::vector<std::string>* warnings = nullptr);

// Aligned plain-text table; stats %.4f, p-values %.4g, "-" for omitted.
std::string render_summary(const SummaryTable& table);

struct LengthFilterResult {
    std::map<std::string, std::string> answers;
    std::vector<std::string> kept_ids;  // sorted
};

// Keeps answers of at most max_words tokenizer words.
LengthFilterResult length_filter(const std::map<std::string, std::string>& answers,
                                 std::size_t max_words = 150);

}  // namespace kgqa::eval
