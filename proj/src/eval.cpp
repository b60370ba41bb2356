#include "kgqa/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "kgqa/text.hpp"

namespace kgqa::eval {

using json = nlohmann::json;

namespace {

const std::vector<std::pair<Category, std::string>> kCategories = {
    {Category::AboutDisease, "about_disease"},
    {Category::AtRisk, "at_risk"},
    {Category::Cause, "cause"},
    {Category::DiagnosisAndTest, "diagnosis_and_test"},
    {Category::Symptom, "symptom"},
    {Category::Treatment, "treatment"},
    {Category::Other, "other"},
};

std::string require_string(const json& j, const char* key, std::size_t line_no,
                           const std::string& path) {
    if (!j.contains(key) || !j.at(key).is_string())
        throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                 ": missing string field \"" + key + "\"");
    return j.at(key).get<std::string>();
}

json parse_line(const std::string& line, std::size_t line_no, const std::string& path) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw std::runtime_error(path + ":" + std::to_string(line_no) + ": malformed record");
    return j;
}

}  // namespace

std::string category_name(Category c) {
    for (const auto& [cat, name] : kCategories)
        if (cat == c) return name;
    throw std::logic_error("unknown category value");
}

Category category_from_name(const std::string& s) {
    for (const auto& [cat, name] : kCategories)
        if (name == s) return cat;
    throw std::runtime_error("unknown category: \"" + s + "\"");
}

std::vector<TestQuestion> load_testset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open testset: " + path);
    std::vector<TestQuestion> out;
    std::set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        const json j = parse_line(line, line_no, path);
        TestQuestion q;
        q.id = require_string(j, "id", line_no, path);
        q.question = require_string(j, "question", line_no, path);
        q.category = category_from_name(require_string(j, "category", line_no, path));
        q.gold_answer = require_string(j, "gold_answer", line_no, path);
        if (q.gold_answer.empty())
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": empty gold_answer for \"" + q.id + "\"");
        if (!seen.insert(q.id).second)
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": duplicate question id \"" + q.id + "\"");
        out.push_back(std::move(q));
    }
    return out;
}

std::map<std::string, std::string> load_answers(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open answers file: " + path);
    std::map<std::string, std::string> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        const json j = parse_line(line, line_no, path);
        const std::string id = require_string(j, "id", line_no, path);
        if (!out.emplace(id, require_string(j, "answer", line_no, path)).second)
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": duplicate answer id \"" + id + "\"");
    }
    return out;
}

void save_answers(const std::map<std::string, std::string>& answers, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write answers file: " + path);
    for (const auto& [id, answer] : answers)
        out << json{{"id", id}, {"answer", answer}}.dump() << "\n";
}

void save_records(const std::vector<EvalRecord>& records, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write records file: " + path);
    for (const auto& r : records)
        out << json{{"question_id", r.question_id},
                    {"system", r.system},
                    {"metric", r.metric},
                    {"value", r.value}}
                   .dump()
            << "\n";
}

const std::vector<std::string>& known_metrics() {
    static const std::vector<std::string> kMetrics = {"rouge_l", "flesch", "bertscore", "sts",
                                                      "contradiction"};
    return kMetrics;
}

namespace {

std::vector<metrics::TokenVec> token_vectors(const std::string& txt,
                                             vdb::EmbeddingProvider& embedder) {
    std::vector<metrics::TokenVec> out;
    for (const auto& tok : text::tokenize(txt)) out.push_back({tok, embedder.embed(tok)});
    return out;
}

double compute_metric(const std::string& name, const std::string& answer,
                      const std::string& gold, const EvalProviders& providers) {
    if (name == "rouge_l") return metrics::rouge_l(answer, gold).f1;
    if (name == "flesch") return metrics::flesch_reading_ease(answer).clamped;
    if (name == "bertscore") {
        if (!providers.token_embedder)
            throw std::runtime_error("metric bertscore requires a token embedder");
        return metrics::bertscore_greedy(token_vectors(answer, *providers.token_embedder),
                                         token_vectors(gold, *providers.token_embedder))
            .f1;
    }
    if (name == "sts") {
        if (!providers.sts) throw std::runtime_error("metric sts requires an sts provider");
        return providers.sts->score(answer, gold);
    }
    if (name == "contradiction") {
        if (!providers.nli)
            throw std::runtime_error("metric contradiction requires an nli provider");
        return metrics::detect_contradiction(answer, gold, *providers.nli,
                                             providers.entailment_threshold)
                       .contradicted
                   ? 1.0
                   : 0.0;
    }
    throw std::runtime_error("unknown metric: \"" + name + "\"");
}

}  // namespace

std::vector<EvalRecord> run_evaluation(const std::vector<TestQuestion>& testset,
                                       const std::string& system_name,
                                       const std::map<std::string, std::string>& answers,
                                       const std::vector<std::string>& metrics,
                                       const EvalProviders& providers, bool strict,
                                       std::vector<std::string>* warnings) {
    for (const auto& m : metrics)
        if (std::find(known_metrics().begin(), known_metrics().end(), m) == known_metrics().end())
            throw std::runtime_error("unknown metric: \"" + m + "\"");

    std::vector<EvalRecord> records;
    for (const auto& q : testset) {
        const auto it = answers.find(q.id);
        if (it == answers.end()) {
            if (strict)
                throw std::runtime_error("no answer from system \"" + system_name +
                                         "\" for question \"" + q.id + "\"");
            if (warnings)
                warnings->push_back("skipping question \"" + q.id + "\": no answer from \"" +
                                    system_name + "\"");
            continue;
        }
        for (const auto& m : metrics)
            records.push_back({q.id, system_name, m,
                               compute_metric(m, it->second, q.gold_answer, providers)});
    }
    return records;
}

SummaryTable summarize_scores(const std::vector<EvalRecord>& records, GroupBy group_by,
                              const std::map<std::string, Category>& category_of,
                              const std::optional<std::string>& reference_system,
                              std::vector<std::string>* warnings) {
    if (records.empty()) throw std::invalid_argument("summarize_scores: no records");

    // (metric, group, system) -> values, in question order per system.
    std::map<std::string, std::map<std::string, std::map<std::string, std::vector<double>>>>
        values;
    std::set<std::string> systems;
    for (const auto& r : records) {
        systems.insert(r.system);
        std::vector<std::string> groups;
        if (group_by != GroupBy::Category) groups.push_back("overall");
        if (group_by != GroupBy::Overall) {
            const auto it = category_of.find(r.question_id);
            if (it == category_of.end())
                throw std::runtime_error("no category known for question \"" + r.question_id +
                                         "\"");
            groups.push_back(category_name(it->second));
        }
        for (const auto& g : groups) values[r.metric][g][r.system].push_back(r.value);
    }

    std::vector<std::string> group_order;
    if (group_by != GroupBy::Category) group_order.push_back("overall");
    if (group_by != GroupBy::Overall)
        for (const auto& [cat, name] : kCategories) group_order.push_back(name);

    SummaryTable table;
    table.reference_system = reference_system;
    for (const auto& [metric, by_group] : values) {
        for (const auto& group : group_order) {
            const auto git = by_group.find(group);
            if (git == by_group.end()) {
                if (warnings && group != "overall")
                    warnings->push_back("metric " + metric + ": no records in group \"" + group +
                                        "\", omitted");
                continue;
            }
            const auto& by_system = git->second;
            const std::vector<double>* ref_values = nullptr;
            if (reference_system) {
                const auto rit = by_system.find(*reference_system);
                if (rit != by_system.end()) ref_values = &rit->second;
            }
            for (const auto& [system, vals] : by_system) {
                SummaryCell cell;
                cell.metric = metric;
                cell.group = group;
                cell.system = system;
                cell.n = vals.size();
                cell.min = *std::min_element(vals.begin(), vals.end());
                cell.max = *std::max_element(vals.begin(), vals.end());
                cell.median = metrics::median_midpoint(vals);
                cell.mean = metrics::mean(vals);
                if (vals.size() >= 2) cell.std_dev = metrics::sample_std(vals);
                if (ref_values && system != *reference_system && vals.size() >= 2 &&
                    ref_values->size() >= 2)
                    cell.p_value = metrics::welch_t_test(vals, *ref_values).p;
                table.cells.push_back(std::move(cell));
            }
        }
    }
    return table;
}

std::string render_summary(const SummaryTable& table) {
    std::ostringstream out;
    char buf[160];
    auto fixed4 = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%9.4f", v);
        return std::string(buf);
    };

    std::string current_metric;
    for (const auto& cell : table.cells) {
        if (cell.metric != current_metric) {
            if (!current_metric.empty()) out << "\n";
            current_metric = cell.metric;
            out << "== " << cell.metric << " ==\n";
            std::snprintf(buf, sizeof(buf), "%-18s %-12s %3s %9s %9s %9s %9s %9s %10s\n",
                          "group", "system", "n", "min", "max", "median", "mean", "std", "p");
            out << buf;
        }
        std::snprintf(buf, sizeof(buf), "%-18s %-12s %3zu ", cell.group.c_str(),
                      cell.system.c_str(), cell.n);
        out << buf;
        out << fixed4(cell.min) << " " << fixed4(cell.max) << " " << fixed4(cell.median) << " "
            << fixed4(cell.mean) << " ";
        if (cell.std_dev)
            out << fixed4(*cell.std_dev);
        else
            out << "        -";
        if (cell.p_value) {
            std::snprintf(buf, sizeof(buf), " %10.4g", *cell.p_value);
            out << buf;
        } else {
            out << "          -";
        }
        out << "\n";
    }
    return out.str();
}

LengthFilterResult length_filter(const std::map<std::string, std::string>& answers,
                                 std::size_t max_words) {
    if (max_words == 0) throw std::invalid_argument("length_filter: max_words must be >= 1");
    LengthFilterResult result;
    for (const auto& [id, answer] : answers) {
        if (text::tokenize(answer).size() <= max_words) {
            result.answers.emplace(id, answer);
            result.kept_ids.push_back(id);
        }
    }
    return result;
}

}  // namespace kgqa::eval
