#include "kgqa/jr.hpp"

#include <algorithm>
#include <stdexcept>

#include "kgqa/metrics.hpp"
#include "kgqa/text.hpp"

namespace kgqa::jr {

std::optional<DiseaseMatch> match_disease(const std::string& question,
                                          const kg::KnowledgeGraph& graph, double threshold) {
    const auto q_tokens = text::tokenize(question);
    if (q_tokens.empty()) return std::nullopt;

    struct Name {
        int id;
        std::string norm;
    };
    std::vector<Name> names;
    std::size_t longest = 1;
    for (int id : graph.entities_of_kind(kg::EntityKind::Disease)) {
        const auto& e = graph.entity(id);
        names.push_back({id, e.norm_label});
        longest = std::max(longest, text::tokenize(e.norm_label).size());
    }
    if (names.empty()) return std::nullopt;

    std::optional<DiseaseMatch> best;
    std::string best_norm;
    for (std::size_t n = 1; n <= std::min(longest, q_tokens.size()); ++n) {
        for (std::size_t i = 0; i + n <= q_tokens.size(); ++i) {
            std::string window = q_tokens[i];
            for (std::size_t j = 1; j < n; ++j) window += " " + q_tokens[i + j];
            for (const auto& name : names) {
                const double ratio = text::similarity_ratio(window, name.norm);
                if (ratio < threshold) continue;
                const bool better =
                    !best || ratio > best->ratio ||
                    (ratio == best->ratio && (name.norm.size() > best_norm.size() ||
                                              (name.norm.size() == best_norm.size() &&
                                               name.norm < best_norm)));
                if (better) {
                    best = DiseaseMatch{name.id, ratio};
                    best_norm = name.norm;
                }
            }
        }
    }
    return best;
}

std::map<std::string, std::string> default_relation_aliases() {
    return {
        {"symptom", "symptoms"},      {"symptoms", "symptoms"},
        {"cause", "causes"},          {"causes", "causes"},
        {"reason", "causes"},         {"reasons", "causes"},
        {"caused", "causes"},         {"treatment", "treatment"},
        {"treat", "treatment"},       {"treated", "treatment"},
        {"treating", "treatment"},    {"cure", "treatment"},
        {"diagnosis", "diagnosis"},
        {"diagnosed", "diagnosis"},   {"diagnose", "diagnosis"},
        {"test", "diagnosis"},
        {"tests", "diagnosis"},       {"risk", "at_risk"},
        {"risks", "at_risk"},         {"prevention", "prevention"},
        {"prevent", "prevention"},    {"avoid", "prevention"},
    };
}

std::optional<std::string> match_relation(const std::string& question,
                                          const std::map<std::string, std::string>& aliases) {
    if (aliases.empty()) throw std::invalid_argument("match_relation: empty alias map");
    const auto q_tokens = text::tokenize(question);

    // Effective table: the aliases plus each relation's own name and a naive
    // singular/plural variant of it.
    std::map<std::string, std::string> table = aliases;
    for (const auto& [alias, rel] : aliases) {
        table.emplace(rel, rel);
        if (rel.size() > 1 && rel.back() == 's')
            table.emplace(rel.substr(0, rel.size() - 1), rel);
        else
            table.emplace(rel + "s", rel);
    }

    std::optional<std::string> best_rel;
    std::vector<std::string> best_phrase_tokens;
    std::string best_phrase;
    for (const auto& [phrase, rel] : table) {
        const auto p_tokens = text::tokenize(phrase);
        if (!text::contains_token_seq(q_tokens, p_tokens)) continue;
        const bool better =
            !best_rel || p_tokens.size() > best_phrase_tokens.size() ||
            (p_tokens.size() == best_phrase_tokens.size() &&
             (phrase.size() > best_phrase.size() ||
              (phrase.size() == best_phrase.size() && phrase < best_phrase)));
        if (better) {
            best_rel = rel;
            best_phrase_tokens = p_tokens;
            best_phrase = phrase;
        }
    }
    return best_rel;
}

std::vector<gen::Candidate> rerank_candidates(std::vector<gen::Candidate> candidates,
                                              const std::string& subgraph_text) {
    if (candidates.empty()) throw std::invalid_argument("rerank_candidates: no candidates");
    for (auto& c : candidates)
        c.rerank_score = metrics::rouge_l(c.answer_text, subgraph_text).f1;
    return candidates;
}

FinalAnswer answer_question(const std::string& question_id, const std::string& question,
                            const kg::KnowledgeGraph& graph, const vdb::VectorIndex& index,
                            vdb::EmbeddingProvider& embedder, gen::GeneratorProvider& provider,
                            const gen::GenerationParams& params, const AskOptions& opts) {
    std::vector<std::pair<std::string, std::string>> contexts;
    if (opts.use_vdb) {
        const auto qvec = vdb::embed_text(question, embedder, question_id);
        for (const auto& r : index.top_k(qvec, opts.k))
            contexts.emplace_back(r.id, index.doc_text(r.id));
    } else {
        // No-VDB ablation: a single provider call with an empty context.
        contexts.emplace_back("", "");
    }

    auto candidates = gen::generate_candidates(question_id, question, contexts, params, provider);

    FinalAnswer fa;
    fa.parse.raw_question = question;
    fa.parse.disease = match_disease(question, graph, opts.fuzzy_threshold);
    fa.parse.relation = match_relation(question, opts.relation_aliases);

    if (fa.parse.disease) {
        const std::string rel = fa.parse.relation ? *fa.parse.relation : kg::kAllRelations;
        const auto nodes =
            graph.extract_subgraph(fa.parse.disease->entity_id, rel, opts.synonym_expansion);
        fa.subgraph_text = kg::KnowledgeGraph::subgraph_text(nodes);
    }

    const bool joint = opts.joint_reasoning && fa.parse.disease.has_value();
    if (joint) {
        candidates = rerank_candidates(std::move(candidates), fa.subgraph_text);
        fa.mode = AnswerMode::JointReasoning;
    } else {
        // Ablation / fallback: first candidate; scores are not computed.
        for (auto& c : candidates) c.rerank_score = 0.0;
        fa.mode = AnswerMode::FallbackFirstCandidate;
    }

    int chosen = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const double s = candidates[i].rerank_score.value_or(0.0);
        fa.rerank_scores.push_back(s);
        if (s > best) {  // strict: ties keep the lowest rank
            best = s;
            chosen = static_cast<int>(i);
        }
    }
    if (!joint) chosen = 0;
    fa.chosen_rank = chosen;
    fa.answer_text = candidates[static_cast<std::size_t>(chosen)].answer_text;
    fa.candidates = std::move(candidates);
    return fa;
}

}  // namespace kgqa::jr
