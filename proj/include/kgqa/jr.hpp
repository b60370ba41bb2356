#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kgqa/gen.hpp"
#include "kgqa/kg.hpp"
#include "kgqa/vdb.hpp"

namespace kgqa::jr {

struct DiseaseMatch {
    int entity_id = -1;
    double ratio = 0.0;
};

struct QuestionParse {
    std::optional<DiseaseMatch> disease;
    std::optional<std::string> relation;
    std::string raw_question;
};

enum class AnswerMode { JointReasoning, FallbackFirstCandidate };

struct FinalAnswer {
    std::string answer_text;
    int chosen_rank = 0;
    std::vector<double> rerank_scores;
    QuestionParse parse;
    AnswerMode mode = AnswerMode::FallbackFirstCandidate;
    std::vector<gen::Candidate> candidates;
    std::string subgraph_text;
};

// Sliding n-gram fuzzy match over the question against every disease name;
// ratio = 1 - levenshtein/max(len) on normalized strings. Ties prefer the
// longer disease name, then lexicographic order.
std::optional<DiseaseMatch> match_disease(const std::string& question,
                                          const kg::KnowledgeGraph& graph,
                                          double threshold = 0.85);

// Alias phrase -> relation name. Seeded with the test-category vocabulary;
// relation names themselves (and naive singular/plural variants) always
// match.
std::map<std::string, std::string> default_relation_aliases();

std::optional<std::string> match_relation(const std::string& question,
                                          const std::map<std::string, std::string>& aliases);

// Fills each candidate's rerank_score with ROUGE-L F1 against subgraph_text;
// order preserved.
std::vector<gen::Candidate> rerank_candidates(std::vector<gen::Candidate> candidates,
                                              const std::string& subgraph_text);

struct AskOptions {
    std::size_t k = 5;
    double fuzzy_threshold = 0.85;
    bool joint_reasoning = true;      // --no-joint-reasoning clears
    bool use_vdb = true;              // --no-vdb clears
    bool synonym_expansion = true;
    std::map<std::string, std::string> relation_aliases = default_relation_aliases();
};

// Full Step 2-3 pipeline: retrieve, generate, parse, extract subgraph,
// rerank, argmax (ties -> lowest retrieval rank). No disease match, or the
// joint-reasoning ablation, falls back to candidate rank 0.
FinalAnswer answer_question(const std::string& question_id, const std::string& question,
                            const kg::KnowledgeGraph& graph, const vdb::VectorIndex& index,
                            vdb::EmbeddingProvider& embedder, gen::GeneratorProvider& provider,
                            const gen::GenerationParams& params, const AskOptions& opts = {});

}  // namespace kgqa::jr
