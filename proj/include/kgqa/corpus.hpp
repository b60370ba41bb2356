#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

namespace kgqa::corpus {

struct Document {
    std::string id;
    std::string disease;
    std::string section;
    std::string text;
    std::string source;
};

struct Paragraph {
    std::string doc_id;
    std::size_t ordinal = 0;
    std::string text;
    std::size_t token_count = 0;
};

struct QAPair {
    std::string question;
    std::string answer;
    std::string source;
};

enum class LoadMode { Strict, Lenient };

struct LoadResult {
    std::vector<Document> documents;
    std::vector<std::string> warnings;  // lenient-mode record diagnostics
};

// Line-delimited JSON records {"id","disease","section","text","source"}.
// Strict: any bad record or duplicate id throws (message carries the line
// number / offending id). Lenient: bad records become warnings; duplicate ids
// still throw.
LoadResult load_documents(const std::string& path, LoadMode mode = LoadMode::Strict);

std::vector<QAPair> load_qa_pairs(const std::string& path);
void save_qa_pairs(const std::vector<QAPair>& pairs, const std::string& path);

struct AbbreviationResult {
    std::string text;
    std::map<std::string, std::string> definitions;  // short form -> long form
};

// Schwartz-Hearst-style expansion: "long form (SF)" definitions are detected
// and later standalone occurrences of SF are replaced by the long form. The
// definition site itself is left intact. Idempotent.
AbbreviationResult expand_abbreviations(const std::string& txt);

class CorefProvider {
public:
    virtual ~CorefProvider() = default;
    virtual std::string resolve(const std::string& txt, const std::string& entity) = 0;
};

// Rule-based fallback: sentence-initial "It" / "This" / "They" after a prior
// mention of main_entity becomes main_entity. With a provider, the provider's
// output is used instead.
std::string resolve_coreferences(const std::string& txt, const std::string& main_entity,
                                 CorefProvider* provider = nullptr);

// Blank-line split, then greedy sentence-boundary re-split of chunks over
// max_tokens; single sentences over the cap are hard-split at token
// boundaries. Ordinals are consecutive from 0 per document.
std::vector<Paragraph> chunk_paragraphs(const std::vector<Document>& docs,
                                        std::size_t max_tokens);

void save_paragraphs(const std::vector<Paragraph>& paragraphs, const std::string& path);

}  // namespace kgqa::corpus
