#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kgqa/corpus.hpp"

namespace kgqa::kg {

enum class EntityKind { Disease, Term, Cui };

std::string kind_name(EntityKind k);
EntityKind kind_from_name(const std::string& s);

struct Entity {
    int id = -1;
    std::string label;       // first-seen original casing
    EntityKind kind = EntityKind::Term;
    std::string norm_label;  // identity key, unique per kind
};

struct Triple {
    int head = -1;
    std::string relation;
    int tail = -1;
    auto operator<=>(const Triple&) const = default;
};

// Table C1 section headings.
const std::vector<std::string>& default_relation_set();

inline constexpr const char* kHasCui = "has_cui";
inline constexpr const char* kAllRelations = "__all__";  // extract_subgraph sentinel

class KnowledgeGraph {
public:
    // One Disease entity per distinct disease; section text split into
    // phrases, one shared Term entity per distinct norm_label, a triple per
    // phrase. "overview" sections are retrieval-only prose and produce no
    // term nodes. Unknown sections are skipped with a warning (strict:
    // error).
    static KnowledgeGraph build(const std::vector<corpus::Document>& docs,
                                const std::vector<std::string>& relation_set = default_relation_set(),
                                bool strict = false,
                                std::vector<std::string>* warnings = nullptr);

    // One Cui entity per distinct cui string; a (disease, has_cui, cui)
    // triple per known disease label. Unknown labels are warned, not fatal.
    void link_synonyms(const std::map<std::string, std::string>& cui_map,
                       std::vector<std::string>* warnings = nullptr);

    // Tails of (disease, relation, .) in insertion order; relation
    // kAllRelations unions every non-CUI relation. When synonym expansion is
    // on, tails reachable from CUI-linked diseases under the same relation
    // are appended after the direct tails.
    std::vector<Entity> extract_subgraph(int disease, const std::string& relation,
                                         bool synonym_expansion = true) const;

    // Labels joined by ", ", each norm_label emitted once.
    static std::string subgraph_text(const std::vector<Entity>& nodes);

    void persist(const std::string& dir) const;
    static KnowledgeGraph load(const std::string& dir);

    const std::vector<Entity>& entities() const { return entities_; }
    const std::vector<Triple>& triples() const { return triples_; }
    const Entity& entity(int id) const { return entities_.at(static_cast<std::size_t>(id)); }

    std::optional<int> find_entity(const std::string& label, EntityKind kind) const;
    std::vector<int> entities_of_kind(EntityKind kind) const;

    // Tails of (head, relation, .) in insertion order.
    std::vector<int> tails(int head, const std::string& relation) const;
    // Heads of (., relation, tail) in insertion order.
    std::vector<int> heads(const std::string& relation, int tail) const;
    // Relations r with (head, r, tail), in triple insertion order.
    std::vector<std::string> relations_between(int head, int tail) const;

    const std::vector<std::string>& relation_set() const { return relation_set_; }

    int add_entity(const std::string& label, EntityKind kind);
    bool add_triple(int head, const std::string& relation, int tail);

private:
    std::vector<Entity> entities_;
    std::vector<Triple> triples_;
    std::map<std::pair<std::string, int>, int> by_norm_;  // (norm_label, kind) -> id
    std::map<std::pair<int, std::string>, std::vector<int>> adjacency_;
    std::vector<std::string> relation_set_ = default_relation_set();
};

// Phrase splitting for section text: newline / semicolon / comma / bullet
// separators, trimmed, phrases longer than 12 tokens dropped.
std::vector<std::string> split_phrases(const std::string& section_text);

std::map<std::string, std::string> load_cui_map(const std::string& path);

}  // namespace kgqa::kg
