#include "kgqa/kg.hpp"

#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "kgqa/text.hpp"

namespace kgqa::kg {

using json = nlohmann::json;
namespace fs = std::filesystem;

std::string kind_name(EntityKind k) {
    switch (k) {
        case EntityKind::Disease: return "Disease";
        case EntityKind::Term: return "Term";
        case EntityKind::Cui: return "Cui";
    }
    return "Term";
}

EntityKind kind_from_name(const std::string& s) {
    if (s == "Disease") return EntityKind::Disease;
    if (s == "Term") return EntityKind::Term;
    if (s == "Cui") return EntityKind::Cui;
    throw std::runtime_error("unknown entity kind: " + s);
}

const std::vector<std::string>& default_relation_set() {
    static const std::vector<std::string> kSet{
        "overview",          "symptoms",  "causes",
        "risk_factors_of_disease", "risk_due_to_disease", "at_risk",
        "treatment",         "prevention", "diagnosis"};
    return kSet;
}

std::vector<std::string> split_phrases(const std::string& section_text) {
    std::vector<std::string> phrases;
    std::string cur;
    auto flush = [&]() {
        const std::string p = text::trim(cur);
        cur.clear();
        if (p.empty()) return;
        if (text::tokenize(p).size() > 12) return;  // prose, not a list item
        phrases.push_back(p);
    };
    for (std::size_t i = 0; i < section_text.size(); ++i) {
        const char c = section_text[i];
        if (c == '\n' || c == ';' || c == ',' || c == '*') {
            flush();
            continue;
        }
        // UTF-8 bullet U+2022
        if (static_cast<unsigned char>(c) == 0xE2 && i + 2 < section_text.size() &&
            static_cast<unsigned char>(section_text[i + 1]) == 0x80 &&
            static_cast<unsigned char>(section_text[i + 2]) == 0xA2) {
            flush();
            i += 2;
            continue;
        }
        cur.push_back(c);
    }
    flush();
    return phrases;
}

int KnowledgeGraph::add_entity(const std::string& label, EntityKind kind) {
    const std::string norm = text::normalize(label);
    if (norm.empty()) throw std::invalid_argument("entity label has no tokens: \"" + label + "\"");
    const auto key = std::make_pair(norm, static_cast<int>(kind));
    auto it = by_norm_.find(key);
    if (it != by_norm_.end()) return it->second;
    const int id = static_cast<int>(entities_.size());
    entities_.push_back({id, text::trim(label), kind, norm});
    by_norm_.emplace(key, id);
    return id;
}

bool KnowledgeGraph::add_triple(int head, const std::string& relation, int tail) {
    auto& adj = adjacency_[{head, relation}];
    for (int t : adj)
        if (t == tail) return false;
    adj.push_back(tail);
    triples_.push_back({head, relation, tail});
    return true;
}

KnowledgeGraph KnowledgeGraph::build(const std::vector<corpus::Document>& docs,
                                     const std::vector<std::string>& relation_set,
                                     bool strict, std::vector<std::string>* warnings) {
    KnowledgeGraph g;
    g.relation_set_ = relation_set;
    for (const auto& doc : docs) {
        const bool known = std::find(relation_set.begin(), relation_set.end(), doc.section) !=
                           relation_set.end();
        if (!known) {
            const std::string msg =
                "document " + doc.id + ": section \"" + doc.section + "\" not in relation set";
            if (strict) throw std::runtime_error(msg);
            if (warnings) warnings->push_back(msg);
            continue;
        }
        const int d = g.add_entity(doc.disease, EntityKind::Disease);
        if (doc.section == "overview") continue;  // prose; retrieval-only
        for (const auto& phrase : split_phrases(doc.text)) {
            if (text::normalize(phrase).empty()) continue;
            const int t = g.add_entity(phrase, EntityKind::Term);
            g.add_triple(d, doc.section, t);
        }
    }
    return g;
}

void KnowledgeGraph::link_synonyms(const std::map<std::string, std::string>& cui_map,
                                   std::vector<std::string>* warnings) {
    for (const auto& [disease_label, cui] : cui_map) {
        const auto d = find_entity(disease_label, EntityKind::Disease);
        if (!d) {
            if (warnings)
                warnings->push_back("cui map: unknown disease \"" + disease_label + "\"");
            continue;
        }
        const int c = add_entity(cui, EntityKind::Cui);
        add_triple(*d, kHasCui, c);
    }
}

std::optional<int> KnowledgeGraph::find_entity(const std::string& label, EntityKind kind) const {
    const auto it = by_norm_.find({text::normalize(label), static_cast<int>(kind)});
    if (it == by_norm_.end()) return std::nullopt;
    return it->second;
}

std::vector<int> KnowledgeGraph::entities_of_kind(EntityKind kind) const {
    std::vector<int> out;
    for (const auto& e : entities_)
        if (e.kind == kind) out.push_back(e.id);
    return out;
}

std::vector<int> KnowledgeGraph::tails(int head, const std::string& relation) const {
    const auto it = adjacency_.find({head, relation});
    if (it == adjacency_.end()) return {};
    return it->second;
}

std::vector<int> KnowledgeGraph::heads(const std::string& relation, int tail) const {
    std::vector<int> out;
    for (const auto& t : triples_)
        if (t.relation == relation && t.tail == tail) out.push_back(t.head);
    return out;
}

std::vector<std::string> KnowledgeGraph::relations_between(int head, int tail) const {
    std::vector<std::string> out;
    for (const auto& t : triples_)
        if (t.head == head && t.tail == tail) out.push_back(t.relation);
    return out;
}

std::vector<Entity> KnowledgeGraph::extract_subgraph(int disease, const std::string& relation,
                                                     bool synonym_expansion) const {
    // Relation order for the ALL sentinel: first appearance in the triple
    // list, CUI links excluded.
    std::vector<std::string> rels;
    if (relation == kAllRelations) {
        for (const auto& t : triples_) {
            if (t.relation == kHasCui) continue;
            if (std::find(rels.begin(), rels.end(), t.relation) == rels.end())
                rels.push_back(t.relation);
        }
    } else {
        rels.push_back(relation);
    }

    std::vector<Entity> out;
    std::vector<bool> taken(entities_.size(), false);
    auto append_tails = [&](int d) {
        for (const auto& r : rels) {
            for (int t : tails(d, r)) {
                if (taken[static_cast<std::size_t>(t)]) continue;
                taken[static_cast<std::size_t>(t)] = true;
                out.push_back(entity(t));
            }
        }
    };
    append_tails(disease);
    if (synonym_expansion) {
        for (int cui : tails(disease, kHasCui)) {
            for (int syn : heads(kHasCui, cui)) {
                if (syn == disease) continue;
                append_tails(syn);
            }
        }
    }
    return out;
}

std::string KnowledgeGraph::subgraph_text(const std::vector<Entity>& nodes) {
    std::string out;
    std::vector<std::string> seen;
    for (const auto& n : nodes) {
        if (std::find(seen.begin(), seen.end(), n.norm_label) != seen.end()) continue;
        seen.push_back(n.norm_label);
        if (!out.empty()) out += ", ";
        out += n.label;
    }
    return out;
}

void KnowledgeGraph::persist(const std::string& dir) const {
    fs::create_directories(dir);
    {
        std::ofstream out(fs::path(dir) / "entities.jsonl");
        if (!out) throw std::runtime_error("cannot write entities file in " + dir);
        for (const auto& e : entities_) {
            json j{{"label", e.label}, {"kind", kind_name(e.kind)}};
            out << j.dump() << "\n";
        }
    }
    {
        std::ofstream out(fs::path(dir) / "triples.tsv");
        if (!out) throw std::runtime_error("cannot write triples file in " + dir);
        for (const auto& t : triples_) {
            const std::string& h = entity(t.head).label;
            const std::string& tl = entity(t.tail).label;
            for (const std::string* s : {&h, &t.relation, &tl})
                if (s->find('\t') != std::string::npos || s->find('\n') != std::string::npos)
                    throw std::runtime_error("label not TSV-safe: \"" + *s + "\"");
            out << h << '\t' << t.relation << '\t' << tl << "\n";
        }
    }
}

KnowledgeGraph KnowledgeGraph::load(const std::string& dir) {
    KnowledgeGraph g;
    {
        std::ifstream in(fs::path(dir) / "entities.jsonl");
        if (!in) throw std::runtime_error("cannot open entities file in " + dir);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (text::trim(line).empty()) continue;
            json j = json::parse(line, nullptr, false);
            if (j.is_discarded() || !j.contains("label") || !j.contains("kind"))
                throw std::runtime_error("entities file: bad record at line " +
                                         std::to_string(lineno));
            g.add_entity(j.at("label").get<std::string>(),
                         kind_from_name(j.at("kind").get<std::string>()));
        }
    }
    {
        std::ifstream in(fs::path(dir) / "triples.tsv");
        if (!in) throw std::runtime_error("cannot open triples file in " + dir);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (text::trim(line).empty()) continue;
            const std::size_t tab1 = line.find('\t');
            const std::size_t tab2 = tab1 == std::string::npos ? std::string::npos
                                                               : line.find('\t', tab1 + 1);
            if (tab2 == std::string::npos)
                throw std::runtime_error("triples file: expected 3 tab-separated fields at line " +
                                         std::to_string(lineno));
            const std::string head_label = line.substr(0, tab1);
            const std::string relation = line.substr(tab1 + 1, tab2 - tab1 - 1);
            const std::string tail_label = line.substr(tab2 + 1);
            const auto head = g.find_entity(head_label, EntityKind::Disease);
            const EntityKind tail_kind =
                relation == kHasCui ? EntityKind::Cui : EntityKind::Term;
            const auto tail = g.find_entity(tail_label, tail_kind);
            if (!head || !tail)
                throw std::runtime_error("triples file: unresolvable label at line " +
                                         std::to_string(lineno));
            g.add_triple(*head, relation, *tail);
        }
    }
    return g;
}

std::map<std::string, std::string> load_cui_map(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open cui map file: " + path);
    std::map<std::string, std::string> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.contains("disease") || !j.contains("cui"))
            throw std::runtime_error("cui map: bad record at line " + std::to_string(lineno));
        out[j.at("disease").get<std::string>()] = j.at("cui").get<std::string>();
    }
    return out;
}

}  // namespace kgqa::kg
