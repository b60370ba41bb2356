#include "kgqa/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <optional>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "kgqa/text.hpp"

namespace kgqa::corpus {

using json = nlohmann::json;

namespace {

std::string require_string(const json& j, const char* field, std::size_t lineno) {
    if (!j.contains(field) || !j.at(field).is_string())
        throw std::runtime_error("line " + std::to_string(lineno) +
                                 ": missing required field \"" + field + "\"");
    return j.at(field).get<std::string>();
}

}  // namespace

LoadResult load_documents(const std::string& path, LoadMode mode) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open documents file: " + path);
    LoadResult result;
    std::set<std::string> seen_ids;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        try {
            json j = json::parse(line);
            Document d;
            d.id = require_string(j, "id", lineno);
            d.disease = require_string(j, "disease", lineno);
            d.section = require_string(j, "section", lineno);
            d.text = require_string(j, "text", lineno);
            d.source = require_string(j, "source", lineno);
            if (text::trim(d.text).empty())
                throw std::runtime_error("line " + std::to_string(lineno) +
                                         ": empty text for id \"" + d.id + "\"");
            if (!seen_ids.insert(d.id).second)
                throw std::runtime_error("duplicate document id \"" + d.id + "\" at line " +
                                         std::to_string(lineno));
            result.documents.push_back(std::move(d));
        } catch (const std::exception& e) {
            const std::string msg = e.what();
            // Duplicate ids are a load error in both modes.
            if (msg.find("duplicate document id") != std::string::npos) throw;
            if (mode == LoadMode::Strict)
                throw std::runtime_error(path + ": " + msg);
            result.warnings.push_back(path + ": " + msg);
        }
    }
    return result;
}

std::vector<QAPair> load_qa_pairs(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open qa-pairs file: " + path);
    std::vector<QAPair> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        json j = json::parse(line);
        QAPair p;
        p.question = require_string(j, "question", lineno);
        p.answer = require_string(j, "answer", lineno);
        p.source = j.value("source", std::string{});
        if (p.question.empty() || p.answer.empty())
            throw std::runtime_error("line " + std::to_string(lineno) +
                                     ": question and answer must be non-empty");
        out.push_back(std::move(p));
    }
    return out;
}

void save_qa_pairs(const std::vector<QAPair>& pairs, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write qa-pairs file: " + path);
    for (const auto& p : pairs) {
        json j{{"question", p.question}, {"answer", p.answer}, {"source", p.source}};
        out << j.dump() << "\n";
    }
}

// ---------------------------------------------------------------------------
// Abbreviation expansion
// ---------------------------------------------------------------------------

namespace {

struct Definition {
    std::string sf;
    std::string lf;
    std::size_t paren_begin = 0;  // offset of '('
    std::size_t def_end = 0;      // offset one past ')'
};

bool valid_short_form(const std::string& sf) {
    if (sf.empty() || sf.size() > 10) return false;
    std::size_t upper = 0, lower = 0, alpha = 0;
    for (unsigned char c : sf) {
        if (c == '\n' || c == '(' || c == ')') return false;
        if (std::isalpha(c)) {
            ++alpha;
            if (std::isupper(c)) ++upper;
            else ++lower;
        }
    }
    return alpha > 0 && upper > lower;
}

bool standalone_at(const std::string& s, std::size_t pos, std::size_t len) {
    const bool left_ok =
        pos == 0 || std::isalnum(static_cast<unsigned char>(s[pos - 1])) == 0;
    const bool right_ok = pos + len >= s.size() ||
                          std::isalnum(static_cast<unsigned char>(s[pos + len])) == 0;
    return left_ok && right_ok;
}

bool contains_standalone(const std::string& hay, const std::string& needle) {
    if (needle.empty()) return false;
    std::size_t pos = 0;
    while ((pos = hay.find(needle, pos)) != std::string::npos) {
        if (standalone_at(hay, pos, needle.size())) return true;
        ++pos;
    }
    return false;
}

// Window of words immediately before the '(' at `paren`, bounded by
// min(|SF|+5, 2*|SF|) words and cut at parens, newlines, semicolons, or a
// sentence terminator followed by whitespace.
std::string long_form_window(const std::string& s, std::size_t paren, std::size_t sf_len) {
    const std::size_t max_words = std::min(sf_len + 5, sf_len * 2);
    std::size_t end = paren;
    while (end > 0 && std::isspace(static_cast<unsigned char>(s[end - 1])) != 0) --end;

    std::size_t floor = 0;
    for (std::size_t i = end; i > 0; --i) {
        const char c = s[i - 1];
        if (c == '(' || c == ')' || c == '\n' || c == ';') {
            floor = i;
            break;
        }
        if ((c == '.' || c == '!' || c == '?') && i < end &&
            std::isspace(static_cast<unsigned char>(s[i])) != 0) {
            floor = i;
            break;
        }
    }

    // Last max_words whitespace-separated words of [floor, end).
    std::size_t begin = end;
    std::size_t words = 0;
    std::size_t i = end;
    while (i > floor && words < max_words) {
        while (i > floor && std::isspace(static_cast<unsigned char>(s[i - 1])) != 0) --i;
        if (i == floor) break;
        while (i > floor && std::isspace(static_cast<unsigned char>(s[i - 1])) == 0) --i;
        begin = i;
        ++words;
    }
    return text::trim(s.substr(begin, end - begin));
}

// Classic right-to-left character match; the first short-form character must
// land at a word start.
std::optional<std::string> find_long_form(const std::string& window, const std::string& sf) {
    std::string chars;
    for (unsigned char c : sf)
        if (std::isalnum(c)) chars.push_back(static_cast<char>(std::tolower(c)));
    if (chars.empty() || window.empty()) return std::nullopt;

    std::ptrdiff_t l = static_cast<std::ptrdiff_t>(window.size()) - 1;
    std::size_t match_begin = 0;
    for (std::ptrdiff_t k = static_cast<std::ptrdiff_t>(chars.size()) - 1; k >= 0; --k) {
        const char c = chars[static_cast<std::size_t>(k)];
        bool found = false;
        while (l >= 0) {
            const unsigned char wc = static_cast<unsigned char>(window[static_cast<std::size_t>(l)]);
            const bool word_start =
                l == 0 || std::isalnum(static_cast<unsigned char>(
                              window[static_cast<std::size_t>(l - 1)])) == 0;
            if (std::isalnum(wc) && static_cast<char>(std::tolower(wc)) == c &&
                (k > 0 || word_start)) {
                found = true;
                break;
            }
            --l;
        }
        if (!found) return std::nullopt;
        match_begin = static_cast<std::size_t>(l);
        --l;
    }
    std::string lf = text::trim(window.substr(match_begin));
    if (lf.empty()) return std::nullopt;
    if (text::normalize(lf) == text::normalize(sf)) return std::nullopt;
    return lf;
}

std::vector<Definition> detect_definitions(const std::string& s) {
    std::vector<Definition> defs;
    std::set<std::string> seen_sf;  // first definition wins
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '(') continue;
        const std::size_t close = s.find(')', i + 1);
        if (close == std::string::npos) continue;
        const std::string sf = text::trim(s.substr(i + 1, close - i - 1));
        if (!valid_short_form(sf)) continue;
        const std::string window = long_form_window(s, i, sf.size());
        auto lf = find_long_form(window, sf);
        if (!lf) continue;
        if (!seen_sf.insert(sf).second) continue;
        defs.push_back({sf, *lf, i, close + 1});
    }
    return defs;
}

// One detect-and-replace pass. Definitions whose long form contains any kept
// short form standalone are dropped (iterated to a fixpoint) so that inserted
// text can never itself be a replacement target.
std::string expand_once(const std::string& s,
                        std::map<std::string, std::string>& accumulated) {
    std::vector<Definition> all = detect_definitions(s);

    std::vector<bool> kept(all.size(), true);
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t i = 0; i < all.size(); ++i) {
            if (!kept[i]) continue;
            for (std::size_t j = 0; j < all.size(); ++j) {
                if (!kept[j]) continue;
                if (contains_standalone(all[i].lf, all[j].sf)) {
                    kept[i] = false;
                    changed = true;
                    break;
                }
            }
        }
    }

    struct Edit {
        std::size_t begin, end;
        const std::string* replacement;
    };
    std::vector<Edit> edits;
    for (std::size_t i = 0; i < all.size(); ++i) {
        if (!kept[i]) continue;
        const Definition& d = all[i];
        accumulated.emplace(d.sf, d.lf);  // first-wins across passes
        std::size_t pos = d.def_end;
        while ((pos = s.find(d.sf, pos)) != std::string::npos) {
            const bool inside_def_site =
                std::any_of(all.begin(), all.end(), [&](const Definition& e) {
                    return pos >= e.paren_begin && pos < e.def_end;
                });
            if (standalone_at(s, pos, d.sf.size()) && !inside_def_site)
                edits.push_back({pos, pos + d.sf.size(), &d.lf});
            pos += d.sf.size();
        }
    }
    std::sort(edits.begin(), edits.end(),
              [](const Edit& a, const Edit& b) { return a.begin < b.begin; });

    std::string out;
    out.reserve(s.size());
    std::size_t cursor = 0;
    for (const auto& e : edits) {
        if (e.begin < cursor) continue;  // overlap: leftmost edit wins
        out.append(s, cursor, e.begin - cursor);
        out.append(*e.replacement);
        cursor = e.end;
    }
    out.append(s, cursor, s.size() - cursor);
    return out;
}

}  // namespace

AbbreviationResult expand_abbreviations(const std::string& txt) {
    AbbreviationResult r;
    r.text = txt;
    // A single pass is not idempotent in adversarial cases (inserted long
    // forms can shift context so a later "(SF)" validates on re-run), so the
    // operation is defined as the fixpoint of the pass.
    for (int round = 0; round < 8; ++round) {
        std::string next = expand_once(r.text, r.definitions);
        if (next == r.text) break;
        r.text = std::move(next);
    }
    return r;
}

// ---------------------------------------------------------------------------
// Coreference
// ---------------------------------------------------------------------------

std::string resolve_coreferences(const std::string& txt, const std::string& main_entity,
                                 CorefProvider* provider) {
    if (main_entity.empty())
        throw std::invalid_argument("resolve_coreferences: main_entity must be non-empty");
    if (provider != nullptr) return provider->resolve(txt, main_entity);

    const auto entity_tokens = text::tokenize(main_entity);
    const auto spans = text::sentence_spans(txt);
    static const std::set<std::string> kPronouns{"It", "This", "They"};

    struct Edit {
        std::size_t begin, end;
    };
    std::vector<Edit> edits;
    bool seen = false;
    for (const auto& sp : spans) {
        const std::string sentence = txt.substr(sp.begin, sp.end - sp.begin);
        const auto tok_spans = text::token_spans(sentence);
        bool replaced = false;
        if (seen && !tok_spans.empty()) {
            const std::string first =
                sentence.substr(tok_spans[0].begin, tok_spans[0].end - tok_spans[0].begin);
            if (kPronouns.count(first) != 0) {
                edits.push_back({sp.begin + tok_spans[0].begin, sp.begin + tok_spans[0].end});
                replaced = true;
            }
        }
        if (replaced || text::contains_token_seq(text::tokenize(sentence), entity_tokens))
            seen = true;
    }

    std::string out;
    out.reserve(txt.size());
    std::size_t cursor = 0;
    for (const auto& e : edits) {
        out.append(txt, cursor, e.begin - cursor);
        out.append(main_entity);
        cursor = e.end;
    }
    out.append(txt, cursor, txt.size() - cursor);
    return out;
}

// ---------------------------------------------------------------------------
// Chunking
// ---------------------------------------------------------------------------

namespace {

struct Block {
    std::size_t begin, end;
};

// Maximal runs of non-blank lines.
std::vector<Block> blank_line_blocks(const std::string& s) {
    std::vector<Block> blocks;
    std::size_t i = 0;
    std::optional<std::size_t> run_begin;
    while (i <= s.size()) {
        const std::size_t line_begin = i;
        std::size_t line_end = i;
        while (line_end < s.size() && s[line_end] != '\n') ++line_end;
        const std::string line = s.substr(line_begin, line_end - line_begin);
        const bool blank = text::trim(line).empty();
        if (!blank && !run_begin) run_begin = line_begin;
        if (blank && run_begin) {
            blocks.push_back({*run_begin, line_begin});
            run_begin.reset();
        }
        if (line_end >= s.size()) break;
        i = line_end + 1;
    }
    if (run_begin) blocks.push_back({*run_begin, s.size()});
    return blocks;
}

void emit(std::vector<Paragraph>& out, const std::string& doc_id, std::size_t& ordinal,
          const std::string& piece) {
    const std::string trimmed = text::trim(piece);
    if (trimmed.empty()) return;
    Paragraph p;
    p.doc_id = doc_id;
    p.ordinal = ordinal++;
    p.text = trimmed;
    p.token_count = text::tokenize(trimmed).size();
    out.push_back(std::move(p));
}

}  // namespace

std::vector<Paragraph> chunk_paragraphs(const std::vector<Document>& docs,
                                        std::size_t max_tokens) {
    if (max_tokens < 1) throw std::invalid_argument("chunk_paragraphs: max_tokens must be >= 1");
    std::vector<Paragraph> out;
    for (const auto& doc : docs) {
        std::size_t ordinal = 0;
        for (const auto& blk : blank_line_blocks(doc.text)) {
            const std::string block = doc.text.substr(blk.begin, blk.end - blk.begin);
            if (text::tokenize(block).size() <= max_tokens) {
                emit(out, doc.id, ordinal, block);
                continue;
            }
            const auto sents = text::sentence_spans(block);
            std::size_t group_begin = std::string::npos;
            std::size_t group_end = 0;
            std::size_t group_tokens = 0;
            auto flush = [&]() {
                if (group_begin == std::string::npos) return;
                emit(out, doc.id, ordinal, block.substr(group_begin, group_end - group_begin));
                group_begin = std::string::npos;
                group_tokens = 0;
            };
            for (const auto& sp : sents) {
                const std::string sentence = block.substr(sp.begin, sp.end - sp.begin);
                const std::size_t n = text::tokenize(sentence).size();
                if (n > max_tokens) {
                    // Oversized sentence: the cap outranks sentence integrity.
                    flush();
                    const auto tspans = text::token_spans(sentence);
                    std::size_t piece_begin = 0;
                    for (std::size_t t = max_tokens; t < tspans.size(); t += max_tokens) {
                        emit(out, doc.id, ordinal,
                             sentence.substr(piece_begin, tspans[t].begin - piece_begin));
                        piece_begin = tspans[t].begin;
                    }
                    emit(out, doc.id, ordinal, sentence.substr(piece_begin));
                    continue;
                }
                if (group_begin != std::string::npos && group_tokens + n > max_tokens) flush();
                if (group_begin == std::string::npos) group_begin = sp.begin;
                group_end = sp.end;
                group_tokens += n;
            }
            flush();
        }
    }
    return out;
}

void save_paragraphs(const std::vector<Paragraph>& paragraphs, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write paragraphs file: " + path);
    for (const auto& p : paragraphs) {
        json j{{"doc_id", p.doc_id},
               {"ordinal", p.ordinal},
               {"text", p.text},
               {"token_count", p.token_count}};
        out << j.dump() << "\n";
    }
}

}  // namespace kgqa::corpus
