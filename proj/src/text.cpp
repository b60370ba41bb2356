#include "kgqa/text.hpp"

#include <algorithm>
#include <cctype>

namespace kgqa::text {

namespace {
inline bool is_alnum(unsigned char c) { return std::isalnum(c) != 0; }
inline char lower(unsigned char c) { return static_cast<char>(std::tolower(c)); }
}  // namespace

std::vector<TokenSpan> token_spans(const std::string& s) {
    std::vector<TokenSpan> spans;
    std::size_t i = 0;
    while (i < s.size()) {
        if (!is_alnum(static_cast<unsigned char>(s[i]))) {
            ++i;
            continue;
        }
        std::size_t b = i;
        while (i < s.size() && is_alnum(static_cast<unsigned char>(s[i]))) ++i;
        spans.push_back({b, i});
    }
    return spans;
}

std::vector<std::string> tokenize(const std::string& s) {
    std::vector<std::string> out;
    for (const auto& sp : token_spans(s)) {
        std::string t;
        t.reserve(sp.end - sp.begin);
        for (std::size_t i = sp.begin; i < sp.end; ++i)
            t.push_back(lower(static_cast<unsigned char>(s[i])));
        out.push_back(std::move(t));
    }
    return out;
}

std::string normalize(const std::string& s) {
    std::string out;
    for (const auto& t : tokenize(s)) {
        if (!out.empty()) out.push_back(' ');
        out += t;
    }
    return out;
}

std::string to_lower(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return lower(c); });
    return out;
}

std::size_t levenshtein(const std::string& a, const std::string& b) {
    const std::size_t n = a.size(), m = b.size();
    if (n == 0) return m;
    if (m == 0) return n;
    std::vector<std::size_t> prev(m + 1), cur(m + 1);
    for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
    for (std::size_t i = 1; i <= n; ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= m; ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

double similarity_ratio(const std::string& a, const std::string& b) {
    const std::size_t longest = std::max(a.size(), b.size());
    if (longest == 0) return 1.0;
    return 1.0 - static_cast<double>(levenshtein(a, b)) / static_cast<double>(longest);
}

std::vector<SentenceSpan> sentence_spans(const std::string& s) {
    std::vector<SentenceSpan> spans;
    std::size_t start = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        const bool terminator = (c == '.' || c == '?' || c == '!');
        const bool at_break =
            terminator &&
            (i + 1 == s.size() || std::isspace(static_cast<unsigned char>(s[i + 1])) != 0);
        if (!at_break) continue;
        spans.push_back({start, i + 1});
        start = i + 1;
    }
    if (start < s.size()) spans.push_back({start, s.size()});

    // Trim each span; drop spans with no content.
    std::vector<SentenceSpan> out;
    for (auto sp : spans) {
        while (sp.begin < sp.end &&
               std::isspace(static_cast<unsigned char>(s[sp.begin])) != 0)
            ++sp.begin;
        while (sp.end > sp.begin &&
               std::isspace(static_cast<unsigned char>(s[sp.end - 1])) != 0)
            --sp.end;
        if (sp.begin < sp.end) out.push_back(sp);
    }
    return out;
}

std::vector<std::string> split_sentences(const std::string& s) {
    std::vector<std::string> out;
    for (const auto& sp : sentence_spans(s))
        out.push_back(s.substr(sp.begin, sp.end - sp.begin));
    return out;
}

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b])) != 0) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1])) != 0) --e;
    return s.substr(b, e - b);
}

bool contains_token_seq(const std::vector<std::string>& hay,
                        const std::vector<std::string>& needle) {
    if (needle.empty() || needle.size() > hay.size()) return false;
    for (std::size_t i = 0; i + needle.size() <= hay.size(); ++i) {
        bool ok = true;
        for (std::size_t j = 0; j < needle.size(); ++j) {
            if (hay[i + j] != needle[j]) {
                ok = false;
                break;
            }
        }
        if (ok) return true;
    }
    return false;
}

}  // namespace kgqa::text
