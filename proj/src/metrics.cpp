#include "kgqa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

namespace kgqa::metrics {

using json = nlohmann::json;

std::size_t lcs_length(const std::vector<std::string>& a,
                       const std::vector<std::string>& b) {
    if (a.empty() || b.empty()) return 0;
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            if (a[i - 1] == b[j - 1])
                cur[j] = prev[j - 1] + 1;
            else
                cur[j] = std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

RougeScore rouge_l(const std::string& candidate, const std::string& reference) {
    const auto c = text::tokenize(candidate);
    const auto r = text::tokenize(reference);
    RougeScore s;
    if (c.empty() || r.empty()) return s;
    const double l = static_cast<double>(lcs_length(c, r));
    s.precision = l / static_cast<double>(c.size());
    s.recall = l / static_cast<double>(r.size());
    if (s.precision + s.recall > 0.0)
        s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
    return s;
}

namespace {
inline bool is_vowel(char c) {
    return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u' || c == 'y';
}
}  // namespace

std::size_t count_syllables(const std::string& word) {
    std::size_t groups = 0;
    bool in_group = false;
    for (char ch : word) {
        const bool v = is_vowel(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
        if (v && !in_group) ++groups;
        in_group = v;
    }
    const std::size_t n = word.size();
    if (n >= 1 && std::tolower(static_cast<unsigned char>(word[n - 1])) == 'e') {
        const bool le_ending =
            n >= 2 && std::tolower(static_cast<unsigned char>(word[n - 2])) == 'l';
        const bool own_group =
            n < 2 || !is_vowel(static_cast<char>(
                         std::tolower(static_cast<unsigned char>(word[n - 2]))));
        if (!le_ending && own_group && groups > 0) --groups;
    }
    return std::max<std::size_t>(groups, 1);
}

Readability flesch_reading_ease(const std::string& txt) {
    Readability r;
    const auto words = text::tokenize(txt);
    if (words.empty()) throw std::invalid_argument("flesch_reading_ease: text has no words");
    r.words = words.size();
    r.sentences = std::max<std::size_t>(text::split_sentences(txt).size(), 1);
    for (const auto& w : words) r.syllables += count_syllables(w);
    const double wps = static_cast<double>(r.words) / static_cast<double>(r.sentences);
    const double spw = static_cast<double>(r.syllables) / static_cast<double>(r.words);
    r.raw = 206.835 - 1.015 * wps - 84.6 * spw;
    r.clamped = std::clamp(r.raw, 0.0, 100.0);
    return r;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("cosine: dimension mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

RougeScore bertscore_greedy(const std::vector<TokenVec>& cand,
                            const std::vector<TokenVec>& ref) {
    if (cand.empty() || ref.empty())
        throw std::invalid_argument("bertscore_greedy: empty token list");
    const std::size_t dim = cand.front().vec.size();
    for (const auto& t : cand)
        if (t.vec.size() != dim) throw std::invalid_argument("bertscore_greedy: dimension mismatch");
    for (const auto& t : ref)
        if (t.vec.size() != dim) throw std::invalid_argument("bertscore_greedy: dimension mismatch");

    double recall = 0.0;
    for (const auto& rt : ref) {
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& ct : cand) best = std::max(best, cosine(rt.vec, ct.vec));
        recall += best;
    }
    recall /= static_cast<double>(ref.size());

    double precision = 0.0;
    for (const auto& ct : cand) {
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& rt : ref) best = std::max(best, cosine(ct.vec, rt.vec));
        precision += best;
    }
    precision /= static_cast<double>(cand.size());

    RougeScore s;
    s.precision = precision;
    s.recall = recall;
    if (precision + recall != 0.0) s.f1 = 2.0 * precision * recall / (precision + recall);
    return s;
}

StubNliProvider StubNliProvider::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open NLI stub fixture: " + path);
    StubNliProvider stub;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.contains("premise") || !j.contains("hypothesis"))
            throw std::runtime_error("NLI stub fixture: bad record at line " +
                                     std::to_string(lineno));
        NliProbs p{j.at("positive").get<double>(), j.at("neutral").get<double>(),
                   j.at("negative").get<double>()};
        if (std::abs(p.positive + p.neutral + p.negative - 1.0) > 1e-6)
            throw std::runtime_error("NLI stub fixture: probabilities at line " +
                                     std::to_string(lineno) + " do not sum to 1");
        stub.set(j.at("premise").get<std::string>(), j.at("hypothesis").get<std::string>(), p);
    }
    return stub;
}

NliProbs StubNliProvider::classify(const std::string& premise, const std::string& hypothesis) {
    auto it = table_.find({premise, hypothesis});
    return it == table_.end() ? default_ : it->second;
}

EntailmentVerdict detect_contradiction(const std::string& answer, const std::string& gold,
                                       NliProvider& nli, double threshold) {
    EntailmentVerdict v;
    const auto ans_sents = text::split_sentences(answer);
    const auto gold_sents = text::split_sentences(gold);
    for (std::size_t i = 0; i < ans_sents.size(); ++i) {
        for (std::size_t j = 0; j < gold_sents.size(); ++j) {
            const NliProbs p = nli.classify(gold_sents[j], ans_sents[i]);
            if (p.negative >= threshold) v.flagged_pairs.push_back({i, j, p.negative});
        }
    }
    v.contradicted = !v.flagged_pairs.empty();
    return v;
}

namespace {

// Continued fraction for the incomplete beta (modified Lentz).
double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-16;
    constexpr double kFpMin = 1e-300;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double bt = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                               a * std::log(x) + b * std::log1p(-x));
    if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
    return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sample_variance(const std::vector<double>& v) {
    if (v.size() < 2) throw std::invalid_argument("sample_variance: need n >= 2");
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

double sample_std(const std::vector<double>& v) { return std::sqrt(sample_variance(v)); }

double median_midpoint(std::vector<double> v) {
    if (v.empty()) throw std::invalid_argument("median: empty");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    if (n % 2 == 1) return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

TTestResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() < 2 || b.size() < 2)
        throw std::invalid_argument("welch_t_test: need n >= 2 per sample");
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    const double ma = mean(a), mb = mean(b);
    const double va = sample_variance(a), vb = sample_variance(b);
    const double sa = va / na, sb = vb / nb;
    TTestResult r;
    if (sa + sb == 0.0) {
        r.df = na + nb - 2.0;
        if (ma == mb) {
            r.t = 0.0;
            r.p = 1.0;
        } else {
            r.t = ma > mb ? std::numeric_limits<double>::infinity()
                          : -std::numeric_limits<double>::infinity();
            r.p = 0.0;
        }
        return r;
    }
    r.t = (ma - mb) / std::sqrt(sa + sb);
    r.df = (sa + sb) * (sa + sb) /
           (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    if (r.t == 0.0) {
        r.p = 1.0;
    } else {
        const double x = r.df / (r.df + r.t * r.t);
        r.p = incomplete_beta(r.df / 2.0, 0.5, x);
    }
    return r;
}

double kde_overlap(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() < 2 || b.size() < 2)
        throw std::invalid_argument("kde_overlap: need n >= 2 per sample");
    auto bandwidth = [](const std::vector<double>& v) {
        const double sd = sample_std(v);
        const double h = sd * std::pow(static_cast<double>(v.size()), -0.2);
        return h > 0.0 ? h : 1e-9;  // zero-variance sample: effectively a spike
    };
    const double ha = bandwidth(a), hb = bandwidth(b);
    const double hmax = std::max(ha, hb);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (double x : a) { lo = std::min(lo, x); hi = std::max(hi, x); }
    for (double x : b) { lo = std::min(lo, x); hi = std::max(hi, x); }
    lo -= 3.0 * hmax;
    hi += 3.0 * hmax;

    constexpr int kGrid = 512;
    const double step = (hi - lo) / static_cast<double>(kGrid - 1);
    constexpr double kInvSqrt2Pi = 0.3989422804014326779399460599343;
    auto density = [&](const std::vector<double>& v, double h, double x) {
        double s = 0.0;
        for (double xi : v) {
            const double z = (x - xi) / h;
            s += std::exp(-0.5 * z * z);
        }
        return s * kInvSqrt2Pi / (static_cast<double>(v.size()) * h);
    };

    std::vector<double> m(kGrid);
    for (int i = 0; i < kGrid; ++i) {
        const double x = lo + step * static_cast<double>(i);
        m[i] = std::min(density(a, ha, x), density(b, hb, x));
    }
    double integral = 0.0;
    for (int i = 1; i < kGrid; ++i) integral += 0.5 * (m[i - 1] + m[i]) * step;
    return std::clamp(100.0 * integral, 0.0, 100.0);
}

double pearson_r(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("pearson_r: size mismatch");
    if (x.size() < 2) throw std::invalid_argument("pearson_r: need n >= 2");
    const double mx = mean(x), my = mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0)
        throw std::invalid_argument("pearson_r: constant input");
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace kgqa::metrics
