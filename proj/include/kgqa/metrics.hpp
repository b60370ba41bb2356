#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "kgqa/text.hpp"

namespace kgqa::metrics {

struct RougeScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// Token-level LCS ROUGE-L with harmonic-mean F1 (beta = 1). Empty side (after
// tokenization) scores all zeros.
RougeScore rouge_l(const std::string& candidate, const std::string& reference);

std::size_t lcs_length(const std::vector<std::string>& a,
                       const std::vector<std::string>& b);

// Maximal aeiouy groups, minus a terminal silent 'e' (kept when preceded by
// 'l'), floored at 1.
std::size_t count_syllables(const std::string& word);

struct Readability {
    double raw = 0.0;
    double clamped = 0.0;  // [0, 100]
    std::size_t words = 0;
    std::size_t sentences = 0;
    std::size_t syllables = 0;
};

// 206.835 - 1.015 (words/sentences) - 84.6 (syllables/words).
// Throws std::invalid_argument on text with no words.
Readability flesch_reading_ease(const std::string& txt);

struct TokenVec {
    std::string token;
    std::vector<double> vec;
};

// Greedy-matching BERTScore over supplied token vectors. Throws on an empty
// side or mismatched dimensions.
RougeScore bertscore_greedy(const std::vector<TokenVec>& cand,
                            const std::vector<TokenVec>& ref);

double cosine(const std::vector<double>& a, const std::vector<double>& b);

struct NliProbs {
    double positive = 0.0;
    double neutral = 0.0;
    double negative = 0.0;
};

class NliProvider {
public:
    virtual ~NliProvider() = default;
    virtual NliProbs classify(const std::string& premise,
                              const std::string& hypothesis) = 0;
};

// Fixture-table NLI: exact (premise, hypothesis) lookups with a benign
// default for missing pairs.
class StubNliProvider : public NliProvider {
public:
    StubNliProvider() = default;
    explicit StubNliProvider(NliProbs default_probs) : default_(default_probs) {}

    void set(const std::string& premise, const std::string& hypothesis, NliProbs p) {
        table_[{premise, hypothesis}] = p;
    }
    static StubNliProvider from_file(const std::string& path);

    NliProbs classify(const std::string& premise, const std::string& hypothesis) override;

private:
    std::map<std::pair<std::string, std::string>, NliProbs> table_;
    NliProbs default_{0.90, 0.09, 0.01};
};

struct FlaggedPair {
    std::size_t answer_sentence_idx = 0;
    std::size_t gold_sentence_idx = 0;
    double negative_prob = 0.0;
};

struct EntailmentVerdict {
    bool contradicted = false;
    std::vector<FlaggedPair> flagged_pairs;
};

// All (answer sentence, gold sentence) pairs are classified with
// premise = gold sentence, hypothesis = answer sentence; pairs whose negative
// probability is >= threshold (inclusive) are flagged.
EntailmentVerdict detect_contradiction(const std::string& answer,
                                       const std::string& gold,
                                       NliProvider& nli,
                                       double threshold = 0.95);

struct TTestResult {
    double t = 0.0;
    double df = 0.0;
    double p = 1.0;
};

// Welch unequal-variance t-test, two-sided p. Degenerate inputs (both sides
// zero variance): equal means -> t=0, p=1; different means -> p=0.
TTestResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b);

// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);

// Percent overlap of two Gaussian KDEs (Scott bandwidth, shared 512-point
// grid, trapezoidal integral of the pointwise min). Requires >= 2 points per
// side.
double kde_overlap(const std::vector<double>& a, const std::vector<double>& b);

// Sample Pearson correlation. Throws on size mismatch, n < 2, or constant
// input.
double pearson_r(const std::vector<double>& x, const std::vector<double>& y);

double mean(const std::vector<double>& v);
double sample_variance(const std::vector<double>& v);  // n-1 denominator
double sample_std(const std::vector<double>& v);
double median_midpoint(std::vector<double> v);

class StsProvider {
public:
    virtual ~StsProvider() = default;
    virtual double score(const std::string& answer, const std::string& gold) = 0;
};

}  // namespace kgqa::metrics
