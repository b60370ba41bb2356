#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kgqa/corpus.hpp"
#include "kgqa/metrics.hpp"
#include "kgqa/subprocess.hpp"
#include "kgqa/vdb.hpp"

namespace kgqa::gen {

struct GenerationParams {
    int min_length = 40;
    int max_length = 150;
    double temperature = 0.7;
    int num_beams = 4;

    void validate() const;
};

struct Candidate {
    std::string question_id;
    std::string context_id;
    int rank_in_retrieval = 0;
    std::string answer_text;
    std::optional<double> rerank_score;
};

// Wire request {"question","context","min_length","max_length","temperature",
// "num_beams"} -> response {"answer"}.
std::string serialize_request(const std::string& question, const std::string& context,
                              const GenerationParams& params);

class GeneratorProvider {
public:
    virtual ~GeneratorProvider() = default;
    virtual std::string generate(const std::string& question_id, const std::string& context_id,
                                 const std::string& question, const std::string& context,
                                 const GenerationParams& params) = 0;
};

// Canned answers keyed by (question_id, context_id); a miss is an error
// naming the key.
class FixtureGenerator : public GeneratorProvider {
public:
    FixtureGenerator() = default;
    static FixtureGenerator from_file(const std::string& path);
    void set(const std::string& question_id, const std::string& context_id, std::string answer);

    std::string generate(const std::string& question_id, const std::string& context_id,
                         const std::string& question, const std::string& context,
                         const GenerationParams& params) override;

private:
    std::map<std::pair<std::string, std::string>, std::string> table_;
};

class SubprocessGenerator : public GeneratorProvider {
public:
    explicit SubprocessGenerator(const std::string& command);
    std::string generate(const std::string& question_id, const std::string& context_id,
                         const std::string& question, const std::string& context,
                         const GenerationParams& params) override;

private:
    LineSubprocess proc_;
};

// POSTs the request JSON to the configured URL.
class HttpGenerator : public GeneratorProvider {
public:
    explicit HttpGenerator(const std::string& url);
    std::string generate(const std::string& question_id, const std::string& context_id,
                         const std::string& question, const std::string& context,
                         const GenerationParams& params) override;

private:
    std::string host_;
    std::string path_;
};

// One Candidate per context, in retrieval order. Any provider failure is a
// whole-question error; no partial candidate lists.
std::vector<Candidate> generate_candidates(
    const std::string& question_id, const std::string& question,
    const std::vector<std::pair<std::string, std::string>>& contexts,
    const GenerationParams& params, GeneratorProvider& provider);

// --- Subprocess-backed hooks for the other external interfaces -------------

// {"text","entity"} -> {"text"}
class SubprocessCoref : public corpus::CorefProvider {
public:
    explicit SubprocessCoref(const std::string& command) : proc_(command) {}
    std::string resolve(const std::string& txt, const std::string& entity) override;

private:
    LineSubprocess proc_;
};

// {"text"} -> {"vector":[...]}
class SubprocessEmbedder : public vdb::EmbeddingProvider {
public:
    SubprocessEmbedder(const std::string& command, std::size_t dim)
        : proc_(command), dim_(dim) {}
    std::size_t dim() const override { return dim_; }
    std::vector<double> embed(const std::string& txt) override;

private:
    LineSubprocess proc_;
    std::size_t dim_;
};

// {"premise","hypothesis"} -> {"positive","neutral","negative"}
class SubprocessNli : public metrics::NliProvider {
public:
    explicit SubprocessNli(const std::string& command) : proc_(command) {}
    metrics::NliProbs classify(const std::string& premise,
                               const std::string& hypothesis) override;

private:
    LineSubprocess proc_;
};

// {"answer","gold"} -> {"score"}
class SubprocessSts : public metrics::StsProvider {
public:
    explicit SubprocessSts(const std::string& command) : proc_(command) {}
    double score(const std::string& answer, const std::string& gold) override;

private:
    LineSubprocess proc_;
};

}  // namespace kgqa::gen
