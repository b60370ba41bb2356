#include "kgqa/gen.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#define CPPHTTPLIB_NO_EXCEPTIONS
#include <httplib.h>

#include "kgqa/text.hpp"

namespace kgqa::gen {

using json = nlohmann::json;

void GenerationParams::validate() const {
    if (min_length <= 0 || min_length > max_length)
        throw std::invalid_argument("generation params: require 0 < min_length <= max_length");
    if (temperature <= 0.0)
        throw std::invalid_argument("generation params: temperature must be > 0");
    if (num_beams < 1) throw std::invalid_argument("generation params: num_beams must be >= 1");
}

std::string serialize_request(const std::string& question, const std::string& context,
                              const GenerationParams& params) {
    params.validate();
    json j{{"question", question},
           {"context", context},
           {"min_length", params.min_length},
           {"max_length", params.max_length},
           {"temperature", params.temperature},
           {"num_beams", params.num_beams}};
    return j.dump();
}

namespace {

std::string parse_answer(const std::string& reply, const std::string& origin) {
    json j = json::parse(reply, nullptr, false);
    if (j.is_discarded() || !j.contains("answer") || !j.at("answer").is_string())
        throw std::runtime_error(origin + ": malformed response: " + reply);
    return j.at("answer").get<std::string>();
}

}  // namespace

FixtureGenerator FixtureGenerator::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open generator fixture: " + path);
    FixtureGenerator g;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.contains("question_id") || !j.contains("context_id") ||
            !j.contains("answer"))
            throw std::runtime_error("generator fixture: bad record at line " +
                                     std::to_string(lineno));
        g.set(j.at("question_id").get<std::string>(), j.at("context_id").get<std::string>(),
              j.at("answer").get<std::string>());
    }
    return g;
}

void FixtureGenerator::set(const std::string& question_id, const std::string& context_id,
                           std::string answer) {
    table_[{question_id, context_id}] = std::move(answer);
}

std::string FixtureGenerator::generate(const std::string& question_id,
                                       const std::string& context_id, const std::string&,
                                       const std::string&, const GenerationParams& params) {
    params.validate();
    const auto it = table_.find({question_id, context_id});
    if (it == table_.end())
        throw std::runtime_error("generator fixture: no answer for (question_id=\"" +
                                 question_id + "\", context_id=\"" + context_id + "\")");
    return it->second;
}

SubprocessGenerator::SubprocessGenerator(const std::string& command) : proc_(command) {}

std::string SubprocessGenerator::generate(const std::string&, const std::string&,
                                          const std::string& question, const std::string& context,
                                          const GenerationParams& params) {
    return parse_answer(proc_.request(serialize_request(question, context, params)),
                        "subprocess generator");
}

HttpGenerator::HttpGenerator(const std::string& url) {
    // Split "scheme://host:port" from the request path.
    const std::size_t scheme = url.find("://");
    const std::size_t host_begin = scheme == std::string::npos ? 0 : scheme + 3;
    const std::size_t slash = url.find('/', host_begin);
    if (slash == std::string::npos) {
        host_ = url;
        path_ = "/";
    } else {
        host_ = url.substr(0, slash);
        path_ = url.substr(slash);
    }
}

std::string HttpGenerator::generate(const std::string&, const std::string&,
                                    const std::string& question, const std::string& context,
                                    const GenerationParams& params) {
    httplib::Client client(host_);
    client.set_read_timeout(30, 0);
    auto res = client.Post(path_, serialize_request(question, context, params),
                           "application/json");
    if (!res)
        throw std::runtime_error("http generator: request to " + host_ + path_ + " failed");
    if (res->status != 200)
        throw std::runtime_error("http generator: status " + std::to_string(res->status));
    return parse_answer(res->body, "http generator");
}

std::vector<Candidate> generate_candidates(
    const std::string& question_id, const std::string& question,
    const std::vector<std::pair<std::string, std::string>>& contexts,
    const GenerationParams& params, GeneratorProvider& provider) {
    if (contexts.empty() || contexts.size() > 5)
        throw std::invalid_argument("generate_candidates: require 1..5 contexts");
    params.validate();
    std::vector<Candidate> out;
    out.reserve(contexts.size());
    for (std::size_t i = 0; i < contexts.size(); ++i) {
        const auto& [ctx_id, ctx_text] = contexts[i];
        Candidate c;
        c.question_id = question_id;
        c.context_id = ctx_id;
        c.rank_in_retrieval = static_cast<int>(i);
        // Any provider failure propagates: the argmax over a truncated
        // candidate set would silently change semantics.
        c.answer_text = provider.generate(question_id, ctx_id, question, ctx_text, params);
        if (c.answer_text.empty())
            throw std::runtime_error("provider returned empty answer for context \"" + ctx_id +
                                     "\"");
        out.push_back(std::move(c));
    }
    return out;
}

std::string SubprocessCoref::resolve(const std::string& txt, const std::string& entity) {
    const std::string reply = proc_.request(json{{"text", txt}, {"entity", entity}}.dump());
    json j = json::parse(reply, nullptr, false);
    if (j.is_discarded() || !j.contains("text"))
        throw std::runtime_error("coreference provider: malformed response: " + reply);
    return j.at("text").get<std::string>();
}

std::vector<double> SubprocessEmbedder::embed(const std::string& txt) {
    const std::string reply = proc_.request(json{{"text", txt}}.dump());
    json j = json::parse(reply, nullptr, false);
    if (j.is_discarded() || !j.contains("vector"))
        throw std::runtime_error("embedding provider: malformed response: " + reply);
    return j.at("vector").get<std::vector<double>>();
}

metrics::NliProbs SubprocessNli::classify(const std::string& premise,
                                          const std::string& hypothesis) {
    const std::string reply =
        proc_.request(json{{"premise", premise}, {"hypothesis", hypothesis}}.dump());
    json j = json::parse(reply, nullptr, false);
    if (j.is_discarded() || !j.contains("positive") || !j.contains("neutral") ||
        !j.contains("negative"))
        throw std::runtime_error("nli provider: malformed response: " + reply);
    metrics::NliProbs p{j.at("positive").get<double>(), j.at("neutral").get<double>(),
                        j.at("negative").get<double>()};
    if (std::abs(p.positive + p.neutral + p.negative - 1.0) > 1e-6)
        throw std::runtime_error("nli provider: probabilities do not sum to 1");
    return p;
}

double SubprocessSts::score(const std::string& answer, const std::string& gold) {
    const std::string reply = proc_.request(json{{"answer", answer}, {"gold", gold}}.dump());
    json j = json::parse(reply, nullptr, false);
    if (j.is_discarded() || !j.contains("score"))
        throw std::runtime_error("sts provider: malformed response: " + reply);
    return j.at("score").get<double>();
}

}  // namespace kgqa::gen
