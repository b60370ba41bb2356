#include "kgqa/config.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

namespace kgqa::config {

using json = nlohmann::json;

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& [key, _] : j.items())
        if (allowed.count(key) == 0)
            throw std::runtime_error("config: unknown key \"" + key + "\" in " + where);
}

ProviderSpec provider_from_json(const json& j, const std::string& where,
                                const ProviderSpec& defaults) {
    check_keys(j, {"kind", "arg"}, where);
    ProviderSpec spec = defaults;
    if (j.contains("kind")) spec.kind = j.at("kind").get<std::string>();
    if (j.contains("arg")) spec.arg = j.at("arg").get<std::string>();
    return spec;
}

}  // namespace

Config config_from_json(const json& j) {
    if (!j.is_object()) throw std::runtime_error("config: top level must be an object");
    check_keys(j,
               {"relation_set", "relation_aliases", "fuzzy_threshold", "retrieval_k",
                "synonym_expansion", "embed_dim", "chunk_max_tokens", "generation",
                "entailment_threshold", "split_ratios", "transe", "generator", "nli", "sts",
                "coref"},
               "top level");
    Config c;
    if (j.contains("relation_set"))
        c.relation_set = j.at("relation_set").get<std::vector<std::string>>();
    if (j.contains("relation_aliases"))
        c.relation_aliases = j.at("relation_aliases").get<std::map<std::string, std::string>>();
    if (j.contains("fuzzy_threshold")) c.fuzzy_threshold = j.at("fuzzy_threshold").get<double>();
    if (j.contains("retrieval_k")) c.retrieval_k = j.at("retrieval_k").get<std::size_t>();
    if (j.contains("synonym_expansion"))
        c.synonym_expansion = j.at("synonym_expansion").get<bool>();
    if (j.contains("embed_dim")) c.embed_dim = j.at("embed_dim").get<std::size_t>();
    if (j.contains("chunk_max_tokens"))
        c.chunk_max_tokens = j.at("chunk_max_tokens").get<std::size_t>();
    if (j.contains("entailment_threshold"))
        c.entailment_threshold = j.at("entailment_threshold").get<double>();

    if (j.contains("generation")) {
        const auto& g = j.at("generation");
        check_keys(g, {"min_length", "max_length", "temperature", "num_beams"}, "generation");
        if (g.contains("min_length")) c.generation.min_length = g.at("min_length").get<int>();
        if (g.contains("max_length")) c.generation.max_length = g.at("max_length").get<int>();
        if (g.contains("temperature"))
            c.generation.temperature = g.at("temperature").get<double>();
        if (g.contains("num_beams")) c.generation.num_beams = g.at("num_beams").get<int>();
        c.generation.validate();
    }

    if (j.contains("split_ratios")) {
        const auto r = j.at("split_ratios").get<std::vector<double>>();
        if (r.size() != 3)
            throw std::runtime_error("config: split_ratios must have exactly 3 entries");
        c.split_ratios = {r[0], r[1], r[2]};
    }

    if (j.contains("transe")) {
        const auto& t = j.at("transe");
        check_keys(t,
                   {"dim", "lr", "batch", "max_epochs", "negatives_per_positive", "patience",
                    "eval_every", "seed", "norm_order", "loss", "margin"},
                   "transe");
        if (t.contains("dim")) c.transe.dim = t.at("dim").get<std::size_t>();
        if (t.contains("lr")) c.transe.lr = t.at("lr").get<double>();
        if (t.contains("batch")) c.transe.batch = t.at("batch").get<std::size_t>();
        if (t.contains("max_epochs")) c.transe.max_epochs = t.at("max_epochs").get<std::size_t>();
        if (t.contains("negatives_per_positive"))
            c.transe.negatives_per_positive = t.at("negatives_per_positive").get<std::size_t>();
        if (t.contains("patience")) c.transe.patience = t.at("patience").get<int>();
        if (t.contains("eval_every")) c.transe.eval_every = t.at("eval_every").get<std::size_t>();
        if (t.contains("seed")) c.transe.seed = t.at("seed").get<std::uint64_t>();
        if (t.contains("norm_order")) c.transe.norm_order = t.at("norm_order").get<int>();
        if (t.contains("loss")) {
            const auto name = t.at("loss").get<std::string>();
            if (name == "nll")
                c.transe.loss = kge::Loss::NegativeLogLikelihood;
            else if (name == "margin")
                c.transe.loss = kge::Loss::MarginRanking;
            else
                throw std::runtime_error("config: transe.loss must be \"nll\" or \"margin\"");
        }
        if (t.contains("margin")) c.transe.margin = t.at("margin").get<double>();
    }

    if (j.contains("generator"))
        c.generator = provider_from_json(j.at("generator"), "generator", c.generator);
    if (j.contains("nli")) c.nli = provider_from_json(j.at("nli"), "nli", c.nli);
    if (j.contains("sts")) c.sts = provider_from_json(j.at("sts"), "sts", c.sts);
    if (j.contains("coref")) c.coref = provider_from_json(j.at("coref"), "coref", c.coref);
    return c;
}

Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw std::runtime_error("config: malformed JSON in " + path);
    return config_from_json(j);
}

json config_to_json(const Config& c) {
    return json{
        {"relation_set", c.relation_set},
        {"relation_aliases", c.relation_aliases},
        {"fuzzy_threshold", c.fuzzy_threshold},
        {"retrieval_k", c.retrieval_k},
        {"synonym_expansion", c.synonym_expansion},
        {"embed_dim", c.embed_dim},
        {"chunk_max_tokens", c.chunk_max_tokens},
        {"generation",
         {{"min_length", c.generation.min_length},
          {"max_length", c.generation.max_length},
          {"temperature", c.generation.temperature},
          {"num_beams", c.generation.num_beams}}},
        {"entailment_threshold", c.entailment_threshold},
        {"split_ratios", c.split_ratios},
        {"transe",
         {{"dim", c.transe.dim},
          {"lr", c.transe.lr},
          {"batch", c.transe.batch},
          {"max_epochs", c.transe.max_epochs},
          {"negatives_per_positive", c.transe.negatives_per_positive},
          {"patience", c.transe.patience},
          {"eval_every", c.transe.eval_every},
          {"seed", c.transe.seed},
          {"norm_order", c.transe.norm_order},
          {"loss", c.transe.loss == kge::Loss::NegativeLogLikelihood ? "nll" : "margin"},
          {"margin", c.transe.margin}}},
        {"generator", {{"kind", c.generator.kind}, {"arg", c.generator.arg}}},
        {"nli", {{"kind", c.nli.kind}, {"arg", c.nli.arg}}},
        {"sts", {{"kind", c.sts.kind}, {"arg", c.sts.arg}}},
        {"coref", {{"kind", c.coref.kind}, {"arg", c.coref.arg}}},
    };
}

jr::AskOptions ask_options(const Config& c) {
    jr::AskOptions opts;
    opts.k = c.retrieval_k;
    opts.fuzzy_threshold = c.fuzzy_threshold;
    opts.synonym_expansion = c.synonym_expansion;
    opts.relation_aliases = c.relation_aliases;
    return opts;
}

std::unique_ptr<gen::GeneratorProvider> make_generator(const Config& c) {
    if (c.generator.kind == "fixture") {
        if (c.generator.arg.empty())
            throw std::runtime_error("config: generator.kind \"fixture\" needs arg = path");
        return std::make_unique<gen::FixtureGenerator>(
            gen::FixtureGenerator::from_file(c.generator.arg));
    }
    if (c.generator.kind == "subprocess")
        return std::make_unique<gen::SubprocessGenerator>(c.generator.arg);
    if (c.generator.kind == "http") return std::make_unique<gen::HttpGenerator>(c.generator.arg);
    throw std::runtime_error("config: unknown generator kind \"" + c.generator.kind + "\"");
}

std::unique_ptr<metrics::NliProvider> make_nli(const Config& c) {
    if (c.nli.kind == "stub") {
        if (c.nli.arg.empty()) return std::make_unique<metrics::StubNliProvider>();
        return std::make_unique<metrics::StubNliProvider>(
            metrics::StubNliProvider::from_file(c.nli.arg));
    }
    if (c.nli.kind == "subprocess") return std::make_unique<gen::SubprocessNli>(c.nli.arg);
    throw std::runtime_error("config: unknown nli kind \"" + c.nli.kind + "\"");
}

std::unique_ptr<metrics::StsProvider> make_sts(const Config& c,
                                               vdb::EmbeddingProvider& embedder) {
    if (c.sts.kind == "embedder") return std::make_unique<vdb::EmbedderSts>(embedder);
    if (c.sts.kind == "subprocess") return std::make_unique<gen::SubprocessSts>(c.sts.arg);
    throw std::runtime_error("config: unknown sts kind \"" + c.sts.kind + "\"");
}

std::unique_ptr<corpus::CorefProvider> make_coref(const Config& c) {
    if (c.coref.kind == "rule") return nullptr;
    if (c.coref.kind == "subprocess") return std::make_unique<gen::SubprocessCoref>(c.coref.arg);
    throw std::runtime_error("config: unknown coref kind \"" + c.coref.kind + "\"");
}

}  // namespace kgqa::config
