#pragma once

#include <array>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kgqa/gen.hpp"
#include "kgqa/jr.hpp"
#include "kgqa/kge.hpp"

namespace kgqa::config {

struct ProviderSpec {
    std::string kind;  // generator: fixture|subprocess|http; nli: stub|subprocess;
                       // sts: embedder|subprocess; coref: rule|subprocess
    std::string arg;   // fixture path, shell command, or URL
};

struct Config {
    std::vector<std::string> relation_set = kg::default_relation_set();
    std::map<std::string, std::string> relation_aliases = jr::default_relation_aliases();
    double fuzzy_threshold = 0.85;
    std::size_t retrieval_k = 5;
    bool synonym_expansion = true;
    std::size_t embed_dim = 768;
    std::size_t chunk_max_tokens = 512;
    gen::GenerationParams generation;
    double entailment_threshold = 0.95;
    std::array<double, 3> split_ratios = {0.85, 0.05, 0.10};
    kge::TransEConfig transe;

    ProviderSpec generator{"fixture", ""};
    ProviderSpec nli{"stub", ""};
    ProviderSpec sts{"embedder", ""};
    ProviderSpec coref{"rule", ""};
};

// Strict parse: unknown keys anywhere are an error. Absent keys keep
// defaults.
Config config_from_json(const nlohmann::json& j);
Config load_config(const std::string& path);
nlohmann::json config_to_json(const Config& c);

jr::AskOptions ask_options(const Config& c);

std::unique_ptr<gen::GeneratorProvider> make_generator(const Config& c);
std::unique_ptr<metrics::NliProvider> make_nli(const Config& c);
// The embedder-backed STS fallback borrows `embedder`; it must outlive the
// returned provider.
std::unique_ptr<metrics::StsProvider> make_sts(const Config& c, vdb::EmbeddingProvider& embedder);
std::unique_ptr<corpus::CorefProvider> make_coref(const Config& c);  // may be null (rule-based)

}  // namespace kgqa::config
