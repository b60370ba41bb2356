#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "kgqa/kg.hpp"

namespace kgqa::kge {

struct TripleSplit {
    std::vector<kg::Triple> train;
    std::vector<kg::Triple> valid;
    std::vector<kg::Triple> test;
    std::uint64_t seed = 0;
    std::size_t moved_back = 0;  // coverage sweep: valid/test triples returned to train
};

// Deterministic shuffle by seed, then a coverage sweep: valid/test triples
// whose entities or relations are unseen in train are moved back to train.
TripleSplit split_triples(const kg::KnowledgeGraph& graph,
                          std::array<double, 3> ratios = {0.85, 0.05, 0.10},
                          std::uint64_t seed = 0);
TripleSplit split_triples(const std::vector<kg::Triple>& triples,
                          std::size_t entity_count,
                          std::array<double, 3> ratios = {0.85, 0.05, 0.10},
                          std::uint64_t seed = 0);

enum class Loss { NegativeLogLikelihood, MarginRanking };

struct TransEConfig {
    std::size_t dim = 100;
    double lr = 0.001;
    std::size_t batch = 10;
    std::size_t max_epochs = 1000;
    std::size_t negatives_per_positive = 10;
    int patience = 0;          // early-stopping evaluations; <= 0 disables
    std::size_t eval_every = 25;  // epochs between validation MRR evaluations
    std::uint64_t seed = 0;
    int norm_order = 1;        // 1 or 2
    Loss loss = Loss::NegativeLogLikelihood;
    double margin = 1.0;       // margin-ranking alternative only
};

struct TransEModel {
    std::size_t dim = 0;
    int norm_order = 1;
    std::vector<std::vector<double>> entity_emb;
    std::vector<std::vector<double>> relation_emb;
    std::vector<std::string> entity_labels;
    std::vector<std::string> relation_names;  // relation id order

    int relation_id(const std::string& name) const;
};

struct TrainTrace {
    std::vector<double> epoch_loss;
    std::size_t epochs_run = 0;
    bool early_stopped = false;
};

// Adam-optimized TransE; score(h,r,t) = -||e_h + e_r - e_t||_p. Entity rows
// are re-normalized to unit L2 after every batch (hence after every epoch).
// Deterministic given config.seed.
TransEModel train_transe(const TripleSplit& split, std::size_t entity_count,
                         const std::vector<std::string>& relation_names,
                         const TransEConfig& config, TrainTrace* trace = nullptr);

double score_triple(const TransEModel& model, int h, int r, int t);

struct RankReport {
    double hits1 = 0.0;
    double hits10 = 0.0;
    double hits100 = 0.0;
    double mrr = 0.0;
    std::size_t rankings = 0;
};

// Raw (unfiltered) head and tail rankings; ties take the worst rank.
RankReport rank_metrics(const TransEModel& model, const std::vector<kg::Triple>& test);

void persist_model(const TransEModel& model, const std::string& dir);
TransEModel load_model(const std::string& dir);

enum class TripletSlot { Head, Relation, Tail };

struct TripletQuery {
    TripletSlot missing = TripletSlot::Tail;
    std::string head;      // disease label (empty when missing)
    std::string relation;  // empty when missing
    std::string tail;      // term label (empty when missing)
    std::vector<std::string> answers;
};

// Parse a question to one of <h,r,?>, <?,r,t>, <h,?,t> using the
// joint-reasoning matchers and answer it by direct KG lookup. Fewer than two
// resolvable slots is an error.
TripletQuery triplet_query(const std::string& question, const kg::KnowledgeGraph& graph,
                           double fuzzy_threshold = 0.85);

// The deterministic synthetic patterned graph used to demonstrate a learning
// signal: 60 entities (50 clustered objects + 10 hubs), 5 relations, exactly
// 300 triples. Cluster members share hub assignments, so held-out edges are
// recoverable from cluster-mates.
std::vector<kg::Triple> patterned_graph(std::size_t& entity_count,
                                        std::vector<std::string>& relation_names,
                                        std::uint64_t seed = 12345);

}  // namespace kgqa::kge
