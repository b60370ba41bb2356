#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "kgqa/config.hpp"
#include "kgqa/corpus.hpp"
#include "kgqa/eval.hpp"
#include "kgqa/gen.hpp"
#include "kgqa/jr.hpp"
#include "kgqa/kg.hpp"
#include "kgqa/kge.hpp"
#include "kgqa/vdb.hpp"

using json = nlohmann::json;
namespace kc = kgqa::config;

namespace {

void print_warnings(const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

std::vector<kgqa::corpus::Document> load_and_preprocess(const std::string& path, bool lenient,
                                                        bool preprocess,
                                                        kgqa::corpus::CorefProvider* coref) {
    auto loaded = kgqa::corpus::load_documents(
        path, lenient ? kgqa::corpus::LoadMode::Lenient : kgqa::corpus::LoadMode::Strict);
    print_warnings(loaded.warnings);
    if (preprocess) {
        for (auto& doc : loaded.documents) {
            doc.text = kgqa::corpus::expand_abbreviations(doc.text).text;
            doc.text = kgqa::corpus::resolve_coreferences(doc.text, doc.disease, coref);
        }
    }
    return loaded.documents;
}

std::vector<std::string> split_csv(const std::string& csv) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= csv.size()) {
        const auto comma = csv.find(',', start);
        const auto piece = csv.substr(start, comma == std::string::npos ? comma : comma - start);
        if (!piece.empty()) out.push_back(piece);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

std::vector<std::string> graph_relation_names(const kgqa::kg::KnowledgeGraph& graph) {
    std::vector<std::string> names;
    std::set<std::string> seen;
    for (const auto& t : graph.triples())
        if (seen.insert(t.relation).second) names.push_back(t.relation);
    return names;
}

json answer_to_json(const kgqa::jr::FinalAnswer& final) {
    json candidates = json::array();
    for (const auto& c : final.candidates)
        candidates.push_back({{"context_id", c.context_id},
                              {"rank_in_retrieval", c.rank_in_retrieval},
                              {"answer", c.answer_text}});
    json parse;
    if (final.parse.disease) {
        parse["disease_entity_id"] = final.parse.disease->entity_id;
        parse["disease_ratio"] = final.parse.disease->ratio;
    } else {
        parse["disease_entity_id"] = nullptr;
    }
    parse["relation"] = final.parse.relation ? json(*final.parse.relation) : json(nullptr);
    return json{{"answer", final.answer_text},
                {"chosen_rank", final.chosen_rank},
                {"mode", final.mode == kgqa::jr::AnswerMode::JointReasoning
                             ? "joint_reasoning"
                             : "fallback_first_candidate"},
                {"rerank_scores", final.rerank_scores},
                {"parse", parse},
                {"subgraph_text", final.subgraph_text},
                {"candidates", candidates}};
}

struct EvalArgs {
    std::string testset_path;
    std::string kg_dir;
    std::string index_dir;
    std::string run_system;
    std::vector<std::string> answer_files;  // name=path
    std::string reference;
    std::string metrics_csv = "rouge_l,flesch,bertscore,sts,contradiction";
    std::size_t max_words = 0;  // 0 = no length filter
    std::string group_by = "both";
    std::string out_records;
    std::string out_summary;
    std::string out_answers;
    bool no_joint_reasoning = false;
    bool no_vdb = false;
    bool lenient = false;
};

int run_eval(const kc::Config& config, const EvalArgs& args) {
    auto testset = kgqa::eval::load_testset(args.testset_path);
    if (testset.empty()) throw std::runtime_error("testset is empty: " + args.testset_path);

    // Collect one answer map per system.
    std::map<std::string, std::map<std::string, std::string>> systems;
    for (const auto& spec : args.answer_files) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos || eq == 0)
            throw std::runtime_error("--answers expects name=path, got \"" + spec + "\"");
        const auto name = spec.substr(0, eq);
        if (!systems.emplace(name, kgqa::eval::load_answers(spec.substr(eq + 1))).second)
            throw std::runtime_error("duplicate system name \"" + name + "\"");
    }

    if (!args.run_system.empty()) {
        if (args.kg_dir.empty())
            throw std::runtime_error("eval --run needs --kg");
        if (args.index_dir.empty() && !args.no_vdb)
            throw std::runtime_error("eval --run needs --index (or --no-vdb)");
        auto graph = kgqa::kg::KnowledgeGraph::load(args.kg_dir);
        kgqa::vdb::VectorIndex index;
        if (!args.index_dir.empty()) index = kgqa::vdb::VectorIndex::load(args.index_dir);
        kgqa::vdb::HashedTfEmbedder embedder(index.dim() ? index.dim() : config.embed_dim);
        auto generator = kc::make_generator(config);
        auto opts = kc::ask_options(config);
        opts.joint_reasoning = !args.no_joint_reasoning;
        opts.use_vdb = !args.no_vdb;

        std::map<std::string, std::string> answers;
        for (const auto& q : testset) {
            const auto final = kgqa::jr::answer_question(q.id, q.question, graph, index,
                                                         embedder, *generator,
                                                         config.generation, opts);
            answers[q.id] = final.answer_text;
        }
        if (!systems.emplace(args.run_system, std::move(answers)).second)
            throw std::runtime_error("duplicate system name \"" + args.run_system + "\"");
    }
    if (systems.empty())
        throw std::runtime_error("eval needs at least one system (--run or --answers)");
    if (!args.reference.empty() && systems.count(args.reference) == 0)
        throw std::runtime_error("reference system \"" + args.reference + "\" has no answers");
    if (!args.out_answers.empty()) {
        if (args.run_system.empty())
            throw std::runtime_error("--out-answers needs --run");
        kgqa::eval::save_answers(systems.at(args.run_system), args.out_answers);
    }

    // Optional length control: keep answers <= max_words everywhere, then
    // restrict every comparison to the common kept ids.
    if (args.max_words > 0) {
        std::set<std::string> kept;
        bool first = true;
        for (auto& [name, answers] : systems) {
            auto filtered = kgqa::eval::length_filter(answers, args.max_words);
            answers = std::move(filtered.answers);
            std::set<std::string> ids(filtered.kept_ids.begin(), filtered.kept_ids.end());
            if (first) {
                kept = std::move(ids);
                first = false;
            } else {
                std::set<std::string> inter;
                for (const auto& id : kept)
                    if (ids.count(id)) inter.insert(id);
                kept = std::move(inter);
            }
        }
        std::vector<kgqa::eval::TestQuestion> restricted;
        for (const auto& q : testset)
            if (kept.count(q.id)) restricted.push_back(q);
        testset = std::move(restricted);
        if (testset.empty())
            throw std::runtime_error("length filter left no common questions");
    }

    const auto metric_names = split_csv(args.metrics_csv);
    kgqa::vdb::HashedTfEmbedder token_embedder(config.embed_dim);
    auto nli = kc::make_nli(config);
    auto sts = kc::make_sts(config, token_embedder);
    kgqa::eval::EvalProviders providers;
    providers.token_embedder = &token_embedder;
    providers.nli = nli.get();
    providers.sts = sts.get();
    providers.entailment_threshold = config.entailment_threshold;

    std::vector<kgqa::eval::EvalRecord> records;
    std::vector<std::string> warnings;
    for (const auto& [name, answers] : systems) {
        auto part = kgqa::eval::run_evaluation(testset, name, answers, metric_names, providers,
                                               !args.lenient, &warnings);
        records.insert(records.end(), part.begin(), part.end());
    }
    print_warnings(warnings);
    if (!args.out_records.empty()) kgqa::eval::save_records(records, args.out_records);

    kgqa::eval::GroupBy group_by;
    if (args.group_by == "overall")
        group_by = kgqa::eval::GroupBy::Overall;
    else if (args.group_by == "category")
        group_by = kgqa::eval::GroupBy::Category;
    else if (args.group_by == "both")
        group_by = kgqa::eval::GroupBy::Both;
    else
        throw std::runtime_error("--group-by must be overall, category, or both");

    std::map<std::string, kgqa::eval::Category> category_of;
    for (const auto& q : testset) category_of[q.id] = q.category;
    std::optional<std::string> reference;
    if (!args.reference.empty()) reference = args.reference;

    warnings.clear();
    const auto table =
        kgqa::eval::summarize_scores(records, group_by, category_of, reference, &warnings);
    print_warnings(warnings);
    const auto rendered = kgqa::eval::render_summary(table);
    if (!args.out_summary.empty()) {
        std::ofstream out(args.out_summary);
        if (!out) throw std::runtime_error("cannot write summary: " + args.out_summary);
        out << rendered;
    }
    std::cout << rendered;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Disease QA over a knowledge graph: build, index, ask, evaluate"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "Path to a JSON config file");

    // build-kg
    auto* build_cmd = app.add_subcommand("build-kg", "Build the knowledge graph from documents");
    std::string bk_docs, bk_out, bk_cui;
    bool bk_lenient = false, bk_no_preprocess = false;
    build_cmd->add_option("--docs", bk_docs, "Documents JSONL")->required();
    build_cmd->add_option("--out", bk_out, "Output directory")->required();
    build_cmd->add_option("--cui-map", bk_cui, "Disease label -> CUI JSONL");
    build_cmd->add_flag("--lenient", bk_lenient, "Warn instead of failing on bad records");
    build_cmd->add_flag("--no-preprocess", bk_no_preprocess,
                        "Skip abbreviation expansion and coreference resolution");

    // index
    auto* index_cmd = app.add_subcommand("index", "Build the document vector index");
    std::string ix_docs, ix_out;
    std::size_t ix_dim = 0;
    bool ix_lenient = false, ix_no_preprocess = false;
    index_cmd->add_option("--docs", ix_docs, "Documents JSONL")->required();
    index_cmd->add_option("--out", ix_out, "Output directory")->required();
    index_cmd->add_option("--dim", ix_dim, "Embedding dimension (default from config)");
    index_cmd->add_flag("--lenient", ix_lenient, "Warn instead of failing on bad records");
    index_cmd->add_flag("--no-preprocess", ix_no_preprocess,
                        "Skip abbreviation expansion and coreference resolution");

    // ask
    auto* ask_cmd = app.add_subcommand("ask", "Answer a single question");
    std::string ask_question, ask_qid = "adhoc", ask_kg, ask_index;
    std::size_t ask_k = 0;
    bool ask_no_jr = false, ask_no_vdb = false, ask_no_syn = false;
    ask_cmd->add_option("question", ask_question, "The question")->required();
    ask_cmd->add_option("--question-id", ask_qid, "Question id for provider keying");
    ask_cmd->add_option("--kg", ask_kg, "Knowledge graph directory")->required();
    ask_cmd->add_option("--index", ask_index, "Vector index directory");
    ask_cmd->add_option("--k", ask_k, "Contexts to retrieve (default from config)");
    ask_cmd->add_flag("--no-joint-reasoning", ask_no_jr, "Always take the first candidate");
    ask_cmd->add_flag("--no-vdb", ask_no_vdb, "Skip retrieval; generate from an empty context");
    ask_cmd->add_flag("--no-synonym-expansion", ask_no_syn, "Ignore CUI links in the subgraph");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Run a test set and summarize metrics");
    EvalArgs ea;
    eval_cmd->add_option("--testset", ea.testset_path, "Testset JSONL")->required();
    eval_cmd->add_option("--kg", ea.kg_dir, "Knowledge graph directory (for --run)");
    eval_cmd->add_option("--index", ea.index_dir, "Vector index directory (for --run)");
    eval_cmd->add_option("--run", ea.run_system, "Run the pipeline as this system name");
    eval_cmd->add_option("--answers", ea.answer_files, "name=path system answers (repeatable)");
    eval_cmd->add_option("--reference", ea.reference, "Reference system for p-values");
    eval_cmd->add_option("--metrics", ea.metrics_csv, "Comma-separated metric names");
    eval_cmd->add_option("--max-words", ea.max_words, "Length filter cap (0 = off)");
    eval_cmd->add_option("--group-by", ea.group_by, "overall | category | both");
    eval_cmd->add_option("--out-records", ea.out_records, "Write per-question records JSONL");
    eval_cmd->add_option("--out-summary", ea.out_summary, "Write the summary table");
    eval_cmd->add_option("--out-answers", ea.out_answers, "Write the --run system's answers");
    eval_cmd->add_flag("--no-joint-reasoning", ea.no_joint_reasoning,
                       "Ablation: always take the first candidate");
    eval_cmd->add_flag("--no-vdb", ea.no_vdb, "Ablation: no retrieval");
    eval_cmd->add_flag("--lenient", ea.lenient, "Skip questions without answers");

    // kg-embed
    auto* embed_cmd = app.add_subcommand("kg-embed", "Train or evaluate TransE embeddings");
    embed_cmd->require_subcommand(1);
    auto* train_cmd = embed_cmd->add_subcommand("train", "Train embeddings");
    std::string tr_kg, tr_out;
    bool tr_patterned = false;
    std::vector<double> tr_ratios;
    // 0 sentinels mean "take the config value"
    std::size_t tr_dim = 0, tr_batch = 0, tr_negatives = 0, tr_eval_every = 0;
    long long tr_max_epochs = -1;
    double tr_lr = -1.0, tr_margin = -1.0;
    int tr_patience = -1, tr_norm = 0;
    std::uint64_t tr_seed = 0;
    bool tr_seed_set = false;
    std::string tr_loss;
    train_cmd->add_option("--kg", tr_kg, "Knowledge graph directory");
    train_cmd->add_flag("--patterned", tr_patterned, "Use the synthetic patterned graph");
    train_cmd->add_option("--out", tr_out, "Output model directory")->required();
    train_cmd->add_option("--ratios", tr_ratios, "Train/valid/test ratios")->expected(3);
    train_cmd->add_option("--dim", tr_dim, "Embedding dimension");
    train_cmd->add_option("--lr", tr_lr, "Learning rate");
    train_cmd->add_option("--batch", tr_batch, "Batch size");
    train_cmd->add_option("--max-epochs", tr_max_epochs, "Max epochs");
    train_cmd->add_option("--negatives", tr_negatives, "Negatives per positive");
    train_cmd->add_option("--patience", tr_patience, "Early-stopping patience (<=0 off)");
    train_cmd->add_option("--eval-every", tr_eval_every, "Epochs between validation checks");
    train_cmd->add_option("--seed", tr_seed, "Training and split seed")
        ->each([&](const std::string&) { tr_seed_set = true; });
    train_cmd->add_option("--norm-order", tr_norm, "Distance norm (1 or 2)");
    train_cmd->add_option("--loss", tr_loss, "nll | margin");
    train_cmd->add_option("--margin", tr_margin, "Margin (margin loss only)");

    auto* keval_cmd = embed_cmd->add_subcommand("eval", "Evaluate a trained model");
    std::string ke_model, ke_kg;
    bool ke_patterned = false;
    std::vector<double> ke_ratios;
    std::uint64_t ke_seed = 0;
    keval_cmd->add_option("--model", ke_model, "Model directory")->required();
    keval_cmd->add_option("--kg", ke_kg, "Knowledge graph directory");
    keval_cmd->add_flag("--patterned", ke_patterned, "Use the synthetic patterned graph");
    keval_cmd->add_option("--ratios", ke_ratios, "Train/valid/test ratios")->expected(3);
    keval_cmd->add_option("--seed", ke_seed, "Split seed used at training time");

    // genq-chunk
    auto* chunk_cmd = app.add_subcommand("genq-chunk", "Chunk documents into paragraphs");
    std::string ch_docs, ch_out;
    std::size_t ch_max_tokens = 0;
    bool ch_lenient = false, ch_no_preprocess = false;
    chunk_cmd->add_option("--docs", ch_docs, "Documents JSONL")->required();
    chunk_cmd->add_option("--out", ch_out, "Output paragraphs JSONL")->required();
    chunk_cmd->add_option("--max-tokens", ch_max_tokens, "Token cap per paragraph");
    chunk_cmd->add_flag("--lenient", ch_lenient, "Warn instead of failing on bad records");
    chunk_cmd->add_flag("--no-preprocess", ch_no_preprocess,
                        "Skip abbreviation expansion and coreference resolution");

    CLI11_PARSE(app, argc, argv);

    try {
        kc::Config config;
        if (!config_path.empty()) config = kc::load_config(config_path);
        auto coref = kc::make_coref(config);

        if (build_cmd->parsed()) {
            const auto docs =
                load_and_preprocess(bk_docs, bk_lenient, !bk_no_preprocess, coref.get());
            std::vector<std::string> warnings;
            auto graph = kgqa::kg::KnowledgeGraph::build(docs, config.relation_set, !bk_lenient,
                                                         &warnings);
            if (!bk_cui.empty()) graph.link_synonyms(kgqa::kg::load_cui_map(bk_cui), &warnings);
            print_warnings(warnings);
            graph.persist(bk_out);
            std::cout << json{{"entities", graph.entities().size()},
                              {"triples", graph.triples().size()}}
                             .dump()
                      << "\n";
        } else if (index_cmd->parsed()) {
            const auto docs =
                load_and_preprocess(ix_docs, ix_lenient, !ix_no_preprocess, coref.get());
            kgqa::vdb::HashedTfEmbedder embedder(ix_dim ? ix_dim : config.embed_dim);
            std::vector<std::string> warnings;
            auto index = kgqa::vdb::VectorIndex::build(docs, embedder, !ix_lenient, &warnings);
            print_warnings(warnings);
            index.persist(ix_out);
            std::cout << json{{"documents", index.size()}, {"dim", index.dim()}}.dump() << "\n";
        } else if (ask_cmd->parsed()) {
            const auto graph = kgqa::kg::KnowledgeGraph::load(ask_kg);
            kgqa::vdb::VectorIndex index;
            if (!ask_index.empty()) index = kgqa::vdb::VectorIndex::load(ask_index);
            if (ask_index.empty() && !ask_no_vdb)
                throw std::runtime_error("ask needs --index (or --no-vdb)");
            kgqa::vdb::HashedTfEmbedder embedder(index.dim() ? index.dim() : config.embed_dim);
            auto generator = kc::make_generator(config);
            auto opts = kc::ask_options(config);
            if (ask_k) opts.k = ask_k;
            opts.joint_reasoning = !ask_no_jr;
            opts.use_vdb = !ask_no_vdb;
            if (ask_no_syn) opts.synonym_expansion = false;
            const auto final = kgqa::jr::answer_question(ask_qid, ask_question, graph, index,
                                                         embedder, *generator, config.generation,
                                                         opts);
            std::cout << answer_to_json(final).dump(2) << "\n";
        } else if (eval_cmd->parsed()) {
            return run_eval(config, ea);
        } else if (train_cmd->parsed()) {
            auto transe = config.transe;
            if (tr_dim) transe.dim = tr_dim;
            if (tr_lr >= 0.0) transe.lr = tr_lr;
            if (tr_batch) transe.batch = tr_batch;
            if (tr_max_epochs >= 0) transe.max_epochs = static_cast<std::size_t>(tr_max_epochs);
            if (tr_negatives) transe.negatives_per_positive = tr_negatives;
            if (tr_patience >= 0) transe.patience = tr_patience;
            if (tr_eval_every) transe.eval_every = tr_eval_every;
            if (tr_seed_set) transe.seed = tr_seed;
            if (tr_norm) transe.norm_order = tr_norm;
            if (tr_loss == "nll") transe.loss = kgqa::kge::Loss::NegativeLogLikelihood;
            else if (tr_loss == "margin") transe.loss = kgqa::kge::Loss::MarginRanking;
            else if (!tr_loss.empty())
                throw std::runtime_error("--loss must be nll or margin");
            if (tr_margin >= 0.0) transe.margin = tr_margin;
            auto ratios = config.split_ratios;
            if (!tr_ratios.empty()) ratios = {tr_ratios[0], tr_ratios[1], tr_ratios[2]};

            std::vector<kgqa::kg::Triple> triples;
            std::size_t entity_count = 0;
            std::vector<std::string> relation_names;
            std::vector<std::string> entity_labels;
            if (tr_patterned) {
                triples = kgqa::kge::patterned_graph(entity_count, relation_names);
                for (std::size_t i = 0; i < entity_count; ++i)
                    entity_labels.push_back((i < 50 ? "obj" : "hub") +
                                            std::to_string(i < 50 ? i : i - 50));
            } else {
                if (tr_kg.empty())
                    throw std::runtime_error("kg-embed train needs --kg or --patterned");
                const auto graph = kgqa::kg::KnowledgeGraph::load(tr_kg);
                triples = graph.triples();
                entity_count = graph.entities().size();
                relation_names = graph_relation_names(graph);
                for (const auto& e : graph.entities()) entity_labels.push_back(e.label);
            }
            const auto split =
                kgqa::kge::split_triples(triples, entity_count, ratios, transe.seed);
            kgqa::kge::TrainTrace trace;
            auto model = kgqa::kge::train_transe(split, entity_count, relation_names, transe,
                                                 &trace);
            model.entity_labels = entity_labels;
            kgqa::kge::persist_model(model, tr_out);
            json report{{"train", split.train.size()},
                        {"valid", split.valid.size()},
                        {"test", split.test.size()},
                        {"moved_back", split.moved_back},
                        {"epochs_run", trace.epochs_run},
                        {"early_stopped", trace.early_stopped}};
            if (!trace.epoch_loss.empty()) {
                report["first_epoch_loss"] = trace.epoch_loss.front();
                report["last_epoch_loss"] = trace.epoch_loss.back();
            }
            if (!split.test.empty()) {
                const auto rep = kgqa::kge::rank_metrics(model, split.test);
                report["test"] = {{"hits1", rep.hits1},
                                  {"hits10", rep.hits10},
                                  {"hits100", rep.hits100},
                                  {"mrr", rep.mrr},
                                  {"rankings", rep.rankings}};
            }
            std::cout << report.dump(2) << "\n";
        } else if (keval_cmd->parsed()) {
            const auto model = kgqa::kge::load_model(ke_model);
            std::vector<kgqa::kg::Triple> triples;
            std::size_t entity_count = 0;
            std::vector<std::string> relation_names;
            if (ke_patterned) {
                triples = kgqa::kge::patterned_graph(entity_count, relation_names);
            } else {
                if (ke_kg.empty())
                    throw std::runtime_error("kg-embed eval needs --kg or --patterned");
                const auto graph = kgqa::kg::KnowledgeGraph::load(ke_kg);
                triples = graph.triples();
                entity_count = graph.entities().size();
            }
            auto ratios = config.split_ratios;
            if (!ke_ratios.empty()) ratios = {ke_ratios[0], ke_ratios[1], ke_ratios[2]};
            const auto split = kgqa::kge::split_triples(triples, entity_count, ratios, ke_seed);
            const auto rep = kgqa::kge::rank_metrics(model, split.test);
            std::cout << json{{"hits1", rep.hits1},
                              {"hits10", rep.hits10},
                              {"hits100", rep.hits100},
                              {"mrr", rep.mrr},
                              {"rankings", rep.rankings}}
                             .dump(2)
                      << "\n";
        } else if (chunk_cmd->parsed()) {
            const auto docs =
                load_and_preprocess(ch_docs, ch_lenient, !ch_no_preprocess, coref.get());
            const auto paragraphs = kgqa::corpus::chunk_paragraphs(
                docs, ch_max_tokens ? ch_max_tokens : config.chunk_max_tokens);
            kgqa::corpus::save_paragraphs(paragraphs, ch_out);
            std::cout << json{{"paragraphs", paragraphs.size()}}.dump() << "\n";
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
