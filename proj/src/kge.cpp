#include "kgqa/kge.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "kgqa/jr.hpp"
#include "kgqa/rng.hpp"
#include "kgqa/text.hpp"

namespace kgqa::kge {

using json = nlohmann::json;
namespace fs = std::filesystem;

TripleSplit split_triples(const std::vector<kg::Triple>& triples, std::size_t entity_count,
                          std::array<double, 3> ratios, std::uint64_t seed) {
    const double sum = ratios[0] + ratios[1] + ratios[2];
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("split_triples: ratios must sum to 1");
    if (triples.empty()) throw std::invalid_argument("split_triples: empty graph");
    (void)entity_count;

    const std::size_t n = triples.size();
    const std::size_t n_valid = static_cast<std::size_t>(ratios[1] * static_cast<double>(n));
    const std::size_t n_test = static_cast<std::size_t>(ratios[2] * static_cast<double>(n));
    if ((ratios[1] > 0.0 && n_valid == 0) || (ratios[2] > 0.0 && n_test == 0) ||
        n_valid + n_test >= n)
        throw std::runtime_error("split_triples: graph too small for non-empty splits");

    std::vector<kg::Triple> shuffled = triples;
    Rng rng(seed);
    rng.shuffle(shuffled);

    TripleSplit split;
    split.seed = seed;
    const std::size_t n_train = n - n_valid - n_test;
    split.train.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.valid.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(n_train),
                       shuffled.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid));
    split.test.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid),
                      shuffled.end());

    // Coverage sweep: anything in valid/test referencing an entity or
    // relation unseen in train cannot be ranked meaningfully; move it back.
    std::set<int> seen_entities;
    std::set<std::string> seen_relations;
    for (const auto& t : split.train) {
        seen_entities.insert(t.head);
        seen_entities.insert(t.tail);
        seen_relations.insert(t.relation);
    }
    auto sweep = [&](std::vector<kg::Triple>& part) {
        std::vector<kg::Triple> kept;
        for (const auto& t : part) {
            const bool covered = seen_entities.count(t.head) != 0 &&
                                 seen_entities.count(t.tail) != 0 &&
                                 seen_relations.count(t.relation) != 0;
            if (covered) {
                kept.push_back(t);
            } else {
                split.train.push_back(t);
                seen_entities.insert(t.head);
                seen_entities.insert(t.tail);
                seen_relations.insert(t.relation);
                ++split.moved_back;
            }
        }
        part = std::move(kept);
    };
    sweep(split.valid);
    sweep(split.test);
    return split;
}

TripleSplit split_triples(const kg::KnowledgeGraph& graph, std::array<double, 3> ratios,
                          std::uint64_t seed) {
    return split_triples(graph.triples(), graph.entities().size(), ratios, seed);
}

int TransEModel::relation_id(const std::string& name) const {
    for (std::size_t i = 0; i < relation_names.size(); ++i)
        if (relation_names[i] == name) return static_cast<int>(i);
    throw std::runtime_error("unknown relation: " + name);
}

namespace {

double distance(const std::vector<double>& h, const std::vector<double>& r,
                const std::vector<double>& t, int norm_order) {
    double d = 0.0;
    if (norm_order == 1) {
        for (std::size_t i = 0; i < h.size(); ++i) d += std::abs(h[i] + r[i] - t[i]);
    } else {
        for (std::size_t i = 0; i < h.size(); ++i) {
            const double v = h[i] + r[i] - t[i];
            d += v * v;
        }
        d = std::sqrt(d);
    }
    return d;
}

void normalize_row(std::vector<double>& row) {
    double n = 0.0;
    for (double x : row) n += x * x;
    n = std::sqrt(n);
    if (n > 0.0)
        for (double& x : row) x /= n;
}

struct IdTriple {
    int h, r, t;
};

struct Adam {
    std::vector<std::vector<double>> m, v;
    double lr;
    std::size_t dim;
    static constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;

    Adam(std::size_t rows, std::size_t d, double learning_rate)
        : m(rows, std::vector<double>(d, 0.0)),
          v(rows, std::vector<double>(d, 0.0)),
          lr(learning_rate),
          dim(d) {}

    void update(std::vector<double>& row, std::size_t idx, const std::vector<double>& grad,
                double bc1, double bc2) {
        auto& mi = m[idx];
        auto& vi = v[idx];
        for (std::size_t i = 0; i < dim; ++i) {
            mi[i] = b1 * mi[i] + (1.0 - b1) * grad[i];
            vi[i] = b2 * vi[i] + (1.0 - b2) * grad[i] * grad[i];
            row[i] -= lr * (mi[i] / bc1) / (std::sqrt(vi[i] / bc2) + eps);
        }
    }
};

}  // namespace

TransEModel train_transe(const TripleSplit& split, std::size_t entity_count,
                         const std::vector<std::string>& relation_names,
                         const TransEConfig& config, TrainTrace* trace) {
    if (split.train.empty()) throw std::invalid_argument("train_transe: empty training split");
    if (config.dim == 0 || config.batch == 0)
        throw std::invalid_argument("train_transe: dim and batch must be positive");
    if (config.norm_order != 1 && config.norm_order != 2)
        throw std::invalid_argument("train_transe: norm_order must be 1 or 2");

    const std::size_t N = entity_count;
    const std::size_t R = relation_names.size();
    const std::size_t dim = config.dim;

    std::map<std::string, int> rel_ids;
    for (std::size_t i = 0; i < R; ++i) rel_ids[relation_names[i]] = static_cast<int>(i);
    auto to_ids = [&](const std::vector<kg::Triple>& src) {
        std::vector<IdTriple> out;
        out.reserve(src.size());
        for (const auto& t : src) {
            const auto it = rel_ids.find(t.relation);
            if (it == rel_ids.end())
                throw std::runtime_error("train_transe: relation not in vocabulary: " + t.relation);
            if (t.head < 0 || t.tail < 0 || static_cast<std::size_t>(t.head) >= N ||
                static_cast<std::size_t>(t.tail) >= N)
                throw std::runtime_error("train_transe: entity id out of range");
            out.push_back({t.head, it->second, t.tail});
        }
        return out;
    };
    const std::vector<IdTriple> train = to_ids(split.train);

    Rng rng(config.seed);
    TransEModel model;
    model.dim = dim;
    model.norm_order = config.norm_order;
    model.entity_labels.assign(N, std::string{});
    model.relation_names = relation_names;
    const double bound = 6.0 / std::sqrt(static_cast<double>(dim));
    model.entity_emb.assign(N, std::vector<double>(dim, 0.0));
    for (auto& row : model.entity_emb) {
        for (double& x : row) x = rng.uniform(-bound, bound);
        normalize_row(row);
    }
    model.relation_emb.assign(R, std::vector<double>(dim, 0.0));
    for (auto& row : model.relation_emb)
        for (double& x : row) x = rng.uniform(-bound, bound);

    Adam adam_e(N, dim, config.lr);
    Adam adam_r(R, dim, config.lr);
    std::size_t step = 0;

    double best_valid_mrr = -1.0;
    int bad_evals = 0;

    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;

        for (std::size_t batch_start = 0; batch_start < order.size();
             batch_start += config.batch) {
            const std::size_t batch_end = std::min(batch_start + config.batch, order.size());
            const double batch_size = static_cast<double>(batch_end - batch_start);

            // Ordered accumulators keep the Adam update sequence
            // deterministic.
            std::map<int, std::vector<double>> grad_e, grad_r;
            auto acc = [&](std::map<int, std::vector<double>>& g, int idx,
                           const std::vector<double>& delta, double scale) {
                auto [it, inserted] = g.try_emplace(idx, std::vector<double>(dim, 0.0));
                auto& row = it->second;
                for (std::size_t i = 0; i < dim; ++i) row[i] += scale * delta[i];
            };

            for (std::size_t bi = batch_start; bi < batch_end; ++bi) {
                const IdTriple pos = train[order[bi]];

                std::vector<std::pair<int, int>> cands;  // (head, tail); [0] is the positive
                cands.reserve(config.negatives_per_positive + 1);
                cands.emplace_back(pos.h, pos.t);
                for (std::size_t k = 0; k < config.negatives_per_positive; ++k) {
                    if (rng.uniform() < 0.5) {
                        int hh;
                        do {
                            hh = static_cast<int>(rng.below(N));
                        } while (hh == pos.h);
                        cands.emplace_back(hh, pos.t);
                    } else {
                        int tt;
                        do {
                            tt = static_cast<int>(rng.below(N));
                        } while (tt == pos.t);
                        cands.emplace_back(pos.h, tt);
                    }
                }

                const auto& er = model.relation_emb[static_cast<std::size_t>(pos.r)];
                std::vector<double> scores(cands.size());
                for (std::size_t j = 0; j < cands.size(); ++j)
                    scores[j] = -distance(model.entity_emb[static_cast<std::size_t>(cands[j].first)],
                                          er,
                                          model.entity_emb[static_cast<std::size_t>(cands[j].second)],
                                          config.norm_order);

                // dL/d score_j for each candidate.
                std::vector<double> coef(cands.size(), 0.0);
                if (config.loss == Loss::NegativeLogLikelihood) {
                    const double smax = *std::max_element(scores.begin(), scores.end());
                    double z = 0.0;
                    for (double s : scores) z += std::exp(s - smax);
                    epoch_loss += std::log(z) - (scores[0] - smax);
                    for (std::size_t j = 0; j < cands.size(); ++j)
                        coef[j] = std::exp(scores[j] - smax) / z - (j == 0 ? 1.0 : 0.0);
                } else {
                    for (std::size_t j = 1; j < cands.size(); ++j) {
                        const double viol = config.margin - scores[0] + scores[j];
                        if (viol > 0.0) {
                            epoch_loss += viol;
                            coef[0] -= 1.0;
                            coef[j] += 1.0;
                        }
                    }
                }

                std::vector<double> g(dim);
                for (std::size_t j = 0; j < cands.size(); ++j) {
                    if (coef[j] == 0.0) continue;
                    const auto& eh = model.entity_emb[static_cast<std::size_t>(cands[j].first)];
                    const auto& et = model.entity_emb[static_cast<std::size_t>(cands[j].second)];
                    if (config.norm_order == 1) {
                        for (std::size_t i = 0; i < dim; ++i) {
                            const double v = eh[i] + er[i] - et[i];
                            g[i] = -coef[j] * (v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0));
                        }
                    } else {
                        double nrm = 0.0;
                        for (std::size_t i = 0; i < dim; ++i) {
                            const double v = eh[i] + er[i] - et[i];
                            nrm += v * v;
                        }
                        nrm = std::sqrt(nrm);
                        for (std::size_t i = 0; i < dim; ++i) {
                            const double v = eh[i] + er[i] - et[i];
                            g[i] = nrm > 0.0 ? -coef[j] * v / nrm : 0.0;
                        }
                    }
                    acc(grad_e, cands[j].first, g, 1.0);
                    acc(grad_r, pos.r, g, 1.0);
                    acc(grad_e, cands[j].second, g, -1.0);
                }
            }

            ++step;
            const double bc1 = 1.0 - std::pow(Adam::b1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(Adam::b2, static_cast<double>(step));
            for (auto& [idx, gsum] : grad_e) {
                for (double& x : gsum) x /= batch_size;
                adam_e.update(model.entity_emb[static_cast<std::size_t>(idx)],
                              static_cast<std::size_t>(idx), gsum, bc1, bc2);
            }
            for (auto& [idx, gsum] : grad_r) {
                for (double& x : gsum) x /= batch_size;
                adam_r.update(model.relation_emb[static_cast<std::size_t>(idx)],
                              static_cast<std::size_t>(idx), gsum, bc1, bc2);
            }
            for (auto& [idx, gsum] : grad_e)
                normalize_row(model.entity_emb[static_cast<std::size_t>(idx)]);
        }

        if (!std::isfinite(epoch_loss))
            throw std::runtime_error("train_transe: non-finite loss at epoch " +
                                     std::to_string(epoch));
        if (trace) {
            trace->epoch_loss.push_back(epoch_loss / static_cast<double>(train.size()));
            trace->epochs_run = epoch;
        }

        if (config.patience > 0 && !split.valid.empty() && epoch % config.eval_every == 0) {
            const double mrr = rank_metrics(model, split.valid).mrr;
            if (mrr > best_valid_mrr + 1e-12) {
                best_valid_mrr = mrr;
                bad_evals = 0;
            } else if (++bad_evals >= config.patience) {
                if (trace) trace->early_stopped = true;
                break;
            }
        }
    }
    return model;
}

double score_triple(const TransEModel& model, int h, int r, int t) {
    if (h < 0 || t < 0 || static_cast<std::size_t>(h) >= model.entity_emb.size() ||
        static_cast<std::size_t>(t) >= model.entity_emb.size() || r < 0 ||
        static_cast<std::size_t>(r) >= model.relation_emb.size())
        throw std::out_of_range("score_triple: unknown id");
    return -distance(model.entity_emb[static_cast<std::size_t>(h)],
                     model.relation_emb[static_cast<std::size_t>(r)],
                     model.entity_emb[static_cast<std::size_t>(t)], model.norm_order);
}

RankReport rank_metrics(const TransEModel& model, const std::vector<kg::Triple>& test) {
    if (test.empty()) throw std::invalid_argument("rank_metrics: empty test set");
    const std::size_t N = model.entity_emb.size();
    RankReport rep;
    double rr_sum = 0.0;
    std::size_t h1 = 0, h10 = 0, h100 = 0;

    auto account = [&](std::size_t rank) {
        rr_sum += 1.0 / static_cast<double>(rank);
        if (rank <= 1) ++h1;
        if (rank <= 10) ++h10;
        if (rank <= 100) ++h100;
        ++rep.rankings;
    };

    for (const auto& t : test) {
        const int r = model.relation_id(t.relation);
        // True tail among all entities, head fixed; ties get the worst rank.
        const double s_true_tail = score_triple(model, t.head, r, t.tail);
        std::size_t rank = 1;
        for (std::size_t e = 0; e < N; ++e) {
            if (static_cast<int>(e) == t.tail) continue;
            if (score_triple(model, t.head, r, static_cast<int>(e)) >= s_true_tail) ++rank;
        }
        account(rank);

        const double s_true_head = score_triple(model, t.head, r, t.tail);
        rank = 1;
        for (std::size_t e = 0; e < N; ++e) {
            if (static_cast<int>(e) == t.head) continue;
            if (score_triple(model, static_cast<int>(e), r, t.tail) >= s_true_head) ++rank;
        }
        account(rank);
    }
    const double n = static_cast<double>(rep.rankings);
    rep.hits1 = static_cast<double>(h1) / n;
    rep.hits10 = static_cast<double>(h10) / n;
    rep.hits100 = static_cast<double>(h100) / n;
    rep.mrr = rr_sum / n;
    return rep;
}

void persist_model(const TransEModel& model, const std::string& dir) {
    fs::create_directories(dir);
    {
        std::ofstream out(fs::path(dir) / "model.txt");
        if (!out) throw std::runtime_error("cannot write model file in " + dir);
        out << json{{"dim", model.dim},
                    {"norm_order", model.norm_order},
                    {"entity_count", model.entity_emb.size()},
                    {"relation_count", model.relation_emb.size()}}
                   .dump()
            << "\n";
        char buf[64];
        auto write_rows = [&](const std::vector<std::vector<double>>& rows) {
            for (const auto& row : rows) {
                for (std::size_t i = 0; i < row.size(); ++i) {
                    std::snprintf(buf, sizeof(buf), "%.17g", row[i]);
                    if (i) out << ' ';
                    out << buf;
                }
                out << "\n";
            }
        };
        write_rows(model.entity_emb);
        write_rows(model.relation_emb);
    }
    {
        std::ofstream out(fs::path(dir) / "labels.jsonl");
        if (!out) throw std::runtime_error("cannot write labels file in " + dir);
        for (const auto& l : model.entity_labels)
            out << json{{"kind", "entity"}, {"label", l}}.dump() << "\n";
        for (const auto& l : model.relation_names)
            out << json{{"kind", "relation"}, {"label", l}}.dump() << "\n";
    }
}

TransEModel load_model(const std::string& dir) {
    std::ifstream in(fs::path(dir) / "model.txt");
    if (!in) throw std::runtime_error("cannot open model file in " + dir);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("model file: missing header");
    json header = json::parse(line, nullptr, false);
    if (header.is_discarded())
        throw std::runtime_error("model file: malformed header");
    TransEModel model;
    model.dim = header.at("dim").get<std::size_t>();
    model.norm_order = header.at("norm_order").get<int>();
    const std::size_t n_ent = header.at("entity_count").get<std::size_t>();
    const std::size_t n_rel = header.at("relation_count").get<std::size_t>();

    auto read_rows = [&](std::size_t count) {
        std::vector<std::vector<double>> rows;
        rows.reserve(count);
        for (std::size_t i = 0; i < count; ++i) {
            if (!std::getline(in, line))
                throw std::runtime_error("model file: truncated at row " + std::to_string(i));
            std::vector<double> row;
            row.reserve(model.dim);
            const char* p = line.c_str();
            char* end = nullptr;
            for (std::size_t d = 0; d < model.dim; ++d) {
                const double x = std::strtod(p, &end);
                if (end == p)
                    throw std::runtime_error("model file: bad value in row " + std::to_string(i));
                row.push_back(x);
                p = end;
            }
            rows.push_back(std::move(row));
        }
        return rows;
    };
    model.entity_emb = read_rows(n_ent);
    model.relation_emb = read_rows(n_rel);

    model.entity_labels.assign(n_ent, std::string{});
    std::ifstream lin(fs::path(dir) / "labels.jsonl");
    if (lin) {
        std::size_t ei = 0;
        std::string lline;
        while (std::getline(lin, lline)) {
            if (text::trim(lline).empty()) continue;
            json j = json::parse(lline, nullptr, false);
            if (j.is_discarded() || !j.contains("kind") || !j.contains("label"))
                throw std::runtime_error("labels file: bad record");
            if (j.at("kind") == "entity") {
                if (ei < n_ent) model.entity_labels[ei++] = j.at("label").get<std::string>();
            } else {
                model.relation_names.push_back(j.at("label").get<std::string>());
            }
        }
    }
    if (model.relation_names.size() != n_rel)
        model.relation_names.resize(n_rel);
    return model;
}

TripletQuery triplet_query(const std::string& question, const kg::KnowledgeGraph& graph,
                           double fuzzy_threshold) {
    TripletQuery q;
    const auto disease = jr::match_disease(question, graph, fuzzy_threshold);
    const auto relation = jr::match_relation(question, jr::default_relation_aliases());

    // Tail slot: longest Term whose token sequence appears contiguously.
    const auto q_tokens = text::tokenize(question);
    std::optional<int> term;
    std::size_t best_len = 0;
    std::string best_norm;
    for (int id : graph.entities_of_kind(kg::EntityKind::Term)) {
        const auto& e = graph.entity(id);
        const auto toks = text::tokenize(e.norm_label);
        if (!text::contains_token_seq(q_tokens, toks)) continue;
        if (toks.size() > best_len ||
            (toks.size() == best_len && e.norm_label < best_norm)) {
            term = id;
            best_len = toks.size();
            best_norm = e.norm_label;
        }
    }

    int slots = 0;
    if (disease) ++slots;
    if (relation) ++slots;
    if (term) ++slots;
    if (slots < 2) throw std::runtime_error("unresolvable pattern: \"" + question + "\"");

    if (disease && relation) {
        // <h, r, ?> (preferred when everything matched)
        q.missing = TripletSlot::Tail;
        q.head = graph.entity(disease->entity_id).label;
        q.relation = *relation;
        for (int t : graph.tails(disease->entity_id, *relation))
            q.answers.push_back(graph.entity(t).label);
    } else if (relation && term) {
        q.missing = TripletSlot::Head;
        q.relation = *relation;
        q.tail = graph.entity(*term).label;
        for (int h : graph.heads(*relation, *term)) q.answers.push_back(graph.entity(h).label);
    } else {
        q.missing = TripletSlot::Relation;
        q.head = graph.entity(disease->entity_id).label;
        q.tail = graph.entity(*term).label;
        for (const auto& r : graph.relations_between(disease->entity_id, *term))
            q.answers.push_back(r);
    }
    return q;
}

std::vector<kg::Triple> patterned_graph(std::size_t& entity_count,
                                        std::vector<std::string>& relation_names,
                                        std::uint64_t seed) {
    constexpr std::size_t kObjects = 50;
    constexpr std::size_t kHubs = 10;
    constexpr std::size_t kClusterSize = 5;
    constexpr std::size_t kClusters = kObjects / kClusterSize;
    constexpr std::size_t kRelations = 5;
    constexpr std::size_t kTarget = 300;

    entity_count = kObjects + kHubs;
    relation_names.clear();
    for (std::size_t k = 0; k < kRelations; ++k)
        relation_names.push_back("r" + std::to_string(k));

    Rng rng(seed);
    std::vector<std::array<std::size_t, kRelations>> primary(kClusters), secondary(kClusters);
    for (std::size_t c = 0; c < kClusters; ++c) {
        for (std::size_t k = 0; k < kRelations; ++k) {
            primary[c][k] = rng.below(kHubs);
            secondary[c][k] = (primary[c][k] + 1 + rng.below(kHubs - 1)) % kHubs;
        }
    }

    std::vector<kg::Triple> triples;
    for (std::size_t o = 0; o < kObjects; ++o) {
        const std::size_t c = o / kClusterSize;
        for (std::size_t k = 0; k < kRelations; ++k)
            triples.push_back({static_cast<int>(o), relation_names[k],
                               static_cast<int>(kObjects + primary[c][k])});
    }
    for (std::size_t k = 0; k < kRelations && triples.size() < kTarget; ++k) {
        for (std::size_t o = 0; o < kObjects && triples.size() < kTarget; ++o) {
            const std::size_t c = o / kClusterSize;
            triples.push_back({static_cast<int>(o), relation_names[k],
                               static_cast<int>(kObjects + secondary[c][k])});
        }
    }
    if (triples.size() != kTarget)
        throw std::logic_error("patterned_graph: unexpected triple count");
    return triples;
}

}  // namespace kgqa::kge
