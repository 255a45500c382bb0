#include "intentgraph/eval.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "intentgraph/util.hpp"

namespace ig {

namespace {

std::vector<std::pair<NodeId, std::string>> nodes_of_kind(const Graph& g, NodeKind kind) {
    std::vector<std::pair<NodeId, std::string>> out;
    for (auto& [id, n] : g.nodes())
        if (n.kind == kind) out.emplace_back(id, n.text);
    return out;
}

// Items in position order; an item occupying several positions appears once
// per position.
std::vector<std::string> session_item_texts(const Graph& g, const NodeId& session) {
    std::vector<std::pair<int32_t, const Node*>> slots;
    for (auto& [n, e] : g.neighbors(session, EdgeKind::ItemToSession, Direction::In))
        slots.emplace_back(e->position.value_or(0), n);
    std::sort(slots.begin(), slots.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first < b.first;
        return a.second->id < b.second->id;
    });
    std::vector<std::string> texts;
    texts.reserve(slots.size());
    for (auto& [pos, n] : slots) texts.push_back(n->text);
    return texts;
}

class EmbedCache {
public:
    explicit EmbedCache(Embedder& embed) : embed_(embed) {}
    const Vec& get(const std::string& text) {
        auto it = cache_.find(text);
        if (it != cache_.end()) return it->second;
        return cache_.emplace(text, embed_.embed(text)).first->second;
    }

private:
    Embedder& embed_;
    std::unordered_map<std::string, Vec> cache_;
};

Mat rows_from_texts(EmbedCache& cache, const std::vector<std::string>& texts, size_t max_len) {
    size_t start = texts.size() > max_len ? texts.size() - max_len : 0;
    size_t L = texts.size() - start;
    Mat m;
    for (size_t t = 0; t < L; ++t) {
        const Vec& v = cache.get(texts[start + t]);
        if (m.rows == 0) m = Mat(L, v.size());
        check_shapes(v.size(), m.cols, "embedding rows");
        std::copy(v.begin(), v.end(), m.row(t));
    }
    return m;
}

Vec mean_rows(const Mat& m) {
    Vec out(m.cols, 0.0);
    for (size_t r = 0; r < m.rows; ++r)
        for (size_t c = 0; c < m.cols; ++c) out[c] += m(r, c);
    for (double& v : out) v /= static_cast<double>(m.rows);
    return out;
}

// Instances for any session->intention partition; shared by the public task
// builder and the triplet trainer's validation set.
void build_intention_instances(const Graph& g, const std::map<NodeId, std::vector<NodeId>>& part,
                               int n_negatives, uint64_t seed, bool enforce_2_4, TaskSet& out) {
    auto intentions = nodes_of_kind(g, NodeKind::Intention);
    Rng root(seed);
    for (auto& [sid, positives] : part) {
        if (enforce_2_4 && (positives.size() < 2 || positives.size() > 4)) {
            out.log.push_back("skipped " + sid + ": " + std::to_string(positives.size()) +
                              " positives outside 2-4");
            continue;
        }
        std::set<NodeId> linked(positives.begin(), positives.end());
        std::vector<NodeId> pool;
        for (auto& [iid, text] : intentions)
            if (!linked.count(iid)) pool.push_back(iid);
        if (pool.size() < static_cast<size_t>(n_negatives)) {
            out.log.push_back("skipped " + sid + ": only " + std::to_string(pool.size()) +
                              " unlinked intentions for " + std::to_string(n_negatives) +
                              " negatives");
            continue;
        }
        Rng rng = root.fork("negatives:" + sid);
        std::vector<NodeId> negatives = rng.reservoir(pool, static_cast<size_t>(n_negatives));

        RankingInstance inst;
        inst.query_id = sid;
        inst.query_texts = session_item_texts(g, sid);
        inst.seed = seed;
        for (const NodeId& p : positives) {
            inst.candidate_ids.push_back(p);
            inst.candidate_texts.push_back(g.node(p).text);
            inst.positives.insert(p);
        }
        for (const NodeId& n : negatives) {
            inst.candidate_ids.push_back(n);
            inst.candidate_texts.push_back(g.node(n).text);
        }
        out.instances.push_back(std::move(inst));
    }
}

// d/dq of cos(q, x); zero when either vector is zero.
Vec cosine_grad_q(const Vec& q, const Vec& x) {
    Vec out(q.size(), 0.0);
    double nq = norm(q);
    double nx = norm(x);
    if (nq == 0.0 || nx == 0.0) return out;
    double c = dot(q, x) / (nq * nx);
    for (size_t i = 0; i < q.size(); ++i) out[i] = x[i] / (nq * nx) - c * q[i] / (nq * nq);
    return out;
}

}  // namespace

DataSplit split_groups(const std::map<NodeId, std::vector<NodeId>>& groups,
                       const SplitRatios& ratios, uint64_t seed) {
    if (ratios.train < 0.0 || ratios.valid < 0.0 || ratios.test < 0.0 ||
        std::abs(ratios.train + ratios.valid + ratios.test - 1.0) > 1e-9)
        throw RangeError("split ratios must be non-negative and sum to 1");
    if (groups.size() < 10)
        throw RangeError("split requires at least 10 source nodes, got " +
                         std::to_string(groups.size()));
    std::vector<NodeId> keys;
    keys.reserve(groups.size());
    for (auto& [k, v] : groups) keys.push_back(k);
    Rng rng = Rng(seed).fork("split");
    rng.shuffle(keys);

    size_t n = keys.size();
    size_t n_train = static_cast<size_t>(std::floor(ratios.train * static_cast<double>(n) + 1e-9));
    size_t n_valid = static_cast<size_t>(std::floor(ratios.valid * static_cast<double>(n) + 1e-9));
    DataSplit split;
    for (size_t i = 0; i < n; ++i) {
        auto& dst = i < n_train ? split.train : i < n_train + n_valid ? split.valid : split.test;
        dst.emplace(keys[i], groups.at(keys[i]));
    }
    return split;
}

DataSplit split_edges(const Graph& g, EdgeKind kind, const SplitRatios& ratios, uint64_t seed) {
    std::map<NodeId, std::vector<NodeId>> groups;
    for (auto& [key, e] : g.edges())
        if (e.kind == kind) groups[e.src].push_back(e.dst);
    for (auto& [src, targets] : groups)
        targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
    return split_groups(groups, ratios, seed);
}

TaskSet make_intention_task(const Graph& g, const DataSplit& split, int n_negatives,
                            uint64_t seed) {
    TaskSet out;
    build_intention_instances(g, split.test, n_negatives, seed, true, out);
    return out;
}

TaskSet make_concept_task(const Graph& g, const DataSplit& split, int n_candidates,
                          uint64_t seed) {
    TaskSet out;
    auto concepts = nodes_of_kind(g, NodeKind::Concept);
    Rng root(seed);
    for (auto& [iid, positives] : split.test) {
        RankingInstance inst;
        inst.query_id = iid;
        inst.query_texts = {g.node(iid).text};
        inst.seed = seed;
        std::set<NodeId> linked(positives.begin(), positives.end());

        if (concepts.size() < static_cast<size_t>(n_candidates)) {
            inst.pool_exhausted = true;
            out.log.push_back("pool exhausted for " + iid + ": " +
                              std::to_string(concepts.size()) + " concepts in graph < " +
                              std::to_string(n_candidates));
            for (auto& [cid, text] : concepts) {
                inst.candidate_ids.push_back(cid);
                inst.candidate_texts.push_back(text);
            }
        } else {
            std::vector<NodeId> pool;
            for (auto& [cid, text] : concepts)
                if (!linked.count(cid)) pool.push_back(cid);
            size_t need = static_cast<size_t>(n_candidates) - linked.size();
            Rng rng = root.fork("candidates:" + iid);
            std::vector<NodeId> negatives = rng.reservoir(pool, need);
            for (const NodeId& p : positives) {
                inst.candidate_ids.push_back(p);
                inst.candidate_texts.push_back(g.node(p).text);
            }
            for (const NodeId& n : negatives) {
                inst.candidate_ids.push_back(n);
                inst.candidate_texts.push_back(g.node(n).text);
            }
        }
        inst.positives = std::move(linked);
        out.instances.push_back(std::move(inst));
    }
    return out;
}

std::map<NodeId, std::vector<NodeId>> derive_product_intentions(const Graph& g) {
    std::map<NodeId, std::vector<NodeId>> groups;
    for (auto& [id, n] : g.nodes()) {
        if (n.kind != NodeKind::Session) continue;
        std::vector<NodeId> intentions;
        for (auto& [in, e] : g.neighbors(id, EdgeKind::SessionToIntention, Direction::Out))
            intentions.push_back(in->id);
        if (intentions.empty()) continue;
        for (auto& [itn, e] : g.neighbors(id, EdgeKind::ItemToSession, Direction::In)) {
            auto& dst = groups[itn->id];
            dst.insert(dst.end(), intentions.begin(), intentions.end());
        }
    }
    for (auto& [pid, v] : groups) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    }
    return groups;
}

TaskSet make_product_recovery_task(const Graph& g, const DataSplit& split, int n_negatives,
                                   uint64_t seed) {
    TaskSet out;
    auto intentions = nodes_of_kind(g, NodeKind::Intention);
    Rng root(seed);
    for (auto& [pid, linked_list] : split.test) {
        std::set<NodeId> linked(linked_list.begin(), linked_list.end());
        std::vector<NodeId> pool;
        for (auto& [iid, text] : intentions)
            if (!linked.count(iid)) pool.push_back(iid);
        if (pool.size() < static_cast<size_t>(n_negatives)) {
            out.log.push_back("skipped " + pid + ": only " + std::to_string(pool.size()) +
                              " unlinked intentions for " + std::to_string(n_negatives) +
                              " negatives");
            continue;
        }
        for (const NodeId& iid : linked_list) {
            Rng rng = root.fork("negatives:" + pid + "|" + iid);
            std::vector<NodeId> negatives = rng.reservoir(pool, static_cast<size_t>(n_negatives));
            RankingInstance inst;
            inst.query_id = pid;
            inst.query_texts = {g.node(pid).text};
            inst.seed = seed;
            inst.candidate_ids.push_back(iid);
            inst.candidate_texts.push_back(g.node(iid).text);
            inst.positives.insert(iid);
            for (const NodeId& n : negatives) {
                inst.candidate_ids.push_back(n);
                inst.candidate_texts.push_back(g.node(n).text);
            }
            out.instances.push_back(std::move(inst));
        }
    }
    return out;
}

std::vector<size_t> rank_order(const RankingInstance& inst, const std::vector<double>& scores) {
    check_shapes(scores.size(), inst.candidate_ids.size(), "rank_order");
    std::vector<size_t> order(scores.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return inst.candidate_ids[a] < inst.candidate_ids[b];
    });
    return order;
}

std::vector<size_t> rank_by_embedding(const RankingInstance& inst, Embedder& embed,
                                      const AttnEncoder* session_encoder) {
    EmbedCache cache(embed);
    Vec query;
    if (session_encoder) {
        Mat seq = rows_from_texts(cache, inst.query_texts,
                                  static_cast<size_t>(session_encoder->config().max_len));
        query = session_encoder->encode(seq);
    } else {
        Mat seq = rows_from_texts(cache, inst.query_texts, inst.query_texts.size());
        query = mean_rows(seq);
    }
    std::vector<double> scores(inst.candidate_texts.size());
    for (size_t i = 0; i < scores.size(); ++i)
        scores[i] = cosine(query, cache.get(inst.candidate_texts[i]));
    return rank_order(inst, scores);
}

std::vector<int> positive_ranks(const RankingInstance& inst, const std::vector<size_t>& order) {
    std::vector<int> ranks;
    for (size_t r = 0; r < order.size(); ++r)
        if (inst.positives.count(inst.candidate_ids[order[r]]))
            ranks.push_back(static_cast<int>(r) + 1);
    return ranks;
}

double mrr(const std::vector<std::vector<int>>& ranks) {
    double sum = 0.0;
    size_t n = 0;
    for (const auto& q : ranks) {
        if (q.empty()) continue;
        sum += 1.0 / static_cast<double>(*std::min_element(q.begin(), q.end()));
        ++n;
    }
    return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

double hit_at_k(const std::vector<std::vector<int>>& ranks, int k) {
    double sum = 0.0;
    size_t n = 0;
    for (const auto& q : ranks) {
        if (q.empty()) continue;
        sum += *std::min_element(q.begin(), q.end()) <= k ? 1.0 : 0.0;
        ++n;
    }
    return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

double recall_at_k(const std::vector<std::vector<int>>& ranks, int k) {
    double sum = 0.0;
    size_t n = 0;
    for (const auto& q : ranks) {
        if (q.empty()) continue;
        size_t in_top = 0;
        for (int r : q)
            if (r <= k) ++in_top;
        sum += static_cast<double>(in_top) / static_cast<double>(q.size());
        ++n;
    }
    return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

double ndcg_at_k(const std::vector<std::vector<int>>& ranks, int k) {
    double sum = 0.0;
    size_t n = 0;
    for (const auto& q : ranks) {
        if (q.empty()) continue;
        double dcg = 0.0;
        for (int r : q)
            if (r <= k) dcg += 1.0 / std::log2(1.0 + static_cast<double>(r));
        double idcg = 0.0;
        size_t ideal = std::min(q.size(), static_cast<size_t>(k));
        for (size_t i = 1; i <= ideal; ++i) idcg += 1.0 / std::log2(1.0 + static_cast<double>(i));
        sum += idcg == 0.0 ? 0.0 : dcg / idcg;
        ++n;
    }
    return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

RankingReport summarize_rankings(const std::vector<std::vector<int>>& ranks,
                                 double mean_query_seconds) {
    RankingReport rep;
    rep.mrr = mrr(ranks);
    for (int k : {1, 3, 10}) rep.hit[k] = hit_at_k(ranks, k);
    for (int k : {5, 10, 20, 50, 100}) {
        rep.recall[k] = recall_at_k(ranks, k);
        rep.ndcg[k] = ndcg_at_k(ranks, k);
    }
    rep.mean_query_seconds = mean_query_seconds;
    for (const auto& q : ranks) q.empty() ? ++rep.skipped : ++rep.queries;
    return rep;
}

std::optional<double> ngram_diversity(const std::vector<std::string>& corpus, int n) {
    if (n < 1 || n > 6) throw RangeError("n-gram order must be in 1..6");
    std::vector<std::string> stream;
    for (const std::string& text : corpus)
        for (auto& tok : split_ws(to_lower(text))) stream.push_back(tok);
    if (stream.size() < static_cast<size_t>(n)) return std::nullopt;
    size_t total = stream.size() - static_cast<size_t>(n) + 1;
    std::unordered_set<std::string> unique;
    for (size_t i = 0; i < total; ++i) {
        std::string gram = stream[i];
        for (size_t j = 1; j < static_cast<size_t>(n); ++j) {
            gram += ' ';
            gram += stream[i + j];
        }
        unique.insert(std::move(gram));
    }
    return static_cast<double>(unique.size()) / static_cast<double>(total);
}

AttnEncoder train_session_intention_encoder(const Graph& g, const DataSplit& split,
                                            Embedder& embed, const TripletConfig& cfg) {
    if (split.train.empty()) throw TrainingError("no training sessions");
    EmbedCache cache(embed);

    struct Example {
        Mat seq;
        std::vector<const Vec*> positives;
        std::vector<const Vec*> pool;
    };
    auto intentions = nodes_of_kind(g, NodeKind::Intention);
    std::vector<Example> examples;
    for (auto& [sid, positives] : split.train) {
        Example ex;
        ex.seq =
            rows_from_texts(cache, session_item_texts(g, sid), static_cast<size_t>(cfg.max_len));
        if (ex.seq.rows == 0) continue;
        std::set<NodeId> linked(positives.begin(), positives.end());
        for (const NodeId& p : positives) ex.positives.push_back(&cache.get(g.node(p).text));
        for (auto& [iid, text] : intentions)
            if (!linked.count(iid)) ex.pool.push_back(&cache.get(text));
        if (ex.positives.empty() || ex.pool.empty()) continue;
        examples.push_back(std::move(ex));
    }
    if (examples.empty()) throw TrainingError("no usable training sessions");

    TaskSet valid;
    build_intention_instances(g, split.valid, cfg.valid_negatives, cfg.seed, false, valid);

    AttnConfig enc_cfg{embed.dim(), cfg.heads, cfg.blocks, cfg.max_len, cfg.dropout};
    Rng root(cfg.seed);
    Rng init_rng = root.fork("init");
    AttnEncoder enc(enc_cfg, init_rng, cfg.init_scale);
    AttnEncoder grads = enc.zeros_like();

    auto valid_mrr = [&]() {
        std::vector<std::vector<int>> ranks;
        for (const auto& inst : valid.instances) {
            Mat seq = rows_from_texts(cache, inst.query_texts, static_cast<size_t>(cfg.max_len));
            Vec q = enc.encode(seq);
            std::vector<double> scores(inst.candidate_texts.size());
            for (size_t i = 0; i < scores.size(); ++i)
                scores[i] = cosine(q, cache.get(inst.candidate_texts[i]));
            ranks.push_back(positive_ranks(inst, rank_order(inst, scores)));
        }
        return mrr(ranks);
    };

    Rng train_rng = root.fork("train");
    AttnEncoder best = enc;
    double best_mrr = valid.instances.empty() ? 0.0 : valid_mrr();
    int bad_evals = 0;
    int64_t step = 0;
    for (int ev = 0; ev < cfg.max_evals; ++ev) {
        for (int s = 0; s < cfg.steps_per_eval; ++s, ++step) {
            Example& ex = examples[train_rng.next_below(examples.size())];
            const Vec& pos = *ex.positives[train_rng.next_below(ex.positives.size())];
            const Vec& neg = *ex.pool[train_rng.next_below(ex.pool.size())];

            EncoderTape tape;
            Mat h = enc.forward(ex.seq, &tape, cfg.dropout > 0.0 ? &train_rng : nullptr);
            Vec q(h.row(h.rows - 1), h.row(h.rows - 1) + h.cols);
            double dp = 1.0 - cosine(q, pos);
            double dn = 1.0 - cosine(q, neg);
            double loss = cfg.margin + dp - dn;
            if (!std::isfinite(loss))
                throw TrainingError("triplet loss diverged at step " + std::to_string(step));
            if (loss <= 0.0) continue;

            Vec gp = cosine_grad_q(q, pos);
            Vec gn = cosine_grad_q(q, neg);
            Mat d_out(h.rows, h.cols);
            for (size_t c = 0; c < h.cols; ++c) d_out(h.rows - 1, c) = -gp[c] + gn[c];
            grads.zero();
            enc.backward(tape, d_out, grads);
            enc.add_scaled(grads, -cfg.lr);
        }
        if (valid.instances.empty()) continue;
        double m = valid_mrr();
        if (!std::isfinite(m))
            throw TrainingError("validation MRR diverged at step " + std::to_string(step));
        if (m > best_mrr) {
            best_mrr = m;
            best = enc;
            bad_evals = 0;
        } else if (++bad_evals >= cfg.patience) {
            return best;
        }
    }
    return valid.instances.empty() ? enc : best;
}

Vec RecoveryScorer::map(const Vec& x) const {
    Vec h(w1.rows, 0.0);
    for (size_t i = 0; i < w1.rows; ++i) {
        double s = b1[i];
        const double* wi = w1.row(i);
        for (size_t j = 0; j < w1.cols; ++j) s += wi[j] * x[j];
        h[i] = s > 0.0 ? s : 0.0;
    }
    Vec y = x;
    for (size_t i = 0; i < w2.rows; ++i) {
        double s = b2[i];
        const double* wi = w2.row(i);
        for (size_t j = 0; j < w2.cols; ++j) s += wi[j] * h[j];
        y[i] += s;
    }
    return y;
}

nlohmann::ordered_json RecoveryScorer::to_json() const {
    nlohmann::ordered_json j;
    j["w1"] = nlohmann::ordered_json{{"rows", w1.rows}, {"cols", w1.cols}, {"data", w1.a}};
    j["b1"] = b1;
    j["w2"] = nlohmann::ordered_json{{"rows", w2.rows}, {"cols", w2.cols}, {"data", w2.a}};
    j["b2"] = b2;
    return j;
}

RecoveryScorer RecoveryScorer::from_json(const nlohmann::json& j) {
    RecoveryScorer s;
    auto mat = [](const nlohmann::json& mj) {
        Mat m(mj.at("rows").get<size_t>(), mj.at("cols").get<size_t>());
        m.a = mj.at("data").get<std::vector<double>>();
        if (m.a.size() != m.rows * m.cols)
            throw std::runtime_error("matrix payload size does not match its dims");
        return m;
    };
    s.w1 = mat(j.at("w1"));
    s.b1 = j.at("b1").get<Vec>();
    s.w2 = mat(j.at("w2"));
    s.b2 = j.at("b2").get<Vec>();
    return s;
}

RecoveryScorer make_recovery_scorer(int dim, int hidden, Rng& rng, double init_scale) {
    RecoveryScorer s;
    s.w1 = Mat(static_cast<size_t>(hidden), static_cast<size_t>(dim));
    if (init_scale != 0.0)
        for (double& v : s.w1.a) v = init_scale * rng.next_gaussian();
    s.b1.assign(static_cast<size_t>(hidden), 0.0);
    // Zero output layer: the residual path makes the fresh scorer an identity
    // map, so untrained ranking equals raw cosine ranking.
    s.w2 = Mat(static_cast<size_t>(dim), static_cast<size_t>(hidden));
    s.b2.assign(static_cast<size_t>(dim), 0.0);
    return s;
}

RecoveryScorer train_recovery_scorer(const Graph& g, const DataSplit& split, Embedder& embed,
                                     const RecoveryConfig& cfg,
                                     std::vector<double>* loss_trace) {
    if (split.train.empty()) throw TrainingError("no training products");
    EmbedCache cache(embed);

    std::vector<std::pair<const Vec*, const Vec*>> pairs;  // (product emb, intention emb)
    for (auto& [pid, intentions] : split.train) {
        const Vec& pv = cache.get(g.node(pid).text);
        for (const NodeId& iid : intentions) pairs.emplace_back(&pv, &cache.get(g.node(iid).text));
    }
    if (pairs.empty()) throw TrainingError("no training pairs");

    std::vector<const Vec*> noise_pool;
    for (auto& [id, n] : g.nodes())
        if (n.kind == NodeKind::Item) noise_pool.push_back(&cache.get(n.text));
    if (noise_pool.size() < static_cast<size_t>(cfg.k_noise) + 1)
        throw TrainingError("not enough products for " + std::to_string(cfg.k_noise) +
                            " noise samples");

    Rng root(cfg.seed);
    Rng init_rng = root.fork("init");
    RecoveryScorer s = make_recovery_scorer(embed.dim(), cfg.hidden, init_rng, cfg.init_scale);
    Rng rng = root.fork("train");

    size_t dim = static_cast<size_t>(embed.dim());
    size_t hidden = static_cast<size_t>(cfg.hidden);
    for (int step = 0; step < cfg.steps; ++step) {
        auto& [pos, x] = pairs[rng.next_below(pairs.size())];
        std::vector<const Vec*> noise;
        while (noise.size() < static_cast<size_t>(cfg.k_noise)) {
            const Vec* cand = noise_pool[rng.next_below(noise_pool.size())];
            if (cand == pos || std::find(noise.begin(), noise.end(), cand) != noise.end())
                continue;
            noise.push_back(cand);
        }

        // Forward pass, keeping pre-activation for the rectifier gradient.
        Vec hpre(hidden);
        Vec h(hidden);
        for (size_t i = 0; i < hidden; ++i) {
            double v = s.b1[i];
            const double* wi = s.w1.row(i);
            for (size_t j = 0; j < dim; ++j) v += wi[j] * (*x)[j];
            hpre[i] = v;
            h[i] = v > 0.0 ? v : 0.0;
        }
        Vec y = *x;
        for (size_t i = 0; i < dim; ++i) {
            double v = s.b2[i];
            const double* wi = s.w2.row(i);
            for (size_t j = 0; j < hidden; ++j) v += wi[j] * h[j];
            y[i] += v;
        }

        double loss = softplus(-dot(y, *pos));
        Vec dy(dim, 0.0);
        double dpos = sigmoid(dot(y, *pos)) - 1.0;
        for (size_t i = 0; i < dim; ++i) dy[i] += dpos * (*pos)[i];
        for (const Vec* nv : noise) {
            loss += softplus(dot(y, *nv));
            double dn = sigmoid(dot(y, *nv));
            for (size_t i = 0; i < dim; ++i) dy[i] += dn * (*nv)[i];
        }
        if (!std::isfinite(loss))
            throw TrainingError("recovery loss diverged at step " + std::to_string(step));
        if (loss_trace) loss_trace->push_back(loss);

        Vec dh(hidden, 0.0);
        for (size_t i = 0; i < dim; ++i) {
            const double* wi = s.w2.row(i);
            for (size_t j = 0; j < hidden; ++j) dh[j] += wi[j] * dy[i];
        }
        for (size_t i = 0; i < dim; ++i) {
            double* wi = s.w2.row(i);
            for (size_t j = 0; j < hidden; ++j) wi[j] -= cfg.lr * dy[i] * h[j];
            s.b2[i] -= cfg.lr * dy[i];
        }
        for (size_t i = 0; i < hidden; ++i) {
            if (hpre[i] <= 0.0) continue;
            double* wi = s.w1.row(i);
            for (size_t j = 0; j < dim; ++j) wi[j] -= cfg.lr * dh[i] * (*x)[j];
            s.b1[i] -= cfg.lr * dh[i];
        }
    }
    return s;
}

}  // namespace ig
