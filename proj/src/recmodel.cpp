#include "intentgraph/recmodel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <set>

namespace ig {

namespace {

nlohmann::ordered_json mat_json(const Mat& m) {
    return {{"rows", m.rows}, {"cols", m.cols}, {"data", m.a}};
}

Mat mat_from_json(const nlohmann::json& j, const char* what) {
    Mat m(j.at("rows").get<size_t>(), j.at("cols").get<size_t>());
    auto data = j.at("data").get<std::vector<double>>();
    if (data.size() != m.a.size())
        throw SchemaError(std::string(what) + ": data length does not match rows*cols");
    m.a = std::move(data);
    return m;
}

std::map<NodeId, size_t> index_of(const std::vector<NodeId>& items) {
    std::map<NodeId, size_t> idx;
    for (size_t i = 0; i < items.size(); ++i) idx[items[i]] = i;
    return idx;
}

}  // namespace

std::string to_string(RecLoss loss) {
    switch (loss) {
        case RecLoss::CE: return "ce";
        case RecLoss::BCE: return "bce";
        case RecLoss::BPR: return "bpr";
    }
    return "ce";
}

RecLoss rec_loss_from_string(const std::string& s) {
    if (s == "ce") return RecLoss::CE;
    if (s == "bce") return RecLoss::BCE;
    if (s == "bpr") return RecLoss::BPR;
    throw RangeError("unknown loss '" + s + "' (expected ce, bce or bpr)");
}

nlohmann::ordered_json RecConfig::to_json() const {
    return {{"dim", dim},
            {"conv_layers", conv_layers},
            {"blocks", blocks},
            {"heads", heads},
            {"max_len", max_len},
            {"dropout", dropout},
            {"lr", lr},
            {"loss", ig::to_string(loss)},
            {"l2", l2},
            {"init_scale", init_scale},
            {"batch", batch},
            {"max_epochs", max_epochs},
            {"patience", patience},
            {"seed", seed}};
}

RecConfig RecConfig::from_json(const nlohmann::json& j) {
    RecConfig cfg;
    cfg.dim = j.at("dim").get<int>();
    cfg.conv_layers = j.at("conv_layers").get<int>();
    cfg.blocks = j.at("blocks").get<int>();
    cfg.heads = j.at("heads").get<int>();
    cfg.max_len = j.at("max_len").get<int>();
    cfg.dropout = j.at("dropout").get<double>();
    cfg.lr = j.at("lr").get<double>();
    cfg.loss = rec_loss_from_string(j.at("loss").get<std::string>());
    cfg.l2 = j.at("l2").get<double>();
    cfg.init_scale = j.at("init_scale").get<double>();
    cfg.batch = j.at("batch").get<int>();
    cfg.max_epochs = j.at("max_epochs").get<int>();
    cfg.patience = j.at("patience").get<int>();
    cfg.seed = j.at("seed").get<uint64_t>();
    return cfg;
}

NormalizedAdjacency normalize_adjacency(const ItemGraph& ig,
                                        const std::map<NodeId, size_t>& item_index) {
    NormalizedAdjacency adj;
    adj.n = item_index.size();
    std::vector<std::vector<std::pair<size_t, double>>> rows(adj.n);
    for (const auto& [pair, weight] : ig.weights()) {
        auto ia = item_index.find(pair.first);
        auto ib = item_index.find(pair.second);
        if (ia == item_index.end()) throw NotFoundError("item '" + pair.first + "' not in catalog");
        if (ib == item_index.end())
            throw NotFoundError("item '" + pair.second + "' not in catalog");
        double w = static_cast<double>(weight);
        rows[ia->second].emplace_back(ib->second, w);
        rows[ib->second].emplace_back(ia->second, w);
    }
    adj.row_ptr.assign(1, 0);
    for (auto& row : rows) {
        std::sort(row.begin(), row.end());
        double sum = 0.0;
        for (auto& [c, w] : row) sum += w;
        for (auto& [c, w] : row) {
            adj.col.push_back(c);
            adj.val.push_back(w / sum);
        }
        adj.row_ptr.push_back(adj.col.size());
    }
    return adj;
}

Mat adj_multiply(const NormalizedAdjacency& adj, const Mat& x) {
    check_shapes(adj.n, x.rows, "adj_multiply");
    Mat out(x.rows, x.cols);
    for (size_t i = 0; i < adj.n; ++i) {
        double* oi = out.row(i);
        for (size_t k = adj.row_ptr[i]; k < adj.row_ptr[i + 1]; ++k) {
            const double* xj = x.row(adj.col[k]);
            double v = adj.val[k];
            for (size_t c = 0; c < x.cols; ++c) oi[c] += v * xj[c];
        }
    }
    return out;
}

Mat adj_multiply_t(const NormalizedAdjacency& adj, const Mat& x) {
    check_shapes(adj.n, x.rows, "adj_multiply_t");
    Mat out(x.rows, x.cols);
    for (size_t i = 0; i < adj.n; ++i) {
        const double* xi = x.row(i);
        for (size_t k = adj.row_ptr[i]; k < adj.row_ptr[i + 1]; ++k) {
            double* oj = out.row(adj.col[k]);
            double v = adj.val[k];
            for (size_t c = 0; c < x.cols; ++c) oj[c] += v * xi[c];
        }
    }
    return out;
}

Mat graph_convolve(const Mat& e0, const NormalizedAdjacency& adj, int layers) {
    if (layers < 0) throw std::invalid_argument("negative convolution depth");
    check_shapes(adj.n, e0.rows, "graph_convolve");
    Mat star = e0;
    Mat cur = e0;
    for (int l = 0; l < layers; ++l) {
        cur = adj_multiply(adj, cur);
        for (size_t i = 0; i < star.a.size(); ++i) star.a[i] += cur.a[i];
    }
    return star;
}

Mat graph_convolve_backward(const Mat& d_star, const NormalizedAdjacency& adj, int layers) {
    if (layers < 0) throw std::invalid_argument("negative convolution depth");
    check_shapes(adj.n, d_star.rows, "graph_convolve_backward");
    Mat out = d_star;
    Mat cur = d_star;
    for (int l = 0; l < layers; ++l) {
        cur = adj_multiply_t(adj, cur);
        for (size_t i = 0; i < out.a.size(); ++i) out.a[i] += cur.a[i];
    }
    return out;
}

std::vector<double> score_items(const Vec& session_vec, const Mat& e_star) {
    check_shapes(session_vec.size(), e_star.cols, "score_items");
    std::vector<double> logits(e_star.rows, 0.0);
    for (size_t i = 0; i < e_star.rows; ++i) {
        const double* row = e_star.row(i);
        double s = 0.0;
        for (size_t c = 0; c < e_star.cols; ++c) s += session_vec[c] * row[c];
        logits[i] = s;
    }
    return logits;
}

std::vector<size_t> rank_items(const std::vector<double>& logits) {
    std::vector<size_t> order(logits.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (logits[a] != logits[b]) return logits[a] > logits[b];
        return a < b;
    });
    return order;
}

int rank_of(const std::vector<double>& logits, size_t target) {
    double zt = logits[target];
    int rank = 1;
    for (size_t i = 0; i < logits.size(); ++i)
        if (logits[i] > zt || (logits[i] == zt && i < target)) ++rank;
    return rank;
}

size_t RecModel::item_index(const NodeId& id) const {
    auto it = std::lower_bound(items.begin(), items.end(), id);
    if (it == items.end() || *it != id) throw NotFoundError("item '" + id + "' not in catalog");
    return static_cast<size_t>(it - items.begin());
}

Vec RecModel::encode_indices(const std::vector<size_t>& idxs) const {
    if (idxs.empty()) throw std::invalid_argument("cannot encode an empty session");
    size_t start = idxs.size() > static_cast<size_t>(cfg.max_len)
                       ? idxs.size() - static_cast<size_t>(cfg.max_len)
                       : 0;
    Mat seq(idxs.size() - start, static_cast<size_t>(cfg.dim));
    for (size_t t = start; t < idxs.size(); ++t) {
        const double* row = e_star.row(idxs[t]);
        std::copy(row, row + seq.cols, seq.row(t - start));
    }
    return encoder.encode(seq);
}

Vec RecModel::encode_session(const std::vector<NodeId>& session) const {
    if (session.empty()) throw std::invalid_argument("cannot encode an empty session");
    std::vector<size_t> idxs;
    idxs.reserve(session.size());
    for (const NodeId& id : session) idxs.push_back(item_index(id));
    return encode_indices(idxs);
}

nlohmann::ordered_json RecModel::to_json() const {
    nlohmann::ordered_json j;
    j["kind"] = "session-recommender";
    j["config"] = cfg.to_json();
    j["items"] = items;
    j["embeddings"] = mat_json(e0);
    j["adjacency"] = {
        {"n", adj.n}, {"row_ptr", adj.row_ptr}, {"col", adj.col}, {"val", adj.val}};
    j["encoder"] = encoder.to_json();
    return j;
}

RecModel RecModel::from_json(const nlohmann::json& j) {
    if (j.at("kind").get<std::string>() != "session-recommender")
        throw SchemaError("not a session-recommender model file");
    RecConfig cfg = RecConfig::from_json(j.at("config"));
    auto items = j.at("items").get<std::vector<NodeId>>();
    Mat e0 = mat_from_json(j.at("embeddings"), "embeddings");
    const auto& ja = j.at("adjacency");
    NormalizedAdjacency adj;
    adj.n = ja.at("n").get<size_t>();
    adj.row_ptr = ja.at("row_ptr").get<std::vector<size_t>>();
    adj.col = ja.at("col").get<std::vector<size_t>>();
    adj.val = ja.at("val").get<std::vector<double>>();
    if (adj.row_ptr.size() != adj.n + 1 || adj.col.size() != adj.val.size() ||
        (adj.n > 0 && adj.row_ptr.back() != adj.col.size()))
        throw SchemaError("adjacency arrays are inconsistent");
    AttnEncoder encoder = AttnEncoder::from_json(j.at("encoder"));
    if (e0.rows != items.size() || adj.n != items.size())
        throw SchemaError("embeddings, items and adjacency disagree on the catalog size");
    if (e0.cols != static_cast<size_t>(cfg.dim) || encoder.config().dim != cfg.dim)
        throw SchemaError("embedding dimension disagrees with the config");
    RecModel model{cfg, std::move(items), std::move(e0), std::move(adj), std::move(encoder),
                   Mat()};
    model.refresh();
    return model;
}

RecModel make_rec_model(const std::vector<std::vector<NodeId>>& sessions, const ItemGraph& ig,
                        const RecConfig& cfg) {
    if (cfg.lr <= 0.0) throw RangeError("learning rate must be positive");
    if (cfg.l2 < 0.0) throw RangeError("l2 coefficient must be non-negative");
    if (cfg.batch < 1) throw RangeError("batch size must be at least 1");
    if (cfg.max_epochs < 1) throw RangeError("max_epochs must be at least 1");
    if (cfg.patience < 1) throw RangeError("patience must be at least 1");
    if (cfg.conv_layers < 0) throw RangeError("conv_layers must be non-negative");

    std::set<NodeId> catalog;
    for (const auto& s : sessions) catalog.insert(s.begin(), s.end());
    for (const auto& [pair, w] : ig.weights()) {
        catalog.insert(pair.first);
        catalog.insert(pair.second);
    }
    std::vector<NodeId> items(catalog.begin(), catalog.end());

    Rng root(cfg.seed);
    Rng emb_rng = root.fork("embeddings");
    Mat e0(items.size(), static_cast<size_t>(cfg.dim));
    for (double& v : e0.a) v = emb_rng.next_gaussian() * cfg.init_scale;

    NormalizedAdjacency adj = normalize_adjacency(ig, index_of(items));
    Rng enc_rng = root.fork("encoder");
    AttnEncoder encoder(AttnConfig{cfg.dim, cfg.heads, cfg.blocks, cfg.max_len, cfg.dropout},
                        enc_rng, cfg.init_scale);
    RecModel model{cfg, std::move(items), std::move(e0), std::move(adj), std::move(encoder),
                   Mat()};
    model.refresh();
    return model;
}

std::vector<RecExample> make_examples(const RecModel& model,
                                      const std::vector<std::vector<NodeId>>& sessions) {
    std::vector<RecExample> out;
    for (const auto& s : sessions) {
        if (s.size() < 2) continue;
        RecExample ex;
        bool ok = true;
        for (const NodeId& id : s) {
            auto it = std::lower_bound(model.items.begin(), model.items.end(), id);
            if (it == model.items.end() || *it != id) {
                ok = false;
                break;
            }
            ex.prefix.push_back(static_cast<size_t>(it - model.items.begin()));
        }
        if (!ok) continue;
        ex.target = ex.prefix.back();
        ex.prefix.pop_back();
        size_t cap = static_cast<size_t>(model.cfg.max_len);
        if (ex.prefix.size() > cap)
            ex.prefix.erase(ex.prefix.begin(),
                            ex.prefix.end() - static_cast<std::ptrdiff_t>(cap));
        out.push_back(std::move(ex));
    }
    return out;
}

double rec_batch_loss(RecModel& model, const std::vector<RecExample>& batch, Rng* negative_rng,
                      Rng* dropout_rng, RecGradients* grads) {
    if (batch.empty()) throw RangeError("empty training batch");
    model.refresh();
    const size_t n = model.items.size();
    const size_t d = static_cast<size_t>(model.cfg.dim);
    Mat d_star;
    if (grads) {
        d_star = Mat(n, d);
        grads->e0 = Mat(n, d);
        grads->encoder.zero();
    }

    double total = 0.0;
    std::vector<double> logits;
    for (const RecExample& ex : batch) {
        Mat seq(ex.prefix.size(), d);
        for (size_t t = 0; t < ex.prefix.size(); ++t) {
            const double* row = model.e_star.row(ex.prefix[t]);
            std::copy(row, row + d, seq.row(t));
        }
        EncoderTape tape;
        Mat out = model.encoder.forward(seq, grads ? &tape : nullptr, dropout_rng);
        const double* last = out.row(seq.rows - 1);
        Vec s(last, last + d);

        // (item index, dLoss/dlogit) pairs; CE touches the whole catalog.
        std::vector<std::pair<size_t, double>> dz;
        double loss = 0.0;
        if (model.cfg.loss == RecLoss::CE) {
            logits = score_items(s, model.e_star);
            double zmax = *std::max_element(logits.begin(), logits.end());
            double sum = 0.0;
            for (double z : logits) sum += std::exp(z - zmax);
            loss = std::log(sum) - (logits[ex.target] - zmax);
            if (grads) {
                dz.reserve(n);
                for (size_t i = 0; i < n; ++i) {
                    double p = std::exp(logits[i] - zmax) / sum;
                    dz.emplace_back(i, p - (i == ex.target ? 1.0 : 0.0));
                }
            }
        } else {
            if (!negative_rng) throw RangeError("bce/bpr losses need a negative-sampling rng");
            if (n < 2) throw TrainingError("negative sampling needs at least two items");
            size_t neg = ex.target;
            while (neg == ex.target) neg = static_cast<size_t>(negative_rng->next_below(n));
            const double* rt = model.e_star.row(ex.target);
            const double* rn = model.e_star.row(neg);
            double zt = 0.0, zn = 0.0;
            for (size_t c = 0; c < d; ++c) {
                zt += s[c] * rt[c];
                zn += s[c] * rn[c];
            }
            if (model.cfg.loss == RecLoss::BCE) {
                loss = softplus(-zt) + softplus(zn);
                dz = {{ex.target, -sigmoid(-zt)}, {neg, sigmoid(zn)}};
            } else {
                loss = softplus(zn - zt);
                double a = sigmoid(zn - zt);
                dz = {{ex.target, -a}, {neg, a}};
            }
        }
        total += loss;

        if (grads) {
            Vec ds(d, 0.0);
            for (auto& [i, g] : dz) {
                const double* row = model.e_star.row(i);
                double* dsr = d_star.row(i);
                for (size_t c = 0; c < d; ++c) {
                    ds[c] += g * row[c];
                    dsr[c] += g * s[c];
                }
            }
            Mat d_out(seq.rows, d);
            std::copy(ds.begin(), ds.end(), d_out.row(seq.rows - 1));
            Mat d_input(seq.rows, d);
            model.encoder.backward(tape, d_out, grads->encoder, &d_input);
            for (size_t t = 0; t < ex.prefix.size(); ++t) {
                const double* di = d_input.row(t);
                double* dsr = d_star.row(ex.prefix[t]);
                for (size_t c = 0; c < d; ++c) dsr[c] += di[c];
            }
        }
    }

    double inv = 1.0 / static_cast<double>(batch.size());
    if (grads) {
        Mat de0 = graph_convolve_backward(d_star, model.adj, model.cfg.conv_layers);
        for (size_t i = 0; i < de0.a.size(); ++i) grads->e0.a[i] = de0.a[i] * inv;
        for (auto& [name, vals] : grads->encoder.param_groups())
            for (double& v : *vals) v *= inv;
    }
    return total * inv;
}

std::vector<std::vector<NodeId>> session_item_sequences(const Graph& g) {
    std::vector<std::vector<NodeId>> out;
    for (const auto& [sid, node] : g.nodes()) {
        if (node.kind != NodeKind::Session) continue;
        std::vector<std::pair<int32_t, NodeId>> slots;
        for (const auto& [item, edge] : g.neighbors(sid, EdgeKind::ItemToSession, Direction::In))
            slots.emplace_back(edge->position.value_or(0), item->id);
        std::sort(slots.begin(), slots.end());
        std::vector<NodeId> seq;
        seq.reserve(slots.size());
        for (auto& [pos, id] : slots) seq.push_back(std::move(id));
        out.push_back(std::move(seq));
    }
    return out;
}

SessionDataset split_sessions(std::vector<std::vector<NodeId>> sessions, const SplitRatios& ratios,
                              uint64_t seed) {
    if (std::abs(ratios.train + ratios.valid + ratios.test - 1.0) > 1e-9)
        throw RangeError("split ratios must sum to 1");
    if (sessions.size() < 10) throw RangeError("split requires at least 10 sessions");
    Rng rng = Rng(seed).fork("split");
    rng.shuffle(sessions);
    size_t n = sessions.size();
    size_t n_train = static_cast<size_t>(std::floor(ratios.train * static_cast<double>(n) + 1e-9));
    size_t n_valid = static_cast<size_t>(std::floor(ratios.valid * static_cast<double>(n) + 1e-9));
    SessionDataset out;
    out.train.assign(sessions.begin(), sessions.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.valid.assign(sessions.begin() + static_cast<std::ptrdiff_t>(n_train),
                     sessions.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid));
    out.test.assign(sessions.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid),
                    sessions.end());
    return out;
}

namespace {

double valid_recall_at_20(RecModel& model, const std::vector<RecExample>& examples) {
    model.refresh();
    double hits = 0.0;
    for (const RecExample& ex : examples) {
        Vec s = model.encode_indices(ex.prefix);
        std::vector<double> logits = score_items(s, model.e_star);
        if (rank_of(logits, ex.target) <= 20) hits += 1.0;
    }
    return hits / static_cast<double>(examples.size());
}

}  // namespace

RecModel train_recommender(const SessionDataset& data, const ItemGraph& ig, const RecConfig& cfg,
                           std::vector<double>* loss_trace) {
    std::vector<std::vector<NodeId>> all = data.train;
    all.insert(all.end(), data.valid.begin(), data.valid.end());
    all.insert(all.end(), data.test.begin(), data.test.end());
    RecModel model = make_rec_model(all, ig, cfg);

    std::vector<RecExample> train_ex = make_examples(model, data.train);
    if (train_ex.empty()) throw TrainingError("no trainable sessions (need two or more items)");
    std::vector<RecExample> valid_ex = make_examples(model, data.valid);

    Rng root(cfg.seed);
    Rng neg_rng = root.fork("negatives");
    Rng drop_rng = root.fork("dropout");

    Mat best_e0 = model.e0;
    AttnEncoder best_encoder = model.encoder;
    double best_metric = valid_ex.empty() ? 0.0 : valid_recall_at_20(model, valid_ex);
    int bad_epochs = 0;
    size_t step = 0;

    std::vector<size_t> order(train_ex.size());
    std::iota(order.begin(), order.end(), size_t{0});
    RecGradients grads{Mat(), model.encoder.zeros_like()};
    auto model_groups = model.encoder.param_groups();
    auto grad_groups = grads.encoder.param_groups();

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        Rng order_rng = root.fork("order:" + std::to_string(epoch));
        order_rng.shuffle(order);
        for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.batch)) {
            size_t stop = std::min(order.size(), start + static_cast<size_t>(cfg.batch));
            std::vector<RecExample> batch;
            batch.reserve(stop - start);
            for (size_t k = start; k < stop; ++k) batch.push_back(train_ex[order[k]]);

            double loss = rec_batch_loss(model, batch, &neg_rng,
                                         cfg.dropout > 0.0 ? &drop_rng : nullptr, &grads);
            if (loss_trace) loss_trace->push_back(loss);
            if (!std::isfinite(loss))
                throw TrainingError("recommender loss diverged at step " + std::to_string(step));

            for (size_t i = 0; i < model.e0.a.size(); ++i)
                model.e0.a[i] -= cfg.lr * (grads.e0.a[i] + cfg.l2 * model.e0.a[i]);
            for (size_t gi = 0; gi < model_groups.size(); ++gi) {
                auto& theta = *model_groups[gi].second;
                auto& gval = *grad_groups[gi].second;
                for (size_t i = 0; i < theta.size(); ++i)
                    theta[i] -= cfg.lr * (gval[i] + cfg.l2 * theta[i]);
            }
            ++step;
        }

        if (valid_ex.empty()) continue;
        double metric = valid_recall_at_20(model, valid_ex);
        if (metric > best_metric) {
            best_metric = metric;
            best_e0 = model.e0;
            best_encoder = model.encoder;
            bad_epochs = 0;
        } else if (++bad_epochs >= cfg.patience) {
            break;
        }
    }

    if (!valid_ex.empty()) {
        model.e0 = std::move(best_e0);
        model.encoder = std::move(best_encoder);
    }
    model.refresh();
    return model;
}

RankingReport evaluate_recommender(const RecModel& model,
                                   const std::vector<std::vector<NodeId>>& test_sessions) {
    std::vector<std::vector<int>> ranks;
    double total_seconds = 0.0;
    size_t usable = 0;
    for (const auto& s : test_sessions) {
        std::vector<size_t> prefix;
        size_t target = 0;
        bool ok = s.size() >= 2;
        if (ok) {
            for (size_t t = 0; t + 1 < s.size(); ++t) {
                auto it = std::lower_bound(model.items.begin(), model.items.end(), s[t]);
                if (it != model.items.end() && *it == s[t])
                    prefix.push_back(static_cast<size_t>(it - model.items.begin()));
            }
            auto it = std::lower_bound(model.items.begin(), model.items.end(), s.back());
            ok = !prefix.empty() && it != model.items.end() && *it == s.back();
            if (ok) target = static_cast<size_t>(it - model.items.begin());
        }
        if (!ok) {
            ranks.push_back({});
            continue;
        }
        auto t0 = std::chrono::steady_clock::now();
        Vec vec = model.encode_indices(prefix);
        std::vector<double> logits = score_items(vec, model.e_star);
        int rank = rank_of(logits, target);
        total_seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        ranks.push_back({rank});
        ++usable;
    }
    return summarize_rankings(ranks, usable ? total_seconds / static_cast<double>(usable) : 0.0);
}

std::vector<AblationResult> run_ablation(const Graph& g, const SessionDataset& data,
                                         const RecConfig& cfg, int min_metapaths) {
    std::vector<SessionPairSelection> pairs = select_session_pairs(g, min_metapaths);
    std::vector<std::pair<std::string, ItemGraph>> variants;
    variants.emplace_back("full", build_item_graph(g, pairs, ItemGraphVariant::Full));
    variants.emplace_back("relation_only",
                          build_item_graph(g, pairs, ItemGraphVariant::RelationOnly));
    variants.emplace_back("concept_only",
                          build_item_graph(g, pairs, ItemGraphVariant::ConceptOnly));
    variants.emplace_back("empty", ItemGraph());

    std::vector<AblationResult> out;
    for (auto& [name, item_graph] : variants) {
        RecModel model = train_recommender(data, item_graph, cfg);
        AblationResult res;
        res.variant = name;
        res.item_graph_edges = item_graph.edge_count();
        res.report = evaluate_recommender(model, data.test);
        out.push_back(std::move(res));
    }
    return out;
}

}  // namespace ig
