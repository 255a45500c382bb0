#pragma once
// Session recommender: lightweight graph convolution over the distilled item
// graph fused with the causal self-attention encoder. Trains next-item
// prediction (last item is the target, the prefix is the input), evaluates
// against the full catalog, and runs the item-graph ablations.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "intentgraph/encoder.hpp"
#include "intentgraph/eval.hpp"
#include "intentgraph/graph.hpp"
#include "intentgraph/mat.hpp"
#include "intentgraph/metapath.hpp"

namespace ig {

enum class RecLoss { CE, BCE, BPR };

std::string to_string(RecLoss loss);
RecLoss rec_loss_from_string(const std::string& s);

struct RecConfig {
    int dim = 64;
    int conv_layers = 2;
    int blocks = 1;
    int heads = 1;
    int max_len = 50;
    double dropout = 0.0;     // {0, 0.1, 0.2, 0.3, 0.4}
    double lr = 1e-2;         // {1e-2, 1e-3, 1e-4}
    RecLoss loss = RecLoss::CE;
    double l2 = 0.0;          // {0, 1e-2, 1e-3, 1e-4}
    double init_scale = 0.02;
    int batch = 128;
    int max_epochs = 20;
    int patience = 3;
    uint64_t seed = 0;

    bool operator==(const RecConfig&) const = default;

    nlohmann::ordered_json to_json() const;
    static RecConfig from_json(const nlohmann::json& j);
};

// Row-normalized adjacency in compressed sparse rows. Rows sum to 1 or are
// all-zero for isolated items; the sparsity pattern is symmetric.
struct NormalizedAdjacency {
    size_t n = 0;
    std::vector<size_t> row_ptr{0};
    std::vector<size_t> col;
    std::vector<double> val;

    bool operator==(const NormalizedAdjacency&) const = default;
};

// item_index must cover every item in the graph; catalog items without
// edges get zero rows.
NormalizedAdjacency normalize_adjacency(const ItemGraph& ig,
                                        const std::map<NodeId, size_t>& item_index);

Mat adj_multiply(const NormalizedAdjacency& adj, const Mat& x);    // Â·x
Mat adj_multiply_t(const NormalizedAdjacency& adj, const Mat& x);  // Âᵀ·x

// E* = sum of E^l for l = 0..layers with E^(l+1) = Â·E^l.
Mat graph_convolve(const Mat& e0, const NormalizedAdjacency& adj, int layers);
// dE⁰ = sum of (Âᵀ)^l·dE* for l = 0..layers.
Mat graph_convolve_backward(const Mat& d_star, const NormalizedAdjacency& adj, int layers);

// logit[i] = dot(session_vec, e_star row i).
std::vector<double> score_items(const Vec& session_vec, const Mat& e_star);
// Descending logits, ties by ascending item index.
std::vector<size_t> rank_items(const std::vector<double>& logits);
// 1-based rank of `target` under the same order.
int rank_of(const std::vector<double>& logits, size_t target);

struct RecModel {
    RecConfig cfg;
    std::vector<NodeId> items;  // ascending; row i of e0/e_star is items[i]
    Mat e0;
    NormalizedAdjacency adj;
    AttnEncoder encoder;
    Mat e_star;  // cached convolution, recomputable from (e0, adj, conv_layers)

    void refresh() { e_star = graph_convolve(e0, adj, cfg.conv_layers); }
    size_t item_index(const NodeId& id) const;  // NotFoundError on unknown items

    // Looks up e_star rows for the most recent max_len items and returns the
    // encoder output at the last position.
    Vec encode_session(const std::vector<NodeId>& session) const;
    Vec encode_indices(const std::vector<size_t>& idxs) const;

    nlohmann::ordered_json to_json() const;
    static RecModel from_json(const nlohmann::json& j);

    bool operator==(const RecModel&) const = default;
};

// Fresh model over the catalog (union of session items and graph items),
// seeded from cfg.seed.
RecModel make_rec_model(const std::vector<std::vector<NodeId>>& sessions, const ItemGraph& ig,
                        const RecConfig& cfg);

struct RecExample {
    std::vector<size_t> prefix;  // truncated to the most recent max_len items
    size_t target = 0;
};

// Next-item examples; sessions with fewer than two known items are dropped.
std::vector<RecExample> make_examples(const RecModel& model,
                                      const std::vector<std::vector<NodeId>>& sessions);

struct RecGradients {
    Mat e0;
    AttnEncoder encoder;
};

// Mean loss over the batch; mean gradients for every parameter accumulated
// into `grads` when given (gradients flow through the convolution into e0).
// negative_rng drives BCE/BPR negative sampling, dropout_rng enables dropout.
double rec_batch_loss(RecModel& model, const std::vector<RecExample>& batch, Rng* negative_rng,
                      Rng* dropout_rng, RecGradients* grads);

struct SessionDataset {
    std::vector<std::vector<NodeId>> train, valid, test;
};

// Item sequences of every session, ordered by in-session position; sessions
// ordered by id.
std::vector<std::vector<NodeId>> session_item_sequences(const Graph& g);
// Seeded shuffle then the same floor-based cut as the evaluation splits;
// fewer than 10 sessions is an error.
SessionDataset split_sessions(std::vector<std::vector<NodeId>> sessions,
                              const SplitRatios& ratios, uint64_t seed);

// Minibatch SGD with early stopping on validation Recall@20; returns the best
// snapshot. Non-finite loss raises TrainingError with the step index.
// loss_trace receives the per-batch mean loss.
RecModel train_recommender(const SessionDataset& data, const ItemGraph& ig, const RecConfig& cfg,
                           std::vector<double>* loss_trace = nullptr);

// Ranks each test session's true last item against the full catalog;
// unusable sessions (under two items, unknown target) count as skipped.
RankingReport evaluate_recommender(const RecModel& model,
                                   const std::vector<std::vector<NodeId>>& test_sessions);

struct AblationResult {
    std::string variant;
    size_t item_graph_edges = 0;
    RankingReport report;
};

// Trains and evaluates four item-graph configurations under identical seeds:
// full, relation-qualified pairs only, concept-qualified pairs only, and an
// empty graph (pure self-attention baseline).
std::vector<AblationResult> run_ablation(const Graph& g, const SessionDataset& data,
                                         const RecConfig& cfg, int min_metapaths = 6);

}  // namespace ig
