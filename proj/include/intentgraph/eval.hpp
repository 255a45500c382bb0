#pragma once
// Intrinsic ranking evaluations over the intention graph: session->intention
// prediction, intention->concept prediction, product recovery, plus the
// shared ranking metrics and corpus n-gram diversity.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "intentgraph/backends.hpp"
#include "intentgraph/encoder.hpp"
#include "intentgraph/graph.hpp"
#include "intentgraph/mat.hpp"

namespace ig {

struct TrainingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SplitRatios {
    double train = 0.8;
    double valid = 0.1;
    double test = 0.1;
};

// Partitions are keyed by source node; a source's edges never straddle
// partitions.
struct DataSplit {
    std::map<NodeId, std::vector<NodeId>> train, valid, test;

    bool operator==(const DataSplit&) const = default;
};

DataSplit split_groups(const std::map<NodeId, std::vector<NodeId>>& groups,
                       const SplitRatios& ratios, uint64_t seed);
DataSplit split_edges(const Graph& g, EdgeKind kind, const SplitRatios& ratios, uint64_t seed);

struct RankingInstance {
    NodeId query_id;
    std::vector<std::string> query_texts;  // ordered; averaged or encoded into the query vector
    std::vector<NodeId> candidate_ids;
    std::vector<std::string> candidate_texts;
    std::set<NodeId> positives;
    uint64_t seed = 0;
    bool pool_exhausted = false;
};

struct TaskSet {
    std::vector<RankingInstance> instances;
    std::vector<std::string> log;
};

// Per test session: its 2-4 linked intentions as positives plus n_negatives
// seeded draws from intentions not linked to it. Out-of-range or
// under-supplied sessions are skipped and logged.
TaskSet make_intention_task(const Graph& g, const DataSplit& split, int n_negatives = 30,
                            uint64_t seed = 0);

// Per test intention: pool of n_candidates concepts containing all positives;
// degenerate graphs fall back to every concept, flagged.
TaskSet make_concept_task(const Graph& g, const DataSplit& split, int n_candidates = 500,
                          uint64_t seed = 0);

// Items inherit the intentions of every session containing them.
std::map<NodeId, std::vector<NodeId>> derive_product_intentions(const Graph& g);

// Per test (product, intention) pair: that intention against n_negatives
// seeded intention draws, 1 + n_negatives candidates.
TaskSet make_product_recovery_task(const Graph& g, const DataSplit& split, int n_negatives = 10,
                                   uint64_t seed = 0);

// Candidate order sorted by descending score, ties by ascending candidate id.
std::vector<size_t> rank_order(const RankingInstance& inst, const std::vector<double>& scores);

// Query = encoder output over the query-text embedding sequence when a
// session encoder is given, else the mean of the query-text embeddings;
// candidates scored by cosine.
std::vector<size_t> rank_by_embedding(const RankingInstance& inst, Embedder& embed,
                                      const AttnEncoder* session_encoder = nullptr);

// Ascending 1-based positions of the positives within an ordering.
std::vector<int> positive_ranks(const RankingInstance& inst, const std::vector<size_t>& order);

// Aggregate metrics over per-query positive-rank lists; queries with no
// positives are skipped.
double mrr(const std::vector<std::vector<int>>& ranks);
double hit_at_k(const std::vector<std::vector<int>>& ranks, int k);
double recall_at_k(const std::vector<std::vector<int>>& ranks, int k);
double ndcg_at_k(const std::vector<std::vector<int>>& ranks, int k);

struct RankingReport {
    double mrr = 0.0;
    std::map<int, double> hit;     // k in {1, 3, 10}
    std::map<int, double> recall;  // k in {5, 10, 20, 50, 100}
    std::map<int, double> ndcg;    // k in {5, 10, 20, 50, 100}
    double mean_query_seconds = 0.0;
    size_t queries = 0;
    size_t skipped = 0;
};

RankingReport summarize_rankings(const std::vector<std::vector<int>>& ranks,
                                 double mean_query_seconds = 0.0);

// Unique/total n-grams over the corpus joined into one lowercase
// whitespace-token stream; nullopt when the stream is shorter than n.
std::optional<double> ngram_diversity(const std::vector<std::string>& corpus, int n);

struct TripletConfig {
    int heads = 1;
    int blocks = 1;
    int max_len = 50;
    double dropout = 0.0;
    double lr = 0.05;
    double margin = 0.2;
    double init_scale = 0.02;
    int steps_per_eval = 200;
    int max_evals = 20;
    int patience = 3;
    int valid_negatives = 30;
    uint64_t seed = 0;
};

// Margin triplet training of the shared attention encoder over fixed
// embedder vectors: loss = max(0, margin + d(q,pos) - d(q,neg)), d = 1 -
// cosine, one seeded positive and negative per step, early stopping on
// validation MRR.
AttnEncoder train_session_intention_encoder(const Graph& g, const DataSplit& split,
                                            Embedder& embed, const TripletConfig& cfg);

struct RecoveryConfig {
    int hidden = 128;
    double lr = 0.05;
    double init_scale = 0.02;
    int k_noise = 10;
    int steps = 500;
    uint64_t seed = 0;
};

// Residual two-layer perceptron mapping intention embeddings into
// product-embedding space. The output layer starts at zero, so an untrained
// scorer is exactly the identity map.
struct RecoveryScorer {
    Mat w1;  // hidden x dim
    Vec b1;
    Mat w2;  // dim x hidden
    Vec b2;

    Vec map(const Vec& x) const;

    nlohmann::ordered_json to_json() const;
    static RecoveryScorer from_json(const nlohmann::json& j);

    bool operator==(const RecoveryScorer&) const = default;
};

RecoveryScorer make_recovery_scorer(int dim, int hidden, Rng& rng, double init_scale = 0.02);

// Noise-contrastive training against k seeded noise products per step.
// loss_trace, when non-null, receives the per-step objective values.
RecoveryScorer train_recovery_scorer(const Graph& g, const DataSplit& split, Embedder& embed,
                                     const RecoveryConfig& cfg,
                                     std::vector<double>* loss_trace = nullptr);

}  // namespace ig
