#pragma once
// Intention-intention relation building: enumerate candidate pairs, render
// the five assertion templates, score them, and keep edges whose plausibility
// is strictly above the threshold.
//
// Direction conventions for accepted assertions (x, y):
//   Precedence   -> Asynchronous x -> y
//   Succession   -> Asynchronous y -> x
//   Cause        -> Causality x -> y  (y is the stated reason; "explained-by")
//   Result       -> Causality x -> y  ("leads-to")
//   Simultaneous -> Synchronous, canonical endpoint order

#include <array>
#include <cstdint>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "intentgraph/backends.hpp"
#include "intentgraph/graph.hpp"

namespace ig {

using RelationType = Provenance;

struct PairPolicy {
    bool include_within_session = true;
    bool include_shared_concept = true;
    int max_pairs_per_intention = 50;  // participation cap per intention
    uint64_t seed = 0;
};

// Lowercases the first letter and strips trailing periods of both intention
// texts; the template supplies the final period.
std::string render_assertion(const std::string& i1_text, const std::string& i2_text,
                             RelationType relation);

// Unordered intention pairs co-occurring in a session or sharing a concept,
// subject to the participation cap: intentions are visited in ascending id
// order and over-budget partner lists are thinned by a per-intention seeded
// reservoir. Result is sorted, self-pair free and deduplicated.
std::vector<std::pair<NodeId, NodeId>> candidate_pairs(const Graph& g, const PairPolicy& policy);

struct AssertionOutcome {
    NodeId i1;
    NodeId i2;
    RelationType relation;
    std::string text;
    double score = 0.0;
    bool accepted = false;
};

struct ClassifyOutput {
    std::vector<Edge> edges;                 // accepted edges, insertion order
    std::vector<AssertionOutcome> outcomes;  // all nine scored assertions
};

// Renders and scores nine assertions per unordered pair (four asymmetric
// relations in both orders plus one symmetric) and adds edges for scores
// strictly above the threshold. Scorer errors propagate; callers decide
// whether to skip and log.
ClassifyOutput classify_pair(Graph& g, const NodeId& i1, const NodeId& i2,
                             PlausibilityScorer& scorer, double threshold = 0.9);

struct RelationReport {
    std::array<int64_t, 5> accepted_by_relation{};  // indexed by RelationType
    int64_t assertions_scored = 0;
    int64_t pairs_total = 0;
    int64_t pairs_skipped = 0;
    std::vector<std::string> skip_log;

    int64_t total_accepted() const {
        int64_t n = 0;
        for (auto v : accepted_by_relation) n += v;
        return n;
    }
};

// candidate_pairs + classify_pair over the whole graph. Scorer failures skip
// the pair and land in the skip log. When `outcomes` is given, one JSON line
// {"i1","i2","relation","score","accepted"} is written per assertion.
RelationReport build_relations(Graph& g, const PairPolicy& policy, PlausibilityScorer& scorer,
                               double threshold = 0.9, std::ostream* outcomes = nullptr);

}  // namespace ig
