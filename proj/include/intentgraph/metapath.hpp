#pragma once
// Session-pair selection over the intention graph and distillation of a
// weighted item co-occurrence graph.
//
// A pair qualifies when it has at least `min_metapaths` distinct
// session->intention->intention->session walks (counted as (i1, edge, i2)
// triples) or when one session's concept set is a non-empty subset of the
// other's. Items of qualified pairs co-occur: every unordered item pair in
// the union of the two sessions' items gains weight 1.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "intentgraph/graph.hpp"

namespace ig {

enum class PairQualifier : uint8_t { RelationCount = 0, ConceptReachability, Both };
enum class ItemGraphVariant : uint8_t { Full = 0, RelationOnly, ConceptOnly };

const char* to_string(PairQualifier q);
const char* to_string(ItemGraphVariant v);

struct SessionPairSelection {
    NodeId s1;  // s1 < s2
    NodeId s2;
    int relation_path_count = 0;
    bool concept_reachable = false;
    PairQualifier qualified_by = PairQualifier::RelationCount;

    bool operator==(const SessionPairSelection&) const = default;
};

class ItemGraph {
public:
    // Canonicalizes to a < b; rejects self-loops and non-positive weights.
    void add(const std::string& a, const std::string& b, int64_t weight);
    int64_t weight(const std::string& a, const std::string& b) const;
    size_t edge_count() const { return weights_.size(); }
    const std::map<std::pair<std::string, std::string>, int64_t>& weights() const {
        return weights_;
    }

    // Tab-separated "item_a\titem_b\tweight", item_a < item_b, sorted.
    void save(const std::filesystem::path& path) const;
    static ItemGraph load(const std::filesystem::path& path);

private:
    std::map<std::pair<std::string, std::string>, int64_t> weights_;
};

// Distinct (i1, edge, i2) triples with i1 an intention of s1, i2 of s2 and
// an intention-intention edge between them in either direction (Synchronous
// counted once per assignment). Symmetric in (s1, s2).
int count_relation_metapaths(const Graph& g, const NodeId& s1, const NodeId& s2);

// True iff either session's concept set is non-empty and a subset of the
// other's. C(s) = concepts linked to any intention of s.
bool concept_reachable(const Graph& g, const NodeId& s1, const NodeId& s2);

// Qualified pairs in ascending (s1, s2) order. Candidates are discovered by
// traversal (sessions sharing a concept or joined by at least one relation
// edge), never by an all-pairs scan.
std::vector<SessionPairSelection> select_session_pairs(const Graph& g, int min_metapaths = 6);

// Sums unit co-occurrence weights over the retained pairs. RelationOnly
// keeps pairs qualified by RelationCount or Both; ConceptOnly keeps
// ConceptReachability or Both; Full keeps everything.
ItemGraph build_item_graph(const Graph& g, const std::vector<SessionPairSelection>& pairs,
                           ItemGraphVariant variant);

}  // namespace ig
