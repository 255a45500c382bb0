#pragma once
// Typed heterogeneous graph over items, sessions, intentions and concepts.
//
// Schema:
//   ItemToSession       Item -> Session        (carries position)
//   SessionToIntention  Session -> Intention
//   IntentionToConcept  Intention -> Concept
//   Asynchronous        Intention -> Intention (provenance Precedence|Succession)
//   Synchronous         Intention -- Intention (undirected, stored src <= dst)
//   Causality           Intention -> Intention (provenance Cause|Result)
//
// Nodes coalesce by (kind, normalized text); node ids are derived from that
// key, so identical content gets identical ids in every shard. Iteration is
// in ascending id/key order everywhere, which keeps downstream sampling and
// serialization reproducible.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace ig {

enum class NodeKind : uint8_t { Item = 0, Session, Intention, Concept };
enum class EdgeKind : uint8_t {
    ItemToSession = 0,
    SessionToIntention,
    IntentionToConcept,
    Asynchronous,
    Synchronous,
    Causality
};
enum class Provenance : uint8_t { Precedence = 0, Succession, Simultaneous, Cause, Result };
enum class Direction : uint8_t { Out, In, Both };

constexpr int kNodeKindCount = 4;
constexpr int kEdgeKindCount = 6;

const char* to_string(NodeKind k);
const char* to_string(EdgeKind k);
const char* to_string(Provenance p);
std::optional<NodeKind> parse_node_kind(std::string_view s);
std::optional<EdgeKind> parse_edge_kind(std::string_view s);
std::optional<Provenance> parse_provenance(std::string_view s);

inline bool is_intention_pair_kind(EdgeKind k) {
    return k == EdgeKind::Asynchronous || k == EdgeKind::Synchronous || k == EdgeKind::Causality;
}

struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct RangeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NotFoundError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ParseError : std::runtime_error {
    ParseError(const std::string& msg, size_t line_no);
    size_t line;
};

using NodeId = std::string;

struct Node {
    NodeId id;
    NodeKind kind;
    std::string text;  // first-seen surface form (trimmed)
    std::map<std::string, std::string> attrs;
};

struct Edge {
    NodeId src;
    NodeId dst;
    EdgeKind kind;
    double score = 1.0;                 // in [0,1]; 1.0 for structural edges
    std::optional<Provenance> prov;     // required for intention-intention kinds
    std::optional<int32_t> position;    // required for ItemToSession
};

struct GraphStats {
    std::array<int64_t, kNodeKindCount> nodes_by_kind{};
    std::array<int64_t, kEdgeKindCount> edges_by_kind{};

    int64_t total_nodes() const;
    int64_t total_edges() const;
    bool operator==(const GraphStats&) const = default;
};

// Ordered key: (src, dst, kind, provenance-or--1, position-or--1). Edges that
// agree on all key fields are "the same edge" and max-merge their scores.
using EdgeKey = std::tuple<NodeId, NodeId, uint8_t, int16_t, int32_t>;

class Graph {
public:
    // Returns the id of the (possibly pre-existing) node. New attr keys are
    // merged into an existing node; existing keys win.
    NodeId add_node(NodeKind kind, std::string_view text,
                    std::map<std::string, std::string> attrs = {});

    const Edge& add_edge(const NodeId& src, const NodeId& dst, EdgeKind kind, double score,
                         std::optional<Provenance> prov = std::nullopt,
                         std::optional<int32_t> position = std::nullopt);

    bool has_node(const NodeId& id) const { return nodes_.count(id) != 0; }
    const Node& node(const NodeId& id) const;
    const Node* find_node(NodeKind kind, std::string_view text) const;

    // Neighbors of `id` over edges of `kind`, sorted by (neighbor id, edge
    // key). Synchronous edges match from both endpoints for any direction.
    std::vector<std::pair<const Node*, const Edge*>> neighbors(const NodeId& id, EdgeKind kind,
                                                               Direction dir) const;

    GraphStats stats() const;

    const std::map<NodeId, Node>& nodes() const { return nodes_; }
    const std::map<EdgeKey, Edge>& edges() const { return edges_; }

    // Union of two graphs: nodes coalesce by content key, edge scores
    // max-merge. Commutative and idempotent at the stats level.
    static Graph merge(const Graph& a, const Graph& b);

    // JSON-lines on disk; nodes precede the edges that reference them.
    void save(const std::filesystem::path& path) const;
    static Graph load(const std::filesystem::path& path);

    static NodeId make_id(NodeKind kind, std::string_view text);
    static std::string node_key_text(NodeKind kind, std::string_view text);

private:
    void index_edge(const Edge& e);

    std::map<NodeId, Node> nodes_;
    std::map<EdgeKey, Edge> edges_;
    // Out/in adjacency per node and edge kind; pointers into edges_ stay
    // valid because std::map never relocates values.
    struct Adjacency {
        std::array<std::vector<const Edge*>, kEdgeKindCount> out;
        std::array<std::vector<const Edge*>, kEdgeKindCount> in;
    };
    std::map<NodeId, Adjacency> adj_;
};

}  // namespace ig
