#include "intentgraph/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "intentgraph/util.hpp"
#include "json.hpp"

namespace ig {

namespace {

const char* kNodeKindNames[kNodeKindCount] = {"Item", "Session", "Intention", "Concept"};
const char* kEdgeKindNames[kEdgeKindCount] = {"ItemToSession",      "SessionToIntention",
                                              "IntentionToConcept", "Asynchronous",
                                              "Synchronous",        "Causality"};
const char* kProvenanceNames[5] = {"Precedence", "Succession", "Simultaneous", "Cause", "Result"};

const char* kIdPrefix[kNodeKindCount] = {"item:", "sess:", "int:", "con:"};

}  // namespace

const char* to_string(NodeKind k) { return kNodeKindNames[static_cast<int>(k)]; }
const char* to_string(EdgeKind k) { return kEdgeKindNames[static_cast<int>(k)]; }
const char* to_string(Provenance p) { return kProvenanceNames[static_cast<int>(p)]; }

std::optional<NodeKind> parse_node_kind(std::string_view s) {
    for (int i = 0; i < kNodeKindCount; ++i)
        if (s == kNodeKindNames[i]) return static_cast<NodeKind>(i);
    return std::nullopt;
}

std::optional<EdgeKind> parse_edge_kind(std::string_view s) {
    for (int i = 0; i < kEdgeKindCount; ++i)
        if (s == kEdgeKindNames[i]) return static_cast<EdgeKind>(i);
    return std::nullopt;
}

std::optional<Provenance> parse_provenance(std::string_view s) {
    for (int i = 0; i < 5; ++i)
        if (s == kProvenanceNames[i]) return static_cast<Provenance>(i);
    return std::nullopt;
}

ParseError::ParseError(const std::string& msg, size_t line_no)
    : std::runtime_error("line " + std::to_string(line_no) + ": " + msg), line(line_no) {}

int64_t GraphStats::total_nodes() const {
    int64_t n = 0;
    for (auto v : nodes_by_kind) n += v;
    return n;
}

int64_t GraphStats::total_edges() const {
    int64_t n = 0;
    for (auto v : edges_by_kind) n += v;
    return n;
}

std::string Graph::node_key_text(NodeKind kind, std::string_view text) {
    // Session ids are opaque identifiers, so only whitespace is normalized;
    // content kinds coalesce case- and punctuation-insensitively.
    if (kind == NodeKind::Session) return collapse_ws(text);
    return normalize_phrase(text);
}

NodeId Graph::make_id(NodeKind kind, std::string_view text) {
    return kIdPrefix[static_cast<int>(kind)] + node_key_text(kind, text);
}

NodeId Graph::add_node(NodeKind kind, std::string_view text,
                       std::map<std::string, std::string> attrs) {
    std::string key = node_key_text(kind, text);
    if (key.empty())
        throw SchemaError(std::string("empty text for ") + to_string(kind) + " node");
    NodeId id = kIdPrefix[static_cast<int>(kind)] + key;
    auto it = nodes_.find(id);
    if (it != nodes_.end()) {
        for (auto& [k, v] : attrs) it->second.attrs.emplace(k, v);
        return id;
    }
    Node n;
    n.id = id;
    n.kind = kind;
    n.text = std::string(trim(text));
    n.attrs = std::move(attrs);
    nodes_.emplace(id, std::move(n));
    adj_.emplace(id, Adjacency{});
    return id;
}

const Node& Graph::node(const NodeId& id) const {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw NotFoundError("no node with id '" + id + "'");
    return it->second;
}

const Node* Graph::find_node(NodeKind kind, std::string_view text) const {
    auto it = nodes_.find(make_id(kind, text));
    return it == nodes_.end() ? nullptr : &it->second;
}

const Edge& Graph::add_edge(const NodeId& src, const NodeId& dst, EdgeKind kind, double score,
                            std::optional<Provenance> prov, std::optional<int32_t> position) {
    const Node& s = node(src);
    const Node& d = node(dst);

    auto require_kinds = [&](NodeKind sk, NodeKind dk) {
        if (s.kind != sk || d.kind != dk)
            throw SchemaError(std::string(to_string(kind)) + " edge requires " + to_string(sk) +
                              " -> " + to_string(dk) + ", got " + to_string(s.kind) + " -> " +
                              to_string(d.kind));
    };

    switch (kind) {
        case EdgeKind::ItemToSession:
            require_kinds(NodeKind::Item, NodeKind::Session);
            if (!position.has_value() || *position < 0)
                throw SchemaError("ItemToSession edge requires a position >= 0");
            break;
        case EdgeKind::SessionToIntention:
            require_kinds(NodeKind::Session, NodeKind::Intention);
            break;
        case EdgeKind::IntentionToConcept:
            require_kinds(NodeKind::Intention, NodeKind::Concept);
            break;
        case EdgeKind::Asynchronous:
        case EdgeKind::Synchronous:
        case EdgeKind::Causality:
            require_kinds(NodeKind::Intention, NodeKind::Intention);
            if (src == dst)
                throw SchemaError(std::string(to_string(kind)) + " self-loop on '" + src + "'");
            break;
    }

    if (kind != EdgeKind::ItemToSession && position.has_value())
        throw SchemaError(std::string("position not allowed on ") + to_string(kind) + " edges");

    if (is_intention_pair_kind(kind)) {
        if (kind == EdgeKind::Synchronous && !prov.has_value()) prov = Provenance::Simultaneous;
        if (!prov.has_value())
            throw SchemaError(std::string(to_string(kind)) + " edge requires a provenance");
        bool ok = false;
        switch (kind) {
            case EdgeKind::Asynchronous:
                ok = *prov == Provenance::Precedence || *prov == Provenance::Succession;
                break;
            case EdgeKind::Synchronous:
                ok = *prov == Provenance::Simultaneous;
                break;
            default:
                ok = *prov == Provenance::Cause || *prov == Provenance::Result;
                break;
        }
        if (!ok)
            throw SchemaError(std::string("provenance ") + to_string(*prov) + " invalid for " +
                              to_string(kind) + " edges");
    } else if (prov.has_value()) {
        throw SchemaError(std::string("provenance not allowed on ") + to_string(kind) + " edges");
    }

    if (!(score >= 0.0 && score <= 1.0))
        throw RangeError("edge score " + std::to_string(score) + " outside [0, 1]");

    Edge e;
    e.src = src;
    e.dst = dst;
    if (kind == EdgeKind::Synchronous && e.dst < e.src) std::swap(e.src, e.dst);
    e.kind = kind;
    e.score = score;
    e.prov = prov;
    e.position = position;

    EdgeKey key{e.src, e.dst, static_cast<uint8_t>(kind),
                prov ? static_cast<int16_t>(*prov) : int16_t{-1},
                position ? *position : int32_t{-1}};
    auto it = edges_.find(key);
    if (it != edges_.end()) {
        it->second.score = std::max(it->second.score, score);
        return it->second;
    }
    auto [ins, _] = edges_.emplace(key, std::move(e));
    index_edge(ins->second);
    return ins->second;
}

void Graph::index_edge(const Edge& e) {
    int k = static_cast<int>(e.kind);
    adj_[e.src].out[k].push_back(&e);
    adj_[e.dst].in[k].push_back(&e);
}

std::vector<std::pair<const Node*, const Edge*>> Graph::neighbors(const NodeId& id, EdgeKind kind,
                                                                  Direction dir) const {
    node(id);
    std::vector<std::pair<const Node*, const Edge*>> out;
    auto ait = adj_.find(id);
    if (ait == adj_.end()) return out;
    int k = static_cast<int>(kind);
    bool want_out = dir == Direction::Out || dir == Direction::Both;
    bool want_in = dir == Direction::In || dir == Direction::Both;
    if (kind == EdgeKind::Synchronous) want_out = want_in = true;
    if (want_out)
        for (const Edge* e : ait->second.out[k]) out.emplace_back(&nodes_.at(e->dst), e);
    if (want_in)
        for (const Edge* e : ait->second.in[k]) out.emplace_back(&nodes_.at(e->src), e);
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.first->id != b.first->id) return a.first->id < b.first->id;
        auto key = [](const Edge* e) {
            return std::tie(e->src, e->dst, e->kind, e->prov, e->position);
        };
        return key(a.second) < key(b.second);
    });
    return out;
}

GraphStats Graph::stats() const {
    GraphStats st;
    for (auto& [id, n] : nodes_) st.nodes_by_kind[static_cast<int>(n.kind)]++;
    for (auto& [key, e] : edges_) st.edges_by_kind[static_cast<int>(e.kind)]++;
    return st;
}

Graph Graph::merge(const Graph& a, const Graph& b) {
    Graph g;
    for (const Graph* src : {&a, &b}) {
        for (auto& [id, n] : src->nodes_) g.add_node(n.kind, n.text, n.attrs);
        for (auto& [key, e] : src->edges_) g.add_edge(e.src, e.dst, e.kind, e.score, e.prov, e.position);
    }
    return g;
}

void Graph::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    using json = nlohmann::ordered_json;
    for (auto& [id, n] : nodes_) {
        json j;
        j["t"] = "node";
        j["id"] = n.id;
        j["kind"] = to_string(n.kind);
        j["text"] = n.text;
        j["attrs"] = json::object();
        for (auto& [k, v] : n.attrs) j["attrs"][k] = v;
        out << j.dump() << "\n";
    }
    for (auto& [key, e] : edges_) {
        json j;
        j["t"] = "edge";
        j["src"] = e.src;
        j["dst"] = e.dst;
        j["kind"] = to_string(e.kind);
        j["score"] = e.score;
        if (e.prov) j["prov"] = to_string(*e.prov);
        if (e.position) j["pos"] = *e.position;
        out << j.dump() << "\n";
    }
}

Graph Graph::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
    Graph g;
    std::string line;
    size_t line_no = 0;
    using json = nlohmann::json;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError(std::string("invalid JSON: ") + e.what(), line_no);
        }
        try {
            if (!j.is_object() || !j.contains("t") || !j["t"].is_string())
                throw SchemaError("record missing string field 't'");
            std::string t = j["t"].get<std::string>();
            if (t == "node") {
                auto kind = parse_node_kind(j.at("kind").get<std::string>());
                if (!kind) throw SchemaError("unknown node kind '" + j["kind"].get<std::string>() + "'");
                std::map<std::string, std::string> attrs;
                if (j.contains("attrs")) {
                    if (!j["attrs"].is_object()) throw SchemaError("'attrs' must be an object");
                    for (auto& [k, v] : j["attrs"].items()) attrs[k] = v.get<std::string>();
                }
                std::string text = j.at("text").get<std::string>();
                NodeId id = g.add_node(*kind, text, std::move(attrs));
                if (j.contains("id") && j["id"].get<std::string>() != id)
                    throw SchemaError("declared id '" + j["id"].get<std::string>() +
                                      "' does not match content id '" + id + "'");
            } else if (t == "edge") {
                auto kind = parse_edge_kind(j.at("kind").get<std::string>());
                if (!kind) throw SchemaError("unknown edge kind '" + j["kind"].get<std::string>() + "'");
                NodeId src = j.at("src").get<std::string>();
                NodeId dst = j.at("dst").get<std::string>();
                if (!g.has_node(src)) throw SchemaError("edge references undeclared node '" + src + "'");
                if (!g.has_node(dst)) throw SchemaError("edge references undeclared node '" + dst + "'");
                double score = j.value("score", 1.0);
                std::optional<Provenance> prov;
                if (j.contains("prov")) {
                    prov = parse_provenance(j["prov"].get<std::string>());
                    if (!prov)
                        throw SchemaError("unknown provenance '" + j["prov"].get<std::string>() + "'");
                }
                std::optional<int32_t> pos;
                if (j.contains("pos")) pos = j["pos"].get<int32_t>();
                g.add_edge(src, dst, *kind, score, prov, pos);
            } else {
                throw SchemaError("unknown record type '" + t + "'");
            }
        } catch (const ParseError&) {
            throw;
        } catch (const json::exception& e) {
            throw ParseError(std::string("bad record: ") + e.what(), line_no);
        } catch (const std::runtime_error& e) {
            throw ParseError(e.what(), line_no);
        }
    }
    return g;
}

}  // namespace ig
