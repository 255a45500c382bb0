#include "intentgraph/metapath.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <unordered_map>

#include "intentgraph/util.hpp"

namespace ig {

namespace {

const char* kQualifierNames[3] = {"RelationCount", "ConceptReachability", "Both"};
const char* kVariantNames[3] = {"Full", "RelationOnly", "ConceptOnly"};

void require_session(const Graph& g, const NodeId& id) {
    const Node& n = g.node(id);
    if (n.kind != NodeKind::Session)
        throw SchemaError("'" + id + "' is not a Session node");
}

std::vector<NodeId> intentions_of(const Graph& g, const NodeId& session) {
    std::vector<NodeId> out;
    for (auto& [n, e] : g.neighbors(session, EdgeKind::SessionToIntention, Direction::Out))
        out.push_back(n->id);
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<NodeId> concepts_of(const Graph& g, const NodeId& session) {
    std::vector<NodeId> out;
    for (const NodeId& i : intentions_of(g, session))
        for (auto& [n, e] : g.neighbors(i, EdgeKind::IntentionToConcept, Direction::Out))
            out.push_back(n->id);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

bool subset_of(const std::vector<NodeId>& a, const std::vector<NodeId>& b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

// Integer-indexed view of the session/intention/concept layers. Sessions,
// intentions and concepts are numbered in ascending node-id order so that
// index order matches id order everywhere below.
struct Layers {
    std::vector<NodeId> sessions;
    std::vector<std::vector<int>> session_intentions;       // sorted intention indices
    std::vector<std::vector<NodeId>> session_concepts;      // sorted concept ids
    std::vector<std::vector<int>> intention_sessions;       // sorted session indices
    std::vector<std::vector<int>> concept_sessions;         // sorted, deduped
    // Edge-object count per unordered intention index pair (lo << 32 | hi).
    std::unordered_map<uint64_t, int> pair_edges;
};

Layers index_layers(const Graph& g) {
    Layers ly;
    std::unordered_map<NodeId, int> session_idx, intention_idx, concept_idx;
    std::vector<NodeId> intentions;
    for (auto& [id, n] : g.nodes()) {
        if (n.kind == NodeKind::Session) {
            session_idx.emplace(id, static_cast<int>(ly.sessions.size()));
            ly.sessions.push_back(id);
        } else if (n.kind == NodeKind::Intention) {
            intention_idx.emplace(id, static_cast<int>(intentions.size()));
            intentions.push_back(id);
        } else if (n.kind == NodeKind::Concept) {
            int idx = static_cast<int>(concept_idx.size());
            concept_idx.emplace(id, idx);
        }
    }
    ly.session_intentions.resize(ly.sessions.size());
    ly.session_concepts.resize(ly.sessions.size());
    ly.intention_sessions.resize(intentions.size());
    ly.concept_sessions.resize(concept_idx.size());
    std::vector<std::vector<NodeId>> intention_concepts(intentions.size());
    for (auto& [key, e] : g.edges()) {
        if (e.kind == EdgeKind::SessionToIntention) {
            int s = session_idx.at(e.src);
            int i = intention_idx.at(e.dst);
            ly.session_intentions[s].push_back(i);
            ly.intention_sessions[i].push_back(s);
        } else if (e.kind == EdgeKind::IntentionToConcept) {
            intention_concepts[intention_idx.at(e.src)].push_back(e.dst);
        } else if (is_intention_pair_kind(e.kind)) {
            auto [lo, hi] = std::minmax(intention_idx.at(e.src), intention_idx.at(e.dst));
            ly.pair_edges[(static_cast<uint64_t>(lo) << 32) | static_cast<uint64_t>(hi)]++;
        }
    }
    for (size_t s = 0; s < ly.sessions.size(); ++s) {
        auto& ints = ly.session_intentions[s];
        std::sort(ints.begin(), ints.end());
        ints.erase(std::unique(ints.begin(), ints.end()), ints.end());
        auto& cons = ly.session_concepts[s];
        for (int i : ints)
            cons.insert(cons.end(), intention_concepts[i].begin(), intention_concepts[i].end());
        std::sort(cons.begin(), cons.end());
        cons.erase(std::unique(cons.begin(), cons.end()), cons.end());
        for (const NodeId& c : cons) ly.concept_sessions[concept_idx.at(c)].push_back(static_cast<int>(s));
    }
    for (auto& v : ly.intention_sessions) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    }
    return ly;
}

int count_pair(const Layers& ly, int s1, int s2) {
    int total = 0;
    for (int i1 : ly.session_intentions[s1])
        for (int i2 : ly.session_intentions[s2]) {
            if (i1 == i2) continue;
            auto [lo, hi] = std::minmax(i1, i2);
            auto it = ly.pair_edges.find((static_cast<uint64_t>(lo) << 32) | static_cast<uint64_t>(hi));
            if (it != ly.pair_edges.end()) total += it->second;
        }
    return total;
}

bool reachable_pair(const Layers& ly, int s1, int s2) {
    const auto& c1 = ly.session_concepts[s1];
    const auto& c2 = ly.session_concepts[s2];
    return (!c1.empty() && subset_of(c1, c2)) || (!c2.empty() && subset_of(c2, c1));
}

}  // namespace

const char* to_string(PairQualifier q) { return kQualifierNames[static_cast<int>(q)]; }
const char* to_string(ItemGraphVariant v) { return kVariantNames[static_cast<int>(v)]; }

int count_relation_metapaths(const Graph& g, const NodeId& s1, const NodeId& s2) {
    require_session(g, s1);
    require_session(g, s2);
    std::vector<NodeId> i2s = intentions_of(g, s2);
    int total = 0;
    for (const NodeId& i1 : intentions_of(g, s1)) {
        for (EdgeKind kind :
             {EdgeKind::Asynchronous, EdgeKind::Synchronous, EdgeKind::Causality}) {
            for (auto& [n, e] : g.neighbors(i1, kind, Direction::Both)) {
                if (n->id == i1) continue;
                if (std::binary_search(i2s.begin(), i2s.end(), n->id)) ++total;
            }
        }
    }
    return total;
}

bool concept_reachable(const Graph& g, const NodeId& s1, const NodeId& s2) {
    require_session(g, s1);
    require_session(g, s2);
    std::vector<NodeId> c1 = concepts_of(g, s1);
    std::vector<NodeId> c2 = concepts_of(g, s2);
    return (!c1.empty() && subset_of(c1, c2)) || (!c2.empty() && subset_of(c2, c1));
}

std::vector<SessionPairSelection> select_session_pairs(const Graph& g, int min_metapaths) {
    if (min_metapaths < 1) throw RangeError("min_metapaths must be >= 1");
    Layers ly = index_layers(g);

    // Candidate discovery stays local to the graph structure: a pair can
    // qualify only if some relation edge joins its intentions or some concept
    // is shared (subset reachability implies a shared concept). Coalesced
    // intentions make the raw candidate stream highly redundant, so dedupe
    // with a pair bitset while the quadratic table is affordable.
    size_t n = ly.sessions.size();
    std::vector<uint64_t> cands;
    std::vector<bool> seen;
    if (n <= 16384) seen.assign(n * n, false);
    auto emit = [&](int a, int b) {
        if (a == b) return;
        auto [lo, hi] = std::minmax(a, b);
        uint64_t key = (static_cast<uint64_t>(lo) << 32) | static_cast<uint64_t>(hi);
        if (!seen.empty()) {
            size_t slot = static_cast<size_t>(lo) * n + static_cast<size_t>(hi);
            if (seen[slot]) return;
            seen[slot] = true;
        }
        cands.push_back(key);
    };
    for (auto& [key, cnt] : ly.pair_edges) {
        const auto& sa = ly.intention_sessions[static_cast<int>(key >> 32)];
        const auto& sb = ly.intention_sessions[static_cast<int>(key & 0xffffffffu)];
        for (int a : sa)
            for (int b : sb) emit(a, b);
    }
    for (const auto& group : ly.concept_sessions)
        for (size_t x = 0; x < group.size(); ++x)
            for (size_t y = x + 1; y < group.size(); ++y) emit(group[x], group[y]);
    std::sort(cands.begin(), cands.end());
    cands.erase(std::unique(cands.begin(), cands.end()), cands.end());

    std::vector<SessionPairSelection> out;
    for (uint64_t key : cands) {
        int s1 = static_cast<int>(key >> 32);
        int s2 = static_cast<int>(key & 0xffffffffu);
        SessionPairSelection sel;
        sel.relation_path_count = count_pair(ly, s1, s2);
        sel.concept_reachable = reachable_pair(ly, s1, s2);
        bool by_count = sel.relation_path_count >= min_metapaths;
        if (!by_count && !sel.concept_reachable) continue;
        sel.s1 = ly.sessions[s1];
        sel.s2 = ly.sessions[s2];
        sel.qualified_by = by_count && sel.concept_reachable ? PairQualifier::Both
                           : by_count                       ? PairQualifier::RelationCount
                                                            : PairQualifier::ConceptReachability;
        out.push_back(std::move(sel));
    }
    return out;
}

ItemGraph build_item_graph(const Graph& g, const std::vector<SessionPairSelection>& pairs,
                           ItemGraphVariant variant) {
    auto keep = [variant](PairQualifier q) {
        switch (variant) {
            case ItemGraphVariant::Full:
                return true;
            case ItemGraphVariant::RelationOnly:
                return q == PairQualifier::RelationCount || q == PairQualifier::Both;
            case ItemGraphVariant::ConceptOnly:
                return q == PairQualifier::ConceptReachability || q == PairQualifier::Both;
        }
        return false;
    };

    std::unordered_map<NodeId, int> item_idx;
    std::vector<NodeId> items;
    std::unordered_map<NodeId, std::vector<int>> session_items;
    auto items_of = [&](const NodeId& session) -> const std::vector<int>& {
        auto it = session_items.find(session);
        if (it != session_items.end()) return it->second;
        require_session(g, session);
        std::vector<int> idx;
        for (auto& [n, e] : g.neighbors(session, EdgeKind::ItemToSession, Direction::In)) {
            auto [pos, fresh] = item_idx.emplace(n->id, static_cast<int>(items.size()));
            if (fresh) items.push_back(n->id);
            idx.push_back(pos->second);
        }
        std::sort(idx.begin(), idx.end());
        idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
        return session_items.emplace(session, std::move(idx)).first->second;
    };

    // Qualified pair counts grow quadratically in the corpus, so the inner
    // increment is the hot path; use a dense triangle while the item
    // vocabulary is small enough.
    size_t total_items = 0;
    for (auto& [id, node] : g.nodes())
        if (node.kind == NodeKind::Item) ++total_items;
    std::vector<int64_t> dense;
    if (total_items <= 2048) dense.assign(total_items * total_items, 0);
    std::unordered_map<uint64_t, int64_t> sparse;

    std::vector<int> merged;
    for (const auto& sel : pairs) {
        if (!keep(sel.qualified_by)) continue;
        const auto& a = items_of(sel.s1);
        const auto& b = items_of(sel.s2);
        merged.clear();
        std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(merged));
        for (size_t x = 0; x < merged.size(); ++x)
            for (size_t y = x + 1; y < merged.size(); ++y) {
                if (!dense.empty())
                    dense[static_cast<size_t>(merged[x]) * total_items + merged[y]]++;
                else
                    sparse[(static_cast<uint64_t>(merged[x]) << 32) |
                           static_cast<uint64_t>(merged[y])]++;
            }
    }

    ItemGraph ig;
    if (!dense.empty()) {
        for (size_t x = 0; x < items.size(); ++x)
            for (size_t y = x + 1; y < items.size(); ++y)
                if (int64_t w = dense[x * total_items + y]; w > 0) ig.add(items[x], items[y], w);
    } else {
        for (auto& [key, w] : sparse)
            ig.add(items[static_cast<size_t>(key >> 32)],
                   items[static_cast<size_t>(key & 0xffffffffu)], w);
    }
    return ig;
}

void ItemGraph::add(const std::string& a, const std::string& b, int64_t weight) {
    if (a == b) throw SchemaError("item graph self-loop on '" + a + "'");
    if (weight <= 0) throw RangeError("item graph weight must be positive");
    auto key = a < b ? std::make_pair(a, b) : std::make_pair(b, a);
    weights_[std::move(key)] += weight;
}

int64_t ItemGraph::weight(const std::string& a, const std::string& b) const {
    auto key = a < b ? std::make_pair(a, b) : std::make_pair(b, a);
    auto it = weights_.find(key);
    return it == weights_.end() ? 0 : it->second;
}

void ItemGraph::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    for (auto& [key, w] : weights_) out << key.first << "\t" << key.second << "\t" << w << "\n";
}

ItemGraph ItemGraph::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
    ItemGraph g;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        size_t t1 = line.find('\t');
        size_t t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
        if (t2 == std::string::npos) throw ParseError("expected item_a\\titem_b\\tweight", line_no);
        std::string a = line.substr(0, t1);
        std::string b = line.substr(t1 + 1, t2 - t1 - 1);
        std::string ws = std::string(trim(line.substr(t2 + 1)));
        if (a.empty() || b.empty()) throw ParseError("empty item id", line_no);
        if (a == b) throw ParseError("self-loop on '" + a + "'", line_no);
        if (a > b) throw ParseError("items out of order: '" + a + "' > '" + b + "'", line_no);
        int64_t w = 0;
        try {
            size_t used = 0;
            w = std::stoll(ws, &used);
            if (used != ws.size()) throw std::invalid_argument(ws);
        } catch (const std::exception&) {
            throw ParseError("invalid weight '" + ws + "'", line_no);
        }
        if (w <= 0) throw ParseError("weight must be positive, got " + ws, line_no);
        g.add(a, b, w);
    }
    return g;
}

}  // namespace ig
