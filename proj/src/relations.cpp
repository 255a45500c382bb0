#include "intentgraph/relations.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

#include "intentgraph/rng.hpp"
#include "intentgraph/util.hpp"
#include "json.hpp"

namespace ig {

namespace {

std::string assertion_form(const std::string& text) {
    std::string t = trim(text);
    while (!t.empty() && (t.back() == '.' || is_space(t.back()))) t.pop_back();
    if (!t.empty()) t[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(t[0])));
    return t;
}

const Node& intention_node(const Graph& g, const NodeId& id) {
    const Node& n = g.node(id);
    if (n.kind != NodeKind::Intention)
        throw SchemaError("'" + id + "' is not an Intention node");
    return n;
}

}  // namespace

std::string render_assertion(const std::string& i1_text, const std::string& i2_text,
                             RelationType relation) {
    std::string a = assertion_form(i1_text);
    std::string b = assertion_form(i2_text);
    if (a.empty() || b.empty()) throw SchemaError("assertion requires two non-empty intentions");
    switch (relation) {
        case RelationType::Simultaneous:
            return "People " + a + ", and simultaneously, they " + b + ".";
        case RelationType::Succession:
            return "People " + a + " usually after they " + b + ".";
        case RelationType::Precedence:
            return "People " + a + " usually before they " + b + ".";
        case RelationType::Cause:
            return "People " + a + " because they " + b + ".";
        case RelationType::Result:
            return "People " + a + ", as a result, they " + b + ".";
    }
    throw SchemaError("unknown relation");
}

std::vector<std::pair<NodeId, NodeId>> candidate_pairs(const Graph& g, const PairPolicy& policy) {
    std::map<NodeId, std::set<NodeId>> partners;
    auto link_all = [&](const std::vector<std::pair<const Node*, const Edge*>>& nb) {
        for (size_t x = 0; x < nb.size(); ++x)
            for (size_t y = x + 1; y < nb.size(); ++y) {
                const NodeId& a = nb[x].first->id;
                const NodeId& b = nb[y].first->id;
                if (a == b) continue;
                partners[a].insert(b);
                partners[b].insert(a);
            }
    };
    for (auto& [id, node] : g.nodes()) {
        if (policy.include_within_session && node.kind == NodeKind::Session)
            link_all(g.neighbors(id, EdgeKind::SessionToIntention, Direction::Out));
        if (policy.include_shared_concept && node.kind == NodeKind::Concept)
            link_all(g.neighbors(id, EdgeKind::IntentionToConcept, Direction::In));
    }

    int cap = policy.max_pairs_per_intention;
    Rng root(policy.seed);
    std::map<NodeId, int> used;
    std::set<std::pair<NodeId, NodeId>> chosen;
    for (auto& [iid, parts] : partners) {
        int budget = cap - used[iid];
        if (budget <= 0) continue;
        std::vector<NodeId> eligible;
        for (auto& j : parts) {
            if (used[j] >= cap) continue;
            auto key = std::minmax(iid, j);
            if (chosen.count({key.first, key.second})) continue;
            eligible.push_back(j);
        }
        if (static_cast<int>(eligible.size()) > budget) {
            Rng r = root.fork("pairs:" + iid);
            eligible = r.reservoir(eligible, static_cast<size_t>(budget));
        }
        for (auto& j : eligible) {
            auto key = std::minmax(iid, j);
            chosen.insert({key.first, key.second});
            used[iid]++;
            used[j]++;
        }
    }
    return {chosen.begin(), chosen.end()};
}

ClassifyOutput classify_pair(Graph& g, const NodeId& i1, const NodeId& i2,
                             PlausibilityScorer& scorer, double threshold) {
    if (i1 == i2) throw SchemaError("cannot classify a self-pair '" + i1 + "'");
    const Node& n1 = intention_node(g, i1);
    const Node& n2 = intention_node(g, i2);
    const Node& a = n1.id < n2.id ? n1 : n2;
    const Node& b = n1.id < n2.id ? n2 : n1;

    ClassifyOutput out;
    auto consider = [&](const Node& x, const Node& y, RelationType rel) {
        AssertionOutcome o;
        o.i1 = x.id;
        o.i2 = y.id;
        o.relation = rel;
        o.text = render_assertion(x.text, y.text, rel);
        o.score = scorer.score(o.text);
        o.accepted = o.score > threshold;
        if (o.accepted) {
            switch (rel) {
                case RelationType::Precedence:
                    out.edges.push_back(
                        g.add_edge(x.id, y.id, EdgeKind::Asynchronous, o.score, rel));
                    break;
                case RelationType::Succession:
                    out.edges.push_back(
                        g.add_edge(y.id, x.id, EdgeKind::Asynchronous, o.score, rel));
                    break;
                case RelationType::Cause:
                case RelationType::Result:
                    out.edges.push_back(g.add_edge(x.id, y.id, EdgeKind::Causality, o.score, rel));
                    break;
                case RelationType::Simultaneous:
                    out.edges.push_back(g.add_edge(x.id, y.id, EdgeKind::Synchronous, o.score));
                    break;
            }
        }
        out.outcomes.push_back(std::move(o));
    };

    for (RelationType rel : {RelationType::Precedence, RelationType::Succession,
                             RelationType::Simultaneous, RelationType::Cause, RelationType::Result}) {
        if (rel == RelationType::Simultaneous) {
            consider(a, b, rel);
        } else {
            consider(a, b, rel);
            consider(b, a, rel);
        }
    }
    return out;
}

RelationReport build_relations(Graph& g, const PairPolicy& policy, PlausibilityScorer& scorer,
                               double threshold, std::ostream* outcomes) {
    RelationReport rep;
    auto pairs = candidate_pairs(g, policy);
    rep.pairs_total = static_cast<int64_t>(pairs.size());
    for (auto& [a, b] : pairs) {
        ClassifyOutput out;
        try {
            out = classify_pair(g, a, b, scorer, threshold);
        } catch (const BackendError& e) {
            rep.pairs_skipped++;
            rep.skip_log.push_back("pair (" + a + ", " + b + "): " + e.what());
            continue;
        }
        for (auto& o : out.outcomes) {
            rep.assertions_scored++;
            if (o.accepted) rep.accepted_by_relation[static_cast<int>(o.relation)]++;
            if (outcomes) {
                nlohmann::ordered_json j;
                j["i1"] = o.i1;
                j["i2"] = o.i2;
                j["relation"] = to_string(o.relation);
                j["score"] = o.score;
                j["accepted"] = o.accepted;
                (*outcomes) << j.dump() << "\n";
            }
        }
    }
    return rep;
}

}  // namespace ig
