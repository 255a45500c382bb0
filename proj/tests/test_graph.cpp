#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "intentgraph/graph.hpp"
#include "intentgraph/util.hpp"

using namespace ig;
namespace fs = std::filesystem;

namespace {

fs::path tmp_dir() {
    static int counter = 0;
    fs::path p = fs::temp_directory_path() / ("ig_graph_test_" + std::to_string(++counter));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Graph small_fixture() {
    Graph g;
    NodeId i1 = g.add_node(NodeKind::Item, "Red Kettle");
    NodeId i2 = g.add_node(NodeKind::Item, "Loose Leaf Tea");
    NodeId s = g.add_node(NodeKind::Session, "s-001");
    NodeId a = g.add_node(NodeKind::Intention, "brew tea at home");
    NodeId b = g.add_node(NodeKind::Intention, "relax in the evening");
    NodeId c = g.add_node(NodeKind::Concept, "tea");
    g.add_edge(i1, s, EdgeKind::ItemToSession, 1.0, std::nullopt, 0);
    g.add_edge(i2, s, EdgeKind::ItemToSession, 1.0, std::nullopt, 1);
    g.add_edge(s, a, EdgeKind::SessionToIntention, 1.0);
    g.add_edge(s, b, EdgeKind::SessionToIntention, 1.0);
    g.add_edge(a, c, EdgeKind::IntentionToConcept, 1.0);
    g.add_edge(a, b, EdgeKind::Synchronous, 0.95);
    g.add_edge(a, b, EdgeKind::Causality, 0.92, Provenance::Cause);
    return g;
}

}  // namespace

TEST_CASE("node ids coalesce on normalized text") {
    Graph g;
    NodeId a = g.add_node(NodeKind::Intention, "Buy Fresh Milk.");
    NodeId b = g.add_node(NodeKind::Intention, "  buy   fresh milk ");
    CHECK(a == b);
    CHECK(g.stats().total_nodes() == 1);
    CHECK(g.node(a).text == "Buy Fresh Milk.");

    NodeId c = g.add_node(NodeKind::Concept, "milk");
    CHECK(c != a);
    CHECK(g.stats().total_nodes() == 2);
}

TEST_CASE("attrs merge keeps existing values") {
    Graph g;
    NodeId a = g.add_node(NodeKind::Item, "Kettle", {{"brand", "Acme"}});
    g.add_node(NodeKind::Item, "kettle", {{"brand", "Other"}, {"color", "red"}});
    CHECK(g.node(a).attrs.at("brand") == "Acme");
    CHECK(g.node(a).attrs.at("color") == "red");
}

TEST_CASE("empty text is rejected for every node kind") {
    Graph g;
    for (auto k : {NodeKind::Item, NodeKind::Session, NodeKind::Intention, NodeKind::Concept}) {
        CHECK_THROWS_AS(g.add_node(k, ""), SchemaError);
        CHECK_THROWS_AS(g.add_node(k, "   "), SchemaError);
    }
    CHECK_THROWS_AS(g.add_node(NodeKind::Intention, " .. "), SchemaError);
}

TEST_CASE("edge endpoint kinds are enforced") {
    Graph g;
    NodeId item = g.add_node(NodeKind::Item, "Kettle");
    NodeId sess = g.add_node(NodeKind::Session, "s1");
    NodeId intn = g.add_node(NodeKind::Intention, "make tea");
    NodeId con = g.add_node(NodeKind::Concept, "tea");

    CHECK_THROWS_AS(g.add_edge(sess, item, EdgeKind::ItemToSession, 1.0, std::nullopt, 0),
                    SchemaError);
    CHECK_THROWS_AS(g.add_edge(item, intn, EdgeKind::SessionToIntention, 1.0), SchemaError);
    CHECK_THROWS_AS(g.add_edge(con, intn, EdgeKind::IntentionToConcept, 1.0), SchemaError);
    CHECK_THROWS_AS(g.add_edge(intn, con, EdgeKind::Synchronous, 0.5), SchemaError);
    CHECK_THROWS_AS(g.add_edge(item, sess, EdgeKind::ItemToSession, 1.0), SchemaError);
    CHECK_THROWS_AS(g.add_edge(item, sess, EdgeKind::ItemToSession, 1.0, std::nullopt, -1),
                    SchemaError);
    CHECK_THROWS_AS(g.add_edge(sess, intn, EdgeKind::SessionToIntention, 1.0, std::nullopt, 2),
                    SchemaError);
    CHECK_THROWS_AS(
        g.add_edge(sess, intn, EdgeKind::SessionToIntention, 1.0, Provenance::Cause),
        SchemaError);
    CHECK_THROWS_AS(g.add_edge(intn, intn, EdgeKind::Causality, 0.95, Provenance::Cause),
                    SchemaError);
    CHECK_THROWS_AS(g.add_edge(intn, con, EdgeKind::IntentionToConcept, 1.5), RangeError);
    CHECK_THROWS_AS(g.add_edge(intn, con, EdgeKind::IntentionToConcept, -0.1), RangeError);
    CHECK_THROWS_AS(g.add_edge(intn, "int:missing", EdgeKind::Synchronous, 0.5), NotFoundError);
}

TEST_CASE("intention pair edges require matching provenance") {
    Graph g;
    NodeId a = g.add_node(NodeKind::Intention, "a");
    NodeId b = g.add_node(NodeKind::Intention, "b");
    CHECK_THROWS_AS(g.add_edge(a, b, EdgeKind::Asynchronous, 0.95), SchemaError);
    CHECK_THROWS_AS(g.add_edge(a, b, EdgeKind::Asynchronous, 0.95, Provenance::Cause), SchemaError);
    CHECK_THROWS_AS(g.add_edge(a, b, EdgeKind::Causality, 0.95, Provenance::Simultaneous),
                    SchemaError);
    CHECK_THROWS_AS(g.add_edge(a, b, EdgeKind::Synchronous, 0.95, Provenance::Precedence),
                    SchemaError);
    CHECK_NOTHROW(g.add_edge(a, b, EdgeKind::Asynchronous, 0.95, Provenance::Precedence));
    CHECK_NOTHROW(g.add_edge(a, b, EdgeKind::Asynchronous, 0.95, Provenance::Succession));
    CHECK_NOTHROW(g.add_edge(a, b, EdgeKind::Causality, 0.95, Provenance::Result));
    CHECK_NOTHROW(g.add_edge(a, b, EdgeKind::Synchronous, 0.95));
}

TEST_CASE("duplicate edges keep the max score") {
    Graph g;
    NodeId a = g.add_node(NodeKind::Intention, "a");
    NodeId b = g.add_node(NodeKind::Intention, "b");
    g.add_edge(a, b, EdgeKind::Causality, 0.3, Provenance::Cause);
    g.add_edge(a, b, EdgeKind::Causality, 0.8, Provenance::Cause);
    g.add_edge(a, b, EdgeKind::Causality, 0.5, Provenance::Cause);
    CHECK(g.stats().edges_by_kind[static_cast<int>(EdgeKind::Causality)] == 1);
    auto nb = g.neighbors(a, EdgeKind::Causality, Direction::Out);
    REQUIRE(nb.size() == 1);
    CHECK(nb[0].second->score == doctest::Approx(0.8));

    g.add_edge(a, b, EdgeKind::Causality, 0.6, Provenance::Result);
    CHECK(g.stats().edges_by_kind[static_cast<int>(EdgeKind::Causality)] == 2);
}

TEST_CASE("synchronous edges are canonicalized and undirected") {
    Graph g;
    NodeId a = g.add_node(NodeKind::Intention, "alpha");
    NodeId b = g.add_node(NodeKind::Intention, "beta");
    NodeId c = g.add_node(NodeKind::Intention, "gamma");
    const Edge& e = g.add_edge(c, a, EdgeKind::Synchronous, 0.93);
    CHECK(e.src < e.dst);
    g.add_edge(a, c, EdgeKind::Synchronous, 0.91);
    CHECK(g.stats().edges_by_kind[static_cast<int>(EdgeKind::Synchronous)] == 1);
    g.add_edge(b, c, EdgeKind::Synchronous, 0.92);

    for (auto dir : {Direction::Out, Direction::In, Direction::Both}) {
        auto from_a = g.neighbors(a, EdgeKind::Synchronous, dir);
        REQUIRE(from_a.size() == 1);
        CHECK(from_a[0].first->id == c);
        auto from_c = g.neighbors(c, EdgeKind::Synchronous, dir);
        REQUIRE(from_c.size() == 2);
        CHECK(from_c[0].first->id == a);
        CHECK(from_c[1].first->id == b);
    }
}

TEST_CASE("asynchronous edges are directional") {
    Graph g;
    NodeId a = g.add_node(NodeKind::Intention, "a");
    NodeId b = g.add_node(NodeKind::Intention, "b");
    g.add_edge(a, b, EdgeKind::Asynchronous, 0.95, Provenance::Precedence);
    CHECK(g.neighbors(a, EdgeKind::Asynchronous, Direction::Out).size() == 1);
    CHECK(g.neighbors(a, EdgeKind::Asynchronous, Direction::In).empty());
    CHECK(g.neighbors(b, EdgeKind::Asynchronous, Direction::Out).empty());
    CHECK(g.neighbors(b, EdgeKind::Asynchronous, Direction::In).size() == 1);
    CHECK(g.neighbors(a, EdgeKind::Asynchronous, Direction::Both).size() == 1);
    CHECK_THROWS_AS(g.neighbors("int:missing", EdgeKind::Asynchronous, Direction::Out),
                    NotFoundError);
}

TEST_CASE("merge is a union with idempotent coalescing") {
    Graph g = small_fixture();
    Graph empty;
    CHECK(Graph::merge(g, empty).stats() == g.stats());
    CHECK(Graph::merge(empty, g).stats() == g.stats());
    CHECK(Graph::merge(g, g).stats() == g.stats());

    Graph shard_a, shard_b;
    NodeId x1 = shard_a.add_node(NodeKind::Intention, "plan a picnic");
    NodeId x2 = shard_a.add_node(NodeKind::Intention, "pack snacks");
    shard_a.add_edge(x1, x2, EdgeKind::Causality, 0.91, Provenance::Cause);
    NodeId y1 = shard_b.add_node(NodeKind::Intention, "Plan a Picnic");
    NodeId y2 = shard_b.add_node(NodeKind::Intention, "check the weather");
    shard_b.add_edge(y1, y2, EdgeKind::Synchronous, 0.94);
    CHECK(x1 == y1);

    Graph m = Graph::merge(shard_a, shard_b);
    CHECK(m.stats().total_nodes() == 3);
    CHECK(m.stats().total_edges() == 2);

    Graph with_dup = shard_a;
    NodeId z2 = with_dup.add_node(NodeKind::Intention, "pack snacks");
    with_dup.add_edge(x1, z2, EdgeKind::Causality, 0.97, Provenance::Cause);
    Graph m2 = Graph::merge(shard_a, with_dup);
    auto nb = m2.neighbors(x1, EdgeKind::Causality, Direction::Out);
    REQUIRE(nb.size() == 1);
    CHECK(nb[0].second->score == doctest::Approx(0.97));
}

TEST_CASE("save and load round-trip byte-identically") {
    fs::path dir = tmp_dir();
    Graph g = small_fixture();
    fs::path p1 = dir / "g1.jsonl";
    fs::path p2 = dir / "g2.jsonl";
    g.save(p1);
    Graph g2 = Graph::load(p1);
    g2.save(p2);
    CHECK(g.stats() == g2.stats());
    std::string b1 = read_file(p1);
    CHECK(!b1.empty());
    CHECK(b1 == read_file(p2));

    std::istringstream lines(b1);
    std::string line;
    bool saw_edge = false;
    size_t n = 0;
    while (std::getline(lines, line)) {
        ++n;
        bool is_edge = line.find("\"t\":\"edge\"") != std::string::npos;
        if (is_edge) saw_edge = true;
        if (!is_edge) CHECK(!saw_edge);
    }
    CHECK(n == size_t(g.stats().total_nodes() + g.stats().total_edges()));
}

TEST_CASE("load reports line numbers for malformed input") {
    fs::path dir = tmp_dir();

    {
        std::ofstream out(dir / "bad_json.jsonl");
        out << R"({"t":"node","id":"con:tea","kind":"Concept","text":"tea","attrs":{}})" << "\n";
        out << R"({"t":"node","id":"int:make tea","kind":"Intention","text":"make tea","attrs":{}})"
            << "\n";
        out << "{not json\n";
    }
    try {
        Graph::load(dir / "bad_json.jsonl");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line == 3);
    }

    {
        std::ofstream out(dir / "undeclared.jsonl");
        out << R"({"t":"node","id":"int:a","kind":"Intention","text":"a","attrs":{}})" << "\n";
        out << R"({"t":"edge","src":"int:a","dst":"int:b","kind":"Synchronous","score":0.95,"prov":"Simultaneous"})"
            << "\n";
    }
    try {
        Graph::load(dir / "undeclared.jsonl");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line == 2);
    }

    {
        std::ofstream out(dir / "bad_kind.jsonl");
        out << R"({"t":"node","id":"x:a","kind":"Widget","text":"a","attrs":{}})" << "\n";
    }
    CHECK_THROWS_AS(Graph::load(dir / "bad_kind.jsonl"), ParseError);

    {
        std::ofstream out(dir / "bad_score.jsonl");
        out << R"({"t":"node","id":"int:a","kind":"Intention","text":"a","attrs":{}})" << "\n";
        out << R"({"t":"node","id":"int:b","kind":"Intention","text":"b","attrs":{}})" << "\n";
        out << R"({"t":"edge","src":"int:a","dst":"int:b","kind":"Synchronous","score":1.5,"prov":"Simultaneous"})"
            << "\n";
    }
    try {
        Graph::load(dir / "bad_score.jsonl");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line == 3);
    }

    {
        std::ofstream out(dir / "id_mismatch.jsonl");
        out << R"({"t":"node","id":"int:other","kind":"Intention","text":"make tea","attrs":{}})"
            << "\n";
    }
    CHECK_THROWS_AS(Graph::load(dir / "id_mismatch.jsonl"), ParseError);
}

TEST_CASE("stats counts nodes and edges by kind") {
    Graph g = small_fixture();
    GraphStats st = g.stats();
    CHECK(st.nodes_by_kind[static_cast<int>(NodeKind::Item)] == 2);
    CHECK(st.nodes_by_kind[static_cast<int>(NodeKind::Session)] == 1);
    CHECK(st.nodes_by_kind[static_cast<int>(NodeKind::Intention)] == 2);
    CHECK(st.nodes_by_kind[static_cast<int>(NodeKind::Concept)] == 1);
    CHECK(st.edges_by_kind[static_cast<int>(EdgeKind::ItemToSession)] == 2);
    CHECK(st.edges_by_kind[static_cast<int>(EdgeKind::SessionToIntention)] == 2);
    CHECK(st.edges_by_kind[static_cast<int>(EdgeKind::IntentionToConcept)] == 1);
    CHECK(st.edges_by_kind[static_cast<int>(EdgeKind::Synchronous)] == 1);
    CHECK(st.edges_by_kind[static_cast<int>(EdgeKind::Causality)] == 1);
    CHECK(st.total_nodes() == 6);
    CHECK(st.total_edges() == 7);
}

TEST_CASE("normalization helpers") {
    CHECK(normalize_phrase("  Buy   Fresh Milk.. ") == "buy fresh milk");
    CHECK(normalize_phrase("MIX it Up") == "mix it up");
    CHECK(normalize_phrase("...") == "");
    CHECK(collapse_ws(" a \t b\n") == "a b");
    CHECK(word_count("plan a lovely picnic") == 4);
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}
