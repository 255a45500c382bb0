#include "intentgraph/pipeline.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>

#include "intentgraph/concepts.hpp"
#include "intentgraph/intentions.hpp"
#include "intentgraph/util.hpp"

namespace fs = std::filesystem;

namespace ig {
namespace {

void ensure_parent(const fs::path& path) {
    fs::path dir = path.parent_path();
    if (!dir.empty()) fs::create_directories(dir);
}

void write_text(const fs::path& path, const std::string& text) {
    ensure_parent(path);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
}

void write_json(const fs::path& path, const nlohmann::ordered_json& j) {
    write_text(path, j.dump(2) + "\n");
}

nlohmann::json read_json(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DependencyError("missing '" + path.string() + "'");
    try {
        nlohmann::json j;
        in >> j;
        return j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("bad JSON in '" + path.string() + "': " + e.what(), 0);
    }
}

void require_artifact(const fs::path& path, const std::string& producer) {
    if (!fs::exists(path))
        throw DependencyError("missing '" + path.string() + "'; run " + producer + " first");
}

Graph load_graph(const PipelineConfig& cfg) {
    require_artifact(cfg.graph, "ingest");
    return Graph::load(cfg.graph);
}

void require_nodes(const Graph& g, NodeKind kind, const std::string& producer) {
    if (g.stats().nodes_by_kind[static_cast<int>(kind)] == 0)
        throw DependencyError(std::string("graph has no ") + to_string(kind) +
                              " nodes; run " + producer + " first");
}

// Stable artifacts never carry wall-clock fields; reruns must be
// byte-identical.
nlohmann::ordered_json metrics_json(const RankingReport& rep) {
    nlohmann::ordered_json out;
    out["mrr"] = rep.mrr;
    nlohmann::ordered_json hit = nlohmann::ordered_json::object();
    for (auto& [k, v] : rep.hit) hit[std::to_string(k)] = v;
    out["hit"] = hit;
    nlohmann::ordered_json recall = nlohmann::ordered_json::object();
    for (auto& [k, v] : rep.recall) recall[std::to_string(k)] = v;
    out["recall"] = recall;
    nlohmann::ordered_json ndcg = nlohmann::ordered_json::object();
    for (auto& [k, v] : rep.ndcg) ndcg[std::to_string(k)] = v;
    out["ndcg"] = ndcg;
    out["queries"] = rep.queries;
    out["skipped"] = rep.skipped;
    return out;
}

nlohmann::ordered_json ranked_task_report(const TaskSet& task, Embedder& embed) {
    std::vector<std::vector<int>> ranks;
    for (const RankingInstance& inst : task.instances) {
        std::vector<size_t> order = rank_by_embedding(inst, embed);
        ranks.push_back(positive_ranks(inst, order));
    }
    nlohmann::ordered_json out = metrics_json(summarize_rankings(ranks));
    out["log"] = task.log;
    return out;
}

const char* variant_token(ItemGraphVariant v) {
    switch (v) {
        case ItemGraphVariant::Full: return "full";
        case ItemGraphVariant::RelationOnly: return "relation_only";
        case ItemGraphVariant::ConceptOnly: return "concept_only";
    }
    return "full";
}

ItemGraphVariant variant_from_token(const std::string& s) {
    if (s == "full") return ItemGraphVariant::Full;
    if (s == "relation_only") return ItemGraphVariant::RelationOnly;
    if (s == "concept_only") return ItemGraphVariant::ConceptOnly;
    throw ConfigError("unknown item graph variant '" + s +
                      "' (expected full, relation_only or concept_only)");
}

SessionDataset rec_dataset(const PipelineConfig& cfg, const Graph& g) {
    return split_sessions(session_item_sequences(g), cfg.eval.ratios, cfg.eval.split_seed);
}

// ---- stage bodies ----

nlohmann::ordered_json stage_synth(const PipelineConfig& cfg) {
    SyntheticData data = make_synthetic(cfg.synth);
    ensure_parent(cfg.sessions);
    save_sessions(cfg.sessions, data.sessions);
    write_json(cfg.manifest, data.manifest);
    write_json(cfg.scorer_overrides, nlohmann::ordered_json(data.scorer_overrides));
    return {{"sessions", data.sessions.size()},
            {"themes", cfg.synth.n_themes},
            {"items", cfg.synth.n_themes * cfg.synth.items_per_theme},
            {"scorer_statements", data.scorer_overrides.size()}};
}

nlohmann::ordered_json stage_ingest(const PipelineConfig& cfg) {
    require_artifact(cfg.sessions, "synth (or provide a session log)");
    std::vector<SessionRecord> sessions = load_sessions(cfg.sessions);
    Graph g = fs::exists(cfg.graph) ? Graph::load(cfg.graph) : Graph();
    std::set<std::string> item_ids;
    for (const SessionRecord& rec : sessions) {
        ingest_session(g, rec);
        for (const SessionItem& item : rec.items) item_ids.insert(item.id);
    }
    ensure_parent(cfg.graph);
    g.save(cfg.graph);
    return {{"sessions_ingested", sessions.size()}, {"distinct_items", item_ids.size()}};
}

nlohmann::ordered_json stage_gen_intentions(const PipelineConfig& cfg) {
    require_artifact(cfg.sessions, "synth (or provide a session log)");
    Graph g = load_graph(cfg);
    require_nodes(g, NodeKind::Session, "ingest");
    std::shared_ptr<TextGenerator> gen = make_generator(cfg);
    std::vector<SessionRecord> sessions = load_sessions(cfg.sessions);
    size_t links = 0;
    std::set<NodeId> distinct;
    for (const SessionRecord& rec : sessions) {
        std::vector<NodeId> ids = generate_session_intentions(g, rec, *gen, GenParams{});
        links += ids.size();
        distinct.insert(ids.begin(), ids.end());
    }
    g.save(cfg.graph);
    return {{"sessions_processed", sessions.size()},
            {"intention_links", links},
            {"distinct_intentions", distinct.size()}};
}

nlohmann::ordered_json stage_conceptualize(const PipelineConfig& cfg) {
    Graph g = load_graph(cfg);
    require_nodes(g, NodeKind::Intention, "gen-intentions");
    std::shared_ptr<TextGenerator> gen = make_generator(cfg);
    std::vector<NodeId> intentions;
    for (const auto& [id, node] : g.nodes())
        if (node.kind == NodeKind::Intention) intentions.push_back(id);
    size_t links = 0, capped = 0;
    std::set<NodeId> distinct;
    for (const NodeId& id : intentions) {
        ConceptualizeResult r =
            conceptualize(g, id, *gen, GenParams{}, cfg.concept_cap);
        links += r.concept_ids.size();
        distinct.insert(r.concept_ids.begin(), r.concept_ids.end());
        capped += r.capped ? 1 : 0;
    }
    g.save(cfg.graph);
    return {{"intentions_processed", intentions.size()},
            {"concept_links", links},
            {"distinct_concepts", distinct.size()},
            {"capped_intentions", capped}};
}

nlohmann::ordered_json stage_classify_relations(const PipelineConfig& cfg) {
    Graph g = load_graph(cfg);
    require_nodes(g, NodeKind::Intention, "gen-intentions");
    std::shared_ptr<PlausibilityScorer> scorer = make_scorer(cfg);
    fs::path outcomes_path = cfg.reports / "relation_outcomes.jsonl";
    ensure_parent(outcomes_path);
    std::ofstream outcomes(outcomes_path, std::ios::binary);
    if (!outcomes) throw std::runtime_error("cannot write '" + outcomes_path.string() + "'");
    RelationReport rep = build_relations(g, cfg.pair_policy, *scorer,
                                         cfg.relation_threshold, &outcomes);
    g.save(cfg.graph);
    nlohmann::ordered_json accepted = nlohmann::ordered_json::object();
    for (int r = 0; r < 5; ++r)
        accepted[to_string(static_cast<Provenance>(r))] = rep.accepted_by_relation[r];
    return {{"threshold", cfg.relation_threshold},
            {"pairs_total", rep.pairs_total},
            {"pairs_skipped", rep.pairs_skipped},
            {"assertions_scored", rep.assertions_scored},
            {"accepted", accepted},
            {"edges_accepted", rep.total_accepted()},
            {"skip_log", rep.skip_log}};
}

nlohmann::ordered_json stage_select_pairs(const PipelineConfig& cfg) {
    Graph g = load_graph(cfg);
    require_nodes(g, NodeKind::Session, "ingest");
    std::vector<SessionPairSelection> pairs = select_session_pairs(g, cfg.min_metapaths);
    save_session_pairs(cfg.pairs, pairs);
    int64_t by_relation = 0, by_concept = 0, by_both = 0;
    for (const SessionPairSelection& p : pairs) {
        if (p.qualified_by == PairQualifier::RelationCount) ++by_relation;
        else if (p.qualified_by == PairQualifier::ConceptReachability) ++by_concept;
        else ++by_both;
    }
    return {{"min_metapaths", cfg.min_metapaths},
            {"pairs", pairs.size()},
            {"by_relation_count", by_relation},
            {"by_concept_reachability", by_concept},
            {"by_both", by_both}};
}

nlohmann::ordered_json stage_build_itemgraph(const PipelineConfig& cfg) {
    require_artifact(cfg.pairs, "select-pairs");
    Graph g = load_graph(cfg);
    std::vector<SessionPairSelection> pairs = load_session_pairs(cfg.pairs);
    ItemGraph item_graph = build_item_graph(g, pairs, cfg.item_graph_variant);
    ensure_parent(cfg.item_graph);
    item_graph.save(cfg.item_graph);
    return {{"variant", variant_token(cfg.item_graph_variant)},
            {"pairs_used", pairs.size()},
            {"edges", item_graph.edge_count()}};
}

nlohmann::ordered_json stage_eval_intention(const PipelineConfig& cfg) {
    Graph g = load_graph(cfg);
    require_nodes(g, NodeKind::Intention, "gen-intentions");
    std::shared_ptr<Embedder> embed = make_embedder(cfg);
    DataSplit split =
        split_edges(g, EdgeKind::SessionToIntention, cfg.eval.ratios, cfg.eval.split_seed);
    TaskSet task =
        make_intention_task(g, split, cfg.eval.intention_negatives, cfg.eval.task_seed);
    nlohmann::ordered_json out = {{"task", "session-intention"},
                                  {"negatives", cfg.eval.intention_negatives}};
    out.update(ranked_task_report(task, *embed));
    return out;
}

nlohmann::ordered_json stage_eval_concept(const PipelineConfig& cfg) {
    Graph g = load_graph(cfg);
    require_nodes(g, NodeKind::Concept, "conceptualize");
    std::shared_ptr<Embedder> embed = make_embedder(cfg);
    DataSplit split =
        split_edges(g, EdgeKind::IntentionToConcept, cfg.eval.ratios, cfg.eval.split_seed);
    TaskSet task = make_concept_task(g, split, cfg.eval.concept_pool, cfg.eval.task_seed);
    nlohmann::ordered_json out = {{"task", "intention-concept"},
                                  {"candidate_pool", cfg.eval.concept_pool}};
    out.update(ranked_task_report(task, *embed));
    return out;
}

nlohmann::ordered_json stage_eval_recovery(const PipelineConfig& cfg) {
    Graph g = load_graph(cfg);
    require_nodes(g, NodeKind::Intention, "gen-intentions");
    std::shared_ptr<Embedder> embed = make_embedder(cfg);
    std::map<NodeId, std::vector<NodeId>> groups = derive_product_intentions(g);
    DataSplit split = split_groups(groups, cfg.eval.ratios, cfg.eval.split_seed);
    TaskSet task =
        make_product_recovery_task(g, split, cfg.eval.recovery_negatives, cfg.eval.task_seed);
    nlohmann::ordered_json out = {{"task", "product-recovery"},
                                  {"negatives", cfg.eval.recovery_negatives}};
    out.update(ranked_task_report(task, *embed));
    return out;
}

nlohmann::ordered_json stage_train_rec(const PipelineConfig& cfg) {
    require_artifact(cfg.item_graph, "build-itemgraph");
    Graph g = load_graph(cfg);
    require_nodes(g, NodeKind::Session, "ingest");
    SessionDataset data = rec_dataset(cfg, g);
    ItemGraph item_graph = ItemGraph::load(cfg.item_graph);
    std::vector<double> trace;
    RecModel model = train_recommender(data, item_graph, cfg.rec, &trace);
    write_json(cfg.model, model.to_json());
    return {{"catalog", model.items.size()},
            {"train_sessions", data.train.size()},
            {"valid_sessions", data.valid.size()},
            {"test_sessions", data.test.size()},
            {"steps", trace.size()},
            {"final_loss", trace.empty() ? nlohmann::ordered_json() :
                                           nlohmann::ordered_json(trace.back())}};
}

nlohmann::ordered_json stage_eval_rec(const PipelineConfig& cfg) {
    require_artifact(cfg.model, "train-rec");
    Graph g = load_graph(cfg);
    RecModel model = RecModel::from_json(read_json(cfg.model));
    SessionDataset data = rec_dataset(cfg, g);
    RankingReport rep = evaluate_recommender(model, data.test);
    nlohmann::ordered_json out = {{"task", "next-item"},
                                  {"test_sessions", data.test.size()}};
    out.update(metrics_json(rep));
    return out;
}

nlohmann::ordered_json stage_ablate(const PipelineConfig& cfg) {
    Graph g = load_graph(cfg);
    require_nodes(g, NodeKind::Session, "ingest");
    SessionDataset data = rec_dataset(cfg, g);
    std::vector<AblationResult> results = run_ablation(g, data, cfg.rec, cfg.min_metapaths);
    nlohmann::ordered_json variants = nlohmann::ordered_json::array();
    for (const AblationResult& r : results) {
        nlohmann::ordered_json v = {{"variant", r.variant},
                                    {"item_graph_edges", r.item_graph_edges}};
        v.update(metrics_json(r.report));
        variants.push_back(v);
    }
    return {{"min_metapaths", cfg.min_metapaths}, {"variants", variants}};
}

nlohmann::ordered_json stage_diversity(const PipelineConfig& cfg) {
    Graph g = load_graph(cfg);
    require_nodes(g, NodeKind::Intention, "gen-intentions");
    std::vector<std::string> corpus;
    for (const auto& [id, node] : g.nodes())
        if (node.kind == NodeKind::Intention) corpus.push_back(node.text);
    nlohmann::ordered_json values = nlohmann::ordered_json::object();
    for (int n = 1; n <= cfg.eval.diversity_max_n; ++n) {
        std::optional<double> v = ngram_diversity(corpus, n);
        values[std::to_string(n)] = v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json();
    }
    return {{"texts", corpus.size()}, {"distinct_ngrams", values}};
}

}  // namespace

// ---- config ----

namespace {

void check_keys(const nlohmann::json& j, const std::vector<std::string>& allowed,
                const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& [k, v] : j.items())
        if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
            throw ConfigError("unknown key '" + k + "' in " + where);
}

void check_keys_like(const nlohmann::json& j, const nlohmann::ordered_json& tmpl,
                     const std::string& where) {
    std::vector<std::string> allowed;
    for (const auto& [k, v] : tmpl.items()) allowed.push_back(k);
    check_keys(j, allowed, where);
}

// Section parse: user keys overlay the defaults' JSON form, then the struct
// parser reads the merged object. Unknown keys fail fast.
template <typename T>
T parse_section(const nlohmann::json& j, const T& defaults, const std::string& where) {
    nlohmann::ordered_json merged = defaults.to_json();
    check_keys_like(j, merged, where);
    for (const auto& [k, v] : j.items()) merged[k] = v;
    return T::from_json(merged);
}

BackendChoice parse_backend(const nlohmann::json& j, const BackendChoice& defaults,
                            const std::string& where) {
    check_keys(j,
               {"kind", "endpoint", "seed", "dim", "overrides", "timeout_ms", "max_retries",
                "backoff_ms"},
               where);
    BackendChoice b = defaults;
    b.kind = j.value("kind", b.kind);
    if (b.kind != "mock" && b.kind != "http")
        throw ConfigError(where + ".kind must be \"mock\" or \"http\", got \"" + b.kind + "\"");
    b.endpoint = j.value("endpoint", b.endpoint);
    b.seed = j.value("seed", b.seed);
    b.dim = j.value("dim", b.dim);
    if (b.dim < 1) throw ConfigError(where + ".dim must be positive");
    if (j.contains("overrides")) b.overrides = j.at("overrides").get<std::string>();
    b.timeout_ms = j.value("timeout_ms", b.timeout_ms);
    b.max_retries = j.value("max_retries", b.max_retries);
    b.backoff_ms = j.value("backoff_ms", b.backoff_ms);
    return b;
}

void env_endpoint_override(BackendChoice& b, const char* var) {
    if (const char* v = std::getenv(var)) b.endpoint = v;
}

fs::path resolve(const fs::path& base, const fs::path& p) {
    return p.is_relative() && !base.empty() ? base / p : p;
}

}  // namespace

nlohmann::ordered_json PipelineConfig::to_json() const {
    nlohmann::ordered_json backend_json[3];
    const BackendChoice* choices[3] = {&generator, &scorer, &embedder};
    for (int i = 0; i < 3; ++i) {
        backend_json[i] = {{"kind", choices[i]->kind},
                           {"endpoint", choices[i]->endpoint},
                           {"seed", choices[i]->seed},
                           {"timeout_ms", choices[i]->timeout_ms},
                           {"max_retries", choices[i]->max_retries},
                           {"backoff_ms", choices[i]->backoff_ms}};
    }
    backend_json[1]["overrides"] = scorer.overrides.string();
    backend_json[2]["dim"] = embedder.dim;
    return {
        {"paths",
         {{"sessions", sessions.string()},
          {"graph", graph.string()},
          {"pairs", pairs.string()},
          {"item_graph", item_graph.string()},
          {"model", model.string()},
          {"manifest", manifest.string()},
          {"scorer_overrides", scorer_overrides.string()},
          {"reports", reports.string()},
          {"runs", runs.string()}}},
        {"backends",
         {{"generator", backend_json[0]}, {"scorer", backend_json[1]},
          {"embedder", backend_json[2]}}},
        {"relations",
         {{"threshold", relation_threshold},
          {"within_session", pair_policy.include_within_session},
          {"shared_concept", pair_policy.include_shared_concept},
          {"max_pairs_per_intention", pair_policy.max_pairs_per_intention},
          {"seed", pair_policy.seed}}},
        {"item_graph",
         {{"min_metapaths", min_metapaths}, {"variant", variant_token(item_graph_variant)}}},
        {"concepts", {{"cap", concept_cap}}},
        {"eval",
         {{"ratios", {eval.ratios.train, eval.ratios.valid, eval.ratios.test}},
          {"split_seed", eval.split_seed},
          {"task_seed", eval.task_seed},
          {"intention_negatives", eval.intention_negatives},
          {"concept_pool", eval.concept_pool},
          {"recovery_negatives", eval.recovery_negatives},
          {"diversity_max_n", eval.diversity_max_n}}},
        {"rec", rec.to_json()},
        {"synth", synth.to_json()}};
}

PipelineConfig pipeline_config_from_json(const nlohmann::json& j, const fs::path& base_dir,
                                         const std::string& config_hash) {
    PipelineConfig cfg;
    cfg.config_hash = config_hash;
    try {
        check_keys(j,
                   {"paths", "backends", "relations", "item_graph", "concepts", "eval", "rec",
                    "synth"},
                   "config");
        if (j.contains("paths")) {
            const nlohmann::json& p = j.at("paths");
            check_keys(p,
                       {"sessions", "graph", "pairs", "item_graph", "model", "manifest",
                        "scorer_overrides", "reports", "runs"},
                       "paths");
            cfg.sessions = p.value("sessions", cfg.sessions.string());
            cfg.graph = p.value("graph", cfg.graph.string());
            cfg.pairs = p.value("pairs", cfg.pairs.string());
            cfg.item_graph = p.value("item_graph", cfg.item_graph.string());
            cfg.model = p.value("model", cfg.model.string());
            cfg.manifest = p.value("manifest", cfg.manifest.string());
            cfg.scorer_overrides = p.value("scorer_overrides", cfg.scorer_overrides.string());
            cfg.reports = p.value("reports", cfg.reports.string());
            cfg.runs = p.value("runs", cfg.runs.string());
        }
        if (j.contains("backends")) {
            const nlohmann::json& b = j.at("backends");
            check_keys(b, {"generator", "scorer", "embedder"}, "backends");
            if (b.contains("generator"))
                cfg.generator = parse_backend(b.at("generator"), cfg.generator,
                                              "backends.generator");
            if (b.contains("scorer"))
                cfg.scorer = parse_backend(b.at("scorer"), cfg.scorer, "backends.scorer");
            if (b.contains("embedder"))
                cfg.embedder = parse_backend(b.at("embedder"), cfg.embedder,
                                             "backends.embedder");
        }
        if (j.contains("relations")) {
            const nlohmann::json& r = j.at("relations");
            check_keys(r,
                       {"threshold", "within_session", "shared_concept",
                        "max_pairs_per_intention", "seed"},
                       "relations");
            cfg.relation_threshold = r.value("threshold", cfg.relation_threshold);
            if (!(cfg.relation_threshold >= 0.0 && cfg.relation_threshold <= 1.0))
                throw ConfigError("relations.threshold must be in [0, 1]");
            cfg.pair_policy.include_within_session =
                r.value("within_session", cfg.pair_policy.include_within_session);
            cfg.pair_policy.include_shared_concept =
                r.value("shared_concept", cfg.pair_policy.include_shared_concept);
            cfg.pair_policy.max_pairs_per_intention =
                r.value("max_pairs_per_intention", cfg.pair_policy.max_pairs_per_intention);
            if (cfg.pair_policy.max_pairs_per_intention < 1)
                throw ConfigError("relations.max_pairs_per_intention must be positive");
            cfg.pair_policy.seed = r.value("seed", cfg.pair_policy.seed);
        }
        if (j.contains("item_graph")) {
            const nlohmann::json& m = j.at("item_graph");
            check_keys(m, {"min_metapaths", "variant"}, "item_graph");
            cfg.min_metapaths = m.value("min_metapaths", cfg.min_metapaths);
            if (cfg.min_metapaths < 1)
                throw ConfigError("item_graph.min_metapaths must be positive");
            if (m.contains("variant"))
                cfg.item_graph_variant = variant_from_token(m.at("variant").get<std::string>());
        }
        if (j.contains("concepts")) {
            const nlohmann::json& c = j.at("concepts");
            check_keys(c, {"cap"}, "concepts");
            cfg.concept_cap = c.value("cap", cfg.concept_cap);
            if (cfg.concept_cap < 1) throw ConfigError("concepts.cap must be positive");
        }
        if (j.contains("eval")) {
            const nlohmann::json& e = j.at("eval");
            check_keys(e,
                       {"ratios", "split_seed", "task_seed", "intention_negatives",
                        "concept_pool", "recovery_negatives", "diversity_max_n"},
                       "eval");
            if (e.contains("ratios")) {
                const nlohmann::json& r = e.at("ratios");
                if (!r.is_array() || r.size() != 3)
                    throw ConfigError("eval.ratios must be [train, valid, test]");
                cfg.eval.ratios.train = r[0].get<double>();
                cfg.eval.ratios.valid = r[1].get<double>();
                cfg.eval.ratios.test = r[2].get<double>();
            }
            cfg.eval.split_seed = e.value("split_seed", cfg.eval.split_seed);
            cfg.eval.task_seed = e.value("task_seed", cfg.eval.task_seed);
            cfg.eval.intention_negatives =
                e.value("intention_negatives", cfg.eval.intention_negatives);
            cfg.eval.concept_pool = e.value("concept_pool", cfg.eval.concept_pool);
            cfg.eval.recovery_negatives =
                e.value("recovery_negatives", cfg.eval.recovery_negatives);
            cfg.eval.diversity_max_n = e.value("diversity_max_n", cfg.eval.diversity_max_n);
            if (cfg.eval.intention_negatives < 1 || cfg.eval.concept_pool < 1 ||
                cfg.eval.recovery_negatives < 1)
                throw ConfigError("eval negative and pool sizes must be positive");
            if (cfg.eval.diversity_max_n < 1 || cfg.eval.diversity_max_n > 6)
                throw ConfigError("eval.diversity_max_n must be in [1, 6]");
        }
        if (j.contains("rec")) cfg.rec = parse_section(j.at("rec"), cfg.rec, "rec");
        if (j.contains("synth")) cfg.synth = parse_section(j.at("synth"), cfg.synth, "synth");
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    } catch (const RangeError& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    }

    env_endpoint_override(cfg.generator, "INTENTGRAPH_GENERATOR_ENDPOINT");
    env_endpoint_override(cfg.scorer, "INTENTGRAPH_SCORER_ENDPOINT");
    env_endpoint_override(cfg.embedder, "INTENTGRAPH_EMBEDDER_ENDPOINT");

    for (fs::path* p : {&cfg.sessions, &cfg.graph, &cfg.pairs, &cfg.item_graph, &cfg.model,
                        &cfg.manifest, &cfg.scorer_overrides, &cfg.reports, &cfg.runs}) {
        *p = resolve(base_dir, *p);
    }
    if (!cfg.scorer.overrides.empty())
        cfg.scorer.overrides = resolve(base_dir, cfg.scorer.overrides);
    return cfg;
}

PipelineConfig load_pipeline_config(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string text = buf.str();
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return pipeline_config_from_json(j, path.parent_path(), fnv1a64_hex(text));
}

void override_seeds(PipelineConfig& cfg, uint64_t seed) {
    cfg.generator.seed = seed;
    cfg.scorer.seed = seed;
    cfg.embedder.seed = seed;
    cfg.pair_policy.seed = seed;
    cfg.eval.split_seed = seed;
    cfg.eval.task_seed = seed;
    cfg.rec.seed = seed;
    cfg.synth.seed = seed;
}

namespace {

HttpConfig http_config(const BackendChoice& b, const std::string& name) {
    if (b.endpoint.empty())
        throw ConfigError("backends." + name + " uses http but has no endpoint");
    HttpConfig h;
    h.base_url = b.endpoint;
    h.timeout_ms = b.timeout_ms;
    h.max_retries = b.max_retries;
    h.backoff_ms = b.backoff_ms;
    return h;
}

}  // namespace

std::shared_ptr<TextGenerator> make_generator(const PipelineConfig& cfg) {
    if (cfg.generator.kind == "mock")
        return std::make_shared<MockGenerator>(cfg.generator.seed);
    return std::make_shared<HttpGenerator>(http_config(cfg.generator, "generator"));
}

std::shared_ptr<PlausibilityScorer> make_scorer(const PipelineConfig& cfg) {
    if (cfg.scorer.kind != "mock")
        return std::make_shared<HttpScorer>(http_config(cfg.scorer, "scorer"));
    auto scorer = std::make_shared<MockScorer>(cfg.scorer.seed);
    if (!cfg.scorer.overrides.empty()) {
        require_artifact(cfg.scorer.overrides, "synth (or drop backends.scorer.overrides)");
        scorer->load_overrides(cfg.scorer.overrides);
    }
    return scorer;
}

std::shared_ptr<Embedder> make_embedder(const PipelineConfig& cfg) {
    if (cfg.embedder.kind == "mock")
        return std::make_shared<HashEmbedder>(cfg.embedder.dim, cfg.embedder.seed);
    return std::make_shared<HttpEmbedder>(http_config(cfg.embedder, "embedder"),
                                          cfg.embedder.dim);
}

BackendSet make_backends(const PipelineConfig& cfg) {
    return {make_generator(cfg), make_scorer(cfg), make_embedder(cfg)};
}

// ---- session pair artifact ----

void save_session_pairs(const fs::path& path, const std::vector<SessionPairSelection>& pairs) {
    std::ostringstream out;
    for (const SessionPairSelection& p : pairs) {
        out << p.s1 << '\t' << p.s2 << '\t' << p.relation_path_count << '\t'
            << (p.concept_reachable ? 1 : 0) << '\t' << to_string(p.qualified_by) << '\n';
    }
    write_text(path, out.str());
}

std::vector<SessionPairSelection> load_session_pairs(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DependencyError("missing '" + path.string() + "'");
    std::vector<SessionPairSelection> pairs;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        size_t start = 0;
        while (true) {
            size_t tab = line.find('\t', start);
            fields.push_back(line.substr(start, tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        if (fields.size() != 5)
            throw ParseError("expected 5 tab-separated fields, got " +
                                 std::to_string(fields.size()),
                             line_no);
        SessionPairSelection p;
        p.s1 = fields[0];
        p.s2 = fields[1];
        try {
            p.relation_path_count = std::stoi(fields[2]);
        } catch (const std::exception&) {
            throw ParseError("bad metapath count '" + fields[2] + "'", line_no);
        }
        if (fields[3] != "0" && fields[3] != "1")
            throw ParseError("bad reachability flag '" + fields[3] + "'", line_no);
        p.concept_reachable = fields[3] == "1";
        bool known = false;
        for (int q = 0; q < 3; ++q) {
            if (fields[4] == to_string(static_cast<PairQualifier>(q))) {
                p.qualified_by = static_cast<PairQualifier>(q);
                known = true;
                break;
            }
        }
        if (!known) throw ParseError("unknown qualifier '" + fields[4] + "'", line_no);
        pairs.push_back(std::move(p));
    }
    return pairs;
}

// ---- dispatch ----

const std::vector<std::string>& stage_names() {
    static const std::vector<std::string> names = {
        "synth",          "ingest",       "gen-intentions", "conceptualize",
        "classify-relations", "select-pairs", "build-itemgraph", "eval-intention",
        "eval-concept",   "eval-recovery", "train-rec",     "eval-rec",
        "ablate",         "diversity"};
    return names;
}

nlohmann::ordered_json run_stage(const PipelineConfig& cfg, const std::string& stage) {
    nlohmann::ordered_json payload;
    if (stage == "synth") payload = stage_synth(cfg);
    else if (stage == "ingest") payload = stage_ingest(cfg);
    else if (stage == "gen-intentions") payload = stage_gen_intentions(cfg);
    else if (stage == "conceptualize") payload = stage_conceptualize(cfg);
    else if (stage == "classify-relations") payload = stage_classify_relations(cfg);
    else if (stage == "select-pairs") payload = stage_select_pairs(cfg);
    else if (stage == "build-itemgraph") payload = stage_build_itemgraph(cfg);
    else if (stage == "eval-intention") payload = stage_eval_intention(cfg);
    else if (stage == "eval-concept") payload = stage_eval_concept(cfg);
    else if (stage == "eval-recovery") payload = stage_eval_recovery(cfg);
    else if (stage == "train-rec") payload = stage_train_rec(cfg);
    else if (stage == "eval-rec") payload = stage_eval_rec(cfg);
    else if (stage == "ablate") payload = stage_ablate(cfg);
    else if (stage == "diversity") payload = stage_diversity(cfg);
    else throw ConfigError("unknown stage '" + stage + "'");

    nlohmann::ordered_json report;
    report["stage"] = stage;
    report["config"] = cfg.config_hash;
    report.update(payload);
    write_json(cfg.reports / (stage + ".json"), report);
    return report;
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return 2;
    if (dynamic_cast<const DependencyError*>(&e)) return 3;
    if (dynamic_cast<const ParseError*>(&e)) return 4;
    if (dynamic_cast<const SchemaError*>(&e)) return 4;
    if (dynamic_cast<const RangeError*>(&e)) return 4;
    if (dynamic_cast<const NotFoundError*>(&e)) return 4;
    if (dynamic_cast<const BackendError*>(&e)) return 5;
    if (dynamic_cast<const TrainingError*>(&e)) return 6;
    return 7;
}

nlohmann::ordered_json error_report(const std::string& stage, const std::exception& e) {
    const char* kind = "internal";
    switch (exit_code_for(e)) {
        case 2: kind = "config"; break;
        case 3: kind = "dependency"; break;
        case 4: kind = "data"; break;
        case 5: kind = "backend"; break;
        case 6: kind = "training"; break;
        default: break;
    }
    return {{"error", kind},
            {"stage", stage},
            {"message", e.what()},
            {"exit_code", exit_code_for(e)}};
}

}  // namespace ig
