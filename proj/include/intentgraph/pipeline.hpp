#pragma once
// Stage runner behind the command-line tool. A JSON config file names every
// artifact path, backend, threshold and seed; each stage reads its inputs
// from those paths, writes its artifacts and a deterministic JSON report, and
// can be re-run to byte-identical output. Missing prerequisites (a file a
// prior stage should have produced, or required graph content such as
// intention nodes) raise DependencyError; malformed configs raise
// ConfigError. Timing never enters stage reports; the CLI records wall-clock
// data separately under the run directory.

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "intentgraph/backends.hpp"
#include "intentgraph/eval.hpp"
#include "intentgraph/metapath.hpp"
#include "intentgraph/recmodel.hpp"
#include "intentgraph/relations.hpp"
#include "intentgraph/synth.hpp"

namespace ig {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DependencyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BackendChoice {
    std::string kind = "mock";  // "mock" or "http"
    std::string endpoint;       // http only; INTENTGRAPH_*_ENDPOINT overrides
    uint64_t seed = 0;          // mock only
    int dim = 64;               // embedders only
    std::filesystem::path overrides;  // mock scorer only, optional score table
    int timeout_ms = 30000;
    int max_retries = 3;
    int backoff_ms = 100;
};

struct EvalConfig {
    SplitRatios ratios{};
    uint64_t split_seed = 0;
    uint64_t task_seed = 0;
    int intention_negatives = 30;
    int concept_pool = 500;
    int recovery_negatives = 10;
    int diversity_max_n = 4;
};

struct PipelineConfig {
    // Relative paths resolve against the config file's directory.
    std::filesystem::path sessions = "data/sessions.jsonl";
    std::filesystem::path graph = "data/graph.jsonl";
    std::filesystem::path pairs = "data/session_pairs.tsv";
    std::filesystem::path item_graph = "data/item_graph.tsv";
    std::filesystem::path model = "models/recommender.json";
    std::filesystem::path manifest = "data/manifest.json";
    std::filesystem::path scorer_overrides = "data/scorer_overrides.json";
    std::filesystem::path reports = "reports";
    std::filesystem::path runs = "runs";

    BackendChoice generator;
    BackendChoice scorer;
    BackendChoice embedder;

    double relation_threshold = 0.9;
    PairPolicy pair_policy{};
    int min_metapaths = 6;
    ItemGraphVariant item_graph_variant = ItemGraphVariant::Full;
    int concept_cap = 8;

    EvalConfig eval{};
    RecConfig rec{};
    SyntheticSpec synth{};

    // FNV-1a hex of the raw config bytes; echoed into every report.
    std::string config_hash;

    nlohmann::ordered_json to_json() const;
};

// Parses, validates (unknown keys and out-of-range values are ConfigError),
// applies endpoint environment overrides and resolves relative paths.
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

// Same, from an already-parsed object (hash and base dir supplied).
PipelineConfig pipeline_config_from_json(const nlohmann::json& j,
                                         const std::filesystem::path& base_dir,
                                         const std::string& config_hash);

// Replaces every stage seed (synth, pair policy, eval splits and tasks,
// recommender, mock backends) for one-flag reproducibility sweeps.
void override_seeds(PipelineConfig& cfg, uint64_t seed);

// Mock kinds honor seeds (and, for the scorer, an optional override table);
// http kinds require an endpoint.
std::shared_ptr<TextGenerator> make_generator(const PipelineConfig& cfg);
std::shared_ptr<PlausibilityScorer> make_scorer(const PipelineConfig& cfg);
std::shared_ptr<Embedder> make_embedder(const PipelineConfig& cfg);
BackendSet make_backends(const PipelineConfig& cfg);

// Session-pair selection artifact: "s1 \t s2 \t count \t reachable \t
// qualifier" rows in ascending order.
void save_session_pairs(const std::filesystem::path& path,
                        const std::vector<SessionPairSelection>& pairs);
std::vector<SessionPairSelection> load_session_pairs(const std::filesystem::path& path);

// Canonical stage order: synth, ingest, gen-intentions, conceptualize,
// classify-relations, select-pairs, build-itemgraph, eval-intention,
// eval-concept, eval-recovery, train-rec, eval-rec, ablate, diversity.
const std::vector<std::string>& stage_names();

// Runs one stage: validates prerequisites, writes artifacts, writes the
// deterministic report to <reports>/<stage>.json and returns it.
nlohmann::ordered_json run_stage(const PipelineConfig& cfg, const std::string& stage);

// Process exit taxonomy: 2 config/usage, 3 missing dependency, 4 data
// schema/parse/range, 5 backend, 6 training, 7 anything else.
int exit_code_for(const std::exception& e);

// Machine-readable failure record for stderr.
nlohmann::ordered_json error_report(const std::string& stage, const std::exception& e);

}  // namespace ig
