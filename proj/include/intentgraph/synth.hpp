#pragma once
// Synthetic themed session corpus with planted structure. Every item belongs
// to one theme; sessions draw from a single theme's catalog with a Zipf-ish
// preference for low-rank items, except for a noise fraction of slots filled
// from other themes. Item titles lead with the theme token so the mock
// generator maps each clean session to that theme's intention templates, and
// the emitted scorer override table accepts exactly the within-theme
// simultaneous and causal assertions. Relation metapaths between same-theme
// sessions therefore exist by construction and the distilled item graph
// connects only same-theme items when the noise rate is zero.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "intentgraph/intentions.hpp"

namespace ig {

struct SyntheticSpec {
    int n_themes = 3;
    int items_per_theme = 200;
    int n_sessions = 5000;
    int min_session_len = 3;
    int max_session_len = 4;
    double noise_rate = 0.1;
    uint64_t seed = 0;

    nlohmann::ordered_json to_json() const;
    static SyntheticSpec from_json(const nlohmann::json& j);

    bool operator==(const SyntheticSpec&) const = default;
};

// Largest n_themes a spec may ask for; bounded by the word list.
int max_synthetic_themes();

struct SyntheticData {
    std::vector<SessionRecord> sessions;
    // Spec echo plus planted structure: theme list, item -> theme,
    // session -> {theme, noise_items}, per-theme intention and concept texts.
    nlohmann::ordered_json manifest;
    // Assertion text -> plausibility for MockScorer::load_overrides. Covers
    // all relation statements over the mock intention universe.
    std::map<std::string, double> scorer_overrides;
};

SyntheticData make_synthetic(const SyntheticSpec& spec);

}  // namespace ig
