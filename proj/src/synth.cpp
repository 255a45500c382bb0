#include "intentgraph/synth.hpp"

#include <algorithm>
#include <cstdio>

#include "intentgraph/backends.hpp"
#include "intentgraph/graph.hpp"
#include "intentgraph/relations.hpp"
#include "intentgraph/rng.hpp"

namespace ig {
namespace {

// Single lowercase alnum tokens: the theme must survive tokenize_alnum as
// the first title token for the mock generator's majority vote.
const char* kThemeWords[] = {"chess",  "tea",     "yoga",   "camping",   "paint",   "guitar",
                             "baking", "cycling", "astro",  "pottery",   "garden",  "fishing"};
const char* kNounWords[] = {"set",  "kit",   "guide", "board", "mat",  "tool",
                            "case", "stand", "pack",  "book",  "lamp", "timer"};

constexpr int kNumThemeWords = static_cast<int>(sizeof(kThemeWords) / sizeof(kThemeWords[0]));
constexpr int kNumNounWords = static_cast<int>(sizeof(kNounWords) / sizeof(kNounWords[0]));

void validate(const SyntheticSpec& s) {
    if (s.n_themes < 1 || s.n_themes > kNumThemeWords)
        throw RangeError("n_themes must be in [1, " + std::to_string(kNumThemeWords) + "], got " +
                         std::to_string(s.n_themes));
    if (s.items_per_theme < 1)
        throw RangeError("items_per_theme must be positive, got " +
                         std::to_string(s.items_per_theme));
    if (s.n_sessions < 1)
        throw RangeError("n_sessions must be positive, got " + std::to_string(s.n_sessions));
    if (s.min_session_len < 1 || s.min_session_len > s.max_session_len)
        throw RangeError("session length range [" + std::to_string(s.min_session_len) + ", " +
                         std::to_string(s.max_session_len) + "] is invalid");
    if (s.max_session_len > s.items_per_theme)
        throw RangeError("max_session_len " + std::to_string(s.max_session_len) +
                         " exceeds items_per_theme " + std::to_string(s.items_per_theme));
    if (!(s.noise_rate >= 0.0 && s.noise_rate <= 1.0))
        throw RangeError("noise_rate must be in [0, 1], got " + std::to_string(s.noise_rate));
}

// Zipf-ish within-theme popularity; rank r draws with weight 1 / (r + 5).
size_t draw_rank(Rng& rng, const std::vector<double>& cum) {
    double u = rng.next_double() * cum.back();
    return static_cast<size_t>(std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
}

}  // namespace

int max_synthetic_themes() { return kNumThemeWords; }

nlohmann::ordered_json SyntheticSpec::to_json() const {
    return {{"n_themes", n_themes},
            {"items_per_theme", items_per_theme},
            {"n_sessions", n_sessions},
            {"min_session_len", min_session_len},
            {"max_session_len", max_session_len},
            {"noise_rate", noise_rate},
            {"seed", seed}};
}

SyntheticSpec SyntheticSpec::from_json(const nlohmann::json& j) {
    SyntheticSpec s;
    s.n_themes = j.at("n_themes").get<int>();
    s.items_per_theme = j.at("items_per_theme").get<int>();
    s.n_sessions = j.at("n_sessions").get<int>();
    s.min_session_len = j.at("min_session_len").get<int>();
    s.max_session_len = j.at("max_session_len").get<int>();
    s.noise_rate = j.at("noise_rate").get<double>();
    s.seed = j.at("seed").get<uint64_t>();
    return s;
}

SyntheticData make_synthetic(const SyntheticSpec& spec) {
    validate(spec);
    SyntheticData out;

    struct ThemeCatalog {
        std::string word;
        std::vector<SessionItem> items;
    };
    std::vector<ThemeCatalog> themes(spec.n_themes);
    for (int t = 0; t < spec.n_themes; ++t) {
        themes[t].word = kThemeWords[t];
        for (int k = 0; k < spec.items_per_theme; ++k) {
            const char* noun = kNounWords[k % kNumNounWords];
            int series = k / kNumNounWords + 1;
            char id[64];
            std::snprintf(id, sizeof(id), "%s-%03d", themes[t].word.c_str(), k + 1);
            SessionItem item;
            item.id = id;
            item.title = themes[t].word + " " + noun + std::to_string(series);
            item.desc = "rank " + std::to_string(k + 1) + " " + themes[t].word + " " + noun;
            themes[t].items.push_back(std::move(item));
        }
    }

    std::vector<double> cum(spec.items_per_theme);
    double acc = 0.0;
    for (int r = 0; r < spec.items_per_theme; ++r) {
        acc += 1.0 / (r + 5.0);
        cum[r] = acc;
    }

    Rng rng(spec.seed);
    Rng session_rng = rng.fork("sessions");
    nlohmann::ordered_json session_manifest = nlohmann::ordered_json::object();
    for (int s = 0; s < spec.n_sessions; ++s) {
        int theme = s % spec.n_themes;
        int len = spec.min_session_len +
                  static_cast<int>(session_rng.next_below(
                      static_cast<uint64_t>(spec.max_session_len - spec.min_session_len + 1)));
        SessionRecord rec;
        char sid[32];
        std::snprintf(sid, sizeof(sid), "synth-%05d", s + 1);
        rec.session_id = sid;
        int noise_items = 0;
        std::vector<std::string> seen;
        while (static_cast<int>(rec.items.size()) < len) {
            int pick_theme = theme;
            bool noisy = session_rng.next_double() < spec.noise_rate;
            if (noisy && spec.n_themes > 1) {
                pick_theme = static_cast<int>(
                    session_rng.next_below(static_cast<uint64_t>(spec.n_themes - 1)));
                if (pick_theme >= theme) ++pick_theme;
            }
            const SessionItem& item = themes[pick_theme].items[draw_rank(session_rng, cum)];
            if (std::find(seen.begin(), seen.end(), item.id) != seen.end()) continue;
            seen.push_back(item.id);
            rec.items.push_back(item);
            if (pick_theme != theme) ++noise_items;
        }
        session_manifest[rec.session_id] = {{"theme", themes[theme].word},
                                            {"noise_items", noise_items}};
        out.sessions.push_back(std::move(rec));
    }

    // One entry per theme: the three mock intention texts and the concepts
    // the mock concept rule derives from them (theme word plus "verb theme").
    nlohmann::ordered_json intment = nlohmann::ordered_json::object();
    nlohmann::ordered_json conman = nlohmann::ordered_json::object();
    struct ThemedText {
        std::string text;
        int theme;
    };
    std::vector<ThemedText> universe;
    for (int t = 0; t < spec.n_themes; ++t) {
        std::vector<std::string> texts = mock_intention_texts(themes[t].word);
        nlohmann::ordered_json concepts = nlohmann::ordered_json::array();
        concepts.push_back(themes[t].word);
        for (const std::string& text : texts) {
            universe.push_back({text, t});
            std::vector<std::string> toks = tokenize_alnum(text);
            concepts.push_back(toks[0] + " " + themes[t].word);
        }
        intment[themes[t].word] = texts;
        conman[themes[t].word] = concepts;
    }

    // Every relation statement over the intention universe, both argument
    // orders, so classify_pair never falls back to hash scores. Within-theme
    // simultaneous and causal assertions pass the 0.9 threshold; everything
    // else fails it.
    for (size_t a = 0; a < universe.size(); ++a) {
        for (size_t b = a + 1; b < universe.size(); ++b) {
            bool same = universe[a].theme == universe[b].theme;
            for (RelationType rel : {RelationType::Precedence, RelationType::Succession,
                                     RelationType::Simultaneous, RelationType::Cause,
                                     RelationType::Result}) {
                bool accept =
                    same && (rel == RelationType::Simultaneous || rel == RelationType::Cause);
                double score = accept ? 0.95 : 0.05;
                out.scorer_overrides[render_assertion(universe[a].text, universe[b].text, rel)] =
                    score;
                out.scorer_overrides[render_assertion(universe[b].text, universe[a].text, rel)] =
                    score;
            }
        }
    }

    nlohmann::ordered_json items = nlohmann::ordered_json::object();
    nlohmann::ordered_json theme_list = nlohmann::ordered_json::array();
    for (const ThemeCatalog& tc : themes) {
        theme_list.push_back(tc.word);
        for (const SessionItem& item : tc.items)
            items[item.id] = {{"title", item.title}, {"theme", tc.word}};
    }
    out.manifest = {{"spec", spec.to_json()},   {"themes", theme_list},
                    {"items", items},           {"sessions", session_manifest},
                    {"intentions", intment},    {"concepts", conman},
                    {"scorer_statements", out.scorer_overrides.size()}};
    return out;
}

}  // namespace ig
