#include "intentgraph/concepts.hpp"

#include <cctype>

#include "intentgraph/util.hpp"

namespace ig {

namespace {

constexpr std::string_view kConceptPromptHead =
    "I will give you an INTENTION. You need to give several phrases containing 1-3 words for the "
    "ABSTRACT INTENTION of this INTENTION. You must return your answer in the following format: "
    "phrases1,phrases2,phrases3,...., which means you can't return anything other than answers.\n"
    "These abstract intention words should fulfill the following requirements:\n"
    "1. The ABSTRACT INTENTION phrases can well represent the INTENTION.\n"
    "2. The ABSTRACT INTENTION phrases don't have a lot of less relevant word meanings. For "
    "example, \"spring\" is not a good abstract intention word because it can represent both a "
    "coiled metal device and the season of the year.\n"
    "3. The ABSTRACT INTENTION phrases of the same INTENTION cannot be semantically similar to "
    "each other. For example, health and wellness are two close synonyms, so they can't be "
    "together.\n"
    "INTENTION: Moisturize dry skin while enjoying a special effect bath.\n"
    "Your answer: hydration, skincare\n"
    "INTENTION: Create a festive atmosphere for a Christmas party.\n"
    "Your answer: party planning, celebration, decorations, holiday spirit\n"
    "INTENTION: ";
constexpr std::string_view kConceptPromptTail = ".\nYour answer:";

}  // namespace

std::string render_concept_prompt(const std::string& intention) {
    std::string text = trim(intention);
    while (!text.empty() && (text.back() == '.' || is_space(text.back()))) text.pop_back();
    std::string out(kConceptPromptHead);
    out += text;
    out += kConceptPromptTail;
    return out;
}

namespace {

// Concept phrases allow only letters, digits, spaces and internal hyphens.
std::string scrub_phrase(std::string_view s) {
    std::string kept;
    kept.reserve(s.size());
    for (char c : s) {
        unsigned char u = static_cast<unsigned char>(c);
        if (std::isalnum(u) || c == '-' || is_space(c)) kept.push_back(c);
    }
    return normalize_phrase(kept);
}

}  // namespace

std::vector<std::string> parse_concepts(const std::string& completion) {
    std::vector<std::string> out;
    size_t pos = 0;
    while (pos <= completion.size()) {
        size_t comma = completion.find(',', pos);
        if (comma == std::string::npos) comma = completion.size();
        std::string phrase = scrub_phrase(completion.substr(pos, comma - pos));
        pos = comma + 1;
        if (phrase.empty() || word_count(phrase) > 3) continue;
        bool dup = false;
        for (auto& s : out)
            if (s == phrase) {
                dup = true;
                break;
            }
        if (!dup) out.push_back(std::move(phrase));
    }
    return out;
}

ConceptualizeResult conceptualize(Graph& g, const NodeId& intention_id, TextGenerator& gen,
                                  const GenParams& params, int cap) {
    const Node& intn = g.node(intention_id);
    if (intn.kind != NodeKind::Intention)
        throw SchemaError("'" + intention_id + "' is not an Intention node");
    std::string completion;
    try {
        completion = gen.generate(render_concept_prompt(intn.text), params);
    } catch (const BackendError& e) {
        throw BackendError("intention '" + intention_id + "': " + e.what());
    }
    ConceptualizeResult res;
    auto phrases = parse_concepts(completion);
    if (cap > 0 && phrases.size() > static_cast<size_t>(cap)) {
        phrases.resize(static_cast<size_t>(cap));
        res.capped = true;
    }
    for (const auto& phrase : phrases) {
        NodeId cid = g.add_node(NodeKind::Concept, phrase);
        g.add_edge(intention_id, cid, EdgeKind::IntentionToConcept, 1.0);
        res.concept_ids.push_back(cid);
    }
    return res;
}

}  // namespace ig
