#pragma once
// Intention abstraction: render the concept-extraction prompt per intention,
// parse the comma-separated completion into 1-3 word phrases, and attach
// Concept nodes. Prompt bytes are frozen by a golden file.

#include <string>
#include <vector>

#include "intentgraph/backends.hpp"
#include "intentgraph/graph.hpp"

namespace ig {

std::string render_concept_prompt(const std::string& intention);

// Split on commas; trim; lowercase; drop empties and phrases over 3 words;
// dedup preserving first occurrence.
std::vector<std::string> parse_concepts(const std::string& completion);

struct ConceptualizeResult {
    std::vector<NodeId> concept_ids;  // in parse order, capped
    bool capped = false;              // completion exceeded the per-intention cap
};

// Adds Concept nodes (coalesced by normalized text) and score-1.0
// IntentionToConcept edges. At most `cap` concepts are kept per intention;
// overflow sets the capped flag for the run report. Backend errors are
// rethrown with the intention id attached.
ConceptualizeResult conceptualize(Graph& g, const NodeId& intention_id, TextGenerator& gen,
                                  const GenParams& params, int cap = 8);

}  // namespace ig
