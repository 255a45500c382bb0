#pragma once
// Session intention generation: render the listing prompt, call a generation
// backend, parse the "intention k: ..." completion lines and attach Intention
// nodes to the session.
//
// Prompt rendering is frozen by golden files. Item lines are
// "k. <title> — <description first 200 chars>", one per item in session
// order; the description part is omitted when absent.

#include <filesystem>
#include <string>
#include <vector>

#include "intentgraph/backends.hpp"
#include "intentgraph/graph.hpp"

namespace ig {

struct SessionItem {
    std::string id;
    std::string title;
    std::string desc;
};

struct SessionRecord {
    std::string session_id;
    std::vector<SessionItem> items;  // at least one, chronological order
};

struct RawIntention {
    int line_index;          // 0-based line in the completion
    std::string raw;         // trimmed source line
    std::string normalized;  // lowercase, no list tag, no terminal punctuation
};

std::string render_intention_prompt(const SessionRecord& session);

// Accepts every non-empty line; strips an optional "intention <k>:" tag,
// bullets, numbering and surrounding quotes; normalizes; drops empties,
// normalized duplicates and lines longer than 15 words.
std::vector<RawIntention> parse_intentions(const std::string& completion);

// Adds the session's items and the session node plus ItemToSession edges
// (position = chronological index). Returns the session node id.
NodeId ingest_session(Graph& g, const SessionRecord& session);

// Renders, generates, parses; every parsed intention becomes an Intention
// node with a score-1.0 SessionToIntention edge. Returns node ids in parse
// order. Backend errors are rethrown with the session id attached. The
// session must have been ingested.
std::vector<NodeId> generate_session_intentions(Graph& g, const SessionRecord& session,
                                                TextGenerator& gen, const GenParams& params);

// JSON-lines: {"session_id":...,"items":[{"id":...,"title":...,"desc":...}]}.
std::vector<SessionRecord> load_sessions(const std::filesystem::path& path);
void save_sessions(const std::filesystem::path& path, const std::vector<SessionRecord>& sessions);

}  // namespace ig
