#include "intentgraph/intentions.hpp"

#include <fstream>

#include "intentgraph/util.hpp"
#include "json.hpp"

namespace ig {

namespace {

constexpr std::string_view kPromptHead = "Below is a user's chronological record list:";
constexpr std::string_view kPromptTail =
    "Explain the basic intentions of this user exactly. Output several different intentions one "
    "by one to answer the following question: Users buy these items because they want to:\n"
    "intention 1: {a simple verb phrase within 10 words}\n"
    "intention 2: {a simple verb phrase within 10 words}\n"
    "...";
constexpr size_t kDescLimit = 200;
constexpr size_t kMaxIntentionWords = 15;

bool is_terminal_punct(char c) {
    return c == '.' || c == '!' || c == '?' || c == ':' || c == ';' || c == ',';
}

// Strips "intention <k>:" tags, "k." / "k)" numbering, bullets and matching
// surrounding quotes. Repeats until stable so "1. intention 1: x" unwraps.
std::string strip_list_markup(std::string s) {
    for (;;) {
        std::string before = s;
        s = trim(s);
        std::string lower = to_lower(s);
        if (lower.rfind("intention", 0) == 0) {
            size_t p = 9;
            while (p < s.size() && is_space(s[p])) ++p;
            size_t d = p;
            while (d < s.size() && std::isdigit(static_cast<unsigned char>(s[d]))) ++d;
            if (d > p && d < s.size() && s[d] == ':') s = s.substr(d + 1);
        }
        if (!s.empty() && (s[0] == '-' || s[0] == '*')) s = s.substr(1);
        size_t d = 0;
        while (d < s.size() && std::isdigit(static_cast<unsigned char>(s[d]))) ++d;
        if (d > 0 && d < s.size() && (s[d] == '.' || s[d] == ')')) s = s.substr(d + 1);
        s = trim(s);
        if (s.size() >= 2) {
            char a = s.front(), b = s.back();
            if ((a == '"' && b == '"') || (a == '\'' && b == '\''))
                s = s.substr(1, s.size() - 2);
        }
        if (s == before) return s;
    }
}

}  // namespace

std::string render_intention_prompt(const SessionRecord& session) {
    std::string out(kPromptHead);
    int k = 0;
    for (const auto& item : session.items) {
        out += "\n" + std::to_string(++k) + ". " + trim(item.title);
        std::string desc = trim(item.desc);
        if (!desc.empty()) {
            if (desc.size() > kDescLimit) desc = trim(desc.substr(0, kDescLimit));
            out += " \xe2\x80\x94 " + desc;
        }
    }
    out += "\n";
    out += kPromptTail;
    return out;
}

std::vector<RawIntention> parse_intentions(const std::string& completion) {
    std::vector<RawIntention> out;
    std::vector<std::string> seen;
    int line_index = -1;
    size_t pos = 0;
    while (pos <= completion.size()) {
        size_t eol = completion.find('\n', pos);
        if (eol == std::string::npos) eol = completion.size();
        std::string line = completion.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_index;
        std::string raw = trim(line);
        if (raw.empty()) {
            if (pos > completion.size()) break;
            continue;
        }
        std::string body = strip_list_markup(raw);
        while (!body.empty() && is_terminal_punct(body.back())) body.pop_back();
        std::string norm = normalize_phrase(body);
        if (norm.empty() || word_count(norm) > kMaxIntentionWords) continue;
        bool dup = false;
        for (auto& s : seen)
            if (s == norm) {
                dup = true;
                break;
            }
        if (dup) continue;
        seen.push_back(norm);
        out.push_back(RawIntention{line_index, raw, norm});
        if (pos > completion.size()) break;
    }
    return out;
}

NodeId ingest_session(Graph& g, const SessionRecord& session) {
    if (session.items.empty())
        throw SchemaError("session '" + session.session_id + "' has no items");
    NodeId sid = g.add_node(NodeKind::Session, session.session_id);
    int32_t pos = 0;
    for (const auto& item : session.items) {
        NodeId iid = g.add_node(NodeKind::Item, item.title, {{"source_id", item.id}});
        g.add_edge(iid, sid, EdgeKind::ItemToSession, 1.0, std::nullopt, pos++);
    }
    return sid;
}

std::vector<NodeId> generate_session_intentions(Graph& g, const SessionRecord& session,
                                                TextGenerator& gen, const GenParams& params) {
    NodeId sid = Graph::make_id(NodeKind::Session, session.session_id);
    if (!g.has_node(sid))
        throw NotFoundError("session '" + session.session_id + "' not ingested");
    std::string completion;
    try {
        completion = gen.generate(render_intention_prompt(session), params);
    } catch (const BackendError& e) {
        throw BackendError("session '" + session.session_id + "': " + e.what());
    }
    std::vector<NodeId> ids;
    for (const auto& ri : parse_intentions(completion)) {
        NodeId iid = g.add_node(NodeKind::Intention, ri.normalized);
        g.add_edge(sid, iid, EdgeKind::SessionToIntention, 1.0);
        ids.push_back(iid);
    }
    return ids;
}

std::vector<SessionRecord> load_sessions(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
    std::vector<SessionRecord> out;
    std::string line;
    size_t line_no = 0;
    using json = nlohmann::json;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError(std::string("invalid JSON: ") + e.what(), line_no);
        }
        try {
            SessionRecord rec;
            rec.session_id = j.at("session_id").get<std::string>();
            if (trim(rec.session_id).empty()) throw SchemaError("empty session_id");
            if (!j.contains("items") || !j["items"].is_array() || j["items"].empty())
                throw SchemaError("session '" + rec.session_id + "' needs a non-empty items array");
            for (auto& ji : j["items"]) {
                SessionItem item;
                item.id = ji.at("id").get<std::string>();
                item.title = ji.at("title").get<std::string>();
                if (trim(item.title).empty())
                    throw SchemaError("item '" + item.id + "' has an empty title");
                if (ji.contains("desc")) item.desc = ji["desc"].get<std::string>();
                rec.items.push_back(std::move(item));
            }
            out.push_back(std::move(rec));
        } catch (const json::exception& e) {
            throw ParseError(std::string("bad session record: ") + e.what(), line_no);
        } catch (const SchemaError& e) {
            throw ParseError(e.what(), line_no);
        }
    }
    return out;
}

void save_sessions(const std::filesystem::path& path, const std::vector<SessionRecord>& sessions) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    using json = nlohmann::ordered_json;
    for (const auto& s : sessions) {
        json j;
        j["session_id"] = s.session_id;
        j["items"] = json::array();
        for (const auto& item : s.items) {
            json ji;
            ji["id"] = item.id;
            ji["title"] = item.title;
            if (!item.desc.empty()) ji["desc"] = item.desc;
            j["items"].push_back(std::move(ji));
        }
        out << j.dump() << "\n";
    }
}

}  // namespace ig
