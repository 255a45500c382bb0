#include "intentgraph/backends.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <thread>

#include "httplib.h"
#include "intentgraph/rng.hpp"
#include "intentgraph/util.hpp"
#include "json.hpp"

namespace ig {

namespace {

using json = nlohmann::json;

json post_json(const HttpConfig& cfg, const std::string& path, const json& body) {
    httplib::Client cli(cfg.base_url);
    time_t sec = cfg.timeout_ms / 1000;
    time_t usec = (cfg.timeout_ms % 1000) * 1000;
    cli.set_connection_timeout(sec, usec);
    cli.set_read_timeout(sec, usec);
    cli.set_write_timeout(sec, usec);

    std::string payload = body.dump();
    std::string last_error;
    int attempts = std::max(1, cfg.max_retries);
    for (int attempt = 1; attempt <= attempts; ++attempt) {
        if (attempt > 1) {
            int delay = cfg.backoff_ms << (attempt - 2);
            std::this_thread::sleep_for(std::chrono::milliseconds(delay));
        }
        auto res = cli.Post(path, payload, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 200 && res->status < 300) {
            try {
                return json::parse(res->body);
            } catch (const json::exception& e) {
                throw BackendError("POST " + path + ": invalid JSON response: " + e.what());
            }
        }
        if (res->status >= 400 && res->status < 500)
            throw BackendError("POST " + path + ": status " + std::to_string(res->status));
        last_error = "status " + std::to_string(res->status);
    }
    throw BackendError("POST " + path + " failed after " + std::to_string(attempts) +
                       " attempts: " + last_error);
}

constexpr std::string_view kIntentionMarker = "Users buy these items because they want to:";
constexpr std::string_view kConceptSuffix = "Your answer:";
constexpr std::string_view kConceptQuery = "INTENTION: ";

const char* kIntentionTemplates[3] = {
    "enjoy %s sessions at home",
    "improve %s skills with new gear",
    "prepare %s evenings with friends",
};

std::string fill(const char* tpl, const std::string& theme) {
    std::string out(tpl);
    size_t at = out.find("%s");
    out.replace(at, 2, theme);
    return out;
}

// Item lines look like "3. Chess board12 — long description". The theme of a
// session is the majority first title token, ties to the earliest.
std::optional<std::string> mock_intentions(const std::string& prompt) {
    if (prompt.find(kIntentionMarker) == std::string::npos) return std::nullopt;
    std::vector<std::string> titles;
    size_t pos = 0;
    while (pos < prompt.size()) {
        size_t eol = prompt.find('\n', pos);
        if (eol == std::string::npos) eol = prompt.size();
        std::string_view line(prompt.data() + pos, eol - pos);
        pos = eol + 1;
        size_t digits = 0;
        while (digits < line.size() && line[digits] >= '0' && line[digits] <= '9') ++digits;
        if (digits == 0 || digits + 1 >= line.size() || line[digits] != '.' ||
            line[digits + 1] != ' ')
            continue;
        std::string_view rest = line.substr(digits + 2);
        size_t dash = rest.find(" \xe2\x80\x94 ");
        titles.emplace_back(trim(dash == std::string_view::npos ? rest : rest.substr(0, dash)));
    }
    if (titles.empty()) return std::nullopt;

    std::vector<std::string> order;
    std::map<std::string, int> votes;
    std::string joined;
    for (auto& t : titles) {
        auto toks = tokenize_alnum(t);
        if (toks.empty()) continue;
        if (votes.emplace(toks[0], 0).second) order.push_back(toks[0]);
        votes[toks[0]]++;
        joined += t;
        joined += '\n';
    }
    if (order.empty()) return std::nullopt;
    std::string theme = order[0];
    for (auto& tok : order)
        if (votes[tok] > votes[theme]) theme = tok;

    uint64_t h = fnv1a64(joined);
    int start = static_cast<int>(h % 3);
    int n = 2 + static_cast<int>((h >> 8) & 1);
    std::string out;
    for (int j = 0; j < n; ++j) {
        if (j) out += '\n';
        out += "intention " + std::to_string(j + 1) + ": " +
               fill(kIntentionTemplates[(start + j) % 3], theme);
    }
    return out;
}

std::optional<std::string> mock_concepts(const std::string& prompt) {
    if (!prompt.ends_with(kConceptSuffix)) return std::nullopt;
    size_t q = prompt.rfind(kConceptQuery);
    if (q == std::string::npos) return std::nullopt;
    size_t begin = q + kConceptQuery.size();
    size_t eol = prompt.find('\n', begin);
    if (eol == std::string::npos) return std::nullopt;
    std::string intention = trim(prompt.substr(begin, eol - begin));
    while (!intention.empty() && intention.back() == '.') intention.pop_back();
    auto toks = tokenize_alnum(intention);
    if (toks.empty()) return std::nullopt;
    if (toks.size() == 1) return toks[0];
    return toks[1] + ", " + toks[0] + " " + toks[1];
}

}  // namespace

std::string HttpGenerator::generate(const std::string& prompt, const GenParams& params) {
    json body;
    body["prompt"] = prompt;
    body["max_tokens"] = params.max_tokens;
    body["temperature"] = params.temperature;
    json res = post_json(cfg_, "/generate", body);
    if (!res.contains("text") || !res["text"].is_string())
        throw BackendError("POST /generate: response missing string field 'text'");
    return res["text"].get<std::string>();
}

double HttpScorer::score(const std::string& statement) {
    json body;
    body["statement"] = statement;
    json res = post_json(cfg_, "/score", body);
    if (!res.contains("score") || !res["score"].is_number())
        throw BackendError("POST /score: response missing numeric field 'score'");
    double s = res["score"].get<double>();
    if (!(s >= 0.0 && s <= 1.0))
        throw BackendError("POST /score: score " + std::to_string(s) + " outside [0, 1]");
    return s;
}

std::vector<double> HttpEmbedder::embed(const std::string& text) {
    json body;
    body["text"] = text;
    json res = post_json(cfg_, "/embed", body);
    if (!res.contains("vector") || !res["vector"].is_array())
        throw BackendError("POST /embed: response missing array field 'vector'");
    std::vector<double> v = res["vector"].get<std::vector<double>>();
    if (static_cast<int>(v.size()) != dim_)
        throw BackendError("POST /embed: expected dim " + std::to_string(dim_) + ", got " +
                           std::to_string(v.size()));
    return v;
}

std::vector<std::string> mock_intention_texts(const std::string& theme) {
    std::vector<std::string> out;
    for (const char* tpl : kIntentionTemplates) out.push_back(fill(tpl, theme));
    return out;
}

void MockGenerator::set_override(const std::string& prompt, const std::string& completion) {
    overrides_[prompt] = completion;
}

std::string MockGenerator::generate(const std::string& prompt, const GenParams&) {
    auto it = overrides_.find(prompt);
    if (it != overrides_.end()) return it->second;
    if (auto r = mock_intentions(prompt)) return *r;
    if (auto r = mock_concepts(prompt)) return *r;
    return "mock completion " + fnv1a64_hex(prompt + "#" + std::to_string(seed_));
}

void MockScorer::set_override(const std::string& statement, double score) {
    overrides_[statement] = score;
}

void MockScorer::load_overrides(const std::filesystem::path& json_path) {
    std::ifstream in(json_path);
    if (!in) throw BackendError("cannot open scorer overrides '" + json_path.string() + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw BackendError("bad scorer overrides '" + json_path.string() + "': " + e.what());
    }
    if (!j.is_object()) throw BackendError("scorer overrides must be a JSON object");
    for (auto& [k, v] : j.items()) {
        if (!v.is_number()) throw BackendError("override score for '" + k + "' is not numeric");
        double s = v.get<double>();
        if (!(s >= 0.0 && s <= 1.0))
            throw BackendError("override score for '" + k + "' outside [0, 1]");
        overrides_[k] = s;
    }
}

double MockScorer::score(const std::string& statement) {
    auto it = overrides_.find(statement);
    if (it != overrides_.end()) return it->second;
    return Rng(fnv1a64(statement) ^ seed_).next_double();
}

std::vector<double> HashEmbedder::embed(const std::string& text) {
    auto toks = tokenize_alnum(text);
    if (toks.empty()) throw BackendError("cannot embed empty text");
    std::vector<double> v(static_cast<size_t>(dim_), 0.0);
    for (auto& t : toks) v[(fnv1a64(t) ^ seed_) % static_cast<uint64_t>(dim_)] += 1.0;
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
    return v;
}

}  // namespace ig
