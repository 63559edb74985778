#pragma once

// File formats: ReviewEvent JSONL/CSV logs, ModelParams JSON, learner state
// files, simulation configs and run manifests.

#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spaced/error.hpp"
#include "spaced/memory.hpp"
#include "spaced/policies.hpp"
#include "spaced/simulator.hpp"

namespace spaced {

using Json = nlohmann::json;
namespace fs = std::filesystem;

inline std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot read '" + path.string() + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

inline void write_text_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
    out << content;
    if (!out) throw Error(ErrorCode::Io, "write to '" + path.string() + "' failed");
}

inline Json parse_json_text(const std::string& text, const std::string& origin) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw Error(ErrorCode::MalformedInput, origin + ": " + e.what());
    }
}

inline Json read_json_file(const fs::path& path) {
    return parse_json_text(read_text_file(path), path.string());
}

// ---------------------------------------------------------------------------
// Review events

inline Json to_json(const ReviewEvent& e) {
    return Json{{"learner_id", e.learner_id}, {"item_id", e.item_id}, {"ts", e.ts}, {"recall", e.recall}};
}

// One compact object per line, keys sorted.
inline std::string events_to_jsonl(const std::vector<ReviewEvent>& events) {
    std::string out;
    for (const auto& e : events) {
        out += to_json(e).dump();
        out += '\n';
    }
    return out;
}

// Validates one decoded record; unknown extra keys are ignored.
inline ReviewEvent event_from_json(const Json& j) {
    if (!j.is_object()) throw Error(ErrorCode::MalformedInput, "record is not an object");
    auto require = [&](const char* key) -> const Json& {
        auto it = j.find(key);
        if (it == j.end()) throw Error(ErrorCode::MalformedInput, std::string("missing '") + key + "'");
        return *it;
    };
    const Json& learner = require("learner_id");
    const Json& item = require("item_id");
    const Json& ts = require("ts");
    const Json& recall = require("recall");
    if (!learner.is_string() || !item.is_string()) {
        throw Error(ErrorCode::MalformedInput, "learner_id and item_id must be strings");
    }
    if (!ts.is_number_integer() || ts.get<std::int64_t>() < 0) {
        throw Error(ErrorCode::MalformedInput, "ts must be a non-negative integer");
    }
    if (!recall.is_number_integer() || (recall.get<std::int64_t>() != 0 && recall.get<std::int64_t>() != 1)) {
        throw Error(ErrorCode::MalformedInput, "recall must be 0 or 1");
    }
    return ReviewEvent{learner.get<std::string>(), item.get<std::string>(), ts.get<std::int64_t>(),
                       static_cast<int>(recall.get<std::int64_t>())};
}

struct LineDiagnostic {
    std::size_t line = 0;
    std::string message;
};

struct IngestReport {
    std::vector<ReviewEvent> events; // sorted by (learner, item, ts), deduplicated
    std::size_t records_read = 0;
    std::size_t dropped_invalid = 0;
    std::size_t duplicates_removed = 0;
    std::size_t learners = 0;
    std::vector<LineDiagnostic> diagnostics;
};

enum class LogFormat { Jsonl, Csv };

inline LogFormat guess_format(const fs::path& path) {
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".csv" ? LogFormat::Csv : LogFormat::Jsonl;
}

namespace detail {

inline std::string trim(std::string s) {
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return s;
}

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) fields.push_back(trim(field));
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

inline bool parse_integer(const std::string& text, std::int64_t& out) {
    if (text.empty()) return false;
    std::size_t used = 0;
    try {
        out = std::stoll(text, &used);
    } catch (...) {
        return false;
    }
    return used == text.size();
}

} // namespace detail

// Parses a log, collecting a diagnostic per bad record. With `strict`, the
// first bad record aborts with MALFORMED_INPUT.
inline IngestReport ingest_text(const std::string& text, LogFormat format, bool strict = false) {
    IngestReport report;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    std::map<std::string, std::size_t> columns;

    auto reject = [&](const std::string& message) {
        if (strict) {
            throw Error(ErrorCode::MalformedInput, "line " + std::to_string(line_no) + ": " + message);
        }
        ++report.dropped_invalid;
        report.diagnostics.push_back({line_no, message});
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (detail::trim(line).empty()) continue;

        if (format == LogFormat::Csv && columns.empty()) {
            const auto header = detail::split_csv(line);
            for (std::size_t i = 0; i < header.size(); ++i) columns[header[i]] = i;
            for (const char* key : {"learner_id", "item_id", "ts", "recall"}) {
                if (!columns.count(key)) {
                    throw Error(ErrorCode::MalformedInput, std::string("CSV header lacks '") + key + "'");
                }
            }
            continue;
        }

        ++report.records_read;
        if (format == LogFormat::Jsonl) {
            try {
                report.events.push_back(event_from_json(Json::parse(line)));
            } catch (const Json::parse_error&) {
                reject("not valid JSON");
            } catch (const Error& e) {
                reject(e.what());
            }
            continue;
        }

        const auto fields = detail::split_csv(line);
        auto field = [&](const char* key) -> std::string {
            const std::size_t i = columns.at(key);
            return i < fields.size() ? fields[i] : std::string();
        };
        std::int64_t ts = 0, recall = 0;
        if (field("learner_id").empty() || field("item_id").empty()) {
            reject("empty learner_id or item_id");
        } else if (!detail::parse_integer(field("ts"), ts) || ts < 0) {
            reject("ts must be a non-negative integer");
        } else if (!detail::parse_integer(field("recall"), recall) || (recall != 0 && recall != 1)) {
            reject("recall must be 0 or 1");
        } else {
            report.events.push_back(ReviewEvent{field("learner_id"), field("item_id"), ts, static_cast<int>(recall)});
        }
    }

    report.duplicates_removed = canonicalize_events(report.events);
    std::set<std::string> learners;
    for (const auto& e : report.events) learners.insert(e.learner_id);
    report.learners = learners.size();
    return report;
}

inline IngestReport ingest(const fs::path& path, std::optional<LogFormat> format = std::nullopt,
                           bool strict = false) {
    return ingest_text(read_text_file(path), format.value_or(guess_format(path)), strict);
}

// ---------------------------------------------------------------------------
// Model parameters

inline Json to_json(const ModelParams& p) {
    Json rates = Json::object();
    for (const auto& [item, rate] : p.initial_rates) rates[item] = rate;
    return Json{{"kind", std::string(to_string(p.kind))}, {"alpha", p.alpha}, {"beta", p.beta}, {"initial_rates", rates}};
}

inline ModelParams params_from_json(const Json& j) {
    try {
        ModelParams p;
        p.kind = parse_model_kind(j.at("kind").get<std::string>());
        p.alpha = j.at("alpha").get<double>();
        p.beta = j.at("beta").get<double>();
        for (const auto& [item, rate] : j.at("initial_rates").items()) p.initial_rates[item] = rate.get<double>();
        p.validate();
        return p;
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::MalformedInput, std::string("model parameters: ") + e.what());
    }
}

inline std::string params_to_text(const ModelParams& p) { return to_json(p).dump(2) + "\n"; }

inline ModelParams read_params(const fs::path& path) { return params_from_json(read_json_file(path)); }

// ---------------------------------------------------------------------------
// Learner state files

inline constexpr int kLearnerStateSchema = 1;

struct LearnerStateFile {
    std::string learner_id;
    std::vector<MemoryState> states;
    PolicyKind policy = PolicyKind::Select;
    std::optional<DifficultyCursor> cursor;
    int schema_version = kLearnerStateSchema;

    friend bool operator==(const LearnerStateFile&, const LearnerStateFile&) = default;
};

inline Json to_json(const LearnerStateFile& f) {
    Json states = Json::array();
    for (const auto& s : f.states) {
        states.push_back(Json{{"item_id", s.item_id},
                              {"n_correct", s.n_correct},
                              {"n_incorrect", s.n_incorrect},
                              {"last_review_ts", s.last_review_ts ? Json(*s.last_review_ts) : Json(nullptr)}});
    }
    Json j{{"schema_version", f.schema_version},
           {"learner_id", f.learner_id},
           {"policy", std::string(to_string(f.policy))},
           {"states", states},
           {"cursor", nullptr}};
    if (f.cursor) j["cursor"] = Json{{"ordering", f.cursor->ordering}, {"position", f.cursor->position}};
    return j;
}

inline LearnerStateFile learner_state_from_json(const Json& j) {
    try {
        LearnerStateFile f;
        f.schema_version = j.at("schema_version").get<int>();
        if (f.schema_version != kLearnerStateSchema) {
            throw Error(ErrorCode::MalformedInput, "unsupported schema_version " + std::to_string(f.schema_version));
        }
        f.learner_id = j.at("learner_id").get<std::string>();
        f.policy = parse_policy_kind(j.at("policy").get<std::string>());
        std::set<std::string> seen;
        for (const auto& s : j.at("states")) {
            MemoryState state;
            state.item_id = s.at("item_id").get<std::string>();
            state.n_correct = s.at("n_correct").get<int>();
            state.n_incorrect = s.at("n_incorrect").get<int>();
            if (s.contains("last_review_ts") && !s.at("last_review_ts").is_null()) {
                state.last_review_ts = s.at("last_review_ts").get<std::int64_t>();
            }
            if (state.n_correct < 0 || state.n_incorrect < 0) {
                throw Error(ErrorCode::MalformedInput, "negative review counts for '" + state.item_id + "'");
            }
            if (state.last_review_ts.has_value() != (state.n_correct + state.n_incorrect > 0)) {
                throw Error(ErrorCode::MalformedInput, "counts and last_review_ts disagree for '" + state.item_id + "'");
            }
            if (!seen.insert(state.item_id).second) {
                throw Error(ErrorCode::MalformedInput, "duplicate state for '" + state.item_id + "'");
            }
            f.states.push_back(std::move(state));
        }
        if (j.contains("cursor") && !j.at("cursor").is_null()) {
            DifficultyCursor c;
            c.ordering = j.at("cursor").at("ordering").get<std::vector<std::string>>();
            c.position = j.at("cursor").at("position").get<std::size_t>();
            if (!c.ordering.empty() && c.position >= c.ordering.size()) {
                throw Error(ErrorCode::MalformedInput, "cursor position out of range");
            }
            f.cursor = std::move(c);
        }
        return f;
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::MalformedInput, std::string("learner state: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Simulation configs

inline Json to_json(const PolicySpec& arm) {
    Json j{{"kind", std::string(to_string(arm.kind))}, {"name", arm.label()}};
    if (arm.kind == PolicyKind::Select) j["q"] = arm.q;
    return j;
}

inline Json to_json(const SimConfig& c) {
    Json arms = Json::array();
    for (const auto& a : c.arms) arms.push_back(to_json(a));
    Json j{{"n_learners", c.n_learners},
           {"n_items", c.n_items},
           {"initial_rate_log_mean", c.initial_rate_log_mean},
           {"initial_rate_log_sd", c.initial_rate_log_sd},
           {"horizon_days", c.horizon_days},
           {"mean_sessions_per_day", c.mean_sessions_per_day},
           {"session_size", c.session_size},
           {"answer_seconds", c.answer_seconds},
           {"ground_truth", to_json(c.ground_truth)},
           {"arms", arms},
           {"seed", c.seed}};
    if (c.scheduler) j["scheduler"] = to_json(*c.scheduler);
    return j;
}

// Keys mirror SimConfig. `ground_truth` and `scheduler` are ModelParams
// objects whose `initial_rates` may be omitted.
inline SimConfig sim_config_from_json(const Json& j) {
    auto partial_params = [](const Json& p) {
        Json full = p;
        if (!full.contains("initial_rates")) full["initial_rates"] = Json::object();
        if (!full.contains("kind")) full["kind"] = "exponential";
        return params_from_json(full);
    };
    try {
        SimConfig c;
        c.n_learners = j.value("n_learners", c.n_learners);
        c.n_items = j.value("n_items", c.n_items);
        c.initial_rate_log_mean = j.value("initial_rate_log_mean", c.initial_rate_log_mean);
        c.initial_rate_log_sd = j.value("initial_rate_log_sd", c.initial_rate_log_sd);
        c.threads = j.value("threads", c.threads);
        c.horizon_days = j.value("horizon_days", c.horizon_days);
        c.mean_sessions_per_day = j.value("mean_sessions_per_day", c.mean_sessions_per_day);
        c.session_size = j.value("session_size", c.session_size);
        c.answer_seconds = j.value("answer_seconds", c.answer_seconds);
        c.seed = j.value("seed", c.seed);
        if (j.contains("ground_truth")) c.ground_truth = partial_params(j.at("ground_truth"));
        if (j.contains("scheduler")) c.scheduler = partial_params(j.at("scheduler"));
        if (j.contains("arms")) {
            for (const auto& a : j.at("arms")) {
                PolicySpec spec;
                spec.kind = parse_policy_kind(a.at("kind").get<std::string>());
                spec.q = a.value("q", 1.0);
                spec.name = a.value("name", std::string());
                c.arms.push_back(spec);
            }
        }
        for (const auto& [key, value] : j.items()) {
            static const std::set<std::string> known{"n_learners", "n_items", "horizon_days",
                                                     "initial_rate_log_mean", "initial_rate_log_sd",
                                                     "mean_sessions_per_day", "session_size",
                                                     "answer_seconds", "seed", "ground_truth",
                                                     "scheduler", "arms", "threads"};
            if (!known.count(key)) throw Error(ErrorCode::InvalidConfig, "unknown config key '" + key + "'");
        }
        return c;
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, std::string("simulation config: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Run manifests

inline std::string sha256_hex(const std::string& data) {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), digest, &length) != 1) {
        throw Error(ErrorCode::Io, "SHA-256 computation failed");
    }
    std::ostringstream hex;
    for (unsigned int i = 0; i < length; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int{digest[i]};
    return hex.str();
}

inline std::string sha256_file(const fs::path& path) { return sha256_hex(read_text_file(path)); }

struct RunManifest {
    std::string subcommand;
    Json config = Json::object();
    std::optional<std::uint64_t> seed;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;

    Json to_json() const {
        Json digests = Json::array();
        for (const auto& input : inputs) digests.push_back(Json{{"path", input}, {"sha256", sha256_file(input)}});
        Json j{{"subcommand", subcommand},
               {"config", config},
               {"seed", seed ? Json(*seed) : Json(nullptr)},
               {"inputs", digests},
               {"outputs", outputs}};
        return j;
    }

    void write(const fs::path& path) const { write_text_file(path, to_json().dump(2) + "\n"); }
};

} // namespace spaced
