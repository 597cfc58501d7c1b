#include "capinfer/collector.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <mutex>
#include <regex>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "capinfer/rng.hpp"

namespace capinfer::collector {

using nlohmann::json;

const char* to_string(QuestionType type) {
    switch (type) {
        case QuestionType::MultipleChoice: return "multiple_choice";
        case QuestionType::YesNo: return "yes_no";
        case QuestionType::TwoOption: return "two_option";
    }
    return "unknown";
}

QuestionType question_type_from_string(const std::string& s) {
    if (s == "multiple_choice") return QuestionType::MultipleChoice;
    if (s == "yes_no") return QuestionType::YesNo;
    if (s == "two_option") return QuestionType::TwoOption;
    raise(ErrorCode::Schema, "unknown question type '" + s + "'");
}

namespace {

std::string normalize(const std::string& raw) {
    std::string out;
    out.reserve(raw.size());
    bool in_space = true;
    for (char c : raw) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!in_space) out.push_back(' ');
            in_space = true;
        } else {
            out.push_back(c);
            in_space = false;
        }
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::string upper(std::string s) {
    for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
}

std::string escape_regex(const std::string& s) {
    static const std::string special = R"(\^$.|?*+()[]{})";
    std::string out;
    for (char c : s) {
        if (special.find(c) != std::string::npos) out.push_back('\\');
        out.push_back(c);
    }
    return out;
}

std::string alternation(const std::vector<std::string>& options) {
    std::string out;
    for (const auto& o : options) {
        if (!out.empty()) out.push_back('|');
        out += escape_regex(o);
    }
    return out;
}

// Ordered pattern list per question type; the capture group holds the answer.
std::vector<std::regex> build_patterns(const ExtractionRule& rule) {
    const auto flags = std::regex::icase | std::regex::ECMAScript;
    std::vector<std::regex> out;
    switch (rule.type) {
        case QuestionType::MultipleChoice: {
            require(!rule.options.empty(), ErrorCode::Schema,
                    "multiple-choice rule needs labels");
            const std::string labels = alternation(rule.options);
            out.emplace_back("answer\\s+is\\s*:?\\s*\\(?(" + labels + ")\\)?\\b", flags);
            out.emplace_back("answer\\s*:\\s*\\(?(" + labels + ")\\)?\\b", flags);
            out.emplace_back("\\((" + labels + ")\\)", flags);
            out.emplace_back("option\\s+(" + labels + ")\\b", flags);
            out.emplace_back("^\\s*(" + labels + ")\\b", flags);
            out.emplace_back("\\b(" + labels + ")\\b", flags);
            break;
        }
        case QuestionType::YesNo: {
            out.emplace_back("answer\\s+is\\s*:?\\s*\"?(yes|no)\\b", flags);
            out.emplace_back("answer\\s*:\\s*\"?(yes|no)\\b", flags);
            out.emplace_back("^\\s*\"?(yes|no)\\b", flags);
            out.emplace_back("\\b(yes|no)\\b", flags);
            break;
        }
        case QuestionType::TwoOption: {
            require(rule.options.size() == 2, ErrorCode::Schema,
                    "two-option rule needs exactly two words");
            const std::string words = alternation(rule.options);
            out.emplace_back("answer\\s+is\\s*:?\\s*\"?(" + words + ")\\b", flags);
            out.emplace_back("answer\\s*:\\s*\"?(" + words + ")\\b", flags);
            out.emplace_back("^\\s*\"?(" + words + ")\\b", flags);
            out.emplace_back("\\b(" + words + ")\\b", flags);
            break;
        }
    }
    return out;
}

}  // namespace

std::string canonical_answer(const std::string& answer, QuestionType type) {
    const std::string trimmed = normalize(answer);
    return type == QuestionType::MultipleChoice ? upper(trimmed) : lower(trimmed);
}

std::string extract_answer(const std::string& raw, const ExtractionRule& rule) {
    const std::string text = normalize(raw);
    for (const auto& pattern : build_patterns(rule)) {
        std::smatch match;
        if (std::regex_search(text, match, pattern)) {
            return canonical_answer(match[1].str(), rule.type);
        }
    }
    return kUnparsed;
}

void EndpointConfig::validate() const {
    require(!base_url.empty(), ErrorCode::Validation, "base_url must be set");
    require(!model.empty(), ErrorCode::Validation, "model name must be set");
    require(temperature >= 0.0, ErrorCode::Validation, "temperature must be nonnegative");
    require(samples_per_prompt >= 1, ErrorCode::Validation, "samples_per_prompt must be positive");
    require(max_concurrent_requests >= 1, ErrorCode::Validation,
            "max_concurrent_requests must be positive");
    require(timeout_ms >= 1, ErrorCode::Validation, "timeout must be positive");
    require(retry.max_attempts >= 1, ErrorCode::Validation, "retry attempts must be positive");
}

void PromptSet::validate() const {
    require(!items.empty(), ErrorCode::Validation, "prompt set is empty");
    for (const auto& item : items) {
        require(!item.item_id.empty(), ErrorCode::Validation, "item id must be non-empty");
        require(!item.gold.empty(), ErrorCode::Validation,
                "item '" + item.item_id + "' needs a gold answer");
        require(!item.perturbations.empty(), ErrorCode::Validation,
                "item '" + item.item_id + "' needs at least one perturbation");
        if (item.type == QuestionType::MultipleChoice) {
            require(!item.options.empty(), ErrorCode::Validation,
                    "item '" + item.item_id + "' needs choice labels");
        }
        if (item.type == QuestionType::TwoOption) {
            require(item.options.size() == 2, ErrorCode::Validation,
                    "item '" + item.item_id + "' needs exactly two option words");
        }
    }
}

ExtractionRule RuleSet::for_item(const PromptItem& item) const {
    return ExtractionRule{item.type, item.options, fallback};
}

namespace {

std::string iso_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json audit_to_json(const AuditRecord& r) {
    return json{{"run_id", r.run_id},
                {"item_id", r.item_id},
                {"perturbation_id", r.perturbation_id},
                {"sample_index", r.sample_index},
                {"raw_text", r.raw_text},
                {"extracted", r.extracted},
                {"score", r.score},
                {"timestamp", r.timestamp},
                {"temperature", r.temperature},
                {"samples_per_prompt", r.samples_per_prompt}};
}

AuditRecord audit_from_json(const json& j) {
    AuditRecord r;
    r.run_id = j.at("run_id").get<std::string>();
    r.item_id = j.at("item_id").get<std::string>();
    r.perturbation_id = j.at("perturbation_id").get<std::string>();
    r.sample_index = j.at("sample_index").get<int>();
    r.raw_text = j.at("raw_text").get<std::string>();
    r.extracted = j.at("extracted").get<std::string>();
    r.score = j.at("score").get<int>();
    r.timestamp = j.value("timestamp", "");
    r.temperature = j.value("temperature", 0.0);
    r.samples_per_prompt = j.value("samples_per_prompt", 0);
    return r;
}

struct Cell {
    const PromptItem* item = nullptr;
    const Perturbation* perturbation = nullptr;
};

ResponseMatrix matrix_from_audit(std::span<const AuditRecord> audit, const PromptSet& prompts,
                                 const RuleSet& rules, const std::string& model_id,
                                 long* unparsed_count) {
    std::map<std::pair<std::string, std::string>, bool> wanted;
    for (const auto& item : prompts.items) {
        for (const auto& pert : item.perturbations) {
            wanted[{item.item_id, pert.perturbation_id}] = true;
        }
    }
    std::vector<ResponseRecord> records;
    for (const auto& r : audit) {
        if (!wanted.count({r.item_id, r.perturbation_id})) continue;
        if (r.extracted == kUnparsed) {
            if (unparsed_count) ++*unparsed_count;
            if (rules.fallback == UnparsedFallback::MarkUnparsed) continue;
        }
        records.push_back({model_id, r.item_id, r.perturbation_id, r.sample_index, r.score});
    }
    return ResponseMatrix(std::move(records));
}

}  // namespace

std::vector<AuditRecord> read_audit_log(const std::filesystem::path& path) {
    std::vector<AuditRecord> out;
    std::ifstream in(path);
    if (!in) return out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            out.push_back(audit_from_json(json::parse(line)));
        } catch (const json::exception&) {
            // Torn final line from an interrupted run; the cell it belonged
            // to is re-collected.
            continue;
        }
    }
    return out;
}

CollectionOutput collect(const PromptSet& prompts, const EndpointConfig& endpoint,
                         const RuleSet& rules, const std::string& run_id,
                         const std::filesystem::path& audit_path) {
    prompts.validate();
    endpoint.validate();
    require(!run_id.empty(), ErrorCode::Validation, "run_id must be non-empty");

    std::string auth_token;
    if (!endpoint.auth_env.empty()) {
        const char* token = std::getenv(endpoint.auth_env.c_str());
        require(token != nullptr && *token != '\0', ErrorCode::Validation,
                "auth environment variable '" + endpoint.auth_env + "' is not set");
        auth_token = token;
    }

    CollectionOutput out;
    std::vector<AuditRecord> audit = read_audit_log(audit_path);

    // A cell is complete when the log already holds all of its samples.
    std::map<std::pair<std::string, std::string>, int> have;
    for (const auto& r : audit) ++have[{r.item_id, r.perturbation_id}];

    std::vector<Cell> tasks;
    for (const auto& item : prompts.items) {
        for (const auto& pert : item.perturbations) {
            out.summary.cells_total += 1;
            const auto it = have.find({item.item_id, pert.perturbation_id});
            if (it != have.end() && it->second >= endpoint.samples_per_prompt) {
                out.summary.cells_resumed += 1;
            } else {
                tasks.push_back({&item, &pert});
            }
        }
    }

    std::ofstream audit_out(audit_path, std::ios::app);
    require(audit_out.good(), ErrorCode::Validation,
            "cannot open audit log '" + audit_path.string() + "'");

    std::mutex writer_mutex;  // single writer for audit lines and summary
    std::atomic<std::size_t> next_task{0};
    const std::uint64_t backoff_seed = hash_string(run_id);

    auto worker = [&]() {
        httplib::Client client(endpoint.base_url);
        client.set_connection_timeout(0, endpoint.timeout_ms * 1000);
        client.set_read_timeout(endpoint.timeout_ms / 1000, (endpoint.timeout_ms % 1000) * 1000);
        httplib::Headers headers;
        if (!auth_token.empty()) headers.emplace("Authorization", "Bearer " + auth_token);

        for (;;) {
            const std::size_t index = next_task.fetch_add(1);
            if (index >= tasks.size()) break;
            const Cell& cell = tasks[index];

            const json body = {
                {"model", endpoint.model},
                {"messages", json::array({{{"role", "user"},
                                           {"content", cell.perturbation->prompt}}})},
                {"temperature", endpoint.temperature},
                {"n", endpoint.samples_per_prompt},
            };
            const std::string payload = body.dump();

            std::vector<std::string> completions;
            std::string failure;
            Rng backoff_rng(substream_seed(backoff_seed, cell.item->item_id,
                                           cell.perturbation->perturbation_id));
            for (int attempt = 1; attempt <= endpoint.retry.max_attempts; ++attempt) {
                if (attempt > 1) {
                    const double jitter = 0.5 + 0.5 * backoff_rng.uniform();
                    const double delay = endpoint.retry.initial_backoff_ms *
                                         std::pow(2.0, attempt - 2) * jitter;
                    std::this_thread::sleep_for(std::chrono::milliseconds(
                        std::min<long>(static_cast<long>(delay), 10000)));
                }
                auto res = client.Post("/v1/chat/completions", headers, payload,
                                       "application/json");
                if (!res) {
                    failure = "transport error: " + httplib::to_string(res.error());
                    continue;
                }
                if (res->status == 429 || res->status >= 500) {
                    failure = "http status " + std::to_string(res->status);
                    continue;
                }
                if (res->status != 200) {
                    failure = "http status " + std::to_string(res->status);
                    break;  // non-retryable
                }
                try {
                    const json reply = json::parse(res->body);
                    completions.clear();
                    for (const auto& choice : reply.at("choices")) {
                        completions.push_back(
                            choice.at("message").at("content").get<std::string>());
                    }
                    if (static_cast<int>(completions.size()) < endpoint.samples_per_prompt) {
                        failure = "endpoint returned " + std::to_string(completions.size()) +
                                  " choices, expected " +
                                  std::to_string(endpoint.samples_per_prompt);
                        completions.clear();
                        continue;
                    }
                    failure.clear();
                    break;
                } catch (const json::exception& e) {
                    failure = std::string("malformed response: ") + e.what();
                    continue;
                }
            }

            std::lock_guard<std::mutex> lock(writer_mutex);
            if (!failure.empty()) {
                out.summary.cells_failed += 1;
                out.summary.failures.push_back(cell.item->item_id + "/" +
                                               cell.perturbation->perturbation_id + ": " +
                                               failure);
                continue;
            }
            const ExtractionRule rule = rules.for_item(*cell.item);
            const std::string gold = canonical_answer(cell.item->gold, cell.item->type);
            for (int s = 0; s < endpoint.samples_per_prompt; ++s) {
                AuditRecord record;
                record.run_id = run_id;
                record.item_id = cell.item->item_id;
                record.perturbation_id = cell.perturbation->perturbation_id;
                record.sample_index = s;
                record.raw_text = completions[static_cast<std::size_t>(s)];
                record.extracted = extract_answer(record.raw_text, rule);
                record.score = (record.extracted != kUnparsed && record.extracted == gold) ? 1 : 0;
                record.timestamp = iso_timestamp();
                record.temperature = endpoint.temperature;
                record.samples_per_prompt = endpoint.samples_per_prompt;
                audit_out << audit_to_json(record).dump() << "\n";
                audit.push_back(std::move(record));
            }
            audit_out.flush();
            out.summary.cells_collected += 1;
            out.summary.samples += endpoint.samples_per_prompt;
        }
    };

    const int n_workers =
        std::max(1, std::min<int>(endpoint.max_concurrent_requests,
                                  static_cast<int>(tasks.size())));
    std::vector<std::thread> threads;
    for (int t = 0; t < n_workers; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();

    out.matrix = matrix_from_audit(audit, prompts, rules, endpoint.model,
                                   &out.summary.unparsed);
    return out;
}

CollectionOutput rescore(std::span<const AuditRecord> audit, const PromptSet& prompts,
                         const RuleSet& rules, const std::string& model_id) {
    prompts.validate();
    std::map<std::string, const PromptItem*> by_id;
    for (const auto& item : prompts.items) by_id[item.item_id] = &item;

    std::vector<AuditRecord> rescored;
    rescored.reserve(audit.size());
    for (const auto& r : audit) {
        auto it = by_id.find(r.item_id);
        if (it == by_id.end()) continue;
        AuditRecord copy = r;
        const ExtractionRule rule = rules.for_item(*it->second);
        copy.extracted = extract_answer(copy.raw_text, rule);
        const std::string gold = canonical_answer(it->second->gold, it->second->type);
        copy.score = (copy.extracted != kUnparsed && copy.extracted == gold) ? 1 : 0;
        rescored.push_back(std::move(copy));
    }

    CollectionOutput out;
    out.summary.samples = static_cast<long>(rescored.size());
    out.matrix = matrix_from_audit(rescored, prompts, rules, model_id, &out.summary.unparsed);
    return out;
}

}  // namespace capinfer::collector
