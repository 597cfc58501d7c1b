#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "capinfer/core_model.hpp"

namespace capinfer::collector {

enum class QuestionType { MultipleChoice, YesNo, TwoOption };
const char* to_string(QuestionType type);
QuestionType question_type_from_string(const std::string& s);

enum class UnparsedFallback { MarkIncorrect, MarkUnparsed };

inline constexpr const char* kUnparsed = "<unparsed>";

/// Ordered soft-matching rules for one question type. `options` holds the
/// canonical answer tokens: choice labels for multiple choice, the two words
/// for two-option questions; yes/no needs none. Matching is case-insensitive
/// over whitespace-normalized text and the first matching pattern wins, so
/// extraction is deterministic for a fixed raw string.
struct ExtractionRule {
    QuestionType type = QuestionType::MultipleChoice;
    std::vector<std::string> options;
    UnparsedFallback fallback = UnparsedFallback::MarkIncorrect;
};

/// Canonical answer token (uppercased label / lowercased word), or kUnparsed
/// when no pattern matches.
std::string extract_answer(const std::string& raw, const ExtractionRule& rule);

/// Canonical form used to compare extracted answers against gold.
std::string canonical_answer(const std::string& answer, QuestionType type);

struct RetryPolicy {
    int max_attempts = 3;
    int initial_backoff_ms = 200;
};

struct EndpointConfig {
    std::string base_url;  // e.g. http://127.0.0.1:8080
    std::string model;
    double temperature = 0.0;
    int samples_per_prompt = 1;
    int max_concurrent_requests = 4;
    int timeout_ms = 30000;
    RetryPolicy retry;
    std::string auth_env;  // env var holding the bearer token; empty = no auth

    void validate() const;
};

struct Perturbation {
    std::string perturbation_id;
    std::string prompt;
};

struct PromptItem {
    std::string item_id;
    QuestionType type = QuestionType::MultipleChoice;
    std::vector<std::string> options;
    std::string gold;
    std::vector<Perturbation> perturbations;
};

struct PromptSet {
    std::vector<PromptItem> items;
    void validate() const;
};

struct RuleSet {
    UnparsedFallback fallback = UnparsedFallback::MarkIncorrect;
    ExtractionRule for_item(const PromptItem& item) const;
};

struct AuditRecord {
    std::string run_id;
    std::string item_id;
    std::string perturbation_id;
    int sample_index = 0;
    std::string raw_text;
    std::string extracted;
    int score = 0;
    std::string timestamp;
    // Run conditions are confounders held fixed per run; every record carries
    // them so downstream analysis can verify the run was homogeneous.
    double temperature = 0.0;
    int samples_per_prompt = 0;
};

struct CollectionSummary {
    int cells_total = 0;
    int cells_collected = 0;
    int cells_resumed = 0;
    int cells_failed = 0;
    long samples = 0;
    long unparsed = 0;
    std::vector<std::string> failures;
};

struct CollectionOutput {
    ResponseMatrix matrix;
    CollectionSummary summary;
};

// Queries a chat-completions endpoint ({model, messages, temperature, n}) for
// every (item, perturbation) cell, extracts and scores each returned sample,
// and appends one audit line per sample. Cells already present in the audit
// log are skipped, so an interrupted run resumes where it stopped. Requests
// run on up to max_concurrent_requests workers with jittered exponential
// backoff per cell; audit emission goes through a single writer. Cells that
// still fail after retries are listed in the summary and the run continues.
CollectionOutput collect(const PromptSet& prompts, const EndpointConfig& endpoint,
                         const RuleSet& rules, const std::string& run_id,
                         const std::filesystem::path& audit_path);

std::vector<AuditRecord> read_audit_log(const std::filesystem::path& path);

/// Re-applies extraction rules to the raw completions of a stored audit log.
CollectionOutput rescore(std::span<const AuditRecord> audit, const PromptSet& prompts,
                         const RuleSet& rules, const std::string& model_id);

}  // namespace capinfer::collector
