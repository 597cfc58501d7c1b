#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "capinfer/adaptive.hpp"
#include "capinfer/collector.hpp"
#include "capinfer/core_model.hpp"
#include "capinfer/irt.hpp"
#include "capinfer/synthetic.hpp"

namespace capinfer::io {

/// Shortest round-tripping decimal representation of a double.
std::string format_double(double value);

/// Writes content to a temporary file in the target directory and renames it
/// into place, so readers never observe a partial file.
void atomic_write(const std::filesystem::path& path, const std::string& content);

// --- response logs -----------------------------------------------------
// Canonical format is JSON lines, one record per line:
//   {"model":...,"item":...,"perturbation":...,"sample":N,"correct":0|1}
// CSV (header: model,item,perturbation,sample,correct) is an import/export
// convenience. Both round-trip exactly.

std::string to_jsonl(const ResponseMatrix& matrix);
ResponseMatrix from_jsonl(std::istream& in);

std::string to_csv(const ResponseMatrix& matrix);
ResponseMatrix from_csv(std::istream& in);

void write_response_log(const ResponseMatrix& matrix, const std::filesystem::path& path);
/// Dispatches on extension: .csv reads CSV, anything else JSON lines.
ResponseMatrix read_response_log(const std::filesystem::path& path);

// --- sidecar and report payloads ---------------------------------------

/// Original-benchmark scores: a JSON object {"item": score}.
std::map<std::string, double> read_original_scores(const std::filesystem::path& path);
void write_original_scores(const std::map<std::string, double>& scores,
                           const std::filesystem::path& path);

std::string calibration_to_json(const irt::CalibrationResult& result);
irt::CalibrationResult calibration_from_json(const std::string& text);
void write_item_params(const irt::CalibrationResult& result, const std::filesystem::path& path);
irt::CalibrationResult read_item_params(const std::filesystem::path& path);

void write_ctt_truth(const synthetic::CttTruth& truth, std::uint64_t seed,
                     const std::filesystem::path& path);
void write_irt_truth(const synthetic::IrtTruth& truth, std::uint64_t seed,
                     const std::filesystem::path& path);
synthetic::CttTruth read_ctt_truth(const std::filesystem::path& path);
synthetic::IrtTruth read_irt_truth(const std::filesystem::path& path);

/// Session log: one JSON line per adaptive step
/// {"t":..,"item_id":..,"phi":..,"theta":..,"se":..,"information":..}.
std::string session_log_to_jsonl(const adaptive::SessionResult& result);
void write_session_log(const adaptive::SessionResult& result,
                       const std::filesystem::path& path);

collector::PromptSet read_prompt_set(const std::filesystem::path& path);

/// Builds a complete correct-count matrix from a response log. Every
/// (item, model) cell must carry the same number of perturbations and binary
/// per-perturbation scores (single samples or unanimous repeats).
irt::CalibrationInput calibration_input_from_matrix(const ResponseMatrix& matrix);

// --- run configuration --------------------------------------------------

/// Declarative run parameters, loadable from a `key = value` file; CLI flags
/// override file values. Stochastic commands refuse to run without a seed.
struct RunConfig {
    std::string input;
    std::string original_scores;
    std::string item_params;
    std::string output_dir;
    std::string model;
    int bootstrap_B = 1000;
    double alpha = 0.05;
    int pilot_m0 = 5;
    long budget = 0;
    int m = 0;
    double prior_mean = 0.0;
    double prior_variance = 1.0;
    double se_delta = 1e-4;
    int max_items = 0;     // 0 = min(pool size, 200)
    double se_target = 0;  // 0 = inactive
    double tolerance = 1e-8;
    int max_iterations = 100;
    std::optional<std::uint64_t> seed;
};

RunConfig load_run_config(const std::filesystem::path& path);
/// Canonical `key = value` rendering of every field, embedded into reports so
/// any report can be reproduced from its own header.
std::string render_run_config(const RunConfig& config);

}  // namespace capinfer::io
