#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "capinfer/ctt.hpp"

namespace capinfer::report {

struct LeaderboardRow {
    std::string model;
    double accuracy = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    int items = 0;
};

struct MadRow {
    std::string model;
    ctt::QuantileSummary summary;
};

struct ReportInputs {
    std::vector<LeaderboardRow> leaderboard;
    std::vector<MadRow> sensitivity;
    std::string resolved_config;  // embedded verbatim into every artifact
    std::string seed;
};

// Emits leaderboard.csv, sensitivity.csv and report.html (leaderboard bars
// with interval whiskers plus the sensitivity quantiles as inline SVG) into
// out_dir. Output is a pure function of the inputs: no timestamps, fixed
// number formatting, atomic writes.
void write_report(const ReportInputs& inputs, const std::filesystem::path& out_dir);

std::string leaderboard_csv(const ReportInputs& inputs);
std::string sensitivity_csv(const ReportInputs& inputs);
std::string report_html(const ReportInputs& inputs);

}  // namespace capinfer::report
