#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "capinfer/core_model.hpp"

namespace capinfer::ctt {

/// Per-item accuracy: the unweighted mean over per-perturbation scores.
struct ItemAccuracy {
    std::string item_id;
    double theta_hat = 0.0;
    int m = 0;  // perturbation count
    std::vector<double> per_perturbation_scores;
};

/// Systematic bias of the original (single-phrasing) benchmark relative to the
/// perturbation-averaged estimate: s_hat_i = phi_orig_i - theta_hat_i.
struct BiasReport {
    std::map<std::string, double> per_item_bias;
    double mean_bias = 0.0;
    std::map<std::string, double> original_scores;
};

struct QuantileSummary {
    double min = 0.0;
    double q25 = 0.0;
    double median = 0.0;
    double q75 = 0.0;
    double max = 0.0;
    double mean = 0.0;
};

/// Mean-absolute-distance sensitivity per item plus a distribution summary.
struct SensitivityReport {
    std::map<std::string, double> per_item_mad;
    QuantileSummary summary;
};

struct BootstrapResult {
    std::vector<double> replicates;
    double point_estimate = 0.0;  // full-sample mean of per-item means
    double lower = 0.0;
    double upper = 0.0;
    int B = 0;
    double alpha = 0.0;
    std::uint64_t seed = 0;
};

struct AllocationPlan {
    std::map<std::string, int> per_item_m;  // total samples, pilot included
    int pilot_m0 = 0;
    long budget = 0;
};

ItemAccuracy estimate_item_accuracy(const ResponseMatrix& matrix, const std::string& model_id,
                                    const std::string& item_id);

/// Accuracies for every item of a model, ordered by item id.
std::vector<ItemAccuracy> estimate_all_accuracies(const ResponseMatrix& matrix,
                                                  const std::string& model_id);

/// Dataset-level accuracy: mean of per-item accuracies.
double overall_accuracy(const ResponseMatrix& matrix, const std::string& model_id);

BiasReport estimate_bias(const ResponseMatrix& matrix_perturbed,
                         const std::map<std::string, double>& original_scores,
                         const std::string& model_id);

/// Mean absolute deviation about the mean. Inputs in [0,1] give a result in
/// [0, 0.5]. Throws Domain on an empty list.
double mad(std::span<const double> per_perturbation_scores);

SensitivityReport sensitivity_report(const ResponseMatrix& matrix, const std::string& model_id);

// Clustered bootstrap over items: each replicate resamples the n per-item
// means with replacement and records their average. The interval is the
// nearest-rank (alpha/2, 1-alpha/2) percentile pair of the replicate list.
// Replicate b draws from the substream (seed, "bootstrap", b), so serial and
// parallel execution produce identical replicate lists.
BootstrapResult clustered_bootstrap(std::span<const double> per_item_means, int B, double alpha,
                                    std::uint64_t seed, int threads = 1);
BootstrapResult clustered_bootstrap(const ResponseMatrix& matrix, const std::string& model_id,
                                    int B, double alpha, std::uint64_t seed, int threads = 1);

/// Two-step Neyman allocation: pilot with m0 samples per item, then the
/// remaining budget split proportionally to the pilot standard deviations
/// (sample standard deviation, m0-1 denominator). Flooring leftovers go to the
/// items with the largest fractional remainders; if every pilot deviation is
/// zero the remainder is spread uniformly.
AllocationPlan neyman_allocate(const ResponseMatrix& pilot, const std::string& model_id,
                               long budget, int m0);

/// Budget split when the item pool itself must shrink: fix m = m_min and take
/// n = floor(budget / m_min) items.
std::pair<long, int> plan_n_vs_m(long budget, int m_min);

/// Nearest-rank quantile: the ceil(q*B)-th smallest value (1-indexed).
double nearest_rank_quantile(std::span<const double> sorted_values, double q);

}  // namespace capinfer::ctt
