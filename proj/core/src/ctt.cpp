#include "capinfer/ctt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "capinfer/rng.hpp"

namespace capinfer::ctt {

ItemAccuracy estimate_item_accuracy(const ResponseMatrix& matrix, const std::string& model_id,
                                    const std::string& item_id) {
    ItemAccuracy out;
    out.item_id = item_id;
    out.per_perturbation_scores = matrix.perturbation_scores(model_id, item_id);
    require(!out.per_perturbation_scores.empty(), ErrorCode::Degenerate,
            "item '" + item_id + "' has no perturbations");
    out.m = static_cast<int>(out.per_perturbation_scores.size());
    out.theta_hat = std::accumulate(out.per_perturbation_scores.begin(),
                                    out.per_perturbation_scores.end(), 0.0) /
                    out.m;
    return out;
}

std::vector<ItemAccuracy> estimate_all_accuracies(const ResponseMatrix& matrix,
                                                  const std::string& model_id) {
    std::vector<ItemAccuracy> out;
    for (const auto& item : matrix.items(model_id)) {
        out.push_back(estimate_item_accuracy(matrix, model_id, item));
    }
    return out;
}

double overall_accuracy(const ResponseMatrix& matrix, const std::string& model_id) {
    const auto accuracies = estimate_all_accuracies(matrix, model_id);
    require(!accuracies.empty(), ErrorCode::Degenerate, "no items for model '" + model_id + "'");
    double sum = 0.0;
    for (const auto& a : accuracies) sum += a.theta_hat;
    return sum / static_cast<double>(accuracies.size());
}

BiasReport estimate_bias(const ResponseMatrix& matrix_perturbed,
                         const std::map<std::string, double>& original_scores,
                         const std::string& model_id) {
    require(!original_scores.empty(), ErrorCode::Domain, "original score table is empty");
    std::string missing;
    for (const auto& [item, _] : original_scores) {
        if (!matrix_perturbed.has(model_id, item)) {
            missing += missing.empty() ? item : (", " + item);
        }
    }
    require(missing.empty(), ErrorCode::Schema,
            "items missing from the perturbed data: " + missing);

    BiasReport report;
    report.original_scores = original_scores;
    double sum = 0.0;
    for (const auto& [item, phi_orig] : original_scores) {
        const double theta_hat =
            estimate_item_accuracy(matrix_perturbed, model_id, item).theta_hat;
        const double s_hat = phi_orig - theta_hat;
        report.per_item_bias[item] = s_hat;
        sum += s_hat;
    }
    report.mean_bias = sum / static_cast<double>(original_scores.size());
    return report;
}

double mad(std::span<const double> per_perturbation_scores) {
    require(!per_perturbation_scores.empty(), ErrorCode::Domain,
            "mad requires a non-empty score list");
    const double n = static_cast<double>(per_perturbation_scores.size());
    const double mean =
        std::accumulate(per_perturbation_scores.begin(), per_perturbation_scores.end(), 0.0) / n;
    double dev = 0.0;
    for (double s : per_perturbation_scores) dev += std::abs(s - mean);
    return dev / n;
}

namespace {

QuantileSummary summarize(std::vector<double> values) {
    QuantileSummary s;
    if (values.empty()) return s;
    std::sort(values.begin(), values.end());
    s.min = values.front();
    s.max = values.back();
    s.q25 = nearest_rank_quantile(values, 0.25);
    s.median = nearest_rank_quantile(values, 0.5);
    s.q75 = nearest_rank_quantile(values, 0.75);
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) /
             static_cast<double>(values.size());
    return s;
}

}  // namespace

SensitivityReport sensitivity_report(const ResponseMatrix& matrix, const std::string& model_id) {
    SensitivityReport report;
    std::vector<double> mads;
    for (const auto& item : matrix.items(model_id)) {
        const double m = mad(matrix.perturbation_scores(model_id, item));
        report.per_item_mad[item] = m;
        mads.push_back(m);
    }
    report.summary = summarize(std::move(mads));
    return report;
}

double nearest_rank_quantile(std::span<const double> sorted_values, double q) {
    require(!sorted_values.empty(), ErrorCode::Domain, "quantile of empty list");
    require(q >= 0.0 && q <= 1.0, ErrorCode::Domain, "quantile level outside [0,1]");
    const auto n = sorted_values.size();
    std::size_t rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
    if (rank < 1) rank = 1;
    if (rank > n) rank = n;
    return sorted_values[rank - 1];
}

BootstrapResult clustered_bootstrap(std::span<const double> per_item_means, int B, double alpha,
                                    std::uint64_t seed, int threads) {
    const std::size_t n = per_item_means.size();
    require(n >= 2, ErrorCode::Degenerate, "clustered bootstrap needs at least 2 items");
    require(B >= 1, ErrorCode::Domain, "B must be positive");
    require(alpha > 0.0 && alpha < 1.0, ErrorCode::Domain, "alpha must be in (0,1)");
    require(threads >= 1, ErrorCode::Domain, "threads must be positive");

    BootstrapResult result;
    result.B = B;
    result.alpha = alpha;
    result.seed = seed;
    result.point_estimate =
        std::accumulate(per_item_means.begin(), per_item_means.end(), 0.0) /
        static_cast<double>(n);
    result.replicates.resize(static_cast<std::size_t>(B));

    auto run_range = [&](int begin, int end) {
        for (int b = begin; b < end; ++b) {
            Rng rng(substream_seed(seed, "bootstrap", static_cast<std::uint64_t>(b)));
            double sum = 0.0;
            for (std::size_t i = 0; i < n; ++i) sum += per_item_means[rng.uniform_int(n)];
            result.replicates[static_cast<std::size_t>(b)] = sum / static_cast<double>(n);
        }
    };

    if (threads == 1 || B < 2 * threads) {
        run_range(0, B);
    } else {
        std::vector<std::thread> workers;
        const int chunk = (B + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            const int begin = t * chunk;
            const int end = std::min(B, begin + chunk);
            if (begin >= end) break;
            workers.emplace_back(run_range, begin, end);
        }
        for (auto& w : workers) w.join();
    }

    std::vector<double> sorted = result.replicates;
    std::sort(sorted.begin(), sorted.end());
    result.lower = nearest_rank_quantile(sorted, alpha / 2.0);
    result.upper = nearest_rank_quantile(sorted, 1.0 - alpha / 2.0);
    return result;
}

BootstrapResult clustered_bootstrap(const ResponseMatrix& matrix, const std::string& model_id,
                                    int B, double alpha, std::uint64_t seed, int threads) {
    std::vector<double> means;
    for (const auto& acc : estimate_all_accuracies(matrix, model_id)) {
        means.push_back(acc.theta_hat);
    }
    return clustered_bootstrap(means, B, alpha, seed, threads);
}

AllocationPlan neyman_allocate(const ResponseMatrix& pilot, const std::string& model_id,
                               long budget, int m0) {
    require(m0 >= 2, ErrorCode::Domain, "pilot size m0 must be at least 2");
    const auto items = pilot.items(model_id);
    const long n = static_cast<long>(items.size());
    require(n >= 1, ErrorCode::Degenerate, "pilot has no items");
    require(budget > n * static_cast<long>(m0), ErrorCode::Budget,
            "budget " + std::to_string(budget) + " does not exceed pilot cost " +
                std::to_string(n * m0));

    std::vector<double> sigma(items.size(), 0.0);
    for (std::size_t i = 0; i < items.size(); ++i) {
        const auto scores = pilot.perturbation_scores(model_id, items[i]);
        require(static_cast<int>(scores.size()) == m0, ErrorCode::Schema,
                "pilot item '" + items[i] + "' has " + std::to_string(scores.size()) +
                    " samples, expected m0=" + std::to_string(m0));
        const double mean =
            std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(m0);
        double ss = 0.0;
        for (double s : scores) ss += (s - mean) * (s - mean);
        sigma[i] = std::sqrt(ss / static_cast<double>(m0 - 1));
    }

    const long extra_budget = budget - n * static_cast<long>(m0);
    const double sigma_total = std::accumulate(sigma.begin(), sigma.end(), 0.0);

    std::vector<long> extra(items.size(), 0);
    std::vector<double> remainder(items.size(), 0.0);
    if (sigma_total == 0.0) {
        // 0/0 in the allocation formula; spread uniformly.
        const long base = extra_budget / n;
        long leftover = extra_budget - base * n;
        for (std::size_t i = 0; i < items.size(); ++i) {
            extra[i] = base + (static_cast<long>(i) < leftover ? 1 : 0);
        }
    } else {
        long allocated = 0;
        for (std::size_t i = 0; i < items.size(); ++i) {
            const double share = sigma[i] * static_cast<double>(extra_budget) / sigma_total;
            extra[i] = static_cast<long>(std::floor(share));
            remainder[i] = share - static_cast<double>(extra[i]);
            allocated += extra[i];
        }
        long leftover = extra_budget - allocated;
        std::vector<std::size_t> order(items.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (remainder[a] != remainder[b]) return remainder[a] > remainder[b];
            return items[a] < items[b];
        });
        for (std::size_t k = 0; k < order.size() && leftover > 0; ++k) {
            if (remainder[order[k]] <= 0.0) break;  // zero-deviation items get nothing
            extra[order[k]] += 1;
            --leftover;
        }
    }

    AllocationPlan plan;
    plan.pilot_m0 = m0;
    plan.budget = budget;
    for (std::size_t i = 0; i < items.size(); ++i) {
        plan.per_item_m[items[i]] = m0 + static_cast<int>(extra[i]);
    }
    return plan;
}

std::pair<long, int> plan_n_vs_m(long budget, int m_min) {
    require(m_min >= 3, ErrorCode::Domain, "m_min must be at least 3");
    require(budget >= m_min, ErrorCode::Budget,
            "budget " + std::to_string(budget) + " below the per-item minimum " +
                std::to_string(m_min));
    return {budget / m_min, m_min};
}

}  // namespace capinfer::ctt
