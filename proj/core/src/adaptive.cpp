#include "capinfer/adaptive.hpp"

#include <algorithm>
#include <cmath>

namespace capinfer::adaptive {

SyntheticResponder::SyntheticResponder(double theta_true, std::vector<ItemParams> items,
                                       synthetic::OffsetDistribution offsets, std::uint64_t seed,
                                       int repeats)
    : theta_true_(theta_true), offsets_(offsets), seed_(seed), repeats_(repeats) {
    offsets_.validate();
    require(repeats >= 1, ErrorCode::Domain, "repeats must be positive");
    for (auto& item : items) {
        validate(item);
        items_.emplace(item.item_id, std::move(item));
    }
}

std::vector<double> SyntheticResponder::respond(const std::string& item_id, int m) {
    auto it = items_.find(item_id);
    require(it != items_.end(), ErrorCode::NotFound, "responder has no item '" + item_id + "'");
    require(m >= 1, ErrorCode::Domain, "m must be positive");
    Rng rng(substream_seed(seed_, "responder", item_id));
    std::vector<double> scores(static_cast<std::size_t>(m), 0.0);
    for (int j = 0; j < m; ++j) {
        PerturbationEffect s{offsets_.sample(rng)};
        const double p = perturbed_prob(theta_true_, it->second, s);
        int correct = 0;
        for (int r = 0; r < repeats_; ++r) correct += rng.bernoulli(p) ? 1 : 0;
        scores[static_cast<std::size_t>(j)] = static_cast<double>(correct) / repeats_;
    }
    return scores;
}

ReplayResponder::ReplayResponder(ResponseMatrix matrix, std::string model_id)
    : matrix_(std::move(matrix)), model_id_(std::move(model_id)) {}

std::vector<double> ReplayResponder::respond(const std::string& item_id, int m) {
    auto scores = matrix_.perturbation_scores(model_id_, item_id);
    require(static_cast<int>(scores.size()) >= m, ErrorCode::Domain,
            "replay log has only " + std::to_string(scores.size()) + " perturbations for item '" +
                item_id + "', need " + std::to_string(m));
    scores.resize(static_cast<std::size_t>(m));
    return scores;
}

StoppingRule StoppingRule::defaults(std::size_t pool_size) {
    StoppingRule rule;
    rule.se_delta = 1e-4;
    rule.max_items = static_cast<int>(std::min<std::size_t>(pool_size, 200));
    return rule;
}

bool stop_check(const StoppingRule& rule, std::span<const StepRecord> log) {
    if (log.empty()) return false;
    if (rule.max_items && log.back().t >= *rule.max_items) return true;
    if (rule.se_target && log.back().se <= *rule.se_target) return true;
    if (rule.se_delta && log.size() >= 2) {
        const double delta = std::abs(log[log.size() - 1].se - log[log.size() - 2].se);
        if (delta < *rule.se_delta) return true;
    }
    return false;
}

const char* to_string(StopReason reason) {
    switch (reason) {
        case StopReason::SeDelta: return "se-delta";
        case StopReason::MaxItems: return "max-items";
        case StopReason::SeTarget: return "se-target";
        case StopReason::PoolExhausted: return "pool-exhausted";
        case StopReason::InformationCollapse: return "information-collapse";
    }
    return "unknown";
}

SessionAborted::SessionAborted(const std::string& message, std::vector<StepRecord> partial_log)
    : Error(ErrorCode::Transport, message), log_(std::move(partial_log)) {}

const ItemParams* select_item(std::span<const ItemParams> pool,
                              const std::set<std::string>& asked, double theta, int m) {
    const ItemParams* best = nullptr;
    double best_info = -1.0;
    for (const auto& item : pool) {
        if (asked.contains(item.item_id)) continue;
        const double p = p_bar(theta, item);
        const double info = m * item.a * item.a * p * (1.0 - p);
        if (info > best_info ||
            (info == best_info && best && item.item_id < best->item_id)) {
            best = &item;
            best_info = info;
        }
    }
    return best;
}

SessionResult run_adaptive_test(std::span<const ItemParams> pool, Responder& responder,
                                irt::GaussianPrior prior, const StoppingRule& rule, int m) {
    require(!pool.empty(), ErrorCode::Domain, "empty item pool");
    require(m >= 1, ErrorCode::Domain, "m must be positive");
    require(prior.variance > 0.0, ErrorCode::Domain, "prior variance must be positive");
    for (const auto& item : pool) validate(item);
    {
        std::set<std::string> ids;
        for (const auto& item : pool) {
            require(ids.insert(item.item_id).second, ErrorCode::Schema,
                    "duplicate item id '" + item.item_id + "' in pool");
        }
    }

    SessionResult result;
    std::set<std::string> asked;
    std::vector<irt::AdministeredItem> administered;
    double theta = prior.mean;
    StoppingRule effective = rule;
    if (!effective.max_items && !effective.se_delta && !effective.se_target) {
        effective = StoppingRule::defaults(pool.size());
    }

    int t = 0;
    for (;;) {
        const ItemParams* next = select_item(pool, asked, theta, m);
        if (next == nullptr) {
            result.stop_reason = StopReason::PoolExhausted;
            break;
        }
        const double p = p_bar(theta, *next);
        if (m * next->a * next->a * p * (1.0 - p) < kInformationFloor) {
            result.stop_reason = StopReason::InformationCollapse;
            break;
        }

        std::vector<double> scores;
        try {
            scores = responder.respond(next->item_id, m);
        } catch (const std::exception& e) {
            throw SessionAborted(
                "responder failed on item '" + next->item_id + "': " + e.what(), result.log);
        }
        require(static_cast<int>(scores.size()) == m, ErrorCode::Schema,
                "responder returned " + std::to_string(scores.size()) + " scores, expected " +
                    std::to_string(m));
        double phi = 0.0;
        for (double s : scores) {
            require(s >= 0.0 && s <= 1.0, ErrorCode::Schema, "responder score outside [0,1]");
            phi += s;
        }
        phi /= m;

        asked.insert(next->item_id);
        administered.push_back({*next, phi, m});
        ++t;

        // Score and information over the whole administered set at the
        // pre-update theta, then a single damped Newton step.
        const irt::ScoreInfo si = irt::score_and_information(administered, theta, prior);
        theta += std::clamp(si.score / si.information, -irt::kMaxNewtonStep, irt::kMaxNewtonStep);

        result.log.push_back(
            {t, next->item_id, phi, theta, 1.0 / std::sqrt(si.information), si.information});

        if (stop_check(effective, result.log)) {
            if (effective.max_items && t >= *effective.max_items) {
                result.stop_reason = StopReason::MaxItems;
            } else if (effective.se_target && result.log.back().se <= *effective.se_target) {
                result.stop_reason = StopReason::SeTarget;
            } else {
                result.stop_reason = StopReason::SeDelta;
            }
            break;
        }
    }

    result.theta_one_step = theta;
    if (!administered.empty()) {
        irt::MleOptions options;
        options.theta0 = theta;
        options.prior = prior;
        result.estimate = irt::mle_ability(administered, options);
    } else {
        result.estimate.theta = prior.mean;
        result.estimate.standard_error = std::sqrt(prior.variance);
    }
    return result;
}

}  // namespace capinfer::adaptive
