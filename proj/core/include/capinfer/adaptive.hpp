#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "capinfer/core_model.hpp"
#include "capinfer/irt.hpp"
#include "capinfer/synthetic.hpp"

namespace capinfer::adaptive {

/// Answers "score the model on m perturbations of item i". Implementations
/// must return exactly m values in [0,1] and, for replay, identical values for
/// identical requests. concurrent_safe() declares whether a single instance
/// may serve multiple sessions at once.
class Responder {
  public:
    virtual ~Responder() = default;
    virtual std::vector<double> respond(const std::string& item_id, int m) = 0;
    virtual bool concurrent_safe() const { return false; }
};

/// Draws scores from the latent-ability model at a fixed true theta. Each
/// perturbation is sampled `repeats` times and averaged, matching a collection
/// protocol that queries every prompt repeatedly. The substream is keyed by
/// (seed, item_id), so the same item yields the same scores no matter when or
/// how often it is requested.
class SyntheticResponder : public Responder {
  public:
    SyntheticResponder(double theta_true, std::vector<ItemParams> items,
                       synthetic::OffsetDistribution offsets, std::uint64_t seed,
                       int repeats = 1);
    std::vector<double> respond(const std::string& item_id, int m) override;
    bool concurrent_safe() const override { return true; }

  private:
    double theta_true_;
    std::map<std::string, ItemParams> items_;
    synthetic::OffsetDistribution offsets_;
    std::uint64_t seed_;
    int repeats_;
};

/// Replays per-perturbation scores stored in a response matrix.
class ReplayResponder : public Responder {
  public:
    ReplayResponder(ResponseMatrix matrix, std::string model_id);
    std::vector<double> respond(const std::string& item_id, int m) override;
    bool concurrent_safe() const override { return true; }

  private:
    ResponseMatrix matrix_;
    std::string model_id_;
};

/// Disjunction of stopping conditions. A bounded condition (max_items or pool
/// exhaustion, which always stops) is in force for every session.
struct StoppingRule {
    std::optional<double> se_delta;   // stop when |SE_t - SE_{t-1}| < eps
    std::optional<int> max_items;     // stop at t >= T_max
    std::optional<double> se_target;  // stop when SE_t <= tau

    static StoppingRule defaults(std::size_t pool_size);
};

struct StepRecord {
    int t = 0;  // 1-based
    std::string item_id;
    double phi = 0.0;
    double theta = 0.0;  // after this step's Newton update
    double se = 0.0;     // 1/sqrt(information), prior term included
    double information = 0.0;
};

/// True when any active condition fires on the step log. se_delta compares the
/// two most recent standard errors and needs at least two completed steps.
bool stop_check(const StoppingRule& rule, std::span<const StepRecord> log);

enum class StopReason { SeDelta, MaxItems, SeTarget, PoolExhausted, InformationCollapse };
const char* to_string(StopReason reason);

struct SessionResult {
    AbilityEstimate estimate;    // re-converged over the administered set
    double theta_one_step = 0.0;  // theta after the last single Newton update
    std::vector<StepRecord> log;
    StopReason stop_reason = StopReason::PoolExhausted;
};

/// Thrown when the responder fails mid-session; carries the partial log.
class SessionAborted : public Error {
  public:
    SessionAborted(const std::string& message, std::vector<StepRecord> partial_log);
    const std::vector<StepRecord>& partial_log() const { return log_; }

  private:
    std::vector<StepRecord> log_;
};

/// The unasked item with maximal Fisher information
/// I_i(theta) = m a_i^2 Pbar_i(theta)(1 - Pbar_i(theta)); ties go to the
/// lexicographically smallest item id. Returns nullptr when the pool is
/// exhausted.
const ItemParams* select_item(std::span<const ItemParams> pool,
                              const std::set<std::string>& asked, double theta, int m);

// Information below this across all remaining items stops the session:
// further selections would not move the estimate.
inline constexpr double kInformationFloor = 1e-12;

/// Runs the adaptive test: select the most informative unasked item, query m
/// perturbations through the responder, average to phi, recompute the score
/// and information over everything asked so far, take one damped Newton step,
/// and consult the stopping rule. The returned estimate is the fully
/// re-converged penalized MLE on the administered set; the one-step trajectory
/// is kept alongside in the log.
SessionResult run_adaptive_test(std::span<const ItemParams> pool, Responder& responder,
                                irt::GaussianPrior prior, const StoppingRule& rule, int m);

}  // namespace capinfer::adaptive
