#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "capinfer/core_model.hpp"
#include "capinfer/optim.hpp"

namespace capinfer::irt {

/// One administered item with the observed mean score over its m perturbations.
struct AdministeredItem {
    ItemParams item;
    double phi = 0.0;  // mean score in [0,1]
    int m = 1;         // perturbations behind phi
};

struct GaussianPrior {
    double mean = 0.0;
    double variance = 1.0;
};

/// Binomial log-likelihood of theta over administered items,
///   sum_i m_i [phi_i log Pbar_i + (1-phi_i) log(1-Pbar_i)],
/// with Pbar_i = sigma(a_i(theta - b_i)) clamped per kProbClamp. Strictly
/// concave in theta. Throws Domain on an empty item set.
double log_likelihood(std::span<const AdministeredItem> items, double theta);

struct ScoreInfo {
    double score = 0.0;        // d/dtheta of the log-likelihood (+ prior score)
    double information = 0.0;  // expected Fisher information (+ prior term)
};

/// S = sum_i m_i a_i (phi_i - Pbar_i), I = sum_i m_i a_i^2 Pbar_i (1 - Pbar_i).
/// A Gaussian prior contributes -(theta-mu)/var to S and 1/var to I.
ScoreInfo score_and_information(std::span<const AdministeredItem> items, double theta,
                                const std::optional<GaussianPrior>& prior = std::nullopt);

/// Running state of a scoring pass: administered items, the prior in force,
/// and the current theta.
struct ScoringState {
    std::vector<AdministeredItem> administered;
    std::optional<GaussianPrior> prior;
    double theta = 0.0;

    /// Fisher information at the current theta, prior term included.
    double total_information() const {
        return score_and_information(administered, theta, prior).information;
    }
};

// Newton steps larger than this are truncated; extreme early responses
// otherwise overshoot far past the stationary point.
inline constexpr double kMaxNewtonStep = 1.0;

/// One damped Newton-Raphson update theta + clamp(S/I, -1, 1).
double newton_step(std::span<const AdministeredItem> items, double theta,
                   const std::optional<GaussianPrior>& prior = std::nullopt);

struct MleOptions {
    double theta0 = 0.0;
    double tol = 1e-8;
    int max_iter = 100;
    std::optional<GaussianPrior> prior;
};

/// Damped Newton iteration to the (penalized) maximum-likelihood ability.
/// standard_error = 1/sqrt(I(theta_hat)), prior information included when a
/// prior is given. An all-correct or all-incorrect response pattern without a
/// prior has no finite maximizer and raises Degenerate.
AbilityEstimate mle_ability(std::span<const AdministeredItem> items,
                            const MleOptions& options = {});

/// Complete correct-count matrix Y[(item i, model k)] with a constant
/// perturbation count m per cell.
struct CalibrationInput {
    std::vector<std::string> item_ids;
    std::vector<std::string> model_ids;
    int m = 0;
    std::vector<int> counts;  // row-major, item-major: counts[i*K + k]

    int count(std::size_t item, std::size_t model) const {
        return counts[item * model_ids.size() + model];
    }
    void validate() const;
};

struct CalibrationConfig {
    double gradient_tol = 1e-6;
    int max_iterations = 2000;
    // Box for the optimizer: log a in [-log_a_bound, log_a_bound]
    // (a in [0.1, 10]), b and theta in [-6, 6].
    double log_a_bound = 2.3;
    double b_bound = 6.0;
    double theta_bound = 6.0;
};

struct CalibrationResult {
    std::vector<ItemParams> items;
    std::map<std::string, double> abilities;
    double final_objective = 0.0;  // maximized penalized log-likelihood
    bool converged = false;
    int iterations = 0;
};

/// Unpenalized binomial log-likelihood of the full matrix at the given
/// parameters. Summation order is fixed (items outer, models inner) so the
/// value is bitwise reproducible.
double data_log_likelihood(const CalibrationInput& input, std::span<const ItemParams> items,
                           std::span<const double> thetas);

/// data_log_likelihood minus the ability anchor 0.5*sum_k theta_k^2.
double penalized_log_likelihood(const CalibrationInput& input, std::span<const ItemParams> items,
                                std::span<const double> thetas);

/// The calibration objective and its gradient in the optimizer's
/// parameterization x = [log a_0..n-1, b_0..n-1, theta_0..K-1]: the binomial
/// data term, the N(0,1) ability anchor, and the Laplace curvature correction
/// -1/2 sum_k log(1 + I_k) from integrating each ability against its prior.
/// The correction pins the latent scale, which the data term (invariant under
/// theta/s, b/s, a*s) and the quadratic anchor alone leave free. This is the
/// exact objective/gradient pair calibrate() optimizes.
double penalized_value_and_gradient(const CalibrationInput& input, std::span<const double> x,
                                    std::span<double> grad);

/// Joint item-parameter and ability calibration: maximizes the penalized
/// marginal objective (see penalized_value_and_gradient) over
/// [log a_i, b_i, theta_k] with a bounded quasi-Newton method. Abilities come
/// back exactly centered; the N(0,1) anchor and curvature term pin their
/// scale. Deterministic given input and config.
CalibrationResult calibrate(const CalibrationInput& input, const CalibrationConfig& config = {});

}  // namespace capinfer::irt
