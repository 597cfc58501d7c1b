#include "capinfer/irt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace capinfer::irt {

namespace {

double clamped_p_bar(double theta, const ItemParams& item) {
    return std::clamp(p_bar(theta, item), kProbClamp, 1.0 - kProbClamp);
}

void check_items(std::span<const AdministeredItem> items) {
    require(!items.empty(), ErrorCode::Domain, "no administered items");
    for (const auto& it : items) {
        validate(it.item);
        require(it.phi >= 0.0 && it.phi <= 1.0, ErrorCode::Domain,
                "mean score outside [0,1] for item '" + it.item.item_id + "'");
        require(it.m >= 1, ErrorCode::Domain,
                "perturbation count must be positive for item '" + it.item.item_id + "'");
    }
}

bool extreme_pattern(std::span<const AdministeredItem> items) {
    bool all_correct = true;
    bool all_incorrect = true;
    for (const auto& it : items) {
        if (it.phi < 1.0) all_correct = false;
        if (it.phi > 0.0) all_incorrect = false;
    }
    return all_correct || all_incorrect;
}

}  // namespace

double log_likelihood(std::span<const AdministeredItem> items, double theta) {
    check_items(items);
    double ll = 0.0;
    for (const auto& it : items) {
        const double p = clamped_p_bar(theta, it.item);
        ll += it.m * (it.phi * std::log(p) + (1.0 - it.phi) * std::log(1.0 - p));
    }
    return ll;
}

ScoreInfo score_and_information(std::span<const AdministeredItem> items, double theta,
                                const std::optional<GaussianPrior>& prior) {
    check_items(items);
    ScoreInfo out;
    for (const auto& it : items) {
        const double p = clamped_p_bar(theta, it.item);
        out.score += it.m * it.item.a * (it.phi - p);
        out.information += it.m * it.item.a * it.item.a * p * (1.0 - p);
    }
    if (prior) {
        require(prior->variance > 0.0, ErrorCode::Domain, "prior variance must be positive");
        out.score += -(theta - prior->mean) / prior->variance;
        out.information += 1.0 / prior->variance;
    }
    return out;
}

double newton_step(std::span<const AdministeredItem> items, double theta,
                   const std::optional<GaussianPrior>& prior) {
    const ScoreInfo si = score_and_information(items, theta, prior);
    require(std::isfinite(si.score) && std::isfinite(si.information), ErrorCode::Numerical,
            "non-finite score or information");
    require(si.information > 0.0, ErrorCode::Numerical, "information must be positive");
    const double step = std::clamp(si.score / si.information, -kMaxNewtonStep, kMaxNewtonStep);
    return theta + step;
}

AbilityEstimate mle_ability(std::span<const AdministeredItem> items, const MleOptions& options) {
    check_items(items);
    require(options.tol > 0.0, ErrorCode::Domain, "tolerance must be positive");
    require(options.max_iter >= 1, ErrorCode::Domain, "max_iter must be positive");
    if (!options.prior && extreme_pattern(items)) {
        raise(ErrorCode::Degenerate,
              "all responses extreme in the same direction; the likelihood has no finite "
              "maximizer. Supply a Gaussian prior to regularize.");
    }

    AbilityEstimate est;
    double theta = options.theta0;
    for (const auto& it : items) est.items_administered.push_back(it.item.item_id);

    for (int iter = 0; iter < options.max_iter; ++iter) {
        const double next = newton_step(items, theta, options.prior);
        const ScoreInfo si = score_and_information(items, next, options.prior);
        est.trajectory.push_back({next, si.information});
        const double delta = next - theta;
        theta = next;
        if (std::abs(delta) < options.tol) break;
    }

    const ScoreInfo si = score_and_information(items, theta, options.prior);
    est.theta = theta;
    est.standard_error = 1.0 / std::sqrt(si.information);
    return est;
}

void CalibrationInput::validate() const {
    require(!item_ids.empty() && !model_ids.empty(), ErrorCode::Schema,
            "calibration input must name items and models");
    require(m >= 1, ErrorCode::Schema, "perturbation count m must be positive");
    require(counts.size() == item_ids.size() * model_ids.size(), ErrorCode::Schema,
            "count matrix must be complete (items x models)");
    for (std::size_t i = 0; i < item_ids.size(); ++i) {
        for (std::size_t k = 0; k < model_ids.size(); ++k) {
            const int y = count(i, k);
            require(y >= 0 && y <= m, ErrorCode::Schema,
                    "count outside [0,m] at (" + item_ids[i] + ", " + model_ids[k] + ")");
        }
    }
}

namespace {

// log(sigma(z)), stable for any finite z. The calibration objective keeps the
// exact softplus form (no probability clamp) so its gradient Y - m*P is exact
// everywhere the optimizer can reach.
double log_sigmoid_stable(double z) {
    if (z >= 0.0) {
        return -std::log1p(std::exp(-z));
    }
    return z - std::log1p(std::exp(z));
}

struct ParamView {
    // Parameter vector layout: [log a_0..n-1, b_0..n-1, theta_0..K-1].
    std::span<const double> x;
    std::size_t n;
    std::size_t K;
    double log_a(std::size_t i) const { return x[i]; }
    double b(std::size_t i) const { return x[n + i]; }
    double theta(std::size_t k) const { return x[2 * n + k]; }
};

double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace

double data_log_likelihood(const CalibrationInput& input, std::span<const ItemParams> items,
                           std::span<const double> thetas) {
    input.validate();
    require(items.size() == input.item_ids.size(), ErrorCode::Schema, "item vector size mismatch");
    require(thetas.size() == input.model_ids.size(), ErrorCode::Schema,
            "ability vector size mismatch");
    double ll = 0.0;
    for (std::size_t i = 0; i < items.size(); ++i) {
        for (std::size_t k = 0; k < thetas.size(); ++k) {
            const double z = items[i].a * (thetas[k] - items[i].b);
            const double y = input.count(i, k);
            ll += y * log_sigmoid_stable(z) + (input.m - y) * log_sigmoid_stable(-z);
        }
    }
    return ll;
}

double penalized_log_likelihood(const CalibrationInput& input, std::span<const ItemParams> items,
                                std::span<const double> thetas) {
    double penalty = 0.0;
    for (double t : thetas) penalty += 0.5 * t * t;
    return data_log_likelihood(input, items, thetas) - penalty;
}

double penalized_value_and_gradient(const CalibrationInput& input, std::span<const double> x,
                                    std::span<double> grad) {
    const std::size_t n = input.item_ids.size();
    const std::size_t K = input.model_ids.size();
    require(x.size() == 2 * n + K && grad.size() == x.size(), ErrorCode::Schema,
            "parameter vector must be [log a, b, theta]");
    std::fill(grad.begin(), grad.end(), 0.0);

    // Binomial data term plus the N(0,1) ability anchor, plus the Laplace
    // curvature correction -1/2 sum_k log(1 + I_k) from integrating each
    // ability against its prior. The data term alone is exactly invariant
    // under (theta/s, b/s, a*s), and the quadratic anchor rewards shrinking
    // theta without bound; the curvature term grows with a and pins the
    // latent scale.
    std::vector<double> prob(n * K, 0.0);
    std::vector<double> model_information(K, 0.0);
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double a = std::exp(x[i]);
        for (std::size_t k = 0; k < K; ++k) {
            const double z = a * (x[2 * n + k] - x[n + i]);
            const double y = input.count(i, k);
            ll += y * log_sigmoid_stable(z) + (input.m - y) * log_sigmoid_stable(-z);
            const double p = sigmoid(z);
            prob[i * K + k] = p;
            model_information[k] += input.m * a * a * p * (1.0 - p);
            const double resid = y - input.m * p;  // d(ll)/dz
            grad[i] += resid * z;                  // dz/d(log a) = z
            grad[n + i] += resid * (-a);
            grad[2 * n + k] += resid * a;
        }
    }
    for (std::size_t k = 0; k < K; ++k) {
        const double theta = x[2 * n + k];
        ll -= 0.5 * theta * theta;
        grad[2 * n + k] -= theta;
        ll -= 0.5 * std::log1p(model_information[k]);
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double a = std::exp(x[i]);
        for (std::size_t k = 0; k < K; ++k) {
            const double p = prob[i * K + k];
            const double z = a * (x[2 * n + k] - x[n + i]);
            const double w = input.m * a * a * p * (1.0 - p);
            const double dw_dz = w * (1.0 - 2.0 * p);
            const double inv_d = 0.5 / (1.0 + model_information[k]);
            grad[i] -= inv_d * (2.0 * w + dw_dz * z);
            grad[n + i] -= inv_d * (-dw_dz * a);
            grad[2 * n + k] -= inv_d * (dw_dz * a);
        }
    }
    return ll;
}

CalibrationResult calibrate(const CalibrationInput& input, const CalibrationConfig& config) {
    input.validate();
    const std::size_t n = input.item_ids.size();
    const std::size_t K = input.model_ids.size();
    require(n >= 2, ErrorCode::Degenerate, "calibration needs at least 2 items");
    require(K >= 2, ErrorCode::Degenerate, "calibration needs at least 2 models");

    for (std::size_t i = 0; i < n; ++i) {
        int total = 0;
        for (std::size_t k = 0; k < K; ++k) total += input.count(i, k);
        if (total == 0 || total == input.m * static_cast<int>(K)) {
            raise(ErrorCode::Calibration,
                  "item '" + input.item_ids[i] + "' has no response variation");
        }
    }

    // Initialization: unit discrimination, difficulty from the item mean under
    // (a=1, theta=0), abilities from standardized model means.
    std::vector<double> x(2 * n + K, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t k = 0; k < K; ++k) row += input.count(i, k);
        const double p = row / (static_cast<double>(K) * input.m);
        x[n + i] = std::clamp(-logit(std::clamp(p, 1e-4, 1.0 - 1e-4)), -config.b_bound,
                              config.b_bound);
    }
    std::vector<double> col_mean(K, 0.0);
    for (std::size_t k = 0; k < K; ++k) {
        double col = 0.0;
        for (std::size_t i = 0; i < n; ++i) col += input.count(i, k);
        col_mean[k] = col / (static_cast<double>(n) * input.m);
    }
    const double grand =
        std::accumulate(col_mean.begin(), col_mean.end(), 0.0) / static_cast<double>(K);
    double var = 0.0;
    for (double c : col_mean) var += (c - grand) * (c - grand);
    const double sd = K > 1 ? std::sqrt(var / static_cast<double>(K - 1)) : 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        x[2 * n + k] = sd > 0.0 ? std::clamp((col_mean[k] - grand) / sd, -config.theta_bound,
                                             config.theta_bound)
                                : 0.0;
    }

    optim::BoxBounds bounds;
    bounds.lower.assign(2 * n + K, 0.0);
    bounds.upper.assign(2 * n + K, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        bounds.lower[i] = -config.log_a_bound;
        bounds.upper[i] = config.log_a_bound;
        bounds.lower[n + i] = -config.b_bound;
        bounds.upper[n + i] = config.b_bound;
    }
    for (std::size_t k = 0; k < K; ++k) {
        bounds.lower[2 * n + k] = -config.theta_bound;
        bounds.upper[2 * n + k] = config.theta_bound;
    }

    // Minimize the negative calibration objective. Cells are summed in a
    // fixed item-major order so repeated runs are bitwise identical.
    auto objective = [&](std::span<const double> params, std::span<double> grad) -> double {
        const double ll = penalized_value_and_gradient(input, params, grad);
        for (double& g : grad) g = -g;
        return -ll;
    };

    optim::Options opt_options;
    opt_options.projected_gradient_tol = config.gradient_tol;
    opt_options.max_iterations = config.max_iterations;
    const optim::Result opt = optim::minimize_bounded(objective, std::move(x), bounds, opt_options);

    CalibrationResult result;
    result.converged = opt.converged;
    result.iterations = opt.iterations;
    const ParamView v{opt.x, n, K};

    // Center the abilities exactly (the fit is invariant under a common shift
    // of theta and b, so this costs nothing and makes the mean-zero anchor
    // exact). The scale is already pinned by the curvature term.
    double anchor_mean = 0.0;
    for (std::size_t k = 0; k < K; ++k) anchor_mean += v.theta(k);
    anchor_mean /= static_cast<double>(K);

    std::vector<double> centered(opt.x.begin(), opt.x.end());
    for (std::size_t k = 0; k < K; ++k) centered[2 * n + k] -= anchor_mean;
    for (std::size_t i = 0; i < n; ++i) centered[n + i] -= anchor_mean;

    for (std::size_t k = 0; k < K; ++k) {
        result.abilities[input.model_ids[k]] = centered[2 * n + k];
    }
    for (std::size_t i = 0; i < n; ++i) {
        result.items.push_back({input.item_ids[i], std::exp(centered[i]), centered[n + i]});
    }
    std::vector<double> scratch(centered.size(), 0.0);
    result.final_objective = penalized_value_and_gradient(input, centered, scratch);
    return result;
}

}  // namespace capinfer::irt
