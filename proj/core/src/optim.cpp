#include "capinfer/optim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "capinfer/errors.hpp"

namespace capinfer::optim {

namespace {

constexpr double kArmijoC1 = 1e-4;
constexpr double kWolfeC2 = 0.9;
constexpr double kEps = std::numeric_limits<double>::epsilon();

void project(std::span<double> x, const BoxBounds& b) {
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = std::clamp(x[i], b.lower[i], b.upper[i]);
    }
}

double projected_gradient_norm(std::span<const double> x, std::span<const double> g,
                               const BoxBounds& b) {
    double norm = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double step = std::clamp(x[i] - g[i], b.lower[i], b.upper[i]) - x[i];
        norm = std::max(norm, std::abs(step));
    }
    return norm;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

struct Pair {
    std::vector<double> s;
    std::vector<double> y;
    double rho = 0.0;
};

// Two-loop recursion on the reduced (free-coordinate) gradient.
std::vector<double> lbfgs_direction(std::span<const double> g, const std::deque<Pair>& history) {
    std::vector<double> q(g.begin(), g.end());
    std::vector<double> alpha(history.size(), 0.0);
    for (std::size_t idx = history.size(); idx-- > 0;) {
        const Pair& p = history[idx];
        alpha[idx] = p.rho * dot(p.s, q);
        for (std::size_t i = 0; i < q.size(); ++i) q[i] -= alpha[idx] * p.y[i];
    }
    if (!history.empty()) {
        const Pair& last = history.back();
        const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
        for (double& v : q) v *= gamma;
    }
    for (std::size_t idx = 0; idx < history.size(); ++idx) {
        const Pair& p = history[idx];
        const double beta = p.rho * dot(p.y, q);
        for (std::size_t i = 0; i < q.size(); ++i) q[i] += (alpha[idx] - beta) * p.s[i];
    }
    for (double& v : q) v = -v;
    return q;
}

struct LineSearchResult {
    bool accepted = false;
    double alpha = 0.0;
    double f = 0.0;
    std::vector<double> x;
    std::vector<double> grad;
};

// Strong-Wolfe search along the feasible ray x + alpha*d, alpha in
// (0, alpha_max]. d must be a descent direction with no outward component at
// an active bound, so every trial point stays inside the box.
LineSearchResult wolfe_line_search(const ObjectiveFn& objective, std::span<const double> x0,
                                   std::span<const double> d, double f0, double dphi0,
                                   double alpha_max) {
    const std::size_t dim = x0.size();
    LineSearchResult out;
    out.x.resize(dim);
    out.grad.resize(dim);

    auto evaluate = [&](double alpha, double& phi, double& dphi) {
        for (std::size_t i = 0; i < dim; ++i) out.x[i] = x0[i] + alpha * d[i];
        phi = objective(out.x, out.grad);
        dphi = dot(out.grad, d);
    };
    auto accept = [&](double alpha, double phi) {
        out.accepted = true;
        out.alpha = alpha;
        out.f = phi;
    };

    double lo = 0.0;
    double phi_lo = f0;
    double dphi_lo = dphi0;
    double hi = 0.0;
    double phi_hi = 0.0;
    bool bracketed = false;

    double alpha = std::min(1.0, alpha_max);
    double alpha_prev = 0.0;
    double phi_prev = f0;

    for (int iter = 0; iter < 20 && !bracketed; ++iter) {
        double phi = 0.0;
        double dphi = 0.0;
        evaluate(alpha, phi, dphi);
        if (!std::isfinite(phi) || phi > f0 + kArmijoC1 * alpha * dphi0 ||
            (iter > 0 && phi >= phi_prev)) {
            lo = alpha_prev;
            phi_lo = phi_prev;
            hi = alpha;
            phi_hi = phi;
            bracketed = true;
            break;
        }
        if (std::abs(dphi) <= -kWolfeC2 * dphi0) {
            accept(alpha, phi);
            return out;
        }
        if (dphi >= 0.0) {
            lo = alpha;
            phi_lo = phi;
            dphi_lo = dphi;
            hi = alpha_prev;
            phi_hi = phi_prev;
            bracketed = true;
            break;
        }
        if (alpha >= alpha_max) {
            // Ran into the box; take the bound-hitting step if it decreases f.
            if (phi <= f0 + kArmijoC1 * alpha * dphi0) accept(alpha, phi);
            return out;
        }
        alpha_prev = alpha;
        phi_prev = phi;
        alpha = std::min(2.0 * alpha, alpha_max);
    }
    if (!bracketed) return out;
    (void)dphi_lo;

    for (int iter = 0; iter < 30; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (std::abs(hi - lo) * 0.5 <= kEps * std::max(1.0, std::abs(lo))) break;
        double phi = 0.0;
        double dphi = 0.0;
        evaluate(mid, phi, dphi);
        if (!std::isfinite(phi) || phi > f0 + kArmijoC1 * mid * dphi0 || phi >= phi_lo) {
            hi = mid;
            phi_hi = phi;
        } else {
            if (std::abs(dphi) <= -kWolfeC2 * dphi0) {
                accept(mid, phi);
                return out;
            }
            if (dphi * (hi - lo) >= 0.0) {
                hi = lo;
                phi_hi = phi_lo;
            }
            lo = mid;
            phi_lo = phi;
        }
    }
    (void)phi_hi;

    // Zoom exhausted without the curvature condition; fall back to the best
    // Armijo point found, if any.
    if (lo > 0.0 && phi_lo <= f0 + kArmijoC1 * lo * dphi0) {
        double phi = 0.0;
        double dphi = 0.0;
        evaluate(lo, phi, dphi);
        accept(lo, phi);
    }
    return out;
}

}  // namespace

Result minimize_bounded(const ObjectiveFn& objective, std::vector<double> x0,
                        const BoxBounds& bounds, const Options& options) {
    const std::size_t dim = x0.size();
    require(bounds.lower.size() == dim && bounds.upper.size() == dim, ErrorCode::Domain,
            "bounds dimension mismatch");
    for (std::size_t i = 0; i < dim; ++i) {
        require(bounds.lower[i] <= bounds.upper[i], ErrorCode::Domain, "inverted bound");
    }

    Result result;
    result.x = std::move(x0);
    project(result.x, bounds);

    std::vector<double> grad(dim, 0.0);
    double f = objective(result.x, grad);
    require(std::isfinite(f), ErrorCode::Numerical, "objective not finite at the start point");

    std::deque<Pair> history;
    bool plateau = false;

    int iter = 0;
    for (; iter < options.max_iterations; ++iter) {
        result.projected_gradient_norm = projected_gradient_norm(result.x, grad, bounds);
        if (result.projected_gradient_norm <= options.projected_gradient_tol) break;

        // Reduced gradient: coordinates pinned at a bound with an outward
        // gradient do not move this iteration.
        std::vector<double> reduced(grad);
        for (std::size_t i = 0; i < dim; ++i) {
            const bool at_lower = result.x[i] <= bounds.lower[i] && grad[i] > 0.0;
            const bool at_upper = result.x[i] >= bounds.upper[i] && grad[i] < 0.0;
            if (at_lower || at_upper) reduced[i] = 0.0;
        }

        bool accepted = false;
        LineSearchResult ls;
        for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
            std::vector<double> direction = lbfgs_direction(reduced, history);
            for (std::size_t i = 0; i < dim; ++i) {
                if (reduced[i] == 0.0 && grad[i] != 0.0) direction[i] = 0.0;
                // Remaining bound-resting coordinates must not push outward.
                if (result.x[i] <= bounds.lower[i] && direction[i] < 0.0) direction[i] = 0.0;
                if (result.x[i] >= bounds.upper[i] && direction[i] > 0.0) direction[i] = 0.0;
            }
            const double dphi0 = dot(direction, grad);
            if (dphi0 >= 0.0) {
                history.clear();
                continue;
            }
            double alpha_max = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < dim; ++i) {
                if (direction[i] > 0.0) {
                    alpha_max = std::min(alpha_max, (bounds.upper[i] - result.x[i]) / direction[i]);
                } else if (direction[i] < 0.0) {
                    alpha_max = std::min(alpha_max, (bounds.lower[i] - result.x[i]) / direction[i]);
                }
            }
            if (!(alpha_max > 0.0)) {
                history.clear();
                continue;
            }
            ls = wolfe_line_search(objective, result.x, direction, f, dphi0, alpha_max);
            if (ls.accepted) {
                accepted = true;
            } else {
                history.clear();  // retry once with a fresh steepest-descent model
            }
        }
        if (!accepted) break;

        Pair pair;
        pair.s.resize(dim);
        pair.y.resize(dim);
        for (std::size_t i = 0; i < dim; ++i) {
            pair.s[i] = ls.x[i] - result.x[i];
            pair.y[i] = ls.grad[i] - grad[i];
        }
        const double sy = dot(pair.s, pair.y);
        if (sy > 1e-12) {
            pair.rho = 1.0 / sy;
            history.push_back(std::move(pair));
            if (static_cast<int>(history.size()) > options.history) history.pop_front();
        }

        const double f_drop = f - ls.f;
        result.x = ls.x;
        grad = ls.grad;
        f = ls.f;

        if (f_drop <= options.plateau_factor * kEps * std::max({std::abs(f), std::abs(f + f_drop), 1.0})) {
            // Relative-reduction convergence, as the reference bounded
            // quasi-Newton implementations report it.
            plateau = true;
            ++iter;
            break;
        }
    }

    result.f = f;
    result.iterations = iter;
    result.projected_gradient_norm = projected_gradient_norm(result.x, grad, bounds);
    result.converged =
        plateau || result.projected_gradient_norm <= options.projected_gradient_tol;
    return result;
}

}  // namespace capinfer::optim
