#pragma once

#include <functional>
#include <span>
#include <vector>

namespace capinfer::optim {

struct BoxBounds {
    std::vector<double> lower;
    std::vector<double> upper;
};

struct Options {
    double projected_gradient_tol = 1e-6;
    int max_iterations = 2000;
    int history = 10;  // L-BFGS memory
    // Declare convergence when an accepted step reduces f by less than
    // plateau_factor * machine-eps * max(|f|, 1), mirroring the factr
    // criterion of the reference L-BFGS-B implementations (high accuracy).
    double plateau_factor = 1e2;
};

struct Result {
    std::vector<double> x;
    double f = 0.0;
    int iterations = 0;
    bool converged = false;
    double projected_gradient_norm = 0.0;
};

/// Evaluates f(x) and writes the gradient into `grad` (same length as x).
using ObjectiveFn = std::function<double(std::span<const double> x, std::span<double> grad)>;

// Box-constrained minimization by limited-memory BFGS over the free
// coordinates: variables pinned at a bound with an outward gradient are frozen
// each iteration, the quasi-Newton direction comes from the standard two-loop
// recursion on the reduced gradient, and a strong-Wolfe bracket/zoom search
// runs along the feasible ray up to the first bound crossing. Convergence is
// declared when the projected gradient ||P(x - g) - x||_inf falls below the
// tolerance or the objective hits the relative-reduction plateau.
// Deterministic: no randomness, fixed evaluation order.
Result minimize_bounded(const ObjectiveFn& objective, std::vector<double> x0,
                        const BoxBounds& bounds, const Options& options = {});

}  // namespace capinfer::optim
