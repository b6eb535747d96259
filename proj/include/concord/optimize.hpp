#pragma once

#include <functional>
#include <vector>

namespace concord {

// value and gradient of the function being maximized
using ObjectiveFn = std::function<double(const std::vector<double>&, std::vector<double>&)>;

struct OptimizeResult {
    std::vector<double> x;
    std::vector<double> trace;  // accepted objective values, initial point first
    bool converged = false;
    int iterations = 0;
};

// L-BFGS ascent (two-loop recursion, history 10) with backtracking Armijo
// line search. Stops when the gradient L2 norm drops below grad_tol, the
// line search stalls, or max_iters is hit.
OptimizeResult lbfgs_maximize(const ObjectiveFn& fn, std::vector<double> x0, int max_iters,
                              double grad_tol, int history = 10);

// Plain gradient ascent with the same line search and stopping rules.
OptimizeResult gradient_ascent(const ObjectiveFn& fn, std::vector<double> x0, int max_iters,
                               double grad_tol);

}  // namespace concord
