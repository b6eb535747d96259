#include "concord/optimize.hpp"

#include <cmath>
#include <deque>

#include "concord/util.hpp"

namespace concord {

namespace {

struct LineSearchResult {
    double step = 0.0;
    double value = 0.0;
    bool ok = false;
};

// backtracking Armijo: f(x + a d) >= f(x) + c1 a g.d
LineSearchResult backtrack(const ObjectiveFn& fn, const std::vector<double>& x,
                           const std::vector<double>& dir, double f0, double slope,
                           std::vector<double>& x_new, std::vector<double>& g_new) {
    constexpr double c1 = 1e-4;
    LineSearchResult r;
    if (slope <= 0.0) return r;  // not an ascent direction
    double alpha = 1.0;
    for (int tries = 0; tries < 60; ++tries) {
        for (std::size_t i = 0; i < x.size(); ++i) x_new[i] = x[i] + alpha * dir[i];
        double f = fn(x_new, g_new);
        if (std::isfinite(f) && f >= f0 + c1 * alpha * slope) {
            r.step = alpha;
            r.value = f;
            r.ok = true;
            return r;
        }
        alpha *= 0.5;
    }
    return r;
}

}  // namespace

OptimizeResult lbfgs_maximize(const ObjectiveFn& fn, std::vector<double> x0, int max_iters,
                              double grad_tol, int history) {
    const std::size_t n = x0.size();
    OptimizeResult res;
    res.x = std::move(x0);

    std::vector<double> g(n, 0.0), g_new(n, 0.0), x_new(n, 0.0), dir(n, 0.0);
    double f = fn(res.x, g);
    res.trace.push_back(f);

    std::deque<std::vector<double>> s_hist, y_hist;
    std::deque<double> rho_hist;

    for (int iter = 0; iter < max_iters; ++iter) {
        if (l2_norm(g) < grad_tol) {
            res.converged = true;
            break;
        }
        // two-loop recursion on the ascent gradient
        dir = g;
        std::vector<double> alpha(s_hist.size());
        for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
            alpha[i] = rho_hist[i] * dot(s_hist[i], dir);
            for (std::size_t k = 0; k < n; ++k) dir[k] -= alpha[i] * y_hist[i][k];
        }
        if (!s_hist.empty()) {
            double gamma = dot(s_hist.back(), y_hist.back()) / dot(y_hist.back(), y_hist.back());
            for (auto& d : dir) d *= gamma;
        }
        for (std::size_t i = 0; i < s_hist.size(); ++i) {
            double beta = rho_hist[i] * dot(y_hist[i], dir);
            for (std::size_t k = 0; k < n; ++k) dir[k] += (alpha[i] - beta) * s_hist[i][k];
        }

        double slope = dot(g, dir);
        if (slope <= 0.0) {  // fall back to steepest ascent
            dir = g;
            slope = dot(g, g);
        }
        LineSearchResult ls = backtrack(fn, res.x, dir, f, slope, x_new, g_new);
        if (!ls.ok) break;

        std::vector<double> s(n), y(n);
        for (std::size_t k = 0; k < n; ++k) {
            s[k] = x_new[k] - res.x[k];
            // curvature of the negated (minimized) objective
            y[k] = g[k] - g_new[k];
        }
        double sy = dot(s, y);
        if (sy > 1e-10) {
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(y));
            rho_hist.push_back(1.0 / sy);
            if (static_cast<int>(s_hist.size()) > history) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
        }
        res.x = x_new;
        g = g_new;
        f = ls.value;
        res.trace.push_back(f);
        res.iterations = iter + 1;
    }
    if (l2_norm(g) < grad_tol) res.converged = true;
    return res;
}

OptimizeResult gradient_ascent(const ObjectiveFn& fn, std::vector<double> x0, int max_iters,
                               double grad_tol) {
    const std::size_t n = x0.size();
    OptimizeResult res;
    res.x = std::move(x0);
    std::vector<double> g(n, 0.0), g_new(n, 0.0), x_new(n, 0.0);
    double f = fn(res.x, g);
    res.trace.push_back(f);
    for (int iter = 0; iter < max_iters; ++iter) {
        if (l2_norm(g) < grad_tol) {
            res.converged = true;
            break;
        }
        LineSearchResult ls = backtrack(fn, res.x, g, f, dot(g, g), x_new, g_new);
        if (!ls.ok) break;
        res.x = x_new;
        g = g_new;
        f = ls.value;
        res.trace.push_back(f);
        res.iterations = iter + 1;
    }
    if (l2_norm(g) < grad_tol) res.converged = true;
    return res;
}

}  // namespace concord
