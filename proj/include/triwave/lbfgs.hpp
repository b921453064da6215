#pragma once

#include <functional>
#include <string>
#include <vector>

namespace triwave {

/// Elementwise clamp onto [lo, hi].
void project_bounds(std::vector<double>& c, double lo, double hi);

struct WolfeParams {
    double c1 = 1e-4;
    double c2 = 0.9;
    int max_trials = 20;
    double alpha0 = 1.0;
};

struct LineSearchResult {
    bool success = false;
    double alpha = 0.0;
    double phi = 0.0;
    int n_trials = 0;
};

/// Strong-Wolfe line search (bracket + zoom). phi/dphi evaluate the merit
/// and its derivative along the ray; phi0/dphi0 are values at alpha = 0.
/// Throws if dphi0 >= 0 (not a descent direction).
LineSearchResult wolfe_line_search(const std::function<double(double)>& phi,
                                   const std::function<double(double)>& dphi, double phi0,
                                   double dphi0, const WolfeParams& wp = {});

/// Objective adapter: fills J and G at the (already projected) control c.
struct InversionProblem {
    int n = 0;
    std::function<void(const std::vector<double>& c, double& J, std::vector<double>& G)> evaluate;
};

struct InversionOptions {
    int iter_max = 100;
    double tol = 1e-10;          // on ||G||_2
    double lo = -1e300;
    double hi = 1e300;
    int memory = 10;
    WolfeParams wolfe;
    int max_failed_linesearches = 5;
    std::function<void(const std::string&)> log;  // one line per accepted iteration
};

struct InversionState {
    std::vector<double> c;
    double J = 0.0;
    std::vector<double> gradient;
    std::vector<double> history;  // accepted J values, strictly decreasing
    int iterations = 0;           // accepted iterations
    int failed_linesearches = 0;  // total failures encountered
    std::string termination;
};

/// Projected L-BFGS with strong-Wolfe steps. Curvature pairs with
/// <s, y> <= 1e-12 are discarded; a non-descent direction resets the memory
/// to steepest descent. Terminates on iter_max, ||G|| < tol, or
/// max_failed_linesearches consecutive failures.
InversionState invert(const InversionProblem& problem, const std::vector<double>& c0,
                      const InversionOptions& opts);

}  // namespace triwave
