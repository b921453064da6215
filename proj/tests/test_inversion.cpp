#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "triwave/lbfgs.hpp"

using namespace triwave;

TEST_CASE("project_bounds clamps below, above, leaves interior") {
    std::vector<double> c = {-2.0, 0.5, 7.0};
    project_bounds(c, 0.0, 5.0);
    CHECK(c[0] == 0.0);
    CHECK(c[1] == 0.5);
    CHECK(c[2] == 5.0);
}

TEST_CASE("wolfe line search on (a-1)^2") {
    auto phi = [](double a) { return (a - 1.0) * (a - 1.0); };
    auto dphi = [](double a) { return 2.0 * (a - 1.0); };
    auto res = wolfe_line_search(phi, dphi, phi(0), dphi(0));
    REQUIRE(res.success);
    // Both strong Wolfe conditions hold at the returned step.
    CHECK(phi(res.alpha) <= phi(0) + 1e-4 * res.alpha * dphi(0));
    CHECK(std::abs(dphi(res.alpha)) <= 0.9 * std::abs(dphi(0)));
    CHECK(res.alpha == doctest::Approx(1.0).epsilon(0.5));
    // alpha = 1 already satisfies the conditions: accepted on first trial.
    CHECK(res.n_trials == 1);

    CHECK_THROWS(wolfe_line_search(phi, dphi, phi(2.0), dphi(2.0)));  // ascent input
}

TEST_CASE("wolfe line search needs expansion when the minimum is far") {
    auto phi = [](double a) { return (a - 40.0) * (a - 40.0); };
    auto dphi = [](double a) { return 2.0 * (a - 40.0); };
    auto res = wolfe_line_search(phi, dphi, phi(0), dphi(0));
    REQUIRE(res.success);
    CHECK(std::abs(dphi(res.alpha)) <= 0.9 * std::abs(dphi(0)));
}

TEST_CASE("quadratic bowl converges in a few iterations") {
    const std::vector<double> target = {0.4, -0.3, 0.9, 0.1};
    InversionProblem p;
    p.n = 4;
    p.evaluate = [&](const std::vector<double>& c, double& J, std::vector<double>& G) {
        J = 0.0;
        for (int i = 0; i < 4; ++i) {
            G[i] = c[i] - target[i];
            J += 0.5 * G[i] * G[i];
        }
    };
    InversionOptions opts;
    opts.iter_max = 10;
    opts.tol = 1e-12;
    auto st = invert(p, {0, 0, 0, 0}, opts);
    CHECK(st.iterations <= 3);
    for (int i = 0; i < 4; ++i) CHECK(std::abs(st.c[i] - target[i]) < 1e-8);
    // History strictly decreasing.
    for (size_t k = 1; k < st.history.size(); ++k) CHECK(st.history[k] < st.history[k - 1]);
}

TEST_CASE("bowl with the minimizer outside the box lands on the projection") {
    const std::vector<double> target = {2.0, -3.0, 0.5};
    InversionProblem p;
    p.n = 3;
    p.evaluate = [&](const std::vector<double>& c, double& J, std::vector<double>& G) {
        J = 0.0;
        for (int i = 0; i < 3; ++i) {
            G[i] = c[i] - target[i];
            J += 0.5 * G[i] * G[i];
        }
    };
    InversionOptions opts;
    opts.iter_max = 50;
    opts.tol = 0.0;
    opts.lo = -1.0;
    opts.hi = 1.0;
    auto st = invert(p, {0, 0, 0}, opts);
    CHECK(std::abs(st.c[0] - 1.0) < 1e-6);   // clamped at hi
    CHECK(std::abs(st.c[1] + 1.0) < 1e-6);   // clamped at lo
    CHECK(std::abs(st.c[2] - 0.5) < 1e-6);   // interior optimum

    CHECK_THROWS(invert(p, {5, 0, 0}, opts));  // c0 outside the box
}

TEST_CASE("rosenbrock: curvature memory earns superlinear progress") {
    InversionProblem p;
    p.n = 2;
    p.evaluate = [](const std::vector<double>& c, double& J, std::vector<double>& G) {
        const double x = c[0], y = c[1];
        J = 100.0 * (y - x * x) * (y - x * x) + (1.0 - x) * (1.0 - x);
        G[0] = -400.0 * x * (y - x * x) - 2.0 * (1.0 - x);
        G[1] = 200.0 * (y - x * x);
    };
    InversionOptions opts;
    opts.iter_max = 200;
    opts.tol = 1e-10;
    auto st = invert(p, {-1.2, 1.0}, opts);
    CHECK(std::abs(st.c[0] - 1.0) < 1e-5);
    CHECK(std::abs(st.c[1] - 1.0) < 1e-5);
}

TEST_CASE("termination on repeated line-search failure") {
    // A function whose gradient lies: claims descent everywhere but J never
    // drops. The driver must give up after max_failed_linesearches streaks.
    InversionProblem p;
    p.n = 1;
    p.evaluate = [](const std::vector<double>& c, double& J, std::vector<double>& G) {
        J = 1.0 + std::abs(c[0]);  // kink at the start point
        G[0] = c[0] >= 0 ? 1.0 : -1.0;
        (void)c;
    };
    InversionOptions opts;
    opts.iter_max = 50;
    opts.max_failed_linesearches = 5;
    opts.wolfe.max_trials = 8;
    auto st = invert(p, {0.0}, opts);
    CHECK(st.termination.find("line search failed") != std::string::npos);
    CHECK(st.failed_linesearches >= 5);
}
