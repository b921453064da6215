#include "triwave/lbfgs.hpp"

#include <cmath>
#include <deque>
#include <sstream>
#include <stdexcept>

namespace triwave {

void project_bounds(std::vector<double>& c, double lo, double hi) {
    for (auto& v : c) v = std::min(std::max(v, lo), hi);
}

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

}  // namespace

LineSearchResult wolfe_line_search(const std::function<double(double)>& phi,
                                   const std::function<double(double)>& dphi, double phi0,
                                   double dphi0, const WolfeParams& wp) {
    if (!(dphi0 < 0.0))
        throw std::invalid_argument("wolfe_line_search: non-descent direction (phi'(0) >= 0)");
    LineSearchResult res;

    auto zoom = [&](double alo, double ahi, double phi_lo) {
        while (res.n_trials < wp.max_trials) {
            const double a = 0.5 * (alo + ahi);
            ++res.n_trials;
            const double f = phi(a);
            if (f > phi0 + wp.c1 * a * dphi0 || f >= phi_lo) {
                ahi = a;
            } else {
                const double g = dphi(a);
                if (std::abs(g) <= -wp.c2 * dphi0) {
                    res.success = true;
                    res.alpha = a;
                    res.phi = f;
                    return;
                }
                if (g * (ahi - alo) >= 0.0) ahi = alo;
                alo = a;
                phi_lo = f;
            }
            if (std::abs(ahi - alo) < 1e-14 * std::max(1.0, std::abs(alo))) break;
        }
    };

    double a_prev = 0.0, phi_prev = phi0;
    double a = wp.alpha0;
    for (int it = 0; it < wp.max_trials && res.n_trials < wp.max_trials; ++it) {
        ++res.n_trials;
        const double f = phi(a);
        if (f > phi0 + wp.c1 * a * dphi0 || (it > 0 && f >= phi_prev)) {
            zoom(a_prev, a, phi_prev);
            return res;
        }
        const double g = dphi(a);
        if (std::abs(g) <= -wp.c2 * dphi0) {
            res.success = true;
            res.alpha = a;
            res.phi = f;
            return res;
        }
        if (g >= 0.0) {
            zoom(a, a_prev, f);
            return res;
        }
        a_prev = a;
        phi_prev = f;
        a *= 2.0;
    }
    return res;
}

InversionState invert(const InversionProblem& problem, const std::vector<double>& c0,
                      const InversionOptions& opts) {
    const int n = problem.n;
    for (double v : c0)
        if (v < opts.lo - 1e-12 || v > opts.hi + 1e-12)
            throw std::invalid_argument("invert: initial control violates the bounds");

    InversionState st;
    st.c = c0;
    project_bounds(st.c, opts.lo, opts.hi);
    st.gradient.assign(n, 0.0);
    problem.evaluate(st.c, st.J, st.gradient);
    st.history.push_back(st.J);
    if (!std::isfinite(st.J)) throw std::runtime_error("invert: non-finite initial misfit");

    std::deque<std::pair<std::vector<double>, std::vector<double>>> mem;  // (s, y)
    int failed_streak = 0;

    // Cache of the last line-search evaluation so the accepted point is not
    // recomputed.
    std::vector<double> c_try(n), G_try(n);
    double J_try = 0.0, alpha_cached = -1.0;

    auto eval_at = [&](double alpha, const std::vector<double>& d) {
        for (int i = 0; i < n; ++i) c_try[i] = st.c[i] + alpha * d[i];
        project_bounds(c_try, opts.lo, opts.hi);
        problem.evaluate(c_try, J_try, G_try);
        alpha_cached = alpha;
        if (!std::isfinite(J_try)) throw std::runtime_error("invert: non-finite misfit during line search");
    };

    for (int k = 0; k < opts.iter_max; ++k) {
        const double gnorm = norm2(st.gradient);
        if (gnorm < opts.tol) {
            st.termination = "gradient norm below tolerance";
            return st;
        }

        // Two-loop recursion for d = -H G.
        std::vector<double> d = st.gradient;
        {
            std::vector<double> alpha_i(mem.size());
            for (int i = static_cast<int>(mem.size()) - 1; i >= 0; --i) {
                const auto& [s, y] = mem[i];
                const double rho = 1.0 / dot(s, y);
                alpha_i[i] = rho * dot(s, d);
                for (int j = 0; j < n; ++j) d[j] -= alpha_i[i] * y[j];
            }
            if (!mem.empty()) {
                const auto& [s, y] = mem.back();
                const double gamma = dot(s, y) / dot(y, y);
                for (auto& v : d) v *= gamma;
            }
            for (size_t i = 0; i < mem.size(); ++i) {
                const auto& [s, y] = mem[i];
                const double rho = 1.0 / dot(s, y);
                const double beta = rho * dot(y, d);
                for (int j = 0; j < n; ++j) d[j] += (alpha_i[i] - beta) * s[j];
            }
            for (auto& v : d) v = -v;
        }
        double slope = dot(d, st.gradient);
        if (slope >= 0.0) {
            mem.clear();
            for (int j = 0; j < n; ++j) d[j] = -st.gradient[j];
            slope = -dot(st.gradient, st.gradient);
        }

        auto phi = [&](double a) {
            eval_at(a, d);
            return J_try;
        };
        auto dphi = [&](double a) {
            if (alpha_cached != a) eval_at(a, d);
            // Derivative of J(P(c + a d)) along the ray: clamped components
            // do not move.
            double s = 0.0;
            for (int i = 0; i < n; ++i) {
                const double raw = st.c[i] + a * d[i];
                if (raw > opts.lo && raw < opts.hi) s += G_try[i] * d[i];
            }
            return s;
        };

        LineSearchResult ls;
        try {
            ls = wolfe_line_search(phi, dphi, st.J, slope, opts.wolfe);
        } catch (const std::invalid_argument&) {
            ls.success = false;
        }
        if (!ls.success || !(ls.phi < st.J)) {
            ++st.failed_linesearches;
            ++failed_streak;
            mem.clear();
            if (failed_streak >= opts.max_failed_linesearches) {
                st.termination = "line search failed " + std::to_string(failed_streak) +
                                 " times in a row";
                return st;
            }
            continue;
        }
        failed_streak = 0;

        if (alpha_cached != ls.alpha) eval_at(ls.alpha, d);
        std::vector<double> s_vec(n), y_vec(n);
        for (int i = 0; i < n; ++i) {
            s_vec[i] = c_try[i] - st.c[i];
            y_vec[i] = G_try[i] - st.gradient[i];
        }
        if (dot(s_vec, y_vec) > 1e-12) {
            mem.push_back({std::move(s_vec), std::move(y_vec)});
            if (static_cast<int>(mem.size()) > opts.memory) mem.pop_front();
        }
        st.c = c_try;
        st.J = J_try;
        st.gradient = G_try;
        st.history.push_back(st.J);
        ++st.iterations;
        if (opts.log) {
            std::ostringstream os;
            os << st.iterations << " " << st.J << " " << norm2(st.gradient) << " " << ls.alpha
               << " " << ls.n_trials;
            opts.log(os.str());
        }
    }
    st.termination = "iteration limit reached";
    return st;
}

}  // namespace triwave
