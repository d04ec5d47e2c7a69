// Central finite-difference stencils over scalar observables, used as the
// independent derivative oracle and as the cost model for evaluation counts.
#pragma once

#include "qupid/linalg.hpp"

#include <functional>

namespace qupid {

using ScalarField = std::function<double(const RealVector&)>;

// Step sizes balancing truncation against round-off in double precision.
// Curvature stencils divide by epsilon^2, so they need a larger step.
inline double default_epsilon_first(double theta_scale) {
    return 1e-5 * std::max(std::abs(theta_scale), 1e-3);
}

inline double default_epsilon_second(double theta_scale) {
    return 2.5e-4 * std::max(std::abs(theta_scale), 1e-3);
}

namespace detail {
inline double checked(double value, const char* where) {
    if (!std::isfinite(value))
        throw std::runtime_error(std::string(where) + ": non-finite function value");
    return value;
}
}  // namespace detail

inline double fd_first(const ScalarField& f, RealVector theta, int j, double epsilon) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("fd_first: epsilon must be positive");
    theta(j) += epsilon;
    const double plus = detail::checked(f(theta), "fd_first(+)");
    theta(j) -= 2.0 * epsilon;
    const double minus = detail::checked(f(theta), "fd_first(-)");
    return (plus - minus) / (2.0 * epsilon);
}

inline double fd_second_diag(const ScalarField& f, RealVector theta, int j, double epsilon) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("fd_second_diag: epsilon must be positive");
    const double center = detail::checked(f(theta), "fd_second_diag(0)");
    theta(j) += epsilon;
    const double plus = detail::checked(f(theta), "fd_second_diag(+)");
    theta(j) -= 2.0 * epsilon;
    const double minus = detail::checked(f(theta), "fd_second_diag(-)");
    return (plus - 2.0 * center + minus) / (epsilon * epsilon);
}

// Seven-point mixed stencil. Relative to the plain one-sided product stencil
// it reuses the single-parameter shifts, costing two extra evaluations per
// pair.
inline double fd_second_mixed(const ScalarField& f, RealVector theta, int i, int j,
                              double epsilon) {
    if (i == j) throw std::invalid_argument("fd_second_mixed: indices must differ");
    if (!(epsilon > 0.0)) throw std::invalid_argument("fd_second_mixed: epsilon must be positive");
    const auto at = [&](double di, double dj) {
        RealVector t = theta;
        t(i) += di;
        t(j) += dj;
        return detail::checked(f(t), "fd_second_mixed");
    };
    const double e = epsilon;
    const double sum = at(e, e) - at(e, 0) - at(0, e) + 2.0 * at(0, 0) - at(-e, 0) - at(0, -e) +
                       at(-e, -e);
    return sum / (2.0 * e * e);
}

// Trajectory-evaluation budget of a finite-difference pass: gradients and
// diagonal curvatures need 1 + 2M runs; adding mixed terms brings the total
// to 1 + M + M^2.
inline long evaluation_count(int m, bool include_mixed) {
    if (m < 0) throw std::invalid_argument("evaluation_count: negative parameter count");
    const long lm = m;
    return include_mixed ? 1 + lm + lm * lm : 1 + 2 * lm;
}

inline RealVector fd_gradient(const ScalarField& f, const RealVector& theta) {
    RealVector g(theta.size());
    for (int j = 0; j < theta.size(); ++j)
        g(j) = fd_first(f, theta, j, default_epsilon_first(theta(j)));
    return g;
}

inline RealMatrix fd_hessian(const ScalarField& f, const RealVector& theta) {
    const int m = static_cast<int>(theta.size());
    RealMatrix h(m, m);
    for (int j = 0; j < m; ++j)
        h(j, j) = fd_second_diag(f, theta, j, default_epsilon_second(theta(j)));
    for (int j = 0; j < m; ++j)
        for (int i = 0; i < j; ++i) {
            const double scale = std::sqrt(std::max(std::abs(theta(i)), 1e-3) *
                                           std::max(std::abs(theta(j)), 1e-3));
            h(i, j) = h(j, i) = fd_second_mixed(f, theta, i, j, default_epsilon_second(scale));
        }
    return h;
}

}  // namespace qupid
