// Second-order moment propagation: observable jets plus a parameter
// covariance turn into mean shifts, variances, confidence bands and
// per-parameter error contributions.
#pragma once

#include "qupid/observables.hpp"

namespace qupid {

struct ParameterDistribution {
    std::vector<std::string> names;
    RealVector mean;
    RealMatrix covariance;

    ParameterDistribution() = default;
    ParameterDistribution(std::vector<std::string> n, RealVector m, RealMatrix cov)
        : names(std::move(n)), mean(std::move(m)), covariance(std::move(cov)) {
        validate();
    }

    int size() const { return static_cast<int>(mean.size()); }

    bool independent() const {
        for (int j = 0; j < covariance.cols(); ++j)
            for (int i = 0; i < j; ++i)
                if (covariance(i, j) != 0.0) return false;
        return true;
    }

    void validate() const {
        const auto m = mean.size();
        if (static_cast<Eigen::Index>(names.size()) != m)
            throw std::invalid_argument("ParameterDistribution: name count mismatch");
        if (covariance.rows() != m || covariance.cols() != m)
            throw std::invalid_argument("ParameterDistribution: covariance must be " +
                                        std::to_string(m) + "x" + std::to_string(m));
        if (m == 0) return;
        const double scale = std::max(covariance.cwiseAbs().maxCoeff(), 1.0);
        if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
            throw std::invalid_argument("ParameterDistribution: covariance is not symmetric");
        for (int j = 0; j < m; ++j)
            if (covariance(j, j) < 0.0)
                throw std::invalid_argument("ParameterDistribution: negative variance for " +
                                            names[j]);
        if (m > 0) {
            Eigen::SelfAdjointEigenSolver<RealMatrix> solver(covariance);
            const double floor = -1e-10 * std::max(covariance.trace(), 0.0);
            if (solver.eigenvalues().minCoeff() < std::min(floor, 0.0))
                throw std::invalid_argument(
                    "ParameterDistribution: covariance is not positive semidefinite "
                    "(smallest eigenvalue " +
                    std::to_string(solver.eigenvalues().minCoeff()) + ")");
        }
    }
};

namespace detail {
inline void require_jet_size(const ObservableJet& jet, const ParameterDistribution& dist,
                             const char* op) {
    if (jet.grad.size() != dist.size() || jet.hess.rows() != dist.size())
        throw std::invalid_argument(std::string(op) + ": jet built for " +
                                    std::to_string(jet.grad.size()) +
                                    " parameters, distribution has " +
                                    std::to_string(dist.size()));
}
}  // namespace detail

// E[Z] = Z(theta_bar) + 1/2 sum_ij hess_ij sigma_ij. First derivatives do
// not enter: their effect averages to zero for any symmetric distribution.
inline double mean_estimate(const ObservableJet& jet, const ParameterDistribution& dist) {
    detail::require_jet_size(jet, dist, "mean_estimate");
    return jet.value + 0.5 * jet.hess.cwiseProduct(dist.covariance).sum();
}

// Var[Z] = grad^T Sigma grad + 1/2 Tr[(hess Sigma)^2]; Gaussian-only (the
// quartic term uses the Wick pairings of a normal distribution).
inline double variance_estimate(const ObservableJet& jet, const ParameterDistribution& dist) {
    detail::require_jet_size(jet, dist, "variance_estimate");
    const RealMatrix hs = jet.hess * dist.covariance;
    double var = jet.grad.dot(dist.covariance * jet.grad) + 0.5 * (hs * hs).trace();
    if (var < 0.0) {
        if (var < -1e-12 * std::max(1.0, std::abs(jet.value)))
            throw std::runtime_error("variance_estimate: negative variance " +
                                     std::to_string(var) + " beyond round-off tolerance");
        var = 0.0;
    }
    return var;
}

// Share of the mean shift attributed to each parameter (pair): c_ij =
// 1/2 hess_ij sigma_ij. Entries sum to the full shift; for independent
// parameters only the diagonal survives.
inline RealMatrix error_contributions(const ObservableJet& jet,
                                      const ParameterDistribution& dist) {
    detail::require_jet_size(jet, dist, "error_contributions");
    return 0.5 * jet.hess.cwiseProduct(dist.covariance);
}

inline RealVector error_contribution_diagonal(const ObservableJet& jet,
                                              const ParameterDistribution& dist) {
    return error_contributions(jet, dist).diagonal();
}

// Moment of a product of zero-mean jointly Gaussian components: sum over
// pair partitions of covariance products; zero for odd order.
inline double wick_moment(const std::vector<int>& indices, const ParameterDistribution& dist) {
    for (int i : indices)
        if (i < 0 || i >= dist.size())
            throw std::invalid_argument("wick_moment: index out of range");
    if (indices.size() % 2 != 0) return 0.0;
    if (indices.empty()) return 1.0;

    // pair the first index with each remaining one and recurse
    const std::function<double(std::vector<int>)> pairings = [&](std::vector<int> idx) -> double {
        if (idx.empty()) return 1.0;
        const int first = idx.front();
        double total = 0.0;
        for (std::size_t p = 1; p < idx.size(); ++p) {
            std::vector<int> rest;
            rest.reserve(idx.size() - 2);
            for (std::size_t q = 1; q < idx.size(); ++q)
                if (q != p) rest.push_back(idx[q]);
            total += dist.covariance(first, idx[p]) * pairings(std::move(rest));
        }
        return total;
    };
    return pairings(indices);
}

struct UncertaintyEntry {
    double time = 0.0;
    double value_at_mean = 0.0;
    double mean = 0.0;
    double variance = 0.0;
    double band_low = 0.0;
    double band_high = 0.0;
    RealMatrix contributions;
};

struct UncertaintyReport {
    std::string observable_label;
    std::vector<std::string> parameter_names;
    bool independent = true;
    std::pair<double, double> bounds{0.0, 1.0};
    std::vector<UncertaintyEntry> entries;
};

inline UncertaintyEntry uncertainty_entry(double time, const ObservableJet& jet,
                                          const ParameterDistribution& dist,
                                          std::pair<double, double> bounds) {
    UncertaintyEntry e;
    e.time = time;
    e.value_at_mean = jet.value;
    e.mean = mean_estimate(jet, dist);
    e.variance = variance_estimate(jet, dist);
    const double half_band = 2.0 * std::sqrt(e.variance);
    e.band_low = std::max(e.mean - half_band, bounds.first);
    e.band_high = std::min(e.mean + half_band, bounds.second);
    e.contributions = error_contributions(jet, dist);
    return e;
}

// Evaluate one observable across a trajectory and convert every sampled jet
// into moment estimates. Bands are clamped to the observable's range.
inline UncertaintyReport uncertainty_report(const Trajectory& traj, const ObservableSpec& spec,
                                            const ParameterDistribution& dist) {
    UncertaintyReport report;
    report.observable_label = spec.label;
    report.parameter_names = dist.names;
    report.independent = dist.independent();
    report.bounds = observable_bounds(spec);
    report.entries.reserve(traj.samples.size());
    for (const JetState& state : traj.samples) {
        const ObservableJet jet = observable_jet(state, spec);
        report.entries.push_back(uncertainty_entry(state.time, jet, dist, report.bounds));
    }
    return report;
}

}  // namespace qupid
