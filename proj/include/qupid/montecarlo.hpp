// Monte Carlo oracle: seeded multivariate-normal sampling, derivative-free
// trajectory batches, empirical statistics, subsampling error curves and the
// equal-accuracy cost comparison.
#pragma once

#include "qupid/models.hpp"
#include "qupid/montecarlo_rng.hpp"

#include <atomic>
#include <cstdint>
#include <thread>

namespace qupid {

// Everything needed to run one study: dynamics, distribution, initial state,
// grid, observables and where to sample them.
struct Scenario {
    DynamicGenerator generator;
    ParameterDistribution distribution;
    Matrix initial_state;
    StateKind kind = StateKind::StateVector;
    TimeGrid grid;
    std::vector<ObservableSpec> observables;
    std::vector<double> sample_times;
};

namespace detail {

inline void parallel_for(int count, int threads, const std::function<void(int)>& body) {
    threads = std::max(1, std::min(threads, count));
    if (threads == 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    pool.reserve(threads);
    for (int w = 0; w < threads; ++w)
        pool.emplace_back([&, w] {
            try {
                for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) body(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

// Symmetric square root of the covariance; rejects indefinite input.
inline RealMatrix covariance_factor(const ParameterDistribution& dist) {
    const int m = dist.size();
    if (m == 0) return RealMatrix(0, 0);
    Eigen::SelfAdjointEigenSolver<RealMatrix> solver(dist.covariance);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("sample_parameters: covariance factorization failed");
    RealVector lambda = solver.eigenvalues();
    const double floor = -1e-10 * std::max(dist.covariance.trace(), 0.0);
    for (int j = 0; j < m; ++j) {
        if (lambda(j) < std::min(floor, 0.0))
            throw std::runtime_error(
                "sample_parameters: covariance factorization failed (eigenvalue " +
                std::to_string(lambda(j)) + ")");
        lambda(j) = std::sqrt(std::max(lambda(j), 0.0));
    }
    return solver.eigenvectors() * lambda.asDiagonal() * solver.eigenvectors().transpose();
}

}  // namespace detail

// K multivariate-normal draws, one row per draw. Each draw pulls from its
// own counter-derived substream, so the result depends only on (dist, k,
// seed), never on execution order.
inline RealMatrix sample_parameters(const ParameterDistribution& dist, int k, std::uint64_t seed) {
    if (k < 0) throw std::invalid_argument("sample_parameters: negative sample count");
    const int m = dist.size();
    const RealMatrix factor = detail::covariance_factor(dist);
    RealMatrix draws(k, m);
    for (int r = 0; r < k; ++r) {
        rng::GaussianStream stream(rng::substream(seed, static_cast<std::uint64_t>(r)));
        RealVector z(m);
        for (int j = 0; j < m; ++j) z(j) = stream.next();
        draws.row(r) = (dist.mean + factor * z).transpose();
    }
    return draws;
}

// Per-draw observable series: series[obs] is a (draws x times) table.
struct SampleBatch {
    std::uint64_t seed = 0;
    RealMatrix draws;
    std::vector<double> times;
    std::vector<RealMatrix> series;

    int size() const { return static_cast<int>(draws.rows()); }
};

inline SampleBatch mc_batch(const Scenario& scenario, int k, std::uint64_t seed,
                            int threads = 1) {
    if (k < 1) throw std::invalid_argument("mc_batch: need at least one draw");
    SampleBatch batch;
    batch.seed = seed;
    batch.draws = sample_parameters(scenario.distribution, k, seed);

    // resolve the effective sample times once (t = 0 is always included)
    std::vector<double> times{0.0};
    {
        const double tol = 1e-9 * std::max(scenario.grid.duration, 1.0);
        for (double t : scenario.sample_times)
            if (t > tol) times.push_back(t);
    }
    batch.times = times;

    const FrozenGenerator frozen(scenario.generator, scenario.grid);
    const auto n_obs = scenario.observables.size();
    const auto n_times = times.size();
    batch.series.assign(n_obs, RealMatrix(k, n_times));

    detail::parallel_for(k, threads, [&](int r) {
        try {
            const RealVector theta = batch.draws.row(r).transpose();
            const auto chis = propagate_plain(frozen, theta, scenario.initial_state,
                                              scenario.kind, times);
            for (std::size_t o = 0; o < n_obs; ++o)
                for (std::size_t s = 0; s < n_times; ++s)
                    batch.series[o](r, s) =
                        observable_value(chis[s], scenario.kind, scenario.observables[o]);
        } catch (const std::exception& e) {
            throw std::runtime_error("mc_batch: draw " + std::to_string(r) + ": " + e.what());
        }
    });
    return batch;
}

struct McSeries {
    std::string observable_label;
    std::vector<double> times;
    RealVector mean, stddev, sem, band_low, band_high;
};

struct McStatistics {
    int samples = 0;
    std::uint64_t seed = 0;
    std::vector<McSeries> per_observable;
};

// Empirical mean, sample deviation, standard error and the clamped 2 sigma
// band per sample time. Reduction runs in draw order, so the numbers are
// identical for every thread count.
inline McStatistics statistics_from_batch(const SampleBatch& batch, const Scenario& scenario) {
    const int k = batch.size();
    if (k < 2) throw std::invalid_argument("mc_statistics: need at least two draws");
    McStatistics stats;
    stats.samples = k;
    stats.seed = batch.seed;
    for (std::size_t o = 0; o < batch.series.size(); ++o) {
        const RealMatrix& table = batch.series[o];
        const auto bounds = observable_bounds(scenario.observables[o]);
        McSeries s;
        s.observable_label = scenario.observables[o].label;
        s.times = batch.times;
        const auto n_times = table.cols();
        s.mean.resize(n_times);
        s.stddev.resize(n_times);
        s.sem.resize(n_times);
        s.band_low.resize(n_times);
        s.band_high.resize(n_times);
        for (Eigen::Index c = 0; c < n_times; ++c) {
            double acc = 0.0;
            for (int r = 0; r < k; ++r) acc += table(r, c);
            const double mean = acc / k;
            double sq = 0.0;
            for (int r = 0; r < k; ++r) {
                const double d = table(r, c) - mean;
                sq += d * d;
            }
            const double var = sq / (k - 1);
            s.mean(c) = mean;
            s.stddev(c) = std::sqrt(var);
            s.sem(c) = s.stddev(c) / std::sqrt(double(k));
            s.band_low(c) = std::max(mean - 2.0 * s.stddev(c), bounds.first);
            s.band_high(c) = std::min(mean + 2.0 * s.stddev(c), bounds.second);
        }
        stats.per_observable.push_back(std::move(s));
    }
    return stats;
}

inline McStatistics mc_statistics(const Scenario& scenario, int k, std::uint64_t seed,
                                  int threads = 1) {
    return statistics_from_batch(mc_batch(scenario, k, seed, threads), scenario);
}

struct ScalingCurve {
    std::vector<double> sizes;
    std::vector<double> errors;
    double slope = 0.0;
    double log_intercept = 0.0;  // fit: log(err) = slope * log(N) + log_intercept
};

// Mean estimation error of subset averages against the full-batch mean.
// Subsets are drawn without replacement, so a subset of the full batch size
// reproduces the batch mean exactly.
inline ScalingCurve subsampling_error_curve(const RealVector& values,
                                            const std::vector<int>& subset_sizes, int repeats,
                                            std::uint64_t seed) {
    const int k = static_cast<int>(values.size());
    if (repeats < 1) throw std::invalid_argument("subsampling_error_curve: repeats must be >= 1");
    for (std::size_t i = 0; i < subset_sizes.size(); ++i) {
        if (subset_sizes[i] < 1 || subset_sizes[i] > k)
            throw std::invalid_argument("subsampling_error_curve: subset size out of range");
        if (i > 0 && subset_sizes[i] <= subset_sizes[i - 1])
            throw std::invalid_argument("subsampling_error_curve: sizes must increase");
    }
    const double full_mean = values.mean();

    ScalingCurve curve;
    std::vector<int> indices(k);
    for (int i = 0; i < k; ++i) indices[i] = i;
    rng::SplitMix64 stream(rng::substream(seed, 0x517b5e7ULL));

    for (int n : subset_sizes) {
        double err_acc = 0.0;
        for (int rep = 0; rep < repeats; ++rep) {
            // partial Fisher-Yates: the first n entries become the subset
            for (int i = 0; i < n; ++i) {
                const int j = i + static_cast<int>(stream.uniform01() * (k - i));
                std::swap(indices[i], indices[std::min(j, k - 1)]);
            }
            double acc = 0.0;
            for (int i = 0; i < n; ++i) acc += values(indices[i]);
            err_acc += std::abs(full_mean - acc / n);
        }
        curve.sizes.push_back(n);
        curve.errors.push_back(err_acc / repeats);
    }

    // log-log least squares over the nonzero errors
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int used = 0;
    for (std::size_t i = 0; i < curve.sizes.size(); ++i) {
        if (curve.errors[i] <= 0.0) continue;
        const double x = std::log(curve.sizes[i]);
        const double y = std::log(curve.errors[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++used;
    }
    if (used >= 2) {
        curve.slope = (used * sxy - sx * sy) / (used * sxx - sx * sx);
        curve.log_intercept = (sy - curve.slope * sx) / used;
    }
    return curve;
}

struct SpeedupEstimate {
    double n_mc = 0.0;        // Monte Carlo trajectories matching the error
    double speedup = 0.0;     // n_mc / qupid_cost_evals
    bool extrapolated = false;
};

// Read the Monte Carlo sample count that reaches `qupid_error` off the
// curve (log-log interpolation), and charge the jet engine at its
// finite-difference-equivalent evaluation count.
inline SpeedupEstimate equal_accuracy_speedup(const ScalingCurve& curve, double qupid_error,
                                              long qupid_cost_evals) {
    if (curve.sizes.size() < 2)
        throw std::invalid_argument("equal_accuracy_speedup: curve needs at least two points");
    if (!(qupid_error > 0.0))
        throw std::invalid_argument("equal_accuracy_speedup: error must be positive");
    if (qupid_cost_evals < 1)
        throw std::invalid_argument("equal_accuracy_speedup: cost must be positive");

    const double ly = std::log(qupid_error);
    SpeedupEstimate est;
    double ln_n = 0.0;
    bool found = false;
    for (std::size_t i = 0; i + 1 < curve.sizes.size(); ++i) {
        const double y0 = std::log(curve.errors[i]);
        const double y1 = std::log(curve.errors[i + 1]);
        if ((ly <= y0 && ly >= y1) || (ly >= y0 && ly <= y1)) {
            const double x0 = std::log(curve.sizes[i]);
            const double x1 = std::log(curve.sizes[i + 1]);
            const double w = y1 == y0 ? 0.0 : (ly - y0) / (y1 - y0);
            ln_n = x0 + w * (x1 - x0);
            found = true;
            break;
        }
    }
    if (!found) {
        // outside the measured range: continue along the fitted power law
        est.extrapolated = true;
        ln_n = (ly - curve.log_intercept) / curve.slope;
    }
    est.n_mc = std::exp(ln_n);
    est.speedup = est.n_mc / static_cast<double>(qupid_cost_evals);
    return est;
}

}  // namespace qupid
