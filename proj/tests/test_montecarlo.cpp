#include "qupid/montecarlo.hpp"

#include "test_helpers.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace qupid;
using namespace qupid_test;

namespace {

ParameterDistribution two_param_dist(double s1, double s2, double rho = 0.0) {
    RealVector mean(2);
    mean << 1.0, 0.0;
    RealMatrix cov(2, 2);
    cov << s1 * s1, rho * s1 * s2, rho * s1 * s2, s2 * s2;
    return ParameterDistribution({"omega_max", "delta"}, mean, cov);
}

Scenario pulse_scenario(double sigma_rel, int steps = 60, int samples = 4) {
    TwoLevelModel model;
    model.delta = 0.0;
    model.omega_max = 1.0;
    model.pulse = gaussian_pulse(1.0, 3.0, M_PI);
    model.uncertain = {{"omega_max", sigma_rel * model.omega_max},
                       {"delta", sigma_rel * model.omega_max}};
    Scenario sc;
    sc.generator = two_level_generator(model);
    sc.distribution = two_level_distribution(model);
    sc.initial_state = Vector::Zero(2);
    sc.initial_state(0, 0) = 1.0;
    sc.kind = StateKind::StateVector;
    sc.grid = TimeGrid(model.pulse.duration(), steps);
    sc.observables.push_back({"z", HermitianExpectation{HermitianOperator(pauli_z())}});
    for (int s = 1; s <= samples; ++s)
        sc.sample_times.push_back(sc.grid.duration * s / samples);
    return sc;
}

}  // namespace

TEST_CASE("sample_parameters: zero covariance repeats the mean") {
    const auto dist = two_param_dist(0.0, 0.0);
    const RealMatrix draws = sample_parameters(dist, 50, 42);
    for (int r = 0; r < draws.rows(); ++r) {
        CHECK(draws(r, 0) == 1.0);
        CHECK(draws(r, 1) == 0.0);
    }
}

TEST_CASE("sample_parameters: one-dimensional law of large numbers") {
    const double sigma = 0.03;
    RealVector mean(1);
    mean << 1.0;
    RealMatrix cov(1, 1);
    cov << sigma * sigma;
    const ParameterDistribution dist({"omega_max"}, mean, cov);
    const int k = 10000;
    const RealMatrix draws = sample_parameters(dist, k, 7);
    const double m = draws.col(0).mean();
    CHECK(std::abs(m - 1.0) < 4.0 * sigma / std::sqrt(double(k)));
    const double var = (draws.col(0).array() - m).square().sum() / (k - 1);
    CHECK(std::abs(var / (sigma * sigma) - 1.0) < 0.1);
}

TEST_CASE("sample_parameters: correlated draws show the requested correlation") {
    const auto dist = two_param_dist(0.2, 0.5, 0.5);
    const int k = 10000;
    const RealMatrix draws = sample_parameters(dist, k, 99);
    const double m0 = draws.col(0).mean(), m1 = draws.col(1).mean();
    double c01 = 0, v0 = 0, v1 = 0;
    for (int r = 0; r < k; ++r) {
        const double a = draws(r, 0) - m0, b = draws(r, 1) - m1;
        c01 += a * b;
        v0 += a * a;
        v1 += b * b;
    }
    const double corr = c01 / std::sqrt(v0 * v1);
    CHECK(std::abs(corr - 0.5) < 0.05);
}

TEST_CASE("sample_parameters is reproducible per seed and differs across seeds") {
    const auto dist = two_param_dist(0.1, 0.2);
    const RealMatrix a = sample_parameters(dist, 64, 1234);
    const RealMatrix b = sample_parameters(dist, 64, 1234);
    CHECK((a - b).norm() == 0.0);
    const RealMatrix c = sample_parameters(dist, 64, 1235);
    CHECK((a - c).norm() != 0.0);
}

TEST_CASE("mc_statistics: zero covariance collapses to the deterministic trajectory") {
    Scenario sc = pulse_scenario(0.0);
    const McStatistics stats = mc_statistics(sc, 16, 5);
    const FrozenGenerator frozen(sc.generator, sc.grid);
    const auto chis = propagate_plain(frozen, sc.distribution.mean, sc.initial_state, sc.kind,
                                      sc.sample_times);
    REQUIRE(stats.per_observable.size() == 1);
    const McSeries& s = stats.per_observable[0];
    for (Eigen::Index c = 0; c < s.mean.size(); ++c) {
        // identical draws: any spread is summation round-off
        CHECK(s.stddev(c) < 1e-14);
        CHECK(s.band_high(c) - s.band_low(c) < 1e-13);
        CHECK(s.mean(c) ==
              Catch::Approx(observable_value(chis[c], sc.kind, sc.observables[0])).margin(1e-14));
    }
}

TEST_CASE("mc_statistics: SEM shrinks with the square root of the sample count") {
    Scenario sc = pulse_scenario(0.05);
    const McStatistics small = mc_statistics(sc, 1000, 21);
    const McStatistics large = mc_statistics(sc, 2000, 21);
    const auto last = small.per_observable[0].sem.size() - 1;
    const double ratio = small.per_observable[0].sem(last) / large.per_observable[0].sem(last);
    CHECK(ratio > std::sqrt(2.0) * 0.9);
    CHECK(ratio < std::sqrt(2.0) * 1.1);
}

TEST_CASE("mc_statistics matches the jet-based mean estimate within sampling error") {
    Scenario sc = pulse_scenario(0.03);
    const int k = 4000;
    const McStatistics stats = mc_statistics(sc, k, 2024);
    const JetState init =
        init_jet(sc.initial_state, sc.kind, sc.distribution.size());
    const Trajectory traj =
        evolve(sc.generator, sc.distribution.mean, sc.grid, init, sc.sample_times);
    const UncertaintyReport report =
        uncertainty_report(traj, sc.observables[0], sc.distribution);
    REQUIRE(report.entries.size() == stats.per_observable[0].times.size());
    for (std::size_t c = 0; c < report.entries.size(); ++c) {
        const double diff =
            std::abs(report.entries[c].mean - stats.per_observable[0].mean(c));
        const double sem = stats.per_observable[0].sem(c);
        CHECK(diff <= 3.0 * sem + 1e-12);
    }
}

TEST_CASE("mc batches are identical across thread counts") {
    Scenario sc = pulse_scenario(0.04, 40, 2);
    const SampleBatch a = mc_batch(sc, 200, 77, 1);
    const SampleBatch b = mc_batch(sc, 200, 77, 4);
    CHECK((a.draws - b.draws).norm() == 0.0);
    for (std::size_t o = 0; o < a.series.size(); ++o)
        CHECK((a.series[o] - b.series[o]).norm() == 0.0);
}

TEST_CASE("mc_batch reports the failing draw") {
    Scenario sc = pulse_scenario(0.04, 10, 1);
    sc.generator.couplings[0].op = [](double) {
        return Matrix(std::nan("") * pauli_z());
    };
    REQUIRE_THROWS_WITH(mc_batch(sc, 4, 3), Catch::Matchers::ContainsSubstring("draw"));
}

TEST_CASE("subsampling_error_curve: full subset has zero error, slope is -1/2") {
    // synthetic fidelity population; only the averaging statistics matter
    const int k = 10000;
    rng::GaussianStream g(rng::substream(31337, 0));
    RealVector values(k);
    for (int i = 0; i < k; ++i) values(i) = 0.99 + 0.003 * g.next();

    const ScalingCurve trivial = subsampling_error_curve(values, {k}, 5, 11);
    CHECK(trivial.errors[0] == Catch::Approx(0.0).margin(1e-12));

    const std::vector<int> sizes{1, 3, 10, 32, 100, 316, 1000};
    const ScalingCurve curve = subsampling_error_curve(values, sizes, 400, 11);
    for (double e : curve.errors) CHECK(e > 0.0);
    CHECK(curve.slope > -0.55);
    CHECK(curve.slope < -0.45);
}

TEST_CASE("subsampling_error_curve validates its inputs") {
    RealVector values = RealVector::LinSpaced(100, 0.0, 1.0);
    CHECK_THROWS(subsampling_error_curve(values, {0, 10}, 5, 1));
    CHECK_THROWS(subsampling_error_curve(values, {10, 10}, 5, 1));
    CHECK_THROWS(subsampling_error_curve(values, {10, 101}, 5, 1));
}

TEST_CASE("equal_accuracy_speedup: direct ratio on the curve") {
    ScalingCurve curve;
    for (int n : {10, 100, 1000, 10000}) {
        curve.sizes.push_back(n);
        curve.errors.push_back(0.1 / std::sqrt(double(n)));
    }
    curve.slope = -0.5;
    curve.log_intercept = std::log(0.1);
    const double err_at_1000 = 0.1 / std::sqrt(1000.0);
    const SpeedupEstimate est = equal_accuracy_speedup(curve, err_at_1000, 3);
    CHECK_FALSE(est.extrapolated);
    CHECK(est.n_mc == Catch::Approx(1000.0).epsilon(1e-6));
    CHECK(est.speedup == Catch::Approx(1000.0 / 3.0).epsilon(1e-6));

    // an error below the measured range extrapolates along the fitted law
    const SpeedupEstimate out = equal_accuracy_speedup(curve, 1e-5, 3);
    CHECK(out.extrapolated);
    CHECK(out.n_mc == Catch::Approx(1e8).epsilon(1e-3));
}

TEST_CASE("gaussian substreams are deterministic and uncorrelated across draws") {
    rng::GaussianStream a(rng::substream(5, 0));
    rng::GaussianStream a2(rng::substream(5, 0));
    rng::GaussianStream b(rng::substream(5, 1));
    double corr = 0.0;
    for (int i = 0; i < 2000; ++i) {
        const double x = a.next();
        CHECK(x == a2.next());
        corr += x * b.next();
    }
    CHECK(std::abs(corr / 2000) < 0.05);
}
