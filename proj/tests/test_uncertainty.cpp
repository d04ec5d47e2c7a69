#include "qupid/uncertainty.hpp"

#include "test_helpers.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace qupid;
using namespace qupid_test;

namespace {

ParameterDistribution diag_dist(std::vector<double> sigmas) {
    const int m = static_cast<int>(sigmas.size());
    std::vector<std::string> names;
    RealVector mean = RealVector::Zero(m);
    RealMatrix cov = RealMatrix::Zero(m, m);
    for (int j = 0; j < m; ++j) {
        names.push_back("p" + std::to_string(j));
        cov(j, j) = sigmas[j] * sigmas[j];
    }
    return ParameterDistribution(std::move(names), std::move(mean), std::move(cov));
}

ObservableJet make_jet(double value, RealVector grad, RealMatrix hess) {
    ObservableJet jet;
    jet.value = value;
    jet.grad = std::move(grad);
    jet.hess = std::move(hess);
    return jet;
}

// Gaussian moments of an exactly quadratic observable, assembled only from
// wick_moment calls; the independent route for the closed-form estimates.
double wick_mean(double c, const RealMatrix& h, const ParameterDistribution& dist) {
    double mean = c;
    const int m = dist.size();
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) mean += 0.5 * h(i, j) * wick_moment({i, j}, dist);
    return mean;
}

double wick_variance(const RealVector& g, const RealMatrix& h,
                     const ParameterDistribution& dist) {
    const int m = dist.size();
    double ex2 = 0.0;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) ex2 += g(i) * g(j) * wick_moment({i, j}, dist);
    double quart = 0.0;
    double tr = 0.0;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            tr += 0.5 * h(i, j) * wick_moment({i, j}, dist);
            for (int k = 0; k < m; ++k)
                for (int l = 0; l < m; ++l)
                    quart += 0.25 * h(i, j) * h(k, l) * wick_moment({i, j, k, l}, dist);
        }
    // cubic cross terms vanish by Wick's theorem (odd order)
    return ex2 + quart - tr * tr;
}

}  // namespace

TEST_CASE("mean_estimate: zero covariance returns the value itself") {
    const auto dist = diag_dist({0.0, 0.0});
    const auto jet = make_jet(0.37, RealVector::Random(2), RealMatrix::Random(2, 2).selfadjointView<Eigen::Upper>());
    CHECK(mean_estimate(jet, dist) == Catch::Approx(0.37));
}

TEST_CASE("mean_estimate: quadratic observable is exact") {
    // Z = theta^2 at theta_bar = 0: value 0, grad 0, hess 2 -> mean = s^2
    const double s = 0.13;
    const auto dist = diag_dist({s});
    RealMatrix h(1, 1);
    h << 2.0;
    const auto jet = make_jet(0.0, RealVector::Zero(1), h);
    CHECK(mean_estimate(jet, dist) == Catch::Approx(s * s));
}

TEST_CASE("variance_estimate: linear and quadratic closed forms") {
    const double a = 0.8, s = 0.21;
    const auto dist = diag_dist({s});
    RealVector g(1);
    g << a;
    const auto linear = make_jet(0.0, g, RealMatrix::Zero(1, 1));
    CHECK(variance_estimate(linear, dist) == Catch::Approx(a * a * s * s));

    RealMatrix h(1, 1);
    h << 2.0;
    const auto quad = make_jet(0.0, RealVector::Zero(1), h);
    // E[theta^4] - E[theta^2]^2 = 2 s^4 for a centered Gaussian
    CHECK(variance_estimate(quad, dist) == Catch::Approx(2.0 * s * s * s * s));
}

TEST_CASE("wick_moment: odd orders vanish, fourth order sums three pairings") {
    std::vector<std::string> names{"a", "b", "c", "d"};
    RealVector mean = RealVector::Zero(4);
    RealMatrix cov(4, 4);
    cov << 1.0, 0.2, 0.1, 0.05,
           0.2, 0.9, 0.3, 0.15,
           0.1, 0.3, 1.1, 0.25,
           0.05, 0.15, 0.25, 0.8;
    const ParameterDistribution dist(names, mean, cov);
    CHECK(wick_moment({0, 1, 2}, dist) == 0.0);
    const double expected = cov(0, 1) * cov(2, 3) + cov(0, 2) * cov(1, 3) + cov(0, 3) * cov(1, 2);
    CHECK(wick_moment({0, 1, 2, 3}, dist) == Catch::Approx(expected));

    const double s = 0.4;
    const auto one = diag_dist({s});
    CHECK(wick_moment({0, 0, 0, 0}, one) == Catch::Approx(3.0 * s * s * s * s));
}

TEST_CASE("quadratic exactness: estimates match the Wick-theorem route") {
    auto rng = make_rng(77);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
        const int m = 3;
        RealMatrix a(m, m);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) a(i, j) = gauss(rng);
        const RealMatrix cov = a * a.transpose();  // PSD, generally dependent
        std::vector<std::string> names{"x", "y", "z"};
        const ParameterDistribution dist(names, RealVector::Zero(m), cov);

        RealMatrix hs(m, m);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j <= i; ++j) hs(i, j) = hs(j, i) = gauss(rng);
        RealVector g(m);
        for (int i = 0; i < m; ++i) g(i) = gauss(rng);
        const double c = gauss(rng);

        const auto jet = make_jet(c, g, hs);
        CHECK(std::abs(mean_estimate(jet, dist) - wick_mean(c, hs, dist)) < 1e-12);
        CHECK(std::abs(variance_estimate(jet, dist) - wick_variance(g, hs, dist)) < 1e-12);
    }
}

TEST_CASE("mean shift is additive over independent parameters") {
    auto rng = make_rng(88);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int m = 4;
    RealMatrix hs(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j <= i; ++j) hs(i, j) = hs(j, i) = gauss(rng);
    const auto jet = make_jet(0.5, RealVector::Zero(m), hs);

    std::vector<double> sigmas{0.1, 0.2, 0.3, 0.4};
    const auto full = diag_dist(sigmas);
    const double full_shift = mean_estimate(jet, full) - jet.value;
    double sum = 0.0;
    for (int j = 0; j < m; ++j) {
        std::vector<double> only(m, 0.0);
        only[j] = sigmas[j];
        sum += mean_estimate(jet, diag_dist(only)) - jet.value;
    }
    CHECK(std::abs(full_shift - sum) < 1e-12);
}

TEST_CASE("mean_estimate ignores the gradient") {
    const auto dist = diag_dist({0.3, 0.4});
    RealMatrix hs(2, 2);
    hs << 1.0, 0.2, 0.2, -0.7;
    const auto base = make_jet(0.1, RealVector::Zero(2), hs);
    auto bumped = base;
    bumped.grad << 123.0, -45.0;
    CHECK(mean_estimate(base, dist) == mean_estimate(bumped, dist));
}

TEST_CASE("error_contributions: zero sigma drops out, total equals the shift") {
    RealMatrix hs(2, 2);
    hs << 2.0, 0.4, 0.4, -1.5;
    const auto jet = make_jet(0.0, RealVector::Zero(2), hs);
    const auto dist = diag_dist({0.2, 0.0});
    const RealMatrix c = error_contributions(jet, dist);
    CHECK(c(1, 1) == 0.0);
    CHECK(c(0, 1) == 0.0);
    CHECK(std::abs(c.sum() - (mean_estimate(jet, dist) - jet.value)) < 1e-12);

    // dependent case keeps the cross terms in the budget
    RealMatrix cov(2, 2);
    cov << 0.04, 0.01, 0.01, 0.09;
    const ParameterDistribution dep({"a", "b"}, RealVector::Zero(2), cov);
    const RealMatrix cd = error_contributions(jet, dep);
    CHECK(std::abs(cd.sum() - (mean_estimate(jet, dep) - jet.value)) < 1e-12);
}

TEST_CASE("uncertainty_entry: bands are clamped to the observable bounds") {
    RealMatrix hs(1, 1);
    hs << 0.0;
    RealVector g(1);
    g << 10.0;
    const auto jet = make_jet(0.97, g, hs);
    const auto dist = diag_dist({0.1});
    const UncertaintyEntry e = uncertainty_entry(0.0, jet, dist, {-1.0, 1.0});
    CHECK(e.band_high == 1.0);
    CHECK(e.band_low == -1.0);
    CHECK(e.band_low <= e.mean);
    CHECK(e.mean <= e.band_high);

    const UncertaintyEntry wide = uncertainty_entry(0.0, jet, dist, {-10.0, 10.0});
    CHECK(wide.band_low == Catch::Approx(0.97 - 2.0));
    CHECK(wide.band_high == Catch::Approx(0.97 + 2.0));
}

TEST_CASE("ParameterDistribution validation") {
    RealMatrix asym(2, 2);
    asym << 1.0, 0.5, 0.2, 1.0;
    CHECK_THROWS(ParameterDistribution({"a", "b"}, RealVector::Zero(2), asym));

    RealMatrix indef(2, 2);
    indef << 1.0, 2.0, 2.0, 1.0;
    CHECK_THROWS(ParameterDistribution({"a", "b"}, RealVector::Zero(2), indef));

    CHECK_THROWS(ParameterDistribution({"a"}, RealVector::Zero(2), RealMatrix::Identity(2, 2)));
}

TEST_CASE("variance_estimate rejects dimension mismatch") {
    const auto dist = diag_dist({0.1, 0.2});
    const auto jet = make_jet(0.0, RealVector::Zero(3), RealMatrix::Zero(3, 3));
    CHECK_THROWS(variance_estimate(jet, dist));
    CHECK_THROWS(mean_estimate(jet, dist));
}
