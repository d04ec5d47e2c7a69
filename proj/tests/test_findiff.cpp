#include "qupid/findiff.hpp"

#include "qupid/observables.hpp"
#include "test_helpers.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace qupid;
using namespace qupid_test;

TEST_CASE("fd_first: constants and quadratics") {
    const ScalarField constant = [](const RealVector&) { return 4.2; };
    RealVector theta(1);
    theta << 1.0;
    CHECK(fd_first(constant, theta, 0, 1e-5) == Catch::Approx(0.0).margin(1e-10));

    const ScalarField square = [](const RealVector& t) { return t(0) * t(0); };
    for (double eps : {1e-6, 1e-4, 1e-2})
        CHECK(fd_first(square, theta, 0, eps) == Catch::Approx(2.0).margin(1e-9));
}

TEST_CASE("fd_second_diag: linear and quadratic fields") {
    RealVector theta(1);
    theta << 0.7;
    const ScalarField linear = [](const RealVector& t) { return 3.0 * t(0) + 1.0; };
    CHECK(fd_second_diag(linear, theta, 0, 1e-4) == Catch::Approx(0.0).margin(1e-6));
    const ScalarField square = [](const RealVector& t) { return t(0) * t(0); };
    CHECK(fd_second_diag(square, theta, 0, 1e-4) == Catch::Approx(2.0).margin(1e-7));
}

TEST_CASE("fd_second_mixed: separable fields vanish, the bilinear field gives one") {
    RealVector theta(2);
    theta << 0.4, -1.2;
    const ScalarField separable = [](const RealVector& t) {
        return std::sin(t(0)) + std::exp(t(1));
    };
    CHECK(fd_second_mixed(separable, theta, 0, 1, 1e-4) == Catch::Approx(0.0).margin(1e-6));
    const ScalarField bilinear = [](const RealVector& t) { return t(0) * t(1); };
    CHECK(fd_second_mixed(bilinear, theta, 0, 1, 1e-4) == Catch::Approx(1.0).margin(1e-8));
}

TEST_CASE("evaluation_count: gradient-only and mixed budgets") {
    CHECK(evaluation_count(1, false) == 3);
    CHECK(evaluation_count(30, false) == 61);
    CHECK(evaluation_count(3, true) == 13);
    CHECK(evaluation_count(0, false) == 1);
}

TEST_CASE("non-finite function values are reported") {
    const ScalarField bad = [](const RealVector&) { return std::nan(""); };
    RealVector theta(1);
    theta << 0.0;
    CHECK_THROWS_WITH(fd_first(bad, theta, 0, 1e-5),
                      Catch::Matchers::ContainsSubstring("non-finite"));
}

TEST_CASE("epsilon robustness: jet-vs-FD agreement plateaus over the step sweep") {
    // one smooth trajectory observable; the jet derivative is the reference
    const TimeGrid grid(1.5, 30);
    DynamicGenerator gen;
    gen.dim = 2;
    gen.n_params = 1;
    gen.couplings.push_back(
        {[](double t) { return Matrix(std::sin(1.1 * t + 0.4) * pauli_x() + 0.3 * pauli_z()); },
         direct_parameter(0), true});

    RealVector theta(1);
    theta << 0.9;
    Vector zero(2);
    zero << 1, 0;
    const JetState init = init_jet(zero, StateKind::StateVector, 1);
    const JetState fin = evolve(gen, theta, grid, init, {grid.duration}).samples.back();
    const ObservableJet jet =
        expectation_jet(fin, HermitianExpectation{HermitianOperator(pauli_z())});

    const ScalarField field = [&](const RealVector& t) {
        DynamicGenerator g0 = gen;
        g0.n_params = 0;
        g0.couplings[0].u = constant_parameter(t(0));
        const JetState i0 = init_jet(zero, StateKind::StateVector, 0);
        const JetState f = evolve(g0, RealVector(0), grid, i0, {grid.duration}).samples.back();
        return expectation_jet(f, HermitianExpectation{HermitianOperator(pauli_z())}).value;
    };

    // first derivative: plateau across [1e-6, 1e-4] x parameter scale
    for (double eps : {1e-6, 3e-6, 1e-5, 3e-5, 1e-4}) {
        const double fd = fd_first(field, theta, 0, eps * std::abs(theta(0)));
        CHECK(relative_error(jet.grad(0), fd) < 1e-6);
    }
    // curvature divides by eps^2, so its usable window sits higher; the
    // plateau is narrower but still two decades wide
    for (double eps : {1e-4, 2.5e-4, 1e-3, 5e-3}) {
        const double fd = fd_second_diag(field, theta, 0, eps * std::abs(theta(0)));
        CHECK(relative_error(jet.hess(0, 0), fd) < 1e-4);
    }
}

TEST_CASE("fd_gradient and fd_hessian convenience wrappers") {
    const ScalarField f = [](const RealVector& t) {
        return t(0) * t(0) * 0.5 + 2.0 * t(0) * t(1) + std::cos(t(1));
    };
    RealVector theta(2);
    theta << 0.3, 1.1;
    const RealVector g = fd_gradient(f, theta);
    CHECK(g(0) == Catch::Approx(theta(0) + 2.0 * theta(1)).margin(1e-7));
    CHECK(g(1) == Catch::Approx(2.0 * theta(0) - std::sin(theta(1))).margin(1e-7));
    const RealMatrix h = fd_hessian(f, theta);
    CHECK(h(0, 0) == Catch::Approx(1.0).margin(1e-5));
    CHECK(h(0, 1) == Catch::Approx(2.0).margin(1e-5));
    CHECK(h(1, 1) == Catch::Approx(-std::cos(theta(1))).margin(1e-5));
    CHECK(h(0, 1) == h(1, 0));
}
