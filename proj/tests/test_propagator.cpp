#include "qupid/propagator.hpp"

#include "test_helpers.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <unsupported/Eigen/MatrixFunctions>

using namespace qupid;
using namespace qupid_test;

namespace {

Spectrum spectrum_of(const Matrix& h, double tol = 1e-12) {
    return eigendecompose(HermitianOperator(h, tol));
}

Matrix unitary_at(const Matrix& h0, const Matrix& v, double theta, double dt) {
    return step_unitary(spectrum_of(h0 + theta * v), dt);
}

}  // namespace

TEST_CASE("eigendecompose: Pauli Z spectrum and basis ordering") {
    const Spectrum s = spectrum_of(pauli_z());
    REQUIRE(s.energies(0) == Catch::Approx(-1.0));
    REQUIRE(s.energies(1) == Catch::Approx(1.0));
    // ascending order puts |1> first; phase fixing makes the leading
    // component real positive
    CHECK(std::abs(s.basis(1, 0) - Complex(1, 0)) < 1e-14);
    CHECK(std::abs(s.basis(0, 0)) < 1e-14);
    CHECK(std::abs(s.basis(0, 1) - Complex(1, 0)) < 1e-14);
}

TEST_CASE("eigendecompose: zero matrix keeps reconstruction invariant") {
    const Matrix z = Matrix::Zero(4, 4);
    const Spectrum s = spectrum_of(z);
    CHECK(s.energies.cwiseAbs().maxCoeff() == 0.0);
    CHECK((s.basis.adjoint() * s.basis - Matrix::Identity(4, 4)).norm() < 1e-10);
    const Matrix rebuilt =
        s.basis * s.energies.cast<Complex>().asDiagonal() * s.basis.adjoint();
    CHECK((rebuilt - z).norm() < 1e-10);
}

TEST_CASE("eigendecompose: random Hermitian reconstruction") {
    auto rng = make_rng(101);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix h = random_hermitian(rng, 8);
        const Spectrum s = spectrum_of(h);
        CHECK((s.basis.adjoint() * s.basis - Matrix::Identity(8, 8)).norm() < 1e-10);
        const Matrix rebuilt =
            s.basis * s.energies.cast<Complex>().asDiagonal() * s.basis.adjoint();
        CHECK((rebuilt - h).norm() < 1e-10);
        for (int k = 1; k < 8; ++k) CHECK(s.energies(k) >= s.energies(k - 1));
    }
}

TEST_CASE("eigendecompose rejects non-Hermitian input") {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 1) = 1.0;
    REQUIRE_THROWS_WITH(HermitianOperator(m), Catch::Matchers::ContainsSubstring("symmetry"));
}

TEST_CASE("step_unitary: zero generator gives identity") {
    const Spectrum s = spectrum_of(Matrix::Zero(3, 3));
    CHECK((step_unitary(s, 0.7) - Matrix::Identity(3, 3)).norm() < 1e-14);
}

TEST_CASE("step_unitary: half Rabi rotation maps |0> to -i|1>") {
    const double dt = 0.25;
    const Spectrum s = spectrum_of((M_PI / (2.0 * dt)) * pauli_x());
    const Matrix u = step_unitary(s, dt);
    Vector zero(2);
    zero << 1, 0;
    const Vector out = u * zero;
    CHECK(std::abs(out(0)) < 1e-12);
    CHECK(std::abs(out(1) - Complex(0, -1)) < 1e-12);
}

TEST_CASE("step_unitary matches scaling-and-squaring exponential") {
    auto rng = make_rng(202);
    for (int trial = 0; trial < 8; ++trial) {
        const Matrix h = random_hermitian(rng, 6);
        const double dt = 0.37;
        const Matrix direct = (Complex(0, -dt) * h).exp();
        CHECK((step_unitary(spectrum_of(h), dt) - direct).norm() < 1e-9);
    }
}

TEST_CASE("step_unitary is unitary") {
    auto rng = make_rng(203);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix u = step_unitary(spectrum_of(random_hermitian(rng, 5)), 0.9);
        CHECK(unitarity_defect(u) < 1e-10);
    }
}

TEST_CASE("divided_difference_first: degenerate and hand-evaluable branches") {
    const double dt = 0.8;
    CHECK(std::abs(divided_difference_first(0.0, 0.0, dt) - Complex(0, -dt)) < 1e-15);
    // (1 - e^{-i pi}) / (0 - pi/dt) = -2 dt / pi
    const Complex v = divided_difference_first(0.0, M_PI / dt, dt);
    CHECK(std::abs(v - Complex(-2.0 * dt / M_PI, 0.0)) < 1e-12);
}

TEST_CASE("divided_difference_first: near-degenerate continuity vs series oracle") {
    const double dt = 0.6;
    for (double gap : {1e-9, 1e-8, 1e-7, 1e-6, 1e-5}) {
        const double eh = 0.4 + gap, ek = 0.4;
        // exact form: -i dt e^{-i Em dt} sinc(gap dt / 2), Em the midpoint
        const double x = 0.5 * gap * dt;
        const double sinc = 1.0 - x * x / 6.0 + x * x * x * x / 120.0;
        const Complex oracle =
            Complex(0, -dt) * std::exp(Complex(0, -0.5 * (eh + ek) * dt)) * sinc;
        CHECK(std::abs(divided_difference_first(eh, ek, dt) - oracle) / std::abs(oracle) < 1e-6);
    }
}

TEST_CASE("divided_difference_first is symmetric in its energies") {
    auto rng = make_rng(11);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int trial = 0; trial < 50; ++trial) {
        const double a = u(rng), b = u(rng);
        CHECK(divided_difference_first(a, b, 0.31) == divided_difference_first(b, a, 0.31));
    }
}

TEST_CASE("divided_difference_second: coincidence limits") {
    const double dt = 0.45, e = 0.7;
    const Complex all_equal = divided_difference_second(e, e, e, dt);
    const Complex expected = 0.5 * Complex(0, -dt) * Complex(0, -dt) * std::exp(Complex(0, -e * dt));
    CHECK(std::abs(all_equal - expected) < 1e-14);

    // permutation symmetry across all coincidence patterns
    const double a = 0.2, b = 0.9, c = -1.3;
    const Complex ref = divided_difference_second(a, b, c, dt);
    CHECK(divided_difference_second(b, a, c, dt) == ref);
    CHECK(divided_difference_second(c, b, a, dt) == ref);
    CHECK(std::abs(divided_difference_second(a, a, b, dt) -
                   divided_difference_second(a, b, a, dt)) < 1e-16);
}

TEST_CASE("step_derivative_first: commuting family is -i dt dH U") {
    const double dt = 0.5, theta = 0.3;
    const Spectrum s = spectrum_of(theta * pauli_x());
    const Matrix u = step_unitary(s, dt);
    const Matrix du = step_derivative_first(s, HermitianOperator(pauli_x()), dt);
    CHECK((du - Complex(0, -dt) * pauli_x() * u).norm() < 1e-12);
}

TEST_CASE("step_derivative_first: zero direction gives zero") {
    auto rng = make_rng(42);
    const Spectrum s = spectrum_of(random_hermitian(rng, 4));
    const Matrix du = step_derivative_first(s, HermitianOperator(Matrix::Zero(4, 4)), 0.3);
    CHECK(du.norm() == 0.0);
}

TEST_CASE("step_derivative_first matches finite differences on random instances") {
    auto rng = make_rng(303);
    for (int trial = 0; trial < 12; ++trial) {
        const int dim = 2 + static_cast<int>(rng() % 7);
        const Matrix h0 = random_hermitian(rng, dim);
        const Matrix v = random_hermitian(rng, dim);
        const double dt = 0.4, theta = 0.7;
        const Matrix du =
            step_derivative_first(spectrum_of(h0 + theta * v), HermitianOperator(v), dt);
        const Matrix oracle = fd_matrix_first(
            [&](double x) { return unitary_at(h0, v, x, dt); }, theta, 1e-5);
        CHECK(relative_error(du, oracle) < 1e-7);
    }
}

TEST_CASE("step_derivative_second: commuting family is -dt^2 U") {
    const double dt = 0.5, theta = 0.3;
    const Spectrum s = spectrum_of(theta * pauli_x());
    const Matrix u = step_unitary(s, dt);
    const Matrix ddu =
        step_derivative_second(s, HermitianOperator(pauli_x()), HermitianOperator(pauli_x()), dt);
    CHECK((ddu - (-dt * dt) * u).norm() < 1e-12);
}

TEST_CASE("step_derivative_second: zero direction gives zero") {
    auto rng = make_rng(43);
    const Matrix h = random_hermitian(rng, 3);
    const Spectrum s = spectrum_of(h);
    const Matrix ddu = step_derivative_second(s, HermitianOperator(Matrix::Zero(3, 3)),
                                              HermitianOperator(random_hermitian(rng, 3)), 0.3);
    CHECK(ddu.norm() == 0.0);
}

TEST_CASE("step_derivative_second matches mixed finite differences") {
    auto rng = make_rng(404);
    for (int trial = 0; trial < 8; ++trial) {
        const int dim = 2 + static_cast<int>(rng() % 5);
        const Matrix h0 = random_hermitian(rng, dim);
        const Matrix vi = random_hermitian(rng, dim);
        const Matrix vj = random_hermitian(rng, dim);
        const double dt = 0.35, ti = 0.2, tj = -0.4;
        const Spectrum s = spectrum_of(h0 + ti * vi + tj * vj);
        const Matrix ddu =
            step_derivative_second(s, HermitianOperator(vi), HermitianOperator(vj), dt);
        const Matrix oracle = fd_matrix_mixed(
            [&](double x, double y) { return unitary_at(h0 + y * vj, vi, x, dt); }, ti, tj, 1e-4);
        CHECK(relative_error(ddu, oracle) < 1e-5);
    }
}

TEST_CASE("step_derivative_second: diagonal direction matches plain second difference") {
    auto rng = make_rng(405);
    const Matrix h0 = random_hermitian(rng, 4);
    const Matrix v = random_hermitian(rng, 4);
    const double dt = 0.3, theta = 0.15;
    const Spectrum s = spectrum_of(h0 + theta * v);
    const Matrix ddu = step_derivative_second(s, HermitianOperator(v), HermitianOperator(v), dt);
    const Matrix oracle =
        fd_matrix_second([&](double x) { return unitary_at(h0, v, x, dt); }, theta, 1e-4);
    CHECK(relative_error(ddu, oracle) < 1e-5);
}

TEST_CASE("derivative of unitarity: (dU)^dag U + U^dag dU vanishes") {
    auto rng = make_rng(505);
    for (int trial = 0; trial < 10; ++trial) {
        const int dim = 2 + static_cast<int>(rng() % 7);
        const Spectrum s = spectrum_of(random_hermitian(rng, dim));
        const Matrix v = random_hermitian(rng, dim);
        const double dt = 0.6;
        const Matrix u = step_unitary(s, dt);
        const Matrix du = step_derivative_first(s, HermitianOperator(v), dt);
        CHECK((du.adjoint() * u + u.adjoint() * du).norm() < 1e-9);
    }
}

TEST_CASE("build_step_jet: Hessian slots are shared across (i,j) and (j,i)") {
    auto rng = make_rng(606);
    const int dim = 4;
    const Matrix h0 = random_hermitian(rng, dim);
    std::vector<Matrix> dirs{random_hermitian(rng, dim), random_hermitian(rng, dim),
                             random_hermitian(rng, dim)};
    const StepPropagatorJet jet = build_step_jet(spectrum_of(h0), 0.42, dirs);
    REQUIRE(jet.n_params() == 3);
    CHECK(unitarity_defect(jet.u) < 1e-10);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(&jet.ddu.at(i, j) == &jet.ddu.at(j, i));
    // the assembled Hessian matches the standalone operation
    const Spectrum s = spectrum_of(h0);
    for (int j = 0; j < 3; ++j)
        for (int i = 0; i <= j; ++i)
            CHECK((jet.ddu.at(i, j) -
                   step_derivative_second(s, HermitianOperator(dirs[i]),
                                          HermitianOperator(dirs[j]), 0.42))
                      .norm() < 1e-13);
}

TEST_CASE("build_step_jet folds second-order generator dependence through the first kernel") {
    auto rng = make_rng(607);
    const int dim = 3;
    const Matrix h0 = random_hermitian(rng, dim);
    const Matrix v = random_hermitian(rng, dim);
    const Matrix w = random_hermitian(rng, dim);
    const double dt = 0.3;

    // H(theta) = h0 + theta v + theta^2/2 w, evaluated at theta = 0:
    // dH = v, ddH = w
    std::vector<Matrix> dirs{v};
    SymmetricPairTable<Matrix> dd(1);
    dd.at(0, 0) = w;
    const StepPropagatorJet jet = build_step_jet(spectrum_of(h0), dt, dirs, dd);

    const auto u_of = [&](double x) {
        return step_unitary(spectrum_of(h0 + x * v + 0.5 * x * x * w), dt);
    };
    CHECK(relative_error(jet.du[0], fd_matrix_first(u_of, 0.0, 1e-5)) < 1e-7);
    CHECK(relative_error(jet.ddu.at(0, 0), fd_matrix_second(u_of, 0.0, 1e-4)) < 1e-5);
}

TEST_CASE("degeneracy continuity: derivatives stay accurate as eigenvalues cross") {
    const double dt = 0.7;
    // H(theta) = theta X has gap 2|theta|; sweep the gap through the
    // threshold and keep checking against the finite-difference oracle
    for (double gap : {1e-9, 1e-8, 5e-8, 1e-7, 1.5e-7, 1e-6, 1e-5, 1e-4}) {
        const double theta = 0.5 * gap;
        const Spectrum s = spectrum_of(theta * pauli_x());
        const Matrix du = step_derivative_first(s, HermitianOperator(pauli_x()), dt);
        const Matrix oracle = fd_matrix_first(
            [&](double x) { return unitary_at(Matrix::Zero(2, 2), pauli_x(), x, dt); }, theta,
            1e-5);
        CHECK(relative_error(du, oracle) < 1e-6);
    }
    // the divided difference itself is continuous across the branch switch
    const Complex below = divided_difference_first(0.99e-7 / dt, 0.0, dt);
    const Complex above = divided_difference_first(1.01e-7 / dt, 0.0, dt);
    CHECK(std::abs(below - above) / std::abs(above) < 1e-8);
}
