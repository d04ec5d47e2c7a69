// Real-valued observables evaluated on a jet state together with their
// first- and second-order parameter derivatives.
#pragma once

#include "qupid/evolution.hpp"

#include <variant>

namespace qupid {

// <A> for a Hermitian operator; dop/ddop carry an explicit parameter
// dependence of the operator itself (empty means none).
struct HermitianExpectation {
    HermitianOperator op;
    std::vector<Matrix> dop;
    SymmetricPairTable<Matrix> ddop;

    explicit HermitianExpectation(HermitianOperator o) : op(std::move(o)) {}
    HermitianExpectation(HermitianOperator o, std::vector<Matrix> d, SymmetricPairTable<Matrix> dd)
        : op(std::move(o)), dop(std::move(d)), ddop(std::move(dd)) {}
};

struct ProjectorFidelity {
    Vector target;

    explicit ProjectorFidelity(Vector t) : target(std::move(t)) {
        const double n = target.norm();
        if (std::abs(n - 1.0) > 1e-10)
            throw std::invalid_argument("ProjectorFidelity: target norm " + std::to_string(n) +
                                        " is not 1");
    }
};

struct GateFidelity {
    Matrix target;

    explicit GateFidelity(Matrix t) : target(std::move(t)) {
        if (unitarity_defect(target) > 1e-10)
            throw std::invalid_argument("GateFidelity: target is not unitary");
    }
};

struct ObservableSpec {
    std::string label;
    std::variant<HermitianExpectation, ProjectorFidelity, GateFidelity> body;
};

struct ObservableJet {
    double value = 0.0;
    RealVector grad;
    RealMatrix hess;
};

// Physical range used for clamping confidence bands: the operator's spectral
// range for expectations, [0, 1] for fidelities.
inline std::pair<double, double> observable_bounds(const ObservableSpec& spec) {
    if (const auto* he = std::get_if<HermitianExpectation>(&spec.body)) {
        const Spectrum s = eigendecompose(he->op);
        return {s.energies.minCoeff(), s.energies.maxCoeff()};
    }
    return {0.0, 1.0};
}

namespace detail {

inline double real_checked(Complex z, const char* what) {
    if (std::abs(z.imag()) > 1e-8)
        throw std::runtime_error(std::string(what) + ": imaginary residue " +
                                 std::to_string(z.imag()) + " exceeds 1e-8");
    return z.real();
}

inline void require_kind(const JetState& state, std::initializer_list<StateKind> allowed,
                         const char* op) {
    for (StateKind k : allowed)
        if (state.kind == k) return;
    throw std::invalid_argument(std::string(op) + ": state kind " + to_string(state.kind) +
                                " not supported");
}

// value/grad/hess of |tau|^2 given the complex amplitude tau and its
// derivative stacks. Shared by both fidelity observables.
inline ObservableJet abs_squared_jet(Complex tau, const std::vector<Complex>& dtau,
                                     const SymmetricPairTable<Complex>& ddtau) {
    const int m = static_cast<int>(dtau.size());
    ObservableJet jet;
    jet.value = std::norm(tau);
    jet.grad.resize(m);
    jet.hess.resize(m, m);
    for (int j = 0; j < m; ++j) jet.grad(j) = 2.0 * std::real(std::conj(tau) * dtau[j]);
    for (int j = 0; j < m; ++j)
        for (int i = 0; i <= j; ++i) {
            const double v = 2.0 * std::real(std::conj(dtau[i]) * dtau[j]) +
                             2.0 * std::real(std::conj(tau) * ddtau.at(i, j));
            jet.hess(i, j) = jet.hess(j, i) = v;
        }
    return jet;
}

}  // namespace detail

inline ObservableJet expectation_jet(const JetState& state, const HermitianExpectation& spec) {
    detail::require_kind(state,
                         {StateKind::StateVector, StateKind::VectorizedDensityMatrix},
                         "expectation_jet");
    const int m = state.n_params();
    const Matrix& a = spec.op.matrix();
    const bool has_dop = !spec.dop.empty();
    const bool has_ddop = spec.ddop.n_params() == m && m > 0;
    if (has_dop && static_cast<int>(spec.dop.size()) != m)
        throw std::invalid_argument("expectation_jet: operator derivative count mismatch");

    ObservableJet jet;
    jet.grad.resize(m);
    jet.hess.resize(m, m);

    if (state.kind == StateKind::VectorizedDensityMatrix) {
        const Eigen::Index d = a.rows();
        if (state.chi.rows() != d * d)
            throw std::invalid_argument("expectation_jet: dimension mismatch");
        const auto tr = [&](const Matrix& op, const Matrix& vec) {
            const Eigen::Map<const Matrix> rho(vec.data(), d, d);
            return (op * rho).trace();
        };
        jet.value = detail::real_checked(tr(a, state.chi), "expectation_jet: value");
        for (int j = 0; j < m; ++j) {
            Complex g = tr(a, state.dchi[j]);
            if (has_dop && spec.dop[j].size()) g += tr(spec.dop[j], state.chi);
            jet.grad(j) = detail::real_checked(g, "expectation_jet: grad");
        }
        for (int j = 0; j < m; ++j)
            for (int i = 0; i <= j; ++i) {
                Complex h = tr(a, state.ddchi.at(i, j));
                if (has_dop) {
                    if (spec.dop[i].size()) h += tr(spec.dop[i], state.dchi[j]);
                    if (spec.dop[j].size()) h += tr(spec.dop[j], state.dchi[i]);
                }
                if (has_ddop && spec.ddop.at(i, j).size()) h += tr(spec.ddop.at(i, j), state.chi);
                jet.hess(i, j) = jet.hess(j, i) =
                    detail::real_checked(h, "expectation_jet: hess");
            }
        return jet;
    }

    if (a.rows() != state.chi.rows())
        throw std::invalid_argument("expectation_jet: dimension mismatch");
    const Vector psi = state.chi.col(0);
    const Vector a_psi = a * psi;

    jet.value = detail::real_checked((psi.adjoint() * a_psi)(0), "expectation_jet: value");
    for (int j = 0; j < m; ++j) {
        double g = 2.0 * std::real((a_psi.adjoint() * state.dchi[j].col(0))(0));
        if (has_dop && spec.dop[j].size())
            g += detail::real_checked((psi.adjoint() * spec.dop[j] * psi)(0),
                                      "expectation_jet: operator grad term");
        jet.grad(j) = g;
    }
    for (int j = 0; j < m; ++j)
        for (int i = 0; i <= j; ++i) {
            const Vector di = state.dchi[i].col(0);
            const Vector dj = state.dchi[j].col(0);
            double h = 2.0 * std::real((di.adjoint() * a * dj)(0)) +
                       2.0 * std::real((a_psi.adjoint() * state.ddchi.at(i, j).col(0))(0));
            // operator dependence enters symmetrically through both slots
            if (has_dop) {
                if (spec.dop[i].size()) h += 2.0 * std::real((psi.adjoint() * spec.dop[i] * dj)(0));
                if (spec.dop[j].size()) h += 2.0 * std::real((psi.adjoint() * spec.dop[j] * di)(0));
            }
            if (has_ddop && spec.ddop.at(i, j).size())
                h += detail::real_checked((psi.adjoint() * spec.ddop.at(i, j) * psi)(0),
                                          "expectation_jet: operator hess term");
            jet.hess(i, j) = jet.hess(j, i) = h;
        }
    return jet;
}

// F = |<target|psi>|^2, formed without materializing the projector. For a
// state collection the per-column fidelities are averaged.
inline ObservableJet projector_fidelity_jet(const JetState& state, const ProjectorFidelity& spec) {
    detail::require_kind(state, {StateKind::StateVector, StateKind::StateCollection},
                         "projector_fidelity_jet");
    if (spec.target.size() != state.chi.rows())
        throw std::invalid_argument("projector_fidelity_jet: dimension mismatch");
    const int m = state.n_params();
    const auto cols = state.chi.cols();

    ObservableJet total;
    total.grad = RealVector::Zero(m);
    total.hess = RealMatrix::Zero(m, m);
    for (Eigen::Index c = 0; c < cols; ++c) {
        const Complex tau = (spec.target.adjoint() * state.chi.col(c))(0);
        std::vector<Complex> dtau(m);
        SymmetricPairTable<Complex> ddtau(m, Complex(0, 0));
        for (int j = 0; j < m; ++j) dtau[j] = (spec.target.adjoint() * state.dchi[j].col(c))(0);
        for (int j = 0; j < m; ++j)
            for (int i = 0; i <= j; ++i)
                ddtau.at(i, j) = (spec.target.adjoint() * state.ddchi.at(i, j).col(c))(0);
        const ObservableJet jet = detail::abs_squared_jet(tau, dtau, ddtau);
        total.value += jet.value;
        total.grad += jet.grad;
        total.hess += jet.hess;
    }
    total.value /= static_cast<double>(cols);
    total.grad /= static_cast<double>(cols);
    total.hess /= static_cast<double>(cols);
    return total;
}

// Haar-averaged gate fidelity (|Tr(U_target^dag U)|^2 + d) / (d (d + 1)),
// differentiated through the trace amplitude.
inline ObservableJet gate_fidelity_jet(const JetState& state, const GateFidelity& spec) {
    detail::require_kind(state, {StateKind::Unitary}, "gate_fidelity_jet");
    if (spec.target.rows() != state.chi.rows())
        throw std::invalid_argument("gate_fidelity_jet: dimension mismatch");
    const int m = state.n_params();
    const double d = static_cast<double>(state.chi.rows());
    const Matrix target_dag = spec.target.adjoint();

    const Complex tau = (target_dag * state.chi).trace();
    std::vector<Complex> dtau(m);
    SymmetricPairTable<Complex> ddtau(m, Complex(0, 0));
    for (int j = 0; j < m; ++j) dtau[j] = (target_dag * state.dchi[j]).trace();
    for (int j = 0; j < m; ++j)
        for (int i = 0; i <= j; ++i) ddtau.at(i, j) = (target_dag * state.ddchi.at(i, j)).trace();

    ObservableJet jet = detail::abs_squared_jet(tau, dtau, ddtau);
    const double scale = 1.0 / (d * (d + 1.0));
    jet.value = (jet.value + d) * scale;
    jet.grad *= scale;
    jet.hess *= scale;
    return jet;
}

inline ObservableJet observable_jet(const JetState& state, const ObservableSpec& spec) {
    return std::visit(
        [&](const auto& body) -> ObservableJet {
            using T = std::decay_t<decltype(body)>;
            if constexpr (std::is_same_v<T, HermitianExpectation>)
                return expectation_jet(state, body);
            else if constexpr (std::is_same_v<T, ProjectorFidelity>)
                return projector_fidelity_jet(state, body);
            else
                return gate_fidelity_jet(state, body);
        },
        spec.body);
}

// Plain observable value on a derivative-free state.
inline double observable_value(const Matrix& chi, StateKind kind, const ObservableSpec& spec) {
    JetState state;
    state.kind = kind;
    state.chi = chi;
    state.ddchi = SymmetricPairTable<Matrix>(0);
    return observable_jet(state, spec).value;
}

}  // namespace qupid
