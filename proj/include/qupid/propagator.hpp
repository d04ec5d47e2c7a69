// Single-step evolution operator U = exp(-i H dt) and its exact first and
// second parameter derivatives, evaluated in the eigenbasis of H.
#pragma once

#include "qupid/linalg.hpp"

#include <algorithm>
#include <utility>

namespace qupid {

// Below this value of |gap| * dt the divided-difference quotients switch to
// their analytic limits; the quotient itself would lose over half the
// mantissa to cancellation.
inline constexpr double kDegeneracyThreshold = 1e-7;

class HermitianOperator {
public:
    explicit HermitianOperator(Matrix m, double tol = 1e-12) : mat_(std::move(m)) {
        if (mat_.rows() != mat_.cols())
            throw std::invalid_argument("HermitianOperator: matrix is " +
                                        std::to_string(mat_.rows()) + "x" +
                                        std::to_string(mat_.cols()) + ", expected square");
        const double defect = hermiticity_defect(mat_);
        if (defect > tol)
            throw std::invalid_argument(
                "HermitianOperator: symmetry violation, ||A - A^dag||/||A|| = " +
                std::to_string(defect) + " exceeds " + std::to_string(tol));
    }

    int dim() const { return static_cast<int>(mat_.rows()); }
    const Matrix& matrix() const { return mat_; }

private:
    Matrix mat_;
};

struct Spectrum {
    RealVector energies;  // ascending
    Matrix basis;         // orthonormal eigenvectors as columns

    int dim() const { return static_cast<int>(energies.size()); }
};

// One step's unitary with its parameter-derivative stacks. ddu holds the
// upper triangle only; (i, j) and (j, i) read the same slot.
struct StepPropagatorJet {
    Matrix u;
    std::vector<Matrix> du;
    SymmetricPairTable<Matrix> ddu;
    double dt = 0.0;

    int n_params() const { return static_cast<int>(du.size()); }
};

inline Spectrum eigendecompose(const HermitianOperator& h) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(h.matrix());
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("eigendecompose: solver failed to converge");
    Spectrum s{solver.eigenvalues(), solver.eigenvectors()};
    // Fix each eigenvector's global phase: first non-negligible component
    // becomes real positive. Keeps outputs reproducible across runs.
    for (int k = 0; k < s.dim(); ++k) {
        for (Eigen::Index r = 0; r < s.basis.rows(); ++r) {
            const Complex c = s.basis(r, k);
            if (std::abs(c) > 1e-12) {
                s.basis.col(k) *= std::conj(c) / std::abs(c);
                break;
            }
        }
    }
    return s;
}

inline Matrix step_unitary(const Spectrum& s, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("step_unitary: dt must be positive");
    Vector phases(s.dim());
    for (int k = 0; k < s.dim(); ++k) phases(k) = std::exp(Complex(0, -s.energies(k) * dt));
    return s.basis * phases.asDiagonal() * s.basis.adjoint();
}

// First divided difference of f(E) = exp(-i E dt) over (Eh, Ek).
// The degenerate limit is taken at the midpoint, which keeps the value
// symmetric under h <-> k and continuous across the threshold.
inline Complex divided_difference_first(double eh, double ek, double dt) {
    const double gap = eh - ek;
    if (std::abs(gap) * std::abs(dt) < kDegeneracyThreshold)
        return Complex(0, -dt) * std::exp(Complex(0, -0.5 * (eh + ek) * dt));
    return (std::exp(Complex(0, -eh * dt)) - std::exp(Complex(0, -ek * dt))) / gap;
}

// Second divided difference of f(E) = exp(-i E dt) over three energies.
// Symmetric in its energy arguments; coincidence patterns fall back to the
// analytic limits f'[.] and f''(.)/2.
inline Complex divided_difference_second(double e1, double e2, double e3, double dt) {
    double a = e1, b = e2, c = e3;
    if (a > b) std::swap(a, b);
    if (b > c) std::swap(b, c);
    if (a > b) std::swap(a, b);
    const double thr = kDegeneracyThreshold;
    const double adt = std::abs(dt);
    const Complex mi_dt(0, -dt);

    if ((c - a) * adt < thr) {
        const double m = (a + b + c) / 3.0;
        return 0.5 * mi_dt * mi_dt * std::exp(Complex(0, -m * dt));
    }
    if ((b - a) * adt < thr) {
        const double m = 0.5 * (a + b);
        const Complex fprime = mi_dt * std::exp(Complex(0, -m * dt));
        return (fprime - divided_difference_first(m, c, dt)) / (m - c);
    }
    if ((c - b) * adt < thr) {
        const double m = 0.5 * (b + c);
        const Complex fprime = mi_dt * std::exp(Complex(0, -m * dt));
        return (divided_difference_first(a, m, dt) - fprime) / (a - m);
    }
    return (divided_difference_first(a, b, dt) - divided_difference_first(b, c, dt)) / (a - c);
}

namespace detail {

// Per-step kernel tables shared by all parameter derivatives of one step:
// first(h, k) is the two-point divided difference, second[l](h, k) the
// three-point one over (E_h, E_l, E_k).
struct DerivativeKernel {
    Matrix first;
    std::vector<Matrix> second;
};

inline DerivativeKernel make_derivative_kernel(const Spectrum& s, double dt, bool with_second) {
    const int d = s.dim();
    DerivativeKernel kernel;
    kernel.first.resize(d, d);
    for (int h = 0; h < d; ++h)
        for (int k = 0; k < d; ++k)
            kernel.first(h, k) = divided_difference_first(s.energies(h), s.energies(k), dt);
    if (with_second) {
        kernel.second.resize(d);
        for (int l = 0; l < d; ++l) {
            kernel.second[l].resize(d, d);
            for (int h = 0; h < d; ++h)
                for (int k = 0; k < d; ++k)
                    kernel.second[l](h, k) = divided_difference_second(
                        s.energies(h), s.energies(l), s.energies(k), dt);
        }
    }
    return kernel;
}

// dU in the eigenbasis: elementwise product of the rotated generator
// derivative with the divided-difference table.
inline Matrix first_derivative_eigenframe(const Matrix& dh_frame, const DerivativeKernel& kernel) {
    return dh_frame.cwiseProduct(kernel.first);
}

// Bilinear part of d2U in the eigenbasis: sum over intermediate level l of
// symmetrized generator-derivative products weighted by the second kernel.
inline Matrix second_derivative_eigenframe(const Matrix& dhi_frame, const Matrix& dhj_frame,
                                           const DerivativeKernel& kernel) {
    const int d = static_cast<int>(dhi_frame.rows());
    Matrix out = Matrix::Zero(d, d);
    for (int l = 0; l < d; ++l) {
        out += (dhi_frame.col(l) * dhj_frame.row(l) + dhj_frame.col(l) * dhi_frame.row(l))
                   .cwiseProduct(kernel.second[l]);
    }
    return out;
}

}  // namespace detail

inline Matrix step_derivative_first(const Spectrum& s, const HermitianOperator& dh, double dt) {
    if (dh.dim() != s.dim())
        throw std::invalid_argument("step_derivative_first: operator dim " +
                                    std::to_string(dh.dim()) + " does not match spectrum dim " +
                                    std::to_string(s.dim()));
    const auto kernel = detail::make_derivative_kernel(s, dt, false);
    const Matrix frame = s.basis.adjoint() * dh.matrix() * s.basis;
    return s.basis * detail::first_derivative_eigenframe(frame, kernel) * s.basis.adjoint();
}

inline Matrix step_derivative_second(const Spectrum& s, const HermitianOperator& dhi,
                                     const HermitianOperator& dhj, double dt) {
    if (dhi.dim() != s.dim() || dhj.dim() != s.dim())
        throw std::invalid_argument("step_derivative_second: operator dims do not match spectrum");
    const auto kernel = detail::make_derivative_kernel(s, dt, true);
    const Matrix fi = s.basis.adjoint() * dhi.matrix() * s.basis;
    const Matrix fj = s.basis.adjoint() * dhj.matrix() * s.basis;
    return s.basis * detail::second_derivative_eigenframe(fi, fj, kernel) * s.basis.adjoint();
}

// Assemble a full step jet. dd_h may be empty (no second-order parameter
// dependence of the generator); entries may also individually be empty
// matrices, meaning zero.
inline StepPropagatorJet build_step_jet(const Spectrum& s, double dt,
                                        const std::vector<Matrix>& d_h,
                                        const SymmetricPairTable<Matrix>& dd_h = {}) {
    const int d = s.dim();
    const int m = static_cast<int>(d_h.size());
    StepPropagatorJet jet;
    jet.dt = dt;
    jet.u = step_unitary(s, dt);
    jet.du.resize(m);
    jet.ddu = SymmetricPairTable<Matrix>(m);
    if (m == 0) return jet;

    const auto kernel = detail::make_derivative_kernel(s, dt, true);
    std::vector<Matrix> frames(m);
    for (int j = 0; j < m; ++j) {
        if (d_h[j].size() == 0)
            frames[j] = Matrix::Zero(d, d);
        else
            frames[j] = s.basis.adjoint() * d_h[j] * s.basis;
        jet.du[j] = s.basis * detail::first_derivative_eigenframe(frames[j], kernel) *
                    s.basis.adjoint();
    }
    const bool has_dd_h = dd_h.n_params() == m;
    for (int j = 0; j < m; ++j) {
        for (int i = 0; i <= j; ++i) {
            Matrix frame = detail::second_derivative_eigenframe(frames[i], frames[j], kernel);
            if (has_dd_h && dd_h.at(i, j).size() != 0) {
                const Matrix dd_frame = s.basis.adjoint() * dd_h.at(i, j) * s.basis;
                frame += detail::first_derivative_eigenframe(dd_frame, kernel);
            }
            jet.ddu.at(i, j) = s.basis * frame * s.basis.adjoint();
        }
    }
    return jet;
}

}  // namespace qupid
