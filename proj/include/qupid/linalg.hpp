// Shared linear-algebra aliases and small helpers used across the library.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace qupid {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

inline constexpr Complex kImag{0.0, 1.0};

inline double frobenius_norm(const Matrix& m) { return m.norm(); }

inline double frobenius_distance(const Matrix& a, const Matrix& b) {
    return (a - b).norm();
}

// Relative Frobenius deviation from the conjugate transpose.
inline double hermiticity_defect(const Matrix& m) {
    const double scale = m.norm();
    if (scale == 0.0) return 0.0;
    return (m - m.adjoint()).norm() / scale;
}

inline bool is_hermitian(const Matrix& m, double tol = 1e-12) {
    return m.rows() == m.cols() && hermiticity_defect(m) <= tol;
}

inline double unitarity_defect(const Matrix& u) {
    return (u.adjoint() * u - Matrix::Identity(u.rows(), u.cols())).norm();
}

inline Matrix pauli_x() {
    Matrix m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}

inline Matrix pauli_y() {
    Matrix m(2, 2);
    m << 0, Complex(0, -1), Complex(0, 1), 0;
    return m;
}

inline Matrix pauli_z() {
    Matrix m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

// e^A v without forming e^A: Taylor series applied over enough substeps to
// keep each partial sum well conditioned. Intended for propagation where A
// has moderate norm (A = -i H dt or L dt).
inline Matrix apply_matrix_exponential(const Matrix& a, const Matrix& v) {
    const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
    const int substeps = std::max(1, static_cast<int>(std::ceil(norm1 / 0.5)));
    const Matrix scaled = a / static_cast<double>(substeps);
    Matrix w = v;
    for (int s = 0; s < substeps; ++s) {
        Matrix term = w;
        Matrix acc = w;
        const double floor = 1e-18 * std::max(1.0, w.norm());
        for (int k = 1; k <= 32; ++k) {
            term = (scaled * term) / static_cast<double>(k);
            acc += term;
            if (term.norm() < floor) break;
        }
        w = std::move(acc);
    }
    return w;
}

// Dense symmetric table over parameter pairs (i, j); one slot per i <= j.
template <typename T>
class SymmetricPairTable {
public:
    SymmetricPairTable() = default;
    explicit SymmetricPairTable(int n_params) : n_(n_params), data_(slot_count(n_params)) {}
    SymmetricPairTable(int n_params, const T& init)
        : n_(n_params), data_(slot_count(n_params), init) {}

    static std::size_t slot_count(int n) {
        return static_cast<std::size_t>(n) * (n + 1) / 2;
    }

    int n_params() const { return n_; }
    std::size_t size() const { return data_.size(); }

    T& at(int i, int j) { return data_[index(i, j)]; }
    const T& at(int i, int j) const { return data_[index(i, j)]; }

    T& slot(std::size_t p) { return data_[p]; }
    const T& slot(std::size_t p) const { return data_[p]; }

    auto begin() { return data_.begin(); }
    auto end() { return data_.end(); }
    auto begin() const { return data_.begin(); }
    auto end() const { return data_.end(); }

private:
    std::size_t index(int i, int j) const {
        if (i > j) std::swap(i, j);
        if (j >= n_ || i < 0)
            throw std::out_of_range("SymmetricPairTable: pair (" + std::to_string(i) + "," +
                                    std::to_string(j) + ") out of range for " +
                                    std::to_string(n_) + " parameters");
        return static_cast<std::size_t>(j) * (j + 1) / 2 + static_cast<std::size_t>(i);
    }

    int n_ = 0;
    std::vector<T> data_;
};

}  // namespace qupid
