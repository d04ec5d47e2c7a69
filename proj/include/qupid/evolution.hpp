// Time discretization and jet propagation: the state is co-evolved with its
// first- and second-derivative stacks with respect to the uncertain
// parameters, one midpoint-sampled step at a time.
#pragma once

#include "qupid/findiff.hpp"
#include "qupid/propagator.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <functional>
#include <optional>
#include <utility>

namespace qupid {

enum class StateKind { StateVector, Unitary, StateCollection, VectorizedDensityMatrix };

inline const char* to_string(StateKind kind) {
    switch (kind) {
        case StateKind::StateVector: return "state-vector";
        case StateKind::Unitary: return "unitary";
        case StateKind::StateCollection: return "state-collection";
        case StateKind::VectorizedDensityMatrix: return "vectorized-density-matrix";
    }
    return "?";
}

// Scalar coefficient u(theta) with its first and second partials. Null grad
// or hess functions mean identically zero.
struct ParameterMap {
    std::function<double(const RealVector&)> value;
    std::function<RealVector(const RealVector&)> grad;
    std::function<RealMatrix(const RealVector&)> hess;
};

inline ParameterMap constant_parameter(double v) {
    return {[v](const RealVector&) { return v; }, nullptr, nullptr};
}

// u = theta[index]
inline ParameterMap direct_parameter(int index) {
    return {[index](const RealVector& t) { return t(index); },
            [index](const RealVector& t) {
                RealVector g = RealVector::Zero(t.size());
                g(index) = 1.0;
                return g;
            },
            nullptr};
}

inline ParameterMap scaled_parameter(int index, double scale) {
    return {[index, scale](const RealVector& t) { return scale * t(index); },
            [index, scale](const RealVector& t) {
                RealVector g = RealVector::Zero(t.size());
                g(index) = scale;
                return g;
            },
            nullptr};
}

using MatrixProvider = std::function<Matrix(double)>;

struct Coupling {
    MatrixProvider op;  // Hermitian operator A_n(t)
    ParameterMap u;
    bool time_dependent = true;
};

// A(t) = -i [ drift(t) + sum_n u_n(theta) A_n(t) ], plus optional jump
// operators turning the flow into a Lindblad superoperator.
struct DynamicGenerator {
    int dim = 0;
    int n_params = 0;
    MatrixProvider drift;  // may be null
    bool drift_time_dependent = true;
    std::vector<Coupling> couplings;
    std::vector<MatrixProvider> dissipators;
};

struct TimeGrid {
    double duration = 0.0;
    int steps = 0;

    TimeGrid() = default;
    TimeGrid(double t, int n) : duration(t), steps(n) {
        if (!(t > 0.0)) throw std::invalid_argument("TimeGrid: duration must be positive");
        if (n < 1) throw std::invalid_argument("TimeGrid: need at least one step");
    }

    double dt() const { return duration / steps; }
    double time(int n) const { return n == steps ? duration : n * dt(); }
    double midpoint(int n) const { return (n + 0.5) * dt(); }
};

struct JetState {
    StateKind kind = StateKind::StateVector;
    Matrix chi;
    std::vector<Matrix> dchi;
    SymmetricPairTable<Matrix> ddchi;
    double time = 0.0;

    int n_params() const { return static_cast<int>(dchi.size()); }
};

struct Trajectory {
    std::vector<JetState> samples;
};

namespace detail {

inline void validate_shape(const Matrix& chi, StateKind kind) {
    if (chi.rows() < 2) throw std::invalid_argument("JetState: dimension must be at least 2");
    switch (kind) {
        case StateKind::StateVector:
            if (chi.cols() != 1)
                throw std::invalid_argument("JetState: state-vector kind needs a single column");
            break;
        case StateKind::Unitary:
            if (chi.rows() != chi.cols())
                throw std::invalid_argument("JetState: unitary kind needs a square matrix");
            break;
        case StateKind::StateCollection:
            break;
        case StateKind::VectorizedDensityMatrix: {
            if (chi.cols() != 1)
                throw std::invalid_argument(
                    "JetState: vectorized-density-matrix kind needs a single column");
            const auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(double(chi.rows()))));
            if (d * d != chi.rows())
                throw std::invalid_argument(
                    "JetState: vectorized-density-matrix length must be a perfect square");
            break;
        }
    }
}

}  // namespace detail

inline JetState init_jet(Matrix chi0, StateKind kind, int n_params,
                         std::vector<Matrix> initial_dchi = {},
                         std::optional<SymmetricPairTable<Matrix>> initial_ddchi = std::nullopt) {
    detail::validate_shape(chi0, kind);
    if (n_params < 0) throw std::invalid_argument("init_jet: negative parameter count");

    JetState state;
    state.kind = kind;
    state.time = 0.0;
    const Matrix zero = Matrix::Zero(chi0.rows(), chi0.cols());
    if (initial_dchi.empty()) {
        state.dchi.assign(n_params, zero);
    } else {
        if (static_cast<int>(initial_dchi.size()) != n_params)
            throw std::invalid_argument("init_jet: derivative stack count mismatch");
        for (const Matrix& m : initial_dchi)
            if (m.rows() != chi0.rows() || m.cols() != chi0.cols())
                throw std::invalid_argument("init_jet: derivative stack shape mismatch");
        state.dchi = std::move(initial_dchi);
    }
    if (initial_ddchi) {
        if (initial_ddchi->n_params() != n_params)
            throw std::invalid_argument("init_jet: Hessian stack count mismatch");
        for (const Matrix& m : *initial_ddchi)
            if (m.rows() != chi0.rows() || m.cols() != chi0.cols())
                throw std::invalid_argument("init_jet: Hessian stack shape mismatch");
        state.ddchi = std::move(*initial_ddchi);
    } else {
        state.ddchi = SymmetricPairTable<Matrix>(n_params, zero);
    }
    state.chi = std::move(chi0);
    return state;
}

// One application of the chain rule:
//   chi'      = U chi
//   dchi'[j]  = dU[j] chi + U dchi[j]
//   ddchi'[ij] = ddU[ij] chi + dU[j] dchi[i] + dU[i] dchi[j] + U ddchi[ij]
inline JetState step_jet(const JetState& state, const StepPropagatorJet& pj) {
    const int m = state.n_params();
    if (pj.n_params() != m)
        throw std::invalid_argument("step_jet: propagator built for " +
                                    std::to_string(pj.n_params()) + " parameters, state has " +
                                    std::to_string(m));
    if (pj.u.cols() != state.chi.rows())
        throw std::invalid_argument("step_jet: dimension mismatch");

    JetState next;
    next.kind = state.kind;
    next.time = state.time + pj.dt;
    next.chi = pj.u * state.chi;
    next.dchi.resize(m);
    next.ddchi = SymmetricPairTable<Matrix>(m);
    for (int j = 0; j < m; ++j) next.dchi[j] = pj.du[j] * state.chi + pj.u * state.dchi[j];
    for (int j = 0; j < m; ++j)
        for (int i = 0; i <= j; ++i)
            next.ddchi.at(i, j) = pj.ddu.at(i, j) * state.chi + pj.du[j] * state.dchi[i] +
                                  pj.du[i] * state.dchi[j] + pj.u * state.ddchi.at(i, j);
    return next;
}

namespace detail {

// Evaluated parameter maps at theta_bar: per-coupling value, gradient and
// (optional) Hessian, so the per-step generator assembly is pure axpy work.
struct MapValues {
    std::vector<double> value;
    std::vector<RealVector> grad;     // zero-length vector means zero
    std::vector<RealMatrix> hess;     // zero-size matrix means zero
    bool any_hess = false;
};

inline MapValues evaluate_maps(const DynamicGenerator& gen, const RealVector& theta) {
    MapValues mv;
    const auto n = gen.couplings.size();
    mv.value.resize(n);
    mv.grad.resize(n);
    mv.hess.resize(n);
    for (std::size_t c = 0; c < n; ++c) {
        const ParameterMap& u = gen.couplings[c].u;
        if (!u.value) throw std::invalid_argument("DynamicGenerator: coupling without value map");
        mv.value[c] = u.value(theta);
        if (u.grad) {
            mv.grad[c] = u.grad(theta);
            if (mv.grad[c].size() != theta.size())
                throw std::invalid_argument("DynamicGenerator: gradient dimension mismatch");
        }
        if (u.hess) {
            mv.hess[c] = u.hess(theta);
            if (mv.hess[c].rows() != theta.size() || mv.hess[c].cols() != theta.size())
                throw std::invalid_argument("DynamicGenerator: Hessian dimension mismatch");
            if (mv.hess[c].size() > 0 && mv.hess[c].cwiseAbs().maxCoeff() > 0.0) mv.any_hess = true;
        }
    }
    return mv;
}

// kron(I, X) - kron(X^T, I): the commutator superoperator in column-stacked
// convention, so that exp(-i dt lift(H)) vec(rho) = vec(U rho U^dag).
inline Matrix lift_commutator(const Matrix& x) {
    const Eigen::Index d = x.rows();
    Matrix out = Matrix::Zero(d * d, d * d);
    const Matrix id = Matrix::Identity(d, d);
    out += kron(id, x);
    out -= kron(x.transpose(), id);
    return out;
}

inline Matrix lindblad_superoperator(const Matrix& h, const std::vector<Matrix>& jumps) {
    const Eigen::Index d = h.rows();
    const Matrix id = Matrix::Identity(d, d);
    Matrix sup = Complex(0, -1) * lift_commutator(h);
    for (const Matrix& l : jumps) {
        const Matrix ldl = l.adjoint() * l;
        sup += kron(l.conjugate(), l) - 0.5 * kron(id, ldl) - 0.5 * kron(ldl.transpose(), id);
    }
    return sup;
}

}  // namespace detail

// Per-step operator snapshots on a fixed grid; lets many parameter draws
// share the (theta-independent) operator evaluations.
class FrozenGenerator {
public:
    FrozenGenerator(const DynamicGenerator& gen, const TimeGrid& grid) : gen_(gen), grid_(grid) {
        const auto snap = [&](const MatrixProvider& op, bool time_dep) {
            std::vector<Matrix> v;
            if (!op) return v;
            if (time_dep) {
                v.reserve(grid.steps);
                for (int n = 0; n < grid.steps; ++n) v.push_back(op(grid.midpoint(n)));
            } else {
                v.push_back(op(grid.midpoint(0)));
            }
            return v;
        };
        drift_ = snap(gen.drift, gen.drift_time_dependent);
        ops_.reserve(gen.couplings.size());
        for (const Coupling& c : gen.couplings) ops_.push_back(snap(c.op, c.time_dependent));
    }

    const DynamicGenerator& generator() const { return gen_; }
    const TimeGrid& grid() const { return grid_; }

    const Matrix* drift(int step) const {
        if (drift_.empty()) return nullptr;
        return &drift_[drift_.size() == 1 ? 0 : static_cast<std::size_t>(step)];
    }

    const Matrix& coupling_op(std::size_t c, int step) const {
        const auto& v = ops_[c];
        return v[v.size() == 1 ? 0 : static_cast<std::size_t>(step)];
    }

    Matrix hamiltonian(int step, const std::vector<double>& u_values) const {
        Matrix h = Matrix::Zero(gen_.dim, gen_.dim);
        if (const Matrix* d = drift(step)) h = *d;
        for (std::size_t c = 0; c < ops_.size(); ++c) h += u_values[c] * coupling_op(c, step);
        return h;
    }

private:
    DynamicGenerator gen_;
    TimeGrid grid_;
    std::vector<Matrix> drift_;
    std::vector<std::vector<Matrix>> ops_;
};

namespace detail {

struct SampleSchedule {
    std::vector<int> step_of_sample;  // grid index per requested sample; 0 always present

    static SampleSchedule build(const std::vector<double>& sample_times, const TimeGrid& grid) {
        SampleSchedule s;
        const double tol = 1e-9 * std::max(grid.duration, 1.0);
        s.step_of_sample.push_back(0);
        double prev = 0.0;
        for (double t : sample_times) {
            if (t <= prev + tol) {
                if (std::abs(t) <= tol) continue;  // t=0 already present
                throw std::invalid_argument("evolve: sample times must be strictly increasing");
            }
            const double ratio = t / grid.dt();
            const int n = static_cast<int>(std::llround(ratio));
            if (n < 0 || n > grid.steps || std::abs(ratio - n) > 1e-6)
                throw std::invalid_argument("evolve: sample time " + std::to_string(t) +
                                            " does not lie on the grid");
            s.step_of_sample.push_back(n);
            prev = t;
        }
        return s;
    }
};

// Exact-derivative step jet for a Hermitian generator.
inline StepPropagatorJet hermitian_step_jet(const Matrix& h, const std::vector<Matrix>& dh,
                                            const SymmetricPairTable<Matrix>& ddh, double dt,
                                            bool lift, int step_index) {
    Matrix h_eff = h;
    std::vector<Matrix> dh_eff;
    SymmetricPairTable<Matrix> ddh_eff;
    if (lift) {
        h_eff = lift_commutator(h);
        dh_eff.reserve(dh.size());
        for (const Matrix& m : dh) dh_eff.push_back(m.size() ? lift_commutator(m) : Matrix());
        ddh_eff = SymmetricPairTable<Matrix>(ddh.n_params());
        for (std::size_t p = 0; p < ddh.size(); ++p)
            if (ddh.slot(p).size()) ddh_eff.slot(p) = lift_commutator(ddh.slot(p));
    }
    const auto& use_dh = lift ? dh_eff : dh;
    const auto& use_ddh = lift ? ddh_eff : ddh;
    if (!h_eff.allFinite())
        throw std::runtime_error("evolve: step " + std::to_string(step_index) +
                                 ": assembled generator has non-finite entries");
    try {
        const Spectrum s = eigendecompose(HermitianOperator(std::move(h_eff), 1e-10));
        return build_step_jet(s, dt, use_dh, use_ddh);
    } catch (const std::exception& e) {
        throw std::runtime_error("evolve: step " + std::to_string(step_index) + ": " + e.what());
    }
}

// Non-Hermitian fallback: the step map is exp(L dt) by scaling and squaring,
// its parameter derivatives come from central differences over theta.
inline StepPropagatorJet lindblad_step_jet(const DynamicGenerator& gen,
                                           const RealVector& theta_bar, double t_mid, double dt) {
    const int m = static_cast<int>(theta_bar.size());
    std::vector<Matrix> ops;
    ops.reserve(gen.couplings.size());
    for (const Coupling& c : gen.couplings) ops.push_back(c.op(t_mid));
    std::vector<Matrix> jumps;
    jumps.reserve(gen.dissipators.size());
    for (const auto& dp : gen.dissipators) jumps.push_back(dp(t_mid));
    const Matrix h_drift =
        gen.drift ? Matrix(gen.drift(t_mid)) : Matrix(Matrix::Zero(gen.dim, gen.dim));

    const auto u_at = [&](const RealVector& theta) {
        Matrix h = h_drift;
        for (std::size_t c = 0; c < ops.size(); ++c)
            h += gen.couplings[c].u.value(theta) * ops[c];
        return Matrix((lindblad_superoperator(h, jumps) * dt).exp());
    };

    StepPropagatorJet jet;
    jet.dt = dt;
    jet.u = u_at(theta_bar);
    jet.du.resize(m);
    jet.ddu = SymmetricPairTable<Matrix>(m);

    std::vector<Matrix> plus(m), minus(m);
    for (int j = 0; j < m; ++j) {
        const double e1 = default_epsilon_first(theta_bar(j));
        RealVector t = theta_bar;
        t(j) += e1;
        plus[j] = u_at(t);
        t(j) -= 2 * e1;
        minus[j] = u_at(t);
        jet.du[j] = (plus[j] - minus[j]) / (2 * e1);
    }
    for (int j = 0; j < m; ++j) {
        const double ej = default_epsilon_second(theta_bar(j));
        RealVector t = theta_bar;
        t(j) += ej;
        const Matrix pj = u_at(t);
        t(j) -= 2 * ej;
        const Matrix mj = u_at(t);
        jet.ddu.at(j, j) = (pj - 2 * jet.u + mj) / (ej * ej);
        for (int i = 0; i < j; ++i) {
            const double e = default_epsilon_second(
                std::sqrt(std::max(std::abs(theta_bar(i)), 1e-3) *
                          std::max(std::abs(theta_bar(j)), 1e-3)));
            const auto at2 = [&](double di, double dj) {
                RealVector tt = theta_bar;
                tt(i) += di;
                tt(j) += dj;
                return u_at(tt);
            };
            jet.ddu.at(i, j) = (at2(e, e) - at2(e, 0) - at2(0, e) + 2 * jet.u - at2(-e, 0) -
                                at2(0, -e) + at2(-e, -e)) /
                               (2 * e * e);
        }
    }
    return jet;
}

}  // namespace detail

// Propagate a jet through the full grid, sampling at the requested times
// (t = 0 is always included). The generator is sampled at step midpoints.
inline Trajectory evolve(const DynamicGenerator& gen, const RealVector& theta_bar,
                         const TimeGrid& grid, const JetState& init,
                         const std::vector<double>& sample_times) {
    if (theta_bar.size() != gen.n_params)
        throw std::invalid_argument("evolve: theta has " + std::to_string(theta_bar.size()) +
                                    " entries, generator declares " + std::to_string(gen.n_params));
    if (init.n_params() != gen.n_params)
        throw std::invalid_argument("evolve: initial jet parameter count mismatch");
    const bool lift = init.kind == StateKind::VectorizedDensityMatrix;
    const Eigen::Index flow_dim = lift ? Eigen::Index(gen.dim) * gen.dim : Eigen::Index(gen.dim);
    if (init.chi.rows() != flow_dim)
        throw std::invalid_argument("evolve: state dimension " + std::to_string(init.chi.rows()) +
                                    " does not match generator flow dimension " +
                                    std::to_string(flow_dim));
    if (!gen.dissipators.empty() && !lift)
        throw std::invalid_argument(
            "evolve: dissipators require the vectorized-density-matrix kind");

    const auto schedule = detail::SampleSchedule::build(sample_times, grid);
    const auto mv = detail::evaluate_maps(gen, theta_bar);
    const double dt = grid.dt();
    const int m = gen.n_params;

    Trajectory traj;
    traj.samples.reserve(schedule.step_of_sample.size());
    JetState state = init;
    state.time = 0.0;

    std::size_t cursor = 0;
    if (schedule.step_of_sample[cursor] == 0) {
        traj.samples.push_back(state);
        ++cursor;
    }

    std::vector<Matrix> dh(m);
    SymmetricPairTable<Matrix> ddh(m);
    for (int n = 0; n < grid.steps; ++n) {
        const double t_mid = grid.midpoint(n);
        StepPropagatorJet jet;
        if (!gen.dissipators.empty()) {
            jet = detail::lindblad_step_jet(gen, theta_bar, t_mid, dt);
        } else {
            Matrix h = gen.drift ? Matrix(gen.drift(t_mid))
                                 : Matrix(Matrix::Zero(gen.dim, gen.dim));
            for (int j = 0; j < m; ++j) dh[j] = Matrix();
            for (std::size_t p = 0; p < ddh.size(); ++p) ddh.slot(p) = Matrix();
            for (std::size_t c = 0; c < gen.couplings.size(); ++c) {
                const Matrix op = gen.couplings[c].op(t_mid);
                h += mv.value[c] * op;
                if (mv.grad[c].size())
                    for (int j = 0; j < m; ++j) {
                        const double w = mv.grad[c](j);
                        if (w == 0.0) continue;
                        if (dh[j].size() == 0) dh[j] = Matrix::Zero(gen.dim, gen.dim);
                        dh[j] += w * op;
                    }
                if (mv.any_hess && mv.hess[c].size())
                    for (int j = 0; j < m; ++j)
                        for (int i = 0; i <= j; ++i) {
                            const double w = mv.hess[c](i, j);
                            if (w == 0.0) continue;
                            if (ddh.at(i, j).size() == 0)
                                ddh.at(i, j) = Matrix::Zero(gen.dim, gen.dim);
                            ddh.at(i, j) += w * op;
                        }
            }
            jet = detail::hermitian_step_jet(h, dh, ddh, dt, lift, n);
        }
        state = step_jet(state, jet);
        if (!state.chi.allFinite())
            throw std::runtime_error("evolve: non-finite state after step " + std::to_string(n) +
                                     " (t = " + std::to_string(grid.time(n + 1)) + ")");
        while (cursor < schedule.step_of_sample.size() &&
               schedule.step_of_sample[cursor] == n + 1) {
            state.time = grid.time(n + 1);
            traj.samples.push_back(state);
            ++cursor;
        }
    }
    return traj;
}

// Derivative-free propagation on a frozen grid; the workhorse for Monte
// Carlo draws. Returns the state at each scheduled sample time.
inline std::vector<Matrix> propagate_plain(const FrozenGenerator& frozen, const RealVector& theta,
                                           const Matrix& chi0, StateKind kind,
                                           const std::vector<double>& sample_times) {
    const DynamicGenerator& gen = frozen.generator();
    const TimeGrid& grid = frozen.grid();
    const bool lift = kind == StateKind::VectorizedDensityMatrix;
    if (!gen.dissipators.empty() && !lift)
        throw std::invalid_argument(
            "propagate_plain: dissipators require the vectorized-density-matrix kind");

    const auto schedule = detail::SampleSchedule::build(sample_times, grid);
    std::vector<double> u_values(gen.couplings.size());
    for (std::size_t c = 0; c < gen.couplings.size(); ++c)
        u_values[c] = gen.couplings[c].u.value(theta);

    const double dt = grid.dt();
    std::vector<Matrix> out;
    out.reserve(schedule.step_of_sample.size());
    Matrix chi = chi0;

    std::size_t cursor = 0;
    if (schedule.step_of_sample[cursor] == 0) {
        out.push_back(chi);
        ++cursor;
    }
    for (int n = 0; n < grid.steps; ++n) {
        const Matrix h = frozen.hamiltonian(n, u_values);
        if (gen.dissipators.empty()) {
            if (lift)
                chi = apply_matrix_exponential(Complex(0, -dt) * detail::lift_commutator(h), chi);
            else
                chi = apply_matrix_exponential(Complex(0, -dt) * h, chi);
        } else {
            std::vector<Matrix> jumps;
            for (const auto& dp : gen.dissipators) jumps.push_back(dp(grid.midpoint(n)));
            chi = apply_matrix_exponential(detail::lindblad_superoperator(h, jumps) * dt, chi);
        }
        if (!chi.allFinite())
            throw std::runtime_error("propagate_plain: non-finite state after step " +
                                     std::to_string(n));
        while (cursor < schedule.step_of_sample.size() &&
               schedule.step_of_sample[cursor] == n + 1) {
            out.push_back(chi);
            ++cursor;
        }
    }
    return out;
}

}  // namespace qupid
