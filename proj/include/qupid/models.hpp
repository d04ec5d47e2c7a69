// Scenario library: pulse shapes and the two-level / spin-star systems,
// expressed as dynamic generators with declared uncertain parameters.
#pragma once

#include "qupid/uncertainty.hpp"

#include <numeric>

namespace qupid {

// One Gaussian lobe: envelope A exp(-(t - tc)^2 / 2 sigma^2) over a window
// of +-truncation sigma, driving a Bloch rotation by `rotation` about the
// axis cos(phase) X + sin(phase) Y.
struct GaussianSegment {
    double sigma = 0.0;
    double truncation = 0.0;
    double rotation = 0.0;
    double phase = 0.0;

    double duration() const { return 2.0 * truncation * sigma; }
};

struct CustomPulse {
    std::vector<double> times;
    std::vector<double> values;
    double phase = 0.0;
};

enum class PulseKind { Gaussian, BB1, Composite, Custom };

struct PulseShape {
    PulseKind kind = PulseKind::Gaussian;
    std::vector<GaussianSegment> segments;
    CustomPulse custom;

    double duration() const {
        if (kind == PulseKind::Custom) return custom.times.empty() ? 0.0 : custom.times.back();
        double total = 0.0;
        for (const auto& s : segments) total += s.duration();
        return total;
    }
};

inline PulseShape gaussian_pulse(double sigma, double truncation, double rotation,
                                 double phase = 0.0) {
    if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_pulse: sigma must be positive");
    if (!(truncation > 0.0))
        throw std::invalid_argument("gaussian_pulse: truncation must be positive");
    if (!(rotation > 0.0) || rotation > 2.0 * M_PI + 1e-12)
        throw std::invalid_argument("gaussian_pulse: rotation must lie in (0, 2 pi]");
    PulseShape shape;
    shape.kind = PulseKind::Gaussian;
    shape.segments.push_back({sigma, truncation, rotation, phase});
    return shape;
}

// Broadband composite sequence R_{pi,phi} R_{2pi,3phi} R_{pi,phi} R_{theta,0}
// with phi = acos(-theta / 4 pi); the target rotation executes first.
inline PulseShape bb1_sequence(double theta, double sigma, double truncation) {
    if (!(theta > 0.0) || !(theta < 4.0 * M_PI))
        throw std::invalid_argument("bb1_sequence: rotation must lie in (0, 4 pi)");
    const double phi = std::acos(-theta / (4.0 * M_PI));
    PulseShape shape;
    shape.kind = PulseKind::BB1;
    shape.segments.push_back({sigma, truncation, theta, 0.0});
    shape.segments.push_back({sigma, truncation, M_PI, phi});
    shape.segments.push_back({sigma, truncation, 2.0 * M_PI, 3.0 * phi});
    shape.segments.push_back({sigma, truncation, M_PI, phi});
    return shape;
}

inline PulseShape custom_pulse(std::vector<double> times, std::vector<double> values,
                               double phase = 0.0) {
    if (times.size() != values.size() || times.size() < 2)
        throw std::invalid_argument("custom_pulse: need matching time/value tables");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (times[i] <= times[i - 1])
            throw std::invalid_argument("custom_pulse: times must increase");
    for (double v : values)
        if (std::abs(v) > 1.0 + 1e-12)
            throw std::invalid_argument("custom_pulse: |u| must not exceed 1");
    PulseShape shape;
    shape.kind = PulseKind::Custom;
    shape.custom = {std::move(times), std::move(values), phase};
    return shape;
}

// Dimensionless envelope with per-segment amplitudes resolved against a
// drive scale. A rotation by theta needs an exponent area of theta / 2,
// since the drive axis has eigenvalue gap 2.
class CalibratedPulse {
public:
    CalibratedPulse(PulseShape shape, double omega_max) : shape_(std::move(shape)) {
        if (shape_.kind == PulseKind::Custom) return;
        offsets_.reserve(shape_.segments.size());
        amplitudes_.reserve(shape_.segments.size());
        double t0 = 0.0;
        for (const auto& seg : shape_.segments) {
            const double area = seg.sigma * std::sqrt(2.0 * M_PI) *
                                std::erf(seg.truncation / std::sqrt(2.0));
            const double amp = seg.rotation / (2.0 * omega_max * area);
            if (amp > 1.0 + 1e-12)
                throw std::invalid_argument(
                    "pulse calibration: rotation " + std::to_string(seg.rotation) +
                    " unreachable with |u| <= 1 at drive scale " + std::to_string(omega_max));
            offsets_.push_back(t0);
            amplitudes_.push_back(amp);
            t0 += seg.duration();
        }
    }

    double duration() const { return shape_.duration(); }
    const PulseShape& shape() const { return shape_; }
    const std::vector<double>& amplitudes() const { return amplitudes_; }

    double envelope(double t) const {
        if (shape_.kind == PulseKind::Custom) return custom_value(t);
        const int s = segment_at(t);
        if (s < 0) return 0.0;
        const auto& seg = shape_.segments[s];
        const double tc = offsets_[s] + seg.truncation * seg.sigma;
        const double x = (t - tc) / seg.sigma;
        return amplitudes_[s] * std::exp(-0.5 * x * x);
    }

    double phase(double t) const {
        if (shape_.kind == PulseKind::Custom) return shape_.custom.phase;
        const int s = segment_at(t);
        return s < 0 ? 0.0 : shape_.segments[s].phase;
    }

private:
    int segment_at(double t) const {
        if (t < 0.0) return -1;
        for (std::size_t s = 0; s < shape_.segments.size(); ++s)
            if (t <= offsets_[s] + shape_.segments[s].duration()) return static_cast<int>(s);
        return -1;
    }

    double custom_value(double t) const {
        const auto& c = shape_.custom;
        if (t <= c.times.front()) return c.values.front();
        if (t >= c.times.back()) return c.values.back();
        const auto it = std::upper_bound(c.times.begin(), c.times.end(), t);
        const std::size_t hi = static_cast<std::size_t>(it - c.times.begin());
        const double w = (t - c.times[hi - 1]) / (c.times[hi] - c.times[hi - 1]);
        return (1.0 - w) * c.values[hi - 1] + w * c.values[hi];
    }

    PulseShape shape_;
    std::vector<double> offsets_;
    std::vector<double> amplitudes_;
};

struct UncertainParameter {
    std::string name;
    double sigma = 0.0;
};

// H(t) = Delta Z + Omega_max u(t) (cos phi X + sin phi Y); either or both of
// Delta and Omega_max may be uncertain.
struct TwoLevelModel {
    double delta = 0.0;
    double omega_max = 1.0;
    PulseShape pulse;
    std::vector<UncertainParameter> uncertain;
};

namespace detail {
inline int uncertain_index(const std::vector<UncertainParameter>& list, const std::string& name) {
    for (std::size_t j = 0; j < list.size(); ++j)
        if (list[j].name == name) return static_cast<int>(j);
    return -1;
}
}  // namespace detail

inline DynamicGenerator two_level_generator(const TwoLevelModel& model) {
    if (!(model.omega_max > 0.0))
        throw std::invalid_argument("two_level_generator: omega_max must be positive");
    for (const auto& u : model.uncertain)
        if (u.name != "omega_max" && u.name != "delta")
            throw std::invalid_argument("two_level_generator: unknown uncertain parameter '" +
                                        u.name + "'");
    const int i_omega = detail::uncertain_index(model.uncertain, "omega_max");
    const int i_delta = detail::uncertain_index(model.uncertain, "delta");
    const CalibratedPulse pulse(model.pulse, model.omega_max);

    DynamicGenerator gen;
    gen.dim = 2;
    gen.n_params = static_cast<int>(model.uncertain.size());
    gen.couplings.push_back({[](double) { return pauli_z(); },
                             i_delta >= 0 ? direct_parameter(i_delta)
                                          : constant_parameter(model.delta),
                             false});
    gen.couplings.push_back(
        {[pulse](double t) {
             const double u = pulse.envelope(t);
             const double phi = pulse.phase(t);
             return Matrix(u * (std::cos(phi) * pauli_x() + std::sin(phi) * pauli_y()));
         },
         i_omega >= 0 ? direct_parameter(i_omega) : constant_parameter(model.omega_max), true});
    return gen;
}

inline ParameterDistribution two_level_distribution(const TwoLevelModel& model) {
    const int m = static_cast<int>(model.uncertain.size());
    std::vector<std::string> names;
    RealVector mean(m);
    RealMatrix cov = RealMatrix::Zero(m, m);
    for (int j = 0; j < m; ++j) {
        const auto& u = model.uncertain[j];
        names.push_back(u.name);
        mean(j) = u.name == "omega_max" ? model.omega_max : model.delta;
        cov(j, j) = u.sigma * u.sigma;
    }
    return ParameterDistribution(std::move(names), std::move(mean), std::move(cov));
}

// Five qubits on a ring with nearest (ring edge) and next-nearest (chord)
// XX/YY/ZZ couplings and a global X control. Every coupling constant is an
// independently addressable parameter.
struct SpinStarModel {
    double j_coupling = 1.0;
    double g_coupling = 0.1;
    double duration = 10.0;
    double control_amplitude = 1.0;
    bool slave_z_to_x = false;  // replicate the J_x-on-ZZ reading
    std::vector<std::string> uncertain;
    double relative_sigma = 0.01;
};

namespace spinstar {

inline constexpr int kQubits = 5;
inline constexpr int kDim = 32;

inline const std::vector<std::pair<int, int>>& ring_edges() {
    static const std::vector<std::pair<int, int>> e{{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 0}};
    return e;
}

inline const std::vector<std::pair<int, int>>& chord_edges() {
    static const std::vector<std::pair<int, int>> e{{0, 2}, {1, 3}, {2, 4}, {3, 0}, {4, 1}};
    return e;
}

inline Matrix site_operator(const Matrix& p, int site) {
    Matrix out = Matrix::Identity(1, 1);
    for (int q = 0; q < kQubits; ++q)
        out = kron(out, q == site ? p : Matrix(Matrix::Identity(2, 2)));
    return out;
}

inline Matrix pair_operator(char axis, int i, int j) {
    const Matrix p = axis == 'x' ? pauli_x() : axis == 'y' ? pauli_y() : pauli_z();
    return site_operator(p, i) * site_operator(p, j);
}

inline Matrix global_x() {
    Matrix out = Matrix::Zero(kDim, kDim);
    for (int q = 0; q < kQubits; ++q) out += site_operator(pauli_x(), q);
    return out;
}

inline std::string coupling_name(char family, char axis, int i, int j) {
    return std::string(1, family) + "_" + axis + "_" + std::to_string(i) + "_" + std::to_string(j);
}

}  // namespace spinstar

// Declared coupling parameters: 10 edges x 3 axes = 30 by default, or 20
// when the z couplings are slaved to the x ones.
inline std::vector<std::string> spin_star_parameter_names(bool slave_z_to_x = false) {
    std::vector<std::string> names;
    const auto axes = slave_z_to_x ? std::vector<char>{'x', 'y'} : std::vector<char>{'x', 'y', 'z'};
    for (char axis : axes)
        for (const auto& [i, j] : spinstar::ring_edges())
            names.push_back(spinstar::coupling_name('J', axis, i, j));
    for (char axis : axes)
        for (const auto& [i, j] : spinstar::chord_edges())
            names.push_back(spinstar::coupling_name('g', axis, i, j));
    return names;
}

namespace detail {

struct SpinStarCoupling {
    std::string name;
    double mean;
    Matrix op;  // the term's operator: H contains mean * op
};

inline std::vector<SpinStarCoupling> spin_star_couplings(const SpinStarModel& model) {
    std::vector<SpinStarCoupling> list;
    const auto axes =
        model.slave_z_to_x ? std::vector<char>{'x', 'y'} : std::vector<char>{'x', 'y', 'z'};
    const auto add = [&](char family, const std::pair<int, int>& edge, double mean) {
        for (char axis : axes) {
            Matrix op = -spinstar::pair_operator(axis, edge.first, edge.second);
            if (model.slave_z_to_x && axis == 'x')
                op -= spinstar::pair_operator('z', edge.first, edge.second);
            list.push_back({spinstar::coupling_name(family, axis, edge.first, edge.second), mean,
                            std::move(op)});
        }
    };
    for (const auto& edge : spinstar::ring_edges()) add('J', edge, model.j_coupling);
    for (const auto& edge : spinstar::chord_edges()) add('g', edge, model.g_coupling);
    return list;
}

}  // namespace detail

inline DynamicGenerator spin_star_generator(const SpinStarModel& model) {
    const auto couplings = detail::spin_star_couplings(model);
    std::vector<bool> is_uncertain(couplings.size(), false);
    for (const std::string& name : model.uncertain) {
        bool found = false;
        for (std::size_t c = 0; c < couplings.size(); ++c)
            if (couplings[c].name == name) {
                if (is_uncertain[c])
                    throw std::invalid_argument("spin_star_generator: duplicate parameter '" +
                                                name + "'");
                is_uncertain[c] = true;
                found = true;
                break;
            }
        if (!found)
            throw std::invalid_argument("spin_star_generator: unknown coupling '" + name + "'");
    }

    Matrix h_static = Matrix::Zero(spinstar::kDim, spinstar::kDim);
    for (std::size_t c = 0; c < couplings.size(); ++c)
        if (!is_uncertain[c]) h_static += couplings[c].mean * couplings[c].op;

    const double duration = model.duration;
    const double amp = model.control_amplitude;
    const Matrix x_total = spinstar::global_x();

    DynamicGenerator gen;
    gen.dim = spinstar::kDim;
    gen.n_params = static_cast<int>(model.uncertain.size());
    gen.drift = [h_static, x_total, duration, amp](double t) {
        const double u = amp * (std::sin(M_PI * t / duration) + std::sin(3.0 * M_PI * t / duration) -
                                std::sin(5.0 * M_PI * t / duration));
        return Matrix(h_static + u * x_total);
    };
    gen.drift_time_dependent = true;

    // uncertain couplings become parameters in the order the model lists them
    for (std::size_t p = 0; p < model.uncertain.size(); ++p)
        for (std::size_t c = 0; c < couplings.size(); ++c)
            if (couplings[c].name == model.uncertain[p])
                gen.couplings.push_back({[op = couplings[c].op](double) { return op; },
                                         direct_parameter(static_cast<int>(p)), false});
    return gen;
}

inline ParameterDistribution spin_star_distribution(const SpinStarModel& model) {
    const auto couplings = detail::spin_star_couplings(model);
    const int m = static_cast<int>(model.uncertain.size());
    std::vector<std::string> names;
    RealVector mean(m);
    RealMatrix cov = RealMatrix::Zero(m, m);
    for (int j = 0; j < m; ++j) {
        const std::string& name = model.uncertain[j];
        double value = 0.0;
        bool found = false;
        for (const auto& c : couplings)
            if (c.name == name) {
                value = c.mean;
                found = true;
                break;
            }
        if (!found)
            throw std::invalid_argument("spin_star_distribution: unknown coupling '" + name + "'");
        names.push_back(name);
        mean(j) = value;
        const double sigma = model.relative_sigma * value;
        cov(j, j) = sigma * sigma;
    }
    return ParameterDistribution(std::move(names), std::move(mean), std::move(cov));
}

inline Vector spin_star_initial_state() {
    Vector v = Vector::Zero(spinstar::kDim);
    v(0) = 1.0;
    return v;
}

}  // namespace qupid
