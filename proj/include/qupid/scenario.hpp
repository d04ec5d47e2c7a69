// Declarative scenario configs: JSON schema validation and construction of
// runnable Scenario bundles.
#pragma once

#include "qupid/montecarlo.hpp"

#include <json.hpp>

#include <optional>

namespace qupid {

using Json = nlohmann::json;

namespace config {

inline const Json& require_field(const Json& j, const std::string& key, const std::string& where) {
    if (!j.is_object() || !j.contains(key))
        throw std::invalid_argument("config: missing field '" + key + "' in " + where);
    return j.at(key);
}

inline double require_number(const Json& j, const std::string& key, const std::string& where) {
    const Json& v = require_field(j, key, where);
    if (!v.is_number())
        throw std::invalid_argument("config: field '" + key + "' in " + where +
                                    " must be a number");
    return v.get<double>();
}

inline double number_or(const Json& j, const std::string& key, double fallback) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    if (!j.at(key).is_number())
        throw std::invalid_argument("config: field '" + key + "' must be a number");
    return j.at(key).get<double>();
}

// Rotation angles accept plain numbers or the shorthand "[k]pi[/d]".
inline double parse_rotation(const Json& v, const std::string& where) {
    if (v.is_number()) return v.get<double>();
    if (!v.is_string())
        throw std::invalid_argument("config: rotation in " + where +
                                    " must be a number or a 'pi' expression");
    std::string s = v.get<std::string>();
    s.erase(std::remove_if(s.begin(), s.end(), [](char c) { return c == ' '; }), s.end());
    const auto pos = s.find("pi");
    if (pos == std::string::npos)
        throw std::invalid_argument("config: cannot parse rotation '" + s + "' in " + where);
    const std::string num = s.substr(0, pos);
    const std::string rest = s.substr(pos + 2);
    double value = num.empty() ? 1.0 : std::stod(num);
    if (!rest.empty()) {
        if (rest[0] != '/')
            throw std::invalid_argument("config: cannot parse rotation '" + s + "' in " + where);
        value /= std::stod(rest.substr(1));
    }
    return value * M_PI;
}

inline Matrix parse_complex_matrix(const Json& v, const std::string& where) {
    if (!v.is_array() || v.empty())
        throw std::invalid_argument("config: " + where + " must be a non-empty matrix");
    const auto rows = v.size();
    const auto cols = v.at(0).size();
    Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        const Json& row = v.at(r);
        if (!row.is_array() || row.size() != cols)
            throw std::invalid_argument("config: ragged matrix in " + where);
        for (std::size_t c = 0; c < cols; ++c) {
            const Json& e = row.at(c);
            if (e.is_number())
                m(r, c) = Complex(e.get<double>(), 0.0);
            else if (e.is_array() && e.size() == 2 && e.at(0).is_number() && e.at(1).is_number())
                m(r, c) = Complex(e.at(0).get<double>(), e.at(1).get<double>());
            else
                throw std::invalid_argument("config: matrix entries in " + where +
                                            " must be numbers or [re, im] pairs");
        }
    }
    return m;
}

inline Vector parse_complex_vector(const Json& v, const std::string& where) {
    if (!v.is_array() || v.empty())
        throw std::invalid_argument("config: " + where + " must be a non-empty vector");
    Vector out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const Json& e = v.at(i);
        if (e.is_number())
            out(i) = Complex(e.get<double>(), 0.0);
        else if (e.is_array() && e.size() == 2)
            out(i) = Complex(e.at(0).get<double>(), e.at(1).get<double>());
        else
            throw std::invalid_argument("config: vector entries in " + where +
                                        " must be numbers or [re, im] pairs");
    }
    return out;
}

}  // namespace config

struct SweepSpec {
    std::string parameter;
    std::vector<double> relative_sigmas;
    std::string relative_to = "omega_max";
};

// A parsed config: the runnable scenario plus the pieces the commands need
// to rebuild variants (noise sweeps, parameter subsets).
struct ScenarioConfig {
    Json raw;
    std::uint64_t seed = 1;
    std::string output_prefix = "run";
    std::string model_type;
    Scenario scenario;
    std::optional<SweepSpec> sweep;
    std::optional<TwoLevelModel> two_level;
    std::optional<SpinStarModel> spin_star;
    // custom models keep their full parameter census for subset studies
    std::vector<std::string> parameter_census;
};

namespace detail {

inline PulseShape parse_pulse(const Json& j) {
    const std::string type = config::require_field(j, "type", "pulse").get<std::string>();
    if (type == "gaussian") {
        return gaussian_pulse(config::require_number(j, "sigma", "pulse"),
                              config::require_number(j, "truncation", "pulse"),
                              config::parse_rotation(config::require_field(j, "rotation", "pulse"),
                                                     "pulse"),
                              config::number_or(j, "phase", 0.0));
    }
    if (type == "bb1") {
        return bb1_sequence(
            config::parse_rotation(config::require_field(j, "rotation", "pulse"), "pulse"),
            config::require_number(j, "sigma", "pulse"),
            config::require_number(j, "truncation", "pulse"));
    }
    if (type == "custom") {
        const Json& times = config::require_field(j, "times", "pulse");
        const Json& values = config::require_field(j, "values", "pulse");
        return custom_pulse(times.get<std::vector<double>>(), values.get<std::vector<double>>(),
                            config::number_or(j, "phase", 0.0));
    }
    throw std::invalid_argument("config: unknown pulse type '" + type + "'");
}

inline ObservableSpec parse_observable(const Json& j, int dim, const Vector& reference_final,
                                       int index) {
    const std::string where = "observables[" + std::to_string(index) + "]";
    const std::string type = config::require_field(j, "type", where).get<std::string>();
    std::string label = j.contains("label") ? j.at("label").get<std::string>() : type;
    if (type == "pauli-z" || type == "pauli-x" || type == "pauli-y") {
        if (dim != 2)
            throw std::invalid_argument("config: " + where + ": Pauli observables need dim 2");
        const Matrix op = type == "pauli-z" ? pauli_z() : type == "pauli-x" ? pauli_x()
                                                                            : pauli_y();
        return {label, HermitianExpectation{HermitianOperator(op)}};
    }
    if (type == "hermitian") {
        const Matrix op =
            config::parse_complex_matrix(config::require_field(j, "matrix", where), where);
        if (op.rows() != dim)
            throw std::invalid_argument("config: " + where + ": operator dimension mismatch");
        return {label, HermitianExpectation{HermitianOperator(op)}};
    }
    if (type == "projector") {
        const Json& target = config::require_field(j, "target", where);
        Vector t;
        if (target.is_string()) {
            const std::string name = target.get<std::string>();
            if (name == "reference-final") {
                t = reference_final;
            } else if (name == "initial" || name.rfind("basis:", 0) == 0) {
                t = Vector::Zero(dim);
                t(name == "initial" ? 0 : std::stoi(name.substr(6))) = 1.0;
            } else {
                throw std::invalid_argument("config: " + where + ": unknown target '" + name +
                                            "'");
            }
        } else {
            t = config::parse_complex_vector(target, where);
        }
        if (t.size() != dim)
            throw std::invalid_argument("config: " + where + ": target dimension mismatch");
        return {label, ProjectorFidelity{t}};
    }
    if (type == "gate") {
        const Matrix target =
            config::parse_complex_matrix(config::require_field(j, "target", where), where);
        return {label, GateFidelity{target}};
    }
    throw std::invalid_argument("config: unknown observable type '" + type + "'");
}

inline std::vector<double> parse_sample_times(const Json& j, const TimeGrid& grid) {
    if (j.is_array()) return j.get<std::vector<double>>();
    if (j.is_object()) {
        if (j.contains("count")) {
            const int count = j.at("count").get<int>();
            if (count < 1) throw std::invalid_argument("config: sample_times count must be >= 1");
            std::vector<double> times;
            int last = 0;
            for (int i = 1; i <= count; ++i) {
                const int step = static_cast<int>(
                    std::llround(static_cast<double>(i) * grid.steps / count));
                if (step > last) {
                    times.push_back(grid.time(step));
                    last = step;
                }
            }
            return times;
        }
        if (j.contains("every")) {
            const int every = j.at("every").get<int>();
            if (every < 1) throw std::invalid_argument("config: sample_times every must be >= 1");
            std::vector<double> times;
            for (int s = every; s <= grid.steps; s += every) times.push_back(grid.time(s));
            if (times.empty() || times.back() != grid.duration)
                times.push_back(grid.duration);
            return times;
        }
    }
    throw std::invalid_argument(
        "config: sample_times must be a list of times, {\"count\": n} or {\"every\": k}");
}

// Uncertain subsets may be listed explicitly or drawn at random ("count")
// from the full census with the config seed.
inline std::vector<std::string> resolve_subset(const Json& j,
                                               const std::vector<std::string>& census,
                                               std::uint64_t seed, const std::string& where) {
    if (j.is_array()) return j.get<std::vector<std::string>>();
    if (j.is_object() && j.contains("count")) {
        const int count = j.at("count").get<int>();
        if (count < 0 || count > static_cast<int>(census.size()))
            throw std::invalid_argument("config: " + where + ": subset count out of range");
        std::vector<std::string> pool = census;
        rng::SplitMix64 stream(rng::substream(seed, 0xC0117ULL));
        for (int i = 0; i < count; ++i) {
            const int k = static_cast<int>(pool.size()) - i;
            const int pick = i + std::min(k - 1, static_cast<int>(stream.uniform01() * k));
            std::swap(pool[i], pool[pick]);
        }
        pool.resize(count);
        return pool;
    }
    throw std::invalid_argument("config: " + where +
                                ": expected a name list or {\"count\": n}");
}

inline RealMatrix parse_covariance_block(const Json& dist, const std::vector<std::string>& names,
                                         const RealVector& means, double omega_scale) {
    const int m = static_cast<int>(names.size());
    RealMatrix cov = RealMatrix::Zero(m, m);
    const int given = int(dist.contains("sigma")) + int(dist.contains("relative_sigma")) +
                      int(dist.contains("covariance"));
    if (given != 1)
        throw std::invalid_argument(
            "config: distribution needs exactly one of sigma, relative_sigma, covariance");
    if (dist.contains("covariance")) {
        const Json& c = dist.at("covariance");
        if (!c.is_array() || static_cast<int>(c.size()) != m)
            throw std::invalid_argument("config: covariance must be " + std::to_string(m) + "x" +
                                        std::to_string(m));
        for (int i = 0; i < m; ++i) {
            if (static_cast<int>(c.at(i).size()) != m)
                throw std::invalid_argument("config: covariance rows must have length " +
                                            std::to_string(m));
            for (int j = 0; j < m; ++j) cov(i, j) = c.at(i).at(j).get<double>();
        }
        return cov;
    }
    std::vector<double> sigmas;
    if (dist.contains("sigma")) {
        sigmas = dist.at("sigma").get<std::vector<double>>();
    } else {
        sigmas = dist.at("relative_sigma").get<std::vector<double>>();
        const std::string rel =
            dist.contains("relative_to") ? dist.at("relative_to").get<std::string>() : "omega_max";
        for (std::size_t j = 0; j < sigmas.size(); ++j) {
            if (rel == "omega_max")
                sigmas[j] *= omega_scale;
            else if (rel == "mean")
                sigmas[j] *= std::abs(means(static_cast<int>(j)));
            else
                throw std::invalid_argument("config: relative_to must be omega_max or mean");
        }
    }
    if (static_cast<int>(sigmas.size()) != m)
        throw std::invalid_argument("config: sigma list length must match parameters");
    for (int j = 0; j < m; ++j) cov(j, j) = sigmas[j] * sigmas[j];
    return cov;
}

}  // namespace detail

inline ScenarioConfig parse_scenario_config(const Json& root) {
    if (!root.is_object()) throw std::invalid_argument("config: top level must be an object");
    ScenarioConfig cfg;
    cfg.raw = root;
    if (root.contains("seed")) cfg.seed = root.at("seed").get<std::uint64_t>();
    if (root.contains("output") && root.at("output").contains("prefix"))
        cfg.output_prefix = root.at("output").at("prefix").get<std::string>();

    const Json& model = config::require_field(root, "model", "config");
    cfg.model_type = config::require_field(model, "type", "model").get<std::string>();
    Scenario& sc = cfg.scenario;

    if (cfg.model_type == "two-level") {
        TwoLevelModel tl;
        tl.delta = config::number_or(model, "delta", 0.0);
        tl.omega_max = config::require_number(model, "omega_max", "model");
        tl.pulse = detail::parse_pulse(config::require_field(model, "pulse", "model"));

        const Json& dist = config::require_field(root, "distribution", "config");
        const auto names =
            config::require_field(dist, "parameters", "distribution").get<std::vector<std::string>>();
        {
            auto sorted = names;
            std::sort(sorted.begin(), sorted.end());
            if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
                throw std::invalid_argument("config: duplicate parameter name in distribution");
        }
        RealVector means(names.size());
        for (std::size_t j = 0; j < names.size(); ++j) {
            if (names[j] == "omega_max")
                means(j) = tl.omega_max;
            else if (names[j] == "delta")
                means(j) = tl.delta;
            else
                throw std::invalid_argument("config: unknown two-level parameter '" + names[j] +
                                            "'");
            tl.uncertain.push_back({names[j], 0.0});
        }
        const RealMatrix cov = detail::parse_covariance_block(dist, names, means, tl.omega_max);
        for (std::size_t j = 0; j < names.size(); ++j)
            tl.uncertain[j].sigma = std::sqrt(cov(j, j));

        cfg.two_level = tl;
        sc.generator = two_level_generator(tl);
        sc.distribution = ParameterDistribution(names, means, cov);
        sc.kind = StateKind::StateVector;
        sc.initial_state = Vector::Zero(2);
        sc.initial_state(0, 0) = 1.0;

        const Json& grid = config::require_field(root, "grid", "config");
        const double duration =
            config::number_or(grid, "duration", tl.pulse.duration() > 0 ? tl.pulse.duration() : 0);
        sc.grid = TimeGrid(duration, static_cast<int>(config::require_number(grid, "steps", "grid")));
        cfg.parameter_census = {"omega_max", "delta"};
    } else if (cfg.model_type == "spin-star") {
        SpinStarModel ss;
        ss.j_coupling = config::number_or(model, "j_coupling", 1.0);
        ss.g_coupling = config::number_or(model, "g_coupling", ss.j_coupling / 10.0);
        ss.duration = config::number_or(model, "duration", 10.0 / ss.j_coupling);
        ss.control_amplitude = config::number_or(model, "control_amplitude", 1.0);
        ss.slave_z_to_x = model.contains("slave_z_to_x") && model.at("slave_z_to_x").get<bool>();
        ss.relative_sigma = config::number_or(model, "relative_sigma", 0.01);
        cfg.parameter_census = spin_star_parameter_names(ss.slave_z_to_x);
        ss.uncertain = detail::resolve_subset(config::require_field(model, "uncertain", "model"),
                                              cfg.parameter_census, cfg.seed, "model.uncertain");
        if (root.contains("distribution"))
            throw std::invalid_argument(
                "config: spin-star derives its distribution from the model block");

        cfg.spin_star = ss;
        sc.generator = spin_star_generator(ss);
        sc.distribution = spin_star_distribution(ss);
        sc.kind = StateKind::StateVector;
        sc.initial_state = spin_star_initial_state();
        const Json& grid = config::require_field(root, "grid", "config");
        sc.grid = TimeGrid(config::number_or(grid, "duration", ss.duration),
                           static_cast<int>(config::require_number(grid, "steps", "grid")));
    } else if (cfg.model_type == "custom") {
        const int dim = static_cast<int>(config::require_number(model, "dim", "model"));
        DynamicGenerator gen;
        gen.dim = dim;
        if (model.contains("drift")) {
            const Matrix drift = config::parse_complex_matrix(model.at("drift"), "model.drift");
            if (drift.rows() != dim || drift.cols() != dim)
                throw std::invalid_argument("config: drift must be " + std::to_string(dim) + "x" +
                                            std::to_string(dim));
            (void)HermitianOperator(drift, 1e-10);
            gen.drift = [drift](double) { return drift; };
            gen.drift_time_dependent = false;
        }
        const Json& couplings = config::require_field(model, "couplings", "model");
        std::vector<std::string> names;
        std::vector<double> means, sigmas;
        int index = 0;
        for (const Json& c : couplings) {
            const std::string where = "model.couplings[" + std::to_string(index) + "]";
            const std::string name = config::require_field(c, "name", where).get<std::string>();
            if (std::find(names.begin(), names.end(), name) != names.end())
                throw std::invalid_argument("config: duplicate coupling name '" + name + "'");
            const Matrix op =
                config::parse_complex_matrix(config::require_field(c, "matrix", where), where);
            if (op.rows() != dim || op.cols() != dim)
                throw std::invalid_argument("config: " + where + ": operator dimension mismatch");
            (void)HermitianOperator(op, 1e-10);
            names.push_back(name);
            means.push_back(config::require_number(c, "mean", where));
            sigmas.push_back(config::number_or(c, "sigma", 0.0));
            gen.couplings.push_back({[op](double) { return op; }, direct_parameter(index), false});
            ++index;
        }
        gen.n_params = index;
        RealVector mean(index);
        RealMatrix cov = RealMatrix::Zero(index, index);
        for (int j = 0; j < index; ++j) {
            mean(j) = means[j];
            cov(j, j) = sigmas[j] * sigmas[j];
        }
        sc.generator = std::move(gen);
        sc.distribution = ParameterDistribution(names, mean, cov);
        cfg.parameter_census = names;
        sc.kind = StateKind::StateVector;
        if (model.contains("initial_state")) {
            sc.initial_state =
                config::parse_complex_vector(model.at("initial_state"), "model.initial_state");
            if (sc.initial_state.rows() != dim)
                throw std::invalid_argument("config: initial_state dimension mismatch");
        } else {
            sc.initial_state = Vector::Zero(dim);
            sc.initial_state(0, 0) = 1.0;
        }
        const Json& grid = config::require_field(root, "grid", "config");
        sc.grid = TimeGrid(config::require_number(grid, "duration", "grid"),
                           static_cast<int>(config::require_number(grid, "steps", "grid")));
    } else {
        throw std::invalid_argument("config: unknown model type '" + cfg.model_type + "'");
    }

    sc.sample_times =
        detail::parse_sample_times(config::require_field(root, "sample_times", "config"), sc.grid);

    // a reference-final projector needs the uncertainty-free end point
    Vector reference_final;
    {
        const Json& obs = config::require_field(root, "observables", "config");
        bool needs_reference = false;
        for (const Json& o : obs)
            if (o.contains("target") && o.at("target").is_string() &&
                o.at("target").get<std::string>() == "reference-final")
                needs_reference = true;
        if (needs_reference) {
            const FrozenGenerator frozen(sc.generator, sc.grid);
            const auto chis = propagate_plain(frozen, sc.distribution.mean, sc.initial_state,
                                              sc.kind, {sc.grid.duration});
            reference_final = chis.back().col(0);
            reference_final.normalize();
        }
    }

    const Json& obs = config::require_field(root, "observables", "config");
    if (!obs.is_array() || obs.empty())
        throw std::invalid_argument("config: observables must be a non-empty list");
    int index = 0;
    for (const Json& o : obs) {
        sc.observables.push_back(
            detail::parse_observable(o, sc.generator.dim, reference_final, index));
        ++index;
    }
    bool any_gate = false;
    for (const auto& o : sc.observables)
        if (std::holds_alternative<GateFidelity>(o.body)) any_gate = true;
    if (any_gate) {
        for (const auto& o : sc.observables)
            if (!std::holds_alternative<GateFidelity>(o.body))
                throw std::invalid_argument(
                    "config: gate observables cannot mix with state observables");
        sc.kind = StateKind::Unitary;
        sc.initial_state = Matrix::Identity(sc.generator.dim, sc.generator.dim);
    }

    if (root.contains("sweep")) {
        const Json& sw = root.at("sweep");
        SweepSpec spec;
        spec.parameter = config::require_field(sw, "parameter", "sweep").get<std::string>();
        spec.relative_sigmas =
            config::require_field(sw, "relative_sigma", "sweep").get<std::vector<double>>();
        if (sw.contains("relative_to"))
            spec.relative_to = sw.at("relative_to").get<std::string>();
        bool known = false;
        for (const auto& n : sc.distribution.names)
            if (n == spec.parameter) known = true;
        if (!known)
            throw std::invalid_argument("config: sweep parameter '" + spec.parameter +
                                        "' is not an uncertain parameter");
        cfg.sweep = spec;
    }
    return cfg;
}

inline ScenarioConfig parse_scenario_config(const std::string& text) {
    Json root;
    try {
        root = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw std::invalid_argument(std::string("config: JSON parse error: ") + e.what());
    }
    return parse_scenario_config(root);
}

// Full diagnostic pass: every failed check becomes one line. An empty result
// means the config is runnable.
inline std::vector<std::string> validate_scenario_config(const Json& root) {
    std::vector<std::string> problems;
    ScenarioConfig cfg;
    try {
        cfg = parse_scenario_config(root);
    } catch (const std::exception& e) {
        problems.emplace_back(e.what());
        return problems;
    }
    const Scenario& sc = cfg.scenario;
    try {
        sc.distribution.validate();
        detail::covariance_factor(sc.distribution);
    } catch (const std::exception& e) {
        problems.emplace_back(std::string("covariance: ") + e.what());
    }
    // Hermiticity of the assembled generator across the grid
    try {
        const auto mv = qupid::detail::evaluate_maps(sc.generator, sc.distribution.mean);
        for (int probe = 0; probe < 5; ++probe) {
            const int step = sc.grid.steps * probe / 5;
            const double t = sc.grid.midpoint(std::min(step, sc.grid.steps - 1));
            Matrix h = sc.generator.drift ? Matrix(sc.generator.drift(t))
                                          : Matrix(Matrix::Zero(sc.generator.dim, sc.generator.dim));
            for (std::size_t c = 0; c < sc.generator.couplings.size(); ++c)
                h += mv.value[c] * sc.generator.couplings[c].op(t);
            (void)HermitianOperator(h, 1e-10);
        }
    } catch (const std::exception& e) {
        problems.emplace_back(std::string("hermiticity: ") + e.what());
    }
    // pulse calibration (|u| <= 1) for pulse-driven models
    if (cfg.two_level) {
        try {
            (void)CalibratedPulse(cfg.two_level->pulse, cfg.two_level->omega_max);
        } catch (const std::exception& e) {
            problems.emplace_back(std::string("pulse: ") + e.what());
        }
    }
    return problems;
}

}  // namespace qupid
