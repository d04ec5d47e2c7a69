// Command implementations behind the CLI: run the jet engine and the Monte
// Carlo oracle on a parsed config and emit machine-readable results.
#pragma once

#include "qupid/scenario.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace qupid {

inline constexpr const char* kVersion = "0.1.0";

// FNV-1a over the canonical (key-sorted) JSON dump; stable under key
// reordering in the source file.
inline std::string config_hash(const Json& root) {
    const std::string canonical = root.dump();
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : canonical) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

struct ObservableSeriesOut {
    std::string label;
    std::vector<double> times;
    std::vector<double> value_at_mean, mean, variance, band_low, band_high;
    // contribution columns in emission order: diagonals first, then upper
    // off-diagonal pairs when parameters are dependent
    std::vector<std::pair<std::string, std::vector<double>>> contributions;
};

struct McSeriesOut {
    std::string label;
    std::vector<double> times;
    std::vector<double> mean, stddev, sem, band_low, band_high;
};

struct AgreementOut {
    std::string label;
    double max_diff_over_sem = 0.0;
    double max_abs_diff = 0.0;
    double band_ratio_final = 1.0;  // jet band half-width over MC half-width
};

struct SweepRowOut {
    double relative_sigma = 0.0;
    double qupid_mean_final = 0.0;
    double mc_mean_final = 0.0;
    double mc_sem_final = 0.0;
};

struct ScalingCurveOut {
    int subset_size = 0;
    std::vector<double> sizes;
    std::vector<double> errors;
    double slope = 0.0;
    double qupid_error = 0.0;
    long qupid_cost = 0;
    double n_mc_equal = 0.0;
    double speedup = 0.0;
    bool extrapolated = false;
};

struct ResultBundle {
    std::string tool_version = kVersion;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string timestamp;  // excluded from hashing and from CSV output
    std::vector<ObservableSeriesOut> observables;
    std::vector<McSeriesOut> mc;
    std::vector<AgreementOut> agreement;
    std::vector<SweepRowOut> sweep;
    std::vector<ScalingCurveOut> scaling;
};

namespace emit {

inline std::string num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

inline std::string simulate_csv(const ObservableSeriesOut& s) {
    std::ostringstream out;
    out << "time,value_at_mean,mean_estimate,variance,band_low,band_high";
    for (const auto& [name, column] : s.contributions) out << ",contribution_" << name;
    out << "\n";
    for (std::size_t r = 0; r < s.times.size(); ++r) {
        out << num(s.times[r]) << ',' << num(s.value_at_mean[r]) << ',' << num(s.mean[r]) << ','
            << num(s.variance[r]) << ',' << num(s.band_low[r]) << ',' << num(s.band_high[r]);
        for (const auto& [name, column] : s.contributions) out << ',' << num(column[r]);
        out << "\n";
    }
    return out.str();
}

inline std::string compare_csv(const ObservableSeriesOut& q, const McSeriesOut& m) {
    std::ostringstream out;
    out << "time,qupid_value_at_mean,qupid_mean,qupid_band_low,qupid_band_high,"
           "mc_mean,mc_stddev,mc_sem,mc_band_low,mc_band_high,abs_mean_diff\n";
    for (std::size_t r = 0; r < q.times.size(); ++r) {
        out << num(q.times[r]) << ',' << num(q.value_at_mean[r]) << ',' << num(q.mean[r]) << ','
            << num(q.band_low[r]) << ',' << num(q.band_high[r]) << ',' << num(m.mean[r]) << ','
            << num(m.stddev[r]) << ',' << num(m.sem[r]) << ',' << num(m.band_low[r]) << ','
            << num(m.band_high[r]) << ',' << num(std::abs(q.mean[r] - m.mean[r])) << "\n";
    }
    return out.str();
}

inline std::string sweep_csv(const std::vector<SweepRowOut>& rows) {
    std::ostringstream out;
    out << "relative_sigma,qupid_mean_final,mc_mean_final,mc_sem_final\n";
    for (const auto& r : rows)
        out << num(r.relative_sigma) << ',' << num(r.qupid_mean_final) << ','
            << num(r.mc_mean_final) << ',' << num(r.mc_sem_final) << "\n";
    return out.str();
}

inline std::string scaling_curve_csv(const ScalingCurveOut& c) {
    std::ostringstream out;
    out << "samples,mean_estimation_error\n";
    for (std::size_t i = 0; i < c.sizes.size(); ++i)
        out << num(c.sizes[i]) << ',' << num(c.errors[i]) << "\n";
    return out.str();
}

inline std::string scaling_summary_csv(const std::vector<ScalingCurveOut>& curves) {
    std::ostringstream out;
    out << "subset_size,slope,qupid_error,qupid_cost_evals,n_mc_equal_accuracy,speedup,"
           "extrapolated\n";
    for (const auto& c : curves)
        out << c.subset_size << ',' << num(c.slope) << ',' << num(c.qupid_error) << ','
            << c.qupid_cost << ',' << num(c.n_mc_equal) << ',' << num(c.speedup) << ','
            << (c.extrapolated ? 1 : 0) << "\n";
    return out.str();
}

}  // namespace emit

inline Json bundle_to_json(const ResultBundle& b) {
    Json j;
    j["meta"] = {{"tool", "qupid"},
                 {"version", b.tool_version},
                 {"config_hash", b.config_hash},
                 {"seed", b.seed},
                 {"timestamp", b.timestamp}};
    for (const auto& s : b.observables) {
        Json o{{"label", s.label},           {"times", s.times},
               {"value_at_mean", s.value_at_mean}, {"mean", s.mean},
               {"variance", s.variance},     {"band_low", s.band_low},
               {"band_high", s.band_high}};
        Json contrib = Json::object();
        Json order = Json::array();
        for (const auto& [name, column] : s.contributions) {
            contrib[name] = column;
            order.push_back(name);
        }
        o["contributions"] = contrib;
        o["contribution_order"] = order;
        j["observables"].push_back(std::move(o));
    }
    for (const auto& m : b.mc)
        j["mc"].push_back({{"label", m.label},
                           {"times", m.times},
                           {"mean", m.mean},
                           {"stddev", m.stddev},
                           {"sem", m.sem},
                           {"band_low", m.band_low},
                           {"band_high", m.band_high}});
    for (const auto& a : b.agreement)
        j["agreement"].push_back({{"label", a.label},
                                  {"max_diff_over_sem", a.max_diff_over_sem},
                                  {"max_abs_diff", a.max_abs_diff},
                                  {"band_ratio_final", a.band_ratio_final}});
    for (const auto& r : b.sweep)
        j["sweep"].push_back({{"relative_sigma", r.relative_sigma},
                              {"qupid_mean_final", r.qupid_mean_final},
                              {"mc_mean_final", r.mc_mean_final},
                              {"mc_sem_final", r.mc_sem_final}});
    for (const auto& c : b.scaling)
        j["scaling"].push_back({{"subset_size", c.subset_size},
                                {"sizes", c.sizes},
                                {"errors", c.errors},
                                {"slope", c.slope},
                                {"qupid_error", c.qupid_error},
                                {"qupid_cost_evals", c.qupid_cost},
                                {"n_mc_equal_accuracy", c.n_mc_equal},
                                {"speedup", c.speedup},
                                {"extrapolated", c.extrapolated}});
    return j;
}

inline ResultBundle bundle_from_json(const Json& j) {
    ResultBundle b;
    const Json& meta = j.at("meta");
    b.tool_version = meta.at("version").get<std::string>();
    b.config_hash = meta.at("config_hash").get<std::string>();
    b.seed = meta.at("seed").get<std::uint64_t>();
    b.timestamp = meta.at("timestamp").get<std::string>();
    if (j.contains("observables"))
        for (const Json& o : j.at("observables")) {
            ObservableSeriesOut s;
            s.label = o.at("label").get<std::string>();
            s.times = o.at("times").get<std::vector<double>>();
            s.value_at_mean = o.at("value_at_mean").get<std::vector<double>>();
            s.mean = o.at("mean").get<std::vector<double>>();
            s.variance = o.at("variance").get<std::vector<double>>();
            s.band_low = o.at("band_low").get<std::vector<double>>();
            s.band_high = o.at("band_high").get<std::vector<double>>();
            for (const Json& name : o.at("contribution_order"))
                s.contributions.emplace_back(
                    name.get<std::string>(),
                    o.at("contributions").at(name.get<std::string>()).get<std::vector<double>>());
            b.observables.push_back(std::move(s));
        }
    if (j.contains("mc"))
        for (const Json& o : j.at("mc")) {
            McSeriesOut m;
            m.label = o.at("label").get<std::string>();
            m.times = o.at("times").get<std::vector<double>>();
            m.mean = o.at("mean").get<std::vector<double>>();
            m.stddev = o.at("stddev").get<std::vector<double>>();
            m.sem = o.at("sem").get<std::vector<double>>();
            m.band_low = o.at("band_low").get<std::vector<double>>();
            m.band_high = o.at("band_high").get<std::vector<double>>();
            b.mc.push_back(std::move(m));
        }
    if (j.contains("sweep"))
        for (const Json& o : j.at("sweep"))
            b.sweep.push_back({o.at("relative_sigma").get<double>(),
                               o.at("qupid_mean_final").get<double>(),
                               o.at("mc_mean_final").get<double>(),
                               o.at("mc_sem_final").get<double>()});
    if (j.contains("scaling"))
        for (const Json& o : j.at("scaling")) {
            ScalingCurveOut c;
            c.subset_size = o.at("subset_size").get<int>();
            c.sizes = o.at("sizes").get<std::vector<double>>();
            c.errors = o.at("errors").get<std::vector<double>>();
            c.slope = o.at("slope").get<double>();
            c.qupid_error = o.at("qupid_error").get<double>();
            c.qupid_cost = o.at("qupid_cost_evals").get<long>();
            c.n_mc_equal = o.at("n_mc_equal_accuracy").get<double>();
            c.speedup = o.at("speedup").get<double>();
            c.extrapolated = o.at("extrapolated").get<bool>();
        b.scaling.push_back(std::move(c));
        }
    return b;
}

struct RunOptions {
    std::filesystem::path out_dir = ".";
    std::optional<std::uint64_t> seed;
    int mc_samples = 10000;
    int repeats = 1000;
    std::vector<int> subset_sizes{1, 10, 20, 30};
    int dt_halve = 0;
    int threads = 1;
    bool slave_z_couplings = false;  // force the z-slaved coupling reading
    bool quiet = false;
};

namespace detail {

inline std::string iso_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%FT%TZ", std::gmtime(&t));
    return buf;
}

inline ScenarioConfig load_config(const std::filesystem::path& path, const RunOptions& opt) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    Json root;
    try {
        root = Json::parse(buffer.str());
    } catch (const Json::parse_error& e) {
        throw std::invalid_argument(std::string("config: JSON parse error: ") + e.what());
    }
    if (opt.slave_z_couplings && root.contains("model")) root["model"]["slave_z_to_x"] = true;
    ScenarioConfig cfg = parse_scenario_config(root);
    if (opt.seed) cfg.seed = *opt.seed;
    if (opt.dt_halve > 0) {
        cfg.scenario.grid.steps <<= opt.dt_halve;
        // sample times stay valid: the refined grid contains the old points
    }
    return cfg;
}

inline ObservableSeriesOut series_from_report(const UncertaintyReport& report) {
    ObservableSeriesOut s;
    s.label = report.observable_label;
    const int m = static_cast<int>(report.parameter_names.size());
    for (int j = 0; j < m; ++j)
        s.contributions.emplace_back(report.parameter_names[j], std::vector<double>());
    if (!report.independent)
        for (int j = 0; j < m; ++j)
            for (int i = 0; i < j; ++i)
                s.contributions.emplace_back(
                    report.parameter_names[i] + "__" + report.parameter_names[j],
                    std::vector<double>());
    for (const auto& e : report.entries) {
        s.times.push_back(e.time);
        s.value_at_mean.push_back(e.value_at_mean);
        s.mean.push_back(e.mean);
        s.variance.push_back(e.variance);
        s.band_low.push_back(e.band_low);
        s.band_high.push_back(e.band_high);
        int col = 0;
        for (int j = 0; j < m; ++j) s.contributions[col++].second.push_back(e.contributions(j, j));
        if (!report.independent)
            for (int j = 0; j < m; ++j)
                for (int i = 0; i < j; ++i)
                    s.contributions[col++].second.push_back(2.0 * e.contributions(i, j));
    }
    return s;
}

inline McSeriesOut series_from_mc(const McSeries& s) {
    McSeriesOut out;
    out.label = s.observable_label;
    out.times = s.times;
    const auto to_vec = [](const RealVector& v) {
        return std::vector<double>(v.data(), v.data() + v.size());
    };
    out.mean = to_vec(s.mean);
    out.stddev = to_vec(s.stddev);
    out.sem = to_vec(s.sem);
    out.band_low = to_vec(s.band_low);
    out.band_high = to_vec(s.band_high);
    return out;
}

inline std::vector<ObservableSeriesOut> run_jet_reports(const Scenario& sc) {
    const JetState init = init_jet(sc.initial_state, sc.kind, sc.distribution.size());
    const Trajectory traj =
        evolve(sc.generator, sc.distribution.mean, sc.grid, init, sc.sample_times);
    std::vector<ObservableSeriesOut> out;
    out.reserve(sc.observables.size());
    for (const auto& spec : sc.observables)
        out.push_back(series_from_report(uncertainty_report(traj, spec, sc.distribution)));
    return out;
}

inline void write_bundle(const ResultBundle& bundle, const ScenarioConfig& cfg,
                         const RunOptions& opt) {
    std::filesystem::create_directories(opt.out_dir);
    emit::write_file(opt.out_dir / (cfg.output_prefix + "_bundle.json"),
                     bundle_to_json(bundle).dump(2) + "\n");
}

inline void write_simulate_csvs(const ResultBundle& bundle, const std::string& prefix,
                                const std::filesystem::path& dir) {
    for (const auto& s : bundle.observables)
        emit::write_file(dir / (prefix + "_" + s.label + ".csv"), emit::simulate_csv(s));
}

}  // namespace detail

inline ResultBundle run_simulate(const std::filesystem::path& config_path,
                                 const RunOptions& opt) {
    const ScenarioConfig cfg = detail::load_config(config_path, opt);
    ResultBundle bundle;
    bundle.config_hash = config_hash(cfg.raw);
    bundle.seed = cfg.seed;
    bundle.timestamp = detail::iso_timestamp();
    bundle.observables = detail::run_jet_reports(cfg.scenario);
    std::filesystem::create_directories(opt.out_dir);
    detail::write_simulate_csvs(bundle, cfg.output_prefix, opt.out_dir);
    detail::write_bundle(bundle, cfg, opt);
    if (!opt.quiet)
        for (const auto& s : bundle.observables)
            std::printf("%s: mean %.6g, band [%.6g, %.6g] at t = %.6g\n", s.label.c_str(),
                        s.mean.back(), s.band_low.back(), s.band_high.back(), s.times.back());
    return bundle;
}

inline ResultBundle run_compare(const std::filesystem::path& config_path, const RunOptions& opt) {
    const ScenarioConfig cfg = detail::load_config(config_path, opt);
    const Scenario& sc = cfg.scenario;

    ResultBundle bundle;
    bundle.config_hash = config_hash(cfg.raw);
    bundle.seed = cfg.seed;
    bundle.timestamp = detail::iso_timestamp();
    bundle.observables = detail::run_jet_reports(sc);

    const McStatistics stats = mc_statistics(sc, opt.mc_samples, cfg.seed, opt.threads);
    for (const auto& m : stats.per_observable) bundle.mc.push_back(detail::series_from_mc(m));

    for (std::size_t o = 0; o < bundle.observables.size(); ++o) {
        const auto& q = bundle.observables[o];
        const auto& m = bundle.mc[o];
        AgreementOut a;
        a.label = q.label;
        for (std::size_t r = 0; r < q.times.size(); ++r) {
            const double diff = std::abs(q.mean[r] - m.mean[r]);
            a.max_abs_diff = std::max(a.max_abs_diff, diff);
            if (m.sem[r] > 0.0)
                a.max_diff_over_sem = std::max(a.max_diff_over_sem, diff / m.sem[r]);
        }
        const std::size_t last = q.times.size() - 1;
        const double q_half = 0.5 * (q.band_high[last] - q.band_low[last]);
        const double m_half = 0.5 * (m.band_high[last] - m.band_low[last]);
        a.band_ratio_final = m_half > 0.0 ? q_half / m_half : (q_half > 0.0 ? INFINITY : 1.0);
        bundle.agreement.push_back(a);
    }

    // optional amplitude-noise sweep on the first observable's end point
    if (cfg.sweep) {
        const SweepSpec& sw = *cfg.sweep;
        int param = 0;
        for (int j = 0; j < sc.distribution.size(); ++j)
            if (sc.distribution.names[j] == sw.parameter) param = j;
        const double scale = sw.relative_to == "mean"
                                 ? std::abs(sc.distribution.mean(param))
                                 : (cfg.two_level ? cfg.two_level->omega_max : 1.0);
        const int sweep_k = std::max(opt.mc_samples / 5, 200);
        for (double rel : sw.relative_sigmas) {
            Scenario variant = sc;
            RealMatrix cov = RealMatrix::Zero(sc.distribution.size(), sc.distribution.size());
            const double sigma = rel * scale;
            cov(param, param) = sigma * sigma;
            variant.distribution =
                ParameterDistribution(sc.distribution.names, sc.distribution.mean, cov);
            const auto reports = detail::run_jet_reports(variant);
            const McStatistics vstats =
                mc_statistics(variant, sweep_k, cfg.seed ^ 0x511EEBULL, opt.threads);
            SweepRowOut row;
            row.relative_sigma = rel;
            row.qupid_mean_final = reports[0].mean.back();
            row.mc_mean_final = vstats.per_observable[0].mean(
                vstats.per_observable[0].mean.size() - 1);
            row.mc_sem_final =
                vstats.per_observable[0].sem(vstats.per_observable[0].sem.size() - 1);
            bundle.sweep.push_back(row);
        }
    }

    std::filesystem::create_directories(opt.out_dir);
    for (std::size_t o = 0; o < bundle.observables.size(); ++o)
        emit::write_file(opt.out_dir / (cfg.output_prefix + "_" + bundle.observables[o].label +
                                        "_compare.csv"),
                         emit::compare_csv(bundle.observables[o], bundle.mc[o]));
    if (!bundle.sweep.empty())
        emit::write_file(opt.out_dir / (cfg.output_prefix + "_sweep.csv"),
                         emit::sweep_csv(bundle.sweep));
    detail::write_bundle(bundle, cfg, opt);
    if (!opt.quiet)
        for (const auto& a : bundle.agreement)
            std::printf("%s: max |mean diff|/SEM = %.3f, final band ratio = %.3f\n",
                        a.label.c_str(), a.max_diff_over_sem, a.band_ratio_final);
    return bundle;
}

inline ResultBundle run_scaling(const std::filesystem::path& config_path, const RunOptions& opt) {
    const ScenarioConfig cfg = detail::load_config(config_path, opt);
    if (!cfg.spin_star && cfg.model_type != "custom")
        throw std::invalid_argument(
            "scaling: needs a spin-star or custom model with a parameter census");

    ResultBundle bundle;
    bundle.config_hash = config_hash(cfg.raw);
    bundle.seed = cfg.seed;
    bundle.timestamp = detail::iso_timestamp();

    // log-spaced subset sizes up to a tenth of the batch, so the curve stays
    // clear of the forced zero at the full batch size
    std::vector<int> curve_sizes;
    for (double x = 1.0; x <= opt.mc_samples / 10 + 0.5; x *= std::sqrt(10.0))
        curve_sizes.push_back(static_cast<int>(std::llround(x)));
    curve_sizes.erase(std::unique(curve_sizes.begin(), curve_sizes.end()), curve_sizes.end());

    for (int m : opt.subset_sizes) {
        if (m < 1 || m > static_cast<int>(cfg.parameter_census.size()))
            throw std::invalid_argument("scaling: subset size " + std::to_string(m) +
                                        " exceeds the parameter census");
        // seeded random subset, independent per size
        std::vector<std::string> pool = cfg.parameter_census;
        rng::SplitMix64 stream(rng::substream(cfg.seed, 0x5CA1E0ULL + m));
        for (int i = 0; i < m; ++i) {
            const int k = static_cast<int>(pool.size()) - i;
            const int pick = i + std::min(k - 1, static_cast<int>(stream.uniform01() * k));
            std::swap(pool[i], pool[pick]);
        }
        pool.resize(m);

        Scenario variant = cfg.scenario;
        if (cfg.spin_star) {
            SpinStarModel model = *cfg.spin_star;
            model.uncertain = pool;
            variant.generator = spin_star_generator(model);
            variant.distribution = spin_star_distribution(model);
        } else {
            // custom model: keep the named couplings, zero the sigmas outside
            // the subset
            RealMatrix cov = cfg.scenario.distribution.covariance;
            for (int j = 0; j < cov.rows(); ++j) {
                const bool in_subset =
                    std::find(pool.begin(), pool.end(), cfg.scenario.distribution.names[j]) !=
                    pool.end();
                if (!in_subset) {
                    cov.row(j).setZero();
                    cov.col(j).setZero();
                }
            }
            variant.distribution = ParameterDistribution(cfg.scenario.distribution.names,
                                                         cfg.scenario.distribution.mean, cov);
        }

        const SampleBatch batch = mc_batch(variant, opt.mc_samples, cfg.seed, opt.threads);
        const Eigen::Index final_col = static_cast<Eigen::Index>(batch.times.size()) - 1;
        const RealVector values = batch.series[0].col(final_col);
        const ScalingCurve curve =
            subsampling_error_curve(values, curve_sizes, opt.repeats, cfg.seed);

        const auto reports = detail::run_jet_reports(variant);
        const double qupid_mean = reports[0].mean.back();
        const double f_true = values.mean();
        const double qupid_error = std::abs(f_true - qupid_mean);
        const long cost = evaluation_count(m, false);
        const SpeedupEstimate est = equal_accuracy_speedup(curve, qupid_error, cost);

        ScalingCurveOut out;
        out.subset_size = m;
        out.sizes = curve.sizes;
        out.errors = curve.errors;
        out.slope = curve.slope;
        out.qupid_error = qupid_error;
        out.qupid_cost = cost;
        out.n_mc_equal = est.n_mc;
        out.speedup = est.speedup;
        out.extrapolated = est.extrapolated;
        bundle.scaling.push_back(std::move(out));
        if (!opt.quiet)
            std::printf("subset %d: slope %.3f, speedup %.0f%s\n", m, curve.slope, est.speedup,
                        est.extrapolated ? " (extrapolated)" : "");
    }

    std::filesystem::create_directories(opt.out_dir);
    for (const auto& c : bundle.scaling)
        emit::write_file(opt.out_dir / (cfg.output_prefix + "_scaling_m" +
                                        std::to_string(c.subset_size) + ".csv"),
                         emit::scaling_curve_csv(c));
    emit::write_file(opt.out_dir / (cfg.output_prefix + "_scaling_summary.csv"),
                     emit::scaling_summary_csv(bundle.scaling));
    detail::write_bundle(bundle, cfg, opt);
    return bundle;
}

inline int run_validate(const std::filesystem::path& config_path, const RunOptions& opt) {
    std::ifstream in(config_path);
    if (!in) {
        std::fprintf(stderr, "validate: cannot read %s\n", config_path.string().c_str());
        return 2;
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    Json root;
    try {
        root = Json::parse(buffer.str());
    } catch (const Json::parse_error& e) {
        std::fprintf(stderr, "validate: JSON parse error: %s\n", e.what());
        return 2;
    }
    if (opt.slave_z_couplings && root.contains("model")) root["model"]["slave_z_to_x"] = true;
    const auto problems = validate_scenario_config(root);
    if (problems.empty()) {
        if (!opt.quiet) std::printf("config ok (hash %s)\n", config_hash(root).c_str());
        return 0;
    }
    for (const auto& p : problems) std::fprintf(stderr, "validate: %s\n", p.c_str());
    return 1;
}

}  // namespace qupid
