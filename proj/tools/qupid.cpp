// Command-line front end: simulate / compare / scaling / validate over a
// JSON scenario config.
#include "qupid/runner.hpp"

#include <CLI11.hpp>

#include <cstdlib>

namespace {

int env_threads() {
    if (const char* v = std::getenv("QUPID_THREADS")) {
        const int n = std::atoi(v);
        if (n > 0) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"qupid - uncertainty propagation through quantum dynamics"};
    app.require_subcommand(1);

    std::string config_path;
    qupid::RunOptions opt;
    opt.threads = env_threads();
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::string subsets = "1,10,20,30";

    const auto add_common = [&](CLI::App* cmd, bool with_mc) {
        cmd->add_option("config", config_path, "scenario config (JSON)")->required();
        cmd->add_option("--out", opt.out_dir, "output directory");
        cmd->add_option("--seed", seed, "override the config seed")
            ->each([&](const std::string&) { seed_given = true; });
        cmd->add_option("--dt-halve", opt.dt_halve, "halve the step size this many times");
        cmd->add_option("--threads", opt.threads, "worker threads (QUPID_THREADS also applies)");
        cmd->add_flag("--slave-z-couplings", opt.slave_z_couplings,
                      "tie ZZ couplings to the x parameters (spin-star)");
        cmd->add_flag("--quiet", opt.quiet, "suppress progress output");
        if (with_mc)
            cmd->add_option("--mc-samples", opt.mc_samples, "Monte Carlo sample count");
    };

    CLI::App* simulate = app.add_subcommand("simulate", "run the jet engine and emit reports");
    add_common(simulate, false);
    CLI::App* compare =
        app.add_subcommand("compare", "run jet engine and Monte Carlo side by side");
    add_common(compare, true);
    CLI::App* scaling =
        app.add_subcommand("scaling", "subsampling error curves and equal-accuracy speedups");
    add_common(scaling, true);
    scaling->add_option("--params-subsets", subsets, "comma-separated subset sizes");
    scaling->add_option("--repeats", opt.repeats, "subset repeats per size");
    CLI::App* validate = app.add_subcommand("validate", "check a config without running it");
    validate->add_option("config", config_path, "scenario config (JSON)")->required();
    validate->add_flag("--slave-z-couplings", opt.slave_z_couplings,
                       "tie ZZ couplings to the x parameters (spin-star)");
    validate->add_flag("--quiet", opt.quiet, "suppress progress output");

    CLI11_PARSE(app, argc, argv);
    if (seed_given) opt.seed = seed;

    try {
        if (simulate->parsed()) {
            qupid::run_simulate(config_path, opt);
            return 0;
        }
        if (compare->parsed()) {
            qupid::run_compare(config_path, opt);
            return 0;
        }
        if (scaling->parsed()) {
            opt.subset_sizes.clear();
            std::stringstream ss(subsets);
            std::string item;
            while (std::getline(ss, item, ','))
                if (!item.empty()) opt.subset_sizes.push_back(std::stoi(item));
            if (opt.subset_sizes.empty())
                throw std::invalid_argument("scaling: --params-subsets is empty");
            qupid::run_scaling(config_path, opt);
            return 0;
        }
        return qupid::run_validate(config_path, opt);
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
