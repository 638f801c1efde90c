#include <CLI11.hpp>
#include <iostream>
#include <thread>

#include "srs/experiment.hpp"
#include "srs/io.hpp"

namespace {

struct Args {
    std::string config;
    std::string run_dir;
    std::string compare;
    std::uint64_t seed = 0;
    unsigned jobs = 1;
    bool force = false;
    bool assert_subpoisson = false;
    bool quiet = false;
};

srs::CommandOptions options(const Args& a, const CLI::App& sub) {
    srs::CommandOptions o;
    if (sub.count("--seed")) o.seed = a.seed;
    o.jobs = a.jobs == 0 ? std::max(1u, std::thread::hardware_concurrency()) : a.jobs;
    o.force = a.force;
    o.assert_subpoisson = a.assert_subpoisson;
    if (!a.compare.empty()) o.compare_dir = a.compare;
    o.log = a.quiet ? nullptr : &std::cerr;
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spatial birth-death simulator and moment-equation solver"};
    app.require_subcommand(1);
    Args a;

    auto common = [&](CLI::App* s, bool config_required) {
        auto* opt = s->add_option("--config", a.config, "experiment config file");
        if (config_required) opt->required();
        s->add_option("--seed", a.seed, "seed override");
        s->add_option("--jobs", a.jobs, "worker threads (0: all cores)");
        s->add_flag("--force", a.force, "overwrite existing output");
        s->add_flag("-q,--quiet", a.quiet, "no progress messages");
    };
    auto* sim = app.add_subcommand("simulate", "run replicas, write snapshots and manifest");
    common(sim, true);
    auto* obs = app.add_subcommand("observe", "compute statistics over a run directory");
    common(obs, false);
    obs->add_option("--run", a.run_dir, "run directory (default: output.dir of --config)");
    obs->add_flag("--assert-subpoisson", a.assert_subpoisson, "exit 3 if any sub-Poisson test fails");
    auto* hier = app.add_subcommand("hierarchy", "solve mean-field and pair dynamics");
    common(hier, true);
    hier->add_option("--compare", a.compare, "run directory to compare against");
    auto* full = app.add_subcommand("full", "simulate + observe + hierarchy + compare");
    common(full, true);
    full->add_flag("--assert-subpoisson", a.assert_subpoisson, "exit 3 if any sub-Poisson test fails");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : srs::exit_config;
    }

    try {
        if (*sim) {
            srs::cmd_simulate(srs::load_config(a.config), options(a, *sim));
            return srs::exit_ok;
        }
        if (*obs) {
            std::optional<srs::ExperimentConfig> settings;
            if (!a.config.empty()) settings = srs::load_config(a.config);
            if (a.run_dir.empty() && !settings) {
                std::cerr << "observe: give --run or --config\n";
                return srs::exit_config;
            }
            const auto dir = a.run_dir.empty() ? srs::resolve_output_dir(*settings) : std::filesystem::path(a.run_dir);
            return srs::cmd_observe(dir, settings, options(a, *obs));
        }
        if (*hier) {
            srs::cmd_hierarchy(srs::load_config(a.config), options(a, *hier));
            return srs::exit_ok;
        }
        if (*full) return srs::cmd_full(srs::load_config(a.config), options(a, *full));
    } catch (const srs::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return srs::exit_config;
    } catch (const srs::OutputCollision& e) {
        std::cerr << "error: " << e.what() << '\n';
        return srs::exit_collision;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return srs::exit_failure;
    }
    return srs::exit_failure;
}
