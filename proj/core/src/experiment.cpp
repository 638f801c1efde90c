#include "srs/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <json.hpp>
#include <limits>
#include <memory>
#include <ostream>

#include "srs/hierarchy.hpp"
#include "srs/io.hpp"
#include "srs/observables.hpp"
#include "srs/simulator.hpp"

namespace srs {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr const char* kManifest = "manifest.json";

void say(const CommandOptions& o, const std::string& msg) {
    if (o.log) *o.log << msg << '\n';
}

json load_manifest(const fs::path& dir) {
    const fs::path p = dir / kManifest;
    if (!fs::exists(p)) return json::object();
    try {
        return json::parse(read_file(p));
    } catch (const json::exception& e) {
        throw SnapshotError("manifest.json: " + std::string(e.what()));
    }
}

void save_manifest(const fs::path& dir, const json& m) { write_file(dir / kManifest, m.dump(2) + "\n"); }

void record(json& m, const fs::path& dir, const std::string& name, const std::string& content) {
    m["files"][name] = hex64(write_file(dir / name, content));
}

std::vector<double> hierarchy_times(const ExperimentConfig& c) {
    std::vector<double> t;
    const auto n = static_cast<std::size_t>(std::floor(c.hierarchy_horizon / c.output_step + 1e-9));
    for (std::size_t i = 0; i <= n; ++i) t.push_back(std::min(c.hierarchy_horizon, static_cast<double>(i) * c.output_step));
    if (t.back() < c.hierarchy_horizon) t.push_back(c.hierarchy_horizon);
    return t;
}

struct LoadedRun {
    ExperimentConfig config;
    std::string manifest_id;
    std::vector<RunResult> runs;
};

LoadedRun load_run(const fs::path& dir) {
    if (!fs::exists(dir / kManifest)) throw SnapshotError("run directory '" + dir.string() + "' has no manifest.json");
    if (!fs::exists(dir / "snapshots.csv")) throw SnapshotError("run directory '" + dir.string() + "' has no snapshots.csv");
    const json m = load_manifest(dir);
    LoadedRun out;
    try {
        out.config = parse_config(m.at("config").get<std::string>());
        out.manifest_id = m.at("manifest_id").get<std::string>();
    } catch (const json::exception& e) {
        throw SnapshotError("manifest.json: " + std::string(e.what()));
    }
    const std::string csv = read_file(dir / "snapshots.csv");
    if (m.contains("files") && m["files"].contains("snapshots.csv") &&
        m["files"]["snapshots.csv"].get<std::string>() != hex64(fnv1a64(csv)))
        throw SnapshotError("snapshots.csv: content hash does not match the manifest");
    const std::string first_line = csv.substr(0, csv.find('\n'));
    if (first_line != "# manifest_id: " + out.manifest_id)
        throw SnapshotError("snapshots.csv: manifest id does not match manifest.json");
    const KernelSet k = out.config.kernels();
    out.runs = parse_snapshots(csv, out.config.replicas, out.config.snapshots, out.config.geometry(), k.interaction_range());
    for (std::size_t i = 0; i < out.runs.size(); ++i) out.runs[i].seed = replica_seed(out.config.seed, i);
    return out;
}

Estimate sim_density(const std::vector<RunResult>& runs, std::size_t index, double volume) {
    RunningStats s;
    for (const auto& r : runs) s.add(static_cast<double>(r.snapshots[index].size()) / volume);
    return {s.mean(), s.se()};
}

}  // namespace

fs::path resolve_output_dir(const ExperimentConfig& c) {
    fs::path p(c.output_dir);
    if (p.is_absolute()) return p;
    const char* root = std::getenv("SRS_OUTPUT_ROOT");
    return (root && *root ? fs::path(root) : fs::current_path()) / p;
}

fs::path cmd_simulate(ExperimentConfig c, const CommandOptions& opts) {
    if (opts.seed) c.seed = *opts.seed;
    c.validate();
    const fs::path dir = resolve_output_dir(c);
    if (fs::exists(dir / kManifest) && !opts.force)
        throw OutputCollision("output directory '" + dir.string() + "' already holds a run (use --force)");
    fs::create_directories(dir);

    const auto start = std::chrono::steady_clock::now();
    const ReplicaSpec spec{c.kernels(), c.geometry(), c.kappa, c.horizon, c.snapshots};
    say(opts, "simulate: " + std::to_string(c.replicas) + " replicas, seed " + std::to_string(c.seed));
    const auto runs = run_replicas(spec, c.replicas, c.seed, std::max(1u, opts.jobs));
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const std::string id = manifest_id_for(c);
    json m = json::object();
    m["manifest_id"] = id;
    m["version"] = kVersion;
    m["seed"] = c.seed;
    m["config"] = serialize_config(c);
    std::size_t extinct = 0;
    std::uint64_t events = 0;
    std::vector<double> ext_times;
    for (const auto& r : runs) {
        events += r.events;
        if (r.extinct) {
            ++extinct;
            ext_times.push_back(r.extinction_time);
        }
    }
    KernelSet k = c.kernels();
    m["simulate"] = {{"replicas", c.replicas},
                     {"jobs", std::max(1u, opts.jobs)},
                     {"wall_time_s", wall},
                     {"snapshot_times", c.snapshots},
                     {"fission_total_rate", fission_total_rate(k.fission)},
                     {"competition_integral", competition_integral(k.competition)},
                     {"events_total", events},
                     {"extinct_replicas", extinct},
                     {"extinction_times", ext_times}};
    m["files"] = json::object();
    record(m, dir, "snapshots.csv", snapshots_csv(id, runs, c.dim));
    record(m, dir, "events.csv", events_csv(id, runs));
    save_manifest(dir, m);
    say(opts, "simulate: wrote " + dir.string());
    return dir;
}

int cmd_observe(const fs::path& run_dir, const std::optional<ExperimentConfig>& settings, const CommandOptions& opts) {
    LoadedRun lr = load_run(run_dir);
    ExperimentConfig c = lr.config;
    if (settings) {
        c.windows = settings->windows;
        c.bins = settings->bins;
        c.thetas = settings->thetas;
        c.confidence = settings->confidence;
        c.mc_samples = settings->mc_samples;
        c.min_replicas = settings->min_replicas;
        c.ruelle_budget = settings->ruelle_budget;
        c.validate();
    }
    const auto& runs = lr.runs;
    const KernelSet kernels = c.kernels();
    const std::string& id = lr.manifest_id;
    const double vol = c.geometry().volume();
    const auto thetas = c.theta_functions();
    const double budget = c.ruelle_budget > 0.0 ? c.ruelle_budget : std::numeric_limits<double>::infinity();

    CsvTable counts(id, {"t", "window", "n", "freq", "se", "poisson_freq"});
    CsvTable corr(id, {"t", "r_lo", "r_hi", "k2", "se", "k2_norm"});
    CsvTable series(id, {"t", "k1", "k1_se", "kappa_hat", "kappa_hat_se", "var_to_mean", "f_theta_mean",
                         "f_theta_se", "generator_mean", "generator_se"});
    CsvTable ftheta(id, {"t", "theta", "f_mean", "f_se", "poisson_value", "generator_mean", "generator_se"});
    CsvTable subp(id, {"t", "window", "satisfied", "kappa_min", "worst_n", "worst_excess", "var_to_mean",
                       "void_probability"});
    CsvTable ruelle(id, {"t", "k1", "sup_sqrt_k2", "sup_bin", "kappa_hat", "kappa_hat_se", "budget", "satisfied"});

    std::size_t sub_tests = 0, sub_failures = 0;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t s = 0; s < c.snapshots.size(); ++s) {
        const double t = c.snapshots[s];
        const Estimate k1 = sim_density(runs, s, vol);
        double series_vtm = nan;
        for (double w : c.windows) {
            const auto cd = count_distribution(runs, s, c.window(w));
            const double lambda = k1.value * cd.volume;
            for (std::size_t n = 0; n < cd.counts.size(); ++n)
                counts.cell(t).cell(w).cell(n).cell(cd.frequency(n)).cell(cd.frequency_se(n))
                    .cell(poisson_pmf(lambda, static_cast<long>(n))).end_row();
            const auto grid = default_kappa_grid(k1.value);
            const auto sp = runs.size() >= 2 ? sub_poisson_test(cd, grid, c.confidence) : SubPoissonResult{};
            if (runs.size() >= 2) {
                ++sub_tests;
                if (!sp.satisfied) ++sub_failures;
            }
            subp.cell(t).cell(w).cell(sp.satisfied).cell(sp.kappa_min).cell(sp.worst_n).cell(sp.worst_excess)
                .cell(sp.var_to_mean).cell(sp.void_probability).end_row();
            series_vtm = cd.var_to_mean();
        }
        double kh = nan, kh_se = nan;
        if (!c.bins.empty()) {
            const auto ce = estimate_correlations(runs, s, c.bins);
            for (std::size_t b = 0; b < ce.bins(); ++b)
                corr.cell(t).cell(ce.edges[b]).cell(ce.edges[b + 1]).cell(ce.k2[b].value).cell(ce.k2[b].se)
                    .cell(ce.k1.value > 0.0 ? ce.normalized_k2(b) : nan).end_row();
            const auto rd = ruelle_check(ce, budget);
            kh = rd.kappa_hat;
            kh_se = rd.kappa_hat_se;
            ruelle.cell(t).cell(rd.k1).cell(rd.sup_sqrt_k2).cell(rd.sup_bin).cell(rd.kappa_hat).cell(rd.kappa_hat_se)
                .cell(budget).cell(rd.satisfied).end_row();
        }
        Estimate f0{nan, nan}, g0{nan, nan};
        for (std::size_t th = 0; th < thetas.size(); ++th) {
            RunningStats fs_, gs;
            for (std::size_t r = 0; r < runs.size(); ++r) {
                const auto& cfg = runs[r].snapshots[s];
                fs_.add(f_theta(cfg, thetas[th]));
                Rng rng(replica_seed(c.seed ^ 0x5bd1e995u, (r * c.snapshots.size() + s) * thetas.size() + th));
                gs.add(generator_on_f_theta(cfg, thetas[th], kernels, c.mc_samples, rng).value);
            }
            const Estimate fe{fs_.mean(), fs_.se()}, ge{gs.mean(), gs.se()};
            if (th == 0) {
                f0 = fe;
                g0 = ge;
            }
            ftheta.cell(t).cell(th).cell(fe.value).cell(fe.se).cell(poisson_f_theta(c.kappa, thetas[th]))
                .cell(ge.value).cell(ge.se).end_row();
        }
        series.cell(t).cell(k1.value).cell(k1.se).cell(kh).cell(kh_se).cell(series_vtm).cell(f0.value).cell(f0.se)
            .cell(g0.value).cell(g0.se).end_row();
    }

    CsvTable kolm(id, {"theta", "t", "lhs", "lhs_se", "rhs", "rhs_se", "residual", "residual_se", "consistent"});
    bool kolmogorov_ran = false;
    if (!thetas.empty() && c.snapshots.size() >= 3) {
        KolmogorovOptions ko{c.mc_samples, 0.95, c.min_replicas};
        try {
            for (std::size_t th = 0; th < thetas.size(); ++th) {
                Rng rng(replica_seed(c.seed ^ 0x27d4eb2fu, th));
                for (const auto& p : kolmogorov_residual(runs, thetas[th], kernels, c.snapshots, ko, rng))
                    kolm.cell(th).cell(p.t).cell(p.lhs.value).cell(p.lhs.se).cell(p.rhs.value).cell(p.rhs.se)
                        .cell(p.residual.value).cell(p.residual.se).cell(p.consistent).end_row();
            }
            kolmogorov_ran = true;
        } catch (const InsufficientReplicas& e) {
            say(opts, std::string("observe: kolmogorov residual skipped: ") + e.what());
        }
    }

    json m = load_manifest(run_dir);
    record(m, run_dir, "counts.csv", counts.text());
    record(m, run_dir, "correlations.csv", corr.text());
    record(m, run_dir, "timeseries.csv", series.text());
    record(m, run_dir, "ftheta.csv", ftheta.text());
    record(m, run_dir, "subpoisson.csv", subp.text());
    record(m, run_dir, "ruelle.csv", ruelle.text());
    record(m, run_dir, "kolmogorov.csv", kolm.text());
    m["observe"] = {{"settings", serialize_config(c)},
                    {"sub_poisson_all", sub_failures == 0},
                    {"kolmogorov_evaluated", kolmogorov_ran}};
    save_manifest(run_dir, m);
    say(opts, "observe: sub-Poisson test failed at " + std::to_string(sub_failures) + " of " +
                  std::to_string(sub_tests) + " (time, window) pairs");
    if (opts.assert_subpoisson && sub_failures > 0) return exit_assertion;
    return exit_ok;
}

fs::path cmd_hierarchy(ExperimentConfig c, const CommandOptions& opts) {
    if (opts.seed) c.seed = *opts.seed;
    c.validate();
    const fs::path dir = resolve_output_dir(c);
    if (fs::exists(dir / "meanfield.csv") && !opts.force)
        throw OutputCollision("output directory '" + dir.string() + "' already holds hierarchy output (use --force)");
    fs::create_directories(dir);

    const KernelSet k = c.kernels();
    MeanFieldParams mf;
    try {
        mf = MeanFieldParams::from(k);
    } catch (const std::invalid_argument& e) {
        throw ConfigError("mortality.m", e.what());
    }
    const std::string id = manifest_id_for(c);
    const auto times = hierarchy_times(c);
    const Trajectory traj = solve_mean_field(c.kappa, mf, c.hierarchy_horizon, times);

    json m = load_manifest(dir);
    if (!m.contains("manifest_id")) {
        m["manifest_id"] = id;
        m["version"] = kVersion;
        m["seed"] = c.seed;
        m["config"] = serialize_config(c);
    }
    CsvTable mft(id, {"t", "u"});
    for (std::size_t i = 0; i < traj.t.size(); ++i) mft.cell(traj.t[i]).cell(traj.u[i]).end_row();
    record(m, dir, "meanfield.csv", mft.text());

    std::vector<std::pair<Closure, PairTrajectory>> pairs;
    std::vector<std::unique_ptr<PairModel>> models;
    if (k.fission.form() == FissionForm::delta_decomposition) {
        for (Closure cl : c.closures()) {
            std::unique_ptr<PairModel> model;
            try {
                model = std::make_unique<PairModel>(k, PairGridSpec{c.grid_step, c.r_max}, cl);
            } catch (const GridResolutionError& e) {
                const std::string what = e.what();
                const auto colon = what.find(':');
                throw ConfigError(what.substr(0, colon), what.substr(colon + 2));
            }
            auto pt = solve_pair(*model, model->poisson_state(c.kappa), c.hierarchy_horizon, times, c.abs_tol, c.rel_tol);
            const std::string tag(to_string(cl));
            CsvTable ut(id, {"t", "u"});
            CsvTable gt(id, {"t", "r", "g", "g_norm"});
            for (std::size_t i = 0; i < pt.t.size(); ++i) {
                const auto& st = pt.states[i];
                ut.cell(pt.t[i]).cell(st.u).end_row();
                for (std::size_t j = 0; j < st.g.size(); ++j)
                    gt.cell(pt.t[i]).cell(model->centers()[j]).cell(st.g[j])
                        .cell(st.u > 0.0 ? st.g[j] / (st.u * st.u) : std::numeric_limits<double>::quiet_NaN())
                        .end_row();
            }
            record(m, dir, "pair_u_" + tag + ".csv", ut.text());
            record(m, dir, "pair_g_" + tag + ".csv", gt.text());
            pairs.emplace_back(cl, std::move(pt));
            models.push_back(std::move(model));
        }
    } else {
        say(opts, "hierarchy: pair dynamics needs the delta fission form; writing mean-field only");
    }

    if (opts.compare_dir) {
        const LoadedRun lr = load_run(*opts.compare_dir);
        std::vector<double> ct;
        for (double t : lr.config.snapshots)
            if (t <= c.hierarchy_horizon) ct.push_back(t);
        if (ct.empty()) throw ConfigError("hierarchy.horizon", "no simulator snapshot lies within the horizon");
        std::vector<std::string> cols{"t", "sim_k1", "sim_k1_se", "meanfield_u", "meanfield_rel_err"};
        for (const auto& [cl, _] : pairs) {
            cols.push_back("pair_u_" + std::string(to_string(cl)));
            cols.push_back("pair_rel_err_" + std::string(to_string(cl)));
        }
        const Trajectory mfc = solve_mean_field(c.kappa, mf, c.hierarchy_horizon, ct);
        std::vector<PairTrajectory> pcs;
        for (std::size_t p = 0; p < pairs.size(); ++p)
            pcs.push_back(solve_pair(*models[p], models[p]->poisson_state(c.kappa), c.hierarchy_horizon, ct, c.abs_tol,
                                     c.rel_tol));
        CsvTable cmp(id, cols);
        const double vol = lr.config.geometry().volume();
        for (std::size_t i = 0; i < ct.size(); ++i) {
            const Estimate sim = sim_density(lr.runs, i, vol);
            auto rel = [&](double v) { return sim.value > 0.0 ? (v - sim.value) / sim.value : std::numeric_limits<double>::quiet_NaN(); };
            cmp.cell(ct[i]).cell(sim.value).cell(sim.se).cell(mfc.u[i]).cell(rel(mfc.u[i]));
            for (const auto& pc : pcs) cmp.cell(pc.states[i].u).cell(rel(pc.states[i].u));
            cmp.end_row();
        }
        record(m, dir, "comparison.csv", cmp.text());
    }
    m["hierarchy"] = {{"closure", std::string(to_string(c.closure))},
                      {"grid_step", c.grid_step},
                      {"r_max", c.r_max},
                      {"horizon", c.hierarchy_horizon},
                      {"mean_field_final_u", traj.u.back()}};
    save_manifest(dir, m);
    say(opts, "hierarchy: wrote " + dir.string());
    return dir;
}

int cmd_full(ExperimentConfig c, const CommandOptions& opts) {
    if (opts.seed) c.seed = *opts.seed;
    CommandOptions o = opts;
    o.seed.reset();
    const fs::path dir = cmd_simulate(c, o);
    const int status = cmd_observe(dir, std::nullopt, o);
    o.force = true;
    o.compare_dir = dir;
    cmd_hierarchy(c, o);
    return status;
}

}  // namespace srs
