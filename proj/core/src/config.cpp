#include "srs/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace srs {

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    if (trim(s).empty()) return out;
    std::size_t pos = 0;
    while (true) {
        const auto next = s.find(sep, pos);
        out.push_back(trim(s.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos)));
        if (next == std::string_view::npos) break;
        pos = next + 1;
    }
    return out;
}

std::vector<std::string_view> tokens(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
        std::size_t j = i;
        while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
        if (j > i) out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

double to_double(const std::string& key, std::string_view v) {
    double out = 0.0;
    const auto* end = v.data() + v.size();
    auto [p, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || p != end || v.empty()) throw ConfigError(key, "expected a number, got '" + std::string(v) + "'");
    return out;
}

std::uint64_t to_u64(const std::string& key, std::string_view v) {
    std::uint64_t out = 0;
    const auto* end = v.data() + v.size();
    auto [p, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || p != end || v.empty())
        throw ConfigError(key, "expected a nonnegative integer, got '" + std::string(v) + "'");
    return out;
}

std::vector<double> to_list(const std::string& key, std::string_view v) {
    std::vector<double> out;
    for (auto item : split(v, ',')) out.push_back(to_double(key, item));
    return out;
}

template <class F>
auto wrap_enum(const std::string& key, F&& f) {
    try {
        return f();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(key, e.what());
    }
}

std::string join(const std::vector<double>& xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) s += ", ";
        s += format_double(xs[i]);
    }
    return s;
}

ClosureChoice closure_choice_from_string(const std::string& key, std::string_view v) {
    if (v == "kirkwood") return ClosureChoice::kirkwood;
    if (v == "factorized") return ClosureChoice::factorized;
    if (v == "both") return ClosureChoice::both;
    throw ConfigError(key, "expected kirkwood, factorized or both, got '" + std::string(v) + "'");
}

std::vector<ThetaSpec> parse_thetas(std::string_view v, int dim) {
    const std::string key = "observables.theta";
    std::vector<ThetaSpec> out;
    for (auto entry : split(v, ';')) {
        if (entry.empty()) continue;
        const auto tk = tokens(entry);
        const std::size_t want = 2 + 2 * static_cast<std::size_t>(dim);
        if (tk.size() != want)
            throw ConfigError(key, "entry '" + std::string(entry) + "' needs a shape, " + std::to_string(2 * dim) +
                                       " box coordinates and a depth");
        ThetaSpec t;
        t.shape = wrap_enum(key, [&] { return theta_shape_from_string(tk[0]); });
        for (int i = 0; i < dim; ++i) {
            t.lo[i] = to_double(key, tk[1 + i]);
            t.hi[i] = to_double(key, tk[1 + dim + i]);
        }
        t.depth = to_double(key, tk.back());
        out.push_back(t);
    }
    return out;
}

void check(bool ok, const char* field, const std::string& message) {
    if (!ok) throw ConfigError(field, message);
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

std::string_view to_string(ClosureChoice c) noexcept {
    switch (c) {
        case ClosureChoice::kirkwood: return "kirkwood";
        case ClosureChoice::factorized: return "factorized";
        case ClosureChoice::both: return "both";
    }
    return "kirkwood";
}

void ExperimentConfig::validate() const {
    check(dim == 1 || dim == 2, "geometry.d", "must be 1 or 2");
    check(side > 0.0 && std::isfinite(side), "geometry.L", "must be positive");
    auto check_profile = [](const ProfileSpec& p, const char* range_key, const char* amp_key) {
        check(p.range > 0.0 && std::isfinite(p.range), range_key, "must be positive");
        check(p.amplitude >= 0.0 && std::isfinite(p.amplitude), amp_key, "must be nonnegative");
    };
    check_profile(competition, "kernel.a.range", "kernel.a.amplitude");
    if (fission_form == FissionForm::delta_decomposition)
        check_profile(dispersal, "kernel.beta.range", "kernel.beta.amplitude");
    else
        check_profile(offspring, "kernel.b.offspring.range", "kernel.b.offspring.amplitude");
    check(mortality >= 0.0 && std::isfinite(mortality), "mortality.m", "must be nonnegative");
    try {
        validate_geometry(geometry(), kernels());
    } catch (const GeometryError& e) {
        throw ConfigError("geometry.L", std::string(e.what()).substr(std::string("geometry.L: ").size()));
    }
    check(kappa > 0.0 && std::isfinite(kappa), "init.kappa", "must be positive");
    check(horizon >= 0.0 && std::isfinite(horizon), "schedule.horizon", "must be nonnegative");
    check(!snapshots.empty(), "schedule.snapshots", "needs at least one time");
    check(std::is_sorted(snapshots.begin(), snapshots.end()), "schedule.snapshots", "must be sorted");
    check(snapshots.front() >= 0.0 && snapshots.back() <= horizon, "schedule.snapshots", "must lie in [0, schedule.horizon]");
    check(replicas >= 1, "replicas", "must be at least 1");
    for (double w : windows) {
        check(w >= 0.0, "observables.windows", "volumes must be nonnegative");
        check(std::pow(w, 1.0 / dim) <= side, "observables.windows", "window does not fit in the torus");
    }
    if (!bins.empty()) {
        check(bins.size() >= 2, "observables.bins", "needs at least two edges");
        check(bins.front() >= 0.0, "observables.bins", "edges must be nonnegative");
        for (std::size_t i = 1; i < bins.size(); ++i)
            check(bins[i] > bins[i - 1], "observables.bins", "edges must be strictly increasing");
        check(bins.back() <= 0.5 * side, "observables.bins", "largest edge exceeds L/2");
    }
    for (const auto& t : thetas) {
        check(t.depth > -1.0 && t.depth <= 0.0, "observables.theta", "depth must lie in (-1, 0]");
        for (int i = 0; i < dim; ++i)
            check(t.lo[i] < t.hi[i] && t.lo[i] >= 0.0 && t.hi[i] <= side, "observables.theta",
                  "support box must be nonempty and inside [0, L]^d");
    }
    check(confidence > 0.0 && confidence < 1.0, "observables.confidence", "must lie in (0, 1)");
    check(mc_samples >= 1, "observables.mc_samples", "must be at least 1");
    check(min_replicas >= 1, "observables.min_replicas", "must be at least 1");
    check(grid_step > 0.0, "hierarchy.grid_step", "must be positive");
    check(r_max > 0.0, "hierarchy.r_max", "must be positive");
    check(hierarchy_horizon > 0.0, "hierarchy.horizon", "must be positive");
    check(output_step > 0.0, "hierarchy.output_step", "must be positive");
    check(abs_tol > 0.0, "hierarchy.abs_tol", "must be positive");
    check(rel_tol > 0.0, "hierarchy.rel_tol", "must be positive");
    check(!output_dir.empty(), "output.dir", "must not be empty");
}

KernelSet ExperimentConfig::kernels() const {
    KernelSet k{CompetitionKernel(RadialProfile(competition.shape, competition.range, competition.amplitude, dim)),
                MortalityField::constant(mortality),
                fission_form == FissionForm::delta_decomposition
                    ? FissionKernel::delta(DispersalKernel(RadialProfile(dispersal.shape, dispersal.range, dispersal.amplitude, dim)))
                    : FissionKernel::product(RadialProfile(offspring.shape, offspring.range, offspring.amplitude, dim))};
    return k;
}

std::vector<Closure> ExperimentConfig::closures() const {
    switch (closure) {
        case ClosureChoice::kirkwood: return {Closure::kirkwood};
        case ClosureChoice::factorized: return {Closure::factorized};
        case ClosureChoice::both: return {Closure::kirkwood, Closure::factorized};
    }
    return {};
}

Box ExperimentConfig::window(double volume) const {
    return Box::cube(0.0, std::pow(volume, 1.0 / dim), dim);
}

std::vector<ThetaFunction> ExperimentConfig::theta_functions() const {
    std::vector<ThetaFunction> out;
    for (const auto& t : thetas) out.push_back(t.build(dim));
    return out;
}

ExperimentConfig parse_config(std::string_view text) {
    ExperimentConfig c;
    std::string theta_raw;
    bool have_theta = false;

    using Setter = std::function<void(const std::string&, std::string_view)>;
    auto num = [](double& dst) -> Setter { return [&dst](const std::string& k, std::string_view v) { dst = to_double(k, v); }; };
    auto count = [](std::size_t& dst) -> Setter {
        return [&dst](const std::string& k, std::string_view v) { dst = static_cast<std::size_t>(to_u64(k, v)); };
    };
    auto list = [](std::vector<double>& dst) -> Setter {
        return [&dst](const std::string& k, std::string_view v) { dst = to_list(k, v); };
    };
    auto shape = [](Shape& dst) -> Setter {
        return [&dst](const std::string& k, std::string_view v) { dst = wrap_enum(k, [&] { return shape_from_string(v); }); };
    };

    const std::map<std::string, Setter, std::less<>> setters{
        {"kernel.a.shape", shape(c.competition.shape)},
        {"kernel.a.range", num(c.competition.range)},
        {"kernel.a.amplitude", num(c.competition.amplitude)},
        {"kernel.b.form",
         [&](const std::string& k, std::string_view v) {
             c.fission_form = wrap_enum(k, [&] { return fission_form_from_string(v); });
         }},
        {"kernel.beta.shape", shape(c.dispersal.shape)},
        {"kernel.beta.range", num(c.dispersal.range)},
        {"kernel.beta.amplitude", num(c.dispersal.amplitude)},
        {"kernel.b.offspring.shape", shape(c.offspring.shape)},
        {"kernel.b.offspring.range", num(c.offspring.range)},
        {"kernel.b.offspring.amplitude", num(c.offspring.amplitude)},
        {"mortality.m", num(c.mortality)},
        {"geometry.d",
         [&](const std::string& k, std::string_view v) { c.dim = static_cast<int>(to_u64(k, v)); }},
        {"geometry.L", num(c.side)},
        {"init.kappa", num(c.kappa)},
        {"schedule.horizon", num(c.horizon)},
        {"schedule.snapshots", list(c.snapshots)},
        {"replicas", count(c.replicas)},
        {"seed", [&](const std::string& k, std::string_view v) { c.seed = to_u64(k, v); }},
        {"observables.windows", list(c.windows)},
        {"observables.bins", list(c.bins)},
        {"observables.theta",
         [&](const std::string&, std::string_view v) {
             theta_raw = std::string(v);
             have_theta = true;
         }},
        {"observables.confidence", num(c.confidence)},
        {"observables.mc_samples", count(c.mc_samples)},
        {"observables.min_replicas", count(c.min_replicas)},
        {"observables.ruelle_budget", num(c.ruelle_budget)},
        {"hierarchy.closure",
         [&](const std::string& k, std::string_view v) { c.closure = closure_choice_from_string(k, v); }},
        {"hierarchy.grid_step", num(c.grid_step)},
        {"hierarchy.r_max", num(c.r_max)},
        {"hierarchy.horizon", num(c.hierarchy_horizon)},
        {"hierarchy.output_step", num(c.output_step)},
        {"hierarchy.abs_tol", num(c.abs_tol)},
        {"hierarchy.rel_tol", num(c.rel_tol)},
        {"output.dir", [&](const std::string&, std::string_view v) { c.output_dir = std::string(v); }},
    };

    std::set<std::string, std::less<>> seen;
    std::size_t line_no = 0;
    for (auto raw : split(text, '\n')) {
        ++line_no;
        auto line = raw.substr(0, raw.find('#'));
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("line " + std::to_string(line_no), "expected 'key = value'");
        const std::string key(trim(line.substr(0, eq)));
        const auto value = trim(line.substr(eq + 1));
        const auto it = setters.find(key);
        if (it == setters.end()) throw ConfigError(key, "unknown key");
        if (!seen.insert(key).second) throw ConfigError(key, "given more than once");
        it->second(key, value);
    }
    if (have_theta) {
        if (c.dim != 1 && c.dim != 2) throw ConfigError("geometry.d", "must be 1 or 2");
        c.thetas = parse_thetas(theta_raw, c.dim);
    }
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("--config", "cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& c) {
    std::ostringstream o;
    auto kv = [&](const char* k, const std::string& v) { o << k << " = " << v << '\n'; };
    kv("kernel.a.shape", std::string(to_string(c.competition.shape)));
    kv("kernel.a.range", format_double(c.competition.range));
    kv("kernel.a.amplitude", format_double(c.competition.amplitude));
    kv("kernel.b.form", std::string(to_string(c.fission_form)));
    kv("kernel.beta.shape", std::string(to_string(c.dispersal.shape)));
    kv("kernel.beta.range", format_double(c.dispersal.range));
    kv("kernel.beta.amplitude", format_double(c.dispersal.amplitude));
    kv("kernel.b.offspring.shape", std::string(to_string(c.offspring.shape)));
    kv("kernel.b.offspring.range", format_double(c.offspring.range));
    kv("kernel.b.offspring.amplitude", format_double(c.offspring.amplitude));
    kv("mortality.m", format_double(c.mortality));
    kv("geometry.d", std::to_string(c.dim));
    kv("geometry.L", format_double(c.side));
    kv("init.kappa", format_double(c.kappa));
    kv("schedule.horizon", format_double(c.horizon));
    kv("schedule.snapshots", join(c.snapshots));
    kv("replicas", std::to_string(c.replicas));
    kv("seed", std::to_string(c.seed));
    kv("observables.windows", join(c.windows));
    kv("observables.bins", join(c.bins));
    std::string th;
    for (std::size_t i = 0; i < c.thetas.size(); ++i) {
        const auto& t = c.thetas[i];
        if (i) th += "; ";
        th += std::string(to_string(t.shape));
        for (int k = 0; k < c.dim; ++k) th += " " + format_double(t.lo[k]);
        for (int k = 0; k < c.dim; ++k) th += " " + format_double(t.hi[k]);
        th += " " + format_double(t.depth);
    }
    kv("observables.theta", th);
    kv("observables.confidence", format_double(c.confidence));
    kv("observables.mc_samples", std::to_string(c.mc_samples));
    kv("observables.min_replicas", std::to_string(c.min_replicas));
    kv("observables.ruelle_budget", format_double(c.ruelle_budget));
    kv("hierarchy.closure", std::string(to_string(c.closure)));
    kv("hierarchy.grid_step", format_double(c.grid_step));
    kv("hierarchy.r_max", format_double(c.r_max));
    kv("hierarchy.horizon", format_double(c.hierarchy_horizon));
    kv("hierarchy.output_step", format_double(c.output_step));
    kv("hierarchy.abs_tol", format_double(c.abs_tol));
    kv("hierarchy.rel_tol", format_double(c.rel_tol));
    kv("output.dir", c.output_dir);
    return o.str();
}

}  // namespace srs
