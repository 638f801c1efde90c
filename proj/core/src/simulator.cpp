#include "srs/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

namespace srs {

void validate_geometry(const TorusGeometry& geom, const KernelSet& kernels) {
    if (kernels.competition.dim() != geom.dim() || kernels.fission.dim() != geom.dim()) {
        throw GeometryError("geometry.d: kernel dimension does not match the torus dimension");
    }
    const double reach = kernels.interaction_range();
    if (geom.side() < 4.0 * reach * (1.0 - 1e-12)) {
        std::ostringstream msg;
        msg << "geometry.L: side " << geom.side() << " is below 4 * max(r, R) = " << 4.0 * reach;
        throw GeometryError(msg.str());
    }
}

SimState::SimState(KernelSet kernels, TorusGeometry geom, std::uint64_t seed)
    : kernels_(std::move(kernels)),
      config_(geom, kernels_.interaction_range()),
      fission_rate_(fission_total_rate(kernels_.fission)),
      competition_range_(kernels_.competition.range()),
      has_competition_(!kernels_.competition.is_zero()),
      cell_rates_(config_.cell_count(), 0.0),
      seed_(seed),
      rng_(seed) {
    validate_geometry(geom, kernels_);
}

double SimState::death_rate(std::size_t id) const {
    if (id >= rates_.size()) throw std::out_of_range("death_rate: unknown point id");
    return rates_[id];
}

double SimState::compute_death_rate(std::size_t id) const {
    if (id >= config_.size()) throw std::out_of_range("compute_death_rate: unknown point id");
    const Vec& x = config_[id];
    double rate = kernels_.mortality(x);
    if (!has_competition_) return rate;
    const auto& a = kernels_.competition;
    config_.for_each_within(x, competition_range_, [&](std::size_t j, const Vec& d, double) {
        if (j != id) rate += a(d);
    });
    return rate;
}

void SimState::add_rate_to_cell(std::size_t cell, double delta) noexcept {
    cell_rates_[cell] += delta;
    total_death_ += delta;
}

std::size_t SimState::add_point(const Vec& p) {
    const std::size_t id = config_.insert(p);
    const Vec& x = config_[id];
    double rate = kernels_.mortality(x);
    if (has_competition_) {
        const auto& a = kernels_.competition;
        config_.for_each_within(x, competition_range_, [&](std::size_t j, const Vec& d, double) {
            if (j == id) return;
            const double v = a(d);
            if (v == 0.0) return;
            rates_[j] += v;
            add_rate_to_cell(config_.cell_of(j), v);
            rate += v;
        });
    }
    rates_.push_back(rate);
    add_rate_to_cell(config_.cell_of(id), rate);
    return id;
}

void SimState::remove_point(std::size_t id) {
    if (id >= config_.size()) throw std::out_of_range("remove_point: unknown point id");
    const Vec x = config_[id];
    add_rate_to_cell(config_.cell_of(id), -rates_[id]);
    config_.erase(id);
    rates_[id] = rates_.back();
    rates_.pop_back();
    if (!has_competition_) return;
    const auto& a = kernels_.competition;
    const double floor_rate = kernels_.mortality.m_star();
    config_.for_each_within(x, competition_range_, [&](std::size_t j, const Vec& d, double) {
        const double v = a(d);
        if (v == 0.0) return;
        const double before = rates_[j];
        const double after = std::max(before - v, floor_rate);
        rates_[j] = after;
        add_rate_to_cell(config_.cell_of(j), after - before);
    });
}

double SimState::draw_waiting_time() {
    const double total = total_rate();
    if (!(total > 0.0) || size() == 0) return std::numeric_limits<double>::infinity();
    return rng_.exponential(total);
}

std::size_t SimState::select_death_victim() {
    const double target = rng_.uniform() * total_death_;
    double acc = 0.0;
    std::size_t last_nonempty = 0;
    bool found_cell = false;
    for (std::size_t c = 0; c < cell_rates_.size(); ++c) {
        if (config_.cell_members(c).empty()) continue;
        last_nonempty = c;
        if (acc + cell_rates_[c] > target) {
            found_cell = true;
            break;
        }
        acc += cell_rates_[c];
    }
    const auto members = config_.cell_members(last_nonempty);
    if (!found_cell) return members.back();
    double inner = target - acc;
    for (std::uint32_t id : members) {
        inner -= rates_[id];
        if (inner < 0.0) return id;
    }
    return members.back();
}

EventRecord SimState::apply_event(double t) {
    time_ = t;
    ++events_;
    const double total = total_rate();
    EventRecord rec{};
    rec.time = t;
    if (rng_.uniform() * total < total_death_) {
        const std::size_t victim = select_death_victim();
        rec.kind = EventKind::death;
        rec.subject = config_[victim];
        remove_point(victim);
        ++deaths_;
    } else {
        const std::size_t parent = static_cast<std::size_t>(rng_.below(size()));
        rec.kind = EventKind::fission;
        rec.subject = config_[parent];
        auto [y1, y2] = sample_offspring(kernels_.fission, rec.subject, rng_);
        remove_point(parent);
        const std::size_t i1 = add_point(y1);
        const Vec w1 = config_[i1];
        const std::size_t i2 = add_point(y2);
        rec.offspring = std::make_pair(w1, config_[i2]);
        ++fissions_;
    }
    if (events_ % kCacheRebuildInterval == 0) rebuild_caches();
    return rec;
}

std::optional<EventRecord> SimState::step() {
    const double dt = draw_waiting_time();
    if (!std::isfinite(dt)) return std::nullopt;
    return apply_event(time_ + dt);
}

void SimState::rebuild_caches() {
    std::fill(cell_rates_.begin(), cell_rates_.end(), 0.0);
    total_death_ = 0.0;
    for (std::size_t id = 0; id < config_.size(); ++id) {
        rates_[id] = compute_death_rate(id);
        cell_rates_[config_.cell_of(id)] += rates_[id];
    }
    for (double c : cell_rates_) total_death_ += c;
}

double SimState::cache_drift() const {
    auto rel = [](double cached, double fresh) {
        const double scale = std::max(std::fabs(fresh), 1e-300);
        return std::fabs(cached - fresh) / scale;
    };
    double worst = 0.0;
    double fresh_total = 0.0;
    std::vector<double> fresh_cells(cell_rates_.size(), 0.0);
    for (std::size_t id = 0; id < config_.size(); ++id) {
        const double f = compute_death_rate(id);
        fresh_total += f;
        fresh_cells[config_.cell_of(id)] += f;
        if (f > 0.0 || rates_[id] != 0.0) worst = std::max(worst, rel(rates_[id], f));
    }
    if (fresh_total > 0.0 || total_death_ != 0.0) worst = std::max(worst, rel(total_death_, fresh_total));
    for (std::size_t c = 0; c < fresh_cells.size(); ++c) {
        if (fresh_cells[c] == 0.0) {
            // empty cell: cached sum should be round-off only
            worst = std::max(worst, std::fabs(cell_rates_[c]) / std::max(fresh_total, 1e-300));
        } else {
            worst = std::max(worst, rel(cell_rates_[c], fresh_cells[c]));
        }
    }
    return worst;
}

SimState init_poisson(double kappa, const KernelSet& kernels, const TorusGeometry& geom, std::uint64_t seed) {
    if (!(kappa > 0.0)) throw std::invalid_argument("init.kappa must be positive");
    SimState state(kernels, geom, seed);
    Rng& rng = state.rng();
    std::poisson_distribution<long> count(kappa * geom.volume());
    const long n = count(rng);
    for (long i = 0; i < n; ++i) {
        Vec p{0.0, 0.0};
        for (int k = 0; k < geom.dim(); ++k) p[k] = rng.uniform() * geom.side();
        state.add_point(p);
    }
    return state;
}

RunResult run(SimState& state, double horizon, std::span<const double> snapshot_times) {
    if (!std::is_sorted(snapshot_times.begin(), snapshot_times.end()))
        throw std::invalid_argument("run: snapshot times must be sorted");
    if (!snapshot_times.empty() && snapshot_times.back() > horizon)
        throw std::invalid_argument("run: snapshot times must not exceed the horizon");
    RunResult res;
    res.seed = state.seed();
    res.snapshot_times.assign(snapshot_times.begin(), snapshot_times.end());
    res.snapshots.reserve(snapshot_times.size());
    std::size_t next = 0;
    auto record_until = [&](double t) {
        while (next < snapshot_times.size() && snapshot_times[next] < t) {
            res.snapshots.push_back(state.config());
            ++next;
        }
    };
    while (true) {
        const double dt = state.draw_waiting_time();
        if (!std::isfinite(dt)) {
            // Absorbing: extinct, or no event has positive rate.
            if (state.size() == 0) {
                res.extinct = true;
                res.extinction_time = state.time();
            }
            state.set_time(std::max(state.time(), horizon));
            break;
        }
        const double t_next = state.time() + dt;
        record_until(t_next);
        if (t_next > horizon) {
            state.set_time(horizon);
            break;
        }
        state.apply_event(t_next);
    }
    record_until(std::numeric_limits<double>::infinity());
    res.final_time = state.time();
    res.events = state.event_count();
    res.deaths = state.death_count();
    res.fissions = state.fission_count();
    return res;
}

std::uint64_t replica_seed(std::uint64_t seed, std::uint64_t replica) noexcept {
    std::uint64_t sm = seed ^ 0x6a09e667f3bcc909ULL;
    const std::uint64_t base = splitmix64(sm);
    std::uint64_t mix = base ^ (replica * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL);
    return splitmix64(mix);
}

std::vector<RunResult> run_replicas(const ReplicaSpec& spec, std::size_t replicas, std::uint64_t seed,
                                    unsigned jobs) {
    std::vector<std::optional<RunResult>> slots(replicas);
    std::atomic<std::size_t> cursor{0};
    std::vector<std::exception_ptr> errors(replicas);
    auto worker = [&] {
        while (true) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= replicas) return;
            try {
                SimState st = init_poisson(spec.kappa, spec.kernels, spec.geometry, replica_seed(seed, i));
                slots[i] = run(st, spec.horizon, spec.snapshot_times);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const unsigned n = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(replicas, 1))));
    if (n == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n);
        for (unsigned k = 0; k < n; ++k) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    std::vector<RunResult> out;
    out.reserve(replicas);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

}  // namespace srs
