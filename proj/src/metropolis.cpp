#include "trmc/metropolis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "trmc/parallel.hpp"

namespace trmc {

const char* to_string(DeltaMode mode) {
    return mode == DeltaMode::ExchangeDelta ? "exchange-delta" : "literal-site-h";
}

DeltaMode delta_mode_from_string(const std::string& name) {
    if (name == "exchange-delta") return DeltaMode::ExchangeDelta;
    if (name == "literal-site-h") return DeltaMode::LiteralSiteH;
    throw std::invalid_argument("unknown delta mode: " + name);
}

void SimulationConfig::validate() const {
    if (n_sites < 2) throw std::invalid_argument("n_sites must be >= 2");
    if (n_steps < 1) throw std::invalid_argument("n_steps must be >= 1");
    model.validate_for(n_sites);
}

TimeSpaceDiagram::TimeSpaceDiagram(int n_sites, int n_steps)
    : n_sites_(n_sites), n_steps_(n_steps) {
    if (n_sites < 2) throw std::invalid_argument("n_sites must be >= 2");
    if (n_steps < 0) throw std::invalid_argument("n_steps must be >= 0");
    cells_.assign(static_cast<std::size_t>(n_steps + 1) * n_sites, 0);
}

void TimeSpaceDiagram::set_row(int t, const RingConfiguration& config) {
    if (config.size() != n_sites_)
        throw std::invalid_argument("row size mismatch");
    for (int i = 0; i < n_sites_; ++i) cells_[index(t, i)] = config.occupied(i) ? 1 : 0;
}

RingConfiguration TimeSpaceDiagram::row(int t) const {
    RingConfiguration config(n_sites_);
    for (int i = 0; i < n_sites_; ++i) config.set(i, cells_[index(t, i)] != 0);
    return config;
}

int TimeSpaceDiagram::row_vehicle_count(int t) const {
    int count = 0;
    for (int i = 0; i < n_sites_; ++i) count += cells_[index(t, i)];
    return count;
}

RingConfiguration random_initial(int n_sites, double density, Xoshiro256StarStar& rng) {
    if (!(density >= 0.0) || !(density <= 1.0))
        throw std::invalid_argument("density must be in [0, 1]");
    const int n_vehicles = static_cast<int>(std::llround(density * n_sites));

    // Partial Fisher-Yates: the first n_vehicles entries end up a uniform
    // sample without replacement.
    std::vector<int> idx(static_cast<std::size_t>(n_sites));
    std::iota(idx.begin(), idx.end(), 0);
    for (int k = 0; k < n_vehicles; ++k) {
        const auto span = static_cast<std::uint64_t>(n_sites - k);
        const int pick = k + static_cast<int>(rng.below(span));
        std::swap(idx[k], idx[pick]);
    }

    RingConfiguration config(n_sites);
    for (int k = 0; k < n_vehicles; ++k) config.set(idx[k], true);
    return config;
}

double acceptance_probability(double delta_h, const ModelParams& params) {
    return std::min(params.a0 * std::exp(-params.beta * delta_h), 1.0);
}

RingConfiguration sweep(RingConfiguration config, const ModelParams& params,
                        DeltaMode mode, Xoshiro256StarStar& rng, SweepTrace* trace) {
    const int n = config.size();
    params.validate_for(n);
    for (int i = 0; i < n; ++i) {
        if (!config.occupied(i) || config.occupied(i + 1)) continue;
        const double u = rng.uniform01();
        const double energy = (mode == DeltaMode::ExchangeDelta)
                                  ? exchange_delta(config, i, params)
                                  : site_hamiltonian(config, i, params);
        if (u < acceptance_probability(energy, params)) {
            config.set(i, false);
            config.set(i + 1, true);
            if (trace) trace->moves.push_back(i);
        }
    }
    return config;
}

TimeSpaceDiagram simulate(const SimulationConfig& cfg) {
    cfg.validate();
    Xoshiro256StarStar rng(cfg.seed);
    TimeSpaceDiagram diagram(cfg.n_sites, cfg.n_steps);

    RingConfiguration state = random_initial(cfg.n_sites, cfg.model.density, rng);
    diagram.set_row(0, state);
    for (int t = 1; t <= cfg.n_steps; ++t) {
        state = sweep(std::move(state), cfg.model, cfg.delta_mode, rng);
        diagram.set_row(t, state);
    }
    return diagram;
}

std::vector<TimeSpaceDiagram> run_ensemble(const SimulationConfig& cfg, int n_runs,
                                           std::uint64_t base_seed, int threads) {
    if (n_runs < 1) throw std::invalid_argument("n_runs must be >= 1");
    cfg.validate();

    std::vector<TimeSpaceDiagram> results(static_cast<std::size_t>(n_runs),
                                          TimeSpaceDiagram(cfg.n_sites, cfg.n_steps));
    parallel_for_index(n_runs, threads, [&](int k) {
        SimulationConfig run_cfg = cfg;
        run_cfg.seed = derive_seed(base_seed, static_cast<std::uint64_t>(k));
        results[static_cast<std::size_t>(k)] = simulate(run_cfg);
    });
    return results;
}

}  // namespace trmc
