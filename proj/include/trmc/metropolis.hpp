#pragma once

#include <cstdint>
#include <vector>

#include "trmc/model.hpp"
#include "trmc/ring.hpp"
#include "trmc/rng.hpp"

namespace trmc {

/// Which energy enters the acceptance probability.
///
/// ExchangeDelta: dH = H_total(after) - H_total(before), standard Metropolis.
/// LiteralSiteH:  the site Hamiltonian H(S_i) of the moving vehicle in the
///                current state; kept for replicating the literal update rule.
enum class DeltaMode {
    ExchangeDelta,
    LiteralSiteH,
};

const char* to_string(DeltaMode mode);
DeltaMode delta_mode_from_string(const std::string& name);

struct SimulationConfig {
    ModelParams model;
    int n_sites = 50;
    int n_steps = 30;
    std::uint64_t seed = 0;
    DeltaMode delta_mode = DeltaMode::ExchangeDelta;

    void validate() const;
};

/**
 * Full trajectory of one simulation: row t is the ring state at time t,
 * with row 0 the initial condition, so there are n_steps + 1 rows of
 * n_sites binary cells each.
 */
class TimeSpaceDiagram {
public:
    TimeSpaceDiagram(int n_sites, int n_steps);

    int n_sites() const { return n_sites_; }
    int n_steps() const { return n_steps_; }
    int n_rows() const { return n_steps_ + 1; }

    std::uint8_t at(int t, int i) const { return cells_[index(t, i)]; }
    void set(int t, int i, bool occupied) { cells_[index(t, i)] = occupied ? 1 : 0; }

    void set_row(int t, const RingConfiguration& config);
    RingConfiguration row(int t) const;
    int row_vehicle_count(int t) const;

    const std::vector<std::uint8_t>& cells() const { return cells_; }

    bool operator==(const TimeSpaceDiagram& other) const = default;

private:
    std::size_t index(int t, int i) const {
        return static_cast<std::size_t>(t) * n_sites_ + i;
    }

    int n_sites_;
    int n_steps_;
    std::vector<std::uint8_t> cells_;  // (n_steps+1) x n_sites, row-major
};

/// Optional per-sweep instrumentation: records the origin site of every
/// accepted exchange, in scan order.
struct SweepTrace {
    std::vector<int> moves;
};

/**
 * Initial condition: exactly round(density * N) occupied sites, the occupied
 * set uniform over all subsets of that size (partial Fisher-Yates draw).
 */
RingConfiguration random_initial(int n_sites, double density, Xoshiro256StarStar& rng);

/// min(a0 * exp(-beta * delta_h), 1).
double acceptance_probability(double delta_h, const ModelParams& params);

/**
 * One Monte Carlo sweep: scan sites i = 0..N-1 in order; wherever
 * (S_i, S_{i+1}) = (1, 0), draw u ~ U(0,1) and apply the exchange iff
 * u < acceptance_probability of the mode's energy term. Updates happen
 * in place as the scan proceeds, so a vehicle can be picked up again at
 * its new position later in the same sweep. Vehicle count is conserved.
 */
RingConfiguration sweep(RingConfiguration config, const ModelParams& params,
                        DeltaMode mode, Xoshiro256StarStar& rng,
                        SweepTrace* trace = nullptr);

/// Runs cfg.n_steps sweeps from a random initial condition; bit-for-bit
/// reproducible for a fixed (seed, delta_mode, parameters).
TimeSpaceDiagram simulate(const SimulationConfig& cfg);

/**
 * n_runs independent simulations; run k uses seed derive_seed(base_seed, k)
 * (the k-th output of a SplitMix64 stream seeded with base_seed). Runs may
 * execute on up to `threads` workers; results are ordered by run index and
 * independent of scheduling. threads == 0 picks the hardware concurrency.
 */
std::vector<TimeSpaceDiagram> run_ensemble(const SimulationConfig& cfg, int n_runs,
                                           std::uint64_t base_seed, int threads = 1);

}  // namespace trmc
