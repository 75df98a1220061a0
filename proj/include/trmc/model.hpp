#pragma once

#include <vector>

#include "trmc/ring.hpp"

namespace trmc {

/**
 * Physical constants of the Ising-inspired ring-road model.
 *
 * A site's energy is
 *
 *     H(S_i) = -B*S_i - sum_{j in N(i)} K_ij * S_i * S_j,
 *
 * where N(i) are the sites strictly ahead of i within the look-ahead
 * distance and K_ij = K0 / d(i,j)^2 decays with the forward site distance.
 * Vehicles advance by exchanging state with the empty site directly ahead;
 * a proposed exchange is accepted with probability min(a0 * exp(-beta*dH), 1).
 *
 * "Ahead" is fixed project-wide as increasing site index modulo N.
 */
struct ModelParams {
    double k0 = 1.0;     ///< base interaction strength K0
    double b = 1.0;      ///< external field coefficient B
    int look_ahead = 5;  ///< interaction range d_l in sites (5 sites = 25 m)
    double beta = 1.0;   ///< inverse-temperature-like constant
    double a0 = 1.0;     ///< pre-exponential factor, in (0, 1]
    double density = 0.5;

    /// Parameter-only checks (throws std::invalid_argument).
    void validate() const;

    /// Checks that also depend on the lattice size (look_ahead < n_sites).
    void validate_for(int n_sites) const;

    bool operator==(const ModelParams&) const = default;
};

/**
 * Forward-looking neighborhood of site i: the indices i+1, ..., i+d_l-1
 * (modulo N), i.e. every site strictly ahead of i at ring distance < d_l.
 * The result has exactly d_l - 1 entries.
 *
 * Throws std::domain_error if i is out of [0, N) or d_l is not in [1, N).
 */
std::vector<int> neighborhood(const RingConfiguration& config, int i, int look_ahead);

/// K_ij = K0 / d^2 for integer forward distance d >= 1 (std::domain_error otherwise).
double interaction_coefficient(int distance, double k0);

/**
 * Site Hamiltonian H(S_i) = -B*S_i - sum over the forward neighborhood of
 * K_ij * S_i * S_j. Exactly 0 when the site is empty.
 */
double site_hamiltonian(const RingConfiguration& config, int i, const ModelParams& params);

/**
 * Energy difference of moving the vehicle at site i one site forward:
 * dH = H_total(after) - H_total(before), with H_total the sum of the site
 * Hamiltonian over all sites.
 *
 * Computed locally: only sites whose neighborhoods contain i or i+1 change,
 * so the sums run over the window [i - d_l + 1, i + 1]. Agrees with the
 * full-lattice difference to floating-point roundoff.
 *
 * Precondition: (S_i, S_{i+1}) = (1, 0); throws std::invalid_argument otherwise.
 */
double exchange_delta(const RingConfiguration& config, int i, const ModelParams& params);

/**
 * Interaction part of the total energy: -sum_i sum_{j in N(i)} K_ij*S_i*S_j.
 * Each ordered (i, j ahead of i) pair counts once; the external-field term
 * is excluded (it only shifts distributions by a constant per vehicle).
 */
double total_interaction_energy(const RingConfiguration& config, const ModelParams& params);

}  // namespace trmc
