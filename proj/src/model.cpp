#include "trmc/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace trmc {

void ModelParams::validate() const {
    if (!std::isfinite(k0) || !std::isfinite(b))
        throw std::invalid_argument("k0 and b must be finite");
    if (look_ahead < 1)
        throw std::invalid_argument("look_ahead must be >= 1");
    if (!(beta >= 0.0) || !std::isfinite(beta))
        throw std::invalid_argument("beta must be finite and >= 0");
    if (!(a0 > 0.0) || !(a0 <= 1.0))
        throw std::invalid_argument("a0 must be in (0, 1]");
    if (!(density >= 0.0) || !(density <= 1.0))
        throw std::invalid_argument("density must be in [0, 1]");
}

void ModelParams::validate_for(int n_sites) const {
    validate();
    if (look_ahead >= n_sites)
        throw std::invalid_argument("look_ahead must be < number of sites (got " +
                                    std::to_string(look_ahead) + " for N=" +
                                    std::to_string(n_sites) + ")");
}

std::vector<int> neighborhood(const RingConfiguration& config, int i, int look_ahead) {
    const int n = config.size();
    if (i < 0 || i >= n)
        throw std::domain_error("site index out of range");
    if (look_ahead < 1 || look_ahead >= n)
        throw std::domain_error("look_ahead must be in [1, N)");
    std::vector<int> indices;
    indices.reserve(static_cast<std::size_t>(look_ahead - 1));
    for (int d = 1; d < look_ahead; ++d) indices.push_back(config.wrap(i + d));
    return indices;
}

double interaction_coefficient(int distance, double k0) {
    if (distance < 1)
        throw std::domain_error("interaction distance must be >= 1");
    const double d = static_cast<double>(distance);
    return k0 / (d * d);
}

double site_hamiltonian(const RingConfiguration& config, int i, const ModelParams& params) {
    const int n = config.size();
    if (i < 0 || i >= n)
        throw std::domain_error("site index out of range");
    params.validate_for(n);
    if (!config.occupied(i)) return 0.0;
    double interaction = 0.0;
    for (int d = 1; d < params.look_ahead; ++d) {
        if (config.occupied(i + d)) interaction += interaction_coefficient(d, params.k0);
    }
    return -params.b - interaction;
}

double exchange_delta(const RingConfiguration& config, int i, const ModelParams& params) {
    const int n = config.size();
    if (i < 0 || i >= n)
        throw std::domain_error("site index out of range");
    params.validate_for(n);
    if (!config.occupied(i) || config.occupied(i + 1))
        throw std::invalid_argument("exchange requires (S_i, S_{i+1}) = (1, 0)");

    // Affected sites: i and i+1 themselves plus everything that sees either
    // of them ahead, i.e. the window [i - (d_l - 1), i + 1]. Its length
    // d_l + 1 <= N, so the indices are distinct on the ring.
    const int lo = i - (params.look_ahead - 1);
    const int hi = i + 1;

    double before = 0.0;
    for (int k = lo; k <= hi; ++k)
        before += site_hamiltonian(config, config.wrap(k), params);

    RingConfiguration moved = config;
    moved.set(i, false);
    moved.set(i + 1, true);

    double after = 0.0;
    for (int k = lo; k <= hi; ++k)
        after += site_hamiltonian(moved, moved.wrap(k), params);

    return after - before;
}

double total_interaction_energy(const RingConfiguration& config, const ModelParams& params) {
    params.validate_for(config.size());
    double sum = 0.0;
    for (int i = 0; i < config.size(); ++i) {
        if (!config.occupied(i)) continue;
        for (int d = 1; d < params.look_ahead; ++d) {
            if (config.occupied(i + d)) sum += params.k0 / (static_cast<double>(d) * d);
        }
    }
    return -sum;
}

}  // namespace trmc
