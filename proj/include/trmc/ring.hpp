#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace trmc {

/**
 * Occupancy state of a single-lane closed ring road.
 *
 * Each of the N sites holds a binary state: 1 = occupied by a vehicle,
 * 0 = empty. All index arithmetic is periodic, so any integer (including
 * negative values) addresses a valid site.
 */
class RingConfiguration {
public:
    explicit RingConfiguration(int n_sites, bool fill = false)
        : sites_(check_size(n_sites), fill ? std::uint8_t{1} : std::uint8_t{0}) {}

    static RingConfiguration from_bits(const std::vector<std::uint8_t>& bits) {
        RingConfiguration config(static_cast<int>(bits.size()));
        for (int i = 0; i < config.size(); ++i) config.set(i, bits[i] != 0);
        return config;
    }

    int size() const { return static_cast<int>(sites_.size()); }

    /// Periodic index: wraps any integer into [0, N).
    int wrap(int i) const {
        const int n = size();
        const int m = i % n;
        return m < 0 ? m + n : m;
    }

    bool occupied(int i) const { return sites_[wrap(i)] != 0; }

    void set(int i, bool occupied) { sites_[wrap(i)] = occupied ? 1 : 0; }

    int vehicle_count() const {
        int count = 0;
        for (const auto s : sites_) count += s;
        return count;
    }

    const std::vector<std::uint8_t>& bits() const { return sites_; }

    bool operator==(const RingConfiguration& other) const = default;

private:
    static int check_size(int n_sites) {
        if (n_sites < 2) throw std::invalid_argument("ring needs at least 2 sites");
        return n_sites;
    }

    std::vector<std::uint8_t> sites_;
};

}  // namespace trmc
