#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trmc/metropolis.hpp"

namespace trmc {

/**
 * One supervised pair: a window of W consecutive ring states (rows 0..W-1 of
 * a trajectory, flattened row-major to W*N cells) and the state at step W as
 * the target. Conservation carries over: every input row and the target hold
 * the same number of vehicles.
 */
struct Sample {
    std::vector<std::uint8_t> input;   // W x N, row-major
    std::vector<std::uint8_t> target;  // N

    bool operator==(const Sample&) const = default;
};

/// Everything needed to regenerate a dataset bit-exactly.
struct Provenance {
    ModelParams params;
    DeltaMode delta_mode = DeltaMode::ExchangeDelta;
    std::uint64_t base_seed = 0;
    std::string generator;

    bool operator==(const Provenance&) const = default;
};

struct Dataset {
    int n_sites = 0;
    int window = 0;
    Provenance provenance;
    std::vector<Sample> samples;

    bool operator==(const Dataset&) const = default;
};

struct SplitDataset {
    Dataset train;
    Dataset test;
    double ratio = 0.2;
};

/**
 * Runs n_runs independent simulations of window steps each (density taken
 * from params) and turns every trajectory into one sample: rows 0..W-1 are
 * the input, row W the target. Deterministic per base_seed.
 */
Dataset generate_dataset(int n_runs, int n_sites, int window, const ModelParams& params,
                         std::uint64_t base_seed,
                         DeltaMode mode = DeltaMode::ExchangeDelta, int threads = 1);

/**
 * Uniform random partition by sample index: round(ratio * count) samples go
 * to test, the rest to train; each side keeps the original sample order.
 */
SplitDataset split(const Dataset& dataset, double ratio, std::uint64_t seed);

/// Binary container (magic "TRMC0001", JSON header, bit-packed rows).
/// See docs/format.md for the byte layout.
void save_dataset(const Dataset& dataset, const std::string& path);
Dataset load_dataset(const std::string& path);

/// Plain-text dump for inspection: sample,kind,row,cells...
void export_dataset_csv(const Dataset& dataset, const std::string& path);

}  // namespace trmc
