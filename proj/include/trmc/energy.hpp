#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trmc/model.hpp"

namespace trmc {

enum class Normalization {
    PerSite,       ///< divide each energy by the site count (intensive energy)
    ZScore,        ///< subtract sample mean, divide by sample standard deviation
    PerSiteZScore  ///< per-site first, then z-score
};

const char* to_string(Normalization mode);
Normalization normalization_from_string(const std::string& name);

/// Interaction energies of independently drawn random configurations.
struct EnergySample {
    int n_sites = 0;
    double density = 0.0;
    std::vector<double> energies;
};

struct NormalizedDistribution {
    Normalization mode = Normalization::PerSiteZScore;
    std::vector<double> values;
    std::vector<double> bin_edges;        // nbins + 1 ascending edges
    std::vector<std::int64_t> bin_counts; // nbins counts, sums to values.size()
};

struct DivergenceReport {
    double ks = 0.0;  ///< two-sample Kolmogorov-Smirnov statistic, in [0, 1]
    double l1 = 0.0;  ///< L1 distance of per-bin probability masses, in [0, 2]
};

/**
 * Draws n_samples configurations via random_initial (sub-stream k of `seed`
 * per configuration, so the result is deterministic and order-independent
 * under parallel evaluation) and records each total interaction energy.
 */
EnergySample sample_energies(int n_sites, double density, int n_samples,
                             const ModelParams& params, std::uint64_t seed,
                             int threads = 1);

/**
 * Normalizes the sample and bins it with the Freedman-Diaconis rule.
 * Z-scoring uses the unbiased (n-1) standard deviation and throws
 * std::domain_error when the sample variance is zero.
 */
NormalizedDistribution normalize(const EnergySample& sample, Normalization mode);

/// Replaces the histogram with one over the given shared edges. Values
/// outside the edge range are clamped into the boundary bins, so the total
/// count is conserved.
void rebin(NormalizedDistribution& dist, const std::vector<double>& edges);

/// Freedman-Diaconis bin edges over pooled values (fallback to sqrt-count
/// binning when the IQR degenerates).
std::vector<double> freedman_diaconis_edges(std::vector<double> values);

/// Two-sample KS statistic: sup over x of the empirical CDF gap.
double ks_statistic(std::vector<double> a, std::vector<double> b);

/**
 * KS on the raw normalized values plus an L1 distance of per-bin probability
 * masses over shared Freedman-Diaconis bins of the pooled values. Throws
 * std::invalid_argument when the normalization modes differ.
 */
DivergenceReport compare_distributions(const NormalizedDistribution& a,
                                       const NormalizedDistribution& b);

/// CSV with one line per bin: bin_left,bin_right,count,density.
void export_histogram(const NormalizedDistribution& dist, const std::string& path);

}  // namespace trmc
