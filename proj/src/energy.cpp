#include "trmc/energy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "trmc/io_error.hpp"
#include "trmc/metropolis.hpp"
#include "trmc/parallel.hpp"
#include "trmc/rng.hpp"

namespace trmc {

const char* to_string(Normalization mode) {
    switch (mode) {
        case Normalization::PerSite: return "per-site";
        case Normalization::ZScore: return "zscore";
        case Normalization::PerSiteZScore: return "per-site-zscore";
    }
    return "?";
}

Normalization normalization_from_string(const std::string& name) {
    if (name == "per-site") return Normalization::PerSite;
    if (name == "zscore") return Normalization::ZScore;
    if (name == "per-site-zscore") return Normalization::PerSiteZScore;
    throw std::invalid_argument("unknown normalization: " + name);
}

EnergySample sample_energies(int n_sites, double density, int n_samples,
                             const ModelParams& params, std::uint64_t seed,
                             int threads) {
    if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
    params.validate_for(n_sites);

    EnergySample sample;
    sample.n_sites = n_sites;
    sample.density = density;
    sample.energies.assign(static_cast<std::size_t>(n_samples), 0.0);
    parallel_for_index(n_samples, threads, [&](int k) {
        Xoshiro256StarStar rng(derive_seed(seed, static_cast<std::uint64_t>(k)));
        const RingConfiguration config = random_initial(n_sites, density, rng);
        sample.energies[static_cast<std::size_t>(k)] =
            total_interaction_energy(config, params);
    });
    return sample;
}

namespace {

double mean_of(const std::vector<double>& v) {
    double sum = 0.0;
    for (const double x : v) sum += x;
    return sum / static_cast<double>(v.size());
}

// Unbiased (n-1) standard deviation.
double stddev_of(const std::vector<double>& v, double mean) {
    if (v.size() < 2) return 0.0;
    double ss = 0.0;
    for (const double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

// Linear-interpolation quantile on a sorted vector.
double quantile_sorted(const std::vector<double>& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = static_cast<std::size_t>(std::ceil(pos));
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::vector<std::int64_t> bin_values(const std::vector<double>& values,
                                     const std::vector<double>& edges) {
    const auto nbins = edges.size() - 1;
    std::vector<std::int64_t> counts(nbins, 0);
    for (const double v : values) {
        // upper_bound - 1 puts v in [edge_i, edge_{i+1}); out-of-range values
        // land in the boundary bins so the total count is conserved.
        auto it = std::upper_bound(edges.begin(), edges.end(), v);
        std::ptrdiff_t bin = std::distance(edges.begin(), it) - 1;
        bin = std::clamp<std::ptrdiff_t>(bin, 0, static_cast<std::ptrdiff_t>(nbins) - 1);
        ++counts[static_cast<std::size_t>(bin)];
    }
    return counts;
}

}  // namespace

std::vector<double> freedman_diaconis_edges(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("cannot bin an empty sample");
    std::sort(values.begin(), values.end());
    const double lo = values.front();
    const double hi = values.back();
    if (lo == hi) return {lo - 0.5, hi + 0.5};

    const double iqr = quantile_sorted(values, 0.75) - quantile_sorted(values, 0.25);
    const double n = static_cast<double>(values.size());
    double width = 2.0 * iqr / std::cbrt(n);
    if (width <= 0.0) width = (hi - lo) / std::ceil(std::sqrt(n));

    auto nbins = static_cast<std::size_t>(std::ceil((hi - lo) / width));
    nbins = std::clamp<std::size_t>(nbins, 1, 4096);
    std::vector<double> edges(nbins + 1);
    for (std::size_t i = 0; i <= nbins; ++i)
        edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(nbins);
    return edges;
}

NormalizedDistribution normalize(const EnergySample& sample, Normalization mode) {
    if (sample.energies.empty()) throw std::invalid_argument("empty sample");
    if (sample.n_sites < 1) throw std::invalid_argument("bad site count");

    NormalizedDistribution dist;
    dist.mode = mode;
    dist.values = sample.energies;

    if (mode == Normalization::PerSite || mode == Normalization::PerSiteZScore) {
        const double inv_n = 1.0 / static_cast<double>(sample.n_sites);
        for (double& v : dist.values) v *= inv_n;
    }
    if (mode == Normalization::ZScore || mode == Normalization::PerSiteZScore) {
        const double mu = mean_of(dist.values);
        const double sigma = stddev_of(dist.values, mu);
        // Constant samples summed in floating point can leave a few ulp of
        // spurious spread; treat that as zero variance too.
        if (sigma <= 1e-12 * std::max(1.0, std::abs(mu)))
            throw std::domain_error("z-score normalization of a zero-variance sample");
        for (double& v : dist.values) v = (v - mu) / sigma;
    }

    dist.bin_edges = freedman_diaconis_edges(dist.values);
    dist.bin_counts = bin_values(dist.values, dist.bin_edges);
    return dist;
}

void rebin(NormalizedDistribution& dist, const std::vector<double>& edges) {
    if (edges.size() < 2) throw std::invalid_argument("need at least two bin edges");
    dist.bin_edges = edges;
    dist.bin_counts = bin_values(dist.values, edges);
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("empty sample in KS test");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());

    std::size_t ia = 0;
    std::size_t ib = 0;
    double max_gap = 0.0;
    while (ia < a.size() && ib < b.size()) {
        const double x = std::min(a[ia], b[ib]);
        while (ia < a.size() && a[ia] <= x) ++ia;
        while (ib < b.size() && b[ib] <= x) ++ib;
        const double gap = std::abs(static_cast<double>(ia) / na -
                                    static_cast<double>(ib) / nb);
        max_gap = std::max(max_gap, gap);
    }
    return max_gap;
}

DivergenceReport compare_distributions(const NormalizedDistribution& a,
                                       const NormalizedDistribution& b) {
    if (a.mode != b.mode)
        throw std::invalid_argument("cannot compare distributions with different normalizations");

    DivergenceReport report;
    report.ks = ks_statistic(a.values, b.values);

    std::vector<double> pooled = a.values;
    pooled.insert(pooled.end(), b.values.begin(), b.values.end());
    const auto edges = freedman_diaconis_edges(std::move(pooled));
    const auto counts_a = bin_values(a.values, edges);
    const auto counts_b = bin_values(b.values, edges);
    const double na = static_cast<double>(a.values.size());
    const double nb = static_cast<double>(b.values.size());
    double l1 = 0.0;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        l1 += std::abs(static_cast<double>(counts_a[i]) / na -
                       static_cast<double>(counts_b[i]) / nb);
    }
    report.l1 = l1;
    return report;
}

void export_histogram(const NormalizedDistribution& dist, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "bin_left,bin_right,count,density\n";
    const double n = static_cast<double>(dist.values.size());
    out.precision(17);
    for (std::size_t i = 0; i < dist.bin_counts.size(); ++i) {
        const double left = dist.bin_edges[i];
        const double right = dist.bin_edges[i + 1];
        const double width = right - left;
        const double density =
            width > 0.0 ? static_cast<double>(dist.bin_counts[i]) / (n * width) : 0.0;
        out << left << ',' << right << ',' << dist.bin_counts[i] << ',' << density << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace trmc
