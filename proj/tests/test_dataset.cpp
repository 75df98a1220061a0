#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "trmc/dataset.hpp"
#include "trmc/io_error.hpp"

using trmc::Dataset;
using trmc::ModelParams;

namespace {

std::string temp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

Dataset small_dataset(int runs = 12, std::uint64_t seed = 31) {
    ModelParams params;
    return trmc::generate_dataset(runs, 20, 6, params, seed);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("generate_dataset shapes and conservation") {
    const auto data = small_dataset();
    CHECK(data.samples.size() == 12);
    CHECK(data.n_sites == 20);
    CHECK(data.window == 6);
    for (const auto& sample : data.samples) {
        CHECK(sample.input.size() == 6u * 20u);
        CHECK(sample.target.size() == 20u);
        int target_count = 0;
        for (const auto c : sample.target) target_count += c;
        for (int t = 0; t < 6; ++t) {
            int row_count = 0;
            for (int i = 0; i < 20; ++i) row_count += sample.input[t * 20 + i];
            CHECK(row_count == target_count);
        }
    }
}

TEST_CASE("one run reproduces the underlying simulation") {
    ModelParams params;
    const auto data = trmc::generate_dataset(1, 20, 6, params, 77);

    trmc::SimulationConfig cfg;
    cfg.model = params;
    cfg.n_sites = 20;
    cfg.n_steps = 6;
    cfg.seed = trmc::derive_seed(77, 0);
    const auto diagram = trmc::simulate(cfg);

    for (int t = 0; t < 6; ++t)
        for (int i = 0; i < 20; ++i)
            CHECK(data.samples[0].input[t * 20 + i] == diagram.at(t, i));
    for (int i = 0; i < 20; ++i) CHECK(data.samples[0].target[i] == diagram.at(6, i));
}

TEST_CASE("provenance regenerates the dataset bit-exactly") {
    const auto data = small_dataset();
    const auto again = trmc::generate_dataset(
        static_cast<int>(data.samples.size()), data.n_sites, data.window,
        data.provenance.params, data.provenance.base_seed, data.provenance.delta_mode);
    CHECK(data == again);
}

TEST_CASE("split partitions exactly and deterministically") {
    const auto data = small_dataset(1000, 5);

    const auto parts = trmc::split(data, 0.2, 42);
    CHECK(parts.train.samples.size() == 800);
    CHECK(parts.test.samples.size() == 200);

    const auto parts2 = trmc::split(data, 0.2, 42);
    CHECK(parts.train == parts2.train);
    CHECK(parts.test == parts2.test);

    const auto other = trmc::split(data, 0.2, 43);
    CHECK(parts.train != other.train);

    const auto tiny = trmc::split(small_dataset(2), 0.5, 1);
    CHECK(tiny.train.samples.size() == 1);
    CHECK(tiny.test.samples.size() == 1);

    CHECK_THROWS_AS(trmc::split(data, 0.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(trmc::split(data, 1.0, 1), std::invalid_argument);
}

TEST_CASE("split keeps every sample exactly once") {
    const auto data = small_dataset(50, 9);
    const auto parts = trmc::split(data, 0.3, 7);
    CHECK(parts.train.samples.size() + parts.test.samples.size() == 50);

    // Count multiset membership by brute comparison.
    for (const auto& sample : data.samples) {
        int hits = 0;
        for (const auto& s : parts.train.samples) hits += (s == sample);
        for (const auto& s : parts.test.samples) hits += (s == sample);
        CHECK(hits >= 1);
    }
}

TEST_CASE("dataset file round-trip is exact") {
    const auto data = small_dataset(25, 8);
    const std::string path = temp_path("trmc_ds_roundtrip.trmc");
    trmc::save_dataset(data, path);
    const auto loaded = trmc::load_dataset(path);
    CHECK(loaded == data);

    // Writing twice produces byte-identical files.
    const std::string path2 = temp_path("trmc_ds_roundtrip2.trmc");
    trmc::save_dataset(data, path2);
    CHECK(slurp(path) == slurp(path2));
    std::remove(path.c_str());
    std::remove(path2.c_str());
}

TEST_CASE("empty dataset is a valid file with count zero") {
    Dataset data;
    data.n_sites = 50;
    data.window = 30;
    data.provenance.generator = "trafficmc test";
    const std::string path = temp_path("trmc_ds_empty.trmc");
    trmc::save_dataset(data, path);
    const auto loaded = trmc::load_dataset(path);
    CHECK(loaded.samples.empty());
    CHECK(loaded == data);
    std::remove(path.c_str());
}

TEST_CASE("corrupted files raise distinct errors") {
    const auto data = small_dataset(5, 3);
    const std::string path = temp_path("trmc_ds_corrupt.trmc");
    trmc::save_dataset(data, path);
    const std::string good = slurp(path);

    SUBCASE("bad magic") {
        std::string bad = good;
        bad[0] = 'X';
        spit(path, bad);
        CHECK_THROWS_AS(trmc::load_dataset(path), trmc::MagicMismatchError);
    }
    SUBCASE("truncated before the header ends") {
        spit(path, good.substr(0, 10));
        CHECK_THROWS_AS(trmc::load_dataset(path), trmc::TruncatedFileError);
        spit(path, good.substr(0, 40));
        CHECK_THROWS_AS(trmc::load_dataset(path), trmc::TruncatedFileError);
    }
    SUBCASE("payload shorter than the header declares") {
        spit(path, good.substr(0, good.size() - 7));
        CHECK_THROWS_AS(trmc::load_dataset(path), trmc::PayloadSizeError);
    }
    SUBCASE("payload longer than the header declares") {
        spit(path, good + std::string(3, '\0'));
        CHECK_THROWS_AS(trmc::load_dataset(path), trmc::PayloadSizeError);
    }
    std::remove(path.c_str());
}

TEST_CASE("csv export lists every row") {
    const auto data = small_dataset(3, 2);
    const std::string path = temp_path("trmc_ds_dump.csv");
    trmc::export_dataset_csv(data, path);
    std::ifstream in(path);
    std::string line;
    std::size_t lines = 0;
    while (std::getline(in, line)) ++lines;
    CHECK(lines == 1 + 3 * (6 + 1));  // header + (window + target) per sample
    std::remove(path.c_str());
}
