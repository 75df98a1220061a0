#include "trmc/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "trmc/io_error.hpp"
#include "trmc/rng.hpp"
#include "trmc/version.hpp"

namespace trmc {

Dataset generate_dataset(int n_runs, int n_sites, int window, const ModelParams& params,
                         std::uint64_t base_seed, DeltaMode mode, int threads) {
    if (window < 1) throw std::invalid_argument("window must be >= 1");

    SimulationConfig cfg;
    cfg.model = params;
    cfg.n_sites = n_sites;
    cfg.n_steps = window;
    cfg.delta_mode = mode;
    const auto diagrams = run_ensemble(cfg, n_runs, base_seed, threads);

    Dataset dataset;
    dataset.n_sites = n_sites;
    dataset.window = window;
    dataset.provenance = Provenance{params, mode, base_seed, std::string("trafficmc ") + kVersion};
    dataset.samples.reserve(diagrams.size());
    for (const auto& diagram : diagrams) {
        Sample sample;
        sample.input.assign(diagram.cells().begin(),
                            diagram.cells().begin() +
                                static_cast<std::ptrdiff_t>(window) * n_sites);
        sample.target.assign(diagram.cells().begin() +
                                 static_cast<std::ptrdiff_t>(window) * n_sites,
                             diagram.cells().end());
        dataset.samples.push_back(std::move(sample));
    }
    return dataset;
}

SplitDataset split(const Dataset& dataset, double ratio, std::uint64_t seed) {
    if (!(ratio > 0.0) || !(ratio < 1.0))
        throw std::invalid_argument("split ratio must be in (0, 1)");
    const auto count = dataset.samples.size();
    const auto n_test = static_cast<std::size_t>(
        std::llround(ratio * static_cast<double>(count)));

    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Xoshiro256StarStar rng(seed);
    for (std::size_t k = 0; k + 1 < count; ++k) {
        const auto pick = k + rng.below(count - k);
        std::swap(order[k], order[pick]);
    }

    std::vector<bool> in_test(count, false);
    for (std::size_t k = 0; k < n_test; ++k) in_test[order[k]] = true;

    SplitDataset result;
    result.ratio = ratio;
    result.train.n_sites = result.test.n_sites = dataset.n_sites;
    result.train.window = result.test.window = dataset.window;
    result.train.provenance = result.test.provenance = dataset.provenance;
    for (std::size_t i = 0; i < count; ++i)
        (in_test[i] ? result.test : result.train).samples.push_back(dataset.samples[i]);
    return result;
}

namespace {

constexpr std::size_t kMagicLen = 8;

std::size_t row_bytes(int n_sites) { return (static_cast<std::size_t>(n_sites) + 7) / 8; }

// MSB-first: cell j of a row goes to byte j/8, bit 7 - j%8.
void pack_row(const std::uint8_t* cells, int n, std::string& out) {
    const std::size_t nb = row_bytes(n);
    const std::size_t base = out.size();
    out.resize(base + nb, '\0');
    for (int j = 0; j < n; ++j) {
        if (cells[j])
            out[base + static_cast<std::size_t>(j) / 8] |=
                static_cast<char>(0x80u >> (j % 8));
    }
}

void unpack_row(const char* bytes, int n, std::uint8_t* cells) {
    for (int j = 0; j < n; ++j) {
        const auto byte = static_cast<unsigned char>(bytes[j / 8]);
        cells[j] = (byte & (0x80u >> (j % 8))) ? 1 : 0;
    }
}

nlohmann::json params_to_json(const ModelParams& p) {
    return {{"k0", p.k0},        {"b", p.b},   {"look_ahead", p.look_ahead},
            {"beta", p.beta},    {"a0", p.a0}, {"density", p.density}};
}

ModelParams params_from_json(const nlohmann::json& j) {
    ModelParams p;
    p.k0 = j.at("k0").get<double>();
    p.b = j.at("b").get<double>();
    p.look_ahead = j.at("look_ahead").get<int>();
    p.beta = j.at("beta").get<double>();
    p.a0 = j.at("a0").get<double>();
    p.density = j.at("density").get<double>();
    return p;
}

void write_u32_le(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
    out.push_back(static_cast<char>((v >> 16) & 0xFF));
    out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

std::uint32_t read_u32_le(const char* p) {
    return static_cast<std::uint32_t>(static_cast<unsigned char>(p[0])) |
           (static_cast<std::uint32_t>(static_cast<unsigned char>(p[1])) << 8) |
           (static_cast<std::uint32_t>(static_cast<unsigned char>(p[2])) << 16) |
           (static_cast<std::uint32_t>(static_cast<unsigned char>(p[3])) << 24);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return data;
}

}  // namespace

void save_dataset(const Dataset& dataset, const std::string& path) {
    if (path.empty()) throw IoError("empty output path");

    nlohmann::json header = {
        {"format", kDatasetMagic},
        {"n_sites", dataset.n_sites},
        {"window", dataset.window},
        {"count", dataset.samples.size()},
        {"params", params_to_json(dataset.provenance.params)},
        {"delta_mode", to_string(dataset.provenance.delta_mode)},
        {"base_seed", dataset.provenance.base_seed},
        {"generator", dataset.provenance.generator},
        {"bit_order", "msb_first"},
        {"endianness", "little"},
    };
    const std::string header_str = header.dump();

    std::string blob;
    blob.reserve(kMagicLen + 4 + header_str.size() +
                 dataset.samples.size() * (dataset.window + 1) * row_bytes(dataset.n_sites));
    blob.append(kDatasetMagic, kMagicLen);
    write_u32_le(blob, static_cast<std::uint32_t>(header_str.size()));
    blob.append(header_str);
    for (const auto& sample : dataset.samples) {
        for (int t = 0; t < dataset.window; ++t)
            pack_row(sample.input.data() + static_cast<std::size_t>(t) * dataset.n_sites,
                     dataset.n_sites, blob);
        pack_row(sample.target.data(), dataset.n_sites, blob);
    }

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    if (!out) throw IoError("write failed: " + path);
}

Dataset load_dataset(const std::string& path) {
    const std::string blob = read_file(path);
    if (blob.size() < kMagicLen)
        throw TruncatedFileError("file shorter than the magic string: " + path);
    if (std::memcmp(blob.data(), kDatasetMagic, kMagicLen) != 0)
        throw MagicMismatchError("not a dataset file (bad magic): " + path);
    if (blob.size() < kMagicLen + 4)
        throw TruncatedFileError("file ends inside the header length field: " + path);
    const std::uint32_t header_len = read_u32_le(blob.data() + kMagicLen);
    if (blob.size() < kMagicLen + 4 + header_len)
        throw TruncatedFileError("file ends inside the header: " + path);

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(blob.substr(kMagicLen + 4, header_len));
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed dataset header: " + std::string(e.what()));
    }

    Dataset dataset;
    try {
        dataset.n_sites = header.at("n_sites").get<int>();
        dataset.window = header.at("window").get<int>();
        dataset.provenance.params = params_from_json(header.at("params"));
        dataset.provenance.delta_mode =
            delta_mode_from_string(header.at("delta_mode").get<std::string>());
        dataset.provenance.base_seed = header.at("base_seed").get<std::uint64_t>();
        dataset.provenance.generator = header.at("generator").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw IoError("incomplete dataset header: " + std::string(e.what()));
    }
    const auto count = header.at("count").get<std::size_t>();
    if (dataset.n_sites < 2 || dataset.window < 1)
        throw IoError("dataset header declares an invalid shape");

    const std::size_t rb = row_bytes(dataset.n_sites);
    const std::size_t expected =
        count * (static_cast<std::size_t>(dataset.window) + 1) * rb;
    const std::size_t actual = blob.size() - kMagicLen - 4 - header_len;
    if (actual != expected)
        throw PayloadSizeError("payload is " + std::to_string(actual) +
                               " bytes, header declares " + std::to_string(expected));

    const char* p = blob.data() + kMagicLen + 4 + header_len;
    dataset.samples.resize(count);
    for (auto& sample : dataset.samples) {
        sample.input.assign(static_cast<std::size_t>(dataset.window) * dataset.n_sites, 0);
        sample.target.assign(static_cast<std::size_t>(dataset.n_sites), 0);
        for (int t = 0; t < dataset.window; ++t) {
            unpack_row(p, dataset.n_sites,
                       sample.input.data() + static_cast<std::size_t>(t) * dataset.n_sites);
            p += rb;
        }
        unpack_row(p, dataset.n_sites, sample.target.data());
        p += rb;
    }
    return dataset;
}

void export_dataset_csv(const Dataset& dataset, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "sample,kind,row,cells\n";
    for (std::size_t s = 0; s < dataset.samples.size(); ++s) {
        const auto& sample = dataset.samples[s];
        for (int t = 0; t < dataset.window; ++t) {
            out << s << ",input," << t;
            for (int i = 0; i < dataset.n_sites; ++i)
                out << ',' << static_cast<int>(
                    sample.input[static_cast<std::size_t>(t) * dataset.n_sites + i]);
            out << '\n';
        }
        out << s << ",target," << dataset.window;
        for (int i = 0; i < dataset.n_sites; ++i)
            out << ',' << static_cast<int>(sample.target[static_cast<std::size_t>(i)]);
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace trmc
