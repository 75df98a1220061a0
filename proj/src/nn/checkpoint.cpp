#include "trmc/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "trmc/io_error.hpp"
#include "trmc/version.hpp"

namespace trmc::nn {

namespace {

constexpr std::size_t kMagicLen = 8;

void append_f64_le(std::string& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i)
        out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

double read_f64_le(const char* p) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i)
        bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    return std::bit_cast<double>(bits);
}

void write_u32_le(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t read_u32_le(const char* p) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
        v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    return v;
}

nlohmann::json config_to_json(const PredictorConfig& c) {
    return {{"n_sites", c.n_sites},
            {"window", c.window},
            {"dense_in", c.dense_in},
            {"conv1_channels", c.conv1_channels},
            {"conv2_channels", c.conv2_channels},
            {"conv1_kernel", c.conv1_kernel},
            {"conv2_kernel", c.conv2_kernel},
            {"dropout_rate", c.dropout_rate},
            {"lstm_hidden", c.lstm_hidden},
            {"alpha", c.alpha},
            {"learning_rate", c.learning_rate},
            {"optimizer", to_string(c.optimizer)},
            {"momentum", c.momentum},
            {"lr_decay", c.lr_decay},
            {"lr_decay_every", c.lr_decay_every},
            {"epochs", c.epochs},
            {"batch_size", c.batch_size},
            {"init_seed", c.init_seed}};
}

PredictorConfig config_from_json(const nlohmann::json& j) {
    PredictorConfig c;
    c.n_sites = j.at("n_sites").get<int>();
    c.window = j.at("window").get<int>();
    c.dense_in = j.at("dense_in").get<int>();
    c.conv1_channels = j.at("conv1_channels").get<int>();
    c.conv2_channels = j.at("conv2_channels").get<int>();
    c.conv1_kernel = j.at("conv1_kernel").get<int>();
    c.conv2_kernel = j.at("conv2_kernel").get<int>();
    c.dropout_rate = j.at("dropout_rate").get<double>();
    c.lstm_hidden = j.at("lstm_hidden").get<int>();
    c.alpha = j.at("alpha").get<double>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.optimizer = optimizer_from_string(j.at("optimizer").get<std::string>());
    c.momentum = j.at("momentum").get<double>();
    c.lr_decay = j.at("lr_decay").get<double>();
    c.lr_decay_every = j.at("lr_decay_every").get<int>();
    c.epochs = j.at("epochs").get<int>();
    c.batch_size = j.at("batch_size").get<int>();
    c.init_seed = j.at("init_seed").get<std::uint64_t>();
    return c;
}

}  // namespace

void save_model(const PredictorModel& model, const std::string& path) {
    PredictorModel& m = const_cast<PredictorModel&>(model);  // refs are read-only here
    const auto refs = tensor_refs(m);

    nlohmann::json manifest = nlohmann::json::array();
    std::size_t total = 0;
    for (const auto& r : refs) {
        manifest.push_back({{"name", r.name}, {"rows", r.rows}, {"cols", r.cols}});
        total += r.size;
    }
    nlohmann::json header = {
        {"format", kModelMagic},
        {"generator", std::string("trafficmc ") + kVersion},
        {"config", config_to_json(model.config)},
        {"dropout_seed", model.dropout_seed},
        {"tensors", manifest},
        {"float_format", "f64-le"},
    };
    const std::string header_str = header.dump();

    std::string blob;
    blob.reserve(kMagicLen + 4 + header_str.size() + total * 8);
    blob.append(kModelMagic, kMagicLen);
    write_u32_le(blob, static_cast<std::uint32_t>(header_str.size()));
    blob.append(header_str);
    for (const auto& r : refs)
        for (std::size_t i = 0; i < r.size; ++i) append_f64_le(blob, r.data[i]);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    if (!out) throw IoError("write failed: " + path);
}

PredictorModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (blob.size() < kMagicLen)
        throw TruncatedFileError("file shorter than the magic string: " + path);
    if (std::memcmp(blob.data(), kModelMagic, kMagicLen) != 0)
        throw MagicMismatchError("not a model checkpoint (bad magic): " + path);
    if (blob.size() < kMagicLen + 4)
        throw TruncatedFileError("file ends inside the header length field: " + path);
    const std::uint32_t header_len = read_u32_le(blob.data() + kMagicLen);
    if (blob.size() < kMagicLen + 4 + header_len)
        throw TruncatedFileError("file ends inside the header: " + path);

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(blob.substr(kMagicLen + 4, header_len));
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed checkpoint header: " + std::string(e.what()));
    }

    PredictorModel model;
    try {
        model = init_model(config_from_json(header.at("config")));
        model.dropout_seed = header.at("dropout_seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw IoError("incomplete checkpoint header: " + std::string(e.what()));
    }

    const auto refs = tensor_refs(model);
    const auto& manifest = header.at("tensors");
    if (manifest.size() != refs.size())
        throw PayloadSizeError("checkpoint declares " + std::to_string(manifest.size()) +
                               " tensors, model has " + std::to_string(refs.size()));
    std::size_t total = 0;
    for (std::size_t i = 0; i < refs.size(); ++i) {
        const auto& entry = manifest[i];
        if (entry.at("name").get<std::string>() != refs[i].name ||
            entry.at("rows").get<int>() != refs[i].rows ||
            entry.at("cols").get<int>() != refs[i].cols)
            throw PayloadSizeError("tensor manifest mismatch at '" + refs[i].name + "'");
        total += refs[i].size;
    }
    const std::size_t expected = total * 8;
    const std::size_t actual = blob.size() - kMagicLen - 4 - header_len;
    if (actual != expected)
        throw PayloadSizeError("payload is " + std::to_string(actual) +
                               " bytes, manifest declares " + std::to_string(expected));

    const char* p = blob.data() + kMagicLen + 4 + header_len;
    for (const auto& r : refs)
        for (std::size_t i = 0; i < r.size; ++i, p += 8) r.data[i] = read_f64_le(p);
    return model;
}

}  // namespace trmc::nn
