#include "trmc/diagram_io.hpp"

#include <fstream>
#include <sstream>

#include "trmc/io_error.hpp"

namespace trmc {

namespace {

std::ofstream open_out(const std::string& path, bool binary) {
    std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
    if (!out) throw IoError("cannot open for writing: " + path);
    return out;
}

}  // namespace

void write_diagram_csv(const TimeSpaceDiagram& diagram, const std::string& path) {
    auto out = open_out(path, false);
    for (int t = 0; t < diagram.n_rows(); ++t) {
        for (int i = 0; i < diagram.n_sites(); ++i) {
            if (i) out << ',';
            out << static_cast<int>(diagram.at(t, i));
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

std::vector<std::vector<std::uint8_t>> read_binary_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open for reading: " + path);
    std::vector<std::vector<std::uint8_t>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::uint8_t> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            if (cell == "0")
                row.push_back(0);
            else if (cell == "1")
                row.push_back(1);
            else
                throw IoError("expected 0/1 cell in " + path + ", got '" + cell + "'");
        }
        if (!rows.empty() && rows.front().size() != row.size())
            throw IoError("ragged CSV rows in " + path);
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace {

void write_pgm(const std::vector<std::uint8_t>& pixels, int width, int height,
               const std::string& path, bool binary) {
    auto out = open_out(path, binary);
    out << (binary ? "P5" : "P2") << '\n' << width << ' ' << height << "\n255\n";
    if (binary) {
        out.write(reinterpret_cast<const char*>(pixels.data()),
                  static_cast<std::streamsize>(pixels.size()));
    } else {
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) {
                if (x) out << ' ';
                out << static_cast<int>(pixels[static_cast<std::size_t>(y) * width + x]);
            }
            out << '\n';
        }
    }
    if (!out) throw IoError("write failed: " + path);
}

// pixel(x = time row, y = site); occupied = black
std::vector<std::uint8_t> diagram_pixels(const TimeSpaceDiagram& d) {
    const int width = d.n_rows();
    const int height = d.n_sites();
    std::vector<std::uint8_t> pixels(static_cast<std::size_t>(width) * height);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            pixels[static_cast<std::size_t>(y) * width + x] = d.at(x, y) ? 0 : 255;
    return pixels;
}

}  // namespace

void write_diagram_pgm(const TimeSpaceDiagram& diagram, const std::string& path,
                       bool binary) {
    write_pgm(diagram_pixels(diagram), diagram.n_rows(), diagram.n_sites(), path, binary);
}

void write_comparison_pgm(const TimeSpaceDiagram& truth, const TimeSpaceDiagram& predicted,
                          const std::string& path, bool binary) {
    if (truth.n_sites() != predicted.n_sites() || truth.n_rows() != predicted.n_rows())
        throw std::invalid_argument("comparison diagrams must have equal shapes");
    const int half = truth.n_rows();
    const int width = 2 * half + 1;
    const int height = truth.n_sites();
    std::vector<std::uint8_t> pixels(static_cast<std::size_t>(width) * height, 128);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < half; ++x) {
            pixels[static_cast<std::size_t>(y) * width + x] = truth.at(x, y) ? 0 : 255;
            pixels[static_cast<std::size_t>(y) * width + half + 1 + x] =
                predicted.at(x, y) ? 0 : 255;
        }
    }
    write_pgm(pixels, width, height, path, binary);
}

}  // namespace trmc
