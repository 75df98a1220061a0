#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "trmc/diagram_io.hpp"
#include "trmc/io_error.hpp"
#include "trmc/metropolis.hpp"

using trmc::TimeSpaceDiagram;

namespace {

std::string temp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

TimeSpaceDiagram sample_diagram() {
    // 2 sites, 1 step -> 2 rows: row0 = {1,0}, row1 = {0,1}
    TimeSpaceDiagram d(2, 1);
    d.set(0, 0, true);
    d.set(1, 1, true);
    return d;
}

}  // namespace

TEST_CASE("csv layout: one line per time step") {
    const auto d = sample_diagram();
    const std::string path = temp_path("trmc_diag.csv");
    trmc::write_diagram_csv(d, path);
    CHECK(slurp(path) == "1,0\n0,1\n");

    const auto rows = trmc::read_binary_csv(path);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0] == std::vector<std::uint8_t>{1, 0});
    CHECK(rows[1] == std::vector<std::uint8_t>{0, 1});
    std::remove(path.c_str());
}

TEST_CASE("binary csv rejects malformed input") {
    const std::string path = temp_path("trmc_bad.csv");
    {
        std::ofstream out(path);
        out << "1,0\n1\n";
    }
    CHECK_THROWS_AS(trmc::read_binary_csv(path), trmc::IoError);
    {
        std::ofstream out(path);
        out << "1,2\n";
    }
    CHECK_THROWS_AS(trmc::read_binary_csv(path), trmc::IoError);
    std::remove(path.c_str());
}

TEST_CASE("pgm P5: time runs along x, occupied is black") {
    const auto d = sample_diagram();
    const std::string path = temp_path("trmc_diag.pgm");
    trmc::write_diagram_pgm(d, path, true);
    // width = 2 time rows, height = 2 sites; pixel(x=t, y=site)
    // site 0: occupied at t0 -> 0, empty at t1 -> 255
    // site 1: empty at t0 -> 255, occupied at t1 -> 0
    const std::string expected = std::string("P5\n2 2\n255\n") +
                                 '\x00' + '\xFF' + '\xFF' + '\x00';
    CHECK(slurp(path) == expected);
    std::remove(path.c_str());
}

TEST_CASE("pgm P2 is the ascii twin") {
    const auto d = sample_diagram();
    const std::string path = temp_path("trmc_diag_ascii.pgm");
    trmc::write_diagram_pgm(d, path, false);
    CHECK(slurp(path) == "P2\n2 2\n255\n0 255\n255 0\n");
    std::remove(path.c_str());
}

TEST_CASE("comparison image places truth left, prediction right") {
    const auto truth = sample_diagram();
    TimeSpaceDiagram predicted(2, 1);  // all empty
    const std::string path = temp_path("trmc_cmp.pgm");
    trmc::write_comparison_pgm(truth, predicted, path, true);
    // width = 2*2+1 with a mid-gray separator column
    const std::string expected = std::string("P5\n5 2\n255\n") +
                                 '\x00' + '\xFF' + '\x80' + '\xFF' + '\xFF' +
                                 '\xFF' + '\x00' + '\x80' + '\xFF' + '\xFF';
    CHECK(slurp(path) == expected);

    TimeSpaceDiagram other_shape(3, 1);
    CHECK_THROWS_AS(trmc::write_comparison_pgm(truth, other_shape, path, true),
                    std::invalid_argument);
    std::remove(path.c_str());
}

TEST_CASE("identical diagrams produce byte-identical artifacts") {
    trmc::SimulationConfig cfg;
    cfg.n_sites = 40;
    cfg.n_steps = 25;
    cfg.seed = 31415;
    const auto a = trmc::simulate(cfg);
    const auto b = trmc::simulate(cfg);

    const std::string pa = temp_path("trmc_det_a.pgm");
    const std::string pb = temp_path("trmc_det_b.pgm");
    trmc::write_diagram_pgm(a, pa);
    trmc::write_diagram_pgm(b, pb);
    CHECK(slurp(pa) == slurp(pb));

    const std::string ca = temp_path("trmc_det_a.csv");
    const std::string cb = temp_path("trmc_det_b.csv");
    trmc::write_diagram_csv(a, ca);
    trmc::write_diagram_csv(b, cb);
    CHECK(slurp(ca) == slurp(cb));

    for (const auto& p : {pa, pb, ca, cb}) std::remove(p.c_str());
}
