#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trmc/metropolis.hpp"

namespace trmc {

/// CSV export: one line per time step, n_sites comma-separated 0/1 cells.
void write_diagram_csv(const TimeSpaceDiagram& diagram, const std::string& path);

/// Reads a 0/1 CSV back into row vectors (all rows must share one width).
std::vector<std::vector<std::uint8_t>> read_binary_csv(const std::string& path);

/**
 * Portable graymap export, laid out like the usual time-space plot:
 * image width = number of time rows, height = number of sites, so time runs
 * left to right and ring position top to bottom. Occupied cells are black
 * (0), empty cells white (255). `binary` picks P5 (raw) over P2 (ASCII).
 */
void write_diagram_pgm(const TimeSpaceDiagram& diagram, const std::string& path,
                       bool binary = true);

/**
 * Fig-style side-by-side comparison: truth on the left, prediction on the
 * right, separated by one mid-gray column. Both diagrams must have the same
 * shape.
 */
void write_comparison_pgm(const TimeSpaceDiagram& truth, const TimeSpaceDiagram& predicted,
                          const std::string& path, bool binary = true);

}  // namespace trmc
