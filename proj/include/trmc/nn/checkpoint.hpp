#pragma once

#include <string>

#include "trmc/nn/predictor.hpp"

namespace trmc::nn {

/// Checkpoint container (magic "TRNN0001", JSON header with the full config
/// and a tensor manifest, little-endian float64 payload in manifest order).
/// load(save(m)) reproduces every weight bit-exactly. See docs/format.md.
void save_model(const PredictorModel& model, const std::string& path);
PredictorModel load_model(const std::string& path);

}  // namespace trmc::nn
