#pragma once

namespace trmc {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kDatasetMagic = "TRMC0001";
inline constexpr const char* kModelMagic = "TRNN0001";

}  // namespace trmc
