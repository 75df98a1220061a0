#pragma once

#include <stdexcept>
#include <string>

namespace trmc {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// File does not start with the expected magic string.
struct MagicMismatchError : IoError {
    using IoError::IoError;
};

/// File ends before the declared header or payload is complete.
struct TruncatedFileError : IoError {
    using IoError::IoError;
};

/// Header-declared sizes disagree with the actual payload length.
struct PayloadSizeError : IoError {
    using IoError::IoError;
};

}  // namespace trmc
