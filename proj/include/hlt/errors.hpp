#pragma once

#include <stdexcept>
#include <string>

namespace hlt {

/// Tensor or layer shapes that do not line up.
struct DimensionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// NaN or Inf produced or consumed where finite values are required.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A cached intermediate no longer matches the parameters it was built from.
struct ConsistencyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NoLegalActionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Invalid configuration values (arena, trainer, CLI).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Artifacts on disk with bad magic, truncated data or mismatched versions.
struct CorruptArtifactError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace hlt
