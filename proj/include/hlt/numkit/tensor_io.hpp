#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "hlt/numkit/tensor.hpp"

namespace hlt::num {

enum class DType : std::uint8_t { f32 = 0, f64 = 1 };

/// Binary layout, little-endian:
///   "HLTT" | u8 dtype | u8 rank | u32 dims[rank] | raw elements
/// Writing as f32 rounds each element to the nearest float.
void write_tensor(std::ostream& out, const Tensor& tensor, DType dtype);

/// Throws CorruptArtifactError on bad magic, unknown dtype or truncation.
Tensor read_tensor(std::istream& in);

void save_tensor(const std::filesystem::path& path, const Tensor& tensor, DType dtype);
Tensor load_tensor(const std::filesystem::path& path);

}  // namespace hlt::num
