#pragma once

#include <filesystem>
#include <iosfwd>

#include "stm/tensor.hpp"

namespace stm {

// Binary container layout (all little-endian):
//   "TNSR" | u32 order M | M x u64 dims | prod(dims) x f64 values (multi-index order)
// Orders above kMaxOrder are rejected on load.

void write_tensor(std::ostream& out, const DenseTensor& t);
void write_tensor(const std::filesystem::path& path, const DenseTensor& t);

/// `name` is used in error messages only.
DenseTensor read_tensor(std::istream& in, const std::string& name);
DenseTensor read_tensor(const std::filesystem::path& path);

}  // namespace stm
