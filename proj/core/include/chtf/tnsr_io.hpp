#pragma once

#include <filesystem>

#include "chtf/tensor.hpp"

namespace chtf {

// Binary tensor file format "TNSR":
//   magic "TNSR" | version u16 (=1) | order u16 | dims u64[order] LE |
//   data f64[prod dims] LE, canonical (mode-0-fastest) layout.
// Readers reject wrong magic/version and dims whose product overflows or
// mismatches the payload length.

void write_tnsr(const std::filesystem::path& path, const DenseTensor& t);
DenseTensor read_tnsr(const std::filesystem::path& path);

} // namespace chtf
