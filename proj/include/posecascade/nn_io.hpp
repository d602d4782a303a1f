#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "posecascade/nn.hpp"

namespace posecascade::nn {

// Network file layout (all integers and doubles little-endian):
//   magic "PCNNET01", u32 format version,
//   i32 input height, width, channels, u64 output_dim, u32 layer count,
//   per layer: u32 kind, i32 filter_size, i32 stride, i32 outputs,
//              f64 keep_probability, i32 lrn size, f64 lrn k, alpha, beta,
//   per layer: u64 rows, u64 cols, rows*cols f64 weights (column-major),
//              u64 n, n f64 biases.
inline constexpr std::uint32_t kNetworkFormatVersion = 1;

void save_network(std::ostream& os, const Network& net);
void save_network(const std::filesystem::path& path, const Network& net);

// Throws FormatError on a bad magic number, unknown version, truncated data
// or a parameter block that does not match the layer stack.
Network load_network(std::istream& is);
Network load_network(const std::filesystem::path& path);

}  // namespace posecascade::nn
