#include "posecascade/nn_io.hpp"

#include <fstream>

#include "binary_io.hpp"
#include "posecascade/errors.hpp"

namespace posecascade::nn {
namespace {

constexpr char kMagic[9] = "PCNNET01";
constexpr const char* kWhat = "network file";

}  // namespace

void save_network(std::ostream& os, const Network& net) {
  using namespace detail;
  os.write(kMagic, 8);
  write_u32(os, kNetworkFormatVersion);
  write_i32(os, net.input_shape().height);
  write_i32(os, net.input_shape().width);
  write_i32(os, net.input_shape().channels);
  write_u64(os, net.output_dim());
  write_u32(os, static_cast<std::uint32_t>(net.layers().size()));
  for (const auto& l : net.layers()) {
    write_u32(os, static_cast<std::uint32_t>(l.kind));
    write_i32(os, l.filter_size);
    write_i32(os, l.stride);
    write_i32(os, l.outputs);
    write_f64(os, l.keep_probability);
    write_i32(os, l.lrn.size);
    write_f64(os, l.lrn.k);
    write_f64(os, l.lrn.alpha);
    write_f64(os, l.lrn.beta);
  }
  for (const auto& p : net.params()) {
    write_u64(os, static_cast<std::uint64_t>(p.weights.rows()));
    write_u64(os, static_cast<std::uint64_t>(p.weights.cols()));
    for (Eigen::Index i = 0; i < p.weights.size(); ++i) {
      write_f64(os, p.weights.data()[i]);
    }
    write_u64(os, static_cast<std::uint64_t>(p.bias.size()));
    for (Eigen::Index i = 0; i < p.bias.size(); ++i) write_f64(os, p.bias[i]);
  }
  if (!os) throw std::runtime_error("network file: write failed");
}

void save_network(const std::filesystem::path& path, const Network& net) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  save_network(os, net);
}

Network load_network(std::istream& is) {
  using namespace detail;
  expect_magic(is, kMagic, kWhat);
  const auto version = read_u32(is, kWhat);
  if (version != kNetworkFormatVersion) {
    throw FormatError("network file: unsupported format version " +
                      std::to_string(version));
  }
  Shape input;
  input.height = read_i32(is, kWhat);
  input.width = read_i32(is, kWhat);
  input.channels = read_i32(is, kWhat);
  const auto output_dim = read_u64(is, kWhat);
  const auto layer_count = read_u32(is, kWhat);
  if (layer_count > 4096) throw FormatError("network file: implausible layer count");
  std::vector<LayerSpec> layers(layer_count);
  for (auto& l : layers) {
    const auto kind = read_u32(is, kWhat);
    if (kind > static_cast<std::uint32_t>(LayerKind::kDropout)) {
      throw FormatError("network file: unknown layer kind " + std::to_string(kind));
    }
    l.kind = static_cast<LayerKind>(kind);
    l.filter_size = read_i32(is, kWhat);
    l.stride = read_i32(is, kWhat);
    l.outputs = read_i32(is, kWhat);
    l.keep_probability = read_f64(is, kWhat);
    l.lrn.size = read_i32(is, kWhat);
    l.lrn.k = read_f64(is, kWhat);
    l.lrn.alpha = read_f64(is, kWhat);
    l.lrn.beta = read_f64(is, kWhat);
  }
  Network net;
  try {
    net = Network(input, std::move(layers), output_dim);
  } catch (const ShapeError& e) {
    throw FormatError(std::string("network file: ") + e.what());
  }
  for (auto& p : net.mutable_params()) {
    const auto rows = read_u64(is, kWhat);
    const auto cols = read_u64(is, kWhat);
    if (rows != static_cast<std::uint64_t>(p.weights.rows()) ||
        cols != static_cast<std::uint64_t>(p.weights.cols())) {
      throw FormatError("network file: weight block does not match layer");
    }
    for (Eigen::Index i = 0; i < p.weights.size(); ++i) {
      p.weights.data()[i] = read_f64(is, kWhat);
    }
    const auto n = read_u64(is, kWhat);
    if (n != static_cast<std::uint64_t>(p.bias.size())) {
      throw FormatError("network file: bias block does not match layer");
    }
    for (Eigen::Index i = 0; i < p.bias.size(); ++i) p.bias[i] = read_f64(is, kWhat);
  }
  return net;
}

Network load_network(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  return load_network(is);
}

}  // namespace posecascade::nn
