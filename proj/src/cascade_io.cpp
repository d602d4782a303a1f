#include <fstream>
#include <sstream>

#include "binary_io.hpp"
#include "posecascade/cascade.hpp"
#include "posecascade/errors.hpp"
#include "posecascade/nn_io.hpp"

namespace posecascade {
namespace {

constexpr char kMagic[9] = "PCCASC01";
constexpr const char* kWhat = "model file";

void write_pairs(std::ostream& os, const std::vector<JointPair>& pairs) {
  detail::write_u64(os, pairs.size());
  for (const auto& p : pairs) {
    detail::write_u64(os, p.first);
    detail::write_u64(os, p.second);
  }
}

std::vector<JointPair> read_pairs(std::istream& is) {
  const auto n = detail::read_u64(is, kWhat);
  if (n > (1u << 20)) throw FormatError("model file: implausible pair count");
  std::vector<JointPair> pairs(n);
  for (auto& p : pairs) {
    p.first = detail::read_u64(is, kWhat);
    p.second = detail::read_u64(is, kWhat);
  }
  return pairs;
}

}  // namespace

void save_model(std::ostream& os, const CascadeModel& model) {
  using namespace detail;
  model.validate();
  os.write(kMagic, 8);
  write_u32(os, kModelFormatVersion);
  write_f64(os, model.sigma);
  write_i32(os, model.input_shape.height);
  write_i32(os, model.input_shape.width);
  write_i32(os, model.input_shape.channels);

  write_u64(os, model.tree.k);
  write_pairs(os, model.tree.limbs);
  write_pairs(os, model.tree.torso_pairs);
  write_pairs(os, model.tree.left_right_swap);
  write_u64(os, model.tree.names.size());
  for (const auto& name : model.tree.names) write_string(os, name);

  write_u32(os, static_cast<std::uint32_t>(model.stages.size()));
  for (std::size_t s = 0; s < model.stages.size(); ++s) {
    const auto& stats = model.stats[s].joints;
    write_u64(os, stats.size());
    for (const auto& e : stats) {
      write_u32(os, e.present ? 1 : 0);
      write_f64(os, e.mean.x);
      write_f64(os, e.mean.y);
      write_f64(os, e.variance.x);
      write_f64(os, e.variance.y);
      write_u64(os, e.count);
    }
    std::ostringstream blob(std::ios::binary);
    nn::save_network(blob, model.stages[s]);
    write_string(os, blob.str());
  }
  if (!os) throw std::runtime_error("model file: write failed");
}

void save_model(const std::filesystem::path& path, const CascadeModel& model) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  save_model(os, model);
}

CascadeModel load_model(std::istream& is) {
  using namespace detail;
  expect_magic(is, kMagic, kWhat);
  const auto version = read_u32(is, kWhat);
  if (version != kModelFormatVersion) {
    throw FormatError("model file: unsupported format version " +
                      std::to_string(version));
  }
  CascadeModel model;
  model.sigma = read_f64(is, kWhat);
  model.input_shape.height = read_i32(is, kWhat);
  model.input_shape.width = read_i32(is, kWhat);
  model.input_shape.channels = read_i32(is, kWhat);

  model.tree.k = read_u64(is, kWhat);
  model.tree.limbs = read_pairs(is);
  model.tree.torso_pairs = read_pairs(is);
  model.tree.left_right_swap = read_pairs(is);
  const auto names = read_u64(is, kWhat);
  if (names > (1u << 20)) throw FormatError("model file: implausible name count");
  for (std::uint64_t i = 0; i < names; ++i) {
    model.tree.names.push_back(read_string(is, kWhat));
  }

  const auto stages = read_u32(is, kWhat);
  if (stages > 1024) throw FormatError("model file: implausible stage count");
  for (std::uint32_t s = 0; s < stages; ++s) {
    DisplacementStats stats;
    const auto n = read_u64(is, kWhat);
    if (n > (1u << 20)) throw FormatError("model file: implausible stats size");
    stats.joints.resize(n);
    for (auto& e : stats.joints) {
      e.present = read_u32(is, kWhat) != 0;
      e.mean.x = read_f64(is, kWhat);
      e.mean.y = read_f64(is, kWhat);
      e.variance.x = read_f64(is, kWhat);
      e.variance.y = read_f64(is, kWhat);
      e.count = read_u64(is, kWhat);
    }
    model.stats.push_back(std::move(stats));
    std::istringstream blob(read_string(is, kWhat, std::uint64_t{1} << 34),
                            std::ios::binary);
    model.stages.push_back(nn::load_network(blob));
  }
  try {
    model.validate();
  } catch (const ValidationError& e) {
    throw FormatError(std::string("model file: ") + e.what());
  }
  return model;
}

CascadeModel load_model(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open model " + path.string());
  return load_model(is);
}

}  // namespace posecascade
