#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "posecascade/geometry.hpp"
#include "posecascade/image.hpp"

namespace posecascade {

// Binary PGM (P5) or PPM (P6), maxval up to 65535, scaled to [0, 1].
// Throws FormatError for other magic numbers or truncated data.
Image load_image(const std::filesystem::path& path);
Image decode_pnm(std::istream& is, const std::string& name = "image");
// 8-bit P5 (1 channel) or P6 (3 channels); values are clamped and rounded.
void save_image(const std::filesystem::path& path, const Image& image);

struct AnnotatedExample {
  // Relative paths resolve against the manifest's directory.
  std::string image_path;
  PoseVector pose;
  std::optional<BoundingBox> initial_box;
  std::optional<std::string> person_id;

  friend bool operator==(const AnnotatedExample&,
                         const AnnotatedExample&) = default;
};

struct DatasetManifest {
  PoseTree tree;
  std::vector<AnnotatedExample> examples;
  std::filesystem::path base_dir;

  std::size_t k() const { return tree.k; }
  std::filesystem::path resolve(const AnnotatedExample& ex) const;
};

// Text format:
//   k=<int>
//   limb a b | torso a b | swap a b | name i <label>     (any order)
//   <image-path> <cx,cy,w,h | -> x1 y1 v1 ... xk yk vk [pid=<id>]
// Whitespace separated; '#' starts a comment. Throws ParseError with the
// line number for malformed text and ValidationError for records or tree
// declarations that contradict k.
DatasetManifest parse_manifest(std::istream& is, const std::string& source);
DatasetManifest load_manifest(const std::filesystem::path& path);
void write_manifest(std::ostream& os, const DatasetManifest& manifest);
void save_manifest(const std::filesystem::path& path,
                   const DatasetManifest& manifest);

// Horizontal mirror of an example and its image: x -> (width - 1) - x,
// left/right joints (and their labeled flags) exchanged per the swap pairs,
// initial box mirrored the same way.
std::pair<AnnotatedExample, Image> mirror_example(const AnnotatedExample& ex,
                                                  const Image& image,
                                                  const PoseTree& tree);
PoseVector mirror_pose(const PoseVector& pose, int image_width,
                       const PoseTree& tree);

// An example with its decoded image and a resolved initial box.
struct LoadedExample {
  Image image;
  PoseVector pose;
  BoundingBox initial_box;
};

// Decodes every image (converted to `channels`, 1 or as stored when 0) and
// defaults missing initial boxes to the full image.
std::vector<LoadedExample> load_examples(const DatasetManifest& manifest,
                                         int channels = 1, int threads = 1);

}  // namespace posecascade
