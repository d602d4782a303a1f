#pragma once

#include <cstddef>
#include <vector>

#include "posecascade/geometry.hpp"

namespace posecascade {

// Value used for crop samples that fall outside the source image.
inline constexpr double kCropFill = 0.5;

// Planar image with values in [0, 1]. Storage is channel-major:
// index = (c * height + y) * width + x.
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels, double fill = 0.0);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  std::size_t size() const { return pixels_.size(); }

  double& at(int x, int y, int c = 0) {
    return pixels_[index(x, y, c)];
  }
  double at(int x, int y, int c = 0) const {
    return pixels_[index(x, y, c)];
  }

  std::vector<double>& pixels() { return pixels_; }
  const std::vector<double>& pixels() const { return pixels_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(c) * height_ + y) * width_ + x;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<double> pixels_;
};

// Crop of `box` bilinearly resampled to out_width x out_height. Samples
// outside the image read kCropFill. Throws InvalidArgument for non-positive
// output sizes or an invalid box.
Image crop_resample(const Image& image, const BoundingBox& box, int out_width,
                    int out_height);

// Horizontal flip: column x goes to width - 1 - x.
Image mirror_image(const Image& image);

// Channel mean; identity for single-channel images.
Image to_grayscale(const Image& image);

}  // namespace posecascade
