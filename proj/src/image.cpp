#include "posecascade/image.hpp"

#include <cmath>

#include "posecascade/errors.hpp"

namespace posecascade {

Image::Image(int width, int height, int channels, double fill)
    : width_(width), height_(height), channels_(channels) {
  if (width < 0 || height < 0 || channels < 0) {
    throw InvalidArgument("image: negative dimension");
  }
  pixels_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

namespace {

struct Tap {
  int lo;
  double frac;
};

// Bilinear taps for each output position along one axis.
std::vector<Tap> taps(double edge, double extent, int out) {
  std::vector<Tap> result(out);
  const double step = extent / out;
  for (int i = 0; i < out; ++i) {
    const double s = edge + (i + 0.5) * step;
    const double lo = std::floor(s);
    result[i] = {static_cast<int>(lo), s - lo};
  }
  return result;
}

}  // namespace

Image crop_resample(const Image& image, const BoundingBox& box, int out_width,
                    int out_height) {
  if (out_width <= 0 || out_height <= 0) {
    throw InvalidArgument("crop_resample: output size must be positive");
  }
  box.validate();
  const auto xs = taps(box.center.x - box.width / 2, box.width, out_width);
  const auto ys = taps(box.center.y - box.height / 2, box.height, out_height);

  Image out(out_width, out_height, image.channels());
  const int w = image.width();
  const int h = image.height();
  for (int c = 0; c < image.channels(); ++c) {
    auto sample = [&](int x, int y) {
      return (x < 0 || y < 0 || x >= w || y >= h) ? kCropFill
                                                  : image.at(x, y, c);
    };
    for (int v = 0; v < out_height; ++v) {
      const Tap ty = ys[v];
      for (int u = 0; u < out_width; ++u) {
        const Tap tx = xs[u];
        const double top = (1.0 - tx.frac) * sample(tx.lo, ty.lo) +
                           tx.frac * sample(tx.lo + 1, ty.lo);
        const double bottom = (1.0 - tx.frac) * sample(tx.lo, ty.lo + 1) +
                              tx.frac * sample(tx.lo + 1, ty.lo + 1);
        out.at(u, v, c) = (1.0 - ty.frac) * top + ty.frac * bottom;
      }
    }
  }
  return out;
}

Image mirror_image(const Image& image) {
  Image out(image.width(), image.height(), image.channels());
  for (int c = 0; c < image.channels(); ++c) {
    for (int y = 0; y < image.height(); ++y) {
      for (int x = 0; x < image.width(); ++x) {
        out.at(image.width() - 1 - x, y, c) = image.at(x, y, c);
      }
    }
  }
  return out;
}

Image to_grayscale(const Image& image) {
  if (image.channels() == 1) return image;
  Image out(image.width(), image.height(), 1);
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      double sum = 0.0;
      for (int c = 0; c < image.channels(); ++c) sum += image.at(x, y, c);
      out.at(x, y) = sum / image.channels();
    }
  }
  return out;
}

}  // namespace posecascade
