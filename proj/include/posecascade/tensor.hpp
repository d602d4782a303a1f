#pragma once

#include <cstddef>
#include <vector>

namespace posecascade {

// (height, width, channels); a flat vector of n values is (1, 1, n).
struct Shape {
  int height = 0;
  int width = 0;
  int channels = 0;

  static Shape flat(int n) { return {1, 1, n}; }
  std::size_t size() const {
    return static_cast<std::size_t>(height) * width * channels;
  }
  friend bool operator==(const Shape&, const Shape&) = default;
};

// Dense double tensor, channel-major like Image.
struct Tensor {
  Shape shape;
  std::vector<double> values;

  Tensor() = default;
  explicit Tensor(Shape s) : shape(s), values(s.size(), 0.0) {}
  // Throws ShapeError if values.size() != s.size().
  Tensor(Shape s, std::vector<double> v);

  static Tensor flat(std::vector<double> v);

  std::size_t size() const { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
};

}  // namespace posecascade
