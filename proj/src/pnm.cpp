#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>

#include "posecascade/data.hpp"
#include "posecascade/errors.hpp"

namespace posecascade {
namespace {

// Next header token, skipping whitespace and '#' comments.
std::string header_token(std::istream& is, const std::string& name) {
  std::string token;
  int ch;
  while ((ch = is.get()) != EOF) {
    if (ch == '#') {
      while ((ch = is.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!token.empty()) return token;
      continue;
    }
    token.push_back(static_cast<char>(ch));
  }
  if (token.empty()) throw FormatError(name + ": truncated header");
  return token;
}

int header_int(std::istream& is, const std::string& name, const char* field) {
  const std::string token = header_token(is, name);
  int value = 0;
  for (char c : token) {
    if (c < '0' || c > '9' || value > 1'000'000) {
      throw FormatError(name + ": bad " + field + " '" + token + "'");
    }
    value = value * 10 + (c - '0');
  }
  return value;
}

}  // namespace

Image decode_pnm(std::istream& is, const std::string& name) {
  char magic[2] = {0, 0};
  is.read(magic, 2);
  if (is.gcount() != 2 || magic[0] != 'P' || (magic[1] != '5' && magic[1] != '6')) {
    throw FormatError(name + ": unsupported magic number (expected P5 or P6)");
  }
  const int channels = magic[1] == '5' ? 1 : 3;
  // header_token consumes the single whitespace byte after maxval.
  const int width = header_int(is, name, "width");
  const int height = header_int(is, name, "height");
  const int maxval = header_int(is, name, "maxval");
  if (width <= 0 || height <= 0) throw FormatError(name + ": empty image");
  if (maxval <= 0 || maxval > 65535) throw FormatError(name + ": bad maxval");

  const int bytes_per_sample = maxval > 255 ? 2 : 1;
  const std::size_t count = static_cast<std::size_t>(width) * height * channels;
  std::vector<unsigned char> raw(count * bytes_per_sample);
  is.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(is.gcount()) != raw.size()) {
    throw FormatError(name + ": truncated pixel data");
  }

  Image image(width, height, channels);
  std::size_t i = 0;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < channels; ++c, ++i) {
        const unsigned v = bytes_per_sample == 1
                               ? raw[i]
                               : (static_cast<unsigned>(raw[2 * i]) << 8) | raw[2 * i + 1];
        image.at(x, y, c) = static_cast<double>(v) / maxval;
      }
    }
  }
  return image;
}

Image load_image(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open image " + path.string());
  return decode_pnm(is, path.string());
}

void save_image(const std::filesystem::path& path, const Image& image) {
  if (image.channels() != 1 && image.channels() != 3) {
    throw InvalidArgument("save_image: only 1 or 3 channels supported");
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os << (image.channels() == 1 ? "P5" : "P6") << "\n"
     << image.width() << " " << image.height() << "\n255\n";
  std::vector<char> raw;
  raw.reserve(image.size());
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      for (int c = 0; c < image.channels(); ++c) {
        const double v = std::clamp(image.at(x, y, c), 0.0, 1.0);
        raw.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
      }
    }
  }
  os.write(raw.data(), static_cast<std::streamsize>(raw.size()));
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace posecascade
