#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "posecascade/data.hpp"
#include "posecascade/errors.hpp"
#include "posecascade/parallel.hpp"

namespace posecascade {
namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> tokens;
  std::istringstream is(line);
  std::string t;
  while (is >> t) tokens.push_back(t);
  return tokens;
}

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

class LineParser {
 public:
  LineParser(const std::string& source, std::size_t line)
      : source_(source), line_(line) {}

  [[noreturn]] void fail(const std::string& message) const {
    throw ParseError(source_, line_, message);
  }

  double number(const std::string& token) const {
    double v = 0.0;
    const auto r = std::from_chars(token.data(), token.data() + token.size(), v);
    if (r.ec != std::errc() || r.ptr != token.data() + token.size() ||
        !std::isfinite(v)) {
      fail("expected a number, got '" + token + "'");
    }
    return v;
  }

  std::size_t index(const std::string& token) const {
    std::size_t v = 0;
    const auto r = std::from_chars(token.data(), token.data() + token.size(), v);
    if (r.ec != std::errc() || r.ptr != token.data() + token.size()) {
      fail("expected a joint index, got '" + token + "'");
    }
    return v;
  }

  BoundingBox box(const std::string& token) const {
    std::vector<double> parts;
    std::size_t start = 0;
    while (true) {
      const auto comma = token.find(',', start);
      parts.push_back(number(token.substr(start, comma - start)));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (parts.size() != 4) fail("initial box must be cx,cy,w,h");
    BoundingBox b{{parts[0], parts[1]}, parts[2], parts[3]};
    try {
      b.validate();
    } catch (const InvalidArgument& e) {
      fail(e.what());
    }
    return b;
  }

 private:
  const std::string& source_;
  std::size_t line_;
};

}  // namespace

std::filesystem::path DatasetManifest::resolve(const AnnotatedExample& ex) const {
  const std::filesystem::path p(ex.image_path);
  return p.is_absolute() ? p : base_dir / p;
}

DatasetManifest parse_manifest(std::istream& is, const std::string& source) {
  DatasetManifest m;
  bool have_k = false;
  std::vector<std::pair<std::size_t, std::string>> names;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
    const auto tokens = split(raw);
    if (tokens.empty()) continue;
    const LineParser p(source, line_no);

    if (!have_k) {
      if (tokens.size() != 1 || tokens[0].rfind("k=", 0) != 0) {
        p.fail("first line must be k=<int>");
      }
      m.tree.k = p.index(tokens[0].substr(2));
      if (m.tree.k < 2) p.fail("k must be at least 2");
      have_k = true;
      continue;
    }

    const std::string& head = tokens[0];
    if (head == "limb" || head == "torso" || head == "swap") {
      if (tokens.size() != 3) p.fail(head + " needs two joint indices");
      const JointPair pair{p.index(tokens[1]), p.index(tokens[2])};
      if (pair.first >= m.tree.k || pair.second >= m.tree.k) {
        throw ValidationError(source + ":" + std::to_string(line_no) + ": " +
                              head + " index out of range for k=" +
                              std::to_string(m.tree.k));
      }
      auto& list = head == "limb"    ? m.tree.limbs
                   : head == "torso" ? m.tree.torso_pairs
                                     : m.tree.left_right_swap;
      list.push_back(pair);
      continue;
    }
    if (head == "name") {
      if (tokens.size() != 3) p.fail("name needs an index and a label");
      names.emplace_back(p.index(tokens[1]), tokens[2]);
      continue;
    }

    // Example record.
    if (tokens.size() < 2) p.fail("record needs an image path and a box");
    AnnotatedExample ex;
    ex.image_path = tokens[0];
    if (tokens[1] != "-") ex.initial_box = p.box(tokens[1]);
    std::size_t end = tokens.size();
    if (tokens.back().rfind("pid=", 0) == 0) {
      ex.person_id = tokens.back().substr(4);
      --end;
    }
    const std::size_t values = end - 2;
    if (values != 3 * m.tree.k) {
      throw ValidationError(source + ":" + std::to_string(line_no) +
                            ": record '" + ex.image_path + "' has " +
                            std::to_string(values) + " joint values, expected " +
                            std::to_string(3 * m.tree.k) + " (k=" +
                            std::to_string(m.tree.k) + ")");
    }
    std::vector<Point> joints(m.tree.k);
    std::vector<bool> mask(m.tree.k);
    for (std::size_t j = 0; j < m.tree.k; ++j) {
      joints[j] = {p.number(tokens[2 + 3 * j]), p.number(tokens[3 + 3 * j])};
      const std::string& v = tokens[4 + 3 * j];
      if (v != "0" && v != "1") p.fail("visibility flag must be 0 or 1, got '" + v + "'");
      mask[j] = v == "1";
    }
    ex.pose = PoseVector(std::move(joints), std::move(mask));
    m.examples.push_back(std::move(ex));
  }
  if (!have_k) throw ParseError(source, line_no, "missing k=<int> header");
  if (!names.empty()) {
    m.tree.names.assign(m.tree.k, "");
    for (const auto& [i, label] : names) {
      if (i >= m.tree.k) {
        throw ValidationError(source + ": name index " + std::to_string(i) +
                              " out of range");
      }
      m.tree.names[i] = label;
    }
  }
  m.tree.validate();
  return m;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open manifest " + path.string());
  DatasetManifest m = parse_manifest(is, path.string());
  m.base_dir = path.parent_path();
  return m;
}

void write_manifest(std::ostream& os, const DatasetManifest& m) {
  os << "k=" << m.tree.k << "\n";
  for (const auto& l : m.tree.limbs) os << "limb " << l.first << " " << l.second << "\n";
  for (const auto& t : m.tree.torso_pairs) os << "torso " << t.first << " " << t.second << "\n";
  for (const auto& s : m.tree.left_right_swap) os << "swap " << s.first << " " << s.second << "\n";
  for (std::size_t i = 0; i < m.tree.names.size(); ++i) {
    os << "name " << i << " " << m.tree.names[i] << "\n";
  }
  for (const auto& ex : m.examples) {
    os << ex.image_path << " ";
    if (ex.initial_box) {
      const auto& b = *ex.initial_box;
      os << format_double(b.center.x) << "," << format_double(b.center.y) << ","
         << format_double(b.width) << "," << format_double(b.height);
    } else {
      os << "-";
    }
    for (std::size_t j = 0; j < ex.pose.size(); ++j) {
      os << " " << format_double(ex.pose[j].x) << " " << format_double(ex.pose[j].y)
         << " " << (ex.pose.present(j) ? 1 : 0);
    }
    if (ex.person_id) os << " pid=" << *ex.person_id;
    os << "\n";
  }
}

void save_manifest(const std::filesystem::path& path, const DatasetManifest& m) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_manifest(os, m);
}

PoseVector mirror_pose(const PoseVector& pose, int image_width,
                       const PoseTree& tree) {
  std::vector<Point> joints = pose.joints();
  std::vector<bool> mask = pose.mask();
  for (auto& p : joints) p.x = (image_width - 1) - p.x;
  for (const auto& s : tree.left_right_swap) {
    std::swap(joints[s.first], joints[s.second]);
    const bool tmp = mask[s.first];
    mask[s.first] = mask[s.second];
    mask[s.second] = tmp;
  }
  return PoseVector(std::move(joints), std::move(mask));
}

std::pair<AnnotatedExample, Image> mirror_example(const AnnotatedExample& ex,
                                                  const Image& image,
                                                  const PoseTree& tree) {
  AnnotatedExample out = ex;
  out.pose = mirror_pose(ex.pose, image.width(), tree);
  if (ex.initial_box) {
    out.initial_box->center.x = (image.width() - 1) - ex.initial_box->center.x;
  }
  return {std::move(out), mirror_image(image)};
}

std::vector<LoadedExample> load_examples(const DatasetManifest& manifest,
                                         int channels, int threads) {
  std::vector<LoadedExample> out(manifest.examples.size());
  parallel_for(out.size(), threads, [&](std::size_t i) {
    const auto& ex = manifest.examples[i];
    if (ex.pose.size() != manifest.k()) {
      throw ValidationError("example '" + ex.image_path + "' has " +
                            std::to_string(ex.pose.size()) + " joints, expected " +
                            std::to_string(manifest.k()));
    }
    Image image = load_image(manifest.resolve(ex));
    if (channels == 1) image = to_grayscale(image);
    const BoundingBox box = ex.initial_box.value_or(
        BoundingBox::full_image(image.width(), image.height()));
    out[i] = {std::move(image), ex.pose, box};
  });
  return out;
}

}  // namespace posecascade
