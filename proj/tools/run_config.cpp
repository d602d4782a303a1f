#include "run_config.hpp"

#include <charconv>
#include <ostream>

#include "posecascade/errors.hpp"

namespace posecascade::cli {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw InvalidArgument("config: bad value '" + value + "' for " + key);
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "yes") return true;
  if (value == "0" || value == "false" || value == "no") return false;
  throw InvalidArgument("config: bad boolean '" + value + "' for " + key);
}

// Returns false when `key` is not a training key.
bool apply_train_key(const std::string& key, const std::string& value,
                     StageConfig& stage) {
  nn::TrainConfig& t = stage.train;
  if (key == "batch_size") {
    t.batch_size = parse_number<int>(key, value);
  } else if (key == "learning_rate") {
    t.learning_rate = parse_number<double>(key, value);
  } else if (key == "dropout_keep") {
    t.dropout_keep = parse_number<double>(key, value);
  } else if (key == "epochs") {
    t.epochs = parse_number<int>(key, value);
  } else if (key == "seed") {
    t.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "flips") {
    stage.flips = parse_bool(key, value);
  } else {
    return false;
  }
  return true;
}

std::string shortest(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

void apply_config_value(const std::string& key, const std::string& value,
                        CascadeConfig& c) {
  const auto dot = key.find('.');
  if (dot != std::string::npos) {
    const std::string prefix = key.substr(0, dot);
    const std::string rest = key.substr(dot + 1);
    StageConfig* stage = prefix == "stage1"       ? &c.stage1
                         : prefix == "refinement" ? &c.refinement
                                                  : nullptr;
    if (!stage || !apply_train_key(rest, value, *stage)) {
      throw ValidationError("config: unknown key '" + key + "'");
    }
    return;
  }
  if (key == "stages") {
    c.stages = parse_number<std::size_t>(key, value);
  } else if (key == "input_size") {
    const int n = parse_number<int>(key, value);
    c.input_shape.height = n;
    c.input_shape.width = n;
  } else if (key == "input_channels") {
    c.input_shape.channels = parse_number<int>(key, value);
  } else if (key == "sigma") {
    c.refinement.sigma = parse_number<double>(key, value);
  } else if (key == "crops_per_joint") {
    c.refinement.crops_per_joint = parse_number<int>(key, value);
  } else if (key == "translations") {
    c.stage1.stage1_translations = parse_number<int>(key, value);
  } else if (key == "jitter") {
    c.stage1.stage1_jitter = parse_number<double>(key, value);
  } else {
    const bool a = apply_train_key(key, value, c.stage1);
    const bool b = apply_train_key(key, value, c.refinement);
    if (!a || !b) throw ValidationError("config: unknown key '" + key + "'");
  }
}

void apply_config(std::istream& is, const std::string& source,
                  CascadeConfig& config) {
  std::string line;
  std::size_t number = 0;
  while (std::getline(is, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError(source, number, "expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      apply_config_value(key, value, config);
    } catch (const InvalidArgument& e) {
      throw ParseError(source, number, e.what());
    } catch (const ValidationError& e) {
      throw ValidationError(source + ":" + std::to_string(number) + ": " + e.what());
    }
  }
}

void write_config(std::ostream& os, const CascadeConfig& c) {
  os << "stages = " << c.stages << "\n"
     << "input_size = " << c.input_shape.height << "\n"
     << "input_channels = " << c.input_shape.channels << "\n"
     << "sigma = " << shortest(c.refinement.sigma) << "\n"
     << "crops_per_joint = " << c.refinement.crops_per_joint << "\n"
     << "translations = " << c.stage1.stage1_translations << "\n"
     << "jitter = " << shortest(c.stage1.stage1_jitter) << "\n";
  for (const auto& [name, s] : {std::pair{"stage1", &c.stage1},
                                std::pair{"refinement", &c.refinement}}) {
    os << name << ".flips = " << (s->flips ? 1 : 0) << "\n"
       << name << ".batch_size = " << s->train.batch_size << "\n"
       << name << ".learning_rate = " << shortest(s->train.learning_rate) << "\n"
       << name << ".dropout_keep = " << shortest(s->train.dropout_keep) << "\n"
       << name << ".epochs = " << s->train.epochs << "\n"
       << name << ".seed = " << s->train.seed << "\n";
  }
}

}  // namespace posecascade::cli
