#include "cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "posecascade/cascade.hpp"
#include "posecascade/data.hpp"
#include "posecascade/errors.hpp"
#include "posecascade/metrics.hpp"
#include "posecascade/parallel.hpp"
#include "posecascade/synth.hpp"
#include "run_config.hpp"

namespace posecascade::cli {
namespace {

namespace fs = std::filesystem;

struct SynthArgs {
  fs::path out;
  std::size_t count = 500;
  std::uint64_t seed = 1;
  int size = 120;
  std::size_t offset = 0;
};

struct TrainArgs {
  fs::path train;
  fs::path heldout;
  fs::path config;
  fs::path out;
  std::optional<std::size_t> stages;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> set;
};

struct EvalArgs {
  fs::path model;
  fs::path manifest;
  fs::path out;
  std::vector<double> fractions{0.1, 0.2, 0.3, 0.4, 0.5};
  double pcp_threshold = 0.5;
};

struct PredictArgs {
  fs::path model;
  fs::path image;
  std::string box;
  fs::path render;
  std::size_t stages = SIZE_MAX;
};

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return os;
}

void check_tree(const PoseTree& model_tree, const PoseTree& data_tree,
                const std::string& what) {
  if (model_tree.k != data_tree.k) {
    throw ValidationError(what + " has k=" + std::to_string(data_tree.k) +
                          " but the model expects k=" +
                          std::to_string(model_tree.k));
  }
}

// Poses per stage for every example; a truncated cascade repeats its last
// estimate for the remaining stages.
std::vector<std::vector<PoseVector>> predict_all(
    const CascadeModel& model, const std::vector<LoadedExample>& data,
    int threads, std::size_t* truncated = nullptr) {
  const std::size_t stages = model.stage_count();
  std::vector<CascadePrediction> raw(data.size());
  parallel_for(data.size(), threads, [&](std::size_t e) {
    raw[e] = predict(model, data[e].image, data[e].initial_box);
  });
  std::vector<std::vector<PoseVector>> out(stages);
  for (auto& p : raw) {
    if (p.truncated && truncated) ++*truncated;
    for (std::size_t s = 0; s < stages; ++s) {
      out[s].push_back(p.poses[std::min(s, p.poses.size() - 1)]);
    }
  }
  return out;
}

std::vector<PoseVector> truths_of(const std::vector<LoadedExample>& data) {
  std::vector<PoseVector> t;
  t.reserve(data.size());
  for (const auto& ex : data) t.push_back(ex.pose);
  return t;
}

int cmd_synth(const SynthArgs& a, int threads, std::ostream& out) {
  SynthConfig config;
  config.count = a.count;
  config.seed = a.seed;
  config.image_size = a.size;
  if (a.offset == 0) {
    synth_generate(config, a.out, threads);
  } else {
    // Same generator, examples [offset, offset + count).
    fs::create_directories(a.out / "images");
    DatasetManifest m;
    m.tree = stick_figure_tree();
    m.base_dir = a.out;
    m.examples.resize(a.count);
    parallel_for(a.count, threads, [&](std::size_t i) {
      SynthExample ex = synth_example(config, a.offset + i);
      char name[32];
      std::snprintf(name, sizeof(name), "images/%05zu.pgm", a.offset + i);
      save_image(a.out / name, ex.image);
      m.examples[i].image_path = name;
      m.examples[i].pose = std::move(ex.pose);
    });
    save_manifest(a.out / "manifest.txt", m);
  }
  out << "wrote " << a.count << " examples to " << a.out.string() << "\n";
  return kExitOk;
}

int cmd_train(const TrainArgs& a, int threads, std::ostream& out) {
  CascadeConfig config;
  if (!a.config.empty()) {
    std::ifstream is(a.config);
    if (!is) throw FormatError("cannot open config " + a.config.string());
    apply_config(is, a.config.string(), config);
  }
  for (const auto& kv : a.set) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw InvalidArgument("--set expects key=value, got '" + kv + "'");
    }
    apply_config_value(kv.substr(0, eq), kv.substr(eq + 1), config);
  }
  if (a.stages) config.stages = *a.stages;
  if (a.seed) {
    config.stage1.train.seed = *a.seed;
    config.refinement.train.seed = *a.seed;
  }
  config.stage1.train.threads = threads;
  config.refinement.train.threads = threads;

  const DatasetManifest manifest = load_manifest(a.train);
  const auto data = load_examples(manifest, config.input_shape.channels, threads);
  std::vector<LoadedExample> heldout;
  if (!a.heldout.empty()) {
    const DatasetManifest h = load_manifest(a.heldout);
    check_tree(manifest.tree, h.tree, "held-out manifest");
    heldout = load_examples(h, config.input_shape.channels, threads);
  }

  fs::create_directories(a.out);
  {
    auto os = open_out(a.out / "config.txt");
    write_config(os, config);
  }
  auto report = open_out(a.out / "train_report.tsv");
  report << "stage\tfinal_train_loss\theldout_examples\theldout_mean_pdj@0.2\n";
  report.flush();

  double last_loss = 0.0;
  auto on_progress = [&](std::size_t stage, int epoch, double loss) {
    last_loss = loss;
    out << "stage " << stage + 1 << " epoch " << epoch + 1 << " loss "
        << fixed(loss, 6) << "\n";
    out.flush();
  };
  auto on_stage = [&](const CascadeModel& model, std::size_t stage) {
    char name[32];
    std::snprintf(name, sizeof(name), "model_stage%zu.pcm", stage + 1);
    save_model(a.out / name, model);
    std::string pdj_text = "-";
    if (!heldout.empty()) {
      const auto preds = predict_all(model, heldout, threads);
      const double mean = pdj(preds.back(), truths_of(heldout), model.tree, 0.2).average();
      pdj_text = fixed(mean, 4);
    }
    report << stage + 1 << '\t' << fixed(last_loss, 6) << '\t' << heldout.size()
           << '\t' << pdj_text << '\n';
    report.flush();
    out << "stage " << stage + 1 << " done: checkpoint " << name
        << ", held-out mean PDJ@0.2 " << pdj_text << "\n";
  };
  const CascadeModel model =
      train_cascade(data, manifest.tree, config, on_stage, on_progress);
  save_model(a.out / "model.pcm", model);
  out << "wrote " << (a.out / "model.pcm").string() << "\n";
  return kExitOk;
}

int cmd_eval(const EvalArgs& a, int threads, std::ostream& out) {
  for (double f : a.fractions) {
    if (!(f >= 0.0)) throw InvalidArgument("fractions must be non-negative");
  }
  const CascadeModel model = load_model(a.model);
  const DatasetManifest manifest = load_manifest(a.manifest);
  check_tree(model.tree, manifest.tree, "manifest");
  const auto data = load_examples(manifest, model.input_shape.channels, threads);
  std::size_t truncated = 0;
  const auto preds = predict_all(model, data, threads, &truncated);
  const EvalReport report =
      make_report(preds, truths_of(data), model.tree, a.fractions, a.pcp_threshold);

  fs::create_directories(a.out);
  {
    auto os = open_out(a.out / "eval.tsv");
    report.write_table(os);
  }
  {
    auto os = open_out(a.out / "eval.json");
    report.write_json(os);
  }
  out << "examples " << data.size() << ", truncated cascades " << truncated << "\n";
  out << "stage\tpcp\tpcp_loose";
  for (double f : a.fractions) out << "\tpdj@" << fixed(f, 2);
  out << "\n";
  for (std::size_t s = 0; s < report.stages.size(); ++s) {
    const StageReport& st = report.stages[s];
    out << s + 1 << '\t' << fixed(st.pcp.average(), 4) << '\t'
        << fixed(st.pcp_loose.average(), 4);
    for (const auto& r : st.pdj) out << '\t' << fixed(r.average(), 4);
    out << "\n";
  }
  return kExitOk;
}

BoundingBox parse_box(const std::string& text) {
  double v[4];
  std::size_t pos = 0;
  for (int i = 0; i < 4; ++i) {
    const std::size_t comma = i < 3 ? text.find(',', pos) : text.size();
    if (comma == std::string::npos) break;
    const char* first = text.data() + pos;
    const char* last = text.data() + comma;
    const auto [ptr, ec] = std::from_chars(first, last, v[i]);
    if (ec != std::errc() || ptr != last) break;
    pos = comma + 1;
    if (i == 3) {
      BoundingBox b{{v[0], v[1]}, v[2], v[3]};
      b.validate();
      return b;
    }
  }
  throw InvalidArgument("--box expects cx,cy,w,h, got '" + text + "'");
}

void write_svg(const fs::path& path, const Image& image, const PoseVector& pose,
               const PoseTree& tree) {
  static const char* kPalette[] = {"#e6194b", "#3cb44b", "#4363d8", "#f58231",
                                   "#911eb4", "#42d4f4", "#f032e6", "#bfef45",
                                   "#469990", "#9a6324", "#800000", "#000075"};
  auto os = open_out(path);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << image.width()
     << "\" height=\"" << image.height() << "\" viewBox=\"0 0 " << image.width()
     << ' ' << image.height() << "\">\n";
  for (std::size_t l = 0; l < tree.limbs.size(); ++l) {
    const Point p = pose[tree.limbs[l].first];
    const Point q = pose[tree.limbs[l].second];
    os << "  <line x1=\"" << fixed(p.x, 2) << "\" y1=\"" << fixed(p.y, 2)
       << "\" x2=\"" << fixed(q.x, 2) << "\" y2=\"" << fixed(q.y, 2)
       << "\" stroke=\"" << kPalette[l % std::size(kPalette)]
       << "\" stroke-width=\"2\"/>\n";
  }
  os << "</svg>\n";
}

int cmd_predict(const PredictArgs& a, std::ostream& out, std::ostream& err) {
  const CascadeModel model = load_model(a.model);
  const Image raw = load_image(a.image);
  const Image image = model.input_shape.channels == 1 && raw.channels() != 1
                          ? to_grayscale(raw)
                          : raw;
  const BoundingBox b0 = a.box.empty()
                             ? BoundingBox::full_image(image.width(), image.height())
                             : parse_box(a.box);
  const auto start = std::chrono::steady_clock::now();
  const CascadePrediction p = predict(model, image, b0, a.stages);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  for (std::size_t s = 0; s < p.poses.size(); ++s) {
    for (std::size_t j = 0; j < model.tree.k; ++j) {
      const std::string name =
          j < model.tree.names.size() ? model.tree.names[j] : std::to_string(j);
      out << s + 1 << '\t' << j << '\t' << name << '\t' << fixed(p.poses[s][j].x, 3)
          << '\t' << fixed(p.poses[s][j].y, 3) << '\n';
    }
  }
  if (p.truncated) {
    err << "warning: degenerate torso diameter, cascade stopped after stage "
        << p.poses.size() << "\n";
  }
  err << "wall-clock " << fixed(seconds * 1000.0, 2) << " ms for 1 image\n";
  if (!a.render.empty() && !p.poses.empty()) {
    write_svg(a.render, image, p.poses.back(), model.tree);
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Cascaded coordinate-regression pose estimation"};
  app.require_subcommand(1);
  app.fallthrough();
  int threads = 1;
  app.add_option("--threads", threads, "Worker threads; 1 is deterministic")
      ->check(CLI::PositiveNumber);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a stick-figure dataset");
  synth_cmd->add_option("--out", synth.out, "Output directory")->required();
  synth_cmd->add_option("--count", synth.count, "Number of examples");
  synth_cmd->add_option("--seed", synth.seed, "Dataset seed");
  synth_cmd->add_option("--size", synth.size, "Image side in pixels");
  synth_cmd->add_option("--offset", synth.offset,
                        "Index of the first example (disjoint splits)");

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train a cascade");
  train_cmd->add_option("--train", train.train, "Training manifest")->required();
  train_cmd->add_option("--heldout", train.heldout, "Held-out manifest");
  train_cmd->add_option("--config", train.config, "key=value hyperparameter file");
  train_cmd->add_option("--set", train.set, "Override one config key (key=value)");
  train_cmd->add_option("--out", train.out, "Output directory")->required();
  train_cmd->add_option("--stages", train.stages, "Number of stages S");
  train_cmd->add_option("--seed", train.seed, "Seed for both stage kinds");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a model on a manifest");
  eval_cmd->add_option("--model", eval.model, "Model file")->required();
  eval_cmd->add_option("--manifest", eval.manifest, "Test manifest")->required();
  eval_cmd->add_option("--out", eval.out, "Output directory")->required();
  eval_cmd->add_option("--fractions", eval.fractions, "PDJ fractions")
      ->delimiter(',');
  eval_cmd->add_option("--pcp-threshold", eval.pcp_threshold, "PCP threshold");

  PredictArgs pred;
  auto* predict_cmd = app.add_subcommand("predict", "Predict the pose in one image");
  predict_cmd->add_option("--model", pred.model, "Model file")->required();
  predict_cmd->add_option("--image", pred.image, "PGM/PPM image")->required();
  predict_cmd->add_option("--box", pred.box, "Initial box cx,cy,w,h");
  predict_cmd->add_option("--render", pred.render, "Write an SVG overlay");
  predict_cmd->add_option("--stages", pred.stages, "Run at most this many stages");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    set_math_threads(threads);
    if (*synth_cmd) return cmd_synth(synth, threads, out);
    if (*train_cmd) return cmd_train(train, threads, out);
    if (*eval_cmd) return cmd_eval(eval, threads, out);
    return cmd_predict(pred, out, err);
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const ShapeError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace posecascade::cli
