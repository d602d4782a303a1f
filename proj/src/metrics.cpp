#include "posecascade/metrics.hpp"

#include <cstdio>
#include <iomanip>
#include <ostream>

#include <json.hpp>

#include "posecascade/errors.hpp"

namespace posecascade {
namespace {

void check_inputs(const std::vector<PoseVector>& preds,
                  const std::vector<PoseVector>& truths, const PoseTree& tree) {
  if (preds.size() != truths.size()) {
    throw InvalidArgument("metrics: " + std::to_string(preds.size()) +
                          " predictions for " + std::to_string(truths.size()) +
                          " ground-truth poses");
  }
  for (std::size_t e = 0; e < preds.size(); ++e) {
    if (preds[e].size() != tree.k || truths[e].size() != tree.k) {
      throw ShapeError("metrics: example " + std::to_string(e) + " does not have " +
                       std::to_string(tree.k) + " joints");
    }
  }
}

template <typename Detect>
PcpResult count_limbs(const std::vector<PoseVector>& preds,
                      const std::vector<PoseVector>& truths, const PoseTree& tree,
                      double threshold, Detect detect) {
  check_inputs(preds, truths, tree);
  PcpResult r;
  r.threshold = threshold;
  r.limbs.resize(tree.limbs.size());
  for (std::size_t e = 0; e < preds.size(); ++e) {
    const PoseVector& gt = truths[e];
    for (std::size_t l = 0; l < tree.limbs.size(); ++l) {
      const auto [a, b] = tree.limbs[l];
      if (!gt.present(a) || !gt.present(b)) {
        ++r.missing_excluded;
        continue;
      }
      const double length = distance(gt[a], gt[b]);
      if (!(length > 0.0)) {
        ++r.zero_length_excluded;
        continue;
      }
      ++r.limbs[l].total;
      const double ea = distance(preds[e][a], gt[a]);
      const double eb = distance(preds[e][b], gt[b]);
      if (detect(ea, eb, threshold * length)) ++r.limbs[l].detected;
    }
  }
  return r;
}

template <typename T>
double mean_rate(const std::vector<T>& counts) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& c : counts) {
    if (c.total == 0) continue;
    sum += c.rate();
    ++n;
  }
  return n == 0 ? 0.0 : sum / n;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

}  // namespace

double PcpResult::average() const { return mean_rate(limbs); }
double PdjResult::average() const { return mean_rate(joints); }

PcpResult pcp(const std::vector<PoseVector>& preds,
              const std::vector<PoseVector>& truths, const PoseTree& tree,
              double threshold) {
  return count_limbs(preds, truths, tree, threshold,
                     [](double ea, double eb, double limit) {
                       return ea <= limit && eb <= limit;
                     });
}

PcpResult pcp_loose(const std::vector<PoseVector>& preds,
                    const std::vector<PoseVector>& truths, const PoseTree& tree,
                    double threshold) {
  // ea + eb <= 2 * limit avoids rounding in the halving.
  return count_limbs(preds, truths, tree, threshold,
                     [](double ea, double eb, double limit) {
                       return ea + eb <= 2.0 * limit;
                     });
}

PdjResult pdj(const std::vector<PoseVector>& preds,
              const std::vector<PoseVector>& truths, const PoseTree& tree,
              double fraction) {
  return pdj_curve(preds, truths, tree, {fraction}).front();
}

std::vector<PdjResult> pdj_curve(const std::vector<PoseVector>& preds,
                                 const std::vector<PoseVector>& truths,
                                 const PoseTree& tree,
                                 const std::vector<double>& fractions) {
  check_inputs(preds, truths, tree);
  std::vector<PdjResult> out(fractions.size());
  for (std::size_t f = 0; f < fractions.size(); ++f) {
    out[f].fraction = fractions[f];
    out[f].joints.resize(tree.k);
  }
  for (std::size_t e = 0; e < preds.size(); ++e) {
    const PoseVector& gt = truths[e];
    double diam = 0.0;
    try {
      diam = pose_diameter(gt, tree);
    } catch (const MissingTorsoError&) {
    }
    if (!(diam > 0.0)) {
      for (auto& r : out) ++r.zero_diameter_excluded;
      continue;
    }
    for (std::size_t j = 0; j < tree.k; ++j) {
      if (!gt.present(j)) continue;
      const double err = distance(preds[e][j], gt[j]);
      for (std::size_t f = 0; f < fractions.size(); ++f) {
        ++out[f].joints[j].total;
        if (err <= fractions[f] * diam) ++out[f].joints[j].detected;
      }
    }
  }
  return out;
}

EvalReport make_report(const std::vector<std::vector<PoseVector>>& preds_per_stage,
                       const std::vector<PoseVector>& truths,
                       const PoseTree& tree, const std::vector<double>& fractions,
                       double pcp_threshold) {
  EvalReport report;
  report.examples = truths.size();
  for (const auto& [a, b] : tree.limbs) {
    auto name = [&](std::size_t j) {
      return j < tree.names.size() ? tree.names[j] : std::to_string(j);
    };
    report.limb_names.push_back(name(a) + "-" + name(b));
  }
  for (std::size_t j = 0; j < tree.k; ++j) {
    report.joint_names.push_back(j < tree.names.size() ? tree.names[j]
                                                       : std::to_string(j));
  }
  for (const auto& preds : preds_per_stage) {
    report.stages.push_back({pcp(preds, truths, tree, pcp_threshold),
                             pcp_loose(preds, truths, tree, pcp_threshold),
                             pdj_curve(preds, truths, tree, fractions)});
  }
  return report;
}

void EvalReport::write_table(std::ostream& os) const {
  os << "# examples " << examples << "\n";
  os << "metric\tstage\titem\tthreshold\tdetected\ttotal\trate\n";
  for (std::size_t s = 0; s < stages.size(); ++s) {
    const StageReport& st = stages[s];
    auto limb_rows = [&](const char* metric, const PcpResult& r) {
      for (std::size_t l = 0; l < r.limbs.size(); ++l) {
        os << metric << '\t' << s + 1 << '\t' << limb_names[l] << '\t'
           << format_double(r.threshold) << '\t' << r.limbs[l].detected << '\t'
           << r.limbs[l].total << '\t' << format_double(r.limbs[l].rate()) << '\n';
      }
      os << metric << '\t' << s + 1 << "\tmean\t" << format_double(r.threshold)
         << "\t-\t-\t" << format_double(r.average()) << '\n';
    };
    limb_rows("pcp", st.pcp);
    limb_rows("pcp_loose", st.pcp_loose);
    for (const auto& r : st.pdj) {
      for (std::size_t j = 0; j < r.joints.size(); ++j) {
        os << "pdj\t" << s + 1 << '\t' << joint_names[j] << '\t'
           << format_double(r.fraction) << '\t' << r.joints[j].detected << '\t'
           << r.joints[j].total << '\t' << format_double(r.joints[j].rate()) << '\n';
      }
      os << "pdj\t" << s + 1 << "\tmean\t" << format_double(r.fraction)
         << "\t-\t-\t" << format_double(r.average()) << '\n';
    }
  }
}

void EvalReport::write_json(std::ostream& os) const {
  using nlohmann::json;
  auto counts = [](const std::vector<RateCount>& v) {
    json a = json::array();
    for (const auto& c : v) {
      a.push_back({{"detected", c.detected}, {"total", c.total}, {"rate", c.rate()}});
    }
    return a;
  };
  auto limbs = [&](const PcpResult& r) {
    return json{{"threshold", r.threshold},
                {"limbs", counts(r.limbs)},
                {"average", r.average()},
                {"missing_excluded", r.missing_excluded},
                {"zero_length_excluded", r.zero_length_excluded}};
  };
  json doc;
  doc["examples"] = examples;
  doc["limb_names"] = limb_names;
  doc["joint_names"] = joint_names;
  doc["stages"] = json::array();
  for (const auto& st : stages) {
    json pdj_rows = json::array();
    for (const auto& r : st.pdj) {
      pdj_rows.push_back({{"fraction", r.fraction},
                          {"joints", counts(r.joints)},
                          {"average", r.average()},
                          {"zero_diameter_excluded", r.zero_diameter_excluded}});
    }
    doc["stages"].push_back(
        {{"pcp", limbs(st.pcp)}, {"pcp_loose", limbs(st.pcp_loose)}, {"pdj", pdj_rows}});
  }
  os << std::setw(2) << doc << '\n';
}

}  // namespace posecascade
