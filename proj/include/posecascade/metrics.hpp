#pragma once

// Localization metrics: PCP (strict and loose) per limb and PDJ per joint.
// All threshold comparisons are inclusive.

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "posecascade/geometry.hpp"

namespace posecascade {

struct RateCount {
  std::size_t detected = 0;
  std::size_t total = 0;

  // 0 when total is 0.
  double rate() const {
    return total == 0 ? 0.0 : static_cast<double>(detected) / total;
  }
  friend bool operator==(const RateCount&, const RateCount&) = default;
};

struct PcpResult {
  double threshold = 0.5;
  // One entry per tree limb, in tree order.
  std::vector<RateCount> limbs;
  // (example, limb) pairs left out of a denominator.
  std::size_t missing_excluded = 0;
  std::size_t zero_length_excluded = 0;

  // Mean rate over limbs with a non-empty denominator.
  double average() const;
};

struct PdjResult {
  double fraction = 0.0;
  std::vector<RateCount> joints;
  // Examples without a positive ground-truth torso diameter.
  std::size_t zero_diameter_excluded = 0;

  double average() const;
};

// Throws InvalidArgument if the sequences differ in length and ShapeError if
// a pose does not have tree.k joints. Prediction masks are ignored.
PcpResult pcp(const std::vector<PoseVector>& preds,
              const std::vector<PoseVector>& truths, const PoseTree& tree,
              double threshold = 0.5);

// A limb counts when the mean of its two endpoint errors is within t * L.
PcpResult pcp_loose(const std::vector<PoseVector>& preds,
                    const std::vector<PoseVector>& truths, const PoseTree& tree,
                    double threshold = 0.5);

PdjResult pdj(const std::vector<PoseVector>& preds,
              const std::vector<PoseVector>& truths, const PoseTree& tree,
              double fraction);

// One PdjResult per fraction, in the given order.
std::vector<PdjResult> pdj_curve(const std::vector<PoseVector>& preds,
                                 const std::vector<PoseVector>& truths,
                                 const PoseTree& tree,
                                 const std::vector<double>& fractions);

struct StageReport {
  PcpResult pcp;
  PcpResult pcp_loose;
  std::vector<PdjResult> pdj;
};

struct EvalReport {
  std::vector<std::string> limb_names;
  std::vector<std::string> joint_names;
  std::size_t examples = 0;
  std::vector<StageReport> stages;

  // One row per (stage, limb) and per (stage, joint, fraction).
  void write_table(std::ostream& os) const;
  void write_json(std::ostream& os) const;
};

// Runs the metrics on one pose sequence per stage.
EvalReport make_report(const std::vector<std::vector<PoseVector>>& preds_per_stage,
                       const std::vector<PoseVector>& truths,
                       const PoseTree& tree, const std::vector<double>& fractions,
                       double pcp_threshold = 0.5);

}  // namespace posecascade
