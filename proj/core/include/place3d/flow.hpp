#pragma once

#include <string>
#include <vector>

#include "place3d/gp.hpp"
#include "place3d/model.hpp"

namespace place3d {

enum class FlowChoice { Auto, Force3d, Force2d };

struct FlowConfig {
  GpConfig gp;
  bool skip_rotation = false;
  FlowChoice flow = FlowChoice::Auto;
  int dp_passes = 2;
  std::string iteration_csv;  // empty disables the iteration log
};

struct StageTime {
  std::string name;
  double seconds = 0.0;
};

struct FlowReport {
  double hpwl = 0.0;
  long long hbt_count = 0;
  double raw_score = 0.0;
  double overflow = 0.0;
  double macro_overflow = 0.0;
  FlowPath path = FlowPath::Gp3d;
  bool rotation_skipped = false;
  // Continuous-placement score around the rotation stage, HBTs held at their
  // optimal-region centers before rotation.
  double rotation_score_before = 0.0;
  double rotation_score_after = 0.0;
  bool rotation_optimal = true;
  double legal_score = 0.0;  // right after legalization, before refinement
  int gp_iterations = 0;
  bool diverged = false;
  bool check_pass = false;
  std::vector<std::string> violations;
  std::vector<StageTime> stages;
  std::vector<IterRecord> history;
};

struct FlowResult {
  Solution solution;
  FlowReport report;
};

/// Global placement, macro rotation, second global placement (3D or
/// multi-die 2D), legalization, detailed placement and final checking.
/// Stage failures are rethrown with the stage name prefixed.
FlowResult run_flow(const Design& design, const FlowConfig& config);

/// Continuous state scored as if legal: lower-left corners are unrounded and
/// HBTs sit at the given positions.
Score continuous_score(const Design& design, const PlacementState& state, const std::vector<HbtPlacement>& hbts);

std::string report_json(const FlowReport& report);

}  // namespace place3d
