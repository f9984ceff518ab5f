#pragma once

#include <string>
#include <vector>

#include "place3d/model.hpp"

namespace place3d {

struct CheckReport {
  bool pass = true;
  std::vector<std::string> violations;
  Score score;
};

/// Independent legality check of a solution: instances inside the die and
/// non-overlapping per die, cells on rows and sites and unrotated, die
/// utilization, one HBT per crossing net and none elsewhere, HBT spacing and
/// containment. The score is recomputed when the HBT set is consistent.
CheckReport check_solution(const Design& design, const Solution& sol);

}  // namespace place3d
