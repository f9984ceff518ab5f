#pragma once

#include <cstdint>

#include "place3d/model.hpp"

namespace place3d {

/// Parameters of a generated mixed-size design.
struct SyntheticSpec {
  int cells = 1000;
  int macros = 2;
  double macro_area_ratio = 0.3;  // bottom-die macro area over die area
  std::uint64_t seed = 1;
  double top_row_height = 33.0;
  double bottom_row_height = 48.0;
  double max_util = 0.8;
  double hbt_size = 6.0;
  double hbt_spacing = 3.0;
  double hbt_cost = 10.0;
  double nets_per_cell = 1.1;
  double rent_exponent = 0.6;
  int macro_pins = 16;
  int cell_kinds = 24;
};

/// Reproducible design with hierarchical nets obeying Rent's rule. Throws InfeasibleError when
/// the macros and cells cannot fit within the utilization limits.
Design generate_synthetic(const SyntheticSpec& spec);

}  // namespace place3d
