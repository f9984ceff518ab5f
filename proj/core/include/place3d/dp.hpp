#pragma once

#include "place3d/model.hpp"

namespace place3d {

/// Exhaustive reordering of every window of `k` consecutive cells in a row,
/// left-packed from the window start. Only strict score decreases are kept.
/// Returns the number of accepted windows.
int local_reorder(const Design& design, Solution& sol, Die die, int k = 3);

/// Swaps equal-size cells and moves cells into row gaps near the optimal
/// region of each cell. Only strict score decreases are kept. Returns the
/// number of accepted moves.
int global_swap(const Design& design, Solution& sol, Die die);

/// Alternates global swaps and local reordering on both dies.
void detailed_place(const Design& design, Solution& sol, int passes = 2);

/// Recenters every HBT on its net's optimal region and re-legalizes the HBT
/// grid. The new HBTs are kept only if the score does not get worse; a final
/// detailed-placement pass follows.
void refine_with_hbt_remap(const Design& design, Solution& sol);

}  // namespace place3d
